"""
Domain errors raised by the graphlap services.

Every error carries a machine-readable ``code`` (written to report.json) and the
process ``exit_code`` the batch front end maps it to: 2 for rejected input,
3 for numerical failures.
"""
from typing import Optional


class GraphlapError(ValueError):
    exit_code = 3

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        self.code = code or type(self).__name__

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self)}


class InputError(GraphlapError):
    exit_code = 2


class NumericalError(GraphlapError):
    exit_code = 3


# graph-core
class SelfLoop(InputError): pass
class NonPositiveWeight(InputError): pass
class DuplicateEdge(InputError): pass
class UnknownVertex(InputError): pass
class BadParameter(InputError): pass
class NegativeFunction(InputError): pass
class OverlappingCircles(InputError): pass
class DegenerateMeasure(InputError): pass
class InvalidExhaustion(InputError): pass

# bundle
class AsymmetricTheta(InputError): pass
class NonHermitian(InputError): pass
class DimensionMismatch(InputError): pass

# operator-engine
class ValidationFailure(InputError): pass
class AlignmentViolated(InputError): pass
class NotSubsolution(InputError): pass
class NegativeWeight(InputError): pass

# metric-engine
class SigmaEdgeMismatch(InputError): pass
class IsolatedEndpoint(InputError): pass
class MissingCoordinate(InputError): pass
class NegativeDistance(InputError): pass
class NonPositiveD(InputError): pass
class NotInjective(InputError): pass
class InvalidMetric(InputError): pass

# form-lab
class EmptySubset(InputError): pass
class NegativeH(InputError): pass
class NotExcessive(InputError): pass
class InvalidPath(InputError): pass
class ZeroDegree(InputError): pass
class NegativeF(InputError): pass
class SupportViolation(InputError): pass

# cli
class UnknownExample(InputError): pass
class UnknownAnalysis(InputError): pass
class MissingInput(InputError): pass

# numerical failures
class ConvergenceFailure(NumericalError): pass
class SolveFailure(NumericalError): pass
class AlphaTooSmall(NumericalError): pass
class IdentityViolation(NumericalError): pass
