# routers/__init__.py
"""
Analysis routers for the graphlap batch front end
"""

from .criteria import router as criteria_router
from .examples import router as examples_router
from .identities import router as identities_router
from .markov import router as markov_router
from .structure import router as structure_router

__all__ = ["criteria_router", "examples_router", "identities_router", "markov_router", "structure_router"]
