from pydantic import BaseModel, ConfigDict


class GraphlapModel(BaseModel):
    """Immutable base for all domain values; numpy arrays are allowed as fields"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
