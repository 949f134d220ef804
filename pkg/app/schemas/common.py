"""
Shared schema helpers
"""
from pydantic import BaseModel, ConfigDict


def to_camel(string: str) -> str:
    """Convert snake_case to camelCase"""
    components = string.split('_')
    return components[0] + ''.join(x.title() for x in components[1:])


class CamelModel(BaseModel):
    """
    Base model for request/response bodies

    - alias_generator: snake_case fields serialised as camelCase
    - populate_by_name: accepts both spellings on input
    """
    model_config = ConfigDict(
        alias_generator=to_camel,
        populate_by_name=True
    )
