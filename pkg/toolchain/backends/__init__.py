from ..stages import EXTERNAL, MOCK
from .base import Backend, StageOutcome
from .external import ExternalBackend
from .mock import MockBackend


def get_backend(name, settings):
    if name == MOCK:
        return MockBackend(settings.cost_model)
    if name == EXTERNAL:
        return ExternalBackend(settings)
    raise ValueError(f"unknown backend '{name}'")


__all__ = ['Backend', 'ExternalBackend', 'MockBackend', 'StageOutcome', 'get_backend']
