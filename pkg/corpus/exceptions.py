class CorpusError(Exception):
    """Base class for dataset pipeline errors."""


class GeneratorUnavailable(CorpusError):
    """The text generator cannot answer (service down, no scripted entry, retries exhausted)."""
