from .annotate import annotate_ppa
from .cold_start import generate_cold_start
from .ingest import ingest_corpus
from .pairing import pair_testbenches
from .results import StageResult

__all__ = ['StageResult', 'annotate_ppa', 'generate_cold_start', 'ingest_corpus', 'pair_testbenches']
