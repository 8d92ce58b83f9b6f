from dataclasses import dataclass, field
from typing import List

from ..records import TIMEOUT, Rejection


@dataclass
class StageResult:
    records: List = field(default_factory=list)
    rejections: List[Rejection] = field(default_factory=list)
    aborted: bool = False


def failure_reason(diagnostics, default):
    """Timeouts keep their own reason code; everything else gets the stage default."""
    return TIMEOUT if diagnostics.startswith('TIMEOUT') else default
