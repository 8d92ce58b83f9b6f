from dataclasses import dataclass
from typing import Optional

from ..verilog_mini import PpaMetrics


@dataclass(frozen=True)
class StageOutcome:
    ok: bool
    diagnostics: str = ''
    ppa: Optional[PpaMetrics] = None


class Backend:
    """
    One way of running the three stages. Every call gets its own Workspace;
    backends hold configuration only, never per-evaluation state.
    """

    name = None
    # Backends whose stages cannot be interrupted get their timeout checked after the fact.
    enforces_timeouts = False

    def compile(self, code, workspace, timeout):
        raise NotImplementedError

    def simulate(self, code, testbench, workspace, timeout):
        raise NotImplementedError

    def synthesize(self, code, workspace, timeout, measure_ppa=True):
        raise NotImplementedError
