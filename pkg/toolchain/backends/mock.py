"""In-process backend built on the mini-Verilog engine."""

import logging

from ..exceptions import ElaborationError, PortMismatch, VectorTableError, VerilogSyntaxError
from ..stages import MOCK, VERILOG_SOURCE
from ..verilog_mini import CostModel, elaborate, estimate_ppa, parse_mini, simulate_vectors
from .base import Backend, StageOutcome

logger = logging.getLogger(__name__)


class MockBackend(Backend):
    name = MOCK

    def __init__(self, cost_model=None):
        self.cost_model = cost_model or CostModel()

    def _persist(self, code, workspace):
        if workspace is not None:
            workspace.write('design.v', code)

    def compile(self, code, workspace, timeout):
        self._persist(code, workspace)
        try:
            module = parse_mini(code)
        except VerilogSyntaxError as exc:
            return StageOutcome(False, f"syntax error: {exc}")
        return StageOutcome(True, f"module {module.name}: {len(module.ports)} ports, {len(module.assigns)} assigns")

    def simulate(self, code, testbench, workspace, timeout):
        self._persist(code, workspace)
        if testbench.kind == VERILOG_SOURCE:
            return StageOutcome(False, "the mock backend runs vector tables only; use the external backend for Verilog testbenches")
        try:
            module = parse_mini(code)
            result = simulate_vectors(module, testbench.table)
        except (VerilogSyntaxError, ElaborationError, PortMismatch, VectorTableError) as exc:
            return StageOutcome(False, str(exc))
        return StageOutcome(result.passed, result.describe())

    def synthesize(self, code, workspace, timeout, measure_ppa=True):
        self._persist(code, workspace)
        try:
            netlist = elaborate(parse_mini(code))
        except (VerilogSyntaxError, ElaborationError) as exc:
            return StageOutcome(False, f"synthesis failed: {exc}")
        counts = ', '.join(f"{kind}={count}" for kind, count in sorted(netlist.gate_counts().items()))
        summary = f"{len(netlist.gates)} gates ({counts or 'none'})"
        if not measure_ppa:
            return StageOutcome(True, summary)
        ppa = estimate_ppa(netlist, self.cost_model)
        return StageOutcome(
            True,
            f"{summary}; delay_ns={ppa.delay:g} area_um2={ppa.area:g} power_w={ppa.power:g}",
            ppa,
        )
