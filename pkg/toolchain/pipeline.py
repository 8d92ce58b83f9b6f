"""
Staged evaluation: compile, then testbench, then synthesis and PPA.

Each stage runs in its own scratch workspace and the first failure ends the
run. Stage failures (timeouts included) land in the report; only a missing
external tool escapes as ToolUnavailable.
"""

import logging
import time

from .backends import StageOutcome, get_backend
from .config import ToolchainSettings
from .exceptions import StageTimeout
from .sandbox import workspace
from .stages import STAGE_NAMES, EvalRequest, ToolchainReport, stage_for

logger = logging.getLogger(__name__)

NO_TESTBENCH = "no testbench supplied"


class Toolchain:

    def __init__(self, settings=None):
        self.settings = settings or ToolchainSettings()

    def backend(self, name=None):
        return get_backend(name or self.settings.backend, self.settings)

    def _run(self, backend, stage, limit, action):
        """Run one stage in a fresh workspace; returns (outcome, seconds, workspace id)."""
        with workspace(stage, self.settings.scratch_dir) as ws:
            start = time.perf_counter()
            try:
                outcome = action(ws)
            except StageTimeout as exc:
                outcome = StageOutcome(False, str(exc))
            elapsed = time.perf_counter() - start
        if not backend.enforces_timeouts and elapsed > limit:
            outcome = StageOutcome(False, str(StageTimeout(stage, limit)))
        if not outcome.ok:
            first = outcome.diagnostics.splitlines()[0] if outcome.diagnostics else ''
            logger.info(f"[{backend.name}] {stage} failed in workspace {ws.id[:8]}: {first}")
        return outcome, elapsed, ws.id

    def check_compile(self, code, backend=None):
        backend = self.backend(backend)
        limit = self.settings.timeouts.compile
        outcome, _, _ = self._run(backend, 'compile', limit, lambda ws: backend.compile(code, ws, limit))
        return outcome.ok, outcome.diagnostics

    def run_testbench(self, code, testbench, backend=None):
        if testbench is None:
            return False, NO_TESTBENCH
        backend = self.backend(backend)
        limit = self.settings.timeouts.simulate
        outcome, _, _ = self._run(
            backend, 'simulate', limit, lambda ws: backend.simulate(code, testbench, ws, limit)
        )
        return outcome.ok, outcome.diagnostics

    def synthesize_and_ppa(self, code, backend=None, measure_ppa=True):
        backend = self.backend(backend)
        limit = self.settings.timeouts.synthesis
        outcome, _, _ = self._run(
            backend, 'synthesis', limit, lambda ws: backend.synthesize(code, ws, limit, measure_ppa)
        )
        return outcome.ok, outcome.ppa, outcome.diagnostics

    def evaluate(self, request):
        backend = self.backend(request.backend)
        limits = request.stage_timeouts
        timings = dict.fromkeys(STAGE_NAMES, 0.0)
        diagnostics = {}
        workspaces = []
        flags = {'compile_ok': False, 'func_ok': False, 'syn_ok': False}
        ppa = None

        def stage(name, limit, action):
            outcome, elapsed, ws_id = self._run(backend, name, limit, action)
            timings[name] = elapsed
            diagnostics[name] = outcome.diagnostics
            workspaces.append(ws_id)
            return outcome

        code = request.code
        if stage('compile', limits.compile, lambda ws: backend.compile(code, ws, limits.compile)).ok:
            flags['compile_ok'] = True
            if request.testbench is None:
                diagnostics['simulate'] = NO_TESTBENCH
            elif stage(
                'simulate', limits.simulate,
                lambda ws: backend.simulate(code, request.testbench, ws, limits.simulate),
            ).ok:
                flags['func_ok'] = True
                synthesized = stage(
                    'synthesis', limits.synthesis,
                    lambda ws: backend.synthesize(code, ws, limits.synthesis, request.measure_ppa),
                )
                if synthesized.ok and (synthesized.ppa is not None or not request.measure_ppa):
                    flags['syn_ok'] = True
                    ppa = synthesized.ppa

        report = ToolchainReport(
            ppa=ppa,
            stage_reached=stage_for(ppa=ppa, **flags),
            diagnostics=diagnostics,
            timings=timings,
            workspaces=tuple(workspaces),
            **flags,
        )
        logger.debug(f"[{backend.name}] evaluation reached {report.stage_reached.value}")
        return report


def get_toolchain():
    """Toolchain configured from the project settings."""
    from chipforge.conf import get_app_settings
    return Toolchain(get_app_settings().toolchain)


def check_compile(code, backend=None):
    return get_toolchain().check_compile(code, backend)


def run_testbench(code, testbench, backend=None):
    return get_toolchain().run_testbench(code, testbench, backend)


def synthesize_and_ppa(code, backend=None, measure_ppa=True):
    return get_toolchain().synthesize_and_ppa(code, backend, measure_ppa)


def evaluate(request: EvalRequest):
    return get_toolchain().evaluate(request)
