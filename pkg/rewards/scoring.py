"""
Hierarchical reward.

Five binary-or-ratio components, each gated on the one below it:
format -> compile -> function -> synthesis -> PPA. In prose_strict mode the
format component gates compilation as well; equation_only leaves format as an
independent bonus.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

from toolchain.stages import EvalRequest, ToolchainReport

from .exceptions import NonPositiveMetric
from .response_format import FormatOptions, parse_response

logger = logging.getLogger(__name__)


class GatingMode(str, Enum):
    PROSE_STRICT = 'prose_strict'
    EQUATION_ONLY = 'equation_only'


@dataclass(frozen=True)
class RewardWeights:
    w_format: float = 0.1
    w_comp: float = 0.2
    w_func: float = 1.0
    w_syn: float = 0.1
    w_ppa: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"reward weight {name} must be >= 0, got {value}")


@dataclass(frozen=True)
class RewardSettings:
    weights: RewardWeights = field(default_factory=RewardWeights)
    gating_mode: GatingMode = GatingMode.PROSE_STRICT
    ppa_cap: Optional[float] = None
    format_options: FormatOptions = field(default_factory=FormatOptions)

    def __post_init__(self):
        try:
            GatingMode(self.gating_mode)
        except ValueError:
            modes = ', '.join(m.value for m in GatingMode)
            raise ValueError(f"gating mode must be one of {modes}, got '{self.gating_mode}'") from None
        if self.ppa_cap is not None and self.ppa_cap <= 0:
            raise ValueError("ppa cap must be positive when set")


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: int
    r_comp: int
    r_func: int
    r_syn: int
    r_ppa: float
    total: float
    gating_mode: GatingMode

    def as_record(self):
        record = asdict(self)
        record['gating_mode'] = GatingMode(self.gating_mode).value
        return record


def ppa_score(metrics):
    if not metrics.is_positive():
        raise NonPositiveMetric(metrics)
    return 1.0 / (metrics.power * metrics.area * metrics.delay)


def ppa_reward(gen, ref, cap=None):
    """Score ratio gen/ref; 0 without a usable reference."""
    if ref is None or not ref.is_positive():
        return 0.0
    reference = ppa_score(ref)
    if reference == 0 or not math.isfinite(reference):
        return 0.0
    reward = ppa_score(gen) / reference
    return min(reward, cap) if cap is not None else reward


def hierarchical_reward(format_ok, report, ref=None, weights=None, mode=GatingMode.PROSE_STRICT, ppa_cap=None):
    weights = weights or RewardWeights()
    mode = GatingMode(mode)
    r_format = int(bool(format_ok))
    r_comp = int(report.compile_ok)
    if mode is GatingMode.PROSE_STRICT and not r_format:
        r_comp = 0
    r_func = int(r_comp and report.func_ok)
    r_syn = int(r_func and report.syn_ok)
    r_ppa = ppa_reward(report.ppa, ref, ppa_cap) if r_syn and report.ppa is not None else 0.0
    total = math.fsum((
        weights.w_format * r_format,
        weights.w_comp * r_comp,
        weights.w_func * r_func,
        weights.w_syn * r_syn,
        weights.w_ppa * r_ppa,
    ))
    return RewardBreakdown(r_format, r_comp, r_func, r_syn, r_ppa, total, mode)


@dataclass(frozen=True)
class ScoredResponse:
    parsed: object
    report: ToolchainReport
    breakdown: RewardBreakdown

    def as_record(self):
        return {
            'format_ok': self.parsed.format_ok,
            'code_found': self.parsed.code is not None,
            'report': self.report.to_record(),
            'reward': self.breakdown.as_record(),
        }


class ResponseScorer:
    """Parse a response, run its code through the toolchain and reward the outcome."""

    def __init__(self, toolchain, settings=None, backend=None):
        self.toolchain = toolchain
        self.settings = settings or RewardSettings()
        self.backend = backend or toolchain.settings.backend

    def code_for(self, parsed):
        if parsed.format_ok or parsed.code is not None:
            return parsed.code
        if GatingMode(self.settings.gating_mode) is GatingMode.EQUATION_ONLY:
            # format does not gate compilation here, so look at the raw text
            lenient = replace(self.settings.format_options, lenient_extraction=True)
            return parse_response(parsed.raw, lenient).code
        return None

    def score(self, response, testbench=None, reference_ppa=None, timeouts=None):
        parsed = parse_response(response, self.settings.format_options)
        code = self.code_for(parsed)
        strict_reject = GatingMode(self.settings.gating_mode) is GatingMode.PROSE_STRICT and not parsed.format_ok
        if code is None or strict_reject:
            reason = 'no Verilog code to evaluate' if code is None else 'format check failed'
            report = ToolchainReport(diagnostics={'compile': reason})
        else:
            report = self.toolchain.evaluate(EvalRequest(
                code=code,
                testbench=testbench,
                reference_ppa=reference_ppa,
                stage_timeouts=timeouts or self.toolchain.settings.timeouts,
                backend=self.backend,
            ))
        breakdown = hierarchical_reward(
            parsed.format_ok,
            report,
            reference_ppa,
            self.settings.weights,
            self.settings.gating_mode,
            self.settings.ppa_cap,
        )
        logger.debug(f"reward {breakdown.total:.4f} at stage {report.stage_reached.value}")
        return ScoredResponse(parsed, report, breakdown)

