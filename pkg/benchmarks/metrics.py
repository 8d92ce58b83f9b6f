"""
Evaluation analytics: pass@k, EDAP, best-of-n selection and win-tie-loss
against human-written reference designs.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from rewards.scoring import ppa_score
from toolchain.stages import ToolchainReport
from toolchain.verilog_mini import PpaMetrics

from .exceptions import DomainError, MissingReference

logger = logging.getLogger(__name__)

WIN = 'win'
TIE = 'tie'
LOSS = 'loss'

MEAN = 'mean'
WINS = 'wins'
POOLED = 'pooled'
GEOMETRIC = 'geometric'
CONVENTIONS = (MEAN, WINS, POOLED, GEOMETRIC)

DEFAULT_TOLERANCE = 1e-9


def pass_at_k(n, c, k, exact=False):
    """
    Unbiased pass@k: 1 - C(n-c, k) / C(n, k).

    The float path uses the product form 1 - prod(1 - k / i) for i in n-c+1..n;
    exact=True returns a Fraction.
    """
    if not all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in (n, c, k)):
        raise DomainError(f"n, c and k must be integers, got n={n!r}, c={c!r}, k={k!r}")
    if not 0 <= c <= n:
        raise DomainError(f"need 0 <= c <= n, got c={c}, n={n}")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if exact:
        return 1 - Fraction(math.comb(n - c, k), math.comb(n, k))
    if n - c < k:
        return 1.0
    return float(1.0 - np.prod(1.0 - k / np.arange(n - c + 1, n + 1)))


def edap(metrics):
    """Energy-delay-area product: area x delay x power, the inverse of ppa_score."""
    return 1.0 / ppa_score(metrics)


def select_best(candidates) -> Optional[Tuple[int, PpaMetrics]]:
    """Highest ppa_score among candidates that carry PPA; ties go to the lowest index."""
    best = None
    for index, report in enumerate(candidates):
        if report.ppa is None:
            continue
        score = ppa_score(report.ppa)
        if best is None or score > best[0]:
            best = (score, index, report.ppa)
    return None if best is None else (best[1], best[2])


@dataclass(frozen=True)
class DesignResult:
    name: str
    reference_ppa: Optional[PpaMetrics]
    candidates: Tuple[ToolchainReport, ...] = ()

    def best(self):
        return select_best(self.candidates)


def classify(best, reference, tolerance=DEFAULT_TOLERANCE):
    """Win/tie/loss of one best candidate against its reference; no candidate is a loss."""
    if best is None:
        return LOSS
    ratio = ppa_score(best) / ppa_score(reference)
    if ratio - 1.0 > tolerance:
        return WIN
    if 1.0 - ratio > tolerance:
        return LOSS
    return TIE


@dataclass
class WtlOutcome:
    outcomes: Dict[str, str] = field(default_factory=dict)

    @property
    def counts(self):
        counter = Counter(self.outcomes.values())
        return {outcome: counter.get(outcome, 0) for outcome in (WIN, TIE, LOSS)}

    @property
    def wins(self):
        return self.counts[WIN]

    @property
    def ties(self):
        return self.counts[TIE]

    @property
    def losses(self):
        return self.counts[LOSS]

    def as_record(self):
        return {**self.counts, 'designs': len(self.outcomes)}


def _reference(result):
    if result.reference_ppa is None:
        raise MissingReference(result.name)
    return result.reference_ppa


def win_tie_loss(results, tolerance=DEFAULT_TOLERANCE):
    outcome = WtlOutcome()
    for result in results:
        reference = _reference(result)
        best = result.best()
        outcome.outcomes[result.name] = classify(best[1] if best else None, reference, tolerance)
    return outcome


def _evaluable(results):
    """(best, reference) pairs of designs whose best candidate has PPA."""
    pairs = []
    for result in results:
        reference = _reference(result)
        best = result.best()
        if best is not None:
            pairs.append((best[1], reference))
    return pairs


def edap_drop(results, convention=MEAN, tolerance=DEFAULT_TOLERANCE):
    """
    Percentage EDAP reduction of the best candidates against their references.

    mean: arithmetic mean of per-design drops over designs with PPA.
    wins: the same mean, restricted to winning designs.
    pooled: 1 - sum(best EDAP) / sum(reference EDAP).
    geometric: 1 - geometric mean of the EDAP ratios.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown EDAP drop convention '{convention}'")
    pairs = _evaluable(results)
    if convention == WINS:
        pairs = [(best, ref) for best, ref in pairs if classify(best, ref, tolerance) == WIN]
    if not pairs:
        return 0.0

    best = np.array([edap(b) for b, _ in pairs])
    reference = np.array([edap(r) for _, r in pairs])
    if convention == POOLED:
        drop = 1.0 - best.sum() / reference.sum()
    elif convention == GEOMETRIC:
        drop = 1.0 - float(np.exp(np.mean(np.log(best / reference))))
    else:
        drop = float(np.mean(1.0 - best / reference))
    return 100.0 * drop


def edap_drops(results, tolerance=DEFAULT_TOLERANCE) -> Dict[str, float]:
    return {convention: edap_drop(results, convention, tolerance) for convention in CONVENTIONS}


def evaluable_count(results: List[DesignResult]):
    return sum(1 for result in results if result.best() is not None)
