"""The bundled model-comparison table and per-design comparison frames."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from rewards.scoring import ppa_score
from toolchain.stages import Stage, ToolchainReport
from toolchain.verilog_mini import PpaMetrics

from .exceptions import DomainError
from .metrics import DEFAULT_TOLERANCE, DesignResult, classify, edap

logger = logging.getLogger(__name__)

BUNDLED_TABLE = Path(__file__).resolve().parent / 'data' / 'model_comparison.tsv'
REFERENCE = 'ref'
MODELS = ('rtlcoder', 'gpt4o', 'chipseek')
FIELDS = ('delay', 'area', 'power')


def load_table(path=None):
    path = Path(path) if path else BUNDLED_TABLE
    frame = pd.read_csv(path, sep='\t', na_values=['NA', 'N/A'], keep_default_na=False)
    expected = ['design'] + [f"{prefix}_{name}" for prefix in (REFERENCE,) + MODELS for name in FIELDS]
    missing = [column for column in expected if column not in frame.columns]
    if missing:
        raise DomainError(f"{path}: missing columns {', '.join(missing)}")
    logger.debug(f"loaded {len(frame)} designs from {path}")
    return frame


def models_in(frame):
    return tuple(
        prefix for prefix in dict.fromkeys(c.rsplit('_', 1)[0] for c in frame.columns if '_' in c)
        if prefix != REFERENCE
    )


def _triple(row, prefix):
    values = [row[f"{prefix}_{name}"] for name in FIELDS]
    if any(pd.isna(v) for v in values):
        return None
    return PpaMetrics(*(float(v) for v in values))


def _report(ppa):
    """A reported triple stands for a candidate that reached PPA; N/A for one that never compiled."""
    if ppa is None:
        return ToolchainReport()
    return ToolchainReport(compile_ok=True, func_ok=True, syn_ok=True, ppa=ppa, stage_reached=Stage.PPA_MEASURED)


def design_results(frame, model):
    if model not in models_in(frame):
        raise DomainError(f"unknown model '{model}'; the table has {', '.join(models_in(frame))}")
    return [
        DesignResult(
            name=row['design'],
            reference_ppa=_triple(row, REFERENCE),
            candidates=(_report(_triple(row, model)),),
        )
        for _, row in frame.iterrows()
    ]


def comparison_frame(results, tolerance=DEFAULT_TOLERANCE):
    """One row per design: scores, score ratio, EDAP drop and the win/tie/loss outcome."""
    rows = []
    for result in results:
        best = result.best()
        best_ppa = best[1] if best else None
        reference = result.reference_ppa
        row = {
            'design': result.name,
            'ref_score': ppa_score(reference) if reference is not None else np.nan,
            'best_score': ppa_score(best_ppa) if best_ppa is not None else np.nan,
            'ratio': np.nan,
            'edap_drop_pct': np.nan,
            'outcome': classify(best_ppa, reference, tolerance) if reference is not None else 'n/a',
        }
        if best_ppa is not None and reference is not None:
            row['ratio'] = row['best_score'] / row['ref_score']
            row['edap_drop_pct'] = 100.0 * (1.0 - edap(best_ppa) / edap(reference))
        rows.append(row)
    return pd.DataFrame(rows, columns=['design', 'ref_score', 'best_score', 'ratio', 'edap_drop_pct', 'outcome'])


def render_comparison(frame):
    display = frame.copy()
    for column, fmt in (('ref_score', '{:.4g}'), ('best_score', '{:.4g}'), ('ratio', '{:.4f}'), ('edap_drop_pct', '{:.2f}')):
        display[column] = [('N/A' if pd.isna(value) else fmt.format(value)) for value in frame[column]]
    return display.to_string(index=False)


def comparison_records(frame):
    """JSON-friendly rows; missing numbers become None."""
    cleaned = frame.astype(object).where(frame.notna(), None)
    return cleaned.to_dict('records')
