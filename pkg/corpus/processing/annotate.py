"""Synthesize each paired record's code and attach its PPA as the reference."""

import logging

from toolchain.executor import BatchExecutor

from ..records import NONPOSITIVE_PPA, SYNTHESIS_FAILED, Rejection, RlRecord
from .results import StageResult, failure_reason

logger = logging.getLogger(__name__)

STAGE = 'ppa'
INCOMPATIBLE = "incompatibility of synthesis and physical design"


def _annotate(record, toolchain, backend):
    ok, ppa, diagnostics = toolchain.synthesize_and_ppa(record.code, backend)
    if not ok or ppa is None:
        reason = failure_reason(diagnostics, SYNTHESIS_FAILED)
        return Rejection(record.id, STAGE, reason, f"{INCOMPATIBLE}: {diagnostics}")
    if not ppa.is_positive():
        return Rejection(record.id, STAGE, NONPOSITIVE_PPA, f"{INCOMPATIBLE}: {ppa.as_record()}")
    return RlRecord(
        id=record.id,
        instruction=record.instruction,
        testbench=record.testbench,
        reference_ppa=ppa,
        code=record.code,
    )


def annotate_ppa(records, toolchain, backend=None, executor=None):
    executor = executor or BatchExecutor(1)
    result = StageResult()
    for outcome in executor.map(lambda record: _annotate(record, toolchain, backend), records):
        if isinstance(outcome, Rejection):
            logger.warning(f"no reference PPA for {outcome.source}: {outcome.reason}")
            result.rejections.append(outcome)
        else:
            result.records.append(outcome)
    return result
