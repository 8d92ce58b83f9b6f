"""Generate a testbench per record and keep only pairs the record's own code passes."""

import logging

from toolchain.exceptions import ToolchainError
from toolchain.executor import BatchExecutor
from toolchain.stages import Testbench

from ..exceptions import GeneratorUnavailable
from ..generators import TESTBENCH, Prompt
from ..records import TESTBENCH_CASE_COUNT, TESTBENCH_FAILED, TESTBENCH_INVALID, PairedRecord, Rejection
from .results import StageResult, failure_reason

logger = logging.getLogger(__name__)

STAGE = 'testbench'


def _pair(record, generator, toolchain, backend, min_cases, max_cases):
    text = generator.generate(Prompt(TESTBENCH, record.id, record.instruction, record.code))
    try:
        testbench = Testbench.from_text(text)
    except (ValueError, ToolchainError) as exc:
        return Rejection(record.id, STAGE, TESTBENCH_INVALID, str(exc))

    cases = testbench.case_count()
    if not min_cases <= cases <= max_cases:
        return Rejection(record.id, STAGE, TESTBENCH_CASE_COUNT, f"{cases} cases, need {min_cases}-{max_cases}")

    ok, diagnostics = toolchain.run_testbench(record.code, testbench, backend)
    if not ok:
        return Rejection(record.id, STAGE, failure_reason(diagnostics, TESTBENCH_FAILED), diagnostics)
    return PairedRecord(record.id, record.instruction, record.code, testbench)


def pair_testbenches(records, generator, toolchain, backend=None, min_cases=3, max_cases=20, executor=None):
    executor = executor or BatchExecutor(1)

    def work(record):
        try:
            return _pair(record, generator, toolchain, backend, min_cases, max_cases)
        except GeneratorUnavailable as exc:
            return exc

    result = StageResult()
    for record, outcome in zip(records, executor.map(work, records)):
        if isinstance(outcome, GeneratorUnavailable):
            logger.error(f"generator unavailable at {record.id}; keeping {len(result.records)} records")
            result.aborted = True
            break
        if isinstance(outcome, Rejection):
            logger.warning(f"testbench rejected for {record.id}: {outcome.reason}")
            result.rejections.append(outcome)
        else:
            result.records.append(outcome)
    return result
