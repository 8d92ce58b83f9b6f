"""BaseRecords -> ColdStartRecords with generated reasoning chains."""

import logging

from rewards.response_format import parse_response
from toolchain.executor import BatchExecutor

from ..exceptions import GeneratorUnavailable
from ..generators import REASONING, Prompt
from ..records import FORMAT_CHECK_FAILED, ColdStartRecord, Rejection
from .results import StageResult

logger = logging.getLogger(__name__)

STAGE = 'coldstart'
ATTEMPTS = 2


def _annotate(record, generator, options):
    for attempt in range(1, ATTEMPTS + 1):
        prompt = Prompt(REASONING, record.id, record.instruction, record.code, attempt)
        reasoning = generator.generate(prompt).strip()
        candidate = ColdStartRecord(record.id, record.instruction, reasoning, record.code)
        if reasoning and parse_response(candidate.response, options).format_ok:
            return candidate
        logger.info(f"reasoning for {record.id} failed the format check (attempt {attempt})")
    return Rejection(record.id, STAGE, FORMAT_CHECK_FAILED, "rendered response does not match the template")


def generate_cold_start(records, generator, options=None, executor=None):
    """
    Records whose reasoning breaks the template are retried once, then dropped.
    GeneratorUnavailable stops the batch: records before the failing one are
    kept and the result is marked aborted.
    """
    executor = executor or BatchExecutor(1)

    def work(record):
        try:
            return _annotate(record, generator, options)
        except GeneratorUnavailable as exc:
            return exc

    result = StageResult()
    for record, outcome in zip(records, executor.map(work, records)):
        if isinstance(outcome, GeneratorUnavailable):
            logger.error(f"generator unavailable at {record.id}; keeping {len(result.records)} records")
            result.aborted = True
            break
        if isinstance(outcome, Rejection):
            result.rejections.append(outcome)
        else:
            result.records.append(outcome)
    return result
