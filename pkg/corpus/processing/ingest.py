"""Raw Verilog files -> BaseRecords: compile filter, instructions, exact dedup."""

import logging
from pathlib import Path

from toolchain.executor import BatchExecutor

from ..exceptions import GeneratorUnavailable
from ..generators import INSTRUCTION, Prompt
from ..records import (
    DUPLICATE,
    GENERATOR_UNAVAILABLE,
    IO_ERROR,
    NO_INSTRUCTION,
    SYNTAX_ERROR,
    BaseRecord,
    Rejection,
    normalize_code,
    record_id,
)
from .results import StageResult, failure_reason

logger = logging.getLogger(__name__)

STAGE = 'ingest'
VERILOG_SUFFIXES = ('.v', '.sv')
SIDECAR_SUFFIXES = ('.txt', '.md')


def collect_sources(sources):
    """Expand directories into their Verilog files (sorted); returns (files, rejections)."""
    files, rejections = [], []
    for source in sources:
        path = Path(source)
        if path.is_dir():
            files.extend(sorted(p for p in path.rglob('*') if p.suffix in VERILOG_SUFFIXES and p.is_file()))
        elif path.is_file():
            files.append(path)
        else:
            rejections.append(Rejection(str(path), STAGE, IO_ERROR, "no such file or directory"))
    return files, rejections


def sidecar_instruction(path):
    for suffix in SIDECAR_SUFFIXES:
        sidecar = path.with_suffix(suffix)
        if sidecar.is_file():
            text = sidecar.read_text().strip()
            if text:
                return text
    return None


def _ingest_one(path, toolchain, backend, generator):
    try:
        code = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        return Rejection(str(path), STAGE, IO_ERROR, str(exc))

    ok, diagnostics = toolchain.check_compile(code, backend)
    if not ok:
        return Rejection(str(path), STAGE, failure_reason(diagnostics, SYNTAX_ERROR), diagnostics)

    ident = record_id(code)
    instruction = sidecar_instruction(path)
    if instruction is None and generator is not None:
        try:
            instruction = generator.generate(Prompt(INSTRUCTION, ident, f"Describe {path.name}.", code)).strip()
        except GeneratorUnavailable as exc:
            return Rejection(str(path), STAGE, GENERATOR_UNAVAILABLE, str(exc))
    if not instruction:
        return Rejection(str(path), STAGE, NO_INSTRUCTION, "no sidecar instruction and no generator text")
    return BaseRecord(id=ident, instruction=instruction, code=code)


def ingest_corpus(sources, toolchain, backend=None, generator=None, executor=None):
    files, rejections = collect_sources(sources)
    executor = executor or BatchExecutor(1)
    outcomes = executor.map(lambda path: _ingest_one(path, toolchain, backend, generator), files)

    result = StageResult(rejections=rejections)
    seen = {}
    for path, outcome in zip(files, outcomes):
        if isinstance(outcome, Rejection):
            result.rejections.append(outcome)
            continue
        key = normalize_code(outcome.code)
        if key in seen:
            result.rejections.append(Rejection(str(path), STAGE, DUPLICATE, f"same code as {seen[key]}"))
            continue
        seen[key] = path
        result.records.append(outcome)

    for rejection in result.rejections:
        logger.warning(f"rejected {rejection.source}: {rejection.reason}")
    logger.info(f"ingested {len(result.records)} records, rejected {len(result.rejections)}")
    return result
