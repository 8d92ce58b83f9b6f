"""Dataset records and the rejection log entries."""

import hashlib
from dataclasses import dataclass
from typing import Optional

from rewards.response_format import render_code_answer, render_response
from toolchain.stages import Testbench
from toolchain.verilog_mini import PpaMetrics

STATISTICAL = 'statistical'

# rejection reason codes
SYNTAX_ERROR = 'syntax_error'
DUPLICATE = 'duplicate'
IO_ERROR = 'io_error'
NO_INSTRUCTION = 'no_instruction'
FORMAT_CHECK_FAILED = 'format_check_failed'
TESTBENCH_CASE_COUNT = 'testbench_case_count'
TESTBENCH_INVALID = 'testbench_invalid'
TESTBENCH_FAILED = 'testbench_failed'
SYNTHESIS_FAILED = 'synthesis_failed'
TIMEOUT = 'timeout'
NONPOSITIVE_PPA = 'nonpositive_ppa'
GENERATOR_UNAVAILABLE = 'generator_unavailable'


def normalize_code(code):
    return ' '.join(code.split())


def record_id(code):
    return hashlib.sha256(normalize_code(code).encode('utf-8')).hexdigest()[:16]


@dataclass(frozen=True)
class BaseRecord:
    id: str
    instruction: str
    code: str


@dataclass(frozen=True)
class ColdStartRecord:
    id: str
    instruction: str
    reasoning: str
    code: str

    @property
    def response(self):
        return render_response(self.reasoning, render_code_answer(self.code))


@dataclass(frozen=True)
class PairedRecord:
    id: str
    instruction: str
    code: str
    testbench: Testbench


@dataclass(frozen=True)
class RlRecord:
    id: str
    instruction: str
    testbench: Testbench
    reference_ppa: PpaMetrics
    code: Optional[str] = None
    validation_level: str = STATISTICAL


@dataclass(frozen=True)
class Rejection:
    source: str
    stage: str
    reason: str
    detail: str = ''

    def as_record(self):
        return {'source': self.source, 'stage': self.stage, 'reason': self.reason, 'detail': self.detail}
