"""Evaluation requests, per-stage limits and the immutable stage report."""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

from .verilog_mini import PpaMetrics, VectorTable

VECTOR_TABLE = 'vector_table'
VERILOG_SOURCE = 'verilog_source'

MOCK = 'mock'
EXTERNAL = 'external'
BACKENDS = (MOCK, EXTERNAL)

_CHECK = re.compile(r'\bif\s*\(')


@dataclass(frozen=True)
class Testbench:
    kind: str
    body: str

    def __post_init__(self):
        if self.kind not in (VECTOR_TABLE, VERILOG_SOURCE):
            raise ValueError(f"unknown testbench kind '{self.kind}'")
        if self.kind == VECTOR_TABLE:
            VectorTable.parse(self.body)
        elif not self.body.strip():
            raise ValueError("verilog testbench is empty")

    @classmethod
    def from_text(cls, text):
        """Vector tables start with their 'ports:' header; anything else is Verilog."""
        stripped = '\n'.join(line.split('#', 1)[0] for line in text.splitlines()).lstrip()
        kind = VECTOR_TABLE if stripped.startswith('ports:') else VERILOG_SOURCE
        return cls(kind, text)

    @property
    def table(self):
        return VectorTable.parse(self.body) if self.kind == VECTOR_TABLE else None

    def case_count(self):
        if self.kind == VECTOR_TABLE:
            return len(self.table.rows)
        return len(_CHECK.findall(self.body))


@dataclass(frozen=True)
class StageTimeouts:
    compile: float = 10.0
    simulate: float = 30.0
    synthesis: float = 120.0

    def __post_init__(self):
        for name in ('compile', 'simulate', 'synthesis'):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} timeout must be > 0")


@dataclass(frozen=True)
class EvalRequest:
    code: str
    testbench: Optional[Testbench] = None
    reference_ppa: Optional[PpaMetrics] = None
    stage_timeouts: StageTimeouts = field(default_factory=StageTimeouts)
    backend: str = MOCK
    measure_ppa: bool = True

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend '{self.backend}'")


class Stage(str, Enum):
    NONE = 'none'
    COMPILED = 'compiled'
    FUNCTIONAL = 'functional'
    SYNTHESIZED = 'synthesized'
    PPA_MEASURED = 'ppa_measured'


STAGE_NAMES = ('compile', 'simulate', 'synthesis')


def stage_for(compile_ok, func_ok, syn_ok, ppa):
    if ppa is not None:
        return Stage.PPA_MEASURED
    if syn_ok:
        return Stage.SYNTHESIZED
    if func_ok:
        return Stage.FUNCTIONAL
    if compile_ok:
        return Stage.COMPILED
    return Stage.NONE


@dataclass(frozen=True)
class ToolchainReport:
    compile_ok: bool = False
    func_ok: bool = False
    syn_ok: bool = False
    ppa: Optional[PpaMetrics] = None
    stage_reached: Stage = Stage.NONE
    diagnostics: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict, compare=False)
    workspaces: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.func_ok and not self.compile_ok:
            raise ValueError("func_ok requires compile_ok")
        if self.syn_ok and not self.func_ok:
            raise ValueError("syn_ok requires func_ok")
        if self.ppa is not None and not self.syn_ok:
            raise ValueError("ppa requires syn_ok")
        if self.stage_reached != self.expected_stage():
            raise ValueError(f"stage_reached {self.stage_reached.value} disagrees with the stage flags")

    def expected_stage(self):
        return stage_for(self.compile_ok, self.func_ok, self.syn_ok, self.ppa)

    def to_record(self):
        """JSON-friendly view; timings and workspace ids are left out so reruns compare equal."""
        return {
            'compile_ok': self.compile_ok,
            'func_ok': self.func_ok,
            'syn_ok': self.syn_ok,
            'ppa': self.ppa.as_record() if self.ppa else None,
            'stage_reached': self.stage_reached.value,
            'diagnostics': dict(self.diagnostics),
        }
