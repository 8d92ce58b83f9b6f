"""Typed toolchain configuration."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

from .stages import BACKENDS, MOCK, StageTimeouts
from .verilog_mini import CostModel

DEFAULT_PATTERNS = {
    'delay_ns': r'(?:delay_ns\s*[:=]\s*([-+0-9.eE]+)|^\s*([-+0-9.eE]+)\s+data arrival time)',
    'area_um2': r"(?:area_um2\s*[:=]\s*([-+0-9.eE]+)|Chip area for (?:top )?module '[^']*':\s*([-+0-9.eE]+)"
                r"|^Design area\s+([-+0-9.eE]+))",
    'power_w': r'(?:power_w\s*[:=]\s*([-+0-9.eE]+)|^Total\s+\S+\s+\S+\s+\S+\s+([-+0-9.eE]+))',
}


@dataclass(frozen=True)
class ToolPaths:
    iverilog: str = 'iverilog'
    vvp: str = 'vvp'
    yosys: str = 'yosys'
    openroad: str = 'openroad'


@dataclass(frozen=True)
class CommandTemplates:
    compile: str = '{iverilog} -o {out} {files}'
    simulate: str = '{vvp} {out}'
    synth: str = '{yosys} -q -s {script}'
    physical: str = '{openroad} -exit {script}'


@dataclass(frozen=True)
class ToolchainSettings:
    backend: str = MOCK
    pool_size: int = 1
    scratch_dir: Optional[str] = None
    timeouts: StageTimeouts = field(default_factory=StageTimeouts)
    failure_markers: Tuple[str, ...] = ('FAIL', 'Error', 'MISMATCH')
    tools: ToolPaths = field(default_factory=ToolPaths)
    commands: CommandTemplates = field(default_factory=CommandTemplates)
    physical_script: Optional[str] = None
    liberty: Optional[str] = None
    delay_pattern: str = DEFAULT_PATTERNS['delay_ns']
    area_pattern: str = DEFAULT_PATTERNS['area_um2']
    power_pattern: str = DEFAULT_PATTERNS['power_w']
    cost_model: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {', '.join(BACKENDS)}, got '{self.backend}'")
        if self.pool_size < 1:
            raise ValueError("pool size must be >= 1")
        if not self.failure_markers:
            raise ValueError("at least one failure marker is required")

    @property
    def patterns(self):
        return {'delay_ns': self.delay_pattern, 'area_um2': self.area_pattern, 'power_w': self.power_pattern}
