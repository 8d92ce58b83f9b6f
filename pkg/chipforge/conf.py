"""
Typed view of the CHIPFORGE_* settings.

settings.py keeps the flat decouple values; AppSettings groups them into the
frozen sections each app consumes and runs their validation once.
"""

from dataclasses import dataclass

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from corpus.generators import GeneratorSettings
from rewards.response_format import FormatOptions
from rewards.scoring import GatingMode, RewardSettings, RewardWeights
from toolchain.config import CommandTemplates, ToolchainSettings, ToolPaths
from toolchain.stages import StageTimeouts
from toolchain.verilog_mini import CostModel
from training.grpo import GrpoConfig


@dataclass(frozen=True)
class AppSettings:
    seed: int
    toolchain: ToolchainSettings
    reward: RewardSettings
    grpo: GrpoConfig
    generator: GeneratorSettings
    wtl_tolerance: float

    @property
    def cost_model(self):
        return self.toolchain.cost_model

    @classmethod
    def from_settings(cls, conf=None):
        conf = conf or settings
        try:
            return cls._build(conf)
        except (TypeError, ValueError) as exc:
            raise ImproperlyConfigured(str(exc)) from exc

    @classmethod
    def _build(cls, s):
        cost_model = CostModel(
            area_not=s.CHIPFORGE_COST_AREA_NOT,
            area_and2=s.CHIPFORGE_COST_AREA_AND2,
            area_or2=s.CHIPFORGE_COST_AREA_OR2,
            area_xor2=s.CHIPFORGE_COST_AREA_XOR2,
            levels_xor2=s.CHIPFORGE_COST_LEVELS_XOR2,
            levels_other=s.CHIPFORGE_COST_LEVELS_OTHER,
            delay_per_level=s.CHIPFORGE_COST_DELAY_PER_LEVEL,
            power_per_area=s.CHIPFORGE_COST_POWER_PER_AREA,
            floor_area=s.CHIPFORGE_COST_FLOOR_AREA,
            floor_delay=s.CHIPFORGE_COST_FLOOR_DELAY,
            floor_power=s.CHIPFORGE_COST_FLOOR_POWER,
        )
        toolchain = ToolchainSettings(
            backend=s.CHIPFORGE_BACKEND,
            pool_size=s.CHIPFORGE_POOL_SIZE,
            scratch_dir=s.CHIPFORGE_SCRATCH_DIR or None,
            timeouts=StageTimeouts(
                compile=s.CHIPFORGE_TIMEOUT_COMPILE,
                simulate=s.CHIPFORGE_TIMEOUT_SIMULATE,
                synthesis=s.CHIPFORGE_TIMEOUT_SYNTHESIS,
            ),
            failure_markers=tuple(m for m in s.CHIPFORGE_FAILURE_MARKERS if m),
            tools=ToolPaths(
                iverilog=s.CHIPFORGE_IVERILOG,
                vvp=s.CHIPFORGE_VVP,
                yosys=s.CHIPFORGE_YOSYS,
                openroad=s.CHIPFORGE_OPENROAD,
            ),
            commands=CommandTemplates(
                compile=s.CHIPFORGE_COMPILE_COMMAND,
                simulate=s.CHIPFORGE_SIMULATE_COMMAND,
                synth=s.CHIPFORGE_SYNTH_COMMAND,
                physical=s.CHIPFORGE_PHYSICAL_COMMAND,
            ),
            physical_script=s.CHIPFORGE_PHYSICAL_SCRIPT or None,
            liberty=s.CHIPFORGE_LIBERTY or None,
            delay_pattern=s.CHIPFORGE_PATTERN_DELAY,
            area_pattern=s.CHIPFORGE_PATTERN_AREA,
            power_pattern=s.CHIPFORGE_PATTERN_POWER,
            cost_model=cost_model,
        )
        reward = RewardSettings(
            weights=RewardWeights(
                w_format=s.CHIPFORGE_REWARD_W_FORMAT,
                w_comp=s.CHIPFORGE_REWARD_W_COMP,
                w_func=s.CHIPFORGE_REWARD_W_FUNC,
                w_syn=s.CHIPFORGE_REWARD_W_SYN,
                w_ppa=s.CHIPFORGE_REWARD_W_PPA,
            ),
            gating_mode=_gating_mode(s.CHIPFORGE_REWARD_GATING_MODE),
            ppa_cap=s.CHIPFORGE_REWARD_PPA_CAP,
            format_options=FormatOptions(
                strict_newlines=s.CHIPFORGE_FORMAT_STRICT_NEWLINES,
                allow_preamble=s.CHIPFORGE_FORMAT_ALLOW_PREAMBLE,
                lenient_extraction=s.CHIPFORGE_FORMAT_LENIENT_EXTRACTION,
            ),
        )
        grpo = GrpoConfig(
            group_size=s.CHIPFORGE_GRPO_GROUP_SIZE,
            epsilon=s.CHIPFORGE_GRPO_EPSILON,
            beta=s.CHIPFORGE_GRPO_BETA,
            learning_rate=s.CHIPFORGE_GRPO_LEARNING_RATE,
            steps=s.CHIPFORGE_GRPO_STEPS,
            inner_epochs=s.CHIPFORGE_GRPO_INNER_EPOCHS,
            std_floor=s.CHIPFORGE_GRPO_STD_FLOOR,
            max_grad_norm=s.CHIPFORGE_GRPO_MAX_GRAD_NORM,
            seed=s.CHIPFORGE_SEED,
        )
        generator = GeneratorSettings(
            kind=s.CHIPFORGE_GENERATOR,
            script=s.CHIPFORGE_GENERATOR_SCRIPT or None,
            url=s.CHIPFORGE_GENERATOR_URL or None,
            model=s.CHIPFORGE_GENERATOR_MODEL,
            key_env=s.CHIPFORGE_GENERATOR_KEY_ENV,
            timeout=s.CHIPFORGE_GENERATOR_TIMEOUT,
            retries=s.CHIPFORGE_GENERATOR_RETRIES,
            backoff=s.CHIPFORGE_GENERATOR_BACKOFF,
            min_cases=s.CHIPFORGE_TESTBENCH_MIN_CASES,
            max_cases=s.CHIPFORGE_TESTBENCH_MAX_CASES,
        )
        if s.CHIPFORGE_WTL_TOLERANCE < 0:
            raise ValueError("win-tie-loss tolerance must be >= 0")
        return cls(
            seed=s.CHIPFORGE_SEED,
            toolchain=toolchain,
            reward=reward,
            grpo=grpo,
            generator=generator,
            wtl_tolerance=s.CHIPFORGE_WTL_TOLERANCE,
        )


def _gating_mode(value):
    try:
        return GatingMode(value)
    except ValueError:
        modes = ', '.join(m.value for m in GatingMode)
        raise ValueError(f"gating mode must be one of {modes}, got '{value}'") from None


def get_app_settings():
    return AppSettings.from_settings()
