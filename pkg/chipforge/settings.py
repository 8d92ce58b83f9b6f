"""
Django settings for the chipforge project.

chipforge has no web surface: Django provides the app registry, the management
commands, the logging config and the test runner. Every runtime knob is read
through python-decouple; environment variables override the ini file.
"""

import os
from pathlib import Path

from decouple import AutoConfig, Config, Csv, RepositoryIni
from django.core.exceptions import ImproperlyConfigured

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


def _load_config():
    """Pick the ini file named by CHIPFORGE_CONFIG, else settings.ini at the repo root."""
    path = os.environ.get('CHIPFORGE_CONFIG')
    if not path:
        return AutoConfig(search_path=BASE_DIR)
    if not os.path.isfile(path):
        raise ImproperlyConfigured(f"CHIPFORGE_CONFIG points to a missing file: {path}")
    return Config(RepositoryIni(path))


config = _load_config()


def setting(key, default, cast=str):
    """Read one key, turning cast failures into configuration errors."""
    try:
        return config(key, default=default, cast=cast)
    except ValueError as exc:
        raise ImproperlyConfigured(f"{key}: {exc}") from exc


def optional_float(value):
    value = str(value).strip()
    return float(value) if value else None


SECRET_KEY = setting('SECRET_KEY', 'chipforge-insecure-local-key')

DEBUG = setting('DEBUG', False, cast=bool)

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'rest_framework',
    'chipforge',
    'toolchain',
    'rewards',
    'training',
    'corpus',
    'benchmarks',
]

# No models anywhere; the dummy backend keeps the test runner database-free.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
}

# Global run parameters
CHIPFORGE_SEED = setting('CHIPFORGE_SEED', 7, cast=int)
CHIPFORGE_BACKEND = setting('CHIPFORGE_BACKEND', 'mock')
CHIPFORGE_POOL_SIZE = setting('CHIPFORGE_POOL_SIZE', os.cpu_count() or 1, cast=int)
CHIPFORGE_SCRATCH_DIR = setting('CHIPFORGE_SCRATCH_DIR', '')

# Toolchain stages (seconds)
CHIPFORGE_TIMEOUT_COMPILE = setting('CHIPFORGE_TIMEOUT_COMPILE', 10.0, cast=float)
CHIPFORGE_TIMEOUT_SIMULATE = setting('CHIPFORGE_TIMEOUT_SIMULATE', 30.0, cast=float)
CHIPFORGE_TIMEOUT_SYNTHESIS = setting('CHIPFORGE_TIMEOUT_SYNTHESIS', 120.0, cast=float)
CHIPFORGE_FAILURE_MARKERS = setting('CHIPFORGE_FAILURE_MARKERS', 'FAIL,Error,MISMATCH', cast=Csv())

# External tools and command templates
CHIPFORGE_IVERILOG = setting('CHIPFORGE_IVERILOG', 'iverilog')
CHIPFORGE_VVP = setting('CHIPFORGE_VVP', 'vvp')
CHIPFORGE_YOSYS = setting('CHIPFORGE_YOSYS', 'yosys')
CHIPFORGE_OPENROAD = setting('CHIPFORGE_OPENROAD', 'openroad')
CHIPFORGE_COMPILE_COMMAND = setting('CHIPFORGE_COMPILE_COMMAND', '{iverilog} -o {out} {files}')
CHIPFORGE_SIMULATE_COMMAND = setting('CHIPFORGE_SIMULATE_COMMAND', '{vvp} {out}')
CHIPFORGE_SYNTH_COMMAND = setting('CHIPFORGE_SYNTH_COMMAND', '{yosys} -q -s {script}')
CHIPFORGE_PHYSICAL_COMMAND = setting('CHIPFORGE_PHYSICAL_COMMAND', '{openroad} -exit {script}')
CHIPFORGE_PHYSICAL_SCRIPT = setting('CHIPFORGE_PHYSICAL_SCRIPT', '')
CHIPFORGE_LIBERTY = setting('CHIPFORGE_LIBERTY', '')
CHIPFORGE_PATTERN_DELAY = setting(
    'CHIPFORGE_PATTERN_DELAY',
    r'(?:delay_ns\s*[:=]\s*([-+0-9.eE]+)|^\s*([-+0-9.eE]+)\s+data arrival time)',
)
CHIPFORGE_PATTERN_AREA = setting(
    'CHIPFORGE_PATTERN_AREA',
    r"(?:area_um2\s*[:=]\s*([-+0-9.eE]+)|Chip area for (?:top )?module '[^']*':\s*([-+0-9.eE]+)|^Design area\s+([-+0-9.eE]+))",
)
CHIPFORGE_PATTERN_POWER = setting(
    'CHIPFORGE_PATTERN_POWER',
    r'(?:power_w\s*[:=]\s*([-+0-9.eE]+)|^Total\s+\S+\s+\S+\s+\S+\s+([-+0-9.eE]+))',
)

# Mock cost model
CHIPFORGE_COST_AREA_NOT = setting('CHIPFORGE_COST_AREA_NOT', 0.5, cast=float)
CHIPFORGE_COST_AREA_AND2 = setting('CHIPFORGE_COST_AREA_AND2', 1.0, cast=float)
CHIPFORGE_COST_AREA_OR2 = setting('CHIPFORGE_COST_AREA_OR2', 1.0, cast=float)
CHIPFORGE_COST_AREA_XOR2 = setting('CHIPFORGE_COST_AREA_XOR2', 2.0, cast=float)
CHIPFORGE_COST_LEVELS_XOR2 = setting('CHIPFORGE_COST_LEVELS_XOR2', 2, cast=int)
CHIPFORGE_COST_LEVELS_OTHER = setting('CHIPFORGE_COST_LEVELS_OTHER', 1, cast=int)
CHIPFORGE_COST_DELAY_PER_LEVEL = setting('CHIPFORGE_COST_DELAY_PER_LEVEL', 0.01, cast=float)
CHIPFORGE_COST_POWER_PER_AREA = setting('CHIPFORGE_COST_POWER_PER_AREA', 0.01, cast=float)
CHIPFORGE_COST_FLOOR_AREA = setting('CHIPFORGE_COST_FLOOR_AREA', 0.1, cast=float)
CHIPFORGE_COST_FLOOR_DELAY = setting('CHIPFORGE_COST_FLOOR_DELAY', 0.01, cast=float)
CHIPFORGE_COST_FLOOR_POWER = setting('CHIPFORGE_COST_FLOOR_POWER', 0.001, cast=float)

# Response template
CHIPFORGE_FORMAT_STRICT_NEWLINES = setting('CHIPFORGE_FORMAT_STRICT_NEWLINES', False, cast=bool)
CHIPFORGE_FORMAT_ALLOW_PREAMBLE = setting('CHIPFORGE_FORMAT_ALLOW_PREAMBLE', False, cast=bool)
CHIPFORGE_FORMAT_LENIENT_EXTRACTION = setting('CHIPFORGE_FORMAT_LENIENT_EXTRACTION', False, cast=bool)

# Hierarchical reward
CHIPFORGE_REWARD_W_FORMAT = setting('CHIPFORGE_REWARD_W_FORMAT', 0.1, cast=float)
CHIPFORGE_REWARD_W_COMP = setting('CHIPFORGE_REWARD_W_COMP', 0.2, cast=float)
CHIPFORGE_REWARD_W_FUNC = setting('CHIPFORGE_REWARD_W_FUNC', 1.0, cast=float)
CHIPFORGE_REWARD_W_SYN = setting('CHIPFORGE_REWARD_W_SYN', 0.1, cast=float)
CHIPFORGE_REWARD_W_PPA = setting('CHIPFORGE_REWARD_W_PPA', 1.0, cast=float)
CHIPFORGE_REWARD_GATING_MODE = setting('CHIPFORGE_REWARD_GATING_MODE', 'prose_strict')
CHIPFORGE_REWARD_PPA_CAP = setting('CHIPFORGE_REWARD_PPA_CAP', '', cast=optional_float)

# GRPO
CHIPFORGE_GRPO_GROUP_SIZE = setting('CHIPFORGE_GRPO_GROUP_SIZE', 10, cast=int)
CHIPFORGE_GRPO_EPSILON = setting('CHIPFORGE_GRPO_EPSILON', 0.2, cast=float)
CHIPFORGE_GRPO_BETA = setting('CHIPFORGE_GRPO_BETA', 0.01, cast=float)
CHIPFORGE_GRPO_LEARNING_RATE = setting('CHIPFORGE_GRPO_LEARNING_RATE', 0.5, cast=float)
CHIPFORGE_GRPO_STEPS = setting('CHIPFORGE_GRPO_STEPS', 500, cast=int)
CHIPFORGE_GRPO_INNER_EPOCHS = setting('CHIPFORGE_GRPO_INNER_EPOCHS', 1, cast=int)
CHIPFORGE_GRPO_STD_FLOOR = setting('CHIPFORGE_GRPO_STD_FLOOR', 1e-8, cast=float)
CHIPFORGE_GRPO_MAX_GRAD_NORM = setting('CHIPFORGE_GRPO_MAX_GRAD_NORM', 1.0, cast=float)

# Data pipeline and text generators
CHIPFORGE_TESTBENCH_MIN_CASES = setting('CHIPFORGE_TESTBENCH_MIN_CASES', 3, cast=int)
CHIPFORGE_TESTBENCH_MAX_CASES = setting('CHIPFORGE_TESTBENCH_MAX_CASES', 20, cast=int)
CHIPFORGE_GENERATOR = setting('CHIPFORGE_GENERATOR', 'heuristic')
CHIPFORGE_GENERATOR_SCRIPT = setting('CHIPFORGE_GENERATOR_SCRIPT', '')
CHIPFORGE_GENERATOR_URL = setting('CHIPFORGE_GENERATOR_URL', '')
CHIPFORGE_GENERATOR_MODEL = setting('CHIPFORGE_GENERATOR_MODEL', 'deepseek-reasoner')
CHIPFORGE_GENERATOR_KEY_ENV = setting('CHIPFORGE_GENERATOR_KEY_ENV', 'CHIPFORGE_GENERATOR_API_KEY')
CHIPFORGE_GENERATOR_TIMEOUT = setting('CHIPFORGE_GENERATOR_TIMEOUT', 60.0, cast=float)
CHIPFORGE_GENERATOR_RETRIES = setting('CHIPFORGE_GENERATOR_RETRIES', 3, cast=int)
CHIPFORGE_GENERATOR_BACKOFF = setting('CHIPFORGE_GENERATOR_BACKOFF', 1.0, cast=float)

# Benchmarks
CHIPFORGE_WTL_TOLERANCE = setting('CHIPFORGE_WTL_TOLERANCE', 1e-9, cast=float)

# Logging
CHIPFORGE_LOG_LEVEL = setting('CHIPFORGE_LOG_LEVEL', 'INFO')
CHIPFORGE_LOG_FILE = setting('CHIPFORGE_LOG_FILE', '')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': CHIPFORGE_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('chipforge', 'toolchain', 'rewards', 'training', 'corpus', 'benchmarks')
    },
}

if CHIPFORGE_LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': CHIPFORGE_LOG_FILE,
        'formatter': 'verbose',
    }
    for logger_conf in LOGGING['loggers'].values():
        logger_conf['handlers'].append('file')
