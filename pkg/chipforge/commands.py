"""
Shared plumbing for the chipforge management commands.

Every command takes --seed, --jobs and --backend, reads its typed settings
through AppSettings and maps failures onto the exit codes:
1 usage or input error, 2 configuration error, 3 external tool or generator unavailable.
"""

import argparse
import logging
import sys
from dataclasses import replace

from decouple import UndefinedValueError
from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError, CommandParser
from rest_framework.exceptions import ValidationError

from benchmarks.exceptions import MetricsError
from corpus.exceptions import CorpusError, GeneratorUnavailable
from rewards.exceptions import RewardError
from toolchain.exceptions import ToolchainError, ToolUnavailable
from toolchain.stages import BACKENDS

from .conf import get_app_settings

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_TOOL = 3


class UsageParser(CommandParser):
    """argparse reports bad arguments with status 2; chipforge reserves 2 for configuration."""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")
        raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


def positive_int(value):
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return number


def read_text(path):
    try:
        with open(path) as handle:
            return handle.read()
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}", returncode=EXIT_USAGE) from exc


class ChipforgeCommand(BaseCommand):

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        # add_arguments already ran; commands with subcommands pass parser_class=UsageParser themselves
        parser.__class__ = UsageParser
        self.add_global_arguments(parser)
        return parser

    @staticmethod
    def add_global_arguments(parser, nested=False):
        """--seed/--jobs/--backend; nested parsers leave unset flags to the parent."""
        extra = {'default': argparse.SUPPRESS} if nested else {}
        parser.add_argument('--seed', type=int, help="Random seed (overrides CHIPFORGE_SEED)", **extra)
        parser.add_argument('--jobs', type=positive_int, help="Worker pool size (overrides CHIPFORGE_POOL_SIZE)", **extra)
        parser.add_argument('--backend', choices=BACKENDS, help="Toolchain backend (overrides CHIPFORGE_BACKEND)", **extra)

    def app_settings(self, options):
        """Typed settings with the global flags applied."""
        conf = get_app_settings()
        toolchain = conf.toolchain
        if options.get('jobs'):
            toolchain = replace(toolchain, pool_size=options['jobs'])
        if options.get('backend'):
            toolchain = replace(toolchain, backend=options['backend'])
        conf = replace(conf, toolchain=toolchain)
        if options.get('seed') is not None:
            conf = replace(conf, seed=options['seed'], grpo=replace(conf.grpo, seed=options['seed']))
        return conf

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except CommandError:
            raise
        except (ImproperlyConfigured, UndefinedValueError) as exc:
            logger.error(f"configuration error: {exc}")
            raise CommandError(f"configuration error: {exc}", returncode=EXIT_CONFIG) from exc
        except (ToolUnavailable, GeneratorUnavailable) as exc:
            raise CommandError(str(exc), returncode=EXIT_TOOL) from exc
        except ValidationError as exc:
            raise CommandError(f"invalid input: {exc.detail}", returncode=EXIT_USAGE) from exc
        except (ToolchainError, CorpusError, RewardError, MetricsError, ValueError, OSError) as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
