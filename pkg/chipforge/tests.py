import os
from io import StringIO
from unittest.mock import patch

from django.core.exceptions import ImproperlyConfigured
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from rewards.scoring import GatingMode

from .checks import check_chipforge_settings
from .commands import EXIT_CONFIG, EXIT_USAGE, ChipforgeCommand
from .conf import AppSettings, get_app_settings
from .settings import _load_config, optional_float, setting


class SettingsTestCase(SimpleTestCase):
    """Test cases for the decouple-backed settings helpers"""

    def test_cast_failure_is_a_configuration_error(self):
        """Test a value that does not cast raises ImproperlyConfigured"""
        with patch.dict(os.environ, {'CHIPFORGE_TEST_STEPS': 'many'}):
            with self.assertRaisesMessage(ImproperlyConfigured, 'CHIPFORGE_TEST_STEPS'):
                setting('CHIPFORGE_TEST_STEPS', 1, cast=int)

    def test_environment_overrides_default(self):
        """Test environment variables win over defaults"""
        with patch.dict(os.environ, {'CHIPFORGE_TEST_STEPS': '12'}):
            self.assertEqual(setting('CHIPFORGE_TEST_STEPS', 1, cast=int), 12)

    def test_missing_config_file(self):
        """Test CHIPFORGE_CONFIG must name an existing file"""
        with patch.dict(os.environ, {'CHIPFORGE_CONFIG': '/nonexistent/chipforge.ini'}):
            with self.assertRaises(ImproperlyConfigured):
                _load_config()

    def test_optional_float(self):
        """Test blank means unset"""
        self.assertIsNone(optional_float(''))
        self.assertEqual(optional_float(' 1.5 '), 1.5)


class AppSettingsTestCase(SimpleTestCase):
    """Test cases for the typed settings view"""

    def test_defaults(self):
        """Test the shipped defaults"""
        conf = get_app_settings()
        self.assertEqual(conf.seed, 7)
        self.assertEqual(conf.toolchain.backend, 'mock')
        self.assertEqual(conf.reward.gating_mode, GatingMode('prose_strict'))
        self.assertEqual(conf.reward.weights.w_func, 1.0)
        self.assertEqual(conf.grpo.group_size, 10)
        self.assertEqual(conf.grpo.epsilon, 0.2)
        self.assertEqual(conf.grpo.beta, 0.01)
        self.assertEqual(conf.grpo.steps, 500)
        self.assertEqual(conf.generator.kind, 'heuristic')
        self.assertEqual(conf.wtl_tolerance, 1e-9)
        self.assertIs(conf.cost_model, conf.toolchain.cost_model)

    @override_settings(CHIPFORGE_GRPO_GROUP_SIZE=1)
    def test_invalid_group_size(self):
        """Test section validation surfaces as ImproperlyConfigured"""
        with self.assertRaises(ImproperlyConfigured):
            AppSettings.from_settings()

    @override_settings(CHIPFORGE_REWARD_GATING_MODE='lenient')
    def test_unknown_gating_mode(self):
        """Test the gating mode error lists the valid modes"""
        with self.assertRaisesMessage(ImproperlyConfigured, 'prose_strict'):
            AppSettings.from_settings()

    @override_settings(CHIPFORGE_WTL_TOLERANCE=-1.0)
    def test_negative_tolerance(self):
        """Test the win-tie-loss tolerance must be non-negative"""
        with self.assertRaises(ImproperlyConfigured):
            AppSettings.from_settings()

    def test_global_flags_override(self):
        """Test --seed, --jobs and --backend replace the configured values"""
        conf = ChipforgeCommand().app_settings({'seed': 3, 'jobs': 2, 'backend': 'external'})
        self.assertEqual((conf.seed, conf.grpo.seed), (3, 3))
        self.assertEqual(conf.toolchain.pool_size, 2)
        self.assertEqual(conf.toolchain.backend, 'external')


class SystemCheckTestCase(SimpleTestCase):
    """Test cases for the settings system check"""

    def test_valid_settings(self):
        """Test the shipped settings pass"""
        self.assertEqual(check_chipforge_settings(None), [])

    @override_settings(CHIPFORGE_GRPO_GROUP_SIZE=1)
    def test_invalid_settings(self):
        """Test broken settings are reported as chipforge.E001"""
        errors = check_chipforge_settings(None)
        self.assertEqual([error.id for error in errors], ['chipforge.E001'])


class ExitCodeTestCase(SimpleTestCase):
    """Test cases for the command exit codes"""

    def run_command(self, *args):
        call_command(*args, stdout=StringIO(), stderr=StringIO())

    @override_settings(CHIPFORGE_REWARD_GATING_MODE='lenient')
    def test_configuration_error(self):
        """Test configuration errors exit with status 2"""
        with self.assertRaises(CommandError) as cm:
            self.run_command('metrics', 'wtl')
        self.assertEqual(cm.exception.returncode, EXIT_CONFIG)

    def test_bad_global_flag(self):
        """Test a non-positive --jobs is a usage error"""
        with self.assertRaises(CommandError) as cm:
            self.run_command('metrics', 'wtl', '--jobs', '0')
        self.assertEqual(cm.exception.returncode, EXIT_USAGE)

    def test_unknown_backend(self):
        """Test --backend only accepts known backends"""
        with self.assertRaises(CommandError) as cm:
            self.run_command('eval_batch', '--tasks', 'tasks.jsonl', '--out', 'out.jsonl', '--backend', 'spice')
        self.assertEqual(cm.exception.returncode, EXIT_USAGE)
