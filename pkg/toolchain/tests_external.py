import shutil
import subprocess
import tempfile
from pathlib import Path
from unittest import skipUnless
from unittest.mock import patch

from django.test import SimpleTestCase

from .backends import ExternalBackend
from .backends.external import scan_markers, top_module, yosys_script
from .backends.reports import parse_ppa_report
from .config import ToolchainSettings
from .exceptions import ReportParseError, ToolUnavailable
from .pipeline import Toolchain
from .stages import EXTERNAL, EvalRequest, Stage, Testbench

FIXTURES = Path(__file__).resolve().parent / 'fixtures'

AND_CODE = "module and2(input a, input b, output y);\n  assign y = a & b;\nendmodule\n"
AND_TABLE = "ports: in a b -> out y\na=0 b=0 -> y=0\na=1 b=1 -> y=1\na=1 b=0 -> y=0\n"


def fixture(name):
    return (FIXTURES / name).read_text()


def fake_which(name):
    return f"/opt/eda/bin/{name}"


class FakeTools:
    """Stands in for subprocess.run; answers per tool with canned output."""

    def __init__(self, sim_output='PASS\n', sim_status=0, synth_output='', stat=None, physical=''):
        self.sim_output = sim_output
        self.sim_status = sim_status
        self.synth_output = synth_output
        self.stat = stat
        self.physical = physical
        self.calls = []

    def __call__(self, args, cwd=None, **kwargs):
        tool = Path(args[0]).name
        self.calls.append(tool)
        if tool == 'vvp':
            return subprocess.CompletedProcess(args, self.sim_status, self.sim_output, '')
        if tool == 'yosys':
            if self.stat is not None:
                (Path(cwd) / 'stat.txt').write_text(self.stat)
            return subprocess.CompletedProcess(args, 0, self.synth_output, '')
        if tool == 'openroad':
            return subprocess.CompletedProcess(args, 0, self.physical, '')
        return subprocess.CompletedProcess(args, 0, '', '')


class ReportParsingTestCase(SimpleTestCase):
    """Test cases for PPA extraction from tool reports"""

    def setUp(self):
        self.patterns = ToolchainSettings().patterns

    def test_yosys_and_openroad(self):
        """Test area comes from the synthesis stat, delay and power from the physical flow"""
        text = fixture('yosys_stat.txt') + '\n' + fixture('openroad_report.txt')
        ppa = parse_ppa_report(text, self.patterns)
        self.assertAlmostEqual(ppa.delay, 0.07)
        self.assertAlmostEqual(ppa.area, 46.816)
        self.assertAlmostEqual(ppa.power, 2.22e-05)

    def test_openroad_only(self):
        """Test the design area line is used without a synthesis stat"""
        ppa = parse_ppa_report(fixture('openroad_report.txt'), self.patterns)
        self.assertAlmostEqual(ppa.area, 47.0)

    def test_missing_power(self):
        """Test a report without power is unusable"""
        with self.assertRaisesMessage(ReportParseError, 'power_w'):
            parse_ppa_report(fixture('report_missing_power.txt'), self.patterns)

    def test_synthesis_stat_alone(self):
        """Test yosys stat output has no timing"""
        with self.assertRaisesMessage(ReportParseError, 'delay_ns'):
            parse_ppa_report(fixture('yosys_stat.txt'), self.patterns)

    def test_key_value_report(self):
        """Test plain key=value reports"""
        ppa = parse_ppa_report("delay_ns: 1.5\narea_um2 = 30\npower_w: 2e-3\n", self.patterns)
        self.assertEqual((ppa.delay, ppa.area, ppa.power), (1.5, 30.0, 2e-3))

    def test_non_positive_rejected(self):
        """Test a zero metric is a parse failure"""
        with self.assertRaises(ReportParseError):
            parse_ppa_report("delay_ns: 0\narea_um2: 3\npower_w: 1e-3\n", self.patterns)


class ExternalHelpersTestCase(SimpleTestCase):
    """Test cases for the external adapter helpers"""

    def test_scan_markers(self):
        """Test the first marker line is returned"""
        output = "case 1 ok\ncase 2 ok\nFAIL: case 3\nMISMATCH row 4\n"
        self.assertEqual(scan_markers(output, ('FAIL', 'MISMATCH')), 'FAIL: case 3')
        self.assertIsNone(scan_markers("all good\nPASS\n", ('FAIL', 'Error')))

    def test_top_module(self):
        """Test the first module name is the synthesis top"""
        self.assertEqual(top_module("// header\nmodule adder_8bit(input a);"), 'adder_8bit')
        self.assertEqual(top_module("no module here"), 'top')

    def test_yosys_script(self):
        """Test liberty mapping is only added when a library is configured"""
        self.assertNotIn('abc -liberty', yosys_script('top'))
        self.assertIn('abc -liberty cells.lib', yosys_script('top', 'cells.lib'))

    def test_command_template_expands_files(self):
        """Test {files} becomes one argument per file"""
        backend = ExternalBackend(ToolchainSettings(backend=EXTERNAL))
        args = backend._command('{iverilog} -o {out} {files}', iverilog='iv', out='o.vvp', files=['a.v', 'b.v'])
        self.assertEqual(args, ['iv', '-o', 'o.vvp', 'a.v', 'b.v'])


class ExternalBackendTestCase(SimpleTestCase):
    """Test cases for the external backend with the tools stubbed out"""

    def setUp(self):
        patcher = patch('toolchain.backends.external.shutil.which', side_effect=fake_which)
        self.mock_which = patcher.start()
        self.addCleanup(patcher.stop)
        self.settings = ToolchainSettings(backend=EXTERNAL)
        self.bench = Testbench.from_text(AND_TABLE)

    def evaluate(self, tools, settings=None):
        toolchain = Toolchain(settings or self.settings)
        with patch('toolchain.sandbox.subprocess.run', side_effect=tools):
            return toolchain.evaluate(EvalRequest(AND_CODE, self.bench, backend=EXTERNAL))

    def test_failure_marker_with_zero_exit(self):
        """Test a marker fails the simulation even when the simulator exits 0"""
        report = self.evaluate(FakeTools(sim_output="case 1 ok\nFAIL: case 3\n"))
        self.assertTrue(report.compile_ok)
        self.assertFalse(report.func_ok)
        self.assertIn('FAIL: case 3', report.diagnostics['simulate'])

    def test_nonzero_simulator_exit(self):
        """Test a crashing simulator fails the stage"""
        report = self.evaluate(FakeTools(sim_output='', sim_status=1))
        self.assertFalse(report.func_ok)
        self.assertIn('exited with 1', report.diagnostics['simulate'])

    def test_missing_power_fails_synthesis(self):
        """Test synthesis without a power figure does not count"""
        report = self.evaluate(FakeTools(synth_output=fixture('report_missing_power.txt')))
        self.assertTrue(report.func_ok)
        self.assertFalse(report.syn_ok)
        self.assertEqual(report.stage_reached, Stage.FUNCTIONAL)
        self.assertIn('power_w', report.diagnostics['synthesis'])

    def test_full_flow_with_physical_script(self):
        """Test the stat file and physical report combine into PPA"""
        with tempfile.NamedTemporaryFile('w', suffix='.tcl', delete=False) as handle:
            handle.write('report_checks\nreport_power\n')
        self.addCleanup(Path(handle.name).unlink)
        settings = ToolchainSettings(backend=EXTERNAL, physical_script=handle.name)
        tools = FakeTools(stat=fixture('yosys_stat.txt'), physical=fixture('openroad_report.txt'))
        report = self.evaluate(tools, settings)
        self.assertEqual(report.stage_reached, Stage.PPA_MEASURED)
        self.assertAlmostEqual(report.ppa.area, 46.816)
        self.assertAlmostEqual(report.ppa.delay, 0.07)
        self.assertAlmostEqual(report.ppa.power, 2.22e-05)
        self.assertEqual(tools.calls, ['iverilog', 'iverilog', 'vvp', 'yosys', 'openroad'])

    def test_missing_physical_script(self):
        """Test an unreadable physical flow script fails synthesis instead of raising"""
        settings = ToolchainSettings(backend=EXTERNAL, physical_script='/nonexistent/flow.tcl')
        tools = FakeTools(stat=fixture('yosys_stat.txt'))
        report = self.evaluate(tools, settings)
        self.assertTrue(report.func_ok)
        self.assertFalse(report.syn_ok)
        self.assertEqual(report.stage_reached, Stage.FUNCTIONAL)
        self.assertIn('/nonexistent/flow.tcl', report.diagnostics['synthesis'])
        self.assertNotIn('openroad', tools.calls)

    def test_timeout_is_a_stage_failure(self):
        """Test an expired subprocess becomes a TIMEOUT diagnostic"""
        def hang(args, **kwargs):
            raise subprocess.TimeoutExpired(args, kwargs.get('timeout'))

        report = self.evaluate(hang)
        self.assertFalse(report.compile_ok)
        self.assertIn('TIMEOUT: compile', report.diagnostics['compile'])

    def test_missing_tool_escapes(self):
        """Test a missing tool is raised rather than reported"""
        self.mock_which.side_effect = None
        self.mock_which.return_value = None
        with self.assertRaises(ToolUnavailable):
            self.evaluate(FakeTools())


@skipUnless(shutil.which('iverilog') and shutil.which('vvp'), "Icarus Verilog not installed")
class IcarusTestCase(SimpleTestCase):
    """Test cases against a real Icarus Verilog install"""

    def test_compile_and_simulate(self):
        """Test the AND gate compiles and passes its rendered testbench"""
        toolchain = Toolchain(ToolchainSettings(backend=EXTERNAL))
        ok, _ = toolchain.check_compile(AND_CODE)
        self.assertTrue(ok)
        ok, output = toolchain.run_testbench(AND_CODE, Testbench.from_text(AND_TABLE))
        self.assertTrue(ok, output)

    def test_syntax_error(self):
        """Test iverilog rejects broken source"""
        ok, _ = Toolchain(ToolchainSettings(backend=EXTERNAL)).check_compile("module m(; endmodule")
        self.assertFalse(ok)
