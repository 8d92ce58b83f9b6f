import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest.mock import patch

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .config import ToolchainSettings
from .exceptions import VectorTableError
from .executor import BatchExecutor
from .pipeline import NO_TESTBENCH, Toolchain
from .sandbox import workspace
from .stages import (
    VECTOR_TABLE,
    VERILOG_SOURCE,
    EvalRequest,
    Stage,
    StageTimeouts,
    Testbench,
    ToolchainReport,
)
from .verilog_mini import PpaMetrics

AND_CODE = "module and2(input a, input b, output y);\n  assign y = a & b;\nendmodule\n"
OR_CODE = "module and2(input a, input b, output y);\n  assign y = a | b;\nendmodule\n"
AND_TABLE = (
    "ports: in a b -> out y\n"
    "a=0 b=0 -> y=0\n"
    "a=0 b=1 -> y=0\n"
    "a=1 b=0 -> y=0\n"
    "a=1 b=1 -> y=1\n"
)


class TestbenchTestCase(SimpleTestCase):
    """Test cases for testbench classification"""

    def test_vector_table_detected(self):
        """Test a 'ports:' header marks a vector table"""
        bench = Testbench.from_text("# and gate\n" + AND_TABLE)
        self.assertEqual(bench.kind, VECTOR_TABLE)
        self.assertEqual(bench.case_count(), 4)

    def test_verilog_source_detected(self):
        """Test anything else is a Verilog testbench counted by its checks"""
        bench = Testbench.from_text("module tb; initial begin if (y !== 1) $display(\"FAIL\"); end endmodule")
        self.assertEqual(bench.kind, VERILOG_SOURCE)
        self.assertEqual(bench.case_count(), 1)

    def test_bad_table_rejected(self):
        """Test a malformed table fails at construction"""
        with self.assertRaises(VectorTableError):
            Testbench(VECTOR_TABLE, "ports: in a -> out y\na=7 -> y=0\n")

    def test_report_flags_are_ordered(self):
        """Test a report cannot be functional without compiling"""
        with self.assertRaises(ValueError):
            ToolchainReport(func_ok=True, stage_reached=Stage.FUNCTIONAL)


class ToolchainEvaluateTestCase(SimpleTestCase):
    """Test cases for staged evaluation on the mock backend"""

    def setUp(self):
        self.toolchain = Toolchain()
        self.bench = Testbench.from_text(AND_TABLE)

    def test_full_pass(self):
        """Test a correct design reaches PPA"""
        report = self.toolchain.evaluate(EvalRequest(AND_CODE, self.bench))
        self.assertTrue(report.compile_ok and report.func_ok and report.syn_ok)
        self.assertEqual(report.stage_reached, Stage.PPA_MEASURED)
        self.assertAlmostEqual(report.ppa.delay, 0.01)
        self.assertAlmostEqual(report.ppa.area, 1.0)
        self.assertAlmostEqual(report.ppa.power, 0.01)
        self.assertEqual(len(report.workspaces), 3)

    def test_syntax_error_stops_at_compile(self):
        """Test later stages never run after a compile failure"""
        report = self.toolchain.evaluate(EvalRequest("module broken(input a, output y); assign y = a +; endmodule", self.bench))
        self.assertFalse(report.compile_ok)
        self.assertEqual(report.stage_reached, Stage.NONE)
        self.assertTrue(report.diagnostics['compile'].startswith('syntax error'))
        self.assertNotIn('simulate', report.diagnostics)
        self.assertEqual(report.timings['simulate'], 0.0)

    def test_wrong_function_stops_at_simulation(self):
        """Test an OR gate fails the AND table"""
        report = self.toolchain.evaluate(EvalRequest(OR_CODE, self.bench))
        self.assertTrue(report.compile_ok)
        self.assertFalse(report.func_ok)
        self.assertEqual(report.stage_reached, Stage.COMPILED)
        self.assertIn('MISMATCH', report.diagnostics['simulate'])
        self.assertNotIn('synthesis', report.diagnostics)

    def test_missing_testbench(self):
        """Test a request without testbench stops after compile"""
        report = self.toolchain.evaluate(EvalRequest(AND_CODE))
        self.assertEqual(report.stage_reached, Stage.COMPILED)
        self.assertEqual(report.diagnostics['simulate'], NO_TESTBENCH)

    def test_synthesis_without_ppa(self):
        """Test measure_ppa=False stops at synthesized"""
        report = self.toolchain.evaluate(EvalRequest(AND_CODE, self.bench, measure_ppa=False))
        self.assertTrue(report.syn_ok)
        self.assertIsNone(report.ppa)
        self.assertEqual(report.stage_reached, Stage.SYNTHESIZED)

    def test_verilog_testbench_needs_external_backend(self):
        """Test the mock backend refuses Verilog testbenches"""
        bench = Testbench(VERILOG_SOURCE, "module tb; endmodule")
        report = self.toolchain.evaluate(EvalRequest(AND_CODE, bench))
        self.assertEqual(report.stage_reached, Stage.COMPILED)
        self.assertIn('vector tables only', report.diagnostics['simulate'])

    def test_stage_timeout(self):
        """Test an exceeded limit is a stage failure, not an exception"""
        request = EvalRequest(AND_CODE, self.bench, stage_timeouts=StageTimeouts(compile=1e-9))
        report = self.toolchain.evaluate(request)
        self.assertFalse(report.compile_ok)
        self.assertIn('TIMEOUT', report.diagnostics['compile'])

    def test_deterministic(self):
        """Test repeated evaluation gives equal reports"""
        request = EvalRequest(AND_CODE, self.bench, PpaMetrics(0.01, 1.0, 0.01))
        first = self.toolchain.evaluate(request)
        second = self.toolchain.evaluate(request)
        self.assertEqual(first, second)
        self.assertEqual(first.to_record(), second.to_record())

    def test_single_stage_helpers(self):
        """Test the per-stage entry points"""
        ok, _ = self.toolchain.check_compile(AND_CODE)
        self.assertTrue(ok)
        ok, text = self.toolchain.run_testbench(OR_CODE, self.bench)
        self.assertFalse(ok)
        self.assertIn('2/4 vectors failed', text)
        self.assertEqual(self.toolchain.run_testbench(AND_CODE, None), (False, NO_TESTBENCH))
        ok, ppa, _ = self.toolchain.synthesize_and_ppa(AND_CODE)
        self.assertTrue(ok)
        self.assertEqual(ppa, PpaMetrics(0.01, 1.0, 0.01))


class WorkspaceTestCase(SimpleTestCase):
    """Test cases for scratch workspaces"""

    def test_workspace_removed_on_error(self):
        """Test the directory is cleaned up even when the stage raises"""
        with self.assertRaises(RuntimeError):
            with workspace('compile') as ws:
                ws.write('design.v', AND_CODE)
                path = ws.path
                raise RuntimeError("boom")
        self.assertFalse(path.exists())

    def test_isolation_under_concurrency(self):
        """Test concurrent evaluations never share a workspace and leave nothing behind"""
        with tempfile.TemporaryDirectory() as scratch:
            toolchain = Toolchain(ToolchainSettings(scratch_dir=scratch))
            bench = Testbench.from_text(AND_TABLE)
            requests = [EvalRequest(AND_CODE if i % 2 else OR_CODE, bench) for i in range(64)]
            reports = BatchExecutor(8).evaluate_all(toolchain, requests)
            ids = [ws for report in reports for ws in report.workspaces]
            self.assertEqual(len(ids), len(set(ids)))
            self.assertEqual(list(Path(scratch).iterdir()), [])
            sequential = [toolchain.evaluate(request) for request in requests]
        self.assertEqual(reports, sequential)


class BatchExecutorTestCase(SimpleTestCase):
    """Test cases for the bounded worker pool"""

    def test_results_in_input_order(self):
        """Test results come back in submission order"""
        self.assertEqual(BatchExecutor(4).map(lambda x: x * x, range(20)), [x * x for x in range(20)])

    def test_lowest_index_failure_raised(self):
        """Test the earliest failing item's exception wins"""
        def fn(x):
            if x in (3, 7):
                raise KeyError(x)
            return x

        with self.assertRaises(KeyError) as cm:
            BatchExecutor(4).map(fn, range(10))
        self.assertEqual(cm.exception.args, (3,))

    def test_pool_size_validated(self):
        """Test a pool needs at least one worker"""
        with self.assertRaises(ValueError):
            BatchExecutor(0)


class EvalBatchCommandTestCase(SimpleTestCase):
    """Test cases for the eval_batch management command"""

    COUNT = 100

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        tasks = []
        for i in range(self.COUNT):
            task = {'id': f"t{i}", 'code': AND_CODE if i % 3 else OR_CODE, 'testbench': AND_TABLE}
            if i % 4 == 0:
                task.update({'ppa_ref.delay_ns': 0.01, 'ppa_ref.area_um2': 1.0, 'ppa_ref.power_w': 0.01})
            tasks.append(task)
        tasks.append({'id': 'no-bench', 'code': AND_CODE})
        self.tasks = self.dir / 'tasks.jsonl'
        self.tasks.write_text(''.join(json.dumps(t) + '\n' for t in tasks))

    def run_batch(self, out, *extra):
        call_command('eval_batch', '--tasks', str(self.tasks), '--out', str(out), *extra, stderr=StringIO())
        return Path(out).read_bytes()

    def test_output_order_and_content(self):
        """Test one report per task in input order"""
        lines = [json.loads(line) for line in self.run_batch(self.dir / 'out.jsonl').splitlines()]
        self.assertEqual([line['id'] for line in lines], [f"t{i}" for i in range(self.COUNT)] + ['no-bench'])
        self.assertEqual(lines[0]['stage_reached'], 'compiled')
        self.assertEqual(lines[1]['stage_reached'], 'ppa_measured')
        self.assertEqual(lines[-1]['diagnostics']['simulate'], NO_TESTBENCH)
        self.assertNotIn('timings', lines[1])

    def test_identical_across_runs(self):
        """Test parallel runs are byte-identical to a sequential run"""
        sequential = self.run_batch(self.dir / 'a.jsonl', '--jobs', '1')
        first = self.run_batch(self.dir / 'b.jsonl', '--jobs', '8')
        second = self.run_batch(self.dir / 'c.jsonl', '--jobs', '8')
        self.assertEqual(first, second)
        self.assertEqual(first, sequential)

    @patch('toolchain.backends.external.shutil.which', return_value=None)
    def test_missing_tool_exit_code(self, mock_which):
        """Test a missing external tool exits with status 3"""
        with self.assertRaises(CommandError) as cm:
            self.run_batch(self.dir / 'out.jsonl', '--backend', 'external')
        self.assertEqual(cm.exception.returncode, 3)
        self.assertTrue(mock_which.called)

    def test_invalid_task_line(self):
        """Test a malformed task is an input error"""
        self.tasks.write_text(json.dumps({'id': 'x', 'code': AND_CODE, 'ppa_ref.delay_ns': 1.0}) + '\n')
        with self.assertRaises(CommandError) as cm:
            self.run_batch(self.dir / 'out.jsonl')
        self.assertEqual(cm.exception.returncode, 1)
