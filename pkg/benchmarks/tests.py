import json
import tempfile
from fractions import Fraction
from io import StringIO
from itertools import combinations
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from rewards.scoring import ppa_score
from toolchain.stages import Stage, ToolchainReport
from toolchain.verilog_mini import PpaMetrics

from .exceptions import DomainError, MissingReference
from .metrics import (
    GEOMETRIC,
    LOSS,
    MEAN,
    POOLED,
    TIE,
    WIN,
    WINS,
    DesignResult,
    classify,
    edap,
    edap_drop,
    edap_drops,
    evaluable_count,
    pass_at_k,
    select_best,
    win_tie_loss,
)
from .table import comparison_frame, design_results, load_table

# per model: wins, ties, losses, evaluable designs, then EDAP drop by convention
TABLE_GOLDENS = {
    'chipseek': ((27, 8, 9, 38), {MEAN: 25.4231, WINS: 40.0264, POOLED: 10.6184, GEOMETRIC: 55.6631}),
    'rtlcoder': ((11, 8, 25, 22), {MEAN: 13.4822, WINS: 30.2825, POOLED: 6.4880, GEOMETRIC: 33.2944}),
    'gpt4o': ((13, 10, 21, 29), {MEAN: 11.9406, WINS: 42.4536, POOLED: 30.4681, GEOMETRIC: 31.3347}),
}


def reached(ppa):
    return ToolchainReport(compile_ok=True, func_ok=True, syn_ok=True, ppa=ppa, stage_reached=Stage.PPA_MEASURED)


def enumerate_pass_at_k(n, c, k):
    """Share of k-subsets of n samples (the first c correct) holding a correct one."""
    subsets = list(combinations(range(n), k))
    return Fraction(sum(1 for s in subsets if any(i < c for i in s)), len(subsets))


class PassAtKTestCase(SimpleTestCase):
    """Test cases for the unbiased pass@k estimator"""

    def test_matches_enumeration(self):
        """Test exact and float results against brute-force subset counting"""
        for n in range(1, 13):
            for c in range(n + 1):
                for k in range(1, n + 1):
                    expected = enumerate_pass_at_k(n, c, k)
                    self.assertEqual(pass_at_k(n, c, k, exact=True), expected, (n, c, k))
                    self.assertAlmostEqual(pass_at_k(n, c, k), float(expected), places=12, msg=(n, c, k))

    def test_known_value(self):
        """Test n=10, c=5, k=5"""
        self.assertEqual(pass_at_k(10, 5, 5, exact=True), Fraction(251, 252))
        self.assertEqual(f"{pass_at_k(10, 5, 5):.6f}", '0.996032')

    def test_edges(self):
        """Test no correct samples and too few incorrect ones"""
        self.assertEqual(pass_at_k(12, 0, 4), 0.0)
        self.assertEqual(pass_at_k(12, 10, 3), 1.0)
        self.assertEqual(pass_at_k(12, 12, 12, exact=True), 1)

    def test_monotone(self):
        """Test pass@k never drops when c or k grows"""
        for c in range(12):
            for k in range(1, 13):
                self.assertLessEqual(pass_at_k(12, c, k), pass_at_k(12, c + 1, k) + 1e-15)
                if k < 12:
                    self.assertLessEqual(pass_at_k(12, c, k), pass_at_k(12, c, k + 1) + 1e-15)

    def test_domain(self):
        """Test arguments outside the domain are rejected"""
        for args in ((5, 6, 1), (5, -1, 1), (5, 2, 0), (5, 2, 6), (5.0, 2, 1), (True, 1, 1)):
            with self.assertRaises(DomainError, msg=args):
                pass_at_k(*args)


class SelectionTestCase(SimpleTestCase):
    """Test cases for EDAP and best-of-n selection"""

    def test_edap_is_the_inverse_score(self):
        """Test EDAP is the plain product"""
        self.assertAlmostEqual(edap(PpaMetrics(2.0, 3.0, 4.0)), 24.0)
        rng = np.random.default_rng(11)
        for delay, area, power in rng.uniform(1e-6, 1e3, size=(200, 3)):
            metrics = PpaMetrics(float(delay), float(area), float(power))
            self.assertAlmostEqual(edap(metrics) * ppa_score(metrics), 1.0, places=12)

    def test_best_ties_go_to_lowest_index(self):
        """Test equal scores keep the earliest candidate"""
        same = PpaMetrics(1.0, 2.0, 3.0)
        candidates = [ToolchainReport(), reached(same), reached(PpaMetrics(1.0, 2.0, 3.0)), reached(PpaMetrics(2.0, 2.0, 3.0))]
        self.assertEqual(select_best(candidates), (1, same))

    def test_no_ppa_no_best(self):
        """Test candidates without PPA are never selected"""
        self.assertIsNone(select_best([ToolchainReport(), ToolchainReport(compile_ok=True, stage_reached=Stage.COMPILED)]))
        self.assertIsNone(select_best([]))

    def test_worked_examples(self):
        """Test the 8-bit adder EDAP and the RAM and right_shifter outcomes"""
        self.assertAlmostEqual(edap(PpaMetrics(0.35, 51.072, 3.14e-05)), 5.6128e-4, delta=1e-7)
        ram_reference = PpaMetrics(0.25, 635.74, 5.56e-05)
        ram_best = PpaMetrics(0.19, 475.076, 3.92e-05)
        self.assertAlmostEqual(edap(ram_reference) / edap(ram_best), 2.497, delta=1e-3)
        self.assertEqual(classify(ram_best, ram_reference), WIN)
        shifter = PpaMetrics(0.08, 36.176, 4.32e-06)
        self.assertEqual(classify(PpaMetrics(0.08, 36.176, 4.32e-06), shifter), TIE)
        outcomes = win_tie_loss(design_results(load_table(), 'chipseek')).outcomes
        self.assertEqual((outcomes['RAM'], outcomes['right_shifter'], outcomes['asyn_fifo']), (WIN, TIE, LOSS))

    def test_classify_tolerance(self):
        """Test ratios inside the tolerance tie"""
        reference = PpaMetrics(1.0, 1.0, 1.0)
        self.assertEqual(classify(PpaMetrics(1.0, 1.0, 1.0 + 1e-12), reference), TIE)
        self.assertEqual(classify(PpaMetrics(1.0, 1.0, 0.5), reference), WIN)
        self.assertEqual(classify(PpaMetrics(1.0, 1.0, 2.0), reference), LOSS)
        self.assertEqual(classify(PpaMetrics(1.0, 1.0, 1.01), reference, tolerance=0.05), TIE)
        self.assertEqual(classify(None, reference), LOSS)


class WinTieLossTestCase(SimpleTestCase):
    """Test cases for win-tie-loss and EDAP drop on design results"""

    def setUp(self):
        reference = PpaMetrics(1.0, 10.0, 1.0)
        self.results = [
            DesignResult('better', reference, (reached(PpaMetrics(1.0, 5.0, 1.0)),)),
            DesignResult('same', reference, (reached(reference),)),
            DesignResult('worse', reference, (reached(PpaMetrics(1.0, 20.0, 1.0)),)),
            DesignResult('broken', reference, (ToolchainReport(),)),
        ]

    def test_counts(self):
        """Test one outcome per design, failures are losses"""
        outcome = win_tie_loss(self.results)
        self.assertEqual(outcome.as_record(), {WIN: 1, TIE: 1, LOSS: 2, 'designs': 4})
        self.assertEqual(outcome.outcomes['broken'], LOSS)
        self.assertEqual(evaluable_count(self.results), 3)

    def test_drop_conventions(self):
        """Test every averaging convention on hand-computed values"""
        drops = edap_drops(self.results)
        self.assertAlmostEqual(drops[MEAN], 100.0 * (0.5 + 0.0 - 1.0) / 3)
        self.assertAlmostEqual(drops[WINS], 50.0)
        self.assertAlmostEqual(drops[POOLED], 100.0 * (1 - 35.0 / 30.0))
        self.assertAlmostEqual(drops[GEOMETRIC], 0.0)

    def test_no_evaluable_design(self):
        """Test the drop is zero when nothing reached PPA"""
        self.assertEqual(edap_drop(self.results[3:]), 0.0)

    def test_missing_reference(self):
        """Test a design without reference PPA is an error"""
        with self.assertRaises(MissingReference):
            win_tie_loss([DesignResult('orphan', None, (reached(PpaMetrics(1.0, 1.0, 1.0)),))])

    def test_unknown_convention(self):
        """Test convention names are checked"""
        with self.assertRaises(DomainError):
            edap_drop(self.results, 'median')


class ComparisonTableTestCase(SimpleTestCase):
    """Test cases for the bundled model-comparison table"""

    def setUp(self):
        self.frame = load_table()

    def test_bundled_goldens(self):
        """Test counts and drops for every model column"""
        for model, ((wins, ties, losses, evaluable), drops) in TABLE_GOLDENS.items():
            results = design_results(self.frame, model)
            self.assertEqual(len(results), 44)
            outcome = win_tie_loss(results)
            self.assertEqual((outcome.wins, outcome.ties, outcome.losses), (wins, ties, losses), model)
            self.assertEqual(evaluable_count(results), evaluable, model)
            for convention, value in drops.items():
                self.assertAlmostEqual(edap_drop(results, convention), value, places=3, msg=(model, convention))

    def test_unit_scaling_changes_nothing(self):
        """Test rescaling one metric for every design keeps outcomes and drops"""
        scaled = self.frame.copy()
        for column in [c for c in scaled.columns if c.endswith('_delay')]:
            scaled[column] = scaled[column] * 1000.0
        original = design_results(self.frame, 'chipseek')
        rescaled = design_results(scaled, 'chipseek')
        self.assertEqual(win_tie_loss(original).outcomes, win_tie_loss(rescaled).outcomes)
        for convention, value in edap_drops(original).items():
            self.assertAlmostEqual(edap_drops(rescaled)[convention], value, places=9)

    def test_comparison_frame(self):
        """Test per-design rows line up with the outcomes"""
        results = design_results(self.frame, 'chipseek')
        frame = comparison_frame(results)
        self.assertEqual(list(frame['design'])[:2], ['asyn_fifo', 'LFSR'])
        self.assertEqual(frame['outcome'].value_counts().to_dict(), {WIN: 27, LOSS: 9, TIE: 8})
        self.assertTrue(frame['best_score'].isna().iloc[0])

    def test_unknown_model(self):
        """Test only columns in the table can be compared"""
        with self.assertRaises(DomainError):
            design_results(self.frame, 'gpt5')

    def test_missing_columns(self):
        """Test a table without the expected columns is refused"""
        with tempfile.NamedTemporaryFile('w', suffix='.tsv', delete=False) as handle:
            handle.write('design\tref_delay\nx\t1.0\n')
        self.addCleanup(Path(handle.name).unlink)
        with self.assertRaises(DomainError):
            load_table(handle.name)


class MetricsCommandTestCase(SimpleTestCase):
    """Test cases for the metrics management command"""

    def run_metrics(self, *args):
        stdout = StringIO()
        call_command('metrics', *args, stdout=stdout, stderr=StringIO())
        return stdout.getvalue()

    def test_passk(self):
        """Test the float and exact outputs"""
        self.assertEqual(self.run_metrics('passk', '--n', '10', '--c', '5', '--k', '5'), '0.996032\n')
        self.assertEqual(self.run_metrics('passk', '--n', '10', '--c', '5', '--k', '5', '--exact'), '0.996032\n251/252\n')

    def test_passk_domain_error(self):
        """Test invalid pass@k arguments exit with status 1"""
        with self.assertRaises(CommandError) as cm:
            self.run_metrics('passk', '--n', '5', '--c', '6', '--k', '1')
        self.assertEqual(cm.exception.returncode, 1)

    def test_wtl(self):
        """Test the bundled table's counts"""
        output = self.run_metrics('wtl')
        self.assertEqual(output, "model: chipseek\ndesigns: 44\nevaluable: 38\nwin: 27\ntie: 8\nloss: 9\n")

    def test_edap_drop(self):
        """Test every convention is printed as a percentage"""
        output = self.run_metrics('edap-drop', '--model', 'rtlcoder')
        self.assertEqual(output, "model: rtlcoder\nmean: 13.48%\nwins: 30.28%\npooled: 6.49%\ngeometric: 33.29%\n")

    def test_table_records(self):
        """Test the comparison table and its JSON records"""
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / 'table.jsonl'
            output = self.run_metrics('table', '--model', 'gpt4o', '--out', str(out))
            records = [json.loads(line) for line in out.read_text().splitlines()]
        self.assertIn('asyn_fifo', output)
        self.assertIn('N/A', output)
        self.assertEqual(len(records), 44)
        self.assertIsNone(records[0]['best_score'])
        self.assertEqual(records[0]['outcome'], LOSS)
        self.assertEqual(records[2]['outcome'], TIE)

    def test_unknown_model_exit_code(self):
        """Test an unknown model column is an input error"""
        with self.assertRaises(CommandError) as cm:
            self.run_metrics('wtl', '--model', 'gpt5')
        self.assertEqual(cm.exception.returncode, 1)

