import json
import tempfile
from dataclasses import replace
from io import StringIO
from itertools import product
from pathlib import Path
from types import SimpleNamespace

from django.core.management import call_command
from django.test import SimpleTestCase

from toolchain.pipeline import Toolchain
from toolchain.stages import Stage, Testbench
from toolchain.verilog_mini import PpaMetrics

from .exceptions import NonPositiveMetric
from .response_format import (
    FormatOptions,
    extract_verilog,
    format_reward,
    parse_response,
    render_code_answer,
    render_response,
)
from .scoring import (
    GatingMode,
    RewardSettings,
    RewardWeights,
    ResponseScorer,
    hierarchical_reward,
    ppa_reward,
    ppa_score,
)

AND_CODE = "module and2(input a, input b, output y);\n  assign y = a & b;\nendmodule"
AND_TABLE = "ports: in a b -> out y\na=0 b=0 -> y=0\na=0 b=1 -> y=0\na=1 b=0 -> y=0\na=1 b=1 -> y=1\n"
AND_PPA = PpaMetrics(0.01, 1.0, 0.01)


class ResponseFormatTestCase(SimpleTestCase):
    """Test cases for the think/answer template"""

    def test_well_formed(self):
        """Test the canonical template"""
        parsed = parse_response("<think>\nreason\n</think>\n<answer>\ncode\n</answer>")
        self.assertTrue(parsed.format_ok)
        self.assertEqual(parsed.think_text, 'reason')
        self.assertEqual(parsed.answer_text, 'code')
        self.assertEqual(format_reward(parsed), 1)

    def test_reversed_blocks(self):
        """Test answer before think fails"""
        parsed = parse_response("<answer>\nx\n</answer>\n<think>\ny\n</think>")
        self.assertFalse(parsed.format_ok)
        self.assertEqual(format_reward(parsed), 0)

    def test_unterminated_answer(self):
        """Test a missing closing tag fails"""
        self.assertFalse(parse_response("<think>\na\n</think>\n<answer>\nb").format_ok)

    def test_repeated_tags(self):
        """Test a second think block fails"""
        text = "<think>\na\n</think>\n<think>\nb\n</think>\n<answer>\nc\n</answer>"
        self.assertFalse(parse_response(text).format_ok)

    def test_tags_must_sit_on_their_own_lines(self):
        """Test inline tags fail"""
        self.assertFalse(parse_response("<think>reason</think>\n<answer>\ncode\n</answer>").format_ok)

    def test_empty_blocks(self):
        """Test whitespace-only blocks fail"""
        self.assertFalse(parse_response("<think>\n  \n</think>\n<answer>\ncode\n</answer>").format_ok)

    def test_preamble_is_configurable(self):
        """Test leading prose fails unless allowed"""
        text = "Sure, here it is.\n<think>\nreason\n</think>\n<answer>\ncode\n</answer>"
        self.assertFalse(parse_response(text).format_ok)
        self.assertTrue(parse_response(text, FormatOptions(allow_preamble=True)).format_ok)

    def test_strict_newlines(self):
        """Test trailing blanks after a tag only pass the relaxed matcher"""
        text = "<think>  \nreason\n</think>\n<answer>\ncode\n</answer>\n"
        self.assertTrue(parse_response(text).format_ok)
        self.assertFalse(parse_response(text, FormatOptions(strict_newlines=True)).format_ok)

    def test_never_raises(self):
        """Test arbitrary text is handled"""
        for text in ('', None, '<think>', '</answer></answer>', '\x00\n<answer>'):
            self.assertFalse(parse_response(text).format_ok)

    def test_render_round_trip(self):
        """Test rendered responses parse back to their parts"""
        for think, answer in (('step 1\nstep 2', render_code_answer(AND_CODE)), ('x', 'y  z')):
            parsed = parse_response(render_response(think, answer))
            self.assertTrue(parsed.format_ok)
            self.assertEqual((parsed.think_text, parsed.answer_text), (think, answer))


class ExtractVerilogTestCase(SimpleTestCase):
    """Test cases for code extraction"""

    def test_fenced_block_first(self):
        """Test the first fenced block wins over a bare module"""
        answer = f"```verilog\n{AND_CODE}\n```\nmodule other(); endmodule"
        parsed = parse_response(render_response('r', answer))
        self.assertEqual(parsed.code, AND_CODE)

    def test_module_span(self):
        """Test an unfenced module...endmodule span"""
        parsed = parse_response(render_response('r', f"Here:\n{AND_CODE}\nDone."))
        self.assertEqual(parsed.code, AND_CODE)

    def test_no_code(self):
        """Test an answer without Verilog"""
        self.assertIsNone(parse_response(render_response('r', 'no idea')).code)

    def test_lenient_extraction(self):
        """Test lenient mode looks at the raw text of a malformed response"""
        raw = f"```verilog\n{AND_CODE}\n```"
        self.assertIsNone(parse_response(raw).code)
        parsed = parse_response(raw, FormatOptions(lenient_extraction=True))
        self.assertFalse(parsed.format_ok)
        self.assertEqual(parsed.code, AND_CODE)
        self.assertEqual(extract_verilog(parsed, FormatOptions(lenient_extraction=True)), AND_CODE)


class HierarchicalRewardTestCase(SimpleTestCase):
    """Test cases for the gated weighted reward"""

    def report(self, compile_ok, func_ok, syn_ok, ppa=AND_PPA):
        # flags are set independently here so the gating itself is exercised
        return SimpleNamespace(compile_ok=compile_ok, func_ok=func_ok, syn_ok=syn_ok, ppa=ppa if syn_ok else None)

    def test_full_pass_is_exactly_2_4(self):
        """Test gen = ref with default weights"""
        breakdown = hierarchical_reward(True, self.report(True, True, True), AND_PPA)
        self.assertEqual((breakdown.r_format, breakdown.r_comp, breakdown.r_func, breakdown.r_syn), (1, 1, 1, 1))
        self.assertEqual(breakdown.r_ppa, 1.0)
        self.assertEqual(breakdown.total, 2.4)

    def test_format_only_is_exactly_0_1(self):
        """Test a well-formed response whose code fails to compile"""
        breakdown = hierarchical_reward(True, self.report(False, False, False), AND_PPA)
        self.assertEqual(breakdown.total, 0.1)

    def test_format_failure_modes(self):
        """Test the two gating modes on a format failure"""
        report = self.report(True, True, True)
        strict = hierarchical_reward(False, report, AND_PPA, mode=GatingMode.PROSE_STRICT)
        self.assertEqual(strict.total, 0.0)
        loose = hierarchical_reward(False, report, AND_PPA, mode=GatingMode.EQUATION_ONLY)
        self.assertEqual((loose.r_format, loose.r_comp, loose.r_func, loose.r_syn), (0, 1, 1, 1))
        self.assertAlmostEqual(loose.total, 2.3)

    def test_gating_exhaustive(self):
        """Test all 16 flag combinations in both modes respect the stage chain"""
        weights = RewardWeights()
        cases = 0
        for mode in GatingMode:
            for format_ok, compile_ok, func_ok, syn_ok in product((False, True), repeat=4):
                b = hierarchical_reward(format_ok, self.report(compile_ok, func_ok, syn_ok), AND_PPA, weights, mode)
                self.assertTrue(b.r_func <= b.r_comp and b.r_syn <= b.r_func)
                if not b.r_syn:
                    self.assertEqual(b.r_ppa, 0.0)
                if mode is GatingMode.PROSE_STRICT and not format_ok:
                    self.assertEqual(b.r_comp, 0)
                expected = (weights.w_format * b.r_format + weights.w_comp * b.r_comp + weights.w_func * b.r_func
                            + weights.w_syn * b.r_syn + weights.w_ppa * b.r_ppa)
                self.assertAlmostEqual(b.total, expected)
                cases += 1
        self.assertEqual(cases, 32)

    def test_custom_weights(self):
        """Test weights scale their components"""
        weights = RewardWeights(w_format=0.0, w_comp=0.0, w_func=2.0, w_syn=0.0, w_ppa=0.5)
        breakdown = hierarchical_reward(True, self.report(True, True, True), AND_PPA, weights)
        self.assertAlmostEqual(breakdown.total, 2.5)

    def test_negative_weight_rejected(self):
        """Test weights must be non-negative"""
        with self.assertRaises(ValueError):
            RewardWeights(w_func=-1.0)


class PpaScoreTestCase(SimpleTestCase):
    """Test cases for the PPA score and its reward ratio"""

    def test_ppa_score(self):
        """Test the inverse product"""
        self.assertEqual(ppa_score(PpaMetrics(1.0, 1.0, 1.0)), 1.0)
        self.assertAlmostEqual(ppa_score(AND_PPA), 1e4)
        self.assertAlmostEqual(ppa_score(PpaMetrics(2.0, 5.0, 0.1)), 1.0)

    def test_non_positive_metric(self):
        """Test zero metrics are rejected"""
        with self.assertRaises(NonPositiveMetric):
            ppa_score(PpaMetrics(0.0, 1.0, 1.0))

    def test_ratio(self):
        """Test a design half the area of the reference scores 2"""
        self.assertAlmostEqual(ppa_reward(PpaMetrics(0.01, 0.5, 0.01), AND_PPA), 2.0)
        self.assertEqual(ppa_reward(AND_PPA, None), 0.0)

    def test_worked_examples(self):
        """Test the 8-bit adder rows"""
        reference = PpaMetrics(0.35, 51.072, 3.14e-05)
        generated = PpaMetrics(0.07, 46.816, 2.22e-05)
        self.assertAlmostEqual(ppa_score(reference), 1781.6, delta=0.1)
        self.assertAlmostEqual(ppa_score(generated), 13745, delta=1)
        self.assertAlmostEqual(ppa_reward(generated, reference), 7.715, delta=1e-3)

    def test_improving_any_metric_raises_the_reward(self):
        """Test lowering delay, area or power strictly raises r_ppa and the total"""
        base = PpaMetrics(0.3, 40.0, 2e-05)
        for name in ('delay', 'area', 'power'):
            better = replace(base, **{name: getattr(base, name) * 0.9})
            before = hierarchical_reward(True, SimpleNamespace(compile_ok=True, func_ok=True, syn_ok=True, ppa=base), AND_PPA)
            after = hierarchical_reward(True, SimpleNamespace(compile_ok=True, func_ok=True, syn_ok=True, ppa=better), AND_PPA)
            self.assertGreater(after.r_ppa, before.r_ppa, name)
            self.assertGreater(after.total, before.total, name)

    def test_cap(self):
        """Test the optional cap"""
        self.assertEqual(ppa_reward(PpaMetrics(0.01, 0.5, 0.01), AND_PPA, cap=1.5), 1.5)


class ResponseScorerTestCase(SimpleTestCase):
    """Test cases for end-to-end scoring on the mock toolchain"""

    def setUp(self):
        self.scorer = ResponseScorer(Toolchain())
        self.bench = Testbench.from_text(AND_TABLE)

    def test_correct_response(self):
        """Test a correct, well-formed AND response"""
        response = render_response('AND the inputs.', render_code_answer(AND_CODE))
        scored = self.scorer.score(response, self.bench, AND_PPA)
        self.assertEqual(scored.report.stage_reached, Stage.PPA_MEASURED)
        self.assertEqual(scored.breakdown.total, 2.4)

    def test_broken_code(self):
        """Test well-formed response with uncompilable code"""
        response = render_response('oops', render_code_answer("module m(input a, output y); assign y = ; endmodule"))
        scored = self.scorer.score(response, self.bench, AND_PPA)
        self.assertEqual(scored.breakdown.total, 0.1)
        self.assertIn('syntax error', scored.report.diagnostics['compile'])

    def test_format_violation_is_not_evaluated(self):
        """Test prose_strict skips the toolchain on a format failure"""
        scored = self.scorer.score(AND_CODE, self.bench, AND_PPA)
        self.assertEqual(scored.breakdown.total, 0.0)
        self.assertEqual(scored.report.stage_reached, Stage.NONE)

    def test_equation_only_uses_raw_code(self):
        """Test equation_only evaluates code found outside the template"""
        scorer = ResponseScorer(Toolchain(), RewardSettings(gating_mode=GatingMode.EQUATION_ONLY))
        scored = scorer.score(AND_CODE, self.bench, AND_PPA)
        self.assertEqual(scored.breakdown.r_format, 0)
        self.assertEqual(scored.breakdown.r_ppa, 1.0)
        self.assertAlmostEqual(scored.breakdown.total, 2.3)

    def test_better_design_beats_reference(self):
        """Test the shared full adder outscores the 7-gate reference"""
        code = ("module fa(input a, input b, input cin, output s, output cout);\n"
                "  wire p = a ^ b;\n  assign s = p ^ cin;\n  assign cout = (a & b) | (cin & p);\nendmodule")
        table = "ports: in a b cin -> out s cout\n" + ''.join(
            f"a={a} b={b} cin={c} -> s={(a + b + c) & 1} cout={(a + b + c) >> 1}\n"
            for a, b, c in product((0, 1), repeat=3)
        )
        reference = PpaMetrics(0.04, 9.0, 0.09)
        scored = self.scorer.score(render_response('share p', render_code_answer(code)), Testbench.from_text(table), reference)
        self.assertGreater(scored.breakdown.r_ppa, 1.0)


class ScoreCommandTestCase(SimpleTestCase):
    """Test cases for the score management command"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        (self.dir / 'bench.txt').write_text(AND_TABLE)

    def run_score(self, response, *extra):
        path = self.dir / 'response.txt'
        path.write_text(response)
        out = StringIO()
        call_command('score', '--response', str(path), '--testbench', str(self.dir / 'bench.txt'),
                     *extra, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_full_score(self):
        """Test a passing response prints its breakdown"""
        output = self.run_score(render_response('r', render_code_answer(AND_CODE)), '--ref-ppa', '0.01,1.0,0.01')
        self.assertIn('total: 2.4\n', output)
        self.assertIn('stage_reached: ppa_measured', output)

    def test_format_violation_exits_cleanly(self):
        """Test a format-violating response scores 0.0 without an error"""
        output = self.run_score("just some text")
        self.assertIn('total: 0.0\n', output)

    def test_json_output(self):
        """Test --json prints one record"""
        record = json.loads(self.run_score(render_response('r', render_code_answer(AND_CODE)), '--json'))
        self.assertTrue(record['format_ok'])
        self.assertEqual(record['report']['stage_reached'], 'ppa_measured')
        self.assertEqual(record['reward']['r_ppa'], 0.0)
