import json
import os
import tempfile
from io import StringIO
from pathlib import Path
from unittest.mock import MagicMock, call, patch

import requests
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from rest_framework.exceptions import ValidationError

from rewards.response_format import parse_response
from toolchain.pipeline import Toolchain
from toolchain.stages import Testbench
from toolchain.verilog_mini import PpaMetrics

from .exceptions import GeneratorUnavailable
from .generators import (
    INSTRUCTION,
    REASONING,
    TESTBENCH,
    ExternalGenerator,
    GeneratorSettings,
    HeuristicGenerator,
    Prompt,
    ScriptedGenerator,
    TextGenerator,
)
from .processing import annotate_ppa, generate_cold_start, ingest_corpus, pair_testbenches
from .processing.annotate import INCOMPATIBLE
from .records import (
    DUPLICATE,
    FORMAT_CHECK_FAILED,
    IO_ERROR,
    NO_INSTRUCTION,
    SYNTAX_ERROR,
    SYNTHESIS_FAILED,
    TESTBENCH_CASE_COUNT,
    TESTBENCH_FAILED,
    TESTBENCH_INVALID,
    BaseRecord,
    PairedRecord,
    RlRecord,
    record_id,
)
from .serializers import RlRecordSerializer, dump_records, load_records

AND_CODE = "module and2(input a, input b, output y);\n  assign y = a & b;\nendmodule\n"
OR_CODE = "module or2(input a, input b, output y);\n  assign y = a | b;\nendmodule\n"
XOR_CODE = "module xor2(input a, input b, output y);\n  assign y = a ^ b;\nendmodule\n"
BROKEN_CODE = "module broken(input a, output y);\n  assign y = a +;\nendmodule\n"
AND_TABLE = "ports: in a b -> out y\na=0 b=0 -> y=0\na=0 b=1 -> y=0\na=1 b=0 -> y=0\na=1 b=1 -> y=1\n"
OR_TABLE = "ports: in a b -> out y\na=0 b=0 -> y=0\na=0 b=1 -> y=1\na=1 b=0 -> y=1\na=1 b=1 -> y=1\n"


def base_record(code, instruction='Build it.'):
    return BaseRecord(record_id(code), instruction, code)


class AttemptGenerator(TextGenerator):
    """Returns answers[attempt - 1] and remembers every prompt."""

    def __init__(self, answers):
        self.answers = answers
        self.prompts = []

    def generate(self, prompt):
        self.prompts.append(prompt)
        return self.answers[prompt.attempt - 1]


class CorpusDirMixin:

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.src = self.dir / 'src'
        self.src.mkdir()
        (self.src / 'and.v').write_text(AND_CODE)
        (self.src / 'and.txt').write_text("Implement a two-input AND gate.\n")
        (self.src / 'or.v').write_text(OR_CODE)
        (self.src / 'xor.v').write_text(XOR_CODE)
        (self.src / 'broken.v').write_text(BROKEN_CODE)
        (self.src / 'dup.v').write_text(AND_CODE.replace('\n', '\n\n  '))
        (self.src / 'notes.md').write_text("not Verilog")


class IngestTestCase(CorpusDirMixin, SimpleTestCase):
    """Test cases for the compile-filter ingest stage"""

    def test_valid_broken_and_duplicate(self):
        """Test three valid files survive, the broken and duplicate ones are logged"""
        result = ingest_corpus([self.src], Toolchain(), generator=HeuristicGenerator())
        self.assertEqual([r.code for r in result.records], [AND_CODE, OR_CODE, XOR_CODE])
        reasons = {Path(r.source).name: r.reason for r in result.rejections}
        self.assertEqual(reasons, {'broken.v': SYNTAX_ERROR, 'dup.v': DUPLICATE})
        self.assertFalse(result.aborted)

    def test_sidecar_instruction_wins(self):
        """Test a sidecar text file supplies the instruction"""
        result = ingest_corpus([self.src / 'and.v'], Toolchain(), generator=HeuristicGenerator())
        self.assertEqual(result.records[0].instruction, "Implement a two-input AND gate.")
        self.assertEqual(result.records[0].id, record_id(AND_CODE))

    def test_generated_instruction(self):
        """Test the generator describes files without a sidecar"""
        result = ingest_corpus([self.src / 'or.v'], Toolchain(), generator=HeuristicGenerator())
        self.assertIn('or2', result.records[0].instruction)

    def test_no_instruction_source(self):
        """Test a file without sidecar or generator is rejected"""
        result = ingest_corpus([self.src / 'or.v'], Toolchain())
        self.assertEqual(result.records, [])
        self.assertEqual(result.rejections[0].reason, NO_INSTRUCTION)

    def test_missing_path(self):
        """Test a missing source is an io_error rejection"""
        result = ingest_corpus([self.dir / 'missing'], Toolchain())
        self.assertEqual(result.rejections[0].reason, IO_ERROR)

    def test_pool_size_does_not_change_output(self):
        """Test a concurrent ingest matches a sequential one"""
        from toolchain.executor import BatchExecutor
        sequential = ingest_corpus([self.src], Toolchain(), generator=HeuristicGenerator())
        parallel = ingest_corpus([self.src], Toolchain(), generator=HeuristicGenerator(), executor=BatchExecutor(4))
        self.assertEqual(sequential, parallel)


class ColdStartTestCase(SimpleTestCase):
    """Test cases for reasoning-chain generation"""

    def setUp(self):
        self.records = [base_record(AND_CODE), base_record(OR_CODE), base_record(XOR_CODE)]

    def test_heuristic_reasoning_renders(self):
        """Test every record renders into a well-formed response"""
        result = generate_cold_start(self.records, HeuristicGenerator())
        self.assertEqual(len(result.records), 3)
        for record in result.records:
            parsed = parse_response(record.response)
            self.assertTrue(parsed.format_ok)
            self.assertEqual(parsed.code.strip(), record.code.strip())

    def test_stray_closing_tag_dropped(self):
        """Test reasoning containing </think> fails twice and is dropped"""
        generator = AttemptGenerator(["step1 </think> oops", "step1 </think> again"])
        result = generate_cold_start(self.records[:1], generator)
        self.assertEqual(result.records, [])
        self.assertEqual(result.rejections[0].reason, FORMAT_CHECK_FAILED)
        self.assertEqual([p.attempt for p in generator.prompts], [1, 2])

    def test_retry_recovers(self):
        """Test a good second attempt is kept"""
        generator = AttemptGenerator(["", "step1: AND the inputs"])
        result = generate_cold_start(self.records[:1], generator)
        self.assertEqual(result.records[0].reasoning, "step1: AND the inputs")

    def test_generator_outage_aborts(self):
        """Test records before the outage are kept and the run is marked aborted"""
        generator = ScriptedGenerator({f"{REASONING}:{self.records[0].id}": "step1"})
        result = generate_cold_start(self.records, generator)
        self.assertTrue(result.aborted)
        self.assertEqual([r.id for r in result.records], [self.records[0].id])


class PairingTestCase(SimpleTestCase):
    """Test cases for testbench generation and validation"""

    def pair(self, table, code=AND_CODE):
        record = base_record(code)
        generator = ScriptedGenerator({f"{TESTBENCH}:{record.id}": table})
        return pair_testbenches([record], generator, Toolchain())

    def test_correct_table_kept(self):
        """Test a table the code passes produces a pair"""
        result = self.pair(AND_TABLE)
        self.assertIsInstance(result.records[0], PairedRecord)
        self.assertEqual(result.records[0].testbench.case_count(), 4)

    def test_wrong_behaviour_rejected(self):
        """Test an OR table against AND code"""
        result = self.pair(OR_TABLE)
        self.assertEqual(result.rejections[0].reason, TESTBENCH_FAILED)
        self.assertIn('MISMATCH', result.rejections[0].detail)

    def test_too_few_cases(self):
        """Test a 2-row table is below the minimum"""
        table = "ports: in a b -> out y\na=0 b=0 -> y=0\na=1 b=1 -> y=1\n"
        self.assertEqual(self.pair(table).rejections[0].reason, TESTBENCH_CASE_COUNT)

    def test_malformed_table(self):
        """Test unparsable generator output"""
        self.assertEqual(self.pair("ports: in a b\n").rejections[0].reason, TESTBENCH_INVALID)

    def test_heuristic_tables_pass_their_code(self):
        """Test tables generated from the code pass it"""
        adder = ("module add4(input [3:0] a, input [3:0] b, output [4:0] s);\n"
                 "  assign s = a + b;\nendmodule\n")
        records = [base_record(code) for code in (AND_CODE, OR_CODE, adder)]
        result = pair_testbenches(records, HeuristicGenerator(), Toolchain())
        self.assertEqual(len(result.records), 3)
        self.assertEqual(result.records[0].testbench.case_count(), 4)
        self.assertEqual(result.records[2].testbench.case_count(), 8)


class AnnotateTestCase(SimpleTestCase):
    """Test cases for reference PPA annotation"""

    def test_and_gate_reference(self):
        """Test the AND gate gets its unit-cost PPA"""
        bench = Testbench.from_text(AND_TABLE)
        record = PairedRecord(record_id(AND_CODE), 'AND', AND_CODE, bench)
        result = annotate_ppa([record], Toolchain())
        self.assertIsInstance(result.records[0], RlRecord)
        self.assertEqual(result.records[0].reference_ppa, PpaMetrics(0.01, 1.0, 0.01))
        self.assertEqual(result.records[0].testbench, bench)

    def test_synthesis_failure(self):
        """Test unsynthesizable code is dropped with the incompatibility note"""
        record = PairedRecord('x', 'broken', BROKEN_CODE, Testbench.from_text(AND_TABLE))
        result = annotate_ppa([record], Toolchain())
        self.assertEqual(result.records, [])
        self.assertEqual(result.rejections[0].reason, SYNTHESIS_FAILED)
        self.assertTrue(result.rejections[0].detail.startswith(INCOMPATIBLE))


class GeneratorTestCase(SimpleTestCase):
    """Test cases for the text generators"""

    def setUp(self):
        self.settings = GeneratorSettings(kind='external', url='http://llm.local/v1/chat/completions', backoff=1.0)
        self.prompt = Prompt(INSTRUCTION, 'abc', 'Describe and.v.', AND_CODE)

    def test_scripted_lookup_order(self):
        """Test purpose:id beats purpose beats default"""
        generator = ScriptedGenerator({'instruction:abc': 'specific', 'instruction': 'generic', 'default': 'any'})
        self.assertEqual(generator.generate(self.prompt), 'specific')
        self.assertEqual(generator.generate(Prompt(INSTRUCTION, 'zzz', '')), 'generic')
        self.assertEqual(generator.generate(Prompt(REASONING, 'zzz', '')), 'any')
        with self.assertRaises(GeneratorUnavailable):
            ScriptedGenerator({}).generate(self.prompt)

    def test_heuristic_is_deterministic(self):
        """Test the same prompt gives the same text"""
        generator = HeuristicGenerator()
        prompt = Prompt(TESTBENCH, 'abc', '', "module w(input [7:0] a, output [7:0] y); assign y = ~a; endmodule")
        self.assertEqual(generator.generate(prompt), generator.generate(prompt))

    def test_external_success(self):
        """Test a chat-completions answer is returned"""
        session = MagicMock()
        session.post.return_value.json.return_value = {'choices': [{'message': {'content': 'An AND gate.'}}]}
        with patch.dict(os.environ, {'CHIPFORGE_GENERATOR_API_KEY': 'secret'}):
            text = ExternalGenerator(self.settings, session).generate(self.prompt)
        self.assertEqual(text, 'An AND gate.')
        kwargs = session.post.call_args.kwargs
        self.assertEqual(kwargs['headers']['Authorization'], 'Bearer secret')
        self.assertIn(AND_CODE, kwargs['json']['messages'][1]['content'])

    @patch('corpus.generators.time.sleep')
    def test_external_retries_then_gives_up(self, mock_sleep):
        """Test bounded retries with exponential backoff"""
        session = MagicMock()
        session.post.side_effect = requests.ConnectionError("refused")
        with self.assertRaises(GeneratorUnavailable):
            ExternalGenerator(self.settings, session).generate(self.prompt)
        self.assertEqual(session.post.call_count, 3)
        self.assertEqual(mock_sleep.call_args_list, [call(1.0), call(2.0)])

    @patch('corpus.generators.time.sleep')
    def test_external_malformed_body(self, mock_sleep):
        """Test a body without choices counts as a failure"""
        session = MagicMock()
        session.post.return_value.json.return_value = {'error': 'overloaded'}
        with self.assertRaises(GeneratorUnavailable):
            ExternalGenerator(self.settings, session).generate(self.prompt)

    def test_settings_validation(self):
        """Test inconsistent generator settings"""
        for kwargs in ({'kind': 'scripted'}, {'kind': 'external'}, {'min_cases': 5, 'max_cases': 4}, {'retries': 0}):
            with self.assertRaises(ValueError):
                GeneratorSettings(**kwargs)


class RecordSerializerTestCase(SimpleTestCase):
    """Test cases for record files"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / 'rl.jsonl'
        self.record = RlRecord('and2', 'AND', Testbench.from_text(AND_TABLE), PpaMetrics(0.01, 1.0, 0.01), AND_CODE)

    def test_round_trip(self):
        """Test an RL record survives a file round trip"""
        dump_records([self.record], self.path, RlRecordSerializer)
        line = json.loads(self.path.read_text())
        self.assertEqual(line['ppa_ref.area_um2'], 1.0)
        self.assertEqual(line['testbench_kind'], 'vector_table')
        self.assertEqual(load_records(self.path, RlRecordSerializer), [self.record])

    def test_case_bounds_enforced(self):
        """Test the testbench case count is validated on load"""
        dump_records([self.record], self.path, RlRecordSerializer)
        with self.assertRaises(ValidationError):
            load_records(self.path, RlRecordSerializer, context={'case_bounds': (5, 20)})

    def test_non_positive_ppa_rejected(self):
        """Test reference PPA must be positive"""
        data = {'id': 'x', 'instruction': 'i', 'testbench': AND_TABLE,
                'ppa_ref.delay_ns': 0.0, 'ppa_ref.area_um2': 1.0, 'ppa_ref.power_w': 0.01}
        self.assertFalse(RlRecordSerializer(data=data).is_valid())


class DataCommandTestCase(CorpusDirMixin, SimpleTestCase):
    """Test cases for the data management command"""

    def run_stage(self, *args):
        call_command('data', *[str(a) for a in args], stdout=StringIO(), stderr=StringIO())

    def pipeline(self, name, *extra):
        out = self.dir / name
        out.mkdir()
        self.run_stage('ingest', '--src', self.src, '--out', out / 'base.jsonl', *extra)
        self.run_stage('coldstart', '--in', out / 'base.jsonl', '--out', out / 'cold.jsonl', *extra)
        self.run_stage('testbench', '--in', out / 'base.jsonl', '--out', out / 'paired.jsonl', *extra)
        self.run_stage('ppa', '--in', out / 'paired.jsonl', '--out', out / 'rl.jsonl', *extra)
        return {path.name: path.read_bytes() for path in sorted(out.iterdir())}

    def test_full_pipeline(self):
        """Test every stage writes its records and rejection log"""
        files = self.pipeline('run')
        self.assertEqual(len(files['base.jsonl'].splitlines()), 3)
        self.assertEqual(len(files['base.jsonl.rejects.jsonl'].splitlines()), 2)
        self.assertEqual(len(files['rl.jsonl'].splitlines()), 3)
        records = load_records(self.dir / 'run' / 'rl.jsonl', RlRecordSerializer)
        self.assertEqual(records[0].reference_ppa, PpaMetrics(0.01, 1.0, 0.01))

    def test_deterministic_across_pool_sizes(self):
        """Test reruns are byte-identical whatever the pool size"""
        self.assertEqual(self.pipeline('one', '--jobs', '1'), self.pipeline('four', '--jobs', '4'))

    def test_generator_outage_exit_code(self):
        """Test an unavailable generator exits with status 3 after writing what it has"""
        script = self.dir / 'script.json'
        script.write_text(json.dumps({}))
        base = self.dir / 'base.jsonl'
        self.run_stage('ingest', '--src', self.src, '--out', base)
        with override_settings(CHIPFORGE_GENERATOR='scripted', CHIPFORGE_GENERATOR_SCRIPT=str(script)):
            with self.assertRaises(CommandError) as cm:
                self.run_stage('coldstart', '--in', base, '--out', self.dir / 'cold.jsonl')
        self.assertEqual(cm.exception.returncode, 3)
        self.assertEqual((self.dir / 'cold.jsonl').read_text(), '')

    def test_unknown_stage(self):
        """Test a bad subcommand is a usage error"""
        with self.assertRaises(CommandError) as cm:
            self.run_stage('bogus')
        self.assertEqual(cm.exception.returncode, 1)
