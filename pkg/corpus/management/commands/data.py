import logging

from django.core.management.base import CommandError

from chipforge.commands import EXIT_TOOL, ChipforgeCommand, UsageParser
from toolchain.executor import BatchExecutor
from toolchain.pipeline import Toolchain

from ...generators import get_generator
from ...processing import annotate_ppa, generate_cold_start, ingest_corpus, pair_testbenches
from ...serializers import (
    BaseRecordSerializer,
    ColdStartRecordSerializer,
    PairedRecordSerializer,
    RejectionSerializer,
    RlRecordSerializer,
    dump_records,
    load_records,
)

logger = logging.getLogger(__name__)

STAGES = {
    'ingest': 'Compile-filter raw Verilog files into base records',
    'coldstart': 'Add generated reasoning chains to base records',
    'testbench': 'Generate testbenches and keep the pairs the code passes',
    'ppa': 'Synthesize paired records and attach reference PPA',
}


class Command(ChipforgeCommand):
    help = 'Dataset pipeline: ingest | coldstart | testbench | ppa'

    def add_arguments(self, parser):
        stages = parser.add_subparsers(dest='stage', required=True, parser_class=UsageParser)
        for name, text in STAGES.items():
            sub = stages.add_parser(name, help=text)
            if name == 'ingest':
                sub.add_argument('--src', nargs='+', required=True, help='Verilog files or directories')
            else:
                sub.add_argument('--in', dest='input', required=True, help='Input records (JSONL)')
            sub.add_argument('--out', required=True, help='Output records (JSONL)')
            sub.add_argument('--rejects', help='Rejection log (JSONL); defaults to <out>.rejects.jsonl')
            self.add_global_arguments(sub, nested=True)

    def handle(self, *args, **options):
        conf = self.app_settings(options)
        stage = options['stage']
        toolchain = Toolchain(conf.toolchain)
        executor = BatchExecutor(conf.toolchain.pool_size)

        if stage == 'ingest':
            result = ingest_corpus(options['src'], toolchain, generator=get_generator(conf.generator), executor=executor)
            serializer_class = BaseRecordSerializer
        elif stage == 'coldstart':
            records = load_records(options['input'], BaseRecordSerializer)
            result = generate_cold_start(records, get_generator(conf.generator), conf.reward.format_options, executor)
            serializer_class = ColdStartRecordSerializer
        elif stage == 'testbench':
            records = load_records(options['input'], BaseRecordSerializer)
            result = pair_testbenches(
                records, get_generator(conf.generator), toolchain,
                min_cases=conf.generator.min_cases, max_cases=conf.generator.max_cases, executor=executor,
            )
            serializer_class = PairedRecordSerializer
        else:
            records = load_records(options['input'], PairedRecordSerializer)
            result = annotate_ppa(records, toolchain, executor=executor)
            serializer_class = RlRecordSerializer

        dump_records(result.records, options['out'], serializer_class)
        rejects = options['rejects'] or f"{options['out']}.rejects.jsonl"
        dump_records(result.rejections, rejects, RejectionSerializer)
        self.stderr.write(f"{stage}: kept {len(result.records)}, rejected {len(result.rejections)}")
        if result.aborted:
            raise CommandError(
                f"{stage} aborted: text generator unavailable; {len(result.records)} records written",
                returncode=EXIT_TOOL,
            )
