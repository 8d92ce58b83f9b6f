import json
import logging
from pathlib import Path

from chipforge.commands import ChipforgeCommand
from corpus.serializers import load_records

from ...executor import BatchExecutor
from ...pipeline import Toolchain
from ...serializers import EvalTaskSerializer, eval_request

logger = logging.getLogger(__name__)


class Command(ChipforgeCommand):
    help = 'Evaluate a JSONL file of Verilog tasks concurrently; one report per line, in input order'

    def add_arguments(self, parser):
        parser.add_argument('--tasks', required=True, help='JSONL tasks: id, code, optional testbench and ppa_ref.*')
        parser.add_argument('--out', required=True, help='JSONL reports, same order as the tasks')

    def handle(self, *args, **options):
        conf = self.app_settings(options)
        tasks = load_records(options['tasks'], EvalTaskSerializer)
        requests = [eval_request(task, conf.toolchain.timeouts, conf.toolchain.backend) for task in tasks]

        toolchain = Toolchain(conf.toolchain)
        reports = BatchExecutor(conf.toolchain.pool_size).evaluate_all(toolchain, requests)

        with Path(options['out']).open('w') as handle:
            for task, report in zip(tasks, reports):
                handle.write(json.dumps({'id': task['id'], **report.to_record()}, sort_keys=True) + '\n')
        passed = sum(1 for report in reports if report.ppa is not None)
        logger.info(f"evaluated {len(reports)} tasks, {passed} reached PPA")
        self.stderr.write(f"evaluated {len(reports)} tasks -> {options['out']}")
