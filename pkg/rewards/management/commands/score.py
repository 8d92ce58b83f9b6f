import json

from django.core.management.base import CommandError

from chipforge.commands import EXIT_USAGE, ChipforgeCommand, read_text
from toolchain.pipeline import Toolchain
from toolchain.stages import Testbench
from toolchain.verilog_mini import PpaMetrics

from ...scoring import ResponseScorer


def parse_ref_ppa(value):
    try:
        delay, area, power = (float(part) for part in value.split(','))
    except ValueError:
        raise CommandError(f"--ref-ppa expects DELAY,AREA,POWER, got '{value}'", returncode=EXIT_USAGE) from None
    return PpaMetrics(delay, area, power)


class Command(ChipforgeCommand):
    help = 'Score one model response with the hierarchical reward'

    def add_arguments(self, parser):
        parser.add_argument('--response', required=True, help='File holding the raw model response')
        parser.add_argument('--testbench', help='Vector table or Verilog testbench file')
        parser.add_argument('--ref-ppa', help='Reference PPA as DELAY_NS,AREA_UM2,POWER_W')
        parser.add_argument('--json', action='store_true', help='Print the full scored record as JSON')

    def handle(self, *args, **options):
        conf = self.app_settings(options)
        response = read_text(options['response'])
        testbench = Testbench.from_text(read_text(options['testbench'])) if options['testbench'] else None
        reference = parse_ref_ppa(options['ref_ppa']) if options['ref_ppa'] else None

        scorer = ResponseScorer(Toolchain(conf.toolchain), conf.reward)
        scored = scorer.score(response, testbench, reference)

        if options['json']:
            self.stdout.write(json.dumps(scored.as_record(), sort_keys=True))
            return
        for key, value in scored.breakdown.as_record().items():
            self.stdout.write(f"{key}: {value}")
        self.stdout.write(f"stage_reached: {scored.report.stage_reached.value}")
        for stage, text in scored.report.diagnostics.items():
            if text:
                self.stderr.write(f"[{stage}] {text.splitlines()[0]}")
