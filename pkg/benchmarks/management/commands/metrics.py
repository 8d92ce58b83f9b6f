import json
from pathlib import Path

from chipforge.commands import ChipforgeCommand, UsageParser

from ...metrics import CONVENTIONS, edap_drops, evaluable_count, pass_at_k, win_tie_loss
from ...table import comparison_frame, comparison_records, design_results, load_table, render_comparison


class Command(ChipforgeCommand):
    help = 'Benchmark analytics: pass@k, win-tie-loss and EDAP drop against reference designs'

    def add_arguments(self, parser):
        analyses = parser.add_subparsers(dest='analysis', required=True, parser_class=UsageParser)

        passk = analyses.add_parser('passk', help='Unbiased pass@k')
        passk.add_argument('--n', type=int, required=True, help='Samples generated')
        passk.add_argument('--c', type=int, required=True, help='Correct samples')
        passk.add_argument('--k', type=int, required=True, help='Budget k')
        passk.add_argument('--exact', action='store_true', help='Print the exact fraction as well')

        for name, text in (
            ('wtl', 'Win-tie-loss against the reference designs'),
            ('edap-drop', 'EDAP drop under every averaging convention'),
            ('table', 'Per-design comparison table'),
        ):
            sub = analyses.add_parser(name, help=text)
            sub.add_argument('--table', help='Comparison table (TSV); defaults to the bundled one')
            sub.add_argument('--model', default='chipseek', help='Model column to compare')
            sub.add_argument('--tolerance', type=float, help='Relative tie tolerance')
            if name == 'table':
                sub.add_argument('--out', help='Write one JSON record per design here')
            self.add_global_arguments(sub, nested=True)
        self.add_global_arguments(passk, nested=True)

    def handle(self, *args, **options):
        conf = self.app_settings(options)
        analysis = options['analysis']
        if analysis == 'passk':
            return self.passk(options)

        tolerance = options['tolerance'] if options['tolerance'] is not None else conf.wtl_tolerance
        results = design_results(load_table(options['table']), options['model'])
        if analysis == 'wtl':
            outcome = win_tie_loss(results, tolerance)
            self.stdout.write(f"model: {options['model']}")
            self.stdout.write(f"designs: {len(results)}")
            self.stdout.write(f"evaluable: {evaluable_count(results)}")
            for key in ('win', 'tie', 'loss'):
                self.stdout.write(f"{key}: {outcome.counts[key]}")
        elif analysis == 'edap-drop':
            drops = edap_drops(results, tolerance)
            self.stdout.write(f"model: {options['model']}")
            for convention in CONVENTIONS:
                self.stdout.write(f"{convention}: {drops[convention]:.2f}%")
        else:
            frame = comparison_frame(results, tolerance)
            self.stdout.write(render_comparison(frame))
            if options['out']:
                with Path(options['out']).open('w') as handle:
                    for record in comparison_records(frame):
                        handle.write(json.dumps(record, sort_keys=True) + '\n')

    def passk(self, options):
        n, c, k = options['n'], options['c'], options['k']
        self.stdout.write(f"{pass_at_k(n, c, k):.6f}")
        if options['exact']:
            self.stdout.write(str(pass_at_k(n, c, k, exact=True)))
