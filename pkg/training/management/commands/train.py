import json
import logging
from dataclasses import replace
from pathlib import Path

from chipforge.commands import ChipforgeCommand, positive_int
from rewards.scoring import ResponseScorer
from toolchain.executor import BatchExecutor
from toolchain.pipeline import Toolchain

from ...grpo import GrpoTrainer
from ...suites import demo_suite, load_suite, write_suite

logger = logging.getLogger(__name__)

DEMO = 'demo'


def gnuplot_script(curve, title):
    """Self-contained gnuplot script with the curve inlined as a data block."""
    lines = [
        f'set title "{title}"',
        'set xlabel "step"',
        'set ylabel "mean reward"',
        'set y2label "mean KL"',
        'set y2tics',
        'set ytics nomirror',
        'set key outside',
        '$curve << EOD',
    ]
    lines.extend(f"{p.step} {p.mean_reward:.6f} {p.mean_kl:.6g} {p.best_candidate_prob:.6f}" for p in curve)
    lines.extend([
        'EOD',
        "plot $curve using 1:2 with lines title 'reward' axes x1y1, \\",
        "     $curve using 1:3 with lines title 'KL' axes x1y2",
    ])
    return '\n'.join(lines) + '\n'


class Command(ChipforgeCommand):
    help = 'Run toy-policy GRPO against the hierarchical reward and write the training curves'

    def add_arguments(self, parser):
        parser.add_argument('--suite', required=True, help=f"Task suite JSONL, or '{DEMO}' for the bundled suite")
        parser.add_argument('--out-curves', required=True, help='JSONL curve records, one per step')
        parser.add_argument('--gnuplot', help='Also write a gnuplot script plotting reward and KL')
        parser.add_argument('--export-suite', help='Also write the task suite as JSONL, e.g. to edit a copy of the demo')
        parser.add_argument('--steps', type=int, help='Override CHIPFORGE_GRPO_STEPS')
        parser.add_argument('--beta', type=float, help='Override CHIPFORGE_GRPO_BETA')
        parser.add_argument('--epsilon', type=float, help='Override CHIPFORGE_GRPO_EPSILON')
        parser.add_argument('--group-size', type=positive_int, help='Override CHIPFORGE_GRPO_GROUP_SIZE')
        parser.add_argument('--learning-rate', type=float, help='Override CHIPFORGE_GRPO_LEARNING_RATE')

    def handle(self, *args, **options):
        conf = self.app_settings(options)
        overrides = {
            field: options[option]
            for field, option in (
                ('steps', 'steps'),
                ('beta', 'beta'),
                ('epsilon', 'epsilon'),
                ('group_size', 'group_size'),
                ('learning_rate', 'learning_rate'),
            )
            if options[option] is not None
        }
        config = replace(conf.grpo, **overrides)

        tasks = demo_suite(conf.cost_model) if options['suite'] == DEMO else load_suite(options['suite'])
        if options['export_suite']:
            write_suite(tasks, options['export_suite'])
        scorer = ResponseScorer(Toolchain(conf.toolchain), conf.reward)

        def reward_fn(task, index):
            return scorer.score(task.candidates[index], task.testbench, task.reference_ppa).breakdown.total

        trainer = GrpoTrainer(tasks, reward_fn, config, BatchExecutor(conf.toolchain.pool_size))
        result = trainer.train()

        with Path(options['out_curves']).open('w') as handle:
            for point in result.curve:
                handle.write(json.dumps(point.as_record(), sort_keys=True) + '\n')
        if options['gnuplot']:
            Path(options['gnuplot']).write_text(gnuplot_script(result.curve, f"GRPO beta={config.beta:g}"))

        for task in tasks:
            self.stdout.write(
                f"{task.id}: best candidate {result.best_candidates[task.id]} "
                f"p={result.best_probability(task.id):.4f} tv={result.total_variation(task.id):.4f}"
            )
        logger.info(f"trained {config.steps} steps over {len(tasks)} tasks")
