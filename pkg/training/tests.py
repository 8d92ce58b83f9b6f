import json
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from rewards.scoring import ResponseScorer
from toolchain.pipeline import Toolchain

from .grpo import (
    GrpoConfig,
    GrpoTrainer,
    Group,
    PolicyParams,
    Task,
    compute_advantages,
    grpo_objective,
    kl_estimate,
    objective_and_gradient,
    sample_group,
)
from .grpo.objective import policy_terms
from .grpo.policy import log_softmax
from .suites import EFFICIENT, demo_suite, load_suite, write_suite


def scorer_reward(tasks):
    scorer = ResponseScorer(Toolchain())

    def reward_fn(task, index):
        return scorer.score(task.candidates[index], task.testbench, task.reference_ppa).breakdown.total

    return reward_fn


def table_reward(values):
    """Reward function reading a fixed {task_id: [reward per candidate]} table."""
    def reward_fn(task, index):
        return values[task.id][index]

    return reward_fn


class AdvantageTestCase(SimpleTestCase):
    """Test cases for group-relative advantages and the KL estimator"""

    def test_three_rewards(self):
        """Test mean 2 and population std sqrt(2/3)"""
        np.testing.assert_allclose(compute_advantages([1.0, 2.0, 3.0]), [-1.2247449, 0.0, 1.2247449], rtol=1e-6)

    def test_two_rewards(self):
        """Test the best and worst full-pipeline rewards"""
        np.testing.assert_allclose(compute_advantages([0.0, 2.4]), [-1.0, 1.0])

    def test_no_spread(self):
        """Test identical rewards give zero advantages"""
        self.assertEqual(compute_advantages([0.7] * 5).tolist(), [0.0] * 5)

    def test_normalised_groups(self):
        """Test advantages have mean 0 and population std 1 whenever the group has spread"""
        rng = np.random.default_rng(5)
        for _ in range(100):
            rewards = rng.uniform(0.0, 2.4, size=int(rng.integers(2, 17)))
            advantages = compute_advantages(rewards)
            self.assertLess(abs(advantages.mean()), 1e-9)
            self.assertLess(abs(advantages.std() - 1.0), 1e-9)
        for value in rng.uniform(0.0, 2.4, size=10):
            self.assertFalse(np.any(compute_advantages([value] * 8)))

    def test_clipped_terms(self):
        """Test the clip rule on both advantage signs"""
        np.testing.assert_allclose(policy_terms(np.array([1.5]), np.array([1.0]), 0.2), [1.2])
        np.testing.assert_allclose(policy_terms(np.array([0.5]), np.array([-1.0]), 0.2), [-0.8])
        np.testing.assert_allclose(policy_terms(np.array([3.0]), np.array([-1.0]), 0.2), [-3.0])

    def test_clipping_bound(self):
        """Test every term stays within (1 + epsilon) |A| where the clip can bind"""
        rng = np.random.default_rng(17)
        for _ in range(200):
            epsilon = float(rng.uniform(0.05, 0.5))
            ratio = rng.uniform(0.0, 3.0, size=16)
            advantages = rng.normal(size=16)
            terms = policy_terms(ratio, advantages, epsilon)
            bound = (1 + epsilon) * np.abs(advantages) + 1e-12
            self.assertTrue(np.all(terms <= bound))
            bounded = (advantages >= 0) | (ratio <= 1 + epsilon)
            self.assertTrue(np.all(terms[bounded] >= -bound[bounded]))

    def test_kl_zero_on_reference(self):
        """Test the estimator vanishes when the policies agree"""
        logp = np.log([0.2, 0.5, 0.3])
        self.assertEqual(kl_estimate(logp, logp).tolist(), [0.0, 0.0, 0.0])

    def test_kl_non_negative(self):
        """Test the estimator is never negative"""
        rng = np.random.default_rng(0)
        for _ in range(50):
            self.assertTrue(np.all(kl_estimate(rng.normal(size=8), rng.normal(size=8)) >= 0))


class GradientCheckTestCase(SimpleTestCase):
    """Test cases comparing the analytic gradient with finite differences"""

    H = 1e-5
    KINK = 1e-3

    def random_case(self, rng):
        size = int(rng.integers(2, 7))
        logits = rng.normal(scale=1.0, size=size)
        old = logits + rng.normal(scale=0.3, size=size)
        ref = rng.normal(scale=1.0, size=size)
        outputs = rng.integers(size, size=int(rng.integers(2, 12)))
        group = Group(
            task_id='t',
            outputs=outputs,
            logp_old=log_softmax(old)[outputs],
            logp_ref=log_softmax(ref)[outputs],
            advantages=rng.normal(size=len(outputs)),
        )
        return logits, group, float(rng.uniform(0.0, 0.5)), float(rng.uniform(0.05, 0.5))

    def near_kink(self, logits, group, epsilon):
        ratio = np.exp(log_softmax(logits)[group.outputs] - group.logp_old)
        return np.any(np.abs(ratio - (1 - epsilon)) < self.KINK) or np.any(np.abs(ratio - (1 + epsilon)) < self.KINK)

    def test_central_differences(self):
        """Test at least 100 random configurations away from the clip boundary"""
        rng = np.random.default_rng(1234)
        checked = 0
        while checked < 150:
            logits, group, beta, epsilon = self.random_case(rng)
            if self.near_kink(logits, group, epsilon):
                continue
            value, grad = objective_and_gradient(logits, group, beta, epsilon)
            numeric = np.zeros_like(logits)
            for i in range(len(logits)):
                step = np.zeros_like(logits)
                step[i] = self.H
                up, _ = objective_and_gradient(logits + step, group, beta, epsilon)
                down, _ = objective_and_gradient(logits - step, group, beta, epsilon)
                numeric[i] = (up - down) / (2 * self.H)
            error = np.linalg.norm(numeric - grad) / max(np.linalg.norm(grad), np.linalg.norm(numeric), 1e-12)
            self.assertLess(error, 1e-5)
            checked += 1

    def test_objective_matches_value(self):
        """Test the standalone objective agrees with the value returned with the gradient"""
        rng = np.random.default_rng(99)
        logits, group, beta, epsilon = self.random_case(rng)
        group.logp_new = log_softmax(logits)[group.outputs]
        value, _ = objective_and_gradient(logits, group, beta, epsilon)
        self.assertAlmostEqual(grpo_objective(group, beta, epsilon), value)


class SamplingTestCase(SimpleTestCase):
    """Test cases for group sampling from the categorical policy"""

    def test_frequencies_match_probabilities(self):
        """Test empirical frequencies with a chi-square bound"""
        task = Task('t', 'x', ('a', 'b', 'c', 'd'))
        policy = PolicyParams({'t': np.log([0.1, 0.2, 0.3, 0.4])})
        group = sample_group(policy, task, 20000, np.random.default_rng(5))
        observed = np.bincount(group.outputs, minlength=4)
        expected = 20000 * np.array([0.1, 0.2, 0.3, 0.4])
        chi_square = float(np.sum((observed - expected) ** 2 / expected))
        self.assertLess(chi_square, 16.27)

    def test_group_size_validated(self):
        """Test a group needs two samples"""
        task = Task('t', 'x', ('a', 'b'))
        with self.assertRaises(ValueError):
            sample_group(PolicyParams.uniform([task]), task, 1, np.random.default_rng(0))

    def test_params_are_immutable(self):
        """Test updates return a new policy"""
        task = Task('t', 'x', ('a', 'b'))
        base = PolicyParams.uniform([task])
        moved = base.with_logits('t', np.array([1.0, 0.0]))
        self.assertEqual(base.logits('t').tolist(), [0.0, 0.0])
        self.assertGreater(moved.total_variation(base, 't'), 0.0)
        with self.assertRaises(ValueError):
            base.logits('t')[0] = 3.0


class GrpoConfigTestCase(SimpleTestCase):
    """Test cases for hyperparameter validation"""

    def test_defaults(self):
        """Test the documented defaults"""
        config = GrpoConfig()
        self.assertEqual((config.group_size, config.epsilon, config.beta, config.seed), (10, 0.2, 0.01, 7))

    def test_invalid_values(self):
        """Test each constraint"""
        for kwargs in ({'group_size': 1}, {'epsilon': 0.0}, {'epsilon': 1.0}, {'beta': -0.1}, {'std_floor': 0.0}):
            with self.assertRaises(ValueError):
                GrpoConfig(**kwargs)


class TrainerTestCase(SimpleTestCase):
    """Test cases for the GRPO training loop"""

    def test_two_candidate_bandit(self):
        """Test probability mass moves to the 2.4 candidate"""
        task = Task('t', 'x', ('good', 'format only'))
        config = GrpoConfig(steps=200)
        result = GrpoTrainer([task], table_reward({'t': [2.4, 0.1]}), config).train()
        self.assertEqual(result.best_candidates['t'], 0)
        self.assertGreater(result.best_probability('t'), 0.9)

    def test_demo_suite_converges(self):
        """Test every demo task ends with most mass on its efficient candidate"""
        tasks = demo_suite()
        result = GrpoTrainer(tasks, scorer_reward(tasks), GrpoConfig()).train()
        for task in tasks:
            self.assertEqual(result.best_candidates[task.id], EFFICIENT)
            self.assertGreater(result.best_probability(task.id), 0.9, task.id)
        rewards = [point.mean_reward for point in result.curve]
        tenth = len(rewards) // 10
        self.assertGreaterEqual(np.mean(rewards[-tenth:]) - np.mean(rewards[:tenth]), 0.5)

    def test_large_beta_stays_near_reference(self):
        """Test a heavy KL penalty keeps the policy close to the start"""
        tasks = demo_suite()
        config = GrpoConfig(beta=1000.0, steps=500)
        result = GrpoTrainer(tasks, scorer_reward(tasks), config).train()
        for task in tasks:
            self.assertLess(result.total_variation(task.id), 0.05)

    def test_zero_steps(self):
        """Test no steps leaves the reference policy"""
        tasks = demo_suite()
        result = GrpoTrainer(tasks, scorer_reward(tasks), GrpoConfig(steps=0)).train()
        self.assertEqual(result.curve, [])
        for task in tasks:
            self.assertEqual(result.total_variation(task.id), 0.0)

    def test_seeded_runs_repeat(self):
        """Test the same seed gives the same curve"""
        task = Task('t', 'x', ('a', 'b', 'c'))
        rewards = table_reward({'t': [1.0, 0.0, 0.5]})
        config = GrpoConfig(steps=30)
        first = GrpoTrainer([task], rewards, config).train()
        second = GrpoTrainer([task], rewards, config).train()
        self.assertEqual(first.curve, second.curve)
        third = GrpoTrainer([task], rewards, replace(config, seed=8)).train()
        self.assertNotEqual(first.curve, third.curve)

    def test_each_reward_scored_once(self):
        """Test the reward function sees each candidate once"""
        task = Task('t', 'x', ('a', 'b', 'c'))
        calls = []

        def reward_fn(t, index):
            calls.append(index)
            return float(index)

        GrpoTrainer([task], reward_fn, GrpoConfig(steps=20)).train()
        self.assertEqual(sorted(calls), [0, 1, 2])


class SuiteTestCase(SimpleTestCase):
    """Test cases for task-suite files"""

    def test_demo_suite_shape(self):
        """Test five tasks of four candidates"""
        tasks = demo_suite()
        self.assertEqual([task.id for task in tasks], ['and2', 'adder8', 'mux4', 'cmp4', 'inc4'])
        for task in tasks:
            self.assertEqual(len(task.candidates), 4)
            self.assertTrue(task.reference_ppa.is_positive())

    def test_file_round_trip(self):
        """Test a written suite loads back unchanged"""
        tasks = demo_suite()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'suite.jsonl'
            write_suite(tasks, path)
            self.assertEqual(load_suite(path), tasks)


class TrainCommandTestCase(SimpleTestCase):
    """Test cases for the train management command"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_demo_curves(self):
        """Test one curve record per step and a gnuplot script"""
        curves, plot = self.dir / 'curves.jsonl', self.dir / 'curves.gp'
        out = StringIO()
        call_command('train', '--suite', 'demo', '--out-curves', str(curves), '--gnuplot', str(plot),
                     '--steps', '25', stdout=out, stderr=StringIO())
        records = [json.loads(line) for line in curves.read_text().splitlines()]
        self.assertEqual([r['step'] for r in records], list(range(25)))
        self.assertEqual(set(records[0]), {'step', 'task_id', 'mean_reward', 'mean_kl', 'best_candidate_prob'})
        self.assertIn('$curve << EOD', plot.read_text())
        self.assertEqual(len(out.getvalue().splitlines()), 5)
        self.assertTrue(out.getvalue().startswith('and2: best candidate 0 '))

    def test_suite_file(self):
        """Test a suite file in place of the demo"""
        suite = self.dir / 'suite.jsonl'
        write_suite(demo_suite()[:1], suite)
        call_command('train', '--suite', str(suite), '--out-curves', str(self.dir / 'c.jsonl'),
                     '--steps', '5', stdout=StringIO(), stderr=StringIO())
        self.assertEqual(len((self.dir / 'c.jsonl').read_text().splitlines()), 5)

    def test_export_suite(self):
        """Test the demo suite can be written out and trained on again"""
        suite = self.dir / 'demo.jsonl'
        call_command('train', '--suite', 'demo', '--out-curves', str(self.dir / 'c.jsonl'), '--export-suite', str(suite),
                     '--steps', '0', stdout=StringIO(), stderr=StringIO())
        exported = load_suite(suite)
        self.assertEqual([task.id for task in exported], [task.id for task in demo_suite()])
        self.assertEqual(exported[0].candidates, demo_suite()[0].candidates)

    def test_missing_suite(self):
        """Test an unreadable suite is an input error"""
        with self.assertRaises(CommandError) as cm:
            call_command('train', '--suite', str(self.dir / 'nope.jsonl'), '--out-curves', str(self.dir / 'c.jsonl'),
                         stdout=StringIO(), stderr=StringIO())
        self.assertEqual(cm.exception.returncode, 1)

    def test_bad_group_size(self):
        """Test an invalid override is rejected as a usage error"""
        with self.assertRaises(CommandError) as cm:
            call_command('train', '--suite', 'demo', '--out-curves', str(self.dir / 'c.jsonl'),
                         '--group-size', '0', stdout=StringIO(), stderr=StringIO())
        self.assertEqual(cm.exception.returncode, 1)
