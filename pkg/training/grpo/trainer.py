"""
GRPO loop over the categorical toy policy.

Each step samples one task uniformly, snapshots the old policy, samples a
group, scores it, normalises advantages and takes `inner_epochs` ascent
steps on the clipped surrogate. The reference policy is the initial one.
"""

import logging
import threading
from dataclasses import dataclass
from typing import List

import numpy as np

from toolchain.executor import BatchExecutor

from .objective import compute_advantages, grpo_objective, kl_estimate, objective_and_gradient
from .policy import PolicyParams, sample_group

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 20


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 10
    epsilon: float = 0.2
    beta: float = 0.01
    learning_rate: float = 0.5
    steps: int = 500
    inner_epochs: int = 1
    std_floor: float = 1e-8
    max_grad_norm: float = 1.0
    seed: int = 7

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group size G must be >= 2")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.std_floor <= 0:
            raise ValueError("std_floor must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.steps < 0 or self.inner_epochs < 1:
            raise ValueError("steps must be >= 0 and inner_epochs >= 1")
        if self.max_grad_norm <= 0:
            raise ValueError("max_grad_norm must be > 0")


@dataclass(frozen=True)
class CurvePoint:
    step: int
    task_id: str
    mean_reward: float
    mean_kl: float
    best_candidate_prob: float

    def as_record(self):
        return {
            'step': self.step,
            'task_id': self.task_id,
            'mean_reward': self.mean_reward,
            'mean_kl': self.mean_kl,
            'best_candidate_prob': self.best_candidate_prob,
        }


@dataclass(frozen=True)
class TrainResult:
    policy: PolicyParams
    reference: PolicyParams
    curve: List[CurvePoint]
    best_candidates: dict

    def best_probability(self, task_id):
        return float(self.policy.probs(task_id)[self.best_candidates[task_id]])

    def total_variation(self, task_id):
        return self.policy.total_variation(self.reference, task_id)


class RewardCache:
    """Memoises reward_fn(task, index); candidates are fixed so rewards are too."""

    def __init__(self, reward_fn, executor):
        self.reward_fn = reward_fn
        self.executor = executor
        self._values = {}
        self._lock = threading.Lock()

    def fetch(self, task, indices):
        missing = sorted({int(i) for i in indices} - {k for t, k in self._values if t == task.id})
        if missing:
            computed = self.executor.map(lambda i: self.reward_fn(task, i), missing)
            with self._lock:
                self._values.update({(task.id, i): r for i, r in zip(missing, computed)})
        return np.array([self._values[(task.id, int(i))] for i in indices], dtype=float)

    def warm(self, tasks):
        jobs = [(task, i) for task in tasks for i in range(len(task.candidates))]
        values = self.executor.map(lambda job: self.reward_fn(*job), jobs)
        with self._lock:
            self._values.update({(task.id, i): r for (task, i), r in zip(jobs, values)})


def ascent_step(logits, group, config):
    """One clipped-gradient step with backtracking so the surrogate actually improves."""
    value, grad = objective_and_gradient(logits, group, config.beta, config.epsilon)
    norm = float(np.linalg.norm(grad))
    if norm == 0.0:
        return logits
    if norm > config.max_grad_norm:
        grad = grad * (config.max_grad_norm / norm)
    slope = float(grad @ grad)
    step = config.learning_rate
    for _ in range(MAX_HALVINGS):
        candidate = logits + step * grad
        trial, _ = objective_and_gradient(candidate, group, config.beta, config.epsilon)
        if trial >= value + ARMIJO_C * step * slope:
            return candidate
        step /= 2
    return logits


class GrpoTrainer:

    def __init__(self, tasks, reward_fn, config=None, executor=None):
        if not tasks:
            raise ValueError("at least one task is required")
        self.tasks = list(tasks)
        self.config = config or GrpoConfig()
        self.rewards = RewardCache(reward_fn, executor or BatchExecutor(1))

    def best_candidates(self):
        best = {}
        for task in self.tasks:
            values = self.rewards.fetch(task, range(len(task.candidates)))
            best[task.id] = int(np.argmax(values))
        return best

    def train(self, on_step=None):
        config = self.config
        rng = np.random.default_rng(config.seed)
        self.rewards.warm(self.tasks)
        best = self.best_candidates()

        reference = PolicyParams.uniform(self.tasks)
        policy = reference
        curve = []
        for step in range(config.steps):
            task = self.tasks[int(rng.integers(len(self.tasks)))]
            old = policy
            group = sample_group(old, task, config.group_size, rng, policy_ref=reference)
            group.rewards = self.rewards.fetch(task, group.outputs)
            group.advantages = compute_advantages(group.rewards, config.std_floor)

            logits = np.array(old.logits(task.id))
            for _ in range(config.inner_epochs):
                logits = ascent_step(logits, group, config)
            policy = policy.with_logits(task.id, logits)

            group.logp_new = policy.log_probs(task.id)[group.outputs]
            point = CurvePoint(
                step=step,
                task_id=task.id,
                mean_reward=float(np.mean(group.rewards)),
                mean_kl=float(np.mean(kl_estimate(group.logp_new, group.logp_ref))),
                best_candidate_prob=float(policy.probs(task.id)[best[task.id]]),
            )
            curve.append(point)
            if on_step is not None:
                on_step(point, group)
            logger.debug(
                f"step {step} task {task.id}: reward {point.mean_reward:.3f} "
                f"kl {point.mean_kl:.4g} objective {grpo_objective(group, config.beta, config.epsilon):.4f}"
            )

        return TrainResult(policy=policy, reference=reference, curve=curve, best_candidates=best)


def train(tasks, reward_fn, config=None, executor=None):
    return GrpoTrainer(tasks, reward_fn, config, executor).train()
