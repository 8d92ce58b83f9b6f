"""Categorical toy policy: one logit vector per task over its candidate pool."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from toolchain.stages import Testbench
from toolchain.verilog_mini import PpaMetrics


@dataclass(frozen=True)
class Task:
    id: str
    instruction: str
    candidates: Tuple[str, ...]
    testbench: Optional[Testbench] = None
    reference_ppa: Optional[PpaMetrics] = None

    def __post_init__(self):
        if not self.candidates:
            raise ValueError(f"task {self.id} has an empty candidate pool")


def log_softmax(logits):
    shifted = logits - np.max(logits)
    return shifted - np.log(np.sum(np.exp(shifted)))


def softmax(logits):
    return np.exp(log_softmax(logits))


def _frozen(values):
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


class PolicyParams:
    """Immutable mapping task id -> logits; updates return a new instance."""

    def __init__(self, logits):
        self._logits = {task_id: _frozen(values) for task_id, values in logits.items()}
        for task_id, values in self._logits.items():
            if values.ndim != 1 or not values.size or not np.all(np.isfinite(values)):
                raise ValueError(f"logits for {task_id} must be a non-empty finite vector")

    @classmethod
    def uniform(cls, tasks):
        return cls({task.id: np.zeros(len(task.candidates)) for task in tasks})

    @property
    def task_ids(self):
        return tuple(self._logits)

    def logits(self, task_id):
        return self._logits[task_id]

    def log_probs(self, task_id):
        return log_softmax(self._logits[task_id])

    def probs(self, task_id):
        return softmax(self._logits[task_id])

    def with_logits(self, task_id, values):
        updated = dict(self._logits)
        updated[task_id] = values
        return PolicyParams(updated)

    def total_variation(self, other, task_id):
        return 0.5 * float(np.sum(np.abs(self.probs(task_id) - other.probs(task_id))))


@dataclass
class Group:
    task_id: str
    outputs: np.ndarray
    logp_old: np.ndarray
    logp_ref: np.ndarray
    logp_new: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = field(default=None)

    @property
    def size(self):
        return len(self.outputs)


def sample_group(policy_old, task, group_size, rng, policy_ref=None):
    """Draw `group_size` candidate indices from the old policy."""
    if group_size < 2:
        raise ValueError("group size must be >= 2")
    probs = policy_old.probs(task.id)
    outputs = rng.choice(len(probs), size=group_size, p=probs)
    logp_old = policy_old.log_probs(task.id)[outputs]
    ref = policy_ref if policy_ref is not None else policy_old
    return Group(
        task_id=task.id,
        outputs=outputs,
        logp_old=logp_old,
        logp_ref=ref.log_probs(task.id)[outputs],
        logp_new=logp_old.copy(),
    )
