"""Group-relative advantages, the KL estimator and the clipped surrogate objective."""

import numpy as np

from .policy import log_softmax, softmax


def compute_advantages(rewards, std_floor=1e-8):
    """(r - mean) / population std; all zeros when the group has no spread."""
    rewards = np.asarray(rewards, dtype=float)
    std = rewards.std()
    if std < std_floor:
        return np.zeros_like(rewards)
    return (rewards - rewards.mean()) / std


def kl_estimate(logp_new, logp_ref):
    """Per-sample rho - log(rho) - 1 with rho = pi_ref / pi_new; never negative."""
    x = np.asarray(logp_ref, dtype=float) - np.asarray(logp_new, dtype=float)
    return np.maximum(np.expm1(x) - x, 0.0)


def policy_terms(ratio, advantages, epsilon):
    clipped = np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon)
    return np.minimum(ratio * advantages, clipped * advantages)


def grpo_objective(group, beta, epsilon):
    ratio = np.exp(group.logp_new - group.logp_old)
    terms = policy_terms(ratio, group.advantages, epsilon) - beta * kl_estimate(group.logp_new, group.logp_ref)
    return float(np.mean(terms))


def objective_and_gradient(logits, group, beta, epsilon):
    """
    Surrogate objective at `logits` and its analytic gradient.

    d log pi(o) / d logits = e_o - pi. The clipped branch contributes nothing
    once min() selects it outside the clip range.
    """
    logp = log_softmax(logits)
    logp_new = logp[group.outputs]
    ratio = np.exp(logp_new - group.logp_old)
    advantages = group.advantages
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantages
    ref_ratio = np.exp(group.logp_ref - logp_new)

    value = float(np.mean(np.minimum(unclipped, clipped) - beta * kl_estimate(logp_new, group.logp_ref)))

    coef = np.where(unclipped <= clipped, unclipped, 0.0) - beta * (1.0 - ref_ratio)
    pi = softmax(logits)
    size = group.size
    grad = (np.bincount(group.outputs, weights=coef, minlength=len(logits)) - coef.sum() * pi) / size
    return value, grad
