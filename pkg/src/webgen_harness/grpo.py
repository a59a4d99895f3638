"""Group-relative policy optimization numerics.

Pure functions over reward groups and per-token log-probabilities: the
normalized within-group advantage, the clipped surrogate term, a
non-negative per-token KL estimator, and the full objective evaluated
over a sampled group.  No gradients here; the training framework owns
differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Below this population std the group is degenerate and advantages are zero.
STD_FLOOR = 1e-8


class GroupTooSmall(ValueError):
    """A reward group needs at least two members to normalize."""


class ShapeMismatch(ValueError):
    """Per-response log-prob arrays are not aligned."""


@dataclass
class AdvantageResult:
    """Normalized advantages (one per response) plus the group statistics."""

    advantages: np.ndarray
    mean: float
    std: float
    degenerate: bool


@dataclass
class GroupBatch:
    """One group of responses with aligned per-token log-probabilities.

    ``logp_theta``, ``logp_old`` and ``logp_ref`` are ragged: element ``i``
    holds the token log-probs of response ``i`` under the current, old,
    and reference policies.
    """

    logp_theta: list[np.ndarray]
    logp_old: list[np.ndarray]
    logp_ref: list[np.ndarray]
    rewards: Sequence[float]
    epsilon: float = 0.2
    beta: float = 0.01

    def __post_init__(self) -> None:
        self.logp_theta = [np.asarray(a, dtype=float) for a in self.logp_theta]
        self.logp_old = [np.asarray(a, dtype=float) for a in self.logp_old]
        self.logp_ref = [np.asarray(a, dtype=float) for a in self.logp_ref]
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")


def advantages(rewards: Sequence[float]) -> AdvantageResult:
    """Normalize group rewards to zero mean and unit population std.

    Uses the population std (divide by the group size, no Bessel
    correction).  Below the std floor the group carries no signal and all
    advantages are zero.
    """
    values = np.asarray(list(rewards), dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise GroupTooSmall(f"need at least 2 rewards, got {values.size}")
    mean = float(values.mean())
    std = float(values.std())
    if std < STD_FLOOR:
        return AdvantageResult(
            advantages=np.zeros_like(values), mean=mean, std=std, degenerate=True,
        )
    return AdvantageResult(
        advantages=(values - mean) / std, mean=mean, std=std, degenerate=False,
    )


def clipped_term(ratio: float, advantage: float, epsilon: float = 0.2) -> float:
    """min(ratio * A, clip(ratio, 1-eps, 1+eps) * A) for one token."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    clipped = min(max(ratio, 1.0 - epsilon), 1.0 + epsilon)
    return min(ratio * advantage, clipped * advantage)


def kl_penalty(logp_theta: float, logp_ref: float) -> float:
    """Per-token KL estimator exp(d) - d - 1 with d = logp_ref - logp_theta.

    Non-negative everywhere, zero exactly when the log-probs agree.  The
    raw expression can round a hair below zero for near-equal inputs, so
    the result is clamped.
    """
    delta = logp_ref - logp_theta
    return max(0.0, float(np.exp(delta) - delta - 1.0))


def objective(batch: GroupBatch) -> float:
    """Evaluate the clipped, KL-regularized group objective.

    Token terms are averaged within each response, then across the group:

        J = 1/G sum_i 1/|y_i| sum_t [ min(r A_i, clip(r) A_i) - beta * k_t ]

    with r = exp(logp_theta - logp_old) per token and A_i the normalized
    group advantage broadcast over response i's tokens.
    """
    group = len(batch.logp_theta)
    if not (len(batch.logp_old) == len(batch.logp_ref) == len(batch.rewards) == group):
        raise ShapeMismatch(
            f"group size mismatch: {group} responses, {len(batch.logp_old)} old, "
            f"{len(batch.logp_ref)} ref, {len(batch.rewards)} rewards"
        )
    adv = advantages(batch.rewards).advantages

    total = 0.0
    for i in range(group):
        theta, old, ref = batch.logp_theta[i], batch.logp_old[i], batch.logp_ref[i]
        if not (theta.shape == old.shape == ref.shape):
            raise ShapeMismatch(f"response {i} log-prob arrays are not aligned")
        if theta.size == 0:
            raise ShapeMismatch(f"response {i} has no tokens")
        ratio = np.exp(theta - old)
        clipped = np.clip(ratio, 1.0 - batch.epsilon, 1.0 + batch.epsilon)
        surrogate = np.minimum(ratio * adv[i], clipped * adv[i])
        delta = ref - theta
        kl = np.maximum(0.0, np.exp(delta) - delta - 1.0)
        total += float(np.mean(surrogate - batch.beta * kl))
    return total / group


@dataclass
class ScoredGroup:
    """Rewards with per-response identities, for dropping unscored samples."""

    ids: list[str]
    rewards: list[float]
    skipped: list[str] = field(default_factory=list)


def drop_unscored(ids: Sequence[str], rewards: Sequence[float | None]) -> ScoredGroup:
    """Remove judge-failed (``None``) rewards before normalization.

    Keeps the group well-defined; the caller must skip groups that fall
    below two members.
    """
    kept_ids, kept_rewards, skipped = [], [], []
    for sample_id, reward in zip(ids, rewards):
        if reward is None:
            skipped.append(sample_id)
        else:
            kept_ids.append(sample_id)
            kept_rewards.append(float(reward))
    return ScoredGroup(ids=kept_ids, rewards=kept_rewards, skipped=skipped)
