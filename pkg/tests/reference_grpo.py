"""Brute-force reference for the group objective, kept independent of the
library implementation: plain math module arithmetic, explicit loops, no
numpy vectorization."""

from __future__ import annotations

import math


def reference_advantages(rewards: list[float]) -> list[float]:
    n = len(rewards)
    mean = sum(rewards) / n
    variance = sum((r - mean) ** 2 for r in rewards) / n
    std = math.sqrt(variance)
    if std < 1e-8:
        return [0.0] * n
    return [(r - mean) / std for r in rewards]


def reference_objective(
    logp_theta: list[list[float]],
    logp_old: list[list[float]],
    logp_ref: list[list[float]],
    rewards: list[float],
    epsilon: float,
    beta: float,
    clip: bool = True,
) -> float:
    adv = reference_advantages(rewards)
    group_total = 0.0
    for i in range(len(rewards)):
        token_total = 0.0
        tokens = len(logp_theta[i])
        for t in range(tokens):
            ratio = math.exp(logp_theta[i][t] - logp_old[i][t])
            if clip:
                bounded = min(max(ratio, 1.0 - epsilon), 1.0 + epsilon)
                surrogate = min(ratio * adv[i], bounded * adv[i])
            else:
                surrogate = ratio * adv[i]
            delta = logp_ref[i][t] - logp_theta[i][t]
            kl = math.exp(delta) - delta - 1.0
            token_total += surrogate - beta * kl
        group_total += token_total / tokens
    return group_total / len(rewards)
