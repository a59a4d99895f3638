"""Group-relative numerics: normalized advantages and the clipped objective.

Pure math over reward groups and token log-probabilities; nothing here
touches a sandbox or a judge. Shows the worked normalization example, the
degenerate all-equal group, clipping behavior, and the zero objective for
identical policies.

Run from the repository root:

    python demos/03_group_advantages.py
"""

import numpy as np

from webgen_harness.grpo import GroupBatch, advantages, clipped_term, kl_penalty, objective


def main() -> None:
    # Within-group normalization: mean 0, population std 1.
    result = advantages([4, 2, 3, 3])
    print("rewards [4, 2, 3, 3]")
    print("  advantages:", np.round(result.advantages, 5).tolist())
    print(f"  mean={result.mean:.4f} std={result.std:.5f} degenerate={result.degenerate}")

    flat = advantages([2, 2, 2, 2])
    print("\nrewards [2, 2, 2, 2] -> degenerate:", flat.degenerate,
          "advantages:", flat.advantages.tolist())

    # Clipping caps how much a single token ratio can move the objective.
    print("\nclipped surrogate (epsilon=0.2):")
    for ratio, adv in [(1.5, 1.0), (0.5, -1.0), (1.0, 0.7)]:
        print(f"  ratio={ratio:<4} adv={adv:<5} -> {clipped_term(ratio, adv, 0.2):.3f}")

    # The KL estimator is zero at agreement and grows with divergence.
    print("\nper-token KL estimator:")
    for theta, ref in [(-1.0, -1.0), (-1.0, -2.0), (-2.0, -1.0)]:
        print(f"  logp_theta={theta:<5} logp_ref={ref:<5} -> {kl_penalty(theta, ref):.5f}")

    # With identical current/old/reference policies the objective collapses
    # to the mean advantage, which is zero by construction.
    rng = np.random.default_rng(3)
    logps = [rng.normal(-2, 1, size=n) for n in (5, 7, 4, 6)]
    batch = GroupBatch(
        logp_theta=[a.copy() for a in logps],
        logp_old=[a.copy() for a in logps],
        logp_ref=[a.copy() for a in logps],
        rewards=[4.0, 2.0, 3.0, 3.0],
    )
    print(f"\nidentical-policy objective: {objective(batch):+.2e} (zero up to rounding)")

    # Perturb the current policy and the objective moves.
    batch.logp_theta = [a + rng.normal(0, 0.1, size=a.shape) for a in logps]
    print(f"perturbed-policy objective: {objective(batch):+.5f}")


if __name__ == "__main__":
    main()
