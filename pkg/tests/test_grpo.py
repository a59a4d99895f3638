from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from reference_grpo import reference_objective

from webgen_harness.grpo import (
    GroupBatch,
    GroupTooSmall,
    ShapeMismatch,
    advantages,
    clipped_term,
    drop_unscored,
    kl_penalty,
    objective,
)


def test_worked_example():
    result = advantages([4, 2, 3, 3])
    assert result.advantages == pytest.approx([1.41421, -1.41421, 0.0, 0.0], abs=1e-5)
    assert result.mean == pytest.approx(3.0)
    assert result.std == pytest.approx(0.70711, abs=1e-5)
    assert not result.degenerate


def test_constant_rewards_degenerate():
    result = advantages([2, 2, 2, 2])
    assert result.degenerate
    assert list(result.advantages) == [0.0, 0.0, 0.0, 0.0]


def test_two_member_group():
    result = advantages([0, 5])
    assert result.advantages == pytest.approx([-1.0, 1.0])


def test_singleton_rejected():
    with pytest.raises(GroupTooSmall):
        advantages([1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=64))
def test_normalization_property(rewards):
    result = advantages(rewards)
    if result.degenerate:
        assert np.all(result.advantages == 0)
    else:
        assert abs(result.advantages.mean()) <= 1e-9
        assert abs(result.advantages.std() - 1.0) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=32),
    st.floats(min_value=-100, max_value=100),
    st.floats(min_value=0.01, max_value=100),
)
def test_affine_invariance(rewards, shift, scale):
    base = advantages(rewards)
    shifted = advantages([r + shift for r in rewards])
    scaled = advantages([r * scale for r in rewards])
    if base.degenerate:
        assert shifted.degenerate and scaled.degenerate
    else:
        assert np.allclose(base.advantages, shifted.advantages, atol=1e-7)
        assert np.allclose(base.advantages, scaled.advantages, atol=1e-7)


def test_clipped_term_examples():
    assert clipped_term(1.5, 1.0, 0.2) == pytest.approx(1.2)
    assert clipped_term(0.5, -1.0, 0.2) == pytest.approx(-0.8)
    for adv in (-3.0, -1.0, 0.0, 0.7, 2.0):
        assert clipped_term(1.0, adv, 0.2) == pytest.approx(adv)


@settings(max_examples=300, deadline=None)
@given(
    st.floats(min_value=0.0, max_value=10.0),
    st.floats(min_value=-10.0, max_value=10.0),
    st.floats(min_value=0.01, max_value=1.0),
)
def test_clip_bound_property(ratio, adv, eps):
    value = clipped_term(ratio, adv, eps)
    assert value <= ratio * adv + 1e-12
    bound = max(abs(adv * (1 - eps)), abs(adv * (1 + eps)), abs(adv * ratio))
    assert abs(value) <= bound + 1e-12


def test_kl_penalty_examples():
    assert kl_penalty(-0.5, -0.5) == 0.0
    assert kl_penalty(-1.0, -2.0) == pytest.approx(0.36788, abs=1e-5)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-20, max_value=20), st.floats(min_value=-20, max_value=20))
def test_kl_non_negative(lp_theta, lp_ref):
    value = kl_penalty(lp_theta, lp_ref)
    assert value >= 0.0
    # strict positivity holds mathematically; in float it needs a visible gap
    if abs(lp_theta - lp_ref) > 1e-6:
        assert value > 0.0


def _random_batch(rng: np.random.Generator, identical: bool = False) -> GroupBatch:
    group = int(rng.integers(2, 5))
    lengths = rng.integers(1, 9, size=group)
    theta = [rng.normal(-2, 1, size=n) for n in lengths]
    if identical:
        old = [a.copy() for a in theta]
        ref = [a.copy() for a in theta]
    else:
        old = [a + rng.normal(0, 0.1, size=a.shape) for a in theta]
        ref = [a + rng.normal(0, 0.1, size=a.shape) for a in theta]
    rewards = rng.uniform(0, 5, size=group).tolist()
    return GroupBatch(logp_theta=theta, logp_old=old, logp_ref=ref, rewards=rewards)


def test_objective_matches_reference_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        batch = _random_batch(rng)
        expected = reference_objective(
            [a.tolist() for a in batch.logp_theta],
            [a.tolist() for a in batch.logp_old],
            [a.tolist() for a in batch.logp_ref],
            list(batch.rewards),
            batch.epsilon,
            batch.beta,
        )
        assert objective(batch) == pytest.approx(expected, abs=1e-9)


def test_objective_identical_policies_is_zero():
    rng = np.random.default_rng(11)
    for _ in range(20):
        batch = _random_batch(rng, identical=True)
        if advantages(batch.rewards).degenerate:
            continue
        assert abs(objective(batch)) <= 1e-12


def test_objective_degenerate_rewards_zero_beta():
    batch = GroupBatch(
        logp_theta=[np.array([-1.0, -2.0]), np.array([-0.5])],
        logp_old=[np.array([-1.1, -1.9]), np.array([-0.6])],
        logp_ref=[np.array([-1.0, -2.0]), np.array([-0.5])],
        rewards=[3.0, 3.0],
        beta=0.0,
    )
    assert objective(batch) == 0.0


def test_objective_unclipped_limit():
    rng = np.random.default_rng(13)
    for _ in range(20):
        batch = _random_batch(rng)
        batch.epsilon = 1e9
        batch.beta = 0.0
        expected = reference_objective(
            [a.tolist() for a in batch.logp_theta],
            [a.tolist() for a in batch.logp_old],
            [a.tolist() for a in batch.logp_ref],
            list(batch.rewards),
            epsilon=1e9,
            beta=0.0,
            clip=False,
        )
        assert objective(batch) == pytest.approx(expected, abs=1e-9)


def test_objective_shape_mismatch():
    batch = GroupBatch(
        logp_theta=[np.array([-1.0, -2.0]), np.array([-0.5])],
        logp_old=[np.array([-1.0]), np.array([-0.5])],
        logp_ref=[np.array([-1.0, -2.0]), np.array([-0.5])],
        rewards=[1.0, 2.0],
    )
    with pytest.raises(ShapeMismatch):
        objective(batch)


def test_objective_group_too_small():
    batch = GroupBatch(
        logp_theta=[np.array([-1.0])],
        logp_old=[np.array([-1.0])],
        logp_ref=[np.array([-1.0])],
        rewards=[1.0],
    )
    with pytest.raises(GroupTooSmall):
        objective(batch)


def test_drop_unscored():
    group = drop_unscored(["a", "b", "c", "d"], [1.0, None, 2.0, None])
    assert group.ids == ["a", "c"]
    assert group.rewards == [1.0, 2.0]
    assert group.skipped == ["b", "d"]


def test_unclipped_ratio_one_math():
    # With identical policies the surrogate collapses to the advantage itself.
    rewards = [4.0, 2.0, 3.0, 3.0]
    adv = advantages(rewards).advantages
    assert math.isclose(sum(adv) / len(adv), 0.0, abs_tol=1e-12)
