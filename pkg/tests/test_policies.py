import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cumgain.environment import DayObservation, EnvironmentSpec, sample_day
from cumgain.inference import ConfidenceConfig
from cumgain.policies import (
    PolicyKind,
    PolicyTag,
    allocate,
    best_arm_probabilities,
    bob_propensities,
    bob_ranks,
    harmonic_number,
    initial_state,
    observe,
    stopped,
    ttts_propensities,
)

CONFIG = ConfidenceConfig(0.1)


def day(d, n, r, p):
    return DayObservation(d, np.asarray(n), np.asarray(r), np.asarray(p, dtype=float))


def test_policy_kind_defaults_and_validation():
    kind = PolicyKind("ttts")
    assert kind.tag is PolicyTag.TTTS
    assert kind.ttts_beta == 0.5
    assert kind.ts_posterior_samples == 10_000
    with pytest.raises(ValueError):
        PolicyKind("ttts", ttts_beta=1.0)
    with pytest.raises(ValueError):
        PolicyKind("cgse", cgse_delta=0.0)
    with pytest.raises(ValueError):
        PolicyKind("ts", ts_posterior_samples=0)
    with pytest.raises(ValueError):
        PolicyKind("nope")


def test_uniform_allocation():
    kind = PolicyKind("uniform")
    assert np.allclose(allocate(kind, initial_state(kind, 4), 0), 0.25)


def test_ttts_symmetric_fixed_point():
    assert np.allclose(ttts_propensities(np.full(3, 1 / 3), 0.5), 1 / 3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0))
def test_ttts_two_arms_is_an_even_split(a):
    assert np.allclose(ttts_propensities(np.array([a, 1 - a]), 0.5), 0.5)


def test_ttts_handles_certainty():
    p = ttts_propensities(np.array([1.0, 0.0, 0.0]), 0.5)
    assert np.all(np.isfinite(p)) and p.sum() == pytest.approx(1.0)
    assert np.allclose(p, [0.5, 0.25, 0.25], atol=1e-5)
    assert ttts_propensities(np.array([1.0]), 0.5).tolist() == [1.0]


def test_ttts_limit_with_unequal_losers():
    # challenger share follows the losers' relative probabilities
    p = ttts_propensities(np.array([0.9999, 0.000075, 0.000025]), 0.5)
    assert np.allclose(p, [0.5, 0.375, 0.125], atol=1e-3)


def test_bob_two_arms():
    assert np.allclose(bob_propensities(np.array([5.0, 1.0])), [2 / 3, 1 / 3])
    assert np.allclose(bob_propensities(np.array([1.0, 5.0])), [1 / 3, 2 / 3])


def test_bob_ties_go_to_lower_index():
    assert bob_ranks(np.array([3.0, 3.0, 9.0])).tolist() == [2, 3, 1]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8))
def test_bob_is_a_permutation_of_harmonic_weights(gains):
    p = bob_propensities(np.array(gains))
    k = len(gains)
    expected = sorted(1.0 / (r * harmonic_number(k)) for r in range(1, k + 1))
    assert np.allclose(sorted(p), expected)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_bob_ranks_flip_with_gain_order():
    kind = PolicyKind("bob")
    st0 = initial_state(kind, 2)
    s1 = observe(kind, st0, day(1, [50, 50], [10, 5], [0.5, 0.5]), CONFIG)
    assert allocate(kind, s1, 0)[0] == pytest.approx(2 / 3)
    s2 = observe(kind, s1, day(2, [50, 50], [0, 20], [0.5, 0.5]), CONFIG)
    assert allocate(kind, s2, 0)[1] == pytest.approx(2 / 3)


def test_ts_conjugate_update():
    kind = PolicyKind("ts")
    s = observe(kind, initial_state(kind, 1), day(1, [10], [3], [1.0]), CONFIG)
    assert (s.posterior_a[0], s.posterior_b[0]) == (4.0, 8.0)


def test_best_arm_probabilities():
    rng = np.random.default_rng(0)
    alpha = best_arm_probabilities(np.array([1.0, 1.0]), np.array([1.0, 1.0]), 20_000, rng)
    assert alpha.sum() == pytest.approx(1.0)
    assert alpha[0] == pytest.approx(0.5, abs=0.02)
    alpha = best_arm_probabilities(np.array([900.0, 100.0]), np.array([100.0, 900.0]), 1000, rng)
    assert alpha.tolist() == [1.0, 0.0]


def test_ts_allocation_is_seeded():
    kind = PolicyKind("ts", ts_posterior_samples=500)
    s = initial_state(kind, 3)
    assert np.array_equal(allocate(kind, s, (1, 2)), allocate(kind, s, (1, 2)))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(PolicyTag)), st.integers(1, 5), st.integers(0, 2**31))
def test_allocations_are_probability_vectors(tag, k, seed):
    kind = PolicyKind(tag, ts_posterior_samples=200)
    rng = np.random.default_rng(seed)
    spec = EnvironmentSpec(rng.uniform(0.1, 0.9, size=(k, 3)), np.full(3, 200))
    state = initial_state(kind, k)
    for d in range(1, 4):
        p = allocate(kind, state, (seed, d))
        assert np.all(p >= 0) and p.sum() == pytest.approx(1.0, abs=1e-9)
        if tag is PolicyTag.CGSE:
            active = sorted(state.active_set)
            assert np.allclose(p[active], 1 / len(active))
            assert np.all(np.delete(p, active) == 0.0)
        state = observe(kind, state, sample_day(spec, d, p, (seed, d, 0)), CONFIG)


def test_cgse_eliminates_and_stops():
    kind = PolicyKind("cgse")
    spec = EnvironmentSpec.stationary([0.6, 0.2, 0.19], 10, 10_000)
    state = initial_state(kind, 3)
    history = [state.active_set]
    for d in range(1, 11):
        p = allocate(kind, state, d)
        state = observe(kind, state, sample_day(spec, d, p, d), CONFIG)
        history.append(state.active_set)
        if stopped(kind, state) is not None:
            break
    for before, after in zip(history, history[1:]):
        assert after <= before
    assert stopped(kind, state) == 0
    p = allocate(kind, state, 0)
    assert p.tolist() == [1.0, 0.0, 0.0]


def test_cgse_not_stopped_with_several_arms():
    kind = PolicyKind("cgse")
    assert stopped(kind, initial_state(kind, 3)) is None


def test_baselines_never_self_stop():
    for tag in ("ts", "ttts", "uniform", "bob"):
        kind = PolicyKind(tag)
        assert stopped(kind, initial_state(kind, 1)) is None


def test_cgse_delta_override_is_used():
    # a loose per-policy delta eliminates where the global one cannot
    obs = day(1, [5000, 5000], [2600, 2400], [0.5, 0.5])
    tight = observe(PolicyKind("cgse"), initial_state(PolicyKind("cgse"), 2), obs, ConfidenceConfig(0.01))
    loose_kind = PolicyKind("cgse", cgse_delta=0.9)
    loose = observe(loose_kind, initial_state(loose_kind, 2), obs, ConfidenceConfig(0.01))
    assert tight.active_set == {0, 1}
    assert loose.active_set == {0}


def test_observe_rejects_wrong_arm_count():
    kind = PolicyKind("ts")
    with pytest.raises(ValueError):
        observe(kind, initial_state(kind, 3), day(1, [5, 5], [1, 1], [0.5, 0.5]), CONFIG)


def test_ts_posterior_mean_tracks_truth():
    kind = PolicyKind("ts", ts_posterior_samples=2000)
    spec = EnvironmentSpec.stationary([0.3, 0.32], 30, 2000)
    state = initial_state(kind, 2)
    for d in range(1, 31):
        p = allocate(kind, state, (3, d))
        state = observe(kind, state, sample_day(spec, d, p, (3, d, 0)), CONFIG)
    a, b = state.posterior_a, state.posterior_b
    mean = a / (a + b)
    sd = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    heavy = int(np.argmax(a + b))
    assert abs(mean[heavy] - spec.arm_means[heavy, 0]) <= 3 * sd[heavy]
