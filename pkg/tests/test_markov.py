import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lculab.errors import ValidationError, WalkTimeoutError
from lculab.markov import (
    chain_from_json,
    chain_to_json,
    classical_mc_estimate,
    chebyshev_sample_count,
    discriminant_matrix,
    discriminant_pair,
    exact_hitting_time_inverse,
    exact_hitting_time_resolvent,
    exact_variance,
    expected_mc_cost,
    lazify,
    lazy_cycle,
    mark_states,
    random_reversible_chain,
    random_sparse_dyadic_chain,
    survival_probability,
    symmetric_two_state,
    validate_chain,
)


@pytest.fixture
def two_state():
    chain = symmetric_two_state()
    return mark_states(chain, [1])


class TestValidateChain:
    def test_symmetric_two_state(self):
        chain = symmetric_two_state()
        np.testing.assert_allclose(chain.stationary, [0.5, 0.5])
        assert chain.sparsity == 2

    def test_lazy_four_cycle(self):
        chain = lazy_cycle(4, 0.5)
        np.testing.assert_allclose(chain.stationary, 0.25)
        eigs = np.linalg.eigvalsh(discriminant_matrix(chain.transition))
        assert eigs.min() >= -1e-12

    def test_swap_chain_rejected(self):
        # eigenvalue -1 and period 2
        with pytest.raises(ValidationError):
            validate_chain(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_lazified_swap_accepted(self):
        chain = validate_chain(lazify(np.array([[0.0, 1.0], [1.0, 0.0]])))
        np.testing.assert_allclose(chain.stationary, [0.5, 0.5])

    def test_non_stochastic_rejected(self):
        with pytest.raises(ValidationError):
            validate_chain(np.array([[0.9, 0.5], [0.0, 0.5]]))

    def test_reducible_rejected(self):
        with pytest.raises(ValidationError):
            validate_chain(np.eye(4))

    def test_irreversible_rejected(self):
        # three-state directed cycle with a uniform fixed point but no detailed balance
        p = np.array(
            [
                [0.5, 0.4, 0.1],
                [0.1, 0.5, 0.4],
                [0.4, 0.1, 0.5],
            ]
        )
        with pytest.raises(ValidationError):
            validate_chain(p)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(3, 12))
    def test_generated_chains_validate(self, seed, n):
        g = np.random.default_rng(seed)
        chain = random_reversible_chain(g, n)
        assert chain.n_states == n

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6))
    def test_dyadic_chains_have_exact_probabilities(self, seed):
        g = np.random.default_rng(seed)
        chain = random_sparse_dyadic_chain(g, 12, degree=4, bits=10)
        scaled = chain.transition * (1 << 10)
        np.testing.assert_array_equal(scaled, np.round(scaled))
        assert chain.sparsity <= 6


class TestMarkedPartition:
    def test_blocks(self, two_state):
        assert two_state.pi_u == pytest.approx(0.5)
        np.testing.assert_allclose(two_state.p_uu, [[0.5]])
        np.testing.assert_allclose(two_state.sqrt_pi_u, [1.0])

    def test_rejects_empty_or_full_marked_set(self):
        chain = symmetric_two_state()
        with pytest.raises(ValidationError):
            mark_states(chain, [])
        with pytest.raises(ValidationError):
            mark_states(chain, [0, 1])


class TestHittingTimeFormulas:
    def test_two_state_resolvent_equals_one(self, two_state):
        assert exact_hitting_time_resolvent(two_state) == pytest.approx(1.0)

    def test_two_state_geometric_series_oracle(self, two_state):
        # sum over survival probabilities, truncated with a tail bound
        total = sum(survival_probability(two_state, t) for t in range(60))
        assert exact_hitting_time_resolvent(two_state) == pytest.approx(total, abs=1e-12)

    def test_absorbing_dominant_block(self):
        # Pr(stay in U) = 0: hitting time equals pi_U. A no-self-loop state
        # whose neighbors are all marked forces a negative chain eigenvalue,
        # so spectrum validation is relaxed for this classical-formula check.
        p = np.array(
            [
                [0.0, 0.25, 0.25],
                [0.5, 0.50, 0.25],
                [0.5, 0.25, 0.50],
            ]
        )
        chain = validate_chain(p, require_nonnegative_spectrum=False)
        mp = mark_states(chain, [1, 2])
        assert exact_hitting_time_resolvent(mp) == pytest.approx(mp.pi_u)
        dp = discriminant_pair(mp)
        assert exact_hitting_time_inverse(dp, mp) == pytest.approx(mp.pi_u)

    def test_two_state_inverse_formula(self, two_state):
        dp = discriminant_pair(two_state)
        np.testing.assert_allclose(dp.h_matrix.matrix, [[0.5]])
        assert exact_hitting_time_inverse(dp, two_state) == pytest.approx(1.0)

    def test_lazy_cycle_series_oracle(self):
        chain = lazy_cycle(8, 0.5)
        mp = mark_states(chain, [0])
        dp = discriminant_pair(mp)
        t_resolvent = exact_hitting_time_resolvent(mp)
        # independent oracle: truncated survival series plus a spectral tail bound
        t_trunc = 0
        horizon = int(20 / dp.delta)
        for t in range(horizon):
            t_trunc += survival_probability(mp, t)
        tail = mp.pi_u * (1 - dp.delta) ** horizon / dp.delta
        assert abs(t_resolvent - t_trunc) <= tail + 1e-8

    def test_formula_equivalence_random_chains(self, rng):
        for _ in range(40):
            n = int(rng.integers(3, 17))
            chain = random_reversible_chain(rng, n)
            n_marked = int(rng.integers(1, n))
            marked = rng.choice(n, size=n_marked, replace=False)
            try:
                mp = mark_states(chain, marked)
            except ValidationError:
                continue
            dp = discriminant_pair(mp)
            t1 = exact_hitting_time_resolvent(mp)
            t2 = exact_hitting_time_inverse(dp, mp)
            assert abs(t1 - t2) <= 1e-9 * max(1.0, abs(t1))

    def test_spectrum_similarity(self, rng):
        chain = random_reversible_chain(rng, 10)
        mp = mark_states(chain, [0, 3])
        dp = discriminant_pair(mp)
        h_spec = np.sort(np.linalg.eigvalsh(dp.h_matrix.matrix))
        p_spec = np.sort(1.0 - np.linalg.eigvals(mp.p_uu).real)
        np.testing.assert_allclose(h_spec, p_spec, atol=1e-9)
        assert dp.delta == pytest.approx(1.0 - np.linalg.eigvals(mp.p_uu).real.max(), abs=1e-9)
        assert 1.0 / dp.delta >= exact_hitting_time_resolvent(mp) / mp.pi_u - 1e-9


class TestSurvival:
    def test_time_zero_is_pi_u(self, two_state):
        assert survival_probability(two_state, 0) == pytest.approx(two_state.pi_u)
        # equivalently Pr(t = 0) = pi_M
        assert 1 - survival_probability(two_state, 0) == pytest.approx(two_state.pi_m)

    def test_two_state_one_step(self, two_state):
        assert survival_probability(two_state, 1) == pytest.approx(0.25)

    def test_spectral_decay_bound(self, rng):
        chain = random_reversible_chain(rng, 8)
        mp = mark_states(chain, [2])
        dp = discriminant_pair(mp)
        for t in [1, 5, 20, 80]:
            assert survival_probability(mp, t) <= mp.pi_u * (1 - dp.delta) ** t + 1e-12

    def test_monotone_nonincreasing(self, rng):
        chain = random_reversible_chain(rng, 6)
        mp = mark_states(chain, [1])
        values = [survival_probability(mp, t) for t in range(15)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


class TestVariance:
    def test_two_state_value(self, two_state):
        # hand sum: E[t] = 1, E[t^2] = 3
        assert exact_variance(two_state) == pytest.approx(2.0)

    def test_bernoulli_case(self):
        p = np.array(
            [
                [0.0, 0.25, 0.25],
                [0.5, 0.50, 0.25],
                [0.5, 0.25, 0.50],
            ]
        )
        chain = validate_chain(p, require_nonnegative_spectrum=False)
        mp = mark_states(chain, [1, 2])
        expected = mp.pi_u - mp.pi_u**2
        assert exact_variance(mp) == pytest.approx(expected)

    def test_against_monte_carlo(self):
        chain = lazy_cycle(4, 0.5)
        mp = mark_states(chain, [0])
        var = exact_variance(mp)
        t_h = exact_hitting_time_resolvent(mp)
        n_samples = 100_000
        g = np.random.default_rng(7)
        cum_pi = np.cumsum(chain.stationary)
        cum_cols = np.cumsum(chain.transition, axis=0)
        times = np.empty(n_samples)
        for i in range(n_samples):
            state = int(np.searchsorted(cum_pi, g.random(), side="right"))
            t = 0
            while state != 0:
                t += 1
                state = int(np.searchsorted(cum_cols[:, state], g.random(), side="right"))
            times[i] = t
        sample_var = times.var(ddof=1)
        # variance of the sample variance ~ (mu4 - var^2)/n; three sigmas
        mu4 = np.mean((times - times.mean()) ** 4)
        se = math.sqrt((mu4 - sample_var**2) / n_samples)
        assert abs(sample_var - var) <= 3 * se
        assert abs(times.mean() - t_h) <= 3 * math.sqrt(var / n_samples)


class TestClassicalEstimator:
    def test_bernoulli_structure(self):
        p = np.array(
            [
                [0.0, 0.25, 0.25],
                [0.5, 0.50, 0.25],
                [0.5, 0.25, 0.50],
            ]
        )
        chain = validate_chain(p, require_nonnegative_spectrum=False)
        mp = mark_states(chain, [1, 2])
        estimate, samples, steps = classical_mc_estimate(mp, epsilon=0.05, seed=11)
        assert abs(estimate - mp.pi_u) <= 0.05
        # every walk takes zero or one step
        assert steps <= samples

    def test_two_state_coverage(self, two_state):
        hits = 0
        runs = 60
        for seed in range(runs):
            estimate, _, _ = classical_mc_estimate(two_state, epsilon=0.1, seed=seed)
            if abs(estimate - 1.0) <= 0.1:
                hits += 1
        assert hits >= 0.75 * runs

    def test_sample_count_formula(self, two_state):
        m = chebyshev_sample_count(two_state, 0.05)
        assert m == math.ceil(16.0 * 2.0 / 0.05**2)

    def test_expected_cost(self, two_state):
        samples, steps = expected_mc_cost(two_state, 0.1)
        assert samples == chebyshev_sample_count(two_state, 0.1)
        assert steps == pytest.approx(samples * 1.0)

    def test_deterministic_given_seed(self, two_state):
        a = classical_mc_estimate(two_state, epsilon=0.2, seed=42)
        b = classical_mc_estimate(two_state, epsilon=0.2, seed=42)
        assert a == b

    def test_step_cap_raises_timeout(self):
        chain = lazy_cycle(8, 0.5)
        mp = mark_states(chain, [0])
        with pytest.raises(WalkTimeoutError):
            classical_mc_estimate(mp, epsilon=0.5, seed=1, max_total_steps=3)


class TestChainJson:
    def test_round_trip(self, rng):
        chain = random_reversible_chain(rng, 6)
        blob = chain_to_json(chain, [0, 2])
        back, marked = chain_from_json(blob)
        np.testing.assert_allclose(back.transition, chain.transition, atol=1e-15)
        assert marked == (0, 2)

    def test_malformed_rejected(self):
        with pytest.raises(ValidationError):
            chain_from_json({"n_states": 2, "entries": [[0, 0]], "marked": []})
