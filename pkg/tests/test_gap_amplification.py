import math

import numpy as np
import pytest
import scipy.linalg

from lculab.errors import ValidationError
from lculab.gap_amplification import (
    ProjectorDecomposition,
    SimulationCostModel,
    UnitaryDecomposition,
    build_tilde_h,
    decomposition_from_json,
    decomposition_to_json,
    evolution_tau,
    exact_evolution,
    parse_pauli_lines,
    projectors_from_unitaries,
    psd_split,
    simulation_query_cost,
    tilde_h_unitary_terms,
    unitarity_defect,
)
from lculab.rand import random_involution, random_projector, random_psd, random_state

PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def random_projector_decomposition(rng, dim, k):
    terms = tuple(
        (float(rng.uniform(0.1, 2.0)), random_projector(rng, dim, int(rng.integers(1, dim + 1))))
        for _ in range(k)
    )
    return ProjectorDecomposition(dim=dim, terms=terms)


class TestProjectorsFromUnitaries:
    def test_pauli_z_gives_up_projector(self):
        u = UnitaryDecomposition(dim=2, terms=((1.0, PAULI_Z),))
        p, offset = projectors_from_unitaries(u)
        np.testing.assert_allclose(p.terms[0][1], np.diag([1.0, 0.0]), atol=1e-14)
        assert offset == pytest.approx(0.5)

    def test_identity_term(self):
        u = UnitaryDecomposition(dim=3, terms=((2.0, np.eye(3)),))
        p, offset = projectors_from_unitaries(u)
        np.testing.assert_allclose(p.terms[0][1], np.eye(3), atol=1e-14)
        assert offset == pytest.approx(1.0)

    def test_householder_reflection_idempotent(self, rng):
        refl = random_involution(rng, 6)
        p, _ = projectors_from_unitaries(
            UnitaryDecomposition(dim=6, terms=((0.7, refl),))
        )
        proj = p.terms[0][1]
        assert np.max(np.abs(proj @ proj - proj)) <= 1e-12

    def test_non_involutory_rejected(self, rng):
        phase_gate = np.diag([1.0, 1j])
        with pytest.raises(ValidationError):
            UnitaryDecomposition(dim=2, terms=((1.0, phase_gate),))


class TestBuildTildeH:
    def test_scalar_projector(self):
        p = ProjectorDecomposition(dim=1, terms=((1.0, np.eye(1)),))
        g = build_tilde_h(p)
        np.testing.assert_allclose(g.operator.matrix, [[0, 1], [1, 0]], atol=1e-14)
        sq = g.operator.matrix @ g.operator.matrix
        np.testing.assert_allclose(g.sector_block(sq), [[1.0]], atol=1e-14)

    def test_diagonal_hamiltonian(self):
        g = build_tilde_h(psd_split(np.diag([0.0, 1.0])))
        sq = g.sector_block(g.operator.matrix @ g.operator.matrix)
        np.testing.assert_allclose(sq, np.diag([0.0, 1.0]), atol=1e-12)

    def test_random_psd_rank1_split(self, rng):
        h = random_psd(rng, 4, norm=1.5)
        g = build_tilde_h(psd_split(h))
        sq = g.sector_block(g.operator.matrix @ g.operator.matrix)
        np.testing.assert_allclose(sq, h, atol=1e-10)

    def test_square_property_on_states(self, rng):
        for _ in range(30):
            dim = int(rng.integers(2, 9))
            p = random_projector_decomposition(rng, dim, int(rng.integers(1, 5)))
            g = build_tilde_h(p)
            phi = random_state(rng, dim)
            lifted = g.embed_sector_state(phi)
            squared = g.operator.matrix @ (g.operator.matrix @ lifted)
            expected = g.embed_sector_state(p.sum_matrix() @ phi)
            assert np.linalg.norm(squared - expected) <= 1e-10

    def test_norm_bounds(self, rng):
        p = random_projector_decomposition(rng, 5, 4)
        g = build_tilde_h(p)
        tilde_norm = g.operator.spectral_norm
        h_norm = float(np.linalg.norm(p.sum_matrix(), ord=2))
        assert tilde_norm <= p.sum_sqrt_weights() + 1e-9
        assert tilde_norm**2 >= h_norm - 1e-9

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValidationError):
            ProjectorDecomposition(dim=2, terms=((0.0, np.eye(2)),))


class TestUnitaryTerms:
    def test_scalar_case_sums_to_coupler(self):
        g = build_tilde_h(ProjectorDecomposition(dim=1, terms=((1.0, np.eye(1)),)))
        ud = tilde_h_unitary_terms(g)
        assert ud.n_terms == 2
        np.testing.assert_allclose(ud.weighted_sum(), [[0, 1], [1, 0]], atol=1e-12)

    def test_empty_decomposition(self):
        p = ProjectorDecomposition(dim=3, terms=())
        g = build_tilde_h(p)
        assert g.operator.matrix.shape == (3, 3)
        np.testing.assert_allclose(g.operator.matrix, 0.0, atol=1e-15)

    def test_random_reconstruction_and_unitarity(self, rng):
        p = random_projector_decomposition(rng, 4, 3)
        g = build_tilde_h(p)
        ud = tilde_h_unitary_terms(g)
        assert ud.n_terms == 2 * p.n_terms
        assert np.max(np.abs(ud.weighted_sum() - g.operator.matrix)) <= 1e-10
        for _, u in ud.terms:
            assert unitarity_defect(u) <= 1e-10
        # weight-sum convention matches sum of sqrt(alpha) exactly
        assert sum(w for w, _ in ud.terms) == pytest.approx(p.sum_sqrt_weights())


class TestExactEvolution:
    def test_time_zero(self, rng):
        g = build_tilde_h(random_projector_decomposition(rng, 3, 2))
        np.testing.assert_allclose(exact_evolution(g, 0.0), np.eye(g.dim), atol=1e-14)

    def test_pi_rotation_of_coupler(self):
        g = build_tilde_h(ProjectorDecomposition(dim=1, terms=((1.0, np.eye(1)),)))
        np.testing.assert_allclose(exact_evolution(g, math.pi), -np.eye(2), atol=1e-12)

    def test_group_law_and_unitarity(self, rng):
        g = build_tilde_h(random_projector_decomposition(rng, 3, 3))
        t1, t2 = 0.7, -1.3
        composed = exact_evolution(g, t1) @ exact_evolution(g, t2)
        np.testing.assert_allclose(composed, exact_evolution(g, t1 + t2), atol=1e-10)
        assert unitarity_defect(exact_evolution(g, t1)) <= 1e-10

    def test_commutes_with_generator(self, rng):
        g = build_tilde_h(random_projector_decomposition(rng, 3, 2))
        u = exact_evolution(g, 0.9)
        h = g.operator.matrix
        assert np.max(np.abs(u @ h - h @ u)) <= 1e-9

    def test_matches_scipy_expm(self, rng):
        g = build_tilde_h(random_projector_decomposition(rng, 3, 2))
        t = 0.6
        reference = scipy.linalg.expm(-1j * t * g.operator.matrix)
        np.testing.assert_allclose(exact_evolution(g, t), reference, atol=1e-10)


class TestSimulationCost:
    def test_direct_formula_value(self):
        m = SimulationCostModel(tau=10.0, epsilon=1e-3)
        queries, extra, total = simulation_query_cost(m)
        expected = 10.0 * math.log(1e4) / math.log(math.log(1e4))
        assert queries == pytest.approx(expected)
        assert queries == pytest.approx(41.48, abs=0.01)
        # K = 1: extra gates track queries, total = (ln(1)*C_U + 1) * same
        assert extra == pytest.approx(expected)
        assert total == pytest.approx(expected)

    def test_loglog_clamp(self):
        m = SimulationCostModel(tau=2.0, epsilon=1.0)  # tau/eps = 2 < e^e
        queries, _, _ = simulation_query_cost(m)
        assert queries == pytest.approx(2.0 * math.log(2.0))

    def test_doubling_tau_ratio(self):
        for tau in [10.0, 100.0, 1000.0]:
            q1, _, _ = simulation_query_cost(SimulationCostModel(tau=tau, epsilon=1e-3))
            q2, _, _ = simulation_query_cost(SimulationCostModel(tau=2 * tau, epsilon=1e-3))
            ratio = q2 / q1
            assert 2.0 < ratio < 2.0 * math.log(2 * tau / 1e-3) / math.log(tau / 1e-3)

    def test_invalid_inputs(self):
        with pytest.raises(ValidationError):
            SimulationCostModel(tau=-1.0, epsilon=0.1)
        with pytest.raises(ValidationError):
            SimulationCostModel(tau=1.0, epsilon=0.0)

    def test_tau_conventions_agree(self, rng):
        p = random_projector_decomposition(rng, 4, 3)
        g = build_tilde_h(p)
        assert evolution_tau(g, 2.0, "weight-sum") == pytest.approx(
            evolution_tau(g, 2.0, "sqrt-alpha")
        )


class TestPauliParsing:
    def test_single_line(self):
        ud = parse_pauli_lines("0.5 XZ")
        assert ud.dim == 4
        expected = 0.5 * np.kron([[0, 1], [1, 0]], [[1, 0], [0, -1]])
        np.testing.assert_allclose(ud.one_half_sum(), expected, atol=1e-14)

    def test_negative_coefficient_absorbed(self):
        ud = parse_pauli_lines("-0.25 Z\n1.0 X")
        expected = -0.25 * PAULI_Z + 1.0 * np.array([[0, 1], [1, 0]])
        np.testing.assert_allclose(ud.one_half_sum(), expected, atol=1e-14)
        assert all(alpha > 0 for alpha, _ in ud.terms)

    def test_comments_and_blank_lines(self):
        ud = parse_pauli_lines("# two qubits\n\n0.5 XX  # coupling\n0.5 ZI\n")
        assert ud.n_terms == 2

    def test_bad_string_rejected(self):
        with pytest.raises(ValidationError):
            parse_pauli_lines("0.5 XQ")
        with pytest.raises(ValidationError):
            parse_pauli_lines("not_a_number XX")


class TestDecompositionJson:
    def test_exact_round_trip(self, rng):
        import json

        p = random_projector_decomposition(rng, 5, 3)
        blob = json.dumps(decomposition_to_json(p))
        back = decomposition_from_json(json.loads(blob))
        assert back.dim == p.dim
        for (a1, m1), (a2, m2) in zip(p.terms, back.terms):
            assert a1 == a2
            assert np.array_equal(m1, m2)

    def test_malformed_rejected(self):
        with pytest.raises(ValidationError):
            decomposition_from_json({"dim": 2, "terms": [{"alpha": 1.0}]})
