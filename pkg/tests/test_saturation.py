import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import kernel_pair, random_traceless, seeds
from nmdistill.channels import computational_pair, model_channels
from nmdistill.distillation import evolved_differences
from nmdistill.linalg import X, Z, ContractViolation, is_psd, trace_norm
from nmdistill.saturation import (
    construct_saturating_map,
    orthogonal_support_check,
    orthogonal_support_condition,
    saturation_feasible,
    saturation_gaps,
    triangle_equality_holds,
    triangle_equality_spectral,
)


def depolarize(M):
    return np.trace(M) * np.eye(M.shape[0]) / M.shape[0]


class TestFeasibility:
    def test_feasible_anchor(self):
        rep = saturation_feasible(np.diag([2.0, -2.0]), np.diag([1.0, -1.0]))
        assert rep.feasible and rep.margin == pytest.approx(1.0, abs=1e-14)
        assert rep.split.rank_zero == 0

    def test_infeasible_anchor(self):
        rep = saturation_feasible(np.diag([1.0, -1.0]), np.diag([2.0, -2.0]))
        np.testing.assert_allclose(rep.split.p_plus, np.diag([0, 1]), atol=1e-14)
        assert not rep.feasible and rep.margin == pytest.approx(-2.0, abs=1e-14)
        assert rep.witness_e0 is None

    @given(seeds, st.integers(2, 4))
    def test_zero_b(self, seed, dim):
        A = random_traceless(np.random.default_rng(seed), dim)
        rep = saturation_feasible(A, np.zeros((dim, dim)))
        assert rep.feasible and rep.margin == pytest.approx(0.0, abs=1e-12)

    def test_traceless_required(self):
        with pytest.raises(ContractViolation):
            saturation_feasible(np.diag([1.0, 0.0]), np.zeros((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            saturation_feasible(np.zeros((2, 2)), np.zeros((3, 3)))

    @given(seeds, st.integers(2, 5), st.integers(0, 3))
    def test_report_invariants(self, seed, dim, kdim):
        rng = np.random.default_rng(seed)
        kdim = min(kdim, dim - 2)
        A, B = kernel_pair(rng, dim, kdim)
        rep = saturation_feasible(A, B)
        assert rep.feasible == (rep.margin >= -1e-10)
        if rep.feasible:
            E0, P0, delta = rep.witness_e0, rep.split.p_zero, A - B
            assert is_psd(E0) and is_psd(P0 - E0)
            assert np.abs(E0 @ delta).max() <= 1e-9
            F = rep.effect
            assert np.trace(F @ A).real >= np.trace(F @ B).real - 1e-10
            assert np.trace(F @ B).real >= -1e-10

    @given(seeds, st.integers(3, 5))
    def test_closed_form_maximum_over_e0(self, seed, dim):
        rng = np.random.default_rng(seed)
        A, B = kernel_pair(rng, dim, dim - 2)
        rep = saturation_feasible(A, B)
        P0 = rep.split.p_zero
        base = np.trace(rep.split.p_plus @ B).real
        best = rep.margin - base
        for _ in range(200):
            G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            R = P0 @ (G @ G.conj().T) @ P0
            top = np.linalg.eigvalsh(R)[-1]
            E0 = R / top * rng.uniform(0, 1) if top > 0 else R
            assert np.trace(E0 @ B).real <= best + 1e-9
        if rep.feasible:
            assert np.trace(rep.witness_e0 @ B).real == pytest.approx(best, abs=1e-10)


class TestConstruction:
    def test_anchor_map(self):
        A, B = np.diag([2.0, -2.0]), np.diag([1.0, -1.0])
        rep = saturation_feasible(A, B)
        lam = construct_saturating_map(A, B, rep)
        np.testing.assert_allclose(lam(A), np.diag([2, -2]), atol=1e-14)
        assert saturation_gaps(lam, A, B) == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_zero_b_map(self, rng):
        A = random_traceless(rng, 3)
        rep = saturation_feasible(A, np.zeros((3, 3)))
        lam = construct_saturating_map(A, np.zeros((3, 3)), rep)
        s = rep.split
        np.testing.assert_allclose(np.diag(lam(A)).real, [np.trace(s.delta_plus).real, -np.trace(s.delta_minus).real], atol=1e-12)
        assert trace_norm(lam(A)) == pytest.approx(trace_norm(A), abs=1e-12)

    def test_effects_resolve_identity(self, rng):
        A, B = random_traceless(rng, 4), np.zeros((4, 4))
        lam = construct_saturating_map(A, B, saturation_feasible(A, B))
        np.testing.assert_allclose(sum(lam.effects), np.eye(4), atol=0)
        assert lam.is_cptp()

    def test_infeasible_rejected(self):
        A, B = np.diag([1.0, -1.0]), np.diag([2.0, -2.0])
        with pytest.raises(ContractViolation):
            construct_saturating_map(A, B, saturation_feasible(A, B))

    @pytest.mark.parametrize("d", [2, 3])
    def test_output_dimension(self, d):
        A, B = np.diag([2.0, -2.0]), np.diag([1.0, -1.0])
        lam = construct_saturating_map(A, B, saturation_feasible(A, B), d=d)
        assert lam(A).shape == (d, d)

    @given(seeds, st.integers(2, 4), st.integers(0, 2))
    def test_sufficiency(self, seed, dim, kdim):
        rng = np.random.default_rng(seed)
        A, B = kernel_pair(rng, dim, min(kdim, dim - 2))
        rep = saturation_feasible(A, B)
        if rep.feasible:
            lam = construct_saturating_map(A, B, rep)
            gap_triangle, gap_contract = saturation_gaps(lam, A, B)
            assert abs(gap_triangle) <= 1e-9 and abs(gap_contract) <= 1e-9
            assert orthogonal_support_condition(lam, A - B)


class TestModelOrdering:
    @pytest.mark.parametrize("eps, expected", [(0.3, True), (0.4, True), (0.1, False), (0.2, False),
                                               (0.26, True), (0.49, True), (0.01, False), (0.24, False)])
    def test_two_copy_flip(self, eps, expected):
        A, B = evolved_differences(*model_channels(eps), *computational_pair(), 2)
        assert saturation_feasible(A, B).feasible is expected


class TestTriangleEquality:
    def test_commuting_same_sign(self):
        A, B = np.diag([1.0, 2.0]), np.diag([3.0, 4.0])
        assert triangle_equality_holds(A, B) and triangle_equality_spectral(A, B)

    def test_pauli_pair(self):
        assert trace_norm(Z + X) == pytest.approx(2 * np.sqrt(2), abs=1e-14)
        assert not triangle_equality_holds(Z, X)

    def test_opposite_signs(self):
        assert not triangle_equality_holds(np.diag([1.0, -1.0]), np.diag([-1.0, 1.0]))

    @given(seeds, st.integers(2, 4))
    def test_norm_and_spectral_agree(self, seed, dim):
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        a = rng.standard_normal(dim)
        b = np.abs(rng.standard_normal(dim)) * np.sign(a) * rng.choice([1, 1, -1], size=dim)
        A = Q @ np.diag(a) @ Q.conj().T
        B = Q @ np.diag(b) @ Q.conj().T
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert triangle_equality_holds(A, B) == triangle_equality_spectral(A, B)


class TestOrthogonalSupport:
    @given(seeds, st.integers(2, 4))
    def test_identity_map(self, seed, dim):
        delta = random_traceless(np.random.default_rng(seed), dim)
        assert orthogonal_support_condition(lambda M: M, delta)
        chk = orthogonal_support_check(lambda M: M, delta)
        assert chk.by_norm and chk.by_projectors

    def test_depolarizing(self):
        assert not orthogonal_support_condition(depolarize, Z)
        assert not orthogonal_support_check(depolarize, Z).by_projectors

    def test_saturating_map_on_own_delta(self, rng):
        A = random_traceless(rng, 4)
        rep = saturation_feasible(A, np.zeros((4, 4)))
        lam = construct_saturating_map(A, np.zeros((4, 4)), rep)
        chk = orthogonal_support_check(lam, A)
        assert chk.by_norm and chk.by_projectors

    def test_near_degenerate_flagged(self):
        delta = np.diag([1.0, 2e-9, -1.0])
        chk = orthogonal_support_check(lambda M: M, delta)
        assert chk.ambiguous and chk.by_norm
