import math

import numpy as np
import pytest

from rayflow.errors import DegenerateInputError, SpaceMismatchError
from rayflow.spaces import (
    CoeffVec,
    DualVec,
    Exponent,
    SpaceDescriptor,
    SpaceKind,
    mu_from_lambda,
    optimal_shift,
    ray_projection_alpha,
    signed_power,
)


def wlp(dim, p, h=1.0):
    return SpaceDescriptor(SpaceKind.WEIGHTED_LP, dim, Exponent(p), weight=h)


def quot(dim, p, h=1.0):
    return SpaceDescriptor(SpaceKind.QUOTIENT_LP, dim, Exponent(p), weight=h)


def sup(dim, p):
    return SpaceDescriptor(SpaceKind.SUP, dim, Exponent(p))


def trace(dim, p, h=1.0):
    return SpaceDescriptor(SpaceKind.TRACE_BOUNDARY, dim, Exponent(p), weight=h, boundary=(0, dim - 1))


ALL_SPACES = [wlp(9, 1.5, 0.25), wlp(9, 3.0, 0.25), quot(9, 1.5, 0.3), quot(9, 4.0, 0.3),
              sup(9, 2.0), sup(9, 3.0), trace(9, 1.5, 0.2), trace(9, 2.0, 0.2)]


class TestExponent:
    def test_dual_relation(self):
        for p in (1.5, 2.0, 3.0, 4.0, 7.3):
            e = Exponent(p)
            assert e.q == pytest.approx(p / (p - 1.0), rel=1e-15)
            assert 1.0 / e.p + 1.0 / e.q == pytest.approx(1.0, abs=1e-15)

    def test_rejects_bad_p(self):
        for p in (1.0, 0.5, 0.0, -2.0, math.inf, math.nan):
            with pytest.raises(DegenerateInputError):
                Exponent(p)


class TestNorm:
    def test_weighted_lp(self):
        s = wlp(2, 2.0, h=0.5)
        assert s.norm([1.0, 1.0]) == pytest.approx(1.0, rel=1e-15)

    def test_sup(self):
        assert sup(3, 2.0).norm([1.0, -3.0, 2.0]) == 3.0

    def test_quotient_symmetry(self):
        s = quot(2, 2.0)
        assert s.norm([1.0, -1.0]) == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_trace_sees_boundary_only(self):
        s = trace(4, 2.0)
        assert s.norm([3.0, 100.0, -50.0, 4.0]) == pytest.approx(5.0, rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(SpaceMismatchError):
            wlp(3, 2.0).norm([1.0, 2.0])

    def test_homogeneity(self):
        rng = np.random.default_rng(3)
        for s in ALL_SPACES:
            for _ in range(50):
                u = rng.standard_normal(s.dim)
                t = float(rng.uniform(0.05, 20.0))
                assert s.norm(t * u) == pytest.approx(t * s.norm(u), rel=1e-12)

    def test_extreme_scales_do_not_flush(self):
        s = wlp(4, 3.0, h=0.5)
        u = np.array([1.0, -2.0, 0.5, 3.0])
        base = s.norm(u)
        for c in (1e-250, 1e250):
            assert s.norm(c * u) == pytest.approx(c * base, rel=1e-12)

    def test_quotient_shift_invariance(self):
        rng = np.random.default_rng(4)
        s = quot(7, 3.0, h=0.3)
        for _ in range(50):
            u = rng.standard_normal(7)
            c = float(rng.uniform(-8.0, 8.0))
            assert s.norm(u + c) == pytest.approx(s.norm(u), rel=1e-12)


class TestDualNorm:
    def test_euclidean(self):
        assert wlp(2, 2.0).dual_norm([3.0, 4.0]) == pytest.approx(5.0, rel=1e-15)

    def test_sup_total_variation(self):
        assert sup(3, 2.0).dual_norm([0.0, 3.0, 0.0]) == 3.0
        assert sup(3, 2.0).dual_norm([1.0, -2.0, 0.5]) == pytest.approx(3.5, rel=1e-15)

    def test_closed_form_against_brute_force_sup(self):
        # oracle: sup of <xi, u> over ~1e5 random unit vectors never exceeds
        # the closed form and comes within sampling resolution of it
        s = wlp(2, 3.0, h=0.5)
        xi = np.array([4.0, -1.0])
        closed = s.dual_norm(xi)
        assert closed == pytest.approx((0.5 * (4.0**1.5 + 1.0)) ** (2.0 / 3.0), rel=1e-14)
        rng = np.random.default_rng(12345)
        u = rng.standard_normal((100_000, 2))
        norms = (0.5 * np.sum(np.abs(u) ** 3.0, axis=1)) ** (1.0 / 3.0)
        pair = np.abs(0.5 * (u @ xi))
        brute = float(np.max(pair / norms))
        assert brute <= closed * (1.0 + 1e-12)
        assert brute >= closed * (1.0 - 1e-6)


class TestPairing:
    def test_weighted_sum(self):
        assert wlp(2, 2.0).pairing([1.0, 2.0], [3.0, 4.0]) == pytest.approx(11.0)

    def test_zero(self):
        assert wlp(3, 2.0).pairing([0.0, 0.0, 0.0], [1.0, -5.0, 2.0]) == 0.0

    def test_quotient_shift_invariance(self):
        s = quot(5, 3.0, h=0.4)
        rng = np.random.default_rng(5)
        u = rng.standard_normal(5)
        xi = rng.standard_normal(5)
        xi -= np.mean(xi)  # zero weighted mean (uniform weights)
        assert s.pairing(xi, u + 7.5) == pytest.approx(s.pairing(xi, u), abs=1e-12 * max(1, abs(s.pairing(xi, u))))

    def test_holder(self):
        rng = np.random.default_rng(6)
        for s in ALL_SPACES:
            for _ in range(100):
                u = rng.standard_normal(s.dim)
                xi = rng.standard_normal(s.dim)
                if s.kind is SpaceKind.QUOTIENT_LP:
                    w = s.pairing_weights()
                    xi -= np.sum(w * xi) / np.sum(w)
                if s.kind is SpaceKind.TRACE_BOUNDARY:
                    mask = np.zeros(s.dim)
                    mask[list(s.boundary)] = 1.0
                    xi *= mask
                bound = s.dual_norm(xi) * s.norm(u)
                assert abs(s.pairing(xi, u)) <= bound * (1.0 + 1e-12)


class TestDualityMap:
    def test_identity_at_p2(self):
        s = wlp(2, 2.0)
        np.testing.assert_allclose(s.duality_map([2.0, -1.0]).values, [2.0, -1.0])

    def test_componentwise_power(self):
        s = wlp(2, 3.0)
        np.testing.assert_allclose(s.duality_map([2.0, -1.0]).values, [4.0, -1.0])

    def test_sup_point_mass(self):
        s = sup(3, 2.0)
        np.testing.assert_allclose(s.duality_map([1.0, 3.0, -2.0]).values, [0.0, 3.0, 0.0])

    def test_sup_tie_break_lowest_index(self):
        s = sup(3, 2.0)
        xi = s.duality_map([2.0, -2.0, 1.0]).values
        np.testing.assert_allclose(xi, [2.0, 0.0, 0.0])

    def test_zero_vector(self):
        for s in ALL_SPACES:
            np.testing.assert_array_equal(s.duality_map(np.zeros(s.dim)).values, np.zeros(s.dim))

    def test_identities_random(self):
        # <xi,u> = ||u||^p = ||xi||_*^q within 1e-10
        rng = np.random.default_rng(7)
        for s in ALL_SPACES:
            p, q = s.exponent.p, s.exponent.q
            for _ in range(200):
                u = rng.standard_normal(s.dim)
                xi = s.duality_map(u)
                npow = s.norm(u) ** p
                ref = max(1.0, npow)
                assert abs(s.pairing(xi.values, u) - npow) <= 1e-10 * ref
                assert abs(s.dual_norm(xi.values) ** q - npow) <= 1e-10 * ref


class TestMuFromLambda:
    def test_values(self):
        assert mu_from_lambda(9.0, Exponent(2.0)) == pytest.approx(9.0)
        assert mu_from_lambda(8.0, Exponent(3.0)) == pytest.approx(math.sqrt(8.0), rel=1e-15)
        for p in (1.5, 2.0, 5.0):
            assert mu_from_lambda(1.0, Exponent(p)) == 1.0

    def test_domain_error(self):
        for lam in (0.0, -1.0, math.nan):
            with pytest.raises(DegenerateInputError):
                mu_from_lambda(lam, Exponent(2.0))


class TestOptimalShift:
    def test_p2_weighted_mean(self):
        s = quot(4, 2.0, h=0.7)
        rng = np.random.default_rng(8)
        for _ in range(20):
            u = rng.standard_normal(4)
            assert optimal_shift(u, s) == pytest.approx(-np.mean(u), rel=1e-13, abs=1e-14)

    def test_odd_symmetry(self):
        for p in (1.5, 2.0, 3.0, 4.0):
            s = quot(2, p)
            assert optimal_shift(np.array([1.0, -1.0]), s) == pytest.approx(0.0, abs=1e-12)

    def test_p4_two_point(self):
        s = quot(2, 4.0)
        assert optimal_shift(np.array([0.0, 1.0]), s) == pytest.approx(-0.5, rel=1e-12)

    def test_characterization_residual(self):
        rng = np.random.default_rng(9)
        for p in (1.5, 2.5, 3.5):
            s = quot(11, p, h=0.2)
            w = s.pairing_weights()
            for _ in range(40):
                u = rng.standard_normal(11)
                c = optimal_shift(u, s)
                resid = abs(float(np.sum(w * signed_power(u + c, p - 1.0))))
                scale = float(np.sum(w * np.abs(u + c) ** (p - 1.0)))
                assert resid <= 1e-12 * scale

    def test_wrong_kind(self):
        with pytest.raises(SpaceMismatchError):
            optimal_shift([1.0, 2.0], wlp(2, 2.0))


class TestRayProjectionAlpha:
    def test_on_ray(self):
        s = wlp(3, 2.0)
        rng = np.random.default_rng(10)
        w = rng.standard_normal(3)
        for gamma in (0.0, 0.7, 2.5):
            assert ray_projection_alpha(w, gamma * w, s) == pytest.approx(gamma, abs=1e-8)

    def test_negative_ray_projects_to_zero(self):
        for s in (wlp(4, 2.0), sup(4, 3.0)):
            rng = np.random.default_rng(11)
            w = rng.standard_normal(4)
            assert ray_projection_alpha(w, -w, s) == pytest.approx(0.0, abs=1e-8)

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(12)
        for s in (wlp(5, 2.0), sup(5, 2.0), quot(5, 3.0)):
            w = rng.standard_normal(5)
            u = rng.standard_normal(5)
            a = ray_projection_alpha(w, u, s)
            for scale in (0.3, 4.0):
                assert ray_projection_alpha(w, scale * u, s) == pytest.approx(scale * a, abs=1e-8 * max(1, scale * a))

    def test_zero_direction_rejected(self):
        with pytest.raises(DegenerateInputError):
            ray_projection_alpha(np.zeros(3), np.ones(3), wlp(3, 2.0))

    def test_coeffvec_arguments(self):
        s = wlp(3, 2.0)
        w = CoeffVec(np.array([1.0, 2.0, 0.5]), s)
        assert ray_projection_alpha(w, 3.0 * w.values) == pytest.approx(3.0, abs=1e-8)


class TestTaggedVectors:
    def test_coeffvec_validation(self):
        s = wlp(3, 2.0)
        with pytest.raises(SpaceMismatchError):
            CoeffVec(np.ones(4), s)
        with pytest.raises(DegenerateInputError):
            CoeffVec(np.array([1.0, math.nan, 0.0]), s)
        v = CoeffVec(np.ones(3), s)
        assert not v.values.flags.writeable

    def test_dualvec_quotient_zero_mean(self):
        s = quot(3, 2.0)
        with pytest.raises(DegenerateInputError):
            DualVec(np.array([1.0, 1.0, 1.0]), s)
        DualVec(np.array([1.0, -0.5, -0.5]), s)  # admissible

    def test_duality_map_output_is_admissible(self):
        rng = np.random.default_rng(13)
        for p in (1.5, 3.0):
            s = quot(8, p, h=0.4)
            for _ in range(30):
                DualVec(s.duality_map(rng.standard_normal(8)).values, s)
