import numpy as np
import pytest

from holomaze.geometry import as_complex
from holomaze.polynomials import (
    CandidateMap,
    DegenerateMargin,
    Divisor,
    EpsilonBudget,
    MultiPoly,
    PolynomialError,
    cauchy_epsilon,
    min_rank_margin,
    newton_project_to_zero,
)


def z1_divisor(n=2):
    return Divisor((MultiPoly.variable(n, 0),))


def random_candidate(rng, n=2, degree=12, carrier="power"):
    n_terms = 20
    exps = rng.integers(0, degree + 1, (n_terms, n))
    keep = exps.sum(axis=1) <= degree
    exps = exps[keep]
    cfs = rng.normal(size=exps.shape[0]) + 1j * rng.normal(size=exps.shape[0])
    W = MultiPoly(n, exps, cfs)
    return CandidateMap(z1_divisor(n), 2, (W,), carrier)


def fd_jacobian(F, z, h=1e-5):
    """Central finite differences of the holomorphic map, independent oracle."""
    n = F.n
    out = np.empty((F.q, n), dtype=complex)
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = h
        out[:, k] = (F.eval(z + e) - F.eval(z - e)) / (2 * h)
    return out


class TestEval:
    def test_divisor_alone(self):
        F = CandidateMap.from_divisor(z1_divisor())
        assert F.eval(np.array([0.3, 0.0])) == pytest.approx(0.3)

    def test_vanishes_on_zero_set(self):
        W = (MultiPoly.constant(2, 1.5 + 0.5j),)
        F = CandidateMap(z1_divisor(), 2, W)
        for z2 in (0.0, 0.3, -0.9j):
            assert abs(F.eval(np.array([0.0, z2]))[0]) == 0.0

    def test_constant_w(self):
        W = (MultiPoly.constant(2, 1.0),)
        F = CandidateMap(z1_divisor(), 2, W)
        assert F.eval(np.array([0.5, 0.0]))[0] == pytest.approx(0.75)

    def test_matches_naive_summation(self):
        rng = np.random.default_rng(0)
        F = random_candidate(rng, degree=40)
        pts = rng.uniform(-0.7, 0.7, (50, 4))
        z = as_complex(pts)
        w_fast = F.W[0](z)
        w_naive = F.W[0].eval_naive(z)
        np.testing.assert_allclose(w_fast, w_naive, rtol=1e-10, atol=1e-12)


class TestJacobian:
    def test_constant_w_row(self):
        c = 2.0 - 1.0j
        F = CandidateMap(z1_divisor(), 2, (MultiPoly.constant(2, c),))
        z = np.array([0.3 + 0.1j, 0.5])
        row = F.jacobian(z)
        assert row[0, 0] == pytest.approx(1 + 2 * c * z[0])
        assert row[0, 1] == 0.0
        at_zero = F.jacobian(np.array([0.0, 0.7]))
        np.testing.assert_allclose(at_zero, [[1.0, 0.0]], atol=1e-15)

    def test_w_zero_gives_dh(self):
        F = CandidateMap.from_divisor(z1_divisor())
        z = np.array([0.2 + 0.4j, -0.1j])
        np.testing.assert_allclose(F.jacobian(z), F.divisor.jacobian(z), atol=0)

    def test_against_finite_differences(self):
        rng = np.random.default_rng(1)
        for trial in range(4):
            F = random_candidate(rng, degree=40 if trial % 2 else 8)
            z = as_complex(rng.uniform(-0.5, 0.5, 4))
            jac = F.jacobian(z)
            ref = fd_jacobian(F, z)
            np.testing.assert_allclose(jac, ref, rtol=1e-6, atol=1e-9)

    def test_free_carrier(self):
        W = (MultiPoly.variable(2, 1, 3.0),)
        F = CandidateMap(z1_divisor(), 2, W, carrier="one")
        z = np.array([0.2, 0.5 + 0.1j])
        assert F.eval(z)[0] == pytest.approx(z[0] + 3.0 * z[1])
        np.testing.assert_allclose(F.jacobian(z), [[1.0, 3.0]], atol=1e-15)


class TestOrderAgreement:
    def test_structural_interpolation(self):
        rng = np.random.default_rng(2)
        F = random_candidate(rng, degree=20)
        z2 = rng.uniform(-0.6, 0.6, 200) + 1j * rng.uniform(-0.6, 0.6, 200)
        pts = np.stack([np.zeros_like(z2), z2], axis=1)
        vals = F.eval(pts)
        assert np.abs(vals).max() < 1e-10
        jac = F.jacobian(pts)
        dh = F.divisor.jacobian(pts)
        assert np.abs(jac - dh).max() < 1e-8


class TestRankMargin:
    def test_linear_divisor_margin_one(self):
        F = CandidateMap.from_divisor(z1_divisor())
        pts = as_complex(np.random.default_rng(3).uniform(-0.5, 0.5, (64, 4)))
        assert min_rank_margin(F, pts) == pytest.approx(1.0)

    def test_constructed_critical_point(self):
        # f = z1 + z1^2, df = 1 + 2 z1 -> critical at z1 = -1/2
        F = CandidateMap(z1_divisor(), 2, (MultiPoly.constant(2, 1.0),))
        pts = np.array([[-0.5 + 0j, 0.1], [0.2, 0.0]])
        assert min_rank_margin(F, pts) == pytest.approx(0.0, abs=1e-15)

    def test_refinement_stability(self):
        rng = np.random.default_rng(4)
        F = random_candidate(rng, degree=6)
        coarse = as_complex(rng.uniform(-0.5, 0.5, (10_000, 4)))
        fine = as_complex(rng.uniform(-0.5, 0.5, (40_000, 4)))
        m1 = min_rank_margin(F, coarse)
        m2 = min_rank_margin(F, fine)
        assert m2 <= m1 * 1.05 + 1e-12


class TestCauchyEpsilon:
    def test_spec_arithmetic(self):
        # sigma = 0.5 via h = 0.5 z1, gap 0.05, safety 4
        F = CandidateMap.from_divisor(Divisor((MultiPoly.variable(2, 0, 0.5),)))
        samples = as_complex(np.random.default_rng(5).uniform(-0.3, 0.3, (128, 4)))
        eps = cauchy_epsilon(F, 0.70, 0.75, eps_prev=1.0, safety=4.0, samples=samples)
        assert eps == pytest.approx(0.5 * 0.05 / 8.0)

    def test_halving_dominates(self):
        F = CandidateMap.from_divisor(z1_divisor())
        samples = as_complex(np.random.default_rng(6).uniform(-0.3, 0.3, (64, 4)))
        eps_prev = 1e-9
        eps = cauchy_epsilon(F, 0.70, 0.75, eps_prev=eps_prev, samples=samples)
        assert eps < 0.5 * eps_prev

    def test_degenerate_margin(self):
        h = MultiPoly(2, np.array([[2, 0]]), np.array([1.0 + 0j]))  # h = z1^2
        F = CandidateMap.from_divisor(Divisor((h,)))
        with pytest.raises(DegenerateMargin):
            cauchy_epsilon(F, 0.7, 0.75, 1.0, samples=np.array([[0.0 + 0j, 0.0 + 0j]]))

    def test_interlacing_guard(self):
        F = CandidateMap.from_divisor(z1_divisor())
        with pytest.raises(PolynomialError):
            cauchy_epsilon(F, 0.8, 0.75, 1.0)


class TestEpsilonBudget:
    def test_halving_enforced(self):
        b = EpsilonBudget(0.1)
        b.admit(0.04)
        b.admit(0.019)
        assert b.halving_ok
        with pytest.raises(PolynomialError):
            b.admit(0.01)  # not below 0.019/2

    def test_tail_bound(self):
        b = EpsilonBudget(1.0)
        for e in (0.4, 0.19, 0.09):
            b.admit(e)
        assert b.tail_bound(1) == pytest.approx(0.68)
        assert b.tail_bound(1) < 2 * 0.4


def test_newton_projection_lands_on_divisor():
    h = MultiPoly.variable(2, 0)
    pts = np.random.default_rng(8).uniform(-0.5, 0.5, (40, 4))
    proj = newton_project_to_zero(h, pts)
    vals = h(as_complex(proj))
    assert np.abs(vals).max() < 1e-12
    # z2 coordinates untouched for h = z1
    np.testing.assert_allclose(proj[:, 2:], pts[:, 2:], atol=0)


def test_candidate_map_json_roundtrip():
    rng = np.random.default_rng(9)
    F = random_candidate(rng, degree=9)
    F2 = CandidateMap.from_json(F.to_json())
    pts = as_complex(rng.uniform(-0.5, 0.5, (16, 4)))
    np.testing.assert_allclose(F2.eval(pts), F.eval(pts), atol=0)
