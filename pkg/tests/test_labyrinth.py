import numpy as np
import pytest

from holomaze.geometry import Shell, TangentBall, dist_to_tangent_ball, validate_tidy
from holomaze.labyrinth import (
    BuildConfig,
    InflatedPair,
    LabyrinthIndex,
    NoSeparation,
    TangentLabyrinth,
    ZoneSpec,
    avoidance_neighborhood,
    build,
    empty_labyrinth,
    inflate,
    nesting_order,
    reduced_outer_radius,
    split,
)
from holomaze.polynomials import Divisor, MultiPoly


def z1_divisor():
    return Divisor((MultiPoly.variable(2, 0),))


def small_build(shell, delta=0.0, eta=0.2, **kw):
    cfg = BuildConfig(seed=7, certify=False, zone_plan=(ZoneSpec(levels=3, pitch_factor=3.5),), **kw)
    return build(shell, delta, eta, cfg=cfg)


def manual_labyrinth(specs, shell, delta=1.0, eta=0.2):
    """specs: list of (center, radius, level). Direct construction for tests."""
    centers = np.array([s[0] for s in specs], dtype=float)
    radii = np.array([s[1] for s in specs], dtype=float)
    levels = np.array([s[2] for s in specs], dtype=np.int64)
    uniq = sorted(set(levels))
    level_rho = np.array([np.linalg.norm(centers[levels == l][0]) for l in uniq])
    level_radius = np.array([radii[levels == l][0] for l in uniq])
    cert = validate_tidy((centers, radii), shell)
    return TangentLabyrinth(shell, centers, radii, levels, level_rho, level_radius,
                            cert, delta, eta, reduced_outer_radius(shell, eta),
                            float(np.hypot(level_rho, level_radius).max()), True)


class TestBuild:
    def test_reduced_shell_and_diameters(self):
        shell = Shell(0.5, 0.9)
        lab = small_build(shell, delta=0.0, eta=0.2)
        r0_bound = np.sqrt(0.25 + 0.01)
        assert lab.r0_formula == pytest.approx(min(0.9, r0_bound))
        assert lab.r0_used < r0_bound
        # every component inside the reduced radius and below the chord bound
        reach = np.hypot(np.linalg.norm(lab.centers, axis=1), lab.radii)
        assert reach.max() < r0_bound
        diam_bound = 2.0 * np.sqrt(lab.r0_used ** 2 - 0.25)
        assert (2.0 * lab.radii).max() <= diam_bound + 1e-12
        assert (2.0 * lab.radii).max() < 0.2

    def test_trivial_delta_accepts_first_rung(self):
        lab = small_build(Shell(0.5, 0.9), delta=0.0)
        assert lab.meta == {} or lab.meta.get("certificate", {}).get("status") in ("trivial", "uncertified")

    def test_tidy_and_levels(self):
        lab = small_build(Shell(0.5, 0.9))
        assert lab.tidy.ok
        assert len(lab.level_rho) == len(lab.level_radius)
        assert np.all(np.diff(lab.level_rho) > 0)

    def test_divisor_guard_filters_centers(self):
        shell = Shell(0.75, 0.8125)
        cfg = BuildConfig(
            seed=3, certify=False, divisor=z1_divisor(),
            zone_plan=(ZoneSpec(levels=2, pitch_factor=4.0, keep_min_vdist=0.3),))
        lab = build(shell, 0.0, 0.2, cfg=cfg)
        z1_abs = np.abs(lab.centers[:, 0] + 1j * lab.centers[:, 1])
        assert (z1_abs - lab.radii).min() >= 0.3 - 1e-9


class TestIndex:
    def test_min_distance_matches_brute_force(self):
        lab = small_build(Shell(0.5, 0.9))
        idx = LabyrinthIndex(lab)
        rng = np.random.default_rng(5)
        pts = rng.uniform(-0.75, 0.75, (80, 4))
        fast = idx.min_distance(pts)
        slow = np.array([
            min(dist_to_tangent_ball(lab.component(i), p) for i in range(len(lab)))
            for p in pts
        ])
        capped = np.isfinite(fast)
        np.testing.assert_allclose(fast[capped], slow[capped], atol=1e-10)

    def test_feasibility_flags_disc_points(self):
        lab = small_build(Shell(0.5, 0.9))
        idx = LabyrinthIndex(lab)
        on_disc = lab.centers[:5]
        assert not idx.feasible(on_disc, 1e-4).any()

    def test_radial_leak_decreases_with_density(self):
        shell = Shell(0.5, 0.9)
        sparse = build(shell, 0.0, 0.2, cfg=BuildConfig(
            seed=1, certify=False, zone_plan=(ZoneSpec(levels=2, pitch_factor=8.0),)))
        dense = build(shell, 0.0, 0.2, cfg=BuildConfig(
            seed=1, certify=False, zone_plan=(ZoneSpec(levels=6, pitch_factor=2.3),)))
        rng = np.random.default_rng(0)
        leak_sparse = LabyrinthIndex(sparse).radial_leak(20000, rng, clearance=1e-4)
        leak_dense = LabyrinthIndex(dense).radial_leak(20000, np.random.default_rng(0), clearance=1e-4)
        assert leak_dense < leak_sparse


class TestSplit:
    SHELL = Shell(0.7, 0.9)

    def test_component_through_divisor(self):
        lab = manual_labyrinth([(np.array([0.0, 0.0, 0.77, 0.0]), 0.05, 0)], self.SHELL)
        sp = split(lab, z1_divisor(), tol=1e-3)
        assert list(sp.lambda_V) == [0]
        assert sp.min_h[0] < 1e-6

    def test_component_far_from_divisor(self):
        lab = manual_labyrinth([(np.array([0.77, 0.0, 0.0, 0.0]), 0.05, 0)], self.SHELL)
        sp = split(lab, z1_divisor(), tol=1e-3)
        assert list(sp.lambda_0) == [0]
        # |z1| >= 0.77 on that disc
        assert sp.min_h[0] >= 0.77 - 1e-9

    def test_no_divisor_all_lambda0(self):
        lab = manual_labyrinth([(np.array([0.0, 0.0, 0.77, 0.0]), 0.05, 0)], self.SHELL)
        sp = split(lab, None, tol=1e-3)
        assert sp.lambda_V.size == 0 and list(sp.lambda_0) == [0]

    def test_refinement_stability(self):
        lab = manual_labyrinth([(np.array([0.3, 0.0, 0.7, 0.0]), 0.05, 0)], self.SHELL)
        sp1 = split(lab, z1_divisor(), tol=1e-2, samples_per_component=64)
        sp2 = split(lab, z1_divisor(), tol=1e-2, samples_per_component=128)
        assert list(sp1.lambda_0) == list(sp2.lambda_0) == [0]


class TestInflate:
    SHELL = Shell(0.7, 0.9)

    def test_two_component_gap(self):
        # same level, centers 0.77 apart in angle giving a known chord gap
        rho, a = 0.77, 0.02
        th = 0.12
        c1 = np.array([rho, 0.0, 0.0, 0.0])
        c2 = np.array([rho * np.cos(th), 0.0, rho * np.sin(th), 0.0])
        lab = manual_labyrinth([(c1, a, 0), (c2, a, 0)], self.SHELL)
        sp = split(lab, None, tol=1e-3)
        gap = 2 * rho * np.sin(th / 2) - 2 * a
        pair = inflate(sp, lab, None, r_ball=0.5, mu_fraction=0.25)
        assert pair.mu == pytest.approx(0.25 * min(gap, rho - 0.5), rel=1e-9)

    def test_single_component_ball_distance(self):
        lab = manual_labyrinth([(np.array([0.77, 0, 0, 0]), 0.02, 0)], self.SHELL)
        sp = split(lab, None, tol=1e-3)
        pair = inflate(sp, lab, None, r_ball=0.75, mu_fraction=0.25)
        assert pair.mu == pytest.approx(0.25 * 0.02)

    def test_empty_lambda0(self):
        lab = manual_labyrinth([(np.array([0.0, 0.0, 0.77, 0.0]), 0.05, 0)], self.SHELL)
        sp = split(lab, z1_divisor(), tol=1e-3)
        pair = InflatedPair(0.0, sp.lambda_0)
        assert pair.empty

    def test_spec_gap_arithmetic(self):
        # two components at an effective gap of 0.04 with fraction 0.25 -> mu = 0.01
        rho, a = 0.77, 0.02
        th = 2 * np.arcsin((0.04 + 2 * a) / (2 * rho))
        c1 = np.array([rho, 0.0, 0.0, 0.0])
        c2 = np.array([rho * np.cos(th), 0.0, rho * np.sin(th), 0.0])
        lab = manual_labyrinth([(c1, a, 0), (c2, a, 0)], self.SHELL)
        sp = split(lab, None, tol=1e-3)
        pair = inflate(sp, lab, None, r_ball=0.1, mu_fraction=0.25)
        assert pair.mu == pytest.approx(0.01, rel=1e-9)


class TestNesting:
    def test_single_level(self):
        lab = manual_labyrinth([(np.array([0.77, 0, 0, 0]), 0.05, 0)], Shell(0.7, 0.9))
        s = nesting_order(lab, r_ball=0.75)
        assert s.shape == (2,)
        assert 0.75 < s[0] < 0.77
        assert np.hypot(0.77, 0.05) < s[1] < 0.9

    def test_empty(self):
        lab = empty_labyrinth(Shell(0.7, 0.9))
        assert nesting_order(lab, 0.5).size == 0

    def test_two_levels_interleave(self):
        lab = manual_labyrinth(
            [(np.array([0.76, 0, 0, 0]), 0.005, 0), (np.array([0, 0.78, 0, 0]), 0.005, 1)],
            Shell(0.7, 0.9))
        s = nesting_order(lab, 0.73)
        assert s.shape == (3,)
        assert np.all(np.diff(s) > 0)
        assert 0.73 < s[0] < 0.76 and s[1] < 0.78

    def test_no_separation(self):
        lab = manual_labyrinth([(np.array([0.77, 0, 0, 0]), 0.05, 0)], Shell(0.7, 0.9))
        with pytest.raises(NoSeparation):
            nesting_order(lab, r_ball=0.78)


def test_avoidance_margin_inside_shell():
    lab = manual_labyrinth([(np.array([0.77, 0, 0, 0]), 0.02, 0)], Shell(0.7, 0.9))
    sp = split(lab, None, tol=1e-3)
    pair = inflate(sp, lab, None, 0.7, mu_fraction=0.25)
    nb = avoidance_neighborhood(lab, pair)
    assert 0 < nb.margin < min(0.9 - lab.r0_used, 0.77 - 0.7)


def test_labyrinth_json_roundtrip():
    lab = manual_labyrinth(
        [(np.array([0.76, 0, 0, 0]), 0.005, 0), (np.array([0, 0.78, 0, 0]), 0.005, 1)],
        Shell(0.7, 0.9))
    lab2 = TangentLabyrinth.from_json(lab.to_json())
    np.testing.assert_allclose(lab2.centers, lab.centers)
    np.testing.assert_allclose(lab2.level_rho, lab.level_rho)
