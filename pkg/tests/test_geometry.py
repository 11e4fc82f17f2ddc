import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holomaze.geometry import (
    Shell,
    TangentBall,
    TidyViolation,
    as_complex,
    as_real,
    disc_distances,
    dist_to_tangent_ball,
    outermost_radius,
    validate_tidy,
)
from holomaze.sampling import hyperplane_basis, sphere_uniform


def brute_force_disc_distance(ball, p, count=200_000, rng=None):
    """Independent oracle: nearest point among a dense sample of the disc.

    The disc is rotation-symmetric about the in-plane direction towards p, so
    the true minimizer lies on the diameter segment aligned with that
    direction; sample that segment densely plus a volumetric fill as guard.
    """
    rng = rng or np.random.default_rng(0)
    p = np.asarray(p, dtype=float)
    basis = hyperplane_basis(ball.center)
    k = basis.shape[0]
    dirs = sphere_uniform(rng, k, count // 2)
    t = ball.radius * rng.random(count // 2) ** (1.0 / k)
    pts = ball.center[None, :] + (dirs * t[:, None]) @ basis
    best = float(np.linalg.norm(pts - p[None, :], axis=1).min())
    rel = p - ball.center
    inplane = basis @ rel               # coordinates of p in the hyperplane
    norm = np.linalg.norm(inplane)
    if norm > 0:
        axis = (inplane / norm) @ basis
        s = ball.radius * np.linspace(-1.0, 1.0, count // 2)
        seg = ball.center[None, :] + s[:, None] * axis[None, :]
        best = min(best, float(np.linalg.norm(seg - p[None, :], axis=1).min()))
    return best


def brute_force_outermost(ball, count=200_000, rng=None):
    rng = rng or np.random.default_rng(1)
    basis = hyperplane_basis(ball.center)
    k = basis.shape[0]
    dirs = sphere_uniform(rng, k, count)
    pts = ball.center[None, :] + (ball.radius * dirs) @ basis
    return float(np.linalg.norm(pts, axis=1).max())


class TestDistToTangentBall:
    BALL = TangentBall(np.array([0.8, 0.0, 0.0, 0.0]), 0.1)

    def test_point_inside_disc(self):
        assert dist_to_tangent_ball(self.BALL, np.array([0.8, 0.05, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-15)

    def test_pure_normal_offset(self):
        assert dist_to_tangent_ball(self.BALL, np.array([0.9, 0.0, 0.0, 0.0])) == pytest.approx(0.1, abs=1e-15)

    def test_mixed_offset_matches_oracle(self):
        p = np.array([0.85, 0.15, 0.0, 0.0])
        d = dist_to_tangent_ball(self.BALL, p)
        assert d == pytest.approx(np.sqrt(0.05**2 + 0.05**2), abs=1e-12)
        assert d == pytest.approx(brute_force_disc_distance(self.BALL, p), abs=1e-6)

    def test_randomized_against_brute_force(self):
        rng = np.random.default_rng(42)
        for trial in range(6):
            center = sphere_uniform(rng, 4, 1)[0] * rng.uniform(0.5, 0.9)
            ball = TangentBall(center, rng.uniform(0.02, 0.2))
            p = rng.uniform(-1, 1, 4)
            d = dist_to_tangent_ball(ball, p)
            d_oracle = brute_force_disc_distance(ball, p, rng=rng)
            # oracle samples inside the disc, so it can only overestimate
            assert d <= d_oracle + 1e-12
            assert d == pytest.approx(d_oracle, abs=1e-6)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-1, 1, (32, 4))
        batch = dist_to_tangent_ball(self.BALL, pts)
        singles = np.array([dist_to_tangent_ball(self.BALL, p) for p in pts])
        np.testing.assert_allclose(batch, singles, atol=1e-14)

    def test_disc_distances_matrix(self):
        balls = [self.BALL, TangentBall(np.array([0.0, 0.0, 0.7, 0.0]), 0.05)]
        centers = np.array([b.center for b in balls])
        radii = np.array([b.radius for b in balls])
        pts = np.random.default_rng(5).uniform(-1, 1, (10, 4))
        mat = disc_distances(centers, radii, pts)
        for j, b in enumerate(balls):
            np.testing.assert_allclose(mat[:, j], dist_to_tangent_ball(b, pts), atol=1e-14)


class TestOutermostRadius:
    def test_spec_values(self):
        assert outermost_radius(TangentBall(np.array([0.8, 0, 0, 0]), 0.1)) == pytest.approx(np.sqrt(0.65))
        assert outermost_radius(TangentBall(np.array([0.8, 0, 0, 0]), 0.0)) == pytest.approx(0.8)
        assert outermost_radius(TangentBall(np.array([0.76, 0, 0, 0]), 0.05)) == pytest.approx(np.sqrt(0.5801))

    def test_against_brute_force(self):
        rng = np.random.default_rng(7)
        center = sphere_uniform(rng, 4, 1)[0] * 0.76
        ball = TangentBall(center, 0.05)
        assert outermost_radius(ball) == pytest.approx(brute_force_outermost(ball, rng=rng), abs=1e-5)

    @settings(max_examples=50, deadline=None)
    @given(norm=st.floats(0.1, 2.0), a=st.floats(0.0, 1.0))
    def test_at_least_center_norm(self, norm, a):
        ball = TangentBall(np.array([norm, 0.0, 0.0, 0.0]), a)
        r = outermost_radius(ball)
        assert r >= ball.center_norm
        if a == 0.0:
            assert r == pytest.approx(ball.center_norm)
        elif a > 1e-6 * norm:  # strictness is visible above float rounding
            assert r > ball.center_norm


class TestValidateTidy:
    SHELL = Shell(0.7, 0.9)

    def test_two_level_nesting_ok(self):
        balls = [
            TangentBall(np.array([0.76, 0, 0, 0]), 0.05),
            TangentBall(np.array([0, 0.78, 0, 0]), 0.05),
        ]
        cert = validate_tidy(balls, self.SHELL)
        assert cert.ok
        np.testing.assert_allclose(cert.radial_levels, [0.76, 0.78])

    def test_equal_norm_unequal_radius_rejected(self):
        balls = [
            TangentBall(np.array([0.77, 0, 0, 0]), 0.05),
            TangentBall(np.array([0, 0.77, 0, 0]), 0.06),
        ]
        with pytest.raises(TidyViolation) as err:
            validate_tidy(balls, self.SHELL)
        assert err.value.bullet == "equal_radius"

    def test_single_ball_ok(self):
        cert = validate_tidy([TangentBall(np.array([0.8, 0, 0, 0]), 0.03)], self.SHELL)
        assert cert.ok and len(cert.radial_levels) == 1

    def test_nesting_violation(self):
        balls = [
            TangentBall(np.array([0.76, 0, 0, 0]), 0.08),   # reaches 0.7642
            TangentBall(np.array([0, 0.762, 0, 0]), 0.08),
        ]
        with pytest.raises(TidyViolation) as err:
            validate_tidy(balls, self.SHELL)
        assert err.value.bullet == "nesting"

    def test_outside_shell_rejected(self):
        with pytest.raises(TidyViolation) as err:
            validate_tidy([TangentBall(np.array([0.65, 0, 0, 0]), 0.01)], self.SHELL)
        assert err.value.bullet == "shell"
        with pytest.raises(TidyViolation):
            # outermost sqrt(0.899^2 + 0.05^2) = 0.9004 reaches past the outer radius
            validate_tidy([TangentBall(np.array([0.899, 0, 0, 0]), 0.05)], self.SHELL)

    def test_array_input_matches_objects(self):
        balls = [
            TangentBall(np.array([0.76, 0, 0, 0]), 0.02),
            TangentBall(np.array([0, 0.80, 0, 0]), 0.02),
        ]
        c1 = validate_tidy(balls, self.SHELL)
        c2 = validate_tidy((np.array([b.center for b in balls]), np.array([b.radius for b in balls])), self.SHELL)
        np.testing.assert_allclose(c1.radial_levels, c2.radial_levels)


def test_complex_real_roundtrip():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, (20, 6))
    np.testing.assert_allclose(as_real(as_complex(x)), x, atol=0)
    z = rng.uniform(-1, 1, (5, 3)) + 1j * rng.uniform(-1, 1, (5, 3))
    np.testing.assert_allclose(as_complex(as_real(z)), z, atol=0)


def test_shell_and_ball_json_roundtrip():
    sh = Shell(0.5, 0.9)
    assert Shell.from_json(sh.to_json()) == sh
    b = TangentBall(np.array([0.1, 0.2, 0.7, 0.0]), 0.05)
    b2 = TangentBall.from_json(b.to_json())
    np.testing.assert_allclose(b2.center, b.center)
    assert b2.radius == b.radius
