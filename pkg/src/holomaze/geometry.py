"""Points, shells, and tangent balls in R^{2n} identified with C^n.

A tangent ball is a closed round ball inside a real affine hyperplane
orthogonal to the position vector of its own center.  All predicates here
are closed-form; nothing is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-9


class GeometryError(ValueError):
    pass


class TidyViolation(GeometryError):
    """A collection of tangent balls breaks one of the tidiness rules.

    Attributes
    ----------
    bullet : str
        Which rule failed: "shell", "equal_radius" or "nesting".
    pair : tuple
        Indices of the offending ball(s).
    """

    def __init__(self, bullet: str, pair: tuple, message: str):
        super().__init__(message)
        self.bullet = bullet
        self.pair = pair


def as_complex(x: np.ndarray) -> np.ndarray:
    """View real coordinates (..., 2n) as complex (..., n), z_k = x_{2k} + i x_{2k+1}."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2 != 0:
        raise GeometryError(f"real coordinate length {x.shape[-1]} is odd")
    return x[..., 0::2] + 1j * x[..., 1::2]


def as_real(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`as_complex`."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],), dtype=float)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


@dataclass(frozen=True)
class Shell:
    """Spherical shell {z : inner < |z| < outer}."""

    inner: float
    outer: float

    def __post_init__(self):
        if not (0.0 < self.inner < self.outer):
            raise GeometryError(f"invalid shell radii ({self.inner}, {self.outer})")

    @property
    def thickness(self) -> float:
        return self.outer - self.inner

    def to_json(self) -> dict:
        return {"inner": self.inner, "outer": self.outer}

    @staticmethod
    def from_json(obj: dict) -> "Shell":
        return Shell(float(obj["inner"]), float(obj["outer"]))


@dataclass(frozen=True)
class TangentBall:
    """Closed ball of radius `radius` in the hyperplane through `center`
    orthogonal to `center`.  The hyperplane is always derived from the
    center; no separate normal is stored."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if c.ndim != 1 or c.shape[0] % 2 != 0:
            raise GeometryError("center must be a real vector of even length")
        if np.linalg.norm(c) <= 0.0:
            raise GeometryError("tangent ball center cannot be the origin")
        if self.radius < 0.0:
            raise GeometryError("negative radius")

    @property
    def center_norm(self) -> float:
        return float(np.linalg.norm(self.center))

    @property
    def unit_normal(self) -> np.ndarray:
        return self.center / self.center_norm

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def to_json(self) -> dict:
        return {"center": [float(v) for v in self.center], "radius": float(self.radius)}

    @staticmethod
    def from_json(obj: dict) -> "TangentBall":
        return TangentBall(np.asarray(obj["center"], dtype=float), float(obj["radius"]))


def outermost_radius(ball: TangentBall) -> float:
    """max |y| over y in the ball: sqrt(|x|^2 + a^2) by Pythagoras."""
    return float(np.hypot(ball.center_norm, ball.radius))


def _outermost_radius_arr(center_norms: np.ndarray, radii: np.ndarray) -> np.ndarray:
    return np.hypot(center_norms, radii)


def dist_to_tangent_ball(ball: TangentBall, p: np.ndarray) -> float | np.ndarray:
    """Euclidean distance from p (shape (2n,) or (N, 2n)) to the ball.

    With u the signed offset of p along the unit normal and rho the
    in-plane distance from the center, the distance is
    sqrt(u^2 + max(rho - a, 0)^2); it vanishes exactly on the ball.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = p[None, :] if single else p
    d = disc_distances(ball.center[None, :], np.array([ball.radius]), pts)[:, 0]
    return float(d[0]) if single else d


def disc_distances(centers: np.ndarray, radii: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distances from each point to each tangent ball, shape (N_points, N_balls)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.norm(centers, axis=1)
    normals = centers / norms[:, None]
    rel = points[:, None, :] - centers[None, :, :]          # (N, K, 2n)
    u = np.einsum("nkd,kd->nk", rel, normals)
    inplane = rel - u[:, :, None] * normals[None, :, :]
    rho = np.linalg.norm(inplane, axis=2)
    excess = np.maximum(rho - radii[None, :], 0.0)
    return np.hypot(u, excess)


@dataclass(frozen=True)
class TidyCertificate:
    """Witness that a collection of tangent balls is tidy inside a shell.

    nesting_ok[i] refers to the consecutive level pair (i, i+1); because the
    levels are sorted, consecutive containment implies containment for every
    pair with smaller-vs-larger center norm.
    """

    radial_levels: np.ndarray
    per_level_radius: np.ndarray
    nesting_ok: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        for name in ("radial_levels", "per_level_radius", "nesting_ok"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.nesting_ok)) if self.nesting_ok.size else True

    def to_json(self) -> dict:
        return {
            "radial_levels": [float(v) for v in self.radial_levels],
            "per_level_radius": [float(v) for v in self.per_level_radius],
            "nesting_ok": [bool(v) for v in self.nesting_ok],
        }


def _split_ball_input(balls) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(balls, tuple) and len(balls) == 2:
        centers = np.atleast_2d(np.asarray(balls[0], dtype=float))
        radii = np.atleast_1d(np.asarray(balls[1], dtype=float))
    else:
        centers = np.array([b.center for b in balls], dtype=float)
        radii = np.array([b.radius for b in balls], dtype=float)
    if centers.shape[0] != radii.shape[0]:
        raise GeometryError("centers/radii length mismatch")
    return centers, radii


def validate_tidy(balls, shell: Shell, tol: float = DEFAULT_TOL) -> TidyCertificate:
    """Check tidiness of tangent balls inside a shell.

    Rules:
      * every ball lies strictly inside the shell (inner < |x| and
        outermost radius < outer),
      * balls with equal center norm (within tol) carry equal radii,
      * for center norms s < t, every ball at s is contained in t*B
        (closed-form: outermost radius at s below t).

    Accepts a list of TangentBall or a tuple (centers, radii).
    Raises TidyViolation identifying the first offending pair.
    """
    centers, radii = _split_ball_input(balls)
    if centers.shape[0] == 0:
        raise GeometryError("empty ball collection")
    norms = np.linalg.norm(centers, axis=1)
    outer = _outermost_radius_arr(norms, radii)

    bad = np.where(norms <= shell.inner + tol)[0]
    if bad.size:
        i = int(bad[0])
        raise TidyViolation("shell", (i,), f"ball {i} center norm {norms[i]:.6g} not above inner radius {shell.inner}")
    bad = np.where(outer >= shell.outer - tol)[0]
    if bad.size:
        i = int(bad[0])
        raise TidyViolation("shell", (i,), f"ball {i} outermost radius {outer[i]:.6g} reaches outer radius {shell.outer}")

    order = np.argsort(norms, kind="stable")
    sn, sr = norms[order], radii[order]
    # group equal norms within tol
    level_start = [0]
    for i in range(1, sn.size):
        if sn[i] - sn[level_start[-1]] > tol:
            level_start.append(i)
    level_start.append(sn.size)

    levels, level_radius = [], []
    for k in range(len(level_start) - 1):
        lo, hi = level_start[k], level_start[k + 1]
        r0 = sr[lo]
        mism = np.where(np.abs(sr[lo:hi] - r0) > tol)[0]
        if mism.size:
            i, j = int(order[lo]), int(order[lo + mism[0]])
            raise TidyViolation(
                "equal_radius", (i, j),
                f"balls {i} and {j} share center norm {sn[lo]:.6g} but have radii {radii[i]:.6g} != {radii[j]:.6g}")
        levels.append(float(sn[lo:hi].max()))
        level_radius.append(float(r0))

    levels_arr = np.asarray(levels)
    radius_arr = np.asarray(level_radius)
    reach = _outermost_radius_arr(levels_arr, radius_arr)
    nesting = np.ones(max(len(levels) - 1, 0), dtype=bool)
    for k in range(len(levels) - 1):
        if not reach[k] < levels_arr[k + 1] - tol:
            i = int(order[level_start[k]])
            j = int(order[level_start[k + 1]])
            raise TidyViolation(
                "nesting", (i, j),
                f"level at {levels_arr[k]:.6g} reaches {reach[k]:.6g}, not inside |x|={levels_arr[k + 1]:.6g} ball")
    return TidyCertificate(levels_arr, radius_arr, nesting)
