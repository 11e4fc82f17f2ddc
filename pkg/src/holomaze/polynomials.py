"""Multivariate complex polynomials, divisors, and the interpolating
candidate ansatz f_i = h_i + carrier_i * W_i.

With carrier h_i^s the ansatz vanishes on the divisor zero set V and agrees
with h to order s there by construction, so divisor interpolation is never a
fitted constraint.  A trivial carrier (constant 1) supports runs without a
divisor.  Evaluation uses iterated per-variable power tables; derivatives are
exact coefficient operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHUNK = 2048


class PolynomialError(ValueError):
    pass


class DegenerateMargin(PolynomialError):
    """A rank or distance margin collapsed to the floor."""


class NotSubmersive(PolynomialError):
    """Jacobian rank margin at or below the floor on the sampled region."""


class MultiPoly:
    """Polynomial C^n -> C stored as (exponent row, coefficient) pairs."""

    __slots__ = ("n", "exponents", "coeffs", "_partials")

    def __init__(self, n: int, exponents: np.ndarray, coeffs: np.ndarray):
        self.n = int(n)
        exponents = np.atleast_2d(np.asarray(exponents, dtype=np.int64))
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        if exponents.size == 0:
            exponents = np.zeros((0, self.n), dtype=np.int64)
            coeffs = np.zeros(0, dtype=complex)
        if exponents.shape[1] != self.n or exponents.shape[0] != coeffs.shape[0]:
            raise PolynomialError("exponent/coefficient shape mismatch")
        keep = coeffs != 0
        self.exponents = exponents[keep]
        self.coeffs = coeffs[keep]
        self._partials: dict[int, "MultiPoly"] | None = None

    # construction helpers -------------------------------------------------
    @staticmethod
    def zero(n: int) -> "MultiPoly":
        return MultiPoly(n, np.zeros((0, n), dtype=np.int64), np.zeros(0, dtype=complex))

    @staticmethod
    def constant(n: int, c: complex) -> "MultiPoly":
        return MultiPoly(n, np.zeros((1, n), dtype=np.int64), np.array([c], dtype=complex))

    @staticmethod
    def variable(n: int, k: int, c: complex = 1.0) -> "MultiPoly":
        e = np.zeros((1, n), dtype=np.int64)
        e[0, k] = 1
        return MultiPoly(n, e, np.array([c], dtype=complex))

    @staticmethod
    def from_terms(n: int, terms: dict[tuple, complex]) -> "MultiPoly":
        if not terms:
            return MultiPoly.zero(n)
        exps = np.array([list(a) for a in terms.keys()], dtype=np.int64)
        cfs = np.array(list(terms.values()), dtype=complex)
        return MultiPoly(n, exps, cfs)

    # basic structure -------------------------------------------------------
    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if self.coeffs.size else 0

    @property
    def nterms(self) -> int:
        return int(self.coeffs.size)

    def terms(self) -> dict[tuple, complex]:
        return {tuple(int(v) for v in e): complex(c) for e, c in zip(self.exponents, self.coeffs)}

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        if other.n != self.n:
            raise PolynomialError("dimension mismatch")
        t = self.terms()
        for a, c in other.terms().items():
            t[a] = t.get(a, 0.0) + c
        return MultiPoly.from_terms(self.n, t)

    def scaled(self, c: complex) -> "MultiPoly":
        return MultiPoly(self.n, self.exponents.copy(), self.coeffs * c)

    # evaluation ------------------------------------------------------------
    def __call__(self, z: np.ndarray) -> np.ndarray:
        """Evaluate at complex points z of shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z.reshape(-1, self.n)
        out = np.zeros(pts.shape[0], dtype=complex)
        if self.coeffs.size:
            for lo in range(0, pts.shape[0], CHUNK):
                blk = pts[lo:lo + CHUNK]
                out[lo:lo + CHUNK] = monomial_matrix(blk, self.exponents) @ self.coeffs
        if single:
            return out[0]
        return out.reshape(z.shape[:-1])

    def eval_naive(self, z: np.ndarray) -> np.ndarray:
        """Straight sum of c * prod z^alpha; kept as an independent
        accumulation order for cross-checking."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        out = np.zeros(pts.shape[0], dtype=complex)
        for e, c in zip(self.exponents, self.coeffs):
            term = np.full(pts.shape[0], c, dtype=complex)
            for k in range(self.n):
                term = term * pts[:, k] ** int(e[k])
            out += term
        return out[0] if single else out

    # calculus ---------------------------------------------------------------
    def partial(self, k: int) -> "MultiPoly":
        if self._partials is None:
            self._partials = {}
        if k not in self._partials:
            mask = self.exponents[:, k] > 0
            exps = self.exponents[mask].copy()
            cfs = self.coeffs[mask] * exps[:, k]
            exps[:, k] -= 1
            self._partials[k] = MultiPoly(self.n, exps, cfs)
        return self._partials[k]

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """Holomorphic gradient (d/dz_1, ..., d/dz_n) at z of shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        g = np.stack([self.partial(k)(pts) for k in range(self.n)], axis=-1)
        return g[0] if single else g

    # io ----------------------------------------------------------------------
    def to_json(self) -> list[dict]:
        return [
            {"alpha": [int(v) for v in e], "re": float(c.real), "im": float(c.imag)}
            for e, c in zip(self.exponents, self.coeffs)
        ]

    @staticmethod
    def from_json(n: int, terms: list[dict]) -> "MultiPoly":
        if not terms:
            return MultiPoly.zero(n)
        exps = np.array([t["alpha"] for t in terms], dtype=np.int64)
        cfs = np.array([t["re"] + 1j * t["im"] for t in terms], dtype=complex)
        return MultiPoly(n, exps, cfs)


def monomial_matrix(z: np.ndarray, exponents: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Matrix of monomial values z^alpha, shape (N, n_terms).

    Power tables are built by iterated multiplication per variable, then
    gathered per exponent row.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    m = exponents.shape[0]
    if out is None:
        out = np.empty((z.shape[0], m), dtype=complex)
    if m == 0:
        return out
    max_deg = exponents.max(axis=0)
    out[:] = 1.0
    for k in range(exponents.shape[1]):
        d = int(max_deg[k])
        if d == 0:
            continue
        table = np.empty((z.shape[0], d + 1), dtype=complex)
        table[:, 0] = 1.0
        for p in range(1, d + 1):
            table[:, p] = table[:, p - 1] * z[:, k]
        out *= table[:, exponents[:, k]]
    return out


@dataclass(frozen=True)
class Divisor:
    """Zero set V = h^{-1}(0) inside the ball, h a polynomial map to C^q."""

    h: tuple
    smooth: bool = True

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        if not self.h:
            raise PolynomialError("divisor needs at least one component")

    @property
    def q(self) -> int:
        return len(self.h)

    @property
    def n(self) -> int:
        return self.h[0].n

    def eval(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        vals = np.stack([hi(pts) for hi in self.h], axis=-1)
        return vals[0] if single else vals

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        rows = np.stack([hi.gradient(pts) for hi in self.h], axis=-2)  # (N, q, n)
        return rows[0] if single else rows

    def to_json(self) -> dict:
        return {"q": self.q, "smooth": self.smooth, "components": [hi.to_json() for hi in self.h]}

    @staticmethod
    def from_json(n: int, obj: dict) -> "Divisor":
        comps = tuple(MultiPoly.from_json(n, t) for t in obj["components"])
        return Divisor(comps, bool(obj.get("smooth", True)))


@dataclass(frozen=True)
class CandidateMap:
    """Map with components f_i = h_i + carrier_i * W_i.

    carrier == "power": carrier_i = h_i^s, so f vanishes on V and df = dh on
    V for s >= 2.  carrier == "one": plain additive corrections with no
    divisor anchoring (used when no zero-set control is requested).
    """

    divisor: Divisor
    order: int
    W: tuple
    carrier: str = "power"

    def __post_init__(self):
        object.__setattr__(self, "W", tuple(self.W))
        if len(self.W) != self.divisor.q:
            raise PolynomialError("W must have one component per divisor component")
        if self.order < 2:
            raise PolynomialError("interpolation order must be >= 2")
        if self.carrier not in ("power", "one"):
            raise PolynomialError(f"unknown carrier {self.carrier!r}")

    @property
    def n(self) -> int:
        return self.divisor.n

    @property
    def q(self) -> int:
        return self.divisor.q

    @staticmethod
    def from_divisor(divisor: Divisor, order: int = 2, carrier: str = "power") -> "CandidateMap":
        w0 = tuple(MultiPoly.zero(divisor.n) for _ in range(divisor.q))
        return CandidateMap(divisor, order, w0, carrier)

    def with_W(self, W: tuple) -> "CandidateMap":
        return CandidateMap(self.divisor, self.order, tuple(W), self.carrier)

    def carrier_values(self, h_vals: np.ndarray) -> np.ndarray:
        if self.carrier == "power":
            return h_vals ** self.order
        return np.ones_like(h_vals)

    def eval(self, z: np.ndarray) -> np.ndarray:
        """f(z), shape (..., q)."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        h_vals = self.divisor.eval(pts)
        w_vals = np.stack([wi(pts) for wi in self.W], axis=-1)
        f = h_vals + self.carrier_values(h_vals) * w_vals
        return f[0] if single else f

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """Exact complex Jacobian, shape (..., q, n)."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        dh = self.divisor.jacobian(pts)                       # (N, q, n)
        dw = np.stack([wi.gradient(pts) for wi in self.W], axis=-2)
        if self.carrier == "power":
            h_vals = self.divisor.eval(pts)                   # (N, q)
            w_vals = np.stack([wi(pts) for wi in self.W], axis=-1)
            s = self.order
            front = 1.0 + s * h_vals ** (s - 1) * w_vals
            jac = dh * front[..., None] + (h_vals ** s)[..., None] * dw
        else:
            jac = dh + dw
        return jac[0] if single else jac

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "s": self.order,
            "carrier": self.carrier,
            "divisor": self.divisor.to_json(),
            "W": [wi.to_json() for wi in self.W],
        }

    @staticmethod
    def from_json(obj: dict) -> "CandidateMap":
        n = int(obj["n"])
        div = Divisor.from_json(n, obj["divisor"])
        W = tuple(MultiPoly.from_json(n, t) for t in obj["W"])
        return CandidateMap(div, int(obj["s"]), W, obj.get("carrier", "power"))


def singular_margins(F: CandidateMap, samples: np.ndarray) -> np.ndarray:
    """Smallest singular value of the Jacobian at each sample."""
    jac = F.jacobian(samples)
    if F.q == 1:
        return np.linalg.norm(jac[:, 0, :], axis=1)
    return np.linalg.svd(jac, compute_uv=False)[:, -1]


def min_rank_margin(F: CandidateMap, samples: np.ndarray) -> float:
    """min over samples of the smallest Jacobian singular value; > 0 is the
    sampled submersivity verdict."""
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    if samples.shape[0] == 0:
        raise PolynomialError("empty sample list")
    return float(singular_margins(F, samples).min())


def cauchy_epsilon(F_prev: CandidateMap, R_prev: float, r_cur: float,
                   eps_prev: float, safety: float = 4.0,
                   samples: np.ndarray | None = None,
                   sample_count: int = 2048, seed: int = 7) -> float:
    """Perturbation budget that keeps every 2*eps-close map submersive on the
    R_prev ball.

    Any phi with |phi - F_prev| < 2*eps on the r_cur ball has, by the
    one-variable Cauchy inequality along complex lines, derivative error at
    most 2*eps/(r_cur - R_prev) on the R_prev ball; keeping that below
    sigma_min/safety preserves the sampled rank margin.  The halving term
    dominates when eps_prev is already tiny.
    """
    if not R_prev < r_cur:
        raise PolynomialError(f"need R_prev < r_cur, got {R_prev} >= {r_cur}")
    if safety < 2.0:
        raise PolynomialError("safety factor below 2 voids the derivative bound")
    if samples is None:
        from .sampling import ball_fill

        samples = _to_complex_samples(ball_fill(2 * F_prev.n, sample_count, R_prev, seed))
    sigma = min_rank_margin(F_prev, samples)
    if sigma <= 0.0:
        raise DegenerateMargin("rank margin vanished on the sample set")
    halving = 0.5 * eps_prev * (1.0 - 1e-6)
    cauchy = sigma * (r_cur - R_prev) / (2.0 * safety)
    return float(min(halving, cauchy))


def _to_complex_samples(x: np.ndarray) -> np.ndarray:
    from .geometry import as_complex

    return as_complex(x)


@dataclass
class EpsilonBudget:
    """Per-step approximation budgets with the strict halving invariant."""

    eps0: float
    values: list = field(default_factory=list)

    def admit(self, eps: float) -> float:
        prev = self.values[-1] if self.values else self.eps0
        if not (0.0 < eps < 0.5 * prev):
            raise PolynomialError(f"epsilon {eps} breaks halving below {prev}")
        self.values.append(float(eps))
        return float(eps)

    @property
    def halving_ok(self) -> bool:
        seq = [self.eps0] + self.values
        return all(0.0 < b < 0.5 * a for a, b in zip(seq, seq[1:]))

    def tail_bound(self, j: int) -> float:
        """Sum of recorded values from step j on (1-based)."""
        return float(sum(self.values[j - 1:]))


def newton_project_to_zero(h: MultiPoly, pts: np.ndarray, tol: float = 1e-12,
                           max_iter: int = 50) -> np.ndarray:
    """Project real-coordinate points onto {h = 0} by damped Newton using the
    minimal-norm complex step."""
    from .geometry import as_complex, as_real

    z = as_complex(np.atleast_2d(np.asarray(pts, dtype=float)))
    for _ in range(max_iter):
        vals = h(z)
        live = np.abs(vals) > tol
        if not live.any():
            break
        g = h.gradient(z[live])
        g2 = np.sum(np.abs(g) ** 2, axis=1)
        g2 = np.where(g2 < 1e-30, 1.0, g2)
        step = (vals[live] / g2)[:, None] * np.conj(g)
        z[live] = z[live] - step
    return as_real(z)
