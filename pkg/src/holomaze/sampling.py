"""Deterministic point generation: low-discrepancy ball fills, near-uniform
nets on spheres, and samples on tangent-ball discs.

Everything is seeded; two calls with the same arguments return identical
arrays, which is what makes run artifacts reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

from .geometry import as_real

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Fan one user seed out to independent child generators."""
    seqs = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]


def ball_fill(dim: int, count: int, radius: float, seed: int) -> np.ndarray:
    """Low-discrepancy fill of the closed ball of given radius in R^dim.

    Sobol points are mapped through Gaussian inverse CDFs to a direction and
    through u^(1/dim) to a radius, preserving low discrepancy well enough for
    least-squares sampling duty.
    """
    sob = qmc.Sobol(d=dim + 1, scramble=True, seed=seed)
    u = sob.random(count)
    # avoid the exact 0 that Sobol can emit at the origin point
    u = (u + 0.5 / count) % 1.0
    from scipy.special import ndtri

    g = ndtri(np.clip(u[:, :dim], 1e-12, 1.0 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * u[:, dim] ** (1.0 / dim)
    return g * r[:, None]


def ball_uniform(rng: np.random.Generator, dim: int, count: int, radius: float) -> np.ndarray:
    """Plain uniform draw in the ball (used for held-out validation sets)."""
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / dim)
    return g * r[:, None]


def sphere_uniform(rng: np.random.Generator, dim: int, count: int, radius: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return radius * g


def random_rotation(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish random rotation via QR of a Gaussian matrix."""
    m = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def fibonacci_s2(count: int) -> np.ndarray:
    """Fibonacci lattice on the unit 2-sphere."""
    k = np.arange(count, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / count
    phi = 2.0 * np.pi * ((k / GOLDEN) % 1.0)
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def s3_net(pitch: float, rotation: np.ndarray | None = None) -> np.ndarray:
    """Near-uniform net on the unit 3-sphere with grid spacing ~pitch.

    Uses the torus fibration: points (cos(t) e^{i a}, sin(t) e^{i b}) with the
    two circle directions stepped at arclength ~pitch and golden-ratio phase
    offsets per latitude so consecutive rings do not align.
    """
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    n_lat = max(int(np.ceil((np.pi / 2.0) / pitch)), 1)
    pts = []
    for i in range(n_lat):
        t = (i + 0.5) * (np.pi / 2.0) / n_lat
        c, s = np.cos(t), np.sin(t)
        n1 = max(int(np.ceil(2.0 * np.pi * c / pitch)), 1)
        n2 = max(int(np.ceil(2.0 * np.pi * s / pitch)), 1)
        off1 = (i / GOLDEN) % 1.0
        off2 = (i * GOLDEN) % 1.0
        a = 2.0 * np.pi * ((np.arange(n1) + off1) / n1)
        b = 2.0 * np.pi * ((np.arange(n2) + off2) / n2)
        aa, bb = np.meshgrid(a, b, indexing="ij")
        z = np.empty((n1 * n2, 2), dtype=complex)
        z[:, 0] = (c * np.exp(1j * aa)).ravel()
        z[:, 1] = (s * np.exp(1j * bb)).ravel()
        pts.append(as_real(z))
    net = np.concatenate(pts, axis=0)
    if rotation is not None:
        net = net @ rotation.T
    return net


def sphere_net(dim: int, pitch: float, rotation: np.ndarray | None = None,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """Net of resolution ~pitch on the unit sphere in R^dim.

    dim == 4 gets the structured torus net; other dimensions fall back to a
    seeded random net thinned to the requested minimum spacing.
    """
    if dim == 4:
        return s3_net(pitch, rotation)
    if rng is None:
        raise ValueError(f"sphere_net in R^{dim} needs an rng")
    # best-candidate thinning; adequate for small nets in untested dimensions
    target = int(8.0 / pitch ** (dim - 1)) + 16
    cand = sphere_uniform(rng, dim, target * 4)
    kept: list[np.ndarray] = []
    min_dot = np.cos(pitch)
    for p in cand:
        if all(np.dot(p, q) < min_dot for q in kept):
            kept.append(p)
        if len(kept) >= target:
            break
    net = np.array(kept)
    if rotation is not None:
        net = net @ rotation.T
    return net


def hyperplane_basis(normal: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the hyperplane orthogonal to `normal`."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    d = n.shape[0]
    basis = np.eye(d)
    idx = int(np.argmax(np.abs(basis @ n)))
    basis[[0, idx]] = basis[[idx, 0]]
    basis[0] = n
    q, _ = np.linalg.qr(basis.T)
    q = q.T
    # first row spans n; the rest span the hyperplane
    if np.dot(q[0], n) < 0:
        q[0] = -q[0]
    return q[1:]


def disc_samples(center: np.ndarray, radius: float, count: int,
                 rng: np.random.Generator | None = None,
                 boundary_fraction: float = 0.25) -> np.ndarray:
    """Points on a tangent-ball disc: concentric shells of the solid
    (2n-1)-ball around the center, a fraction of them pushed to the rim.

    Deterministic given (center, radius, count) when rng is None; an rng adds
    a random rotation of the pattern inside the disc.
    """
    center = np.asarray(center, dtype=float)
    basis = hyperplane_basis(center)          # (2n-1, 2n)
    k = basis.shape[0]
    m_boundary = int(count * boundary_fraction)
    m_inner = count - m_boundary
    dirs = _unit_dirs(k, count, rng)
    t = np.empty(count)
    u = (np.arange(m_inner) + 0.5) / max(m_inner, 1)
    t[:m_inner] = radius * u ** (1.0 / k)
    t[m_inner:] = radius
    offsets = dirs * t[:, None]
    return center[None, :] + offsets @ basis


def _unit_dirs(k: int, count: int, rng: np.random.Generator | None) -> np.ndarray:
    if k == 3:
        dirs = fibonacci_s2(count)
    else:
        local = rng if rng is not None else np.random.Generator(np.random.PCG64(0))
        dirs = sphere_uniform(local, k, count)
    if rng is not None and k == 3:
        rot = random_rotation(rng, 3)
        dirs = dirs @ rot.T
    return dirs


def tube_samples(divisor_h, radius_cap: float, eta: float, count: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Points of the ball of radius radius_cap within distance ~eta of the
    divisor zero set, built by Newton projection onto h = 0 plus a random
    normal offset below eta."""
    from .polynomials import newton_project_to_zero

    seeds = ball_uniform(rng, 2 * divisor_h.n, 3 * count, radius_cap)
    on_v = newton_project_to_zero(divisor_h, seeds)
    norms = np.linalg.norm(on_v, axis=1)
    on_v = on_v[norms <= radius_cap * (1.0 - 1e-9)]
    if on_v.shape[0] == 0:
        return np.zeros((0, 2 * divisor_h.n))
    idx = rng.integers(0, on_v.shape[0], count)
    base = on_v[idx]
    dirs = sphere_uniform(rng, base.shape[1], count)
    offs = eta * rng.random(count) ** 0.5
    pts = base + dirs * offs[:, None]
    inside = np.linalg.norm(pts, axis=1) <= radius_cap
    return pts[inside]
