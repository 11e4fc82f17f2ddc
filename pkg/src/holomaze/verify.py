"""Independent certification: obstacle-avoiding and band-constrained path
search, fiber tracing with per-shell arclength accounting, extra-zero scans,
and completeness summaries.

Path searches return feasible polylines, hence upper bounds on the true
minimum; a certificate is "no crossing at or below the budget was found
under N restarts".  Restarts that never connect are reported as a vacuous
pass with a warning, since dense obstacle families may disconnect the
discretized search space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Shell, as_complex, as_real
from .labyrinth import LabyrinthIndex, TangentLabyrinth
from .polynomials import CandidateMap, MultiPoly
from .sampling import spawn_rngs, sphere_uniform


class VerifyError(ValueError):
    pass


class RankLoss(VerifyError):
    pass


class ProjectionDiverged(VerifyError):
    pass


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def crossing(self, shell: Shell, tol: float = 1e-9) -> bool:
        r0 = np.linalg.norm(self.points[0])
        r1 = np.linalg.norm(self.points[-1])
        return r0 <= shell.inner + tol and r1 >= shell.outer - tol

    def resampled(self, max_seg: float) -> "Polyline":
        pts = [self.points[0]]
        for a, b in zip(self.points[:-1], self.points[1:]):
            seg = np.linalg.norm(b - a)
            k = max(int(np.ceil(seg / max_seg)), 1)
            for t in range(1, k + 1):
                pts.append(a + (b - a) * (t / k))
        return Polyline(np.array(pts))

    def to_json(self) -> list:
        return [[float(v) for v in p] for p in self.points]


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    restarts: int = 100
    sweeps: int = 200
    clearance: float = 1.0e-4
    n_segments: int = 32
    repair_iters: int = 80
    check_resolution: float | None = None   # default: thickness / (2 n_segments)
    jitter: float = 0.35                    # initial transverse jitter x thickness


def _initial_polyline(shell: Shell, rng: np.random.Generator, cfg: SearchConfig) -> Polyline:
    dim = 4
    u = sphere_uniform(rng, dim, 1)[0]
    t = np.linspace(0.0, 1.0, cfg.n_segments + 1)
    radii = shell.inner + t * (shell.outer - shell.inner)
    pts = radii[:, None] * u[None, :]
    amp = cfg.jitter * shell.thickness
    noise = rng.normal(0.0, amp, (cfg.n_segments + 1, dim))
    noise[0] = 0.0
    noise[-1] = 0.0
    return Polyline(pts + noise)


def _pin_endpoints(pts: np.ndarray, shell: Shell) -> None:
    pts[0] *= shell.inner / np.linalg.norm(pts[0])
    pts[-1] *= shell.outer / np.linalg.norm(pts[-1])


class _ObstacleChecker:
    """Feasibility and repair pushes against a labyrinth index."""

    def __init__(self, lab: TangentLabyrinth, clearance: float):
        self.index = LabyrinthIndex(lab, clearance)
        self.clearance = clearance

    def violations(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dist, away = nearest_with_vector(self.index, pts, cap=self.clearance * 3.0)
        bad = dist <= self.clearance
        return bad, away

    def feasible(self, pts: np.ndarray) -> bool:
        return bool(self.index.feasible(pts, self.clearance).all())

    def push(self, pts: np.ndarray) -> tuple[np.ndarray, bool]:
        bad, away = self.violations(pts)
        if not bad.any():
            return pts, True
        out = pts.copy()
        dist, away = nearest_with_vector(self.index, pts[bad], cap=np.inf)
        target = self.clearance * 2.5
        out[bad] = pts[bad] + away * np.maximum(target - dist, 0.0)[:, None]
        return out, False


def nearest_with_vector(index: LabyrinthIndex, points: np.ndarray,
                        cap: float) -> tuple[np.ndarray, np.ndarray]:
    """Distance to the nearest disc and the unit vector pointing away from
    its closest point; points farther than cap get an outward radial unit."""
    from .geometry import disc_distances

    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lab = index.lab
    n_pts = pts.shape[0]
    norms = np.linalg.norm(pts, axis=1)
    dirs = pts / np.maximum(norms[:, None], 1e-300)
    dist = np.full(n_pts, np.inf)
    away = dirs.copy()
    for li, tree in enumerate(index._trees):
        rho = lab.level_rho[li]
        a = lab.level_radius[li]
        radial_gap = np.maximum.reduce([
            np.zeros_like(norms), index.level_lo[li] - norms, norms - index.level_hi[li]])
        near = radial_gap <= np.minimum(dist, cap)
        if not near.any():
            continue
        idx = np.where(near)[0]
        beta = np.arctan2(a, rho)
        need = np.minimum(dist[idx], cap)
        cos_extra = 1.0 - (need ** 2) / (2.0 * np.maximum(norms[idx], 1e-12) * rho)
        theta = beta + np.arccos(np.clip(cos_extra, -1.0, 1.0))
        chord = 2.0 * np.sin(np.minimum(theta, np.pi) / 2.0)
        members = index._level_members[li]
        k = min(64, len(members))
        dd, jj = tree.query(dirs[idx], k=k, distance_upper_bound=float(chord.max() + 1e-12))
        if k == 1:
            dd, jj = dd[:, None], jj[:, None]
        for row, pi in enumerate(idx):
            cand = jj[row][np.isfinite(dd[row])]
            if cand.size == k and k < len(members):
                cand = np.asarray(tree.query_ball_point(dirs[pi], float(chord[row])), dtype=np.int64)
            if cand.size == 0:
                continue
            ci = members[cand]
            d = disc_distances(lab.centers[ci], lab.radii[ci], pts[pi:pi + 1])[0]
            j = int(np.argmin(d))
            if d[j] < dist[pi]:
                dist[pi] = d[j]
                away[pi] = _away_vector(lab.centers[ci[j]], lab.radii[ci[j]], pts[pi])
    return dist, away


def _away_vector(center: np.ndarray, radius: float, p: np.ndarray) -> np.ndarray:
    nrm = center / np.linalg.norm(center)
    rel = p - center
    u = float(rel @ nrm)
    inplane = rel - u * nrm
    rho = np.linalg.norm(inplane)
    v = u * nrm + (max(rho - radius, 0.0) * (inplane / rho) if rho > 1e-300 else 0.0)
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        return nrm if u >= 0 else -nrm
    return v / nv


def _stochastic_search(shell: Shell, checker, cfg: SearchConfig,
                       budget: float | None = None) -> tuple[float | None, Polyline | None, dict]:
    """Shared engine: random restarts, repair to feasibility, then shortening
    sweeps (shortcuts, smoothing, jittered moves) under the hard constraint."""
    res = cfg.check_resolution or shell.thickness / (2.0 * cfg.n_segments)
    rngs = spawn_rngs(cfg.seed, cfg.restarts)
    best_len, best_poly = None, None
    n_connected = 0

    for restart in range(cfg.restarts):
        rng = rngs[restart]
        poly = _initial_polyline(shell, rng, cfg)
        pts = poly.resampled(res).points.copy()
        _pin_endpoints(pts, shell)
        ok = False
        for _ in range(cfg.repair_iters):
            pts, ok = checker.push(pts)
            if ok:
                break
            _pin_endpoints(pts, shell)
        if not ok:
            continue
        n_connected += 1
        pts = _shorten(pts, shell, checker, cfg, rng, res)
        length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
        if best_len is None or length < best_len:
            best_len, best_poly = length, Polyline(pts.copy())
        if budget is not None and best_len <= budget:
            break
    info = {"restarts": cfg.restarts, "connected": n_connected}
    if best_len is None:
        info["warning"] = "no restart connected; obstacles may disconnect the discretization"
        return None, None, info
    return best_len, best_poly, info


def _shorten(pts: np.ndarray, shell: Shell, checker, cfg: SearchConfig,
             rng: np.random.Generator, res: float) -> np.ndarray:
    def seg_ok(a, b):
        seg = np.linalg.norm(b - a)
        k = max(int(np.ceil(seg / res)), 1)
        t = np.linspace(0.0, 1.0, k + 1)
        line = a[None, :] + t[:, None] * (b - a)[None, :]
        return checker.feasible(line)

    for sweep in range(cfg.sweeps):
        m = pts.shape[0]
        move = sweep % 3
        if move == 0 and m > 3:
            i = rng.integers(0, m - 2)
            j = rng.integers(i + 2, min(i + 2 + max(m // 4, 2), m))
            if seg_ok(pts[i], pts[j - 1]):
                keep = np.ones(m, dtype=bool)
                keep[i + 1:j - 1] = False
                pts = pts[keep]
        elif move == 1 and m > 2:
            i = rng.integers(1, m - 1)
            cand = 0.5 * (pts[i - 1] + pts[i + 1])
            if seg_ok(pts[i - 1], cand) and seg_ok(cand, pts[i + 1]):
                old = np.linalg.norm(pts[i] - pts[i - 1]) + np.linalg.norm(pts[i + 1] - pts[i])
                new = np.linalg.norm(cand - pts[i - 1]) + np.linalg.norm(pts[i + 1] - cand)
                if new < old:
                    pts[i] = cand
        elif m > 2:
            i = rng.integers(1, m - 1)
            amp = shell.thickness * 0.2 * (1.0 - sweep / cfg.sweeps)
            cand = pts[i] + rng.normal(0.0, amp, pts.shape[1])
            old = np.linalg.norm(pts[i] - pts[i - 1]) + np.linalg.norm(pts[i + 1] - pts[i])
            new = np.linalg.norm(cand - pts[i - 1]) + np.linalg.norm(pts[i + 1] - cand)
            if new < old and seg_ok(pts[i - 1], cand) and seg_ok(cand, pts[i + 1]):
                pts[i] = cand
        if pts.shape[0] > 2:
            # refresh subdivision so long shortcuts stay checkable
            pts = Polyline(pts).resampled(max(res * 4, shell.thickness / cfg.n_segments)).points.copy()
    return pts


def min_avoiding_path(shell: Shell, lab: TangentLabyrinth,
                      cfg: SearchConfig | None = None) -> tuple[float | None, Polyline | None, str]:
    """Best found crossing of the shell keeping every point clear of the
    labyrinth; (None, None, "no_feasible") when no restart connects."""
    cfg = cfg or SearchConfig()
    if len(lab) == 0:
        u = np.zeros(4)
        u[0] = 1.0
        poly = Polyline(np.array([shell.inner * u, shell.outer * u]))
        return poly.length, poly, "found"
    checker = _ObstacleChecker(lab, cfg.clearance)
    length, poly, info = _stochastic_search(shell, checker, cfg)
    if length is None:
        return None, None, "no_feasible"
    return length, poly, "found"


class _BandChecker:
    """Hard band constraint lam_lo <= |F| <= lam_hi at check points, with
    value-gradient repair pushes."""

    def __init__(self, F: CandidateMap, lam_lo: float, lam_hi: float):
        self.F = F
        self.lam_lo = lam_lo
        self.lam_hi = lam_hi

    def _values(self, pts: np.ndarray) -> np.ndarray:
        return np.abs(self.F.eval(as_complex(pts))[:, 0])

    def feasible(self, pts: np.ndarray) -> bool:
        v = self._values(np.atleast_2d(pts))
        return bool(((v >= self.lam_lo) & (v <= self.lam_hi)).all())

    def push(self, pts: np.ndarray) -> tuple[np.ndarray, bool]:
        z = as_complex(pts)
        f = self.F.eval(z)[:, 0]
        v = np.abs(f)
        too_lo = v < self.lam_lo
        too_hi = v > self.lam_hi
        if not (too_lo.any() or too_hi.any()):
            return pts, True
        out = pts.copy()
        bad = too_lo | too_hi
        jac = self.F.jacobian(z[bad])[:, 0, :]
        fhat = f[bad] / np.maximum(v[bad], 1e-300)
        grad_c = np.conj(fhat)[:, None] * jac          # d|F| along dz
        g = np.empty((bad.sum(), pts.shape[1]))
        g[:, 0::2] = grad_c.real
        g[:, 1::2] = -grad_c.imag
        gn = np.linalg.norm(g, axis=1)
        gn = np.maximum(gn, 1e-12)
        target = np.where(too_lo[bad], self.lam_lo * 1.25, self.lam_hi * 0.8)
        step = (target - v[bad]) / gn
        step = np.clip(step, -0.05, 0.05)
        out[bad] = pts[bad] + (g / gn[:, None]) * step[:, None]
        return out, False


def min_band_path(shell: Shell, F: CandidateMap, lam: float,
                  cfg: SearchConfig | None = None,
                  lam_lower: float | None = None) -> tuple[float | None, Polyline | None, str]:
    """Best found crossing along which lam <= |F| <= 1/lam (the lower bound
    can be disabled by passing lam_lower=0 for the one-sided variant)."""
    cfg = cfg or SearchConfig()
    if not 0.0 < lam < 1.0:
        raise VerifyError("band parameter must lie in (0, 1)")
    lo = lam if lam_lower is None else lam_lower
    checker = _BandChecker(F, lo, 1.0 / lam)
    length, poly, info = _stochastic_search(shell, checker, cfg)
    if length is None:
        return None, None, "no_feasible"
    return length, poly, "found"


# ---------------------------------------------------------------------------
# fiber tracing


@dataclass(frozen=True)
class TraceConfig:
    step: float = 2.0e-3
    tol: float = 1.0e-9
    stop_radius: float = 0.999
    max_steps: int = 120_000
    newton_iters: int = 20
    fold_tol: float = 1.0e-3
    stagnation_window: int = 200
    rank_floor: float = 1.0e-10
    record_every: int = 8
    shells: tuple = ()


@dataclass
class TraceLedger:
    c: complex
    start: np.ndarray
    shell_lengths: dict
    total_length: float
    max_residual: float
    status: str
    steps: int
    end: np.ndarray
    samples: list = field(default_factory=list)   # (step, |z|, cumlength, residual)

    def to_json(self) -> dict:
        return {
            "c": [self.c.real, self.c.imag],
            "start": [float(v) for v in self.start],
            "end": [float(v) for v in self.end],
            "shell_lengths": {str(k): float(v) for k, v in self.shell_lengths.items()},
            "total_length": self.total_length,
            "max_residual": self.max_residual,
            "status": self.status,
            "steps": self.steps,
        }


def _newton_project(F: CandidateMap, z: np.ndarray, c: np.ndarray, tol: float,
                    iters: int) -> tuple[np.ndarray, float]:
    for _ in range(iters):
        val = F.eval(z) - c
        r = np.linalg.norm(val)
        if r < tol:
            return z, r
        jac = F.jacobian(z)             # (q, n)
        jh = jac.conj().T
        gram = jac @ jh
        try:
            step = jh @ np.linalg.solve(gram, val)
        except np.linalg.LinAlgError as exc:
            raise ProjectionDiverged(f"singular projection system: {exc}") from exc
        z = z - step
    val = F.eval(z) - c
    r = float(np.linalg.norm(val))
    if r >= tol * 10:
        raise ProjectionDiverged(f"projection stalled at residual {r:.3e}")
    return z, r


def _kernel_basis(jac_row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real orthonormal basis of the complex kernel line of a 1x2 Jacobian."""
    k = np.array([-jac_row[1], jac_row[0]])
    nk = np.linalg.norm(k)
    if nk < 1e-300:
        raise RankLoss("Jacobian vanished on the fiber")
    k /= nk
    b1 = as_real(k)
    b2 = as_real(1j * k)
    return b1, b2


def trace_fiber(F: CandidateMap, c: complex | np.ndarray, z0: np.ndarray,
                cfg: TraceConfig | None = None) -> TraceLedger:
    """March along the fiber F = c from z0, at each step taking the kernel
    direction that maximizes radial gain, then projecting back by Newton.

    Stops at the stop radius, the step cap, stagnation (no net movement over
    a window), or rank loss.  Arclength is booked per configured shell by
    segment midpoint radius.
    """
    if F.q != 1:
        raise VerifyError("fiber tracing is implemented for q = 1")
    cfg = cfg or TraceConfig()
    cvec = np.atleast_1d(np.asarray(c, dtype=complex))
    z = as_complex(np.asarray(z0, dtype=float)).copy()
    z, res = _newton_project(F, z, cvec, cfg.tol, cfg.newton_iters * 2)
    shells = list(cfg.shells)
    shell_lengths = {j + 1: 0.0 for j in range(len(shells))}
    total = 0.0
    max_res = res
    heading = None
    recent = [as_real(z)]
    status = "step_cap"
    samples = [(0, float(np.linalg.norm(as_real(z))), 0.0, res)]

    step_count = 0
    for step_count in range(1, cfg.max_steps + 1):
        jac = F.jacobian(z)[0]
        sigma = np.linalg.norm(jac)
        if sigma < cfg.rank_floor:
            status = "rank_loss"
            break
        b1, b2 = _kernel_basis(jac)
        x = as_real(z)
        rhat = x / np.linalg.norm(x)
        p1, p2 = float(rhat @ b1), float(rhat @ b2)
        gain = np.hypot(p1, p2)
        if gain >= cfg.fold_tol:
            v = p1 * b1 + p2 * b2
            v /= np.linalg.norm(v)
        elif heading is not None:
            h1, h2 = float(heading @ b1), float(heading @ b2)
            hv = h1 * b1 + h2 * b2
            nv = np.linalg.norm(hv)
            if nv < 1e-12:
                status = "stagnated"
                break
            v = hv / nv
        else:
            v = b1
        heading = v
        x_new = x + cfg.step * v
        try:
            z_new, res = _newton_project(F, as_complex(x_new), cvec, cfg.tol, cfg.newton_iters)
        except ProjectionDiverged:
            status = "projection_diverged"
            break
        max_res = max(max_res, res)
        x_new = as_real(z_new)
        seg = float(np.linalg.norm(x_new - x))
        total += seg
        mid_r = 0.5 * (np.linalg.norm(x) + np.linalg.norm(x_new))
        for j, (lo, hi) in enumerate(shells):
            if lo <= mid_r <= hi:
                shell_lengths[j + 1] += seg
        z = z_new
        if step_count % cfg.record_every == 0:
            samples.append((step_count, float(np.linalg.norm(x_new)), total, res))
        recent.append(x_new)
        if len(recent) > cfg.stagnation_window:
            recent.pop(0)
            spread = np.linalg.norm(np.asarray(recent) - np.mean(recent, axis=0), axis=1).max()
            if spread < 4.0 * cfg.step:
                status = "stagnated"
                break
        if np.linalg.norm(x_new) >= cfg.stop_radius:
            status = "escaped"
            break

    return TraceLedger(complex(cvec[0]), np.asarray(z0, dtype=float), shell_lengths,
                       total, float(max_res), status, step_count, as_real(z), samples)


# ---------------------------------------------------------------------------
# extra-zero scan


def extra_zero_factor(F: CandidateMap) -> tuple:
    """Callable pair (value, gradient) of the factor whose zeros are the
    candidate extra zeros: 1 + h^{s-1} W for anchored maps, F itself for
    free-carrier maps."""
    if F.carrier == "one":
        def val(z):
            return F.eval(z)[..., 0] if z.ndim > 1 else F.eval(z)[0]

        def grad(z):
            return F.jacobian(z)[..., 0, :]

        return val, grad

    h = F.divisor.h[0]
    W = F.W[0]
    s = F.order

    def val(z):
        return 1.0 + h(z) ** (s - 1) * W(z)

    def grad(z):
        hv = h(z)
        wv = W(z)
        gh = h.gradient(z)
        gw = W.gradient(z)
        return ((s - 1) * hv ** (s - 2) * wv)[..., None] * gh + (hv ** (s - 1))[..., None] * gw

    return val, grad


def zero_avoidance(F: CandidateMap, neighborhoods: list, labyrinths: list,
                   radius: float, starts: int = 1000, seed: int = 99,
                   floor: float = 1.0e-6, newton_iters: int = 60) -> dict:
    """Hunt zeros of the extra-zero factor inside the given ball radius via
    multi-start Newton; report every zero found and whether any lies inside
    a recorded avoidance neighborhood."""
    from .sampling import ball_uniform

    val_fn, grad_fn = extra_zero_factor(F)
    rng = spawn_rngs(seed, 1)[0]
    pts = as_complex(ball_uniform(rng, 2 * F.n, starts, radius))
    zeros = []
    for z in pts:
        zz = z.copy()
        converged = False
        for _ in range(newton_iters):
            v = val_fn(zz)
            if abs(v) < floor * 1e-3:
                converged = True
                break
            g = grad_fn(zz[None, :])[0]
            g2 = float(np.sum(np.abs(g) ** 2))
            if g2 < 1e-30:
                break
            zz = zz - (v / g2) * np.conj(g)
            if np.linalg.norm(as_real(zz)) > radius * 1.5:
                break
        if converged and np.linalg.norm(as_real(zz)) <= radius:
            zeros.append(zz)
    found = []
    violations = []
    for zz in zeros:
        x = as_real(zz)
        rec = {"point": [float(v) for v in x], "norm": float(np.linalg.norm(x)),
               "factor": float(abs(val_fn(zz))),
               "h": float(np.abs(F.divisor.eval(zz)).max()) if F.carrier == "power" else None}
        inside = []
        for i, (nb, lab) in enumerate(zip(neighborhoods, labyrinths)):
            if nb is None or lab is None:
                continue
            d = lab.index().min_distance(x[None, :], cap=nb.margin * 2)[0]
            if d <= nb.margin:
                inside.append(i + 1)
        rec["inside_neighborhoods"] = inside
        found.append(rec)
        if inside:
            violations.append(rec)
    # deduplicate zeros that collapsed to the same point
    unique = []
    for rec in found:
        if not any(np.linalg.norm(np.array(rec["point"]) - np.array(u["point"])) < 1e-6 for u in unique):
            unique.append(rec)
    return {
        "starts": starts,
        "radius": radius,
        "floor": floor,
        "zeros_found": unique,
        "n_zeros": len(unique),
        "violations": [r for r in unique if r["inside_neighborhoods"]],
        "clean_of_neighborhoods": not any(r["inside_neighborhoods"] for r in unique),
        "clean_of_ball": len(unique) == 0,
    }


def completeness_summary(schedule_radii: list, deltas: list, lambdas: list,
                         eps_values: list, bands: list) -> dict:
    """For each requested band value, the first certified step, the per-shell
    crossing budgets from there on, and their partial sum; the divergence of
    the full series over disjoint crossing intervals is what the finite data
    instantiates."""
    from .induction import NotReached, j_lambda_values

    report = {"bands": []}
    for lam in bands:
        entry = {"lambda": lam}
        try:
            j_lam = j_lambda_values(lambdas, eps_values, lam)
            certified = list(range(j_lam, len(deltas) + 1))
            entry["j_lambda"] = j_lam
            entry["deltas"] = [deltas[j - 1] for j in certified]
            entry["partial_sum"] = float(sum(entry["deltas"]))
            entry["shells"] = [list(schedule_radii[j - 1]) for j in certified]
            entry["note"] = ("crossing intervals of successive shells are disjoint, "
                             "so an escaping path pays every listed budget; "
                             "the infinite continuation diverges")
        except NotReached:
            entry["j_lambda"] = None
            entry["deltas"] = []
            entry["partial_sum"] = 0.0
        report["bands"].append(entry)
    return report
