"""Tangent labyrinths: placement of tidy tangent-ball families in spherical
shells, divisor-aware splitting, inflation margins, and the radial nesting
certificate.

A labyrinth is stored as flat center/radius/level arrays so that collections
with a million components stay cheap; `component(i)` materializes individual
balls on demand.  Crossing-cost certification is delegated to the path
searcher in :mod:`holomaze.verify` plus a Monte-Carlo radial-leak estimate
used as a cheap pre-filter while the build ladder escalates density.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    Shell,
    TangentBall,
    TidyCertificate,
    disc_distances,
    validate_tidy,
)
from .polynomials import DegenerateMargin, Divisor
from .sampling import disc_samples, random_rotation, s3_net, spawn_rngs, sphere_uniform


class LabyrinthError(ValueError):
    pass


class BuildBudgetExceeded(LabyrinthError):
    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class AmbiguousClassification(LabyrinthError):
    def __init__(self, message, component, min_h):
        super().__init__(message)
        self.component = component
        self.min_h = min_h


class NoSeparation(LabyrinthError):
    pass


@dataclass(frozen=True)
class ZoneSpec:
    """One family of radial levels sharing placement rules.

    keep_min_vdist / keep_max_vdist filter net centers by their estimated
    disc distance to the divisor zero set, so a zone can either avoid a tube
    around it (min) or hug it (max).  Zero / inf disable the filters.  The
    role tag travels to the levels it creates and steers the per-component
    deformation policy downstream.
    """

    levels: int = 4
    ball_cap: float = np.inf
    pitch_factor: float = 3.0
    keep_min_vdist: float = 0.0
    keep_max_vdist: float = np.inf
    radial_share: float = 1.0
    role: str = "main"


@dataclass(frozen=True)
class BuildConfig:
    seed: int = 2024
    zone_plan: tuple = ()
    ladder_steps: int = 4
    max_components: int = 1_600_000
    use_fraction: float = 0.85
    min_pitch_factor: float = 2.15
    leak_gate: float = 3.0e-5
    leak_rays: int = 120_000
    clearance: float = 1.0e-4
    certify: bool = True
    certify_gate: bool = True
    restarts: int = 100
    sweeps: int = 200
    reduced_shell_first: bool = True
    allow_full_shell: bool = True
    divisor: Divisor | None = None
    mu_fraction: float = 0.25
    nu_fraction: float = 0.5


@dataclass(frozen=True)
class TangentLabyrinth:
    shell: Shell
    centers: np.ndarray
    radii: np.ndarray
    levels: np.ndarray
    level_rho: np.ndarray
    level_radius: np.ndarray
    tidy: TidyCertificate
    delta_target: float
    eta_target: float
    r0_formula: float
    r0_used: float
    confined: bool
    level_role: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("centers", "radii", "levels", "level_rho", "level_radius"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not self.level_role:
            object.__setattr__(self, "level_role", tuple("main" for _ in self.level_rho))

    def __len__(self) -> int:
        return int(self.radii.shape[0])

    def component(self, i: int) -> TangentBall:
        return TangentBall(self.centers[i].copy(), float(self.radii[i]))

    @property
    def components(self) -> list:
        return [self.component(i) for i in range(len(self))]

    @property
    def dim(self) -> int:
        return int(self.centers.shape[1])

    def index(self, clearance: float = 0.0) -> "LabyrinthIndex":
        return LabyrinthIndex(self, clearance)

    def to_json(self, component_cap: int = 50_000) -> dict:
        obj = {
            "shell": self.shell.to_json(),
            "R0_formula": self.r0_formula,
            "R0_used": self.r0_used,
            "confined_to_reduced_shell": self.confined,
            "delta": self.delta_target,
            "eta": self.eta_target,
            "n_components": len(self),
            "level_rho": [float(v) for v in self.level_rho],
            "level_radius": [float(v) for v in self.level_radius],
            "level_role": list(self.level_role),
            "meta": self.meta,
        }
        if len(self) <= component_cap:
            obj["components"] = [
                {"center": [float(v) for v in c], "radius": float(r), "level": int(l)}
                for c, r, l in zip(self.centers, self.radii, self.levels)
            ]
        return obj

    @staticmethod
    def from_json(obj: dict) -> "TangentLabyrinth":
        comps = obj["components"]
        centers = np.array([c["center"] for c in comps], dtype=float)
        radii = np.array([c["radius"] for c in comps], dtype=float)
        levels = np.array([c["level"] for c in comps], dtype=np.int64)
        shell = Shell.from_json(obj["shell"])
        cert = validate_tidy((centers, radii), shell)
        return TangentLabyrinth(
            shell, centers, radii, levels,
            np.asarray(obj["level_rho"]), np.asarray(obj["level_radius"]), cert,
            obj["delta"], obj["eta"], obj["R0_formula"], obj["R0_used"],
            obj["confined_to_reduced_shell"], tuple(obj.get("level_role", ())),
            obj.get("meta", {}))


class LabyrinthIndex:
    """Per-level KD trees over center directions for fast min-distance and
    clearance queries against every disc."""

    def __init__(self, lab: TangentLabyrinth, clearance: float = 0.0):
        self.lab = lab
        self.clearance = clearance
        self._trees = []
        self._level_members = []
        reach = np.hypot(lab.level_rho, lab.level_radius)
        self.level_lo = lab.level_rho.copy()
        self.level_hi = reach
        for li in range(lab.level_rho.shape[0]):
            members = np.where(lab.levels == li)[0]
            dirs = lab.centers[members] / np.linalg.norm(lab.centers[members], axis=1, keepdims=True)
            self._trees.append(cKDTree(dirs))
            self._level_members.append(members)

    def min_distance(self, points: np.ndarray, cap: float = np.inf) -> np.ndarray:
        """Minimum distance from each point to the labyrinth, exact below
        `cap` (distances above cap may be reported as cap)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        norms = np.linalg.norm(pts, axis=1)
        dirs = pts / np.maximum(norms[:, None], 1e-300)
        out = np.full(pts.shape[0], np.inf)
        for li, tree in enumerate(self._trees):
            rho = self.lab.level_rho[li]
            a = self.lab.level_radius[li]
            radial_gap = np.maximum.reduce([
                np.zeros_like(norms), self.level_lo[li] - norms, norms - self.level_hi[li]])
            near = radial_gap <= np.minimum(out, cap)
            if not near.any():
                continue
            idx = np.where(near)[0]
            # angular window that could still beat the current best distance
            beta = np.arctan2(a, rho)
            need = np.minimum(out[idx], cap)
            cos_extra = 1.0 - (need ** 2) / (2.0 * np.maximum(norms[idx], 1e-12) * rho)
            theta = beta + np.arccos(np.clip(cos_extra, -1.0, 1.0))
            chord = 2.0 * np.sin(np.minimum(theta, np.pi) / 2.0)
            k = min(48, len(self._level_members[li]))
            dd, jj = tree.query(dirs[idx], k=k, distance_upper_bound=float(chord.max() + 1e-12))
            if k == 1:
                dd = dd[:, None]
                jj = jj[:, None]
            members = self._level_members[li]
            for row, pi in enumerate(idx):
                cand = jj[row][np.isfinite(dd[row])]
                if cand.size == 0:
                    continue
                cand_idx = members[cand]
                d = disc_distances(self.lab.centers[cand_idx], self.lab.radii[cand_idx], pts[pi:pi + 1])
                out[pi] = min(out[pi], float(d.min()))
        return out

    def feasible(self, points: np.ndarray, clearance: float | None = None) -> np.ndarray:
        clr = self.clearance if clearance is None else clearance
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.min_distance(pts, cap=clr * 4.0 + 1e-9)
        return d > clr

    def radial_leak(self, count: int, rng: np.random.Generator, clearance: float | None = None) -> float:
        """Fraction of random directions whose radial ray clears every level
        by more than the clearance.  Cheap lower-bound diagnostic for how
        leaky the labyrinth is to straight crossings."""
        clr = self.clearance if clearance is None else clearance
        dirs = sphere_uniform(rng, self.lab.dim, count)
        alive = np.ones(count, dtype=bool)
        for li, tree in enumerate(self._trees):
            if not alive.any():
                break
            rho = self.lab.level_rho[li]
            beta = np.arctan2(self.lab.level_radius[li], rho)
            theta = beta + clr / rho
            chord = 2.0 * np.sin(theta / 2.0)
            dd, _ = tree.query(dirs[alive], k=1)
            hit = dd <= chord
            idx = np.where(alive)[0]
            alive[idx[hit]] = False
        return float(alive.mean())


# ---------------------------------------------------------------------------
# construction


def reduced_outer_radius(shell: Shell, eta: float) -> float:
    """Outer radius bound under which hyperplane pieces over the inner sphere
    have diameter below eta (Pythagoras)."""
    return min(shell.outer, float(np.sqrt(shell.inner ** 2 + eta ** 2 / 4.0)))


def _default_plan(levels: int = 5, pitch_factor: float = 3.0) -> tuple:
    return (ZoneSpec(levels=levels, pitch_factor=pitch_factor),)


def _estimate_vdist(divisor: Divisor, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """First-order distance estimate from each disc to the divisor zero set:
    |h(x)| / |grad h(x)| minus the disc radius, clamped at zero."""
    from .geometry import as_complex

    z = as_complex(centers)
    vals = np.abs(divisor.eval(z))[:, 0]
    grads = np.linalg.norm(divisor.jacobian(z)[:, 0, :], axis=1)
    grads = np.maximum(grads, 1e-12)
    return np.maximum(vals / grads - radii, 0.0)


def _place(shell_band: tuple[float, float], eta: float, plan: tuple,
           cfg: BuildConfig, rngs: list) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Fill the radial band with tangent-ball levels zone by zone."""
    lo, hi = shell_band
    width = (hi - lo) * cfg.use_fraction
    if width <= 0:
        raise LabyrinthError("empty radial band")
    shares = np.array([z.radial_share * max(z.levels, 1) for z in plan], dtype=float)
    shares /= shares.sum()

    centers_all, radii_all, levels_all = [], [], []
    level_rho, level_radius, level_role = [], [], []
    cursor = lo + (hi - lo) * (1.0 - cfg.use_fraction) * 0.5
    li = 0
    for zone, share in zip(plan, shares):
        zone_width = width * share
        m = max(zone.levels, 1)
        # equal-radius allocation: each level consumes ~a^2/(2 rho) radially
        a_budget = np.sqrt(zone_width * 2.0 * lo / m) * 0.9
        for _ in range(m):
            a = min(a_budget, eta / 2.0 * 0.98, zone.ball_cap)
            rho = cursor
            reach_cap = hi - (hi - lo) * 0.01
            if rho >= reach_cap:
                break
            a = min(a, np.sqrt(max(reach_cap ** 2 - rho ** 2, 0.0)) * 0.95)
            if a <= 0:
                break
            beta = np.arctan2(a, rho)
            pitch = max(zone.pitch_factor, cfg.min_pitch_factor) * beta
            rot = random_rotation(rngs[li % len(rngs)], 4) if len(rngs) else None
            dirs = s3_net(pitch, rot)
            keep = np.ones(dirs.shape[0], dtype=bool)
            if cfg.divisor is not None and (zone.keep_min_vdist > 0 or np.isfinite(zone.keep_max_vdist)):
                vd = _estimate_vdist(cfg.divisor, dirs * rho, np.full(dirs.shape[0], a))
                keep = (vd >= zone.keep_min_vdist) & (vd <= zone.keep_max_vdist)
            reach = float(np.hypot(rho, a))
            if not keep.any():
                cursor = reach + max(2e-9, 0.05 * (reach - rho))
                continue
            c = dirs[keep] * rho
            centers_all.append(c)
            radii_all.append(np.full(c.shape[0], a))
            levels_all.append(np.full(c.shape[0], li, dtype=np.int64))
            level_rho.append(rho)
            level_radius.append(a)
            level_role.append(zone.role)
            cursor = reach + max(2e-9, 0.05 * (reach - rho))
            li += 1
    if not centers_all:
        raise LabyrinthError("zone plan produced no components")
    return (np.concatenate(centers_all), np.concatenate(radii_all), np.concatenate(levels_all),
            np.asarray(level_rho), np.asarray(level_radius), tuple(level_role))


def _escalate(plan: tuple, step: int) -> tuple:
    out = []
    for z in plan:
        out.append(replace(z, levels=z.levels * 2, pitch_factor=max(z.pitch_factor * 0.82, 2.15)))
    return tuple(out)


def build(shell: Shell, delta: float, eta: float, n: int = 2,
          cfg: BuildConfig | None = None, certifier=None) -> TangentLabyrinth:
    """Construct a certified tangent labyrinth.

    The ladder starts inside the diameter-reducing outer radius and, when the
    crossing-cost certificate cannot be met there within budget, widens to
    the full shell while keeping every component diameter below eta.  Each
    rung is pre-screened by the Monte-Carlo radial-leak estimate; the actual
    certificate comes from the stochastic shortest-path searcher, whose
    failure to connect counts as a pass with a warning.
    """
    if n != 2:
        raise LabyrinthError("tangent-ball nets are implemented for n = 2 only")
    cfg = cfg or BuildConfig()
    if delta < 0 or eta <= 0:
        raise LabyrinthError("delta must be >= 0 and eta > 0")
    if certifier is None and cfg.certify:
        from .verify import SearchConfig, min_avoiding_path

        def certifier(lab):
            length, poly, status = min_avoiding_path(
                shell, lab, SearchConfig(seed=cfg.seed + 17, restarts=cfg.restarts,
                                         sweeps=cfg.sweeps, clearance=cfg.clearance))
            return length, status

    r0_formula = reduced_outer_radius(shell, eta)
    plan = cfg.zone_plan or _default_plan()
    rngs = spawn_rngs(cfg.seed, 64)
    attempts = []

    trivial_delta = delta <= 0.0
    for step in range(cfg.ladder_steps + 1):
        use_reduced = cfg.reduced_shell_first and (step == 0 or not cfg.allow_full_shell)
        hi = r0_formula if use_reduced else shell.outer
        band = (shell.inner, hi)
        try:
            centers, radii, levels, level_rho, level_radius, level_role = _place(band, eta, plan, cfg, rngs)
        except LabyrinthError as exc:
            attempts.append({"step": step, "error": str(exc)})
            plan = _escalate(plan, step)
            continue
        if centers.shape[0] > cfg.max_components:
            attempts.append({"step": step, "error": f"component budget {centers.shape[0]} > {cfg.max_components}"})
            break
        tidy = validate_tidy((centers, radii), shell)
        lab = TangentLabyrinth(
            shell, centers, radii, levels, level_rho, level_radius, tidy,
            delta, eta, r0_formula,
            float(np.hypot(level_rho, level_radius).max()),
            bool(np.hypot(level_rho, level_radius).max() <= r0_formula + 1e-12),
            level_role, {})
        record = {"step": step, "components": len(lab),
                  "levels": int(level_rho.shape[0]),
                  "reduced_shell": use_reduced}
        if trivial_delta:
            attempts.append({**record, "certificate": "trivial"})
            object.__setattr__(lab, "meta", {"attempts": attempts, "certificate": {"status": "trivial", "found_length": None}})
            return lab
        idx = lab.index(cfg.clearance)
        leak = idx.radial_leak(cfg.leak_rays, rngs[-1])
        record["radial_leak"] = leak
        last_rung = step == cfg.ladder_steps
        if leak > cfg.leak_gate and not last_rung:
            attempts.append({**record, "skipped": "leak above gate"})
            plan = _escalate(plan, step)
            continue
        cert_status, found = "uncertified", None
        if cfg.certify and certifier is not None:
            found, cert_status = certifier(lab)
            record["certificate"] = cert_status
            record["found_length"] = found
        attempts.append(record)
        passed = (not cfg.certify) or cert_status == "no_feasible" or (found is not None and found > delta)
        if passed or not cfg.certify_gate:
            object.__setattr__(lab, "meta", {
                "attempts": attempts,
                "certificate": {"status": cert_status, "found_length": found,
                                "passed": bool(passed), "radial_leak": leak}})
            return lab
        plan = _escalate(plan, step)
    raise BuildBudgetExceeded("no labyrinth certified within the ladder budget", attempts)


# ---------------------------------------------------------------------------
# divisor split, inflation, nesting


@dataclass(frozen=True)
class LabyrinthSplit:
    lambda_V: np.ndarray
    lambda_0: np.ndarray
    classification_tol: float
    sample_density: int
    min_h: np.ndarray          # per component, min sampled |h|

    def __post_init__(self):
        for name in ("lambda_V", "lambda_0", "min_h"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def to_json(self) -> dict:
        return {
            "lambda_V": [int(i) for i in self.lambda_V],
            "lambda_0": [int(i) for i in self.lambda_0],
            "tol": self.classification_tol,
            "sample_density": self.sample_density,
        }


def split(lab: TangentLabyrinth, divisor: Divisor | None, tol: float,
          samples_per_component: int = 64, guard: float = 2.0,
          seed: int = 5) -> LabyrinthSplit:
    """Classify components by whether they can meet the divisor zero set.

    A component joins lambda_V when the minimum of |h| over a dense disc
    sample falls below tol.  Minima inside [tol, guard*tol) are ambiguous:
    the sampling is refined once, and if still ambiguous the classification
    aborts so the caller can shrink components or move the threshold.
    """
    from .geometry import as_complex

    k = len(lab)
    if divisor is None:
        return LabyrinthSplit(np.zeros(0, dtype=np.int64), np.arange(k, dtype=np.int64),
                              tol, 0, np.full(k, np.inf))
    rngs = spawn_rngs(seed, 2)
    vd = _estimate_vdist(divisor, lab.centers, lab.radii)
    grads = np.linalg.norm(divisor.jacobian(as_complex(lab.centers))[:, 0, :], axis=1)
    min_h = np.full(k, np.inf)
    lam_v, lam_0 = [], []
    for i in range(k):
        # cheap certain cases first: far discs cannot reach below guard*tol
        if vd[i] * grads[i] * 0.5 > guard * tol * 2.0:
            min_h[i] = vd[i] * grads[i] * 0.5
            lam_0.append(i)
            continue
        density = samples_per_component
        for attempt in range(2):
            pts = disc_samples(lab.centers[i], lab.radii[i], density, rngs[0])
            m = float(np.abs(divisor.eval(as_complex(pts))).min())
            min_h[i] = m
            if m < tol or m >= guard * tol:
                break
            density *= 2
        if tol <= min_h[i] < guard * tol:
            raise AmbiguousClassification(
                f"component {i} has min |h| {min_h[i]:.3e} inside the guard band "
                f"[{tol:.3e}, {guard * tol:.3e})", i, min_h[i])
        (lam_v if min_h[i] < tol else lam_0).append(i)
    return LabyrinthSplit(np.asarray(lam_v, dtype=np.int64), np.asarray(lam_0, dtype=np.int64),
                          tol, samples_per_component, min_h)


@dataclass(frozen=True)
class InflatedPair:
    mu: float
    indices: np.ndarray         # lambda_0 components the inflation applies to
    margins: tuple = (1, 2)     # sigma multipliers defining delta1/delta2

    def __post_init__(self):
        a = np.asarray(self.indices)
        a.setflags(write=False)
        object.__setattr__(self, "indices", a)

    @property
    def empty(self) -> bool:
        return self.indices.size == 0

    def to_json(self) -> dict:
        return {"mu": self.mu, "indices": [int(i) for i in self.indices]}


@dataclass(frozen=True)
class AvoidanceNeighborhood:
    margin: float               # nu
    shell: Shell
    component_indices: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.component_indices)
        a.setflags(write=False)
        object.__setattr__(self, "component_indices", a)

    def to_json(self) -> dict:
        return {"nu": self.margin, "shell": self.shell.to_json(),
                "components": int(self.component_indices.size)}


def _same_level_gap(lab: TangentLabyrinth, members: np.ndarray) -> float:
    if members.size < 2:
        return np.inf
    dirs = lab.centers[members] / np.linalg.norm(lab.centers[members], axis=1, keepdims=True)
    tree = cKDTree(dirs)
    dd, _ = tree.query(dirs, k=2)
    chord = dd[:, 1].min()
    rho = np.linalg.norm(lab.centers[members[0]])
    a = lab.radii[members[0]]
    return float(max(chord * rho - 2.0 * a, 0.0))


def inflate(split_result: LabyrinthSplit, lab: TangentLabyrinth, divisor: Divisor | None,
            r_ball: float, mu_fraction: float = 0.25, floor: float = 1e-12) -> InflatedPair:
    """Margin mu so that the 2*mu inflations of the lambda_0 components stay
    pairwise disjoint and clear of the inner ball, the divisor, and lambda_V."""
    idx0 = split_result.lambda_0
    if idx0.size == 0:
        return InflatedPair(0.0, idx0)
    gaps = [np.inf]
    for li in range(lab.level_rho.shape[0]):
        members = np.where(lab.levels == li)[0]
        members0 = members[np.isin(members, idx0)]
        gaps.append(_same_level_gap(lab, members0))
    reach = np.hypot(lab.level_rho, lab.level_radius)
    for li in range(lab.level_rho.shape[0] - 1):
        gaps.append(float(lab.level_rho[li + 1] - reach[li]))
    rho_min = float(np.linalg.norm(lab.centers[idx0], axis=1).min())
    gaps.append(rho_min - r_ball)
    if divisor is not None:
        vd = _estimate_vdist(divisor, lab.centers[idx0], lab.radii[idx0])
        gaps.append(float(vd.min()))
        if split_result.lambda_V.size:
            cv = lab.centers[split_result.lambda_V]
            tree = cKDTree(cv)
            dd, jj = tree.query(lab.centers[idx0], k=1)
            sep = dd - lab.radii[idx0] - lab.radii[split_result.lambda_V][jj]
            gaps.append(float(sep.min()))
    mu = mu_fraction * float(np.min(gaps))
    if not np.isfinite(mu) or mu <= floor:
        raise DegenerateMargin(f"inflation margin {mu} at or below floor {floor}")
    return InflatedPair(mu, idx0)


def avoidance_neighborhood(lab: TangentLabyrinth, pair: InflatedPair,
                           nu_fraction: float = 0.5) -> AvoidanceNeighborhood:
    """Open neighborhood margin nu around all components, inside the shell."""
    rho_min = float(lab.level_rho.min())
    room = min(lab.shell.outer - lab.r0_used, rho_min - lab.shell.inner)
    base = pair.mu if pair.mu > 0 else room * 0.5
    nu = min(nu_fraction * base, 0.45 * room)
    if nu <= 0:
        raise DegenerateMargin("no room for an avoidance neighborhood inside the shell")
    return AvoidanceNeighborhood(float(nu), lab.shell, np.arange(len(lab), dtype=np.int64))


def empty_labyrinth(shell: Shell, delta: float = 0.0, eta: float = 1.0) -> TangentLabyrinth:
    """Labyrinth with no components (the j = 0 state and a searcher baseline)."""
    cert = TidyCertificate(np.zeros(0), np.zeros(0))
    return TangentLabyrinth(shell, np.zeros((0, 4)), np.zeros(0), np.zeros(0, dtype=np.int64),
                            np.zeros(0), np.zeros(0), cert, delta, eta,
                            reduced_outer_radius(shell, eta), shell.inner, True)


def nesting_order(lab: TangentLabyrinth, r_ball: float, tol: float = 1e-12) -> np.ndarray:
    """Interleaving radii s_0 < s_1 < ... witnessing that each level sits
    strictly between spheres, the certificate behind treating the inner ball
    plus labyrinth as one approximation region."""
    if len(lab) == 0:
        return np.zeros(0)
    rho = lab.level_rho
    reach = np.hypot(lab.level_rho, lab.level_radius)
    if r_ball >= rho[0] - tol:
        raise NoSeparation(f"inner ball radius {r_ball} reaches the first level at {rho[0]}")
    radii = [0.5 * (r_ball + rho[0])]
    for li in range(rho.shape[0] - 1):
        if reach[li] >= rho[li + 1] - tol:
            raise NoSeparation(f"levels {li} and {li + 1} are not radially separated")
        radii.append(0.5 * (reach[li] + rho[li + 1]))
    radii.append(0.5 * (reach[-1] + lab.shell.outer))
    out = np.asarray(radii)
    if not np.all(np.diff(out) > 0):
        raise NoSeparation("interleaving radii are not strictly increasing")
    return out
