"""Numerical stand-in for the holomorphic approximation oracle: choose the
target deformation on the labyrinth, then fit the polynomial correction by
weighted linear least squares on samples of the ball-plus-labyrinth region.

The correction is fitted in map units: rows are carrier(z) * monomial(z), so
anchored maps update as f_new = f_prev + h^s * dW and stay pinned to the
divisor for free.  Monomial supports are banded: full low degrees for the
smooth part plus a handful of high homogeneous slices whose order comes from
the growth ratio each component multiplier demands.  In two complex
variables a degree-k slice costs only k+1 columns, which is what keeps the
required degrees (hundreds) affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geometry import as_complex
from .labyrinth import LabyrinthSplit, TangentLabyrinth
from .polynomials import CandidateMap, MultiPoly
from .sampling import ball_fill, ball_uniform, disc_samples, spawn_rngs

BALL, LAMBDA_V, DELTA_1, TUBE = 0, 1, 2, 3
REGION_NAMES = {BALL: "ball", LAMBDA_V: "lambda_V", DELTA_1: "delta1", TUBE: "tube"}


class FitError(ValueError):
    pass


class ZeroOnLambda0(FitError):
    pass


class DivisionFloor(FitError):
    pass


class DegreeCapExceeded(FitError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray            # (N, 2n) real coordinates
    region: np.ndarray            # (N,) region codes
    weight: np.ndarray            # (N,)
    component: np.ndarray         # (N,) labyrinth component index or -1

    def __post_init__(self):
        for name in ("points", "region", "weight", "component"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def subset(self, mask: np.ndarray) -> "SampleSet":
        return SampleSet(self.points[mask], self.region[mask],
                         self.weight[mask], self.component[mask])

    @property
    def complex_points(self) -> np.ndarray:
        return as_complex(self.points)


@dataclass(frozen=True)
class SampleCounts:
    ball: int = 3000
    tube: int = 1200
    per_lambda_v: int = 20
    per_delta1: int = 10
    per_quiet: int = 4            # components needing no value change


def assemble_samples(lab: TangentLabyrinth, split: LabyrinthSplit, mu: float,
                     divisor, r_ball: float, eta: float | None,
                     counts: SampleCounts, seed: int,
                     quiet_components: np.ndarray | None = None,
                     weights: dict | None = None) -> tuple[SampleSet, SampleSet]:
    """Fit and held-out validation samples over the approximation region:
    low-discrepancy ball fill, a tube guard near the divisor, and per-cap
    disc samples inflated by mu on the lambda_0 side."""
    weights = weights or {BALL: 1.0, LAMBDA_V: 4.0, DELTA_1: 4.0, TUBE: 2.0}
    rngs = spawn_rngs(seed, 8)
    quiet = set(int(i) for i in (quiet_components if quiet_components is not None else []))
    dim = lab.dim

    def one(role_rng, val: bool) -> SampleSet:
        pts, reg, wgt, comp = [], [], [], []
        if val:
            ball_pts = ball_uniform(role_rng[0], dim, counts.ball, r_ball)
        else:
            ball_pts = ball_fill(dim, counts.ball, r_ball, seed + (1 if val else 0))
        pts.append(ball_pts)
        reg.append(np.full(len(ball_pts), BALL))
        wgt.append(np.full(len(ball_pts), weights[BALL]))
        comp.append(np.full(len(ball_pts), -1))
        if divisor is not None and eta is not None and np.isfinite(eta) and counts.tube:
            from .sampling import tube_samples

            tp = tube_samples(divisor.h[0], lab.shell.outer * 0.995, eta, counts.tube, role_rng[1])
            if len(tp):
                pts.append(tp)
                reg.append(np.full(len(tp), TUBE))
                wgt.append(np.full(len(tp), weights[TUBE]))
                comp.append(np.full(len(tp), -1))
        for i in split.lambda_V:
            m = counts.per_lambda_v
            d = disc_samples(lab.centers[i], lab.radii[i], m, role_rng[2])
            pts.append(d)
            reg.append(np.full(m, LAMBDA_V))
            wgt.append(np.full(m, weights[LAMBDA_V]))
            comp.append(np.full(m, i))
        for i in split.lambda_0:
            m = counts.per_quiet if int(i) in quiet else counts.per_delta1
            d = disc_samples(lab.centers[i], lab.radii[i], m, role_rng[3])
            if mu > 0:
                offs = role_rng[4].standard_normal((m, dim))
                offs /= np.linalg.norm(offs, axis=1, keepdims=True)
                d = d + offs * (mu * role_rng[4].random(m))[:, None]
            pts.append(d)
            reg.append(np.full(m, DELTA_1))
            wgt.append(np.full(m, weights[DELTA_1] * (0.25 if int(i) in quiet else 1.0)))
            comp.append(np.full(m, i))
        return SampleSet(np.concatenate(pts), np.concatenate(reg).astype(np.int64),
                         np.concatenate(wgt), np.concatenate(comp).astype(np.int64))

    fit_set = one(rngs[:5], val=False)
    val_set = one(rngs[3:], val=True)
    return fit_set, val_set


# ---------------------------------------------------------------------------
# deformation choice


@dataclass(frozen=True)
class PhiSpec:
    """Per-component deformation of the previous map on the lambda_0 side.

    case SCALE multiplies by a positive constant per component (boosting
    quiet components above the band, attenuating near-tube ones below it);
    case SHIFT adds a constant; IDENTITY leaves everything in place.  Either
    way the deformation never vanishes, so it cannot create zeros by itself.
    """

    case: str
    lambda_j: float
    multipliers: dict = field(default_factory=dict)   # component -> C_a (SCALE)
    shifts: dict = field(default_factory=dict)        # component -> w_a (SHIFT)
    kinds: dict = field(default_factory=dict)         # component -> boost/attenuate/identity
    representative: complex = 0.0

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "lambda_j": self.lambda_j,
            "representative": [self.representative.real, self.representative.imag],
            "kinds": {str(k): v for k, v in self.kinds.items()},
            "multipliers": {str(k): float(v) for k, v in self.multipliers.items()},
            "shifts": {str(k): [complex(v).real, complex(v).imag] for k, v in self.shifts.items()},
        }


@dataclass(frozen=True)
class PhiPolicy:
    headroom: float = 2.0          # loud target = headroom / lambda (SCALE)
    quiet_margin: float = 0.5      # quiet target = quiet_margin * lambda
    shift_margin: float = 1.0      # SHIFT target = vmax + 1/lambda + shift_margin
    zero_floor: float = 1.0e-9
    attenuate_roles: tuple = ("ring", "tube")


def component_value_stats(F_prev: CandidateMap, samples: SampleSet) -> dict:
    vals = np.abs(F_prev.eval(samples.complex_points))[:, 0]
    stats = {}
    for i in np.unique(samples.component):
        if i < 0:
            continue
        v = vals[samples.component == i]
        stats[int(i)] = (float(v.min()), float(v.max()))
    return stats


def choose_phi(F_prev: CandidateMap, split: LabyrinthSplit, lambda_j: float,
               mode_variant: str, stats: dict, roles: dict | None = None,
               policy: PhiPolicy | None = None) -> PhiSpec:
    """Pick per-component constants so the deformed map is loud (above
    1/lambda with headroom) on boosted components and quiet (below lambda)
    on attenuated ones, leaving already-loud components untouched."""
    policy = policy or PhiPolicy()
    roles = roles or {}
    if split.lambda_0.size == 0:
        return PhiSpec("IDENTITY", lambda_j)
    hi = policy.headroom / lambda_j
    lo = policy.quiet_margin * lambda_j
    if mode_variant == "EXACT_ZERO":
        mult, kinds = {}, {}
        rep = 1.0
        for i in split.lambda_0:
            i = int(i)
            vmin, vmax = stats[i]
            role = roles.get(i, "main")
            if role in policy.attenuate_roles:
                if vmax <= lo:
                    mult[i], kinds[i] = 1.0, "identity_quiet"
                else:
                    mult[i] = lo / vmax
                    kinds[i] = "attenuate"
            elif vmin >= hi:
                mult[i], kinds[i] = 1.0, "identity_loud"
            else:
                if vmin < policy.zero_floor:
                    raise ZeroOnLambda0(
                        f"component {i} has |F_prev| down to {vmin:.3e}; scaling cannot "
                        "lift a near-zero value, check the divisor classification")
                mult[i] = hi / vmin
                kinds[i] = "boost"
                rep = max(rep, mult[i])
        return PhiSpec("SCALE", lambda_j, multipliers=mult, kinds=kinds, representative=rep)
    # SHIFT family (interpolating and no-divisor runs)
    shifts, kinds = {}, {}
    rep = 0.0
    for i in split.lambda_0:
        i = int(i)
        vmin, vmax = stats[i]
        if vmin >= hi:
            shifts[i], kinds[i] = 0.0, "identity_loud"
        else:
            w = vmax + 1.0 / lambda_j + policy.shift_margin
            shifts[i], kinds[i] = complex(w), "boost"
            rep = max(rep, abs(w))
    return PhiSpec("SHIFT", lambda_j, shifts=shifts, kinds=kinds, representative=rep)


@dataclass(frozen=True)
class TargetSet:
    delta_f: np.ndarray           # per-sample target change of the map
    w_total: np.ndarray           # equivalent total-W values (diagnostic)
    carrier_floor: float

    def __post_init__(self):
        for name in ("delta_f", "w_total"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def build_targets(phi: PhiSpec, samples: SampleSet, F_prev: CandidateMap,
                  floor: float = 1.0e-30) -> TargetSet:
    """Per-sample target values: zero change on the ball, the tube, and the
    lambda_V side; the per-component scale or shift on the inflated
    lambda_0 discs."""
    z = samples.complex_points
    f_prev = F_prev.eval(z)[:, 0]
    h_vals = F_prev.divisor.eval(z)[:, 0]
    carrier = F_prev.carrier_values(F_prev.divisor.eval(z))[:, 0]
    delta = np.zeros(len(samples), dtype=complex)
    on_caps = samples.region == DELTA_1
    if phi.case == "SCALE":
        for i, c in phi.multipliers.items():
            mask = on_caps & (samples.component == i)
            delta[mask] = (c - 1.0) * f_prev[mask]
    elif phi.case == "SHIFT":
        for i, w in phi.shifts.items():
            mask = on_caps & (samples.component == i)
            delta[mask] = w
    needed = on_caps & (delta != 0)
    if needed.any():
        cmin = float(np.abs(carrier[needed]).min())
        if cmin < floor:
            raise DivisionFloor(
                f"carrier magnitude {cmin:.3e} under the floor {floor:.1e} on an "
                "inflated component sample; the component classification is suspect")
    w_prev = np.where(np.abs(carrier) > floor,
                      (f_prev - h_vals) / np.where(np.abs(carrier) > floor, carrier, 1.0),
                      0.0)
    w_tot = w_prev + np.where(np.abs(carrier) > floor, delta / np.where(np.abs(carrier) > floor, carrier, 1.0), 0.0)
    cf = float(np.abs(carrier[on_caps]).min()) if on_caps.any() else np.inf
    return TargetSet(delta, w_tot, cf)


# ---------------------------------------------------------------------------
# basis and least squares


@dataclass(frozen=True)
class BasisSpec:
    base_degree: int
    slices: tuple = ()

    def exponents(self, n: int) -> np.ndarray:
        if n != 2:
            rows = [a for a in _simplex(n, self.base_degree)]
            return np.asarray(rows, dtype=np.int64)
        rows = []
        for d in range(self.base_degree + 1):
            for i in range(d + 1):
                rows.append((d - i, i))
        for k in self.slices:
            if k <= self.base_degree:
                continue
            for i in range(k + 1):
                rows.append((k - i, i))
        return np.asarray(rows, dtype=np.int64)

    @property
    def degree(self) -> int:
        return max([self.base_degree, *self.slices]) if self.slices else self.base_degree

    def to_json(self) -> dict:
        return {"base_degree": self.base_degree, "slices": [int(k) for k in self.slices]}


def _simplex(n, d):
    if n == 1:
        for i in range(d + 1):
            yield (i,)
        return
    for i in range(d + 1):
        for rest in _simplex(n - 1, d - i):
            yield (i, *rest)


def slice_order(amplitude: float, flatness: float, rho_anchor: float, r_ball: float,
                margin: float = 1.15) -> int:
    """Minimum homogeneous order that can be `amplitude` at radius rho_anchor
    yet below `flatness` on the r_ball sphere (growth-ratio bound)."""
    if rho_anchor <= r_ball:
        raise FitError("slice anchor must sit above the flat ball")
    need = np.log(max(amplitude / flatness, 1.0))
    return int(np.ceil(margin * need / np.log(rho_anchor / r_ball))) + 1


@dataclass(frozen=True)
class FitConfig:
    eps_prime: float
    schedule: tuple                    # of BasisSpec
    lambda_j: float
    loud_threshold: float              # validated minimum on boosted components
    quiet_threshold: float             # validated maximum on quiet components
    ridge: float = 0.0
    scale: float = 1.0
    c8_floor: float = 1.0e-12
    max_rows: int = 60_000


@dataclass
class FitReport:
    degree: int
    n_columns: int
    basis: BasisSpec
    eps_prime: float
    residuals: dict
    verdicts: dict
    accepted: bool
    lambda_j: float
    condition_note: str = ""
    component_values: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "n_columns": self.n_columns,
            "basis": self.basis.to_json(),
            "eps_prime": self.eps_prime,
            "residuals": self.residuals,
            "verdicts": self.verdicts,
            "accepted": self.accepted,
            "lambda_j": self.lambda_j,
            "note": self.condition_note,
        }


def _design_matrix(samples: SampleSet, F_prev: CandidateMap, exps: np.ndarray,
                   scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Weighted rows carrier(z) * monomial(z / scale); returns (A, colnorm)."""
    from .polynomials import monomial_matrix

    z = samples.complex_points / scale
    A = monomial_matrix(z, exps)
    carrier = F_prev.carrier_values(F_prev.divisor.eval(samples.complex_points))[:, 0]
    A *= (carrier * samples.weight)[:, None]
    colnorm = np.linalg.norm(A, axis=0)
    colnorm = np.where(colnorm < 1e-300, 1.0, colnorm)
    A /= colnorm[None, :]
    return A, colnorm


def _compose_delta_w(exps: np.ndarray, coeffs: np.ndarray, colnorm: np.ndarray,
                     scale: float, n: int) -> MultiPoly:
    raw = coeffs / colnorm
    powers = exps.sum(axis=1)
    raw = raw / (scale ** powers)
    return MultiPoly(n, exps, raw)


def evaluate_fit(F_new: CandidateMap, F_prev: CandidateMap, val: SampleSet,
                 phi: PhiSpec, cfg: FitConfig) -> tuple[dict, dict, dict]:
    z = val.complex_points
    f_new = F_new.eval(z)[:, 0]
    f_prev = F_prev.eval(z)[:, 0]
    v = np.abs(f_new)
    residuals, verdicts, comp_values = {}, {}, {}

    smooth = (val.region == BALL) | (val.region == TUBE) | (val.region == LAMBDA_V)
    for code in (BALL, TUBE, LAMBDA_V):
        mask = val.region == code
        residuals[REGION_NAMES[code]] = float(np.abs(f_new[mask] - f_prev[mask]).max()) if mask.any() else 0.0
    verdicts["c1"] = bool(np.abs(f_new[smooth] - f_prev[smooth]).max() < cfg.eps_prime) if smooth.any() else True

    ok_loud, ok_quiet = True, True
    cap_res = 0.0
    for i, kind in phi.kinds.items():
        mask = val.component == i
        if not mask.any():
            continue
        vi = v[mask]
        comp_values[i] = (float(vi.min()), float(vi.max()), kind)
        if kind in ("boost", "identity_loud"):
            ok_loud &= bool(vi.min() > cfg.loud_threshold)
        else:
            ok_quiet &= bool(vi.max() < cfg.quiet_threshold)
        if phi.case == "SCALE" and kind == "boost":
            target = phi.multipliers[i] * f_prev[mask]
            cap_res = max(cap_res, float(np.abs(f_new[mask] - target).max()))
        elif phi.case == "SHIFT" and kind == "boost":
            target = f_prev[mask] + phi.shifts[i]
            cap_res = max(cap_res, float(np.abs(f_new[mask] - target).max()))
    lam_mask = val.region == LAMBDA_V
    if lam_mask.any():
        ok_quiet &= bool(v[lam_mask].max() < cfg.quiet_threshold)
    residuals["delta1"] = cap_res
    verdicts["c7"] = bool(ok_loud and ok_quiet)

    off_v = (val.region == LAMBDA_V) | (val.region == DELTA_1)
    if F_new.carrier == "power":
        h_abs = np.abs(F_new.divisor.eval(z))[:, 0]
        off_v = off_v & (h_abs > cfg.c8_floor)
    verdicts["c8"] = bool(v[off_v].min() > 0.0) if off_v.any() else True
    return residuals, verdicts, comp_values


def fit(samples: SampleSet, val: SampleSet, targets: TargetSet, phi: PhiSpec,
        F_prev: CandidateMap, cfg: FitConfig) -> tuple[CandidateMap, FitReport]:
    """Iterate the basis schedule until the validated deformation passes its
    residual and value conditions; raise DegreeCapExceeded with the best
    report otherwise."""
    if F_prev.q != 1:
        raise FitError("the fitter currently handles q = 1")
    if len(samples) > cfg.max_rows:
        raise FitError(f"sample count {len(samples)} exceeds row cap {cfg.max_rows}")
    y = targets.delta_f * samples.weight
    best_report = None
    best_result = None
    for spec in cfg.schedule:
        exps = spec.exponents(F_prev.n)
        A, colnorm = _design_matrix(samples, F_prev, exps, cfg.scale)
        if cfg.ridge > 0:
            A_aug = np.vstack([A, np.sqrt(cfg.ridge) * np.eye(A.shape[1], dtype=complex)])
            y_aug = np.concatenate([y, np.zeros(A.shape[1], dtype=complex)])
            sol, *_ = scipy.linalg.lstsq(A_aug, y_aug, lapack_driver="gelsy")
        else:
            sol, *_ = scipy.linalg.lstsq(A, y, lapack_driver="gelsy")
        dW = _compose_delta_w(exps, sol, colnorm, cfg.scale, F_prev.n)
        F_new = F_prev.with_W((F_prev.W[0] + dW,))
        residuals, verdicts, comp_values = evaluate_fit(F_new, F_prev, val, phi, cfg)
        residuals["train"] = float(np.abs(A @ sol - y).max())
        report = FitReport(spec.degree, exps.shape[0], spec, cfg.eps_prime,
                           residuals, verdicts, all(verdicts.values()), cfg.lambda_j,
                           component_values=comp_values)
        if report.accepted:
            return F_new, report
        if best_report is None or _score(report) < _score(best_report):
            best_report, best_result = report, F_new
    raise DegreeCapExceeded(
        f"no basis in the schedule met eps'={cfg.eps_prime:.3e} with the value "
        f"conditions; best residuals {best_report.residuals}", best_report)


def _score(report: FitReport) -> float:
    return report.residuals.get("ball", np.inf) + report.residuals.get("delta1", np.inf)
