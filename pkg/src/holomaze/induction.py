"""Orchestration of the inductive construction: schedules, per-step tube
width, labyrinth build, divisor split, deformation choice, correction fit,
condition bookkeeping, and finalization with the truncation ledger.

Each step deforms the previous map so every labyrinth component carries
either a small or a large value, while the map barely moves on the inner
ball.  Because polynomial corrections localized near a sphere keep growing
outward, earlier steps must keep an angular standoff from the divisor
directions; the standoff and the homogeneous slice orders are derived from
growth-ratio arithmetic in :func:`plan_step`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .fitting import (
    BasisSpec,
    FitConfig,
    PhiPolicy,
    SampleCounts,
    assemble_samples,
    build_targets,
    choose_phi,
    component_value_stats,
    fit,
    slice_order,
)
from .geometry import Shell, as_complex
from .labyrinth import (
    AvoidanceNeighborhood,
    BuildConfig,
    InflatedPair,
    LabyrinthSplit,
    TangentLabyrinth,
    ZoneSpec,
    avoidance_neighborhood,
    build,
    inflate,
    split,
)
from .polynomials import (
    CandidateMap,
    Divisor,
    EpsilonBudget,
    NotSubmersive,
    cauchy_epsilon,
    min_rank_margin,
)
from .sampling import ball_fill, ball_uniform, spawn_rngs, tube_samples


class InductionError(ValueError):
    pass


class EtaFloor(InductionError):
    pass


class NotReached(InductionError):
    pass


class ScheduleError(InductionError):
    pass


VARIANTS = ("INTERPOLATE", "EXACT_ZERO", "ALL_COMPLETE")
AMBIENTS = ("BALL", "FULL_SPACE")


@dataclass(frozen=True)
class Mode:
    variant: str = "EXACT_ZERO"
    ambient: str = "BALL"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ScheduleError(f"unknown mode variant {self.variant}")
        if self.ambient not in AMBIENTS:
            raise ScheduleError(f"unknown ambient {self.ambient}")

    def to_json(self) -> dict:
        return {"variant": self.variant, "ambient": self.ambient}

    @staticmethod
    def from_json(obj: dict) -> "Mode":
        return Mode(obj["variant"], obj["ambient"])


@dataclass(frozen=True)
class Schedule:
    r: tuple
    R: tuple
    deltas: tuple
    lambdas: tuple
    r0: float

    def __post_init__(self):
        J = len(self.r)
        if not (len(self.R) == len(self.deltas) == len(self.lambdas) == J and J >= 1):
            raise ScheduleError("schedule arrays must share one length >= 1")
        seq = [self.r0]
        for rj, Rj in zip(self.r, self.R):
            seq.extend([rj, Rj])
        if not all(a < b for a, b in zip(seq, seq[1:])):
            raise ScheduleError(f"radii must interlace strictly: {seq}")
        if not all(0 < l < 1 for l in self.lambdas):
            raise ScheduleError("lambda values must lie in (0, 1)")
        if not all(a > b for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ScheduleError("lambda values must decrease")
        if not all(d > 0 for d in self.deltas):
            raise ScheduleError("crossing budgets must be positive")
        if not all(a < b for a, b in zip(self.deltas, self.deltas[1:])):
            raise ScheduleError("crossing budgets must increase")

    @property
    def J(self) -> int:
        return len(self.r)

    def shell(self, j: int) -> Shell:
        return Shell(self.r[j - 1], self.R[j - 1])

    def R_prev(self, j: int) -> float:
        return self.r0 if j == 1 else self.R[j - 2]

    @staticmethod
    def default(J: int = 2, ambient: str = "BALL") -> "Schedule":
        if ambient == "FULL_SPACE":
            r = [2.0 ** j for j in range(1, J + 2)]
        else:
            r = [1.0 - 2.0 ** (-j - 1) for j in range(1, J + 2)]
        R = [(r[j] + r[j + 1]) / 2.0 for j in range(J)]
        deltas = [float(j) for j in range(1, J + 1)]
        lambdas = [4.0 ** (-j) for j in range(1, J + 1)]
        return Schedule(tuple(r[:J]), tuple(R), tuple(deltas), tuple(lambdas), 0.9 * r[0])

    def to_json(self) -> dict:
        return {"r": list(self.r), "R": list(self.R), "deltas": list(self.deltas),
                "lambdas": list(self.lambdas), "r0": self.r0}

    @staticmethod
    def from_json(obj: dict) -> "Schedule":
        return Schedule(tuple(obj["r"]), tuple(obj["R"]), tuple(obj["deltas"]),
                        tuple(obj["lambdas"]), float(obj["r0"]))


@dataclass(frozen=True)
class StepTuning:
    """Desk-scale knobs for zone layout and fit sizing."""

    safety: float = 4.0
    headroom: float = 2.0
    quiet_margin: float = 0.5
    eta_shrink: float = 0.85
    eta_grid: int = 24
    eta_samples: int = 1500
    rank_samples: int = 2048
    rank_floor: float = 1.0e-9
    tube_levels: int = 2
    tube_pitch: float = 2.8
    ring_levels: int = 2
    ring_pitch: float = 4.0
    corridor_levels: int = 3
    corridor_pitch: float = 4.6
    corridor_cap: float = 0.035
    far_levels: int = 2
    far_pitch: float = 9.0
    anchor_lo: float = 0.55           # zones occupy this fraction of the shell upward
    slice_margin: float = 1.12
    slice_count: int = 5
    slice_spacing: int = 4
    schedule_stages: int = 3
    counts: SampleCounts = field(default_factory=SampleCounts)
    spill_budget_fraction: float = 0.3
    certify_restarts: int = 40
    certify_sweeps: int = 120
    max_components: int = 60_000


@dataclass
class StepRecord:
    j: int
    eps: float
    eta: float | None
    labyrinth: TangentLabyrinth
    split: LabyrinthSplit
    inflated: InflatedPair
    avoidance: AvoidanceNeighborhood | None
    phi: "object"
    fit_report: "object"
    accepted: bool
    rank_margin_prev_ball: float
    ball_residual: float
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "j": self.j,
            "eps": self.eps,
            "eta": self.eta,
            "labyrinth": self.labyrinth.to_json(),
            "split": self.split.to_json(),
            "inflated": self.inflated.to_json(),
            "avoidance": self.avoidance.to_json() if self.avoidance else None,
            "phi": self.phi.to_json(),
            "fit": self.fit_report.to_json(),
            "accepted": self.accepted,
            "rank_margin_prev_ball": self.rank_margin_prev_ball,
            "ball_residual": self.ball_residual,
            "notes": self.notes,
        }


@dataclass
class InductionState:
    mode: Mode
    schedule: Schedule
    F: CandidateMap
    eps_budget: EpsilonBudget
    j: int = 0
    records: list = field(default_factory=list)
    seed: int = 2024
    maps: list = field(default_factory=list)      # F_0 .. F_j

    @property
    def divisor(self) -> Divisor:
        return self.F.divisor

    def to_json(self) -> dict:
        return {
            "mode": self.mode.to_json(),
            "schedule": self.schedule.to_json(),
            "F": self.F.to_json(),
            "eps0": self.eps_budget.eps0,
            "eps_values": list(self.eps_budget.values),
            "j": self.j,
            "seed": self.seed,
        }


def init(divisor: Divisor, mode: Mode, schedule: Schedule | None = None,
         eps0: float = 0.1, seed: int = 2024,
         tuning: StepTuning | None = None) -> InductionState:
    """Start the induction from the divisor's own map (zero correction)."""
    tuning = tuning or StepTuning()
    schedule = schedule or Schedule.default(ambient=mode.ambient)
    carrier = "one" if mode.variant == "ALL_COMPLETE" else "power"
    F0 = CandidateMap.from_divisor(divisor, order=2, carrier=carrier)
    rng = spawn_rngs(seed, 1)[0]
    radius = schedule.R[-1] * (0.98 if mode.ambient == "BALL" else 1.0)
    samples = as_complex(ball_uniform(rng, 2 * divisor.n, tuning.rank_samples, radius))
    margin = min_rank_margin(F0, samples)
    if margin <= tuning.rank_floor:
        raise NotSubmersive(
            f"divisor map rank margin {margin:.3e} at or below floor {tuning.rank_floor:.1e} "
            "on ball samples")
    return InductionState(mode, schedule, F0, EpsilonBudget(eps0), 0, [], seed, [F0])


def compute_eta(state: InductionState, lambda_j: float,
                tuning: StepTuning | None = None) -> float:
    """Largest tube width from a shrinking grid such that the previous map
    stays below lambda on the tube and nonzero on the tube off the divisor."""
    tuning = tuning or StepTuning()
    if state.mode.variant == "ALL_COMPLETE":
        return float("inf")
    j = state.j + 1
    R_j = state.schedule.R[j - 1]
    rng = spawn_rngs(state.seed + 31 * j, 1)[0]
    h = state.divisor.h[0]
    eta = 0.9 * lambda_j
    for _ in range(tuning.eta_grid):
        pts = tube_samples(h, R_j, eta, tuning.eta_samples, rng)
        if len(pts) == 0:
            raise EtaFloor("tube sampler found no divisor points inside the shell radius")
        z = as_complex(pts)
        vals = np.abs(state.F.eval(z))[:, 0]
        h_abs = np.abs(state.divisor.eval(z))[:, 0]
        off_v = h_abs > 1e-13
        nonzero_ok = bool((vals[off_v] > 0.0).all()) if off_v.any() else True
        if vals.max() < lambda_j and nonzero_ok:
            return float(eta)
        eta *= tuning.eta_shrink
    raise EtaFloor(
        f"no tube width above {eta:.3e} kept |F| below {lambda_j} on the tube; "
        "the previous step's corrections spill too close to the divisor")


def crosstalk_standoff(rho: float, r_ref: float, k: int, amp_ratio: float) -> float:
    """Angular distance at which a degree-k feature of relative amplitude
    amp_ratio anchored at radius rho decays below 1 at radius r_ref."""
    val = max(np.log(max(r_ref / rho, 1.0)) + np.log(max(amp_ratio, 1.0)) / max(k, 1), 0.0)
    return float(np.sqrt(2.0 * val))


@dataclass
class StepPlan:
    zone_plan: tuple
    slices: tuple
    base_degree: int
    eps_prime: float
    eta: float | None
    split_tol: float
    anchors: dict


def plan_step(state: InductionState, j: int, eps_j: float, eta: float | None,
              tuning: StepTuning) -> StepPlan:
    """Derive zone layout and basis orders for step j from growth-ratio
    arithmetic: slice orders from the flatness/amplitude ratio, divisor
    standoffs from the outward spill each boosted zone will commit."""
    sched = state.schedule
    lam = sched.lambdas[j - 1]
    r_j, R_j = sched.r[j - 1], sched.R[j - 1]
    shell_w = R_j - r_j
    last_step = j == sched.J
    r_ref = sched.R[-1]
    amp = tuning.headroom / lam

    # provisional eps' from the spec formula; the h_floor part is refined
    # after the split, so a representative floor from the ring edge is used
    ring_hi_guess = 0.25 * r_j
    h_floor = (0.5 * ring_hi_guess) ** 2
    eps_prime = min(eps_j, lam * h_floor) / 4.0

    anchor = r_j + tuning.anchor_lo * shell_w
    k_main = slice_order(amp, eps_prime, anchor, r_j, tuning.slice_margin)
    ripple = float(np.exp(k_main * (tuning.corridor_cap / anchor) ** 2 / 2.0))

    zones = []
    roles = []
    if state.mode.variant != "ALL_COMPLETE" and eta is not None and np.isfinite(eta):
        tube_cap = eta / 2.0 * 0.9
        zones.append(ZoneSpec(levels=tuning.tube_levels, ball_cap=tube_cap,
                              pitch_factor=tuning.tube_pitch,
                              keep_max_vdist=0.75 * eta, radial_share=0.5, role="tube"))
        # attenuating ring: stands off the tube only by its own mild spill
        theta_ring = crosstalk_standoff(anchor, R_j, k_main, 1.0 / (tuning.quiet_margin * lam))
        ring_lo = max(1.2 * eta, 0.5 * r_j * np.sin(min(theta_ring * 0.5, 1.2)))
        ring_hi = 0.21 * r_j
        if ring_hi > ring_lo:
            zones.append(ZoneSpec(levels=tuning.ring_levels, ball_cap=tuning.corridor_cap,
                                  pitch_factor=tuning.ring_pitch,
                                  keep_min_vdist=ring_lo, keep_max_vdist=ring_hi,
                                  radial_share=0.8, role="ring"))
        if last_step:
            corr_lo = 0.8 * ring_hi
            corr_hi = 0.75 * r_j
        else:
            # earlier steps must not poison later tubes: stand off by the
            # outward growth to the final shell
            theta_guard = crosstalk_standoff(anchor, r_ref, k_main,
                                             amp / (tuning.spill_budget_fraction * sched.lambdas[-1]))
            corr_lo = r_j * np.sin(min(theta_guard, 1.35))
            corr_hi = np.inf
        zones.append(ZoneSpec(levels=tuning.corridor_levels, ball_cap=tuning.corridor_cap,
                              pitch_factor=tuning.corridor_pitch,
                              keep_min_vdist=corr_lo, keep_max_vdist=corr_hi,
                              radial_share=1.3, role="main"))
        if last_step:
            zones.append(ZoneSpec(levels=tuning.far_levels, ball_cap=tuning.corridor_cap * 1.5,
                                  pitch_factor=tuning.far_pitch,
                                  keep_min_vdist=corr_hi * 0.95, radial_share=0.5, role="far"))
    else:
        zones.append(ZoneSpec(levels=tuning.corridor_levels + tuning.far_levels,
                              ball_cap=tuning.corridor_cap,
                              pitch_factor=tuning.corridor_pitch, radial_share=1.0,
                              role="main"))

    k_eff = slice_order(amp * ripple, eps_prime, anchor, r_j, tuning.slice_margin)
    slices = tuple(k_eff + i * tuning.slice_spacing for i in range(tuning.slice_count))
    split_tol = (0.5 * eta) if (eta is not None and np.isfinite(eta)) else 0.0
    return StepPlan(tuple(zones), slices, 24, eps_prime, eta, split_tol,
                    {"k_main": k_main, "k_eff": k_eff, "ripple": ripple, "anchor": anchor,
                     "amp": amp})


def step(state: InductionState, tuning: StepTuning | None = None,
         build_cfg: BuildConfig | None = None) -> InductionState:
    """Run one induction step and return the extended state."""
    tuning = tuning or StepTuning()
    j = state.j + 1
    sched = state.schedule
    if j > sched.J:
        raise InductionError(f"schedule exhausted at step {j}")
    lam = sched.lambdas[j - 1]
    shell = sched.shell(j)
    rngs = spawn_rngs(state.seed + 1000 * j, 8)

    # (4_j)/(5_j): approximation budget from the derivative margin
    prev_ball = as_complex(ball_uniform(rngs[0], 2 * state.F.n, tuning.rank_samples,
                                        sched.R_prev(j)))
    eps_prev = state.eps_budget.values[-1] if state.eps_budget.values else state.eps_budget.eps0
    eps_j = cauchy_epsilon(state.F, sched.R_prev(j), sched.r[j - 1], eps_prev,
                           tuning.safety, samples=prev_ball)
    rank_margin = min_rank_margin(state.F, prev_ball)

    eta = compute_eta(state, lam, tuning) if state.mode.variant != "ALL_COMPLETE" else None
    plan = plan_step(state, j, eps_j, eta, tuning)

    divisor = None if state.mode.variant == "ALL_COMPLETE" else state.divisor
    eta_build = eta if eta is not None else shell.thickness * 0.9
    cfg = build_cfg or BuildConfig()
    cfg = replace(cfg, zone_plan=plan.zone_plan, divisor=divisor,
                  seed=state.seed + 77 * j, certify_gate=False,
                  restarts=tuning.certify_restarts, sweeps=tuning.certify_sweeps,
                  reduced_shell_first=False, ladder_steps=1,
                  max_components=tuning.max_components)
    lab = build(shell, sched.deltas[j - 1], eta_build, state.F.n, cfg)

    sp = split(lab, divisor, plan.split_tol if divisor is not None else 1e-9,
               seed=state.seed + 3 * j)
    pair = (inflate(sp, lab, divisor, sched.r[j - 1])
            if sp.lambda_0.size else InflatedPair(0.0, sp.lambda_0))
    avoid = avoidance_neighborhood(lab, pair)

    counts = tuning.counts
    fit_set, val_set = assemble_samples(lab, sp, pair.mu * 0.5, divisor, sched.r[j - 1],
                                        eta, counts, state.seed + 13 * j)
    roles = {int(i): lab.level_role[int(lab.levels[i])] for i in range(len(lab))}
    ripple = plan.anchors["ripple"]
    policy = PhiPolicy(headroom=tuning.headroom * ripple,
                       quiet_margin=tuning.quiet_margin,
                       shift_margin=(tuning.headroom * ripple - 1.0) / lam)
    phi_mode = "EXACT_ZERO" if state.mode.variant == "EXACT_ZERO" else "SHIFT"
    stats = component_value_stats(state.F, fit_set)
    phi = choose_phi(state.F, sp, lam, phi_mode, stats, roles, policy)

    quiet = np.array([i for i, k in phi.kinds.items() if k.startswith("identity")], dtype=np.int64)
    if quiet.size:
        fit_set, val_set = assemble_samples(lab, sp, pair.mu * 0.5, divisor, sched.r[j - 1],
                                            eta, counts, state.seed + 13 * j,
                                            quiet_components=quiet)
        stats = component_value_stats(state.F, fit_set)
        phi = choose_phi(state.F, sp, lam, phi_mode, stats, roles, policy)
    targets = build_targets(phi, fit_set, state.F)

    h_floor = targets.carrier_floor if np.isfinite(targets.carrier_floor) else 1.0
    eps_prime = min(eps_j, lam * h_floor) / 4.0
    schedule_specs = []
    for stage in range(tuning.schedule_stages):
        grow = 1.0 + 0.18 * stage
        k0 = int(plan.anchors["k_eff"] * grow)
        spacing = tuning.slice_spacing
        count = tuning.slice_count + stage
        schedule_specs.append(BasisSpec(plan.base_degree + 8 * stage,
                                        tuple(k0 + i * spacing for i in range(count))))
    fcfg = FitConfig(eps_prime=eps_prime, schedule=tuple(schedule_specs), lambda_j=lam,
                     loud_threshold=tuning.headroom / lam / 2.0 * 1.0,
                     quiet_threshold=lam * tuning.quiet_margin,
                     scale=sched.R[j - 1])
    F_new, report = fit(fit_set, val_set, targets, phi, state.F, fcfg)

    state.eps_budget.admit(eps_j)
    ball_val = val_set.subset(val_set.region == 0)
    ball_res = float(np.abs(F_new.eval(ball_val.complex_points)
                            - state.F.eval(ball_val.complex_points)).max())
    record = StepRecord(j, eps_j, eta, lab, sp, pair, avoid, phi, report,
                        bool(report.accepted and ball_res < eps_j), rank_margin, ball_res,
                        notes={"plan": {k: (float(v) if np.isscalar(v) else v)
                                        for k, v in plan.anchors.items()},
                               "eps_prime": eps_prime,
                               "labyrinth_certificate": lab.meta.get("certificate", {})})
    if not record.accepted:
        raise InductionError(
            f"step {j} rejected: fit accepted={report.accepted}, ball residual {ball_res:.3e} "
            f"vs eps_j {eps_j:.3e}")
    state.records.append(record)
    state.maps.append(F_new)
    return replace_state(state, F_new, j)


def replace_state(state: InductionState, F_new: CandidateMap, j: int) -> InductionState:
    state.F = F_new
    state.j = j
    return state


def j_lambda_values(lambdas, eps_values, lam: float) -> int:
    """Smallest step index whose band strictly contains [lam, 1/lam]."""
    if not 0.0 < lam < 1.0:
        raise InductionError("band parameter must lie in (0, 1)")
    for j, (lj, ej) in enumerate(zip(lambdas, eps_values), start=1):
        if lj + ej < lam and 1.0 / lam < 1.0 / lj - ej:
            return j
    raise NotReached(f"no step within the schedule certifies the band {lam}")


def j_lambda(schedule: Schedule, eps_budget: EpsilonBudget, lam: float) -> int:
    eps = list(eps_budget.values)
    if len(eps) < schedule.J:
        eps = eps + [eps[-1] if eps else schedule.lambdas[-1] * 1e-3] * (schedule.J - len(eps))
    return j_lambda_values(schedule.lambdas, eps, lam)


@dataclass
class FinalArtifact:
    F: CandidateMap
    J: int
    eps_values: list
    tail_bounds: dict          # j -> (sum_{i>=j} eps_i, 2*eps_j)
    sampled_drift: dict        # j -> max |F_J - F_{j-1}| on the r_j ball samples
    continuation_budget: float
    note: str

    def to_json(self) -> dict:
        return {
            "F": self.F.to_json(),
            "J": self.J,
            "eps_values": self.eps_values,
            "tail_bounds": {str(k): [float(a), float(b)] for k, (a, b) in self.tail_bounds.items()},
            "sampled_drift": {str(k): float(v) for k, v in self.sampled_drift.items()},
            "continuation_budget": self.continuation_budget,
            "note": self.note,
        }


def finalize(state: InductionState, J: int | None = None) -> FinalArtifact:
    """Close the run: per-step tail bounds sum eps_i < 2 eps_j, sampled drift
    of the final map against each predecessor, and the budget an ideal
    continuation beyond step J would be allowed to spend."""
    J = J or state.j
    if J != state.j or J < 1:
        raise InductionError(f"finalize needs exactly the accepted steps, have {state.j}")
    eps = list(state.eps_budget.values)
    tail = {}
    for j in range(1, J + 1):
        s = sum(eps[j - 1:])
        tail[j] = (s, 2.0 * eps[j - 1])
    rngs = spawn_rngs(state.seed + 999, J)
    drift = {}
    for j in range(1, J + 1):
        pts = as_complex(ball_uniform(rngs[j - 1], 2 * state.F.n, 2000, state.schedule.r[j - 1]))
        d = np.abs(state.F.eval(pts) - state.maps[j - 1].eval(pts)).max()
        drift[j] = float(d)
    return FinalArtifact(
        state.F, J, eps, tail, drift, 2.0 * eps[-1] / 2.0,
        "finite truncation: the limit of the inductive sequence is not computed; "
        "the final map is the deliverable and the stated budget bounds what an "
        "ideal continuation could still move it on the innermost ball")
