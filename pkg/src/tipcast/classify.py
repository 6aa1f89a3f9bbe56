"""Case analysis of transition equations between coercive limit problems.

A transition scenario couples an equation x' = g(t,x) to two limit
equations g- (past) and g+ (future). Classification integrates the
distinguished solutions of g seeded from the past limit structure and
matches their tails against the future limit structure:

  concave  -> A (attractor-repeller pair), C (no bounded solutions),
              or Indeterminate with a B-candidate tag;
  dconcave -> A, C1, C2, or Indeterminate with a B1/B2-candidate tag.

The boundary cases B / B1 / B2 are never emitted directly: they occupy a
measure-zero parameter set and are certified only as bisection limits.
Every determinate decision must clear a 10x margin around match_tol, so
near-boundary runs come back Indeterminate instead of guessing.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field as dataclass_field
from typing import Mapping, Optional, Union

import numpy as np

from .codegen import BoundField
from .errors import (
    ApproachToleranceError,
    BracketNotFound,
    ClassificationError,
)
from .expr import ScalarField
from .integrate import (
    COMPLETED,
    ESCAPED_DOWN,
    SolverOptions,
    Trajectory,
    _as_bound,
    integrate,
)
from .limits import (
    CONCAVE,
    DCONCAVE,
    LimitStructure,
    LimitWindow,
    coercivity_bracket,
    limit_structure,
)

CASE_A = "A"
CASE_B = "B"
CASE_C = "C"
CASE_B1 = "B1"
CASE_B2 = "B2"
CASE_C1 = "C1"
CASE_C2 = "C2"
INDETERMINATE = "Indeterminate"

Fieldlike = Union[ScalarField, BoundField]


@dataclass(frozen=True)
class TransitionScenario:
    """A transition equation with its two limit equations.

    match_tol and approach_tol are scenario-scoped: transitions that
    reach their limits with compact support keep the tight defaults,
    while slowly decaying transitions (arctan ramps, impulse series)
    carry looser values consistent with their analytic decay rate.
    """

    g: Fieldlike
    g_minus: Fieldlike
    g_plus: Fieldlike
    klass: str
    params: Mapping[str, float] = dataclass_field(default_factory=dict)
    approach_tol: float = 1e-6
    match_tol: float = 1e-3
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.klass not in (CONCAVE, DCONCAVE):
            raise ValueError(f"unknown class {self.klass!r}")
        if self.approach_tol <= 0.0 or self.match_tol <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Classification:
    """Outcome of a case analysis.

    witnesses holds the terminal distances every decision rested on;
    solutions holds the integrated special solutions plus the limit
    solution samples used for matching.
    """

    case: str
    tag: str
    witnesses: Mapping[str, float]
    solutions: Mapping[str, Trajectory]
    horizon_used: float
    warnings: tuple[str, ...] = ()

    @property
    def determinate(self) -> bool:
        return self.case != INDETERMINATE


@dataclass(frozen=True)
class ClassifyOptions:
    """Horizon policy, integrator settings and limit-window protocol."""

    horizon: float = 1e4
    horizon_max: float = 4e4
    solver: SolverOptions = dataclass_field(default_factory=SolverOptions)
    tail_fraction: float = 0.1
    past_window_length: float = 10.0
    w0: float = 50.0
    w_max: float = 2e3
    conv_tol: float = 1e-9
    exponent_floor: float = 1e-3
    sep_tol: float = 1e-4

    def __post_init__(self) -> None:
        if self.horizon <= 0.0 or self.horizon_max < self.horizon:
            raise ValueError("need 0 < horizon <= horizon_max")
        if not 0.0 < self.tail_fraction < 1.0:
            raise ValueError("tail_fraction must be in (0, 1)")

    def window(self, t_lo: float, t_hi: float) -> LimitWindow:
        return LimitWindow(t_lo, t_hi, w0=self.w0, w_max=self.w_max,
                           conv_tol=self.conv_tol,
                           exponent_floor=self.exponent_floor,
                           sep_tol=self.sep_tol)

    def past_window(self, horizon: float) -> LimitWindow:
        return self.window(-horizon - self.past_window_length, -horizon)

    def future_window(self, horizon: float) -> LimitWindow:
        return self.window((1.0 - self.tail_fraction) * horizon, horizon)


# Limit structures are expensive and, for every built-in family, do not
# depend on the swept parameter; one bisection would otherwise recompute
# the same pullback limits ~30 times. Keyed by compiled-field identity
# (compiled fields are interned for the process lifetime), bound
# parameter vector, window and solver settings.
_STRUCTURE_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def _cached_structure(bf: BoundField, klass: str, window: LimitWindow,
                      solver: SolverOptions) -> LimitStructure:
    key = (id(bf.compiled), bf.p.tobytes(), klass, window, solver)
    with _CACHE_LOCK:
        hit = _STRUCTURE_CACHE.get(key)
    if hit is not None:
        return hit
    structure = limit_structure(bf, klass, window, solver)
    with _CACHE_LOCK:
        _STRUCTURE_CACHE[key] = structure
    return structure


def clear_structure_cache() -> None:
    with _CACHE_LOCK:
        _STRUCTURE_CACHE.clear()


def check_approach(scenario: TransitionScenario, horizon: float,
                   options: Optional[ClassifyOptions] = None) -> float:
    """Verify that g has reached its limits at the horizon ends.

    Returns the worst deviation max_x |g(t,x) - g_lim(t,x)| over the
    limit equation's coercivity bracket, t at the matching horizon end;
    raises ApproachToleranceError above scenario.approach_tol.
    """
    opts = options or ClassifyOptions()
    g = _as_bound(scenario.g)
    worst = 0.0
    for sign, lim, window in (
            (-1.0, _as_bound(scenario.g_minus), opts.past_window(horizon)),
            (+1.0, _as_bound(scenario.g_plus), opts.future_window(horizon))):
        m1, m2 = coercivity_bracket(lim, scenario.klass, window,
                                    opts.solver.escape_bound)
        t = sign * horizon
        for x in np.linspace(m1, m2, 33):
            dev = abs(g.value(t, float(x)) - lim.value(t, float(x)))
            worst = max(worst, dev)
    if worst > scenario.approach_tol:
        raise ApproachToleranceError(
            f"transition field still {worst:.3e} away from its limits at "
            f"|t| = {horizon:g} (approach_tol {scenario.approach_tol:.1e})")
    return worst


def _horizons(opts: ClassifyOptions):
    yield opts.horizon
    doubled = min(2.0 * opts.horizon, opts.horizon_max)
    if doubled > opts.horizon:
        yield doubled


def _tail_distance(sol: Trajectory, limit_traj: Trajectory,
                   window: LimitWindow) -> float:
    ts, xs = sol.window(window.t_lo, window.t_hi)
    return float(np.max(np.abs(xs - limit_traj.at(ts))))


def _clean(dist: float, match_tol: float) -> bool:
    return dist <= match_tol or dist >= 10.0 * match_tol


def _uniformly_negative(exc: BracketNotFound) -> bool:
    return "no bounded solutions" in str(exc)


def classify(scenario: TransitionScenario,
             options: Optional[ClassifyOptions] = None) -> Classification:
    if scenario.klass == CONCAVE:
        return classify_concave(scenario, options)
    return classify_dconcave(scenario, options)


def classify_concave(scenario: TransitionScenario,
                     options: Optional[ClassifyOptions] = None,
                     ) -> Classification:
    """Concave trichotomy: A, C, or Indeterminate (B only as a tag)."""
    if scenario.klass != CONCAVE:
        raise ValueError("classify_concave needs a concave scenario")
    opts = options or ClassifyOptions()
    g = _as_bound(scenario.g)
    g_minus = _as_bound(scenario.g_minus)
    g_plus = _as_bound(scenario.g_plus)

    warnings: list[str] = []
    last: dict = {}
    for H in _horizons(opts):
        past_win = opts.past_window(H)
        fut_win = opts.future_window(H)
        try:
            past = _cached_structure(g_minus, CONCAVE, past_win, opts.solver)
            future = _cached_structure(g_plus, CONCAVE, fut_win, opts.solver)
        except BracketNotFound as exc:
            if _uniformly_negative(exc):
                # a limit equation with no bounded solutions leaves the
                # transition equation none either
                return Classification(
                    case=CASE_C, tag="uniformly-negative-field",
                    witnesses={}, solutions={}, horizon_used=H,
                    warnings=tuple(warnings))
            raise
        check_approach(scenario, H, opts)

        a_g = integrate(g, -H, past.attractor.value, H, opts.solver)
        if a_g.status.kind == ESCAPED_DOWN:
            return Classification(
                case=CASE_C, tag="",
                witnesses={"escape_time": a_g.status.t},
                solutions={"a_g": a_g, "a_minus": past.attractor.traj},
                horizon_used=H, warnings=tuple(warnings))
        if a_g.status.kind != COMPLETED:
            raise ClassificationError(
                f"pullback solution left the domain upward at "
                f"t = {a_g.status.t:.6g} ({a_g.status.kind}): "
                "not a coercive concave transition")

        dist_a = _tail_distance(a_g, future.attractor.traj, fut_win)
        dist_r = _tail_distance(a_g, future.repeller.traj, fut_win)
        witnesses = {"dist_future_attractor": dist_a,
                     "dist_future_repeller": dist_r}
        solutions = {"a_g": a_g,
                     "a_minus": past.attractor.traj,
                     "a_plus": future.attractor.traj,
                     "r_plus": future.repeller.traj}
        mt = scenario.match_tol

        if dist_a <= mt and dist_r >= 10.0 * mt:
            r_g = integrate(g, H, float(future.repeller.at(H)), -H,
                            opts.solver)
            solutions["r_g"] = r_g
            if r_g.status.kind == COMPLETED:
                ts = a_g.ts_increasing
                lo, hi = r_g.t0, r_g.t_end
                inside = ts[(ts >= min(lo, hi)) & (ts <= max(lo, hi))]
                gap = a_g.at(inside) - r_g.at(inside)
                witnesses["min_separation"] = float(np.min(gap))
                tail = inside >= fut_win.t_lo
                witnesses["tail_separation"] = float(np.min(gap[tail]))
            else:
                warnings.append(
                    f"repeller witness escaped at t = {r_g.status.t:.6g}")
            return Classification(
                case=CASE_A, tag="", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))

        if dist_r <= mt and dist_a >= 10.0 * mt:
            return Classification(
                case=INDETERMINATE, tag="B-candidate", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))

        warnings.append(
            f"no clean tail match at horizon {H:g}: distances "
            f"{dist_a:.3e} to the attractor, {dist_r:.3e} to the repeller")
        last = {"witnesses": witnesses, "solutions": solutions,
                "horizon": H}

    return Classification(
        case=INDETERMINATE, tag="", witnesses=last["witnesses"],
        solutions=last["solutions"], horizon_used=last["horizon"],
        warnings=tuple(warnings))


def classify_dconcave(scenario: TransitionScenario,
                      options: Optional[ClassifyOptions] = None,
                      ) -> Classification:
    """D-concave five-case analysis: A, C1, C2, or Indeterminate."""
    if scenario.klass != DCONCAVE:
        raise ValueError("classify_dconcave needs a dconcave scenario")
    opts = options or ClassifyOptions()
    g = _as_bound(scenario.g)
    g_minus = _as_bound(scenario.g_minus)
    g_plus = _as_bound(scenario.g_plus)

    warnings: list[str] = []
    last: dict = {}
    for H in _horizons(opts):
        past_win = opts.past_window(H)
        fut_win = opts.future_window(H)
        past = _cached_structure(g_minus, DCONCAVE, past_win, opts.solver)
        future = _cached_structure(g_plus, DCONCAVE, fut_win, opts.solver)
        check_approach(scenario, H, opts)

        l_g = integrate(g, -H, past.lower.value, H, opts.solver)
        u_g = integrate(g, -H, past.upper.value, H, opts.solver)
        for name, sol in (("lower", l_g), ("upper", u_g)):
            if sol.status.kind != COMPLETED:
                # forward orbits of a coercive d-concave field are bounded
                raise ClassificationError(
                    f"forward {name} orbit escaped at t = "
                    f"{sol.status.t:.6g} ({sol.status.kind}): violates "
                    "d-concave coercivity")

        targets = {"lower": future.lower.traj,
                   "middle": future.middle.traj,
                   "upper": future.upper.traj}
        witnesses = {}
        for prefix, sol in (("l", l_g), ("u", u_g)):
            for tname, traj in targets.items():
                witnesses[f"{prefix}_dist_{tname}"] = _tail_distance(
                    sol, traj, fut_win)
        solutions = {"l_g": l_g, "u_g": u_g,
                     "l_minus": past.lower.traj,
                     "u_minus": past.upper.traj,
                     "l_plus": future.lower.traj,
                     "m_plus": future.middle.traj,
                     "u_plus": future.upper.traj}
        mt = scenario.match_tol

        def match(prefix: str) -> Optional[str]:
            dists = {t: witnesses[f"{prefix}_dist_{t}"] for t in targets}
            close = [t for t, d in dists.items() if d <= mt]
            far_ok = all(d >= 10.0 * mt for t, d in dists.items()
                         if t != (close[0] if close else None))
            if len(close) == 1 and far_ok:
                return close[0]
            return None

        l_match, u_match = match("l"), match("u")

        if l_match == "lower" and u_match == "upper":
            m_g = integrate(g, H, float(future.middle.at(H)), -H,
                            opts.solver)
            solutions["m_g"] = m_g
            witnesses["m_g_bounded"] = float(
                m_g.status.kind == COMPLETED)
            if m_g.status.kind != COMPLETED:
                warnings.append(
                    f"middle witness escaped backward at t = "
                    f"{m_g.status.t:.6g}")
            return Classification(
                case=CASE_A, tag="", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))
        if u_match == "lower":
            return Classification(
                case=CASE_C2, tag="", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))
        if l_match == "upper":
            return Classification(
                case=CASE_C1, tag="", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))
        if u_match == "middle":
            return Classification(
                case=INDETERMINATE, tag="B2-candidate", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))
        if l_match == "middle":
            return Classification(
                case=INDETERMINATE, tag="B1-candidate", witnesses=witnesses,
                solutions=solutions, horizon_used=H,
                warnings=tuple(warnings))

        warnings.append(
            f"no clean tail match at horizon {H:g}: lower matched "
            f"{l_match!r}, upper matched {u_match!r}")
        last = {"witnesses": witnesses, "solutions": solutions,
                "horizon": H}

    return Classification(
        case=INDETERMINATE, tag="", witnesses=last["witnesses"],
        solutions=last["solutions"], horizon_used=last["horizon"],
        warnings=tuple(warnings))
