"""Hyperbolic solutions of limit equations.

Attractors are computed by pullback: two seeds are integrated forward
from t - W and must land on the same trajectory (gap over the sampling
window at most conv_tol), else W doubles up to w_max. Repellers use the
same scheme backward in time (pushback). The returned estimate carries
the certified gap and a finite-horizon Lyapunov exponent along the
sample, whose sign must match the construction.

Seed defaults come from a sign scan of the field over the window: for a
coercive field the far field has a definite sign (negative above all
bounded solutions, and negative below for the concave class, positive
below for the d-concave class), which brackets the region [m1, m2]
containing every bounded solution. Attractor seeds sit just outside
that region on the attracting side; the d-concave middle repeller is
seeded strictly between the two outer attractors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .codegen import BoundField
from .errors import (
    BracketNotFound,
    NoConvergence,
    NonHyperbolicLimit,
    SeedEscaped,
    SeparationFailure,
    WrongStabilitySign,
)
from .expr import ScalarField
from .integrate import (
    COMPLETED,
    SolverOptions,
    Status,
    Trajectory,
    _as_bound,
    integrate,
    lyapunov_along,
)

CONCAVE = "concave"
DCONCAVE = "dconcave"

ATTRACTIVE = "attractive"
REPULSIVE = "repulsive"

_N_SCAN_TIMES = 16


@dataclass(frozen=True)
class LimitWindow:
    """Sampling window plus the pullback convergence protocol."""

    t_lo: float
    t_hi: float
    w0: float = 50.0
    w_max: float = 2e3
    conv_tol: float = 1e-9
    exponent_floor: float = 1e-3
    sep_tol: float = 1e-4

    def __post_init__(self) -> None:
        if not self.t_hi > self.t_lo:
            raise ValueError("window needs t_hi > t_lo")
        if self.w0 <= 0.0 or self.w_max < self.w0:
            raise ValueError("need 0 < w0 <= w_max")
        if self.conv_tol <= 0.0:
            raise ValueError("conv_tol must be positive")

    def spans(self):
        w = self.w0
        while True:
            yield w
            if w >= self.w_max:
                return
            w = min(2.0 * w, self.w_max)


@dataclass(frozen=True)
class HyperbolicEstimate:
    """A certified sample of one hyperbolic solution on a window."""

    traj: Trajectory
    exponent: float
    stability: str
    converged: float
    hyperbolic: bool
    span_used: float

    def at(self, t) -> np.ndarray:
        return self.traj.at(t)

    @property
    def values(self) -> np.ndarray:
        return self.traj.xs_increasing

    @property
    def times(self) -> np.ndarray:
        return self.traj.ts_increasing

    @property
    def value(self) -> float:
        """Sample at the delivery time.

        Attractors are delivered at the late end of the window (pullback
        runs forward into it), repellers at the early end (pushback runs
        backward into it).
        """
        if self.stability == ATTRACTIVE:
            return float(self.traj.xs_increasing[-1])
        return float(self.traj.xs_increasing[0])


@dataclass(frozen=True)
class LimitStructure:
    """All hyperbolic solutions of one limit equation, bottom to top."""

    klass: str
    estimates: tuple[HyperbolicEstimate, ...]

    def __post_init__(self) -> None:
        want = 2 if self.klass == CONCAVE else 3
        if len(self.estimates) != want:
            raise ValueError(
                f"{self.klass} structure needs {want} solutions, "
                f"got {len(self.estimates)}")

    # concave accessors
    @property
    def repeller(self) -> HyperbolicEstimate:
        return self.estimates[0]

    @property
    def attractor(self) -> HyperbolicEstimate:
        return self.estimates[-1]

    # d-concave accessors
    @property
    def lower(self) -> HyperbolicEstimate:
        return self.estimates[0]

    @property
    def middle(self) -> HyperbolicEstimate:
        return self.estimates[1]

    @property
    def upper(self) -> HyperbolicEstimate:
        return self.estimates[-1]


def _scan_extremes(bf: BoundField, times: np.ndarray,
                   xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min and max of g over the sample times, per grid level."""
    lo = np.full(xs.shape, np.inf)
    hi = np.full(xs.shape, -np.inf)
    for t in times:
        for i in range(xs.shape[0]):
            v = bf.value_fn(float(t), float(xs[i]), bf.p)
            if v < lo[i]:
                lo[i] = v
            if v > hi[i]:
                hi[i] = v
    return lo, hi


def _grids(window: LimitWindow, x_max: float) -> tuple[np.ndarray, np.ndarray]:
    times = np.linspace(window.t_lo, window.t_hi, _N_SCAN_TIMES)
    xs = np.linspace(-x_max, x_max, 2001)
    return times, xs


def upper_level(fieldlike: Union[ScalarField, BoundField],
                window: LimitWindow, x_max: float = 1e3) -> float:
    """Level above which the field is negative at every sampled time.

    Independent of the concavity class, so usable to seed the topmost
    attractor of any coercive field.
    """
    bf = _as_bound(fieldlike)
    times, xs = _grids(window, x_max)
    _, g_hi = _scan_extremes(bf, times, xs)
    neg = g_hi < 0.0
    i = len(xs)
    while i > 0 and neg[i - 1]:
        i -= 1
    if i == len(xs):
        raise BracketNotFound(
            f"field not negative above x = {x_max}: no upper coercivity")
    return float(xs[i])


def coercivity_bracket(fieldlike: Union[ScalarField, BoundField], klass: str,
                       window: LimitWindow,
                       x_max: float = 1e3) -> tuple[float, float]:
    """Levels m1 <= m2 that contain every bounded solution.

    Above m2 the field is negative at every sampled time. Below m1 it is
    negative (concave class: solutions diverge down) or positive
    (d-concave class: solutions are pushed back up).
    """
    bf = _as_bound(fieldlike)
    times, xs = _grids(window, x_max)
    g_lo, g_hi = _scan_extremes(bf, times, xs)

    neg = g_hi < 0.0
    pos = g_lo > 0.0

    # m2: start of the uniformly negative tail
    i = len(xs)
    while i > 0 and neg[i - 1]:
        i -= 1
    if i == len(xs):
        raise BracketNotFound(
            f"field not negative above x = {x_max}: no upper coercivity")
    m2 = float(xs[i])

    if klass == CONCAVE:
        j = -1
        while j + 1 < len(xs) and neg[j + 1]:
            j += 1
        if j < 0:
            raise BracketNotFound(
                f"field not negative below x = {-x_max}: no lower coercivity")
        m1 = float(xs[j])
        if m1 >= m2 or not np.any(pos[j:i + 1] if i >= j else pos):
            raise BracketNotFound(
                "field negative at every sampled level: no bounded solutions")
    else:
        j = -1
        while j + 1 < len(xs) and pos[j + 1]:
            j += 1
        if j < 0:
            raise BracketNotFound(
                f"field not positive below x = {-x_max}: no lower coercivity")
        m1 = float(xs[j])
        if m1 > m2:
            raise BracketNotFound("sign bands overlap: no interior structure")
    return m1, m2


def _window_gap(a: Trajectory, b: Trajectory, window: LimitWindow) -> float:
    ts, xs = a.window(window.t_lo, window.t_hi)
    return float(np.max(np.abs(xs - b.at(ts))))


def _midpoint_sample(a: Trajectory, b: Trajectory,
                     window: LimitWindow) -> Trajectory:
    ts, xa = a.window(window.t_lo, window.t_hi)
    xm = 0.5 * (xa + b.at(ts))
    status = Status(COMPLETED, float(ts[-1]), float(xm[-1]))
    return Trajectory(ts=ts, xs=xm, direction=1, status=status)


def _estimate(fieldlike, window: LimitWindow, stability: str,
              seed_fn: Callable[[float, float], tuple[float, float]],
              options: SolverOptions) -> HyperbolicEstimate:
    """Shared pullback/pushback driver.

    seed_fn(w, t_start) supplies the two seed values for span w;
    integration runs from t_start toward the far end of the window.
    """
    bf = _as_bound(fieldlike)
    backward = stability == REPULSIVE
    gap = math.inf
    scale = 1.0
    for w in window.spans():
        t_start = window.t_hi + w if backward else window.t_lo - w
        t_stop = window.t_lo if backward else window.t_hi
        x0, x1 = seed_fn(w, t_start)
        tr0 = integrate(bf, t_start, x0, t_stop, options)
        tr1 = integrate(bf, t_start, x1, t_stop, options)
        if not tr0.status.completed or not tr1.status.completed:
            bad = tr0 if not tr0.status.completed else tr1
            raise SeedEscaped(
                f"seed orbit left the integration domain at t = "
                f"{bad.status.t:.6g} ({bad.status.kind}); seeds "
                f"({x0:.6g}, {x1:.6g}) from t = {t_start:.6g}")
        gap = _window_gap(tr0, tr1, window)
        # large-amplitude solutions carry an integration-noise floor
        # proportional to their size, so the certificate is relative
        # above amplitude 1 and absolute below
        _, xs = tr0.window(window.t_lo, window.t_hi)
        scale = max(1.0, float(np.max(np.abs(xs))))
        if gap <= window.conv_tol * scale:
            sample = _midpoint_sample(tr0, tr1, window)
            exponent = lyapunov_along(bf, sample)
            return HyperbolicEstimate(
                traj=sample,
                exponent=exponent,
                stability=stability,
                converged=gap,
                hyperbolic=abs(exponent) > window.exponent_floor,
                span_used=w,
            )
    raise NoConvergence(
        f"seed gap {gap:.3e} above conv_tol {window.conv_tol:.1e} "
        f"(amplitude scale {scale:.3g}) after span {window.w_max:g}",
        final_gap=gap)


def pullback_attractor(fieldlike: Union[ScalarField, BoundField],
                       t_eval: float, window: Optional[LimitWindow] = None,
                       seeds: Optional[tuple[float, float]] = None,
                       options: Optional[SolverOptions] = None,
                       ) -> HyperbolicEstimate:
    """Attracting solution sampled on the window ending at t_eval."""
    window = window or LimitWindow(t_eval - 10.0, t_eval)
    opts = options or SolverOptions()
    bf = _as_bound(fieldlike)
    if seeds is None:
        # topmost attractor, approached from above
        m2 = upper_level(bf, window, opts.escape_bound)
        seeds = (m2, m2 + 1.0)
    return _estimate(bf, window, ATTRACTIVE, lambda w, t: seeds, opts)


def pushback_repeller(fieldlike: Union[ScalarField, BoundField],
                      t_eval: float, window: Optional[LimitWindow] = None,
                      seeds: Optional[tuple[float, float]] = None,
                      options: Optional[SolverOptions] = None,
                      ) -> HyperbolicEstimate:
    """Repelling solution sampled on the window, computed backward."""
    window = window or LimitWindow(t_eval, t_eval + 10.0)
    opts = options or SolverOptions()
    bf = _as_bound(fieldlike)
    if seeds is None:
        # concave-class bottom repeller, approached from below
        m1, _ = coercivity_bracket(bf, CONCAVE, window, opts.escape_bound)
        seeds = (m1 - 1.0, m1)
    return _estimate(bf, window, REPULSIVE, lambda w, t: seeds, opts)


def _middle_seed_fn(bf: BoundField, window: LimitWindow,
                    lower: HyperbolicEstimate, upper: HyperbolicEstimate,
                    options: SolverOptions) -> Callable:
    """Interior seeds for the middle repeller.

    The outer attractor samples end at t_hi; to seed a backward run from
    t_hi + w the samples are extended forward (forward integration stays
    on an attracting solution), and the seeds are placed at 40% and 60%
    of the gap, strictly inside the backward basin of the middle
    solution.
    """
    def seed_fn(w: float, t_start: float) -> tuple[float, float]:
        lo = integrate(bf, window.t_hi, lower.value, t_start, options)
        hi = integrate(bf, window.t_hi, upper.value, t_start, options)
        if not lo.status.completed or not hi.status.completed:
            raise SeedEscaped("attractor extension left the domain")
        span = hi.x_end - lo.x_end
        return lo.x_end + 0.4 * span, lo.x_end + 0.6 * span

    return seed_fn


def limit_structure(fieldlike: Union[ScalarField, BoundField], klass: str,
                    window: LimitWindow,
                    options: Optional[SolverOptions] = None) -> LimitStructure:
    """All hyperbolic solutions of a limit equation, with sign and
    separation checks. This is the numerical verification that a limit
    equation carries the full structure the case analysis relies on."""
    if klass not in (CONCAVE, DCONCAVE):
        raise ValueError(f"unknown class {klass!r}")
    opts = options or SolverOptions()
    bf = _as_bound(fieldlike)
    m1, m2 = coercivity_bracket(bf, klass, window, opts.escape_bound)

    upper = _estimate(bf, window, ATTRACTIVE,
                      lambda w, t: (m2, m2 + 1.0), opts)
    if klass == CONCAVE:
        lower = _estimate(bf, window, REPULSIVE,
                          lambda w, t: (m1 - 1.0, m1), opts)
        estimates = (lower, upper)
    else:
        lower = _estimate(bf, window, ATTRACTIVE,
                          lambda w, t: (m1 - 1.0, m1), opts)
        middle = _estimate(bf, window, REPULSIVE,
                           _middle_seed_fn(bf, window, lower, upper, opts),
                           opts)
        estimates = (lower, middle, upper)

    expected = {CONCAVE: (REPULSIVE, ATTRACTIVE),
                DCONCAVE: (ATTRACTIVE, REPULSIVE, ATTRACTIVE)}[klass]
    for est, want in zip(estimates, expected):
        ok = est.exponent < 0 if want == ATTRACTIVE else est.exponent > 0
        if not ok:
            raise WrongStabilitySign(
                f"{want} solution near {est.value:.6g} has exponent "
                f"{est.exponent:.3e}")
        if not est.hyperbolic:
            raise NonHyperbolicLimit(
                f"exponent {est.exponent:.3e} within the floor "
                f"{window.exponent_floor:.1e}: solution near "
                f"{est.value:.6g} not resolved as hyperbolic")

    ts = estimates[0].times
    for below, above in zip(estimates, estimates[1:]):
        gap = np.min(above.at(ts) - below.at(ts))
        if gap < window.sep_tol:
            raise SeparationFailure(
                f"solutions separated by {gap:.3e} < sep_tol "
                f"{window.sep_tol:.1e}")
    return LimitStructure(klass=klass, estimates=estimates)


def concavity_spot_check(fieldlike: Union[ScalarField, BoundField],
                         klass: str, window: LimitWindow,
                         bracket: tuple[float, float],
                         n_x: int = 33) -> None:
    """Sampled sanity check of the standing concavity hypothesis.

    Concave class: g_xx <= 0 on the window x bracket. D-concave class:
    g_xx nonincreasing in x. Violations raise ValueError; passing says
    nothing outside the sampled grid.
    """
    bf = _as_bound(fieldlike)
    times = np.linspace(window.t_lo, window.t_hi, _N_SCAN_TIMES)
    xs = np.linspace(bracket[0], bracket[1], n_x)
    tol = 1e-9
    for t in times:
        prev = None
        for x in xs:
            _, _, gxx = bf.triple(float(t), float(x))
            if klass == CONCAVE and gxx > tol:
                raise ValueError(
                    f"g_xx = {gxx:.3e} > 0 at (t, x) = ({t:.6g}, {x:.6g})")
            if klass == DCONCAVE and prev is not None and gxx > prev + tol:
                raise ValueError(
                    f"g_xx increases in x at (t, x) = ({t:.6g}, {x:.6g})")
            prev = gxx
