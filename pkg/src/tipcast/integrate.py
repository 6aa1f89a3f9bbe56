"""Adaptive Runge-Kutta integration of scalar fields.

Single equations integrated over long windows dominate the runtime of
everything downstream, so the stepper is a hand-rolled Dormand-Prince
5(4) scalar core built to be jitted: embedded error estimate, PI step
size control, FSAL, and the standard free 4th-order interpolant for
dense output. Trajectories are sampled on the lattice t0 + k*stride
(plus the exact final point) so that samples of different runs over the
same window line up without resampling.

Integration is bidirectional: t1 < t0 integrates backward. Solutions
that leave [-escape_bound, escape_bound] are cut at the crossing and
tagged EscapedUp or EscapedDown; the crossing point is located with the
dense interpolant, not by truncating at a step endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from ._jit import maybe_njit
from .codegen import BoundField, compile_field
from .errors import DomainError
from .expr import ScalarField

# step outcomes; Status.kind uses the string names
COMPLETED = "Completed"
ESCAPED_UP = "EscapedUp"
ESCAPED_DOWN = "EscapedDown"
STEP_UNDERFLOW = "StepUnderflow"

_CODE_TO_KIND = {0: COMPLETED, 1: ESCAPED_UP, 2: ESCAPED_DOWN,
                 3: STEP_UNDERFLOW}

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_A71, _A73, _A74, _A75, _A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                                -2187.0 / 6784.0, 11.0 / 84.0)
# embedded 4th-order error weights (b5 - b4)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# dense output weights for the theta^2*(1-theta) correction term
_D1, _D3, _D4, _D5, _D6, _D7 = (-12715105075.0 / 11282082432.0,
                                87487479700.0 / 32700410799.0,
                                -10690763975.0 / 1880347072.0,
                                701980252875.0 / 199316789632.0,
                                -1453857185.0 / 822651844.0,
                                69997945.0 / 29380423.0)

_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2   # most a step may shrink per control decision
_MAX_FACTOR = 10.0  # most a step may grow


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and guards for the stepper."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    escape_bound: float = 1e3
    sample_stride: float = 0.1
    max_step: float = 1.0
    min_step: float = 0.0  # 0 means the floating-point floor 1e-13*max(1,|t|)

    def __post_init__(self) -> None:
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.escape_bound <= 0.0:
            raise ValueError("escape_bound must be positive")
        if self.sample_stride <= 0.0:
            raise ValueError("sample_stride must be positive")
        if self.max_step <= 0.0:
            raise ValueError("max_step must be positive")


@dataclass(frozen=True)
class Status:
    """Terminal state of an integration."""

    kind: str
    t: float
    x: float

    @property
    def completed(self) -> bool:
        return self.kind == COMPLETED

    @property
    def escaped(self) -> bool:
        return self.kind in (ESCAPED_UP, ESCAPED_DOWN)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution in integration order.

    ts/xs run from t0 toward t1, so backward runs hold decreasing times.
    Use ts_increasing/xs_increasing for window comparisons.
    """

    ts: np.ndarray
    xs: np.ndarray
    direction: int
    status: Status
    steps_accepted: int = 0
    steps_rejected: int = 0

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def x_end(self) -> float:
        return float(self.xs[-1])

    @property
    def ts_increasing(self) -> np.ndarray:
        return self.ts if self.direction > 0 else self.ts[::-1]

    @property
    def xs_increasing(self) -> np.ndarray:
        return self.xs if self.direction > 0 else self.xs[::-1]

    def at(self, t) -> np.ndarray:
        """Interpolate sampled values at times t."""
        return np.interp(t, self.ts_increasing, self.xs_increasing)

    def window(self, t_lo: float, t_hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Samples with t_lo <= t <= t_hi, in increasing time."""
        ts, xs = self.ts_increasing, self.xs_increasing
        i = np.searchsorted(ts, t_lo - 1e-9)
        j = np.searchsorted(ts, t_hi + 1e-9)
        return ts[i:j], xs[i:j]

    def write_csv(self, out: Union[str, IO[str]]) -> None:
        if isinstance(out, str):
            with open(out, "w") as fh:
                self.write_csv(fh)
            return
        out.write("t,x\n")
        for t, x in zip(self.ts, self.xs):
            out.write(f"{t:.17g},{x:.17g}\n")


@maybe_njit
def _dense_eval(theta: float, h: float, x_old: float, dx: float, k1: float,
                k7: float, dense5: float) -> float:
    # contd5-style nested form of the free 4th-order interpolant
    r1 = x_old
    r2 = dx
    r3 = h * k1 - dx
    r4 = dx - h * k7 - r3
    return r1 + theta * (r2 + (1.0 - theta) * (r3 + theta * (r4 + (1.0 - theta) * dense5)))


@maybe_njit
def _core(value_fn, p, t0, x0, t1, atol, rtol, bound, stride, max_step,
          min_step, out_ts, out_xs):
    """DP5(4) loop; fills out_ts/out_xs and returns
    (status_code, n_samples, n_accepted, n_rejected)."""
    direction = 1.0 if t1 >= t0 else -1.0
    dist = abs(t1 - t0)

    n = 0
    out_ts[n] = t0
    out_xs[n] = x0
    n += 1
    next_k = 1  # next lattice index to emit

    if dist == 0.0:
        return 0, n, 0, 0

    t = t0
    x = x0
    f0 = value_fn(t, x, p)

    # starting step: crude curvature probe in the spirit of Hairer's hinit
    sc = atol + rtol * abs(x)
    d0 = abs(x) / sc
    d1 = abs(f0) / sc
    if d0 < 1e-5 or d1 < 1e-5:
        h_abs = 1e-6
    else:
        h_abs = 0.01 * d0 / d1
    h_abs = min(h_abs, dist, max_step)
    x_pr = x + h_abs * direction * f0
    f_pr = value_fn(t + h_abs * direction, x_pr, p)
    d2 = abs(f_pr - f0) / (sc * h_abs)
    dmax = max(d1, d2)
    if dmax > 1e-15:
        h1 = (0.01 / dmax) ** 0.2
    else:
        h1 = max(1e-6, h_abs * 1e-3)
    h_abs = min(100.0 * h_abs, h1, dist, max_step)

    k1 = f0
    facold = 1e-4
    rejected = False
    n_acc = 0
    n_rej = 0

    while True:
        floor = min_step if min_step > 0.0 else 1e-13 * max(1.0, abs(t))
        if h_abs < floor:
            out_ts[n] = t
            out_xs[n] = x
            n += 1
            return 3, n, n_acc, n_rej
        # land exactly on t1
        if h_abs >= abs(t1 - t):
            h_abs = abs(t1 - t)
        h = direction * h_abs

        k2 = value_fn(t + _C2 * h, x + h * _A21 * k1, p)
        k3 = value_fn(t + _C3 * h, x + h * (_A31 * k1 + _A32 * k2), p)
        k4 = value_fn(t + _C4 * h, x + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), p)
        k5 = value_fn(t + _C5 * h,
                      x + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), p)
        k6 = value_fn(t + h,
                      x + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4
                               + _A65 * k5), p)
        x_new = x + h * (_A71 * k1 + _A73 * k3 + _A74 * k4 + _A75 * k5
                         + _A76 * k6)
        t_new = t + h
        k7 = value_fn(t_new, x_new, p)

        err_raw = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6
                       + _E7 * k7)
        sc = atol + rtol * max(abs(x), abs(x_new))
        err = abs(err_raw) / sc

        if not (err == err) or err > 1e308 or not (x_new == x_new):
            # NaN or overflow in the step: shrink hard and retry
            n_rej += 1
            rejected = True
            h_abs *= _MIN_FACTOR
            continue

        if err > 1.0:
            n_rej += 1
            rejected = True
            fac11 = err ** _EXPO1
            h_abs = h_abs / min(1.0 / _MIN_FACTOR, fac11 / _SAFETY)
            continue

        # accepted
        n_acc += 1
        fac11 = err ** _EXPO1
        fac = fac11 / facold ** _BETA
        fac = max(1.0 / _MAX_FACTOR, min(1.0 / _MIN_FACTOR, fac / _SAFETY))
        h_next = h_abs / fac
        if rejected:
            h_next = min(h_next, h_abs)
        rejected = False
        facold = max(err, 1e-4)

        dx = x_new - x
        dense5 = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6
                      + _D7 * k7)

        escaped = abs(x_new) > bound
        t_stop = t_new
        if escaped:
            # first dense crossing of the bound inside this step
            lo = 0.0
            hi = 1.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if abs(_dense_eval(mid, h, x, dx, k1, k7, dense5)) > bound:
                    hi = mid
                else:
                    lo = mid
            t_stop = t + hi * h

        # lattice samples inside (t, t_stop]
        while True:
            t_s = t0 + direction * next_k * stride
            if direction * (t_s - t_stop) > 1e-12 * stride:
                break
            theta = (t_s - t) / h
            if theta > 1.0:
                theta = 1.0
            out_ts[n] = t_s
            out_xs[n] = _dense_eval(theta, h, x, dx, k1, k7, dense5)
            n += 1
            next_k += 1

        if escaped:
            x_stop = _dense_eval((t_stop - t) / h, h, x, dx, k1, k7, dense5)
            out_ts[n] = t_stop
            out_xs[n] = x_stop
            n += 1
            return (1 if x_stop > 0.0 else 2), n, n_acc, n_rej

        t = t_new
        x = x_new
        k1 = k7
        if direction * (t1 - t) <= 1e-12 * stride:
            if out_ts[n - 1] != t:
                out_ts[n] = t
                out_xs[n] = x
                n += 1
            return 0, n, n_acc, n_rej
        h_abs = min(h_next, max_step)


def _as_bound(fieldlike: Union[ScalarField, BoundField]) -> BoundField:
    if isinstance(fieldlike, BoundField):
        return fieldlike
    return compile_field(fieldlike)


def integrate(fieldlike: Union[ScalarField, BoundField], t0: float, x0: float,
              t1: float, options: SolverOptions | None = None) -> Trajectory:
    """Integrate x' = g(t, x) from (t0, x0) to t = t1 (backward if t1 < t0)."""
    opts = options or SolverOptions()
    bf = _as_bound(fieldlike)
    if not math.isfinite(t0) or not math.isfinite(t1):
        raise ValueError("integration endpoints must be finite")
    if not math.isfinite(x0):
        raise ValueError(f"initial value must be finite, got {x0}")
    if abs(x0) > opts.escape_bound:
        raise ValueError(
            f"initial value {x0} already outside the escape bound "
            f"{opts.escape_bound}")
    try:
        f0 = bf.value(t0, x0)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise DomainError(f"field undefined at start: {exc}", t0, x0) from exc
    if not math.isfinite(f0):
        raise DomainError("field not finite at start", t0, x0)

    cap = int(abs(t1 - t0) / opts.sample_stride) + 4
    out_ts = np.empty(cap, dtype=np.float64)
    out_xs = np.empty(cap, dtype=np.float64)
    try:
        code, n, n_acc, n_rej = _core(
            bf.value_fn, bf.p, float(t0), float(x0), float(t1),
            opts.abs_tol, opts.rel_tol, opts.escape_bound,
            opts.sample_stride, opts.max_step, opts.min_step,
            out_ts, out_xs)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        # only reachable on the pure-python path; the jitted core sees IEEE
        # non-finites instead and reports StepUnderflow
        raise DomainError(f"field evaluation failed: {exc}", t0, x0) from exc
    ts = out_ts[:n].copy()
    xs = out_xs[:n].copy()
    direction = 1 if t1 >= t0 else -1
    status = Status(_CODE_TO_KIND[code], float(ts[-1]), float(xs[-1]))
    return Trajectory(ts=ts, xs=xs, direction=direction, status=status,
                      steps_accepted=n_acc, steps_rejected=n_rej)


@maybe_njit
def _gx_trapezoid(triple_fn, p, ts, xs):
    acc = 0.0
    prev = triple_fn(ts[0], xs[0], p)[1]
    for i in range(1, ts.shape[0]):
        cur = triple_fn(ts[i], xs[i], p)[1]
        acc += 0.5 * (prev + cur) * (ts[i] - ts[i - 1])
        prev = cur
    return acc


def lyapunov_along(fieldlike: Union[ScalarField, BoundField],
                   traj: Trajectory) -> float:
    """Average of g_x along a sampled solution: its finite-time exponent."""
    bf = _as_bound(fieldlike)
    ts = traj.ts_increasing
    xs = traj.xs_increasing
    if len(ts) < 2:
        raise ValueError("trajectory too short for an exponent")
    span = float(ts[-1] - ts[0])
    return float(_gx_trapezoid(bf.triple_fn, bf.p, ts, xs)) / span
