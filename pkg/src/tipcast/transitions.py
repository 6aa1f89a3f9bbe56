"""Transition-function primitives.

Four primitives drive every built-in scenario:

* a compactly supported C1 plateau bump (value 1 on [-L, L], 0 outside
  [-L-rho, L+rho], cubic ramps),
* a C1 rising step (0 left of -L-rho, 1 right of -L),
* a series of disjoint bump impulses with decaying amplitudes and an
  asymptotically periodic phase rule, together with its periodic limit,
* a state-dependent "shepherd" factor bump(2*t*k(x) - L) where k extends
  1/(c*x+1) to a C2 function on the whole line.

All ramps are built from the cubic Q(y) = 2y^3 - 3y^2 + 1, the unique cubic
with Q(0)=1, Q(1)=0 and flat endpoints, so every primitive is C1 in time.
The scalar kernels at the bottom are numba-compatible; the public wrappers
validate arguments and the dataclasses carry parameter sets around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import maybe_njit

__all__ = [
    "SplineBump",
    "SplineStep",
    "ImpulseSeries",
    "ShepherdFactor",
    "splinebump",
    "splinestep",
    "impulse_series",
    "future_periodic_series",
    "shepherd",
]


# ---------------------------------------------------------------------------
# scalar kernels (numba-compatible; shared by the AD layer and the codegen)
# ---------------------------------------------------------------------------

@maybe_njit
def bump_val(u: float, rho: float, L: float) -> float:
    au = abs(u)
    if au <= L:
        return 1.0
    if au >= L + rho:
        return 0.0
    y = (au - L) / rho
    return 2.0 * y * y * y - 3.0 * y * y + 1.0


@maybe_njit
def bump_d1(u: float, rho: float, L: float) -> float:
    au = abs(u)
    if au <= L or au >= L + rho:
        return 0.0
    y = (au - L) / rho
    d = (6.0 * y * y - 6.0 * y) / rho
    return d if u > 0.0 else -d


@maybe_njit
def bump_d2(u: float, rho: float, L: float) -> float:
    au = abs(u)
    if au <= L or au >= L + rho:
        return 0.0
    y = (au - L) / rho
    return (12.0 * y - 6.0) / (rho * rho)


@maybe_njit
def step_val(u: float, rho: float, L: float) -> float:
    if u >= -L:
        return 1.0
    if u <= -L - rho:
        return 0.0
    y = -(u + L) / rho
    return 2.0 * y * y * y - 3.0 * y * y + 1.0


@maybe_njit
def step_d1(u: float, rho: float, L: float) -> float:
    if u >= -L or u <= -L - rho:
        return 0.0
    y = -(u + L) / rho
    return -(6.0 * y * y - 6.0 * y) / rho


@maybe_njit
def step_d2(u: float, rho: float, L: float) -> float:
    if u >= -L or u <= -L - rho:
        return 0.0
    y = -(u + L) / rho
    return (12.0 * y - 6.0) / (rho * rho)


@maybe_njit
def impulse_val(t: float, rho: float, L1: float, L2: float,
                d_plus: float, d: float, amp_div: float) -> float:
    # impulses sit near (n-1)*L2; the phase wobble is bounded by 1, so a
    # +-2 index window around the nearest multiple always covers t
    n0 = int(math.floor(t / L2 + 0.5)) + 1
    lo = n0 - 2
    if lo < 1:
        lo = 1
    acc = 0.0
    for n in range(lo, n0 + 3):
        sign = 1.0 if (n - 1) % 2 == 0 else -1.0
        u = t - ((n - 1) * L2 + sign / n)
        if abs(u) < L1 + rho:
            dn = d_plus + d / ((n - 1) / amp_div + 1.0) ** 2
            acc += dn * bump_val(u, rho, L1)
    return acc


@maybe_njit
def impulse_future_val(t: float, rho: float, L1: float, L2: float,
                       d_plus: float) -> float:
    u = t - L2 * math.floor(t / L2 + 0.5)
    return d_plus * bump_val(u, rho, L1)


@maybe_njit
def shepherd_k(x: float, c: float) -> float:
    if x >= 0.0:
        return 1.0 / (c * x + 1.0)
    return 1.0 - c * x + (c * x) * (c * x)


@maybe_njit
def shepherd_triple(t: float, x: float, rho: float, L: float,
                    c: float) -> tuple[float, float, float]:
    """Value and first/second x-derivatives of bump(2*t*k(x) - L)."""
    if x >= 0.0:
        den = c * x + 1.0
        k = 1.0 / den
        k1 = -c / (den * den)
        k2 = 2.0 * c * c / (den * den * den)
    else:
        k = 1.0 - c * x + (c * x) * (c * x)
        k1 = -c + 2.0 * c * c * x
        k2 = 2.0 * c * c
    w = 2.0 * t * k - L
    g1 = bump_d1(w, rho, L)
    v = bump_val(w, rho, L)
    vx = g1 * 2.0 * t * k1
    vxx = bump_d2(w, rho, L) * (2.0 * t * k1) ** 2 + g1 * 2.0 * t * k2
    return v, vx, vxx


# ---------------------------------------------------------------------------
# public wrappers
# ---------------------------------------------------------------------------

def _check_shape(rho: float, L: float) -> None:
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    if L < 0.0:
        raise ValueError(f"L must be nonnegative, got {L}")


def splinebump(t: float, rho: float, L: float) -> float:
    """Plateau bump: 1 on [-L, L], 0 outside [-L-rho, L+rho], cubic ramps."""
    _check_shape(rho, L)
    return bump_val(t, rho, L)


def splinestep(t: float, rho: float, L: float) -> float:
    """Rising C1 step: 0 for t <= -L-rho, 1 for t >= -L."""
    _check_shape(rho, L)
    return step_val(t, rho, L)


def shepherd(t: float, x: float, rho: float, L: float, c: float) -> float:
    """State-dependent bump(2*t*k(x) - L); k(x) = 1/(c*x+1) for x >= 0."""
    _check_shape(rho, L)
    if L <= 0.0:
        raise ValueError(f"L must be positive for shepherd, got {L}")
    if c <= 0.0:
        raise ValueError(f"c must be positive, got {c}")
    return shepherd_triple(t, x, rho, L, c)[0]


@dataclass(frozen=True)
class SplineBump:
    """Plateau bump with ramp width rho and plateau half-width L."""

    rho: float
    L: float

    def __post_init__(self) -> None:
        _check_shape(self.rho, self.L)

    def __call__(self, t: float) -> float:
        return bump_val(t, self.rho, self.L)

    def d1(self, t: float) -> float:
        return bump_d1(t, self.rho, self.L)

    def d2(self, t: float) -> float:
        return bump_d2(t, self.rho, self.L)


@dataclass(frozen=True)
class SplineStep:
    """Rising C1 step with ramp width rho, reaching 1 at -L."""

    rho: float
    L: float

    def __post_init__(self) -> None:
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    def __call__(self, t: float) -> float:
        return step_val(t, self.rho, self.L)

    def d1(self, t: float) -> float:
        return step_d1(t, self.rho, self.L)

    def d2(self, t: float) -> float:
        return step_d2(t, self.rho, self.L)


@dataclass(frozen=True)
class ImpulseSeries:
    """Disjoint bump impulses with decaying amplitude and phase wobble.

    Impulse n >= 1 is d_n * bump(t - p_n; rho, L1) with

        d_n = d_plus + d / ((n-1)/amp_divisor + 1)^2
        p_n = (n-1)*L2 + (-1)^(n-1)/n

    where d is the head-amplitude parameter supplied at evaluation time.
    Construction proves the supports pairwise disjoint: successive phases
    are at least L2 - 1.5 apart (worst case n=1), which must exceed the
    support width 2*(L1+rho). A numeric scan double-checks the first 1e6
    gaps.
    """

    rho: float = 1.0
    L1: float = 10.0
    L2: float = 40.0
    d_plus: float = 0.3
    amp_divisor: float = 20.0

    def __post_init__(self) -> None:
        _check_shape(self.rho, self.L1)
        if self.d_plus < 0.0:
            raise ValueError(f"d_plus must be nonnegative, got {self.d_plus}")
        if self.amp_divisor <= 0.0:
            raise ValueError(
                f"amp_divisor must be positive, got {self.amp_divisor}")
        width = 2.0 * (self.L1 + self.rho)
        if not self.L2 > width:
            raise ValueError(
                f"supports overlap: need L2 > 2*(L1+rho) = {width}, "
                f"got L2 = {self.L2}")
        if not self.L2 - 1.5 > width:
            raise ValueError(
                f"supports overlap: min phase gap L2 - 1.5 = {self.L2 - 1.5} "
                f"must exceed 2*(L1+rho) = {width}")
        n = np.arange(1, 1_000_001, dtype=np.float64)
        p = (n - 1.0) * self.L2 + (-1.0) ** (n - 1.0) / n
        if not np.all(np.diff(p) > width):
            raise ValueError("supports overlap within the first 1e6 impulses")

    def phase(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"impulse index must be >= 1, got {n}")
        return (n - 1) * self.L2 + (-1.0) ** (n - 1) / n

    def amplitude(self, n: int, d: float) -> float:
        if n < 1:
            raise ValueError(f"impulse index must be >= 1, got {n}")
        return self.d_plus + d / ((n - 1) / self.amp_divisor + 1.0) ** 2

    def __call__(self, t: float, d: float) -> float:
        return impulse_val(t, self.rho, self.L1, self.L2, self.d_plus, d,
                           self.amp_divisor)

    def future(self, t: float) -> float:
        return impulse_future_val(t, self.rho, self.L1, self.L2, self.d_plus)


@dataclass(frozen=True)
class ShepherdFactor:
    """bump(2*t*k(x) - L) with k the C2 extension of 1/(c*x+1)."""

    rho: float = 1.0
    L: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.L <= 0.0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.c <= 0.0:
            raise ValueError(f"c must be positive, got {self.c}")

    def __call__(self, t: float, x: float) -> float:
        return shepherd_triple(t, x, self.rho, self.L, self.c)[0]

    def k(self, x: float) -> float:
        return shepherd_k(x, self.c)

    def triple(self, t: float, x: float) -> tuple[float, float, float]:
        return shepherd_triple(t, x, self.rho, self.L, self.c)


def impulse_series(t: float, series: ImpulseSeries, d: float) -> float:
    """Evaluate the impulse series with head amplitude parameter d."""
    return series(t, d)


def future_periodic_series(t: float, series: ImpulseSeries) -> float:
    """L2-periodic limit series with constant amplitude d_plus."""
    return series.future(t)
