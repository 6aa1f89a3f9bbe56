"""Critical parameter location: sweeps, bisection, two-sided tipping pairs.

A family is any callable value -> TransitionScenario. Bisection separates
Case A (tracking) from a tipping case along one parameter axis and returns
the final bracket, never a bare point: the reported value is the bracket
midpoint and the bracket width is at most the requested tolerance.

D-concave families can tip on both sides (lower boundary to C2, upper to
C1). find_tipping_pair scans for the tracking interval and bisects both
edges. When the scan shows adjacent C2 and C1 samples but no tracking
sample can be resolved inside the gap, the crossing is certified as a
single fused bracket instead: the saddle-node picture guarantees the
A-interval sits inside, but its width can be far below any usable
parameter resolution (the forward orbits may coalesce to integration
noise during the transition, leaving nothing for a grid to hit).
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .classify import (
    CASE_A,
    CASE_C1,
    CASE_C2,
    Classification,
    ClassifyOptions,
    TransitionScenario,
    classify,
)
from .errors import BisectionError

__all__ = [
    "CriticalValue",
    "TippingPair",
    "bisect",
    "sweep",
    "candidate_brackets",
    "find_tipping_pair",
]

Family = Callable[[float], TransitionScenario]

_KINDS = {
    frozenset(("A", "C")): "A<->C",
    frozenset(("A", "C1")): "A<->C1",
    frozenset(("A", "C2")): "A<->C2",
    frozenset(("C1", "C2")): "C2<->A<->C1-pair",
}


def _kind(case_a: str, case_b: str) -> str:
    kind = _KINDS.get(frozenset((case_a, case_b)))
    if kind is None:
        raise BisectionError(
            f"no boundary kind for case pair ({case_a}, {case_b})")
    return kind


@dataclass(frozen=True)
class CriticalValue:
    """A located boundary: bracket, the cases at its ends, and its kind."""

    param: str
    bracket: tuple[float, float]
    case_lo: str
    case_hi: str
    width: float
    kind: str
    bisect_tol: float
    horizon: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not lo <= hi:
            raise BisectionError("bracket endpoints out of order")
        if self.case_lo == self.case_hi:
            raise BisectionError("bracket ends must carry distinct cases")
        if "Indeterminate" in (self.case_lo, self.case_hi):
            raise BisectionError("bracket ends must be determinate")
        if abs(self.width - (hi - lo)) > 1e-15 * max(1.0, abs(hi)):
            raise BisectionError("width does not match the bracket")

    @property
    def value(self) -> float:
        return 0.5 * (self.bracket[0] + self.bracket[1])


@dataclass(frozen=True)
class TippingPair:
    """Outcome of a two-sided boundary search.

    status is one of pair, fused, single-sided, none-found. For a fused
    crossing both lower and upper point at the same bracket. samples
    records the scan grid as (value, case label) pairs.
    """

    status: str
    lower: Optional[CriticalValue]
    upper: Optional[CriticalValue]
    uniform_case: Optional[str] = None
    samples: tuple[tuple[float, str], ...] = ()
    warnings: tuple[str, ...] = ()


def _retry_options(options: ClassifyOptions) -> Optional[ClassifyOptions]:
    doubled = min(2.0 * options.horizon, options.horizon_max)
    if doubled <= options.horizon:
        return None
    return dataclasses.replace(options, horizon=doubled)


def _classify_mid(family: Family, value: float,
                  options: ClassifyOptions) -> Classification:
    res = classify(family(value), options)
    if res.determinate:
        return res
    retry = _retry_options(options)
    if retry is not None:
        res = classify(family(value), retry)
    return res


def _tighter(options: ClassifyOptions) -> ClassifyOptions:
    solver = dataclasses.replace(options.solver,
                                 abs_tol=0.1 * options.solver.abs_tol,
                                 rel_tol=0.1 * options.solver.rel_tol)
    return dataclasses.replace(options, solver=solver)


def _verify_bracket(family: Family, param: str, lo: float, hi: float,
                    case_lo: str, case_hi: str,
                    options: ClassifyOptions) -> None:
    """Re-classify the bracket ends at 10x tighter integrator tolerance."""
    tight = _tighter(options)
    for value, expect, side in ((lo, case_lo, "lo"), (hi, case_hi, "hi")):
        res = classify(family(value), tight)
        if res.case != expect:
            raise BisectionError(
                f"bracket failed verification: {param} = {value!r} "
                f"classified {expect} at working tolerance but {res.case} "
                f"at 10x tighter tolerance ({side} end)")


def bisect(family: Family, param: str, lo: float, hi: float,
           bisect_tol: float = 1e-7,
           options: Optional[ClassifyOptions] = None,
           verify: bool = True) -> CriticalValue:
    """Locate the boundary of the tracking region on [lo, hi].

    Exactly one endpoint must classify as Case A; the bisection predicate
    is membership in Case A. An Indeterminate midpoint is retried at a
    doubled horizon; if it stays Indeterminate the bracket shrinks toward
    the lo side and the band is reported in the warnings.
    """
    if not lo < hi:
        raise BisectionError("need lo < hi")
    opts = options or ClassifyOptions()
    res_lo = classify(family(lo), opts)
    res_hi = classify(family(hi), opts)
    for value, res in ((lo, res_lo), (hi, res_hi)):
        if not res.determinate:
            raise BisectionError(
                f"endpoint {param} = {value!r} is Indeterminate")
    if res_lo.case == res_hi.case:
        raise BisectionError(
            f"endpoints classify identically ({res_lo.case}): no boundary "
            f"bracketed on [{lo!r}, {hi!r}]")
    if CASE_A not in (res_lo.case, res_hi.case):
        raise BisectionError(
            f"no Case A endpoint (got {res_lo.case}, {res_hi.case}): "
            "use find_tipping_pair for two-sided transitions")

    case_lo, case_hi = res_lo.case, res_hi.case
    a_on_lo = case_lo == CASE_A
    warnings: list[str] = []
    first_indet: Optional[float] = None
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        res = _classify_mid(family, mid, opts)
        if not res.determinate:
            tag = f" ({res.tag})" if res.tag else ""
            warnings.append(
                f"Indeterminate at {param} = {mid!r}{tag}: "
                "shrinking toward the lo side")
            if first_indet is None:
                first_indet = mid
            hi = mid
            continue
        first_indet = None
        if (res.case == CASE_A) == a_on_lo:
            lo, case_lo = mid, res.case
        else:
            hi, case_hi = mid, res.case
    if first_indet is not None and (first_indet - lo) > bisect_tol:
        raise BisectionError(
            f"persistent Indeterminate band on [{lo!r}, {first_indet!r}] "
            f"wider than bisect_tol {bisect_tol:g}")

    if verify:
        _verify_bracket(family, param, lo, hi, case_lo, case_hi, opts)
    return CriticalValue(
        param=param, bracket=(lo, hi), case_lo=case_lo, case_hi=case_hi,
        width=hi - lo, kind=_kind(case_lo, case_hi), bisect_tol=bisect_tol,
        horizon=opts.horizon, warnings=tuple(warnings))


def sweep(family: Family, param: str, grid: Sequence[float],
          options: Optional[ClassifyOptions] = None,
          jobs: Optional[int] = None,
          ) -> list[tuple[float, Classification]]:
    """Classify the family at every grid value, preserving grid order."""
    opts = options or ClassifyOptions()
    values = [float(v) for v in grid]
    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda v: classify(family(v), opts), values))
    else:
        results = [classify(family(v), opts) for v in values]
    return list(zip(values, results))


def candidate_brackets(points: Sequence[tuple[float, Classification]],
                       ) -> list[tuple[float, float, str, str]]:
    """Adjacent grid pairs whose determinate cases differ."""
    out = []
    for (v1, r1), (v2, r2) in zip(points, points[1:]):
        if r1.determinate and r2.determinate and r1.case != r2.case:
            out.append((v1, v2, r1.case, r2.case))
    return out


def _first_block(flags: Sequence[bool]) -> Optional[tuple[int, int]]:
    """First contiguous run of True, as (start, stop) with stop exclusive."""
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            return start, i
    if start is not None:
        return start, len(flags)
    return None


def _steer_candidate(tag: str, case_lo: str, case_hi: str) -> Optional[str]:
    # a B2 candidate sits on the C2 edge of the tracking interval, a B1
    # candidate on the C1 edge; steer the matching side of the gap to it
    side_case = CASE_C2 if tag == "B2-candidate" else (
        CASE_C1 if tag == "B1-candidate" else None)
    if side_case == case_lo:
        return "lo"
    if side_case == case_hi:
        return "hi"
    return None


def find_tipping_pair(family: Family, param: str,
                      scan_range: tuple[float, float],
                      bisect_tol: float = 1e-7,
                      options: Optional[ClassifyOptions] = None,
                      scan_points: int = 65,
                      jobs: Optional[int] = None) -> TippingPair:
    """Locate both edges of the tracking interval of a d-concave family.

    Scans scan_range on a uniform grid, then bisects the edges of the
    first tracking block. Without a tracking sample, an adjacent C2|C1
    pair still certifies a crossing: the gap is refined by midpoint
    subdivision until either a tracking sample appears (full pair) or the
    gap falls under bisect_tol (fused certificate).
    """
    lo, hi = float(scan_range[0]), float(scan_range[1])
    if not lo < hi:
        raise BisectionError("need an increasing scan range")
    opts = options or ClassifyOptions()
    grid = np.linspace(lo, hi, scan_points)
    points = sweep(family, param, grid, opts, jobs=jobs)
    for value, res in (points[0], points[-1]):
        if not res.determinate:
            raise BisectionError(
                f"scan range endpoint {param} = {value!r} is Indeterminate")
    samples = tuple((v, r.case if not r.tag else f"{r.case}:{r.tag}")
                    for v, r in points)
    warnings: list[str] = []

    flags = [r.case == CASE_A for _, r in points]
    block = _first_block(flags)
    if block is not None:
        start, stop = block
        if any(flags[stop:]):
            warnings.append(
                "multiple tracking blocks in the scan; using the first")
        lower = upper = None
        if start > 0:
            left = start - 1
            while left >= 0 and not points[left][1].determinate:
                left -= 1
            if left >= 0:
                lower = bisect(family, param, points[left][0],
                               points[start][0], bisect_tol, opts)
        if stop < len(points):
            right = stop
            while right < len(points) and not points[right][1].determinate:
                right += 1
            if right < len(points):
                upper = bisect(family, param, points[stop - 1][0],
                               points[right][0], bisect_tol, opts)
        if lower is not None and upper is not None:
            return TippingPair("pair", lower, upper, samples=samples,
                               warnings=tuple(warnings))
        if lower is None and upper is None:
            # tracking fills the scan: no boundary inside the range
            return TippingPair("none-found", None, None,
                               uniform_case=CASE_A, samples=samples,
                               warnings=tuple(warnings))
        return TippingPair("single-sided", lower, upper, samples=samples,
                           warnings=tuple(warnings))

    gaps = candidate_brackets(points)
    if not gaps:
        determinate = {r.case for _, r in points if r.determinate}
        uniform = determinate.pop() if len(determinate) == 1 else None
        if uniform is None and determinate:
            warnings.append(
                "scan mixes non-adjacent cases; no bracket available")
        return TippingPair("none-found", None, None, uniform_case=uniform,
                           samples=samples, warnings=tuple(warnings))

    gap_lo, gap_hi, case_lo, case_hi = gaps[0]
    if len(gaps) > 1:
        warnings.append("multiple case changes in the scan; using the first")
    while gap_hi - gap_lo > bisect_tol:
        mid = 0.5 * (gap_lo + gap_hi)
        res = _classify_mid(family, mid, opts)
        if res.case == CASE_A:
            lower = bisect(family, param, gap_lo, mid, bisect_tol, opts)
            upper = bisect(family, param, mid, gap_hi, bisect_tol, opts)
            return TippingPair("pair", lower, upper, samples=samples,
                               warnings=tuple(warnings))
        if res.case == case_lo:
            gap_lo = mid
        elif res.case == case_hi:
            gap_hi = mid
        elif not res.determinate:
            side = _steer_candidate(res.tag, case_lo, case_hi)
            if side is None:
                warnings.append(
                    f"Indeterminate at {param} = {mid!r}: "
                    "shrinking toward the lo side")
                side = "lo"
            if side == "lo":
                gap_lo = mid
            else:
                gap_hi = mid
        else:
            raise BisectionError(
                f"unexpected case {res.case} at {param} = {mid!r} inside a "
                f"({case_lo}, {case_hi}) gap")

    _verify_bracket(family, param, gap_lo, gap_hi, case_lo, case_hi, opts)
    fused = CriticalValue(
        param=param, bracket=(gap_lo, gap_hi), case_lo=case_lo,
        case_hi=case_hi, width=gap_hi - gap_lo,
        kind=_kind(case_lo, case_hi), bisect_tol=bisect_tol,
        horizon=opts.horizon, warnings=tuple(warnings))
    warnings.append(
        "no tracking sample resolvable inside the crossing: the tracking "
        "interval is narrower than bisect_tol")
    return TippingPair("fused", fused, fused, samples=samples,
                       warnings=tuple(warnings))
