"""Boundary location: bisection, sweeps, and two-sided tipping pairs."""

import math

import pytest

from tipcast import BisectionError, parse_field
from tipcast.bifurcate import (
    CriticalValue,
    bisect,
    candidate_brackets,
    find_tipping_pair,
    sweep,
)
from tipcast.classify import ClassifyOptions, TransitionScenario, classify

QUAD = parse_field("-x^2 + 1")
CUBIC = parse_field("-x^3 + x")

# static fold of -x^3 + x + delta: equilibria collide at +-2/(3*sqrt(3))
CRIT = 2.0 / (3.0 * math.sqrt(3.0))


def autonomous(expr: str, klass: str) -> TransitionScenario:
    f = parse_field(expr)
    return TransitionScenario(g=f, g_minus=f, g_plus=f, klass=klass)


def conc_pulse(d: float) -> TransitionScenario:
    # downward pulse on the quadratic; the plateau is long enough that
    # the measured critical depth sits within 1e-3 of the static fold
    g = parse_field(f"-x^2 + 1 - {d!r}*splinebump(t; 1, 200)")
    return TransitionScenario(g=g, g_minus=QUAD, g_plus=QUAD,
                              klass="concave")


def dc_pulse(d: float) -> TransitionScenario:
    g = parse_field(f"-x^3 + x + {d!r}*splinebump(t; 1, 200)")
    return TransitionScenario(g=g, g_minus=CUBIC, g_plus=CUBIC,
                              klass="dconcave")


CUBIC_S = "0.02*x*(1 - x^2/4)"
CUBIC_S_FIELD = parse_field(CUBIC_S)


def sandwich(v: float) -> TransitionScenario:
    # first pulse merges the forward orbits on the upper branch; the
    # second, near-fold pulse decides which branch both then land on,
    # so the tracking interval in v is far below any resolvable width
    g = parse_field(f"{CUBIC_S} + 40*splinebump(t - 3; 1, 2)"
                    f" + {v!r}*splinebump(t - 50; 1, 40)")
    return TransitionScenario(g=g, g_minus=CUBIC_S_FIELD,
                              g_plus=CUBIC_S_FIELD, klass="dconcave")


# switched scenario that classifies Indeterminate (B-candidate) at this
# horizon: the deposited orbit rides the future repeller; see the twin
# construction in the classifier tests
SWITCH = "splinestep(t; 1, 0)"
BCAND = TransitionScenario(
    g=parse_field(f"(1 - {SWITCH})*(-0.01*(x + 3)*(x + 1))"
                  f" + {SWITCH}*(-0.01*(x - 1)*(x + 1))"),
    g_minus=parse_field("-0.01*(x + 3)*(x + 1)"),
    g_plus=parse_field("-0.01*(x - 1)*(x + 1)"),
    klass="concave")
QUAD_A = autonomous("-x^2 + 1", "concave")
NEG_C = autonomous("-x^2 - 1", "concave")

SHORT = ClassifyOptions(horizon=600.0, horizon_max=600.0)


@pytest.fixture(scope="module")
def conc_critical() -> CriticalValue:
    return bisect(conc_pulse, "d", 0.0, 2.0, bisect_tol=1e-5)


@pytest.fixture(scope="module")
def cubic_pair():
    return find_tipping_pair(dc_pulse, "d", (-0.6, 0.6), bisect_tol=1e-5,
                             scan_points=17)


# ---------------------------------------------------------------------------
# CriticalValue contract
# ---------------------------------------------------------------------------

def _cv(**kw) -> CriticalValue:
    base = dict(param="d", bracket=(1.0, 1.5), case_lo="A", case_hi="C",
                width=0.5, kind="A<->C", bisect_tol=0.5, horizon=1e4)
    base.update(kw)
    return CriticalValue(**base)


def test_critical_value_reports_bracket_midpoint():
    cv = _cv()
    assert cv.value == 1.25
    assert cv.width == 0.5


def test_critical_value_rejects_identical_cases():
    with pytest.raises(BisectionError, match="distinct"):
        _cv(case_hi="A")


def test_critical_value_rejects_indeterminate_ends():
    with pytest.raises(BisectionError, match="determinate"):
        _cv(case_hi="Indeterminate")


def test_critical_value_rejects_disordered_bracket():
    with pytest.raises(BisectionError, match="order"):
        _cv(bracket=(2.0, 1.5))


def test_critical_value_rejects_wrong_width():
    with pytest.raises(BisectionError, match="width"):
        _cv(width=0.25)


# ---------------------------------------------------------------------------
# bisect
# ---------------------------------------------------------------------------

def test_pulse_depth_boundary_matches_the_static_fold(conc_critical):
    cv = conc_critical
    assert cv.kind == "A<->C"
    assert (cv.case_lo, cv.case_hi) == ("A", "C")
    assert cv.width <= 1e-5
    # finite pulse length delays the fold crossing slightly, so the
    # located depth sits just above the static value 1
    assert 0.0 < cv.value - 1.0 < 1e-3
    assert cv.warnings == ()


def test_bisect_rejects_equal_endpoint_cases():
    with pytest.raises(BisectionError, match="identically"):
        bisect(conc_pulse, "d", 0.0, 0.5, bisect_tol=1e-2)


def test_bisect_rejects_indeterminate_endpoint():
    with pytest.raises(BisectionError, match="Indeterminate"):
        bisect(lambda v: BCAND, "v", 0.0, 1.0, bisect_tol=0.1,
               options=SHORT)


def test_bisect_needs_a_tracking_endpoint():
    with pytest.raises(BisectionError, match="find_tipping_pair"):
        bisect(dc_pulse, "d", -0.5, 0.5, bisect_tol=0.1)


def test_bisect_rejects_bad_interval():
    with pytest.raises(BisectionError, match="lo < hi"):
        bisect(conc_pulse, "d", 2.0, 0.0)


def _banded(ind_lo: float, ind_hi: float):
    def family(v: float) -> TransitionScenario:
        if v < ind_lo:
            return QUAD_A
        if v <= ind_hi:
            return BCAND
        return NEG_C
    return family


def test_indeterminate_midpoints_shrink_toward_lo_with_warning():
    cv = bisect(_banded(0.25, 0.75), "v", 0.0, 1.0, bisect_tol=0.12,
                options=SHORT, verify=False)
    assert any("Indeterminate at" in w for w in cv.warnings)
    assert cv.width <= 0.12


def test_persistent_indeterminate_band_is_an_error():
    # tracking holds only at the lo endpoint itself, so every midpoint
    # lands in the band and the bracket never regains a determinate end
    def family(v: float) -> TransitionScenario:
        if v == 0.0:
            return QUAD_A
        return BCAND if v <= 0.75 else NEG_C
    with pytest.raises(BisectionError, match="persistent Indeterminate"):
        bisect(family, "v", 0.0, 1.0, bisect_tol=0.05, options=SHORT)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def shifted_quad(delta: float) -> TransitionScenario:
    return autonomous(f"-x^2 + 1 + {delta!r}", "concave")


def test_sweep_reports_cases_in_grid_order():
    points = sweep(shifted_quad, "delta", [-2.0, 0.0])
    assert [r.case for _, r in points] == ["C", "A"]
    assert candidate_brackets(points) == [(-2.0, 0.0, "C", "A")]


def test_sweep_parallel_matches_serial():
    serial = sweep(shifted_quad, "delta", [-2.0, 0.0])
    threaded = sweep(shifted_quad, "delta", [-2.0, 0.0], jobs=2)
    assert [r.case for _, r in serial] == [r.case for _, r in threaded]


def test_sweep_carries_indeterminate_entries():
    family = _banded(0.5, 2.0)
    points = sweep(family, "v", [0.0, 1.0], options=SHORT)
    assert points[0][1].case == "A"
    assert points[1][1].case == "Indeterminate"
    assert candidate_brackets(points) == []


# ---------------------------------------------------------------------------
# find_tipping_pair
# ---------------------------------------------------------------------------

def test_tipping_pair_brackets_both_fold_values(cubic_pair):
    pair = cubic_pair
    assert pair.status == "pair"
    assert pair.lower.kind == "A<->C2"
    assert pair.upper.kind == "A<->C1"
    assert abs(pair.lower.value + CRIT) < 1e-3
    assert abs(pair.upper.value - CRIT) < 1e-3
    assert pair.lower.width <= 1e-5
    assert pair.upper.width <= 1e-5
    assert len(pair.samples) == 17


def test_tipping_pair_single_sided_when_tracking_touches_the_range():
    pair = find_tipping_pair(dc_pulse, "d", (0.0, 0.6), bisect_tol=1e-4,
                             scan_points=9)
    assert pair.status == "single-sided"
    assert pair.lower is None
    assert pair.upper is not None
    assert abs(pair.upper.value - CRIT) < 1e-3


def test_tipping_pair_none_found_reports_uniform_case():
    pair = find_tipping_pair(dc_pulse, "d", (0.0, 0.2), bisect_tol=1e-3,
                             scan_points=5)
    assert pair.status == "none-found"
    assert pair.uniform_case == "A"
    assert pair.lower is None and pair.upper is None


def test_unresolvable_tracking_interval_gives_fused_certificate():
    pair = find_tipping_pair(sandwich, "v", (-0.06, -0.005),
                             bisect_tol=1e-6, scan_points=9)
    assert pair.status == "fused"
    assert pair.lower is pair.upper
    cv = pair.lower
    assert cv.kind == "C2<->A<->C1-pair"
    assert {cv.case_lo, cv.case_hi} == {"C1", "C2"}
    assert cv.width <= 1e-6
    assert any("narrower than bisect_tol" in w for w in pair.warnings)


def test_tipping_pair_rejects_indeterminate_scan_endpoints():
    with pytest.raises(BisectionError, match="Indeterminate"):
        find_tipping_pair(lambda v: BCAND, "v", (0.0, 1.0),
                          scan_points=3, options=SHORT)
