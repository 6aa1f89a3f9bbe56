"""Parser, evaluator and hyper-dual derivative tests."""

import math

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from tipcast import (
    DomainError,
    ParseError,
    UnboundParameterError,
    parse,
    parse_field,
)
from tipcast.expr import HyperDual


# ---------------------------------------------------------------------------
# parsing and evaluation
# ---------------------------------------------------------------------------

def test_arithmetic_precedence():
    cases = {
        "2 + 3*4": 14.0,
        "2*3^2": 18.0,
        "-2^2": -4.0,
        "2 - 3 - 4": -5.0,
        "12/3/2": 2.0,
        "(2 + 3)*4": 20.0,
        "2^-2": 0.25,
        "5/2": 2.5,
    }
    for text, want in cases.items():
        f = parse_field(text)
        assert f.eval(0.0, 0.0) == pytest.approx(want), text


def test_variables_and_params():
    f = parse_field("a*t + b*x", a=2.0, b=3.0)
    assert f.eval(5.0, 7.0) == pytest.approx(31.0)
    assert f.free_params == frozenset()
    g = parse_field("a*t + b*x", a=2.0)
    assert g.free_params == {"b"}
    with pytest.raises(UnboundParameterError):
        g.eval(1.0, 1.0)
    h = g.bind(b=3.0)
    assert h.eval(5.0, 7.0) == pytest.approx(31.0)
    assert g.free_params == {"b"}  # bind does not mutate


def test_functions():
    f = parse_field("sin(t) + cos(t)^2 + exp(x) + sqrt(t) + arctan(x) + tan(x)")
    t, x = 2.0, 0.5
    want = (math.sin(t) + math.cos(t) ** 2 + math.exp(x) + math.sqrt(t)
            + math.atan(x) + math.tan(x))
    assert f.eval(t, x) == pytest.approx(want, rel=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        parse_field("sqrt(x)").eval(0.0, -1.0)
    with pytest.raises(DomainError):
        parse_field("1/x").eval(0.0, 0.0)
    with pytest.raises(DomainError):
        parse_field("x^-1").eval(0.0, 0.0)


def test_parse_error_offsets():
    with pytest.raises(ParseError) as ei:
        parse("x + * 2")
    assert ei.value.offset == 4
    with pytest.raises(ParseError) as ei:
        parse("x ^ 2.5")
    assert ei.value.offset == 4
    with pytest.raises(ParseError) as ei:
        parse("sin(t")
    with pytest.raises(ParseError):
        parse("")
    with pytest.raises(ParseError):
        parse("   ")
    with pytest.raises(ParseError):
        parse("x x")  # trailing input
    with pytest.raises(ParseError):
        parse("x^2^3")  # chained exponent is not accepted


def test_integer_exponent_required():
    for bad in ("x^2.0", "x^(2)", "x^t", "x^a", "x^1e3"):
        with pytest.raises(ParseError):
            parse(bad)


def test_primitive_argument_constraints():
    parse("splinebump(t - p; rho, L)")
    parse("impulseseries(t; 1, 10, 40, 0.3, d)")
    parse("impulseseries(t; 1, 10, 40, 0.3, d, 4)")
    parse("impulsetrain(t; 1, 10, 40, 0.3)")
    parse("shepherd(t, x; rho, L, c)")
    parse("shepherd(t, x*2 - 1; rho, L, c)")
    bad = [
        "splinebump(x; 1, 5)",         # time slot depends on x
        "splinebump(t; x, 5)",         # shape depends on x
        "splinebump(t; t, 5)",         # shape depends on t
        "shepherd(x, x; 1, 5, 1)",     # first slot depends on x
        "splinebump(t; 1)",            # wrong shape arity
        "splinebump(t, t; 1, 5)",      # wrong main arity
        "impulseseries(t; 1, 10, 40, 0.3)",
        "impulseseries(t; 1, 10, 40, 0.3, d, 4, 9)",
        "impulsetrain(x; 1, 10, 40, 0.3)",
        "impulsetrain(t; 1, 10, 40)",
        "shepherd(t; 1, 5, 1)",
        "splinestep(t)",               # missing shape args
    ]
    for text in bad:
        with pytest.raises(ParseError):
            parse(text)


def test_unknown_names():
    with pytest.raises(ParseError):
        parse("foo(x)")
    with pytest.raises(ParseError):
        parse("sinh(x)")


def test_primitive_evaluation_matches_kernels():
    from tipcast import transitions as tr
    f = parse_field("splinebump(t - p; 1, 5)", p=2.0)
    assert f.eval(3.0, 0.0) == tr.bump_val(1.0, 1.0, 5.0)
    assert f.eval(7.5, 0.0) == tr.bump_val(5.5, 1.0, 5.0)
    g = parse_field("splinestep(t; 1, 5)")
    assert g.eval(-5.5, 0.0) == tr.step_val(-5.5, 1.0, 5.0)
    h = parse_field("impulseseries(t; 1, 10, 40, 0.3, d)", d=50.0)
    assert h.eval(1.0, 0.0) == pytest.approx(50.3)
    w = parse_field("impulsetrain(t; 1, 10, 40, 0.3)")
    series = tr.ImpulseSeries()
    for u in (0.0, 40.0, -40.0, 25.0, 11.8, 1234.5):
        assert w.eval(u, 0.0) == tr.future_periodic_series(u, series)
    assert w.eval(0.0, 0.0) == 0.3
    assert w.eval(25.0, 0.0) == 0.0
    s = parse_field("shepherd(t, x; 1, 5, 0.1)")
    assert s.eval(2.0, 3.0) == tr.shepherd_triple(2.0, 3.0, 1.0, 5.0, 0.1)[0]


# ---------------------------------------------------------------------------
# pretty printing
# ---------------------------------------------------------------------------

ROUND_TRIP = [
    "-x^3 + x + d",
    "r*x*(1 - x/K) + phi - d*splinebump(t - p; rho, L)*x^2/(b + x^2)",
    "a - (b - c)",
    "a/(b*c)",
    "(a + b)^2",
    "-(a*b)",
    "x^-2",
    "impulseseries(t; 1, 10, 40, 0.3, d, 4)",
    "impulsetrain(t; 1, 10, 40, 0.3)",
    "shepherd(t, x; rho, L, c)",
    "sin(sqrt(5)*t)",
]


@pytest.mark.parametrize("text", ROUND_TRIP)
def test_pretty_round_trip(text):
    e = parse(text)
    assert parse(e.pretty()).ast == e.ast


@given(st.integers(-9, 9), st.integers(-9, 9), st.integers(-9, 9),
       st.integers(1, 5))
def test_polynomial_eval_matches_horner(a, b, c, n):
    f = parse_field(f"{a}*x^{n} + {b}*x + {c}")
    for x in (-2.0, -0.5, 0.0, 1.0, 3.0):
        assert f.eval(0.0, x) == pytest.approx(a * x**n + b * x + c)


# ---------------------------------------------------------------------------
# hyper-dual derivatives, with a symbolic oracle
# ---------------------------------------------------------------------------

DERIV_CASES = [
    "-x^3 + x",
    "x^2/(20 + x^2)",
    "sin(x)*cos(x)",
    "exp(-x^2)",
    "arctan(5*x)",
    "tan(x/4)",
    "sqrt(x^2 + 1)",
    "x*(1 - x/90)*(x - 20)/90",
    "1/(x + 3)^2",
    "t*x - t^2*x^3 + sin(t)",
]


@pytest.mark.parametrize("text", DERIV_CASES)
def test_derivatives_match_sympy(text):
    xs = sympy.Symbol("x")
    ts = sympy.Symbol("t")
    sym = sympy.sympify(text.replace("arctan", "atan").replace("^", "**"),
                        locals={"x": xs, "t": ts})
    d1 = sympy.diff(sym, xs)
    d2 = sympy.diff(sym, xs, 2)
    f = parse_field(text)
    for t in (0.0, 1.3):
        for x in (-1.7, -0.2, 0.4, 2.9):
            subs = {xs: x, ts: t}
            assert f.eval(t, x) == pytest.approx(float(sym.subs(subs)),
                                                 rel=1e-12, abs=1e-12)
            assert f.eval_dx(t, x) == pytest.approx(float(d1.subs(subs)),
                                                    rel=1e-10, abs=1e-10)
            assert f.eval_dxx(t, x) == pytest.approx(float(d2.subs(subs)),
                                                     rel=1e-9, abs=1e-9)


def test_shepherd_derivatives_through_field():
    from tipcast import transitions as tr
    f = parse_field("d*shepherd(t, x; 1, 5, 0.1)*x^2/(20 + x^2)", d=2.0)
    t, x = 20.0, 8.0
    h = 1e-5
    fd1 = (f.eval(t, x + h) - f.eval(t, x - h)) / (2 * h)
    fd2 = (f.eval(t, x + h) - 2 * f.eval(t, x) + f.eval(t, x - h)) / h**2
    assert f.eval_dx(t, x) == pytest.approx(fd1, rel=1e-6, abs=1e-6)
    assert f.eval_dxx(t, x) == pytest.approx(fd2, rel=1e-4, abs=1e-4)
    # the x-dependence seen by the time slot of other primitives is rejected,
    # so only shepherd contributes derivative terms through its second slot
    g = parse_field("splinebump(t; 1, 5)*x")
    assert g.eval_dx(0.0, 3.0) == 1.0
    assert g.eval_dxx(0.0, 3.0) == 0.0


dual_floats = st.floats(min_value=-10.0, max_value=10.0,
                        allow_nan=False, allow_infinity=False)


@given(a=dual_floats, b=dual_floats, c=dual_floats, d=dual_floats)
def test_hyperdual_product_rule(a, b, c, d):
    u = HyperDual(a, b, 1.0)
    v = HyperDual(c, d, 0.5)
    w = u * v
    assert w.v == pytest.approx(a * c)
    assert w.d1 == pytest.approx(a * d + b * c)
    assert w.d2 == pytest.approx(a * 0.5 + 2 * b * d + 1.0 * c)


@given(a=dual_floats, b=dual_floats)
def test_hyperdual_div_inverts_mul(a, b):
    u = HyperDual(a, b, 0.25)
    v = HyperDual(3.0, -2.0, 1.5)
    w = (u * v) / v
    assert w.v == pytest.approx(u.v, abs=1e-9)
    assert w.d1 == pytest.approx(u.d1, abs=1e-9)
    assert w.d2 == pytest.approx(u.d2, abs=1e-9)


def test_hyperdual_seed_convention():
    # seeding (x, 1, 0) makes d1/d2 the first/second derivatives in x
    x = HyperDual(2.0, 1.0, 0.0)
    y = x * x * x
    assert (y.v, y.d1, y.d2) == (8.0, 12.0, 12.0)
