"""Built-in transition scenarios and user-defined ones from config.

Every catalog entry keeps its coefficients as bound parameters of a fixed
expression string, so repeated builds share one compiled structure and the
classifier's limit cache stays warm across parameter sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from .classify import TransitionScenario
from .errors import ConfigError, ScenarioError
from .expr import parse_field

__all__ = [
    "CATALOG",
    "CatalogEntry",
    "build",
    "from_config",
    "harvest_threshold",
]

_SQ2 = repr(math.sqrt(2.0))
_SQ3 = repr(math.sqrt(3.0))
_SQ5 = repr(math.sqrt(5.0))
SQRT10 = math.sqrt(10.0)
_PI = repr(math.pi)

# logistic growth with a standing harvest slot; gamma stays a bound
# parameter so the safety margin of the harvest is scriptable
_LOGISTIC = f"(1 + 0.2*sin(t)^2)*x*(1 - x/(90 + 20*sin({_SQ5}*t)))"
_PRED_CORE = f"{_LOGISTIC} + gamma"
_PRED_BITE = "x^2/(20 + cos(t) + x^2)"
STANDING_HARVEST = -5.0

# bistable stock dynamics: growth above the survival threshold S(t),
# collapse below it
_DC_K = f"(70 + 20*cos({_SQ5}*t))"
_DC_CORE = (f"(0.7 + 0.3*sin(t)^2)*x*(1 - x/{_DC_K})"
            f"*(x - (20 + 30*cos({_SQ3}*t)^2))/{_DC_K}")


def _positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise ScenarioError(f"{name} must be positive, got {value!r}")


def _nonneg(name: str, value: float) -> None:
    if not value >= 0.0:
        raise ScenarioError(f"{name} must be nonnegative, got {value!r}")


def concave_pred(d: float, rho: float, L: float, p: float,
                 ) -> TransitionScenario:
    """Harvested logistic growth under a transient predation pulse.

    The pulse has plateau 2L, ramps of width rho, and is centred at p;
    its depth scales with d. Past and future equations coincide.
    """
    _nonneg("d", d)
    _positive("rho", rho)
    _nonneg("L", L)
    g = parse_field(
        f"{_PRED_CORE} - d*splinebump(t - p; rho, L)*{_PRED_BITE}",
        d=d, rho=rho, L=L, p=p, gamma=STANDING_HARVEST)
    lim = parse_field(_PRED_CORE, gamma=STANDING_HARVEST)
    return TransitionScenario(g=g, g_minus=lim, g_plus=lim,
                              klass="concave",
                              params={"d": d, "rho": rho, "L": L, "p": p},
                              name="concave_pred")


def concave_pred_migration(d: float, rho: float, L: float, p: float,
                           ) -> TransitionScenario:
    """Predation pulse combined with a permanent worsening of the harvest.

    The harvest rate steps from -5 to -9 - cos t on the same ramp the
    predators arrive on, so past and future equations differ.
    """
    _nonneg("d", d)
    _positive("rho", rho)
    _nonneg("L", L)
    g = parse_field(
        f"{_PRED_CORE} + (-4 - cos(t))*splinestep(t - p; rho, L)"
        f" - d*splinebump(t - p; rho, L)*{_PRED_BITE}",
        d=d, rho=rho, L=L, p=p, gamma=STANDING_HARVEST)
    past = parse_field(_PRED_CORE, gamma=STANDING_HARVEST)
    future = parse_field(f"{_LOGISTIC} - 9 - cos(t)")
    return TransitionScenario(g=g, g_minus=past, g_plus=future,
                              klass="concave",
                              params={"d": d, "rho": rho, "L": L, "p": p},
                              name="concave_pred_migration")


def dconcave_series(d: float, rho: float = 1.0, L1: float = 10.0,
                    L2: float = 40.0, d_plus: float = 0.3,
                    ) -> TransitionScenario:
    """Seasonal predator visits whose intensity decays to a periodic regime.

    Visit n has plateau 2*L1 around a centre near (n-1)*L2 and amplitude
    d_plus + d/((n-1)/20 + 1)^2, so the future equation is periodic with
    amplitude d_plus while the head of the series scales with d.

    The series approaches its periodic limit like 1/t^2, far slower than
    the compactly supported scenarios, hence the loose approach and match
    tolerances.
    """
    _nonneg("d", d)
    _positive("rho", rho)
    _nonneg("L1", L1)
    _positive("L2", L2)
    _nonneg("d_plus", d_plus)
    bindings = dict(d=d, rho=rho, L1=L1, L2=L2, d_plus=d_plus)
    g = parse_field(
        f"{_DC_CORE} - impulseseries(t; rho, L1, L2, d_plus, d)"
        f"*x^2/(200 + x^2)", **bindings)
    past = parse_field(_DC_CORE)
    future = parse_field(
        f"{_DC_CORE} - impulsetrain(t; rho, L1, L2, d_plus)"
        f"*x^2/(200 + x^2)",
        rho=rho, L1=L1, L2=L2, d_plus=d_plus)
    return TransitionScenario(g=g, g_minus=past, g_plus=future,
                              klass="dconcave",
                              params={"d": d, "rho": rho, "L1": L1,
                                      "L2": L2, "d_plus": d_plus},
                              approach_tol=5e-2, match_tol=2e-2,
                              name="dconcave_series")


def dconcave_livestock(d: float, L: float, c: float, rho: float = 1.0,
                       ) -> TransitionScenario:
    """Predation window whose duration stretches with prey density.

    The window seen by a trajectory at density x is the base pulse
    rescaled by k(x) = 1/(cx + 1) for x >= 0 (smaller herds are hunted
    longer), extended below zero so the field stays smooth.
    """
    _nonneg("d", d)
    _nonneg("L", L)
    _positive("c", c)
    _positive("rho", rho)
    g = parse_field(
        f"{_DC_CORE} - d*shepherd(t, x; rho, L, c)"
        f"*x^2/(20 + cos(t) + x^2)",
        d=d, L=L, c=c, rho=rho)
    lim = parse_field(_DC_CORE)
    return TransitionScenario(g=g, g_minus=lim, g_plus=lim,
                              klass="dconcave",
                              params={"d": d, "L": L, "c": c, "rho": rho},
                              name="dconcave_livestock")


def fig7_nonconcave(a: float) -> TransitionScenario:
    """Quasiperiodically forced cubic drifting between two shifted copies.

    The future field is the past field translated by a in x, reached
    through an arctan ramp. The ramp settles like 1/t, so the approach
    tolerance is loose.
    """
    core = f"-x^3 + sin(t) + sin({_SQ2}*t) + 2.5*x"
    corr = "(3*x^2 - 3*a*x + a^2 - 2.5)"
    g = parse_field(
        f"{core} + (arctan(5*t)/{_PI} + 0.5)*a*{corr}", a=a)
    past = parse_field(core)
    future = parse_field(f"{core} + a*{corr}", a=a)
    return TransitionScenario(g=g, g_minus=past, g_plus=future,
                              klass="dconcave", params={"a": a},
                              approach_tol=1e-2,
                              name="fig7_nonconcave")


def order_example(b: float) -> TransitionScenario:
    """Bridge between two cubics whose equilibria interleave.

    The past field has equilibria (-1, 0, 1) and the future field is its
    translate by sqrt(10), with equilibria (sqrt(10)-1, sqrt(10),
    sqrt(10)+1): the past attractor at 1 sits below the future repeller.
    The bridge hump alpha*(1 - alpha)*b lifts the field mid-transition.
    """
    ramp = f"(arctan(t)/{_PI} + 0.5)"
    shift = "(3*x^2*a - 3*x*a^2 + a^3 - a)"
    g = parse_field(
        f"-x^3 + x + {ramp}*{shift}"
        f" + {ramp}*(0.5 - arctan(t)/{_PI})*b",
        a=SQRT10, b=b)
    past = parse_field("-x^3 + x")
    future = parse_field(f"-x^3 + x + {shift}", a=SQRT10)
    return TransitionScenario(g=g, g_minus=past, g_plus=future,
                              klass="dconcave", params={"b": b},
                              approach_tol=5e-2, match_tol=2e-2,
                              name="order_example")


@dataclass(frozen=True)
class CatalogEntry:
    builder: Callable[..., TransitionScenario]
    required: tuple[str, ...]
    defaults: Mapping[str, float]
    summary: str

    @property
    def accepted(self) -> frozenset[str]:
        return frozenset(self.required) | frozenset(self.defaults)

    def signature(self) -> str:
        parts = list(self.required)
        parts += [f"{k}={v!r}" for k, v in self.defaults.items()]
        return ", ".join(parts)


CATALOG: dict[str, CatalogEntry] = {
    "concave_pred": CatalogEntry(
        concave_pred, ("d", "rho", "L", "p"), {},
        "harvested logistic growth under a transient predation pulse"),
    "concave_pred_migration": CatalogEntry(
        concave_pred_migration, ("d", "rho", "L", "p"), {},
        "predation pulse plus a permanent worsening of the harvest"),
    "dconcave_series": CatalogEntry(
        dconcave_series, ("d",),
        {"rho": 1.0, "L1": 10.0, "L2": 40.0, "d_plus": 0.3},
        "seasonal predator visits decaying to a periodic regime"),
    "dconcave_livestock": CatalogEntry(
        dconcave_livestock, ("d", "L", "c"), {"rho": 1.0},
        "predation window whose duration stretches with prey density"),
    "fig7_nonconcave": CatalogEntry(
        fig7_nonconcave, ("a",), {},
        "cubic drifting between two shifted copies of itself"),
    "order_example": CatalogEntry(
        order_example, ("b",), {},
        "bridge between cubics whose equilibria interleave"),
}


def build(name: str, params: Optional[Mapping[str, float]] = None,
          **kw: float) -> TransitionScenario:
    """Construct a catalog scenario from its free parameters."""
    entry = CATALOG.get(name)
    if entry is None:
        raise ScenarioError(
            f"unknown scenario {name!r}; available: "
            f"{', '.join(sorted(CATALOG))}")
    given = {**(params or {}), **kw}
    missing = [k for k in entry.required if k not in given]
    if missing:
        raise ScenarioError(
            f"missing parameter {missing[0]!r} for {name} "
            f"(signature: {entry.signature()})")
    extra = sorted(set(given) - entry.accepted)
    if extra:
        raise ScenarioError(
            f"unexpected parameter {extra[0]!r} for {name} "
            f"(signature: {entry.signature()})")
    bound = {k: float(v) for k, v in given.items()}
    return entry.builder(**bound)


_INLINE_KEYS = frozenset(
    ("g", "g_minus", "g_plus", "klass", "params", "approach_tol",
     "match_tol", "name"))


def from_config(document: Mapping, prefix: str = "scenario",
                ) -> TransitionScenario:
    """Build a scenario from a config mapping.

    Two shapes are accepted: {"name": ..., "params": {...}} referring to
    the catalog, or an inline definition with expression strings g,
    g_minus, g_plus plus a class tag. A class tag inconsistent with the
    actual fields is accepted here and rejected by the classifier's
    structure checks.
    """
    if not isinstance(document, Mapping):
        raise ConfigError(f"{prefix}: expected an object")
    doc = dict(document)
    params = doc.get("params", {})
    if not isinstance(params, Mapping):
        raise ConfigError(f"{prefix}.params: expected an object")
    params = {str(k): v for k, v in params.items()}
    for key, value in params.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{prefix}.params.{key}: expected a number")

    if "name" in doc and "g" not in doc:
        unknown = sorted(set(doc) - {"name", "params"})
        if unknown:
            raise ConfigError(f"{prefix}.{unknown[0]}: unknown key")
        try:
            return build(doc["name"], params)
        except ScenarioError as exc:
            raise ConfigError(f"{prefix}: {exc}") from exc

    unknown = sorted(set(doc) - _INLINE_KEYS)
    if unknown:
        raise ConfigError(f"{prefix}.{unknown[0]}: unknown key")
    fields = {}
    for key in ("g", "g_minus", "g_plus"):
        text = doc.get(key)
        if not isinstance(text, str) or not text.strip():
            raise ConfigError(f"{prefix}.{key}: missing field")
        fields[key] = parse_field(text, **params)
    klass = doc.get("klass")
    if klass not in ("concave", "dconcave"):
        raise ConfigError(
            f"{prefix}.klass: expected 'concave' or 'dconcave', "
            f"got {klass!r}")
    opt = {}
    for key in ("approach_tol", "match_tol"):
        if key in doc:
            value = doc[key]
            if not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"{prefix}.{key}: expected a positive "
                                  f"number")
            opt[key] = float(value)
    name = doc.get("name", "custom")
    if not isinstance(name, str):
        raise ConfigError(f"{prefix}.name: expected a string")
    return TransitionScenario(g=fields["g"], g_minus=fields["g_minus"],
                              g_plus=fields["g_plus"], klass=klass,
                              params=dict(params), name=name, **opt)


def harvest_threshold(lo: float = -40.0, hi: float = 0.0,
                      bisect_tol: float = 1e-2, options=None):
    """Locate the largest standing harvest the logistic core survives.

    Bisects the constant-harvest family between a surviving and a
    collapsing rate and returns the critical value record. The threshold
    is strictly below the catalog's standing harvest, which is the margin
    the predation scenarios rely on; no closed-form value exists.
    """
    from .bifurcate import bisect

    def family(gamma: float) -> TransitionScenario:
        f = parse_field(_PRED_CORE, gamma=gamma)
        return TransitionScenario(g=f, g_minus=f, g_plus=f,
                                  klass="concave",
                                  params={"gamma": gamma},
                                  name="standing-harvest")

    return bisect(family, "gamma", lo, hi, bisect_tol=bisect_tol,
                  options=options)
