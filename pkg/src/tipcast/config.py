"""Run configuration: versioned JSON schema, defaults, dotted overrides.

A config document is a single JSON object. Unknown keys are errors at
every level, reported with their dotted path, so typos never silently
fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Sequence

from .classify import ClassifyOptions, TransitionScenario
from .errors import ConfigError, ScenarioError
from .integrate import SolverOptions
from .scenarios import CATALOG, build, from_config

__all__ = [
    "BisectSpec",
    "OutputSpec",
    "RunConfig",
    "SweepSpec",
    "TraceSpec",
    "apply_overrides",
    "load_config",
    "parse_config",
]

_SOLVER_DEFAULTS = {
    "abs_tol": 1e-12,
    "rel_tol": 1e-12,
    "escape_bound": 1e3,
    "max_step": 1.0,
    "sample_stride": 0.1,
    "horizon": 1e4,
    "conv_tol": 1e-9,
    "sep_tol": 1e-4,
}
# horizon_max defaults to 4x horizon (one doubling plus headroom)
_OPTIONAL_SOLVER = ("horizon_max", "match_tol", "approach_tol")
_WINDOW_DEFAULTS = {"w0": 50.0, "w_max": 2e3}


def _expect_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _expect_object(value: Any, path: str) -> dict:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{path}: expected an object")
    return dict(value)


def _reject_unknown(doc: Mapping, allowed: Sequence[str], path: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key")


@dataclass(frozen=True)
class BisectSpec:
    param: str
    lo: float
    hi: float
    tol: float = 1e-7


@dataclass(frozen=True)
class SweepSpec:
    param: str
    grid: tuple[float, ...]


@dataclass(frozen=True)
class TraceSpec:
    t_lo: float
    t_hi: float


@dataclass(frozen=True)
class OutputSpec:
    path: str
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    """A validated run document.

    scenario stays a raw mapping; commands resolve it lazily so repro,
    which supplies its own scenarios, can run without one.
    """

    scenario: Optional[Mapping[str, Any]]
    solver: Mapping[str, float]
    window: Mapping[str, float]
    bisect: Optional[BisectSpec]
    sweep: Optional[SweepSpec]
    trace: Optional[TraceSpec]
    output: Optional[OutputSpec]

    def classify_options(self) -> ClassifyOptions:
        s = self.solver
        horizon = s["horizon"]
        return ClassifyOptions(
            horizon=horizon,
            horizon_max=s.get("horizon_max", 4.0 * horizon),
            solver=SolverOptions(
                abs_tol=s["abs_tol"], rel_tol=s["rel_tol"],
                escape_bound=s["escape_bound"], max_step=s["max_step"],
                sample_stride=s["sample_stride"]),
            w0=self.window["w0"], w_max=self.window["w_max"],
            conv_tol=s["conv_tol"], sep_tol=s["sep_tol"])

    def _tolerance_overrides(self, scn: TransitionScenario,
                             ) -> TransitionScenario:
        changes = {k: self.solver[k] for k in ("match_tol", "approach_tol")
                   if k in self.solver}
        return dataclasses.replace(scn, **changes) if changes else scn

    def scenario_instance(self) -> TransitionScenario:
        if self.scenario is None:
            raise ConfigError("scenario: missing config block")
        return self._tolerance_overrides(from_config(self.scenario))

    def family(self, param: str) -> Callable[[float], TransitionScenario]:
        """Rebind one scenario parameter; used by bisect and sweep."""
        if self.scenario is None:
            raise ConfigError("scenario: missing config block")
        doc = dict(self.scenario)
        base = dict(doc.get("params", {}))
        if "name" in doc and "g" not in doc:
            entry = CATALOG.get(doc["name"])
            if entry is not None and param not in entry.accepted:
                raise ConfigError(
                    f"bisect/sweep parameter {param!r} is not a parameter "
                    f"of {doc['name']} (signature: {entry.signature()})")

            def rebind(value: float) -> TransitionScenario:
                try:
                    scn = build(doc["name"], {**base, param: value})
                except ScenarioError as exc:
                    raise ConfigError(f"scenario: {exc}") from exc
                return self._tolerance_overrides(scn)
        else:
            def rebind(value: float) -> TransitionScenario:
                patched = {**doc, "params": {**base, param: value}}
                return self._tolerance_overrides(from_config(patched))
        return rebind


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    return doc


def apply_overrides(doc: dict, assignments: Sequence[str]) -> dict:
    """Apply --set key=value pairs onto the raw document.

    The key is a dotted path; the value is parsed as JSON when possible
    and kept as a string otherwise. Intermediate objects are created, so
    a mistyped path surfaces later as an unknown-key error.
    """
    out = json.loads(json.dumps(doc))
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigError(
                    f"--set {key}: {part} is not an object")
            node = nxt
        node[parts[-1]] = value
    return out


def _parse_solver(doc: dict) -> tuple[dict, dict]:
    block = _expect_object(doc.get("solver", {}), "solver")
    window = dict(_WINDOW_DEFAULTS)
    if "pullback_window" in block:
        wblock = _expect_object(block.pop("pullback_window"),
                                "solver.pullback_window")
        _reject_unknown(wblock, tuple(_WINDOW_DEFAULTS),
                        "solver.pullback_window")
        for key, value in wblock.items():
            window[key] = _expect_number(
                value, f"solver.pullback_window.{key}")
    allowed = tuple(_SOLVER_DEFAULTS) + _OPTIONAL_SOLVER
    _reject_unknown(block, allowed, "solver")
    solver = dict(_SOLVER_DEFAULTS)
    for key, value in block.items():
        solver[key] = _expect_number(value, f"solver.{key}")
    return solver, window


def _parse_bisect(doc: dict) -> Optional[BisectSpec]:
    if "bisect" not in doc:
        return None
    block = _expect_object(doc["bisect"], "bisect")
    _reject_unknown(block, ("param", "lo", "hi", "tol"), "bisect")
    for key in ("param", "lo", "hi"):
        if key not in block:
            raise ConfigError(f"bisect.{key}: missing field")
    if not isinstance(block["param"], str):
        raise ConfigError("bisect.param: expected a string")
    return BisectSpec(
        param=block["param"],
        lo=_expect_number(block["lo"], "bisect.lo"),
        hi=_expect_number(block["hi"], "bisect.hi"),
        tol=_expect_number(block.get("tol", 1e-7), "bisect.tol"))


def _parse_sweep(doc: dict) -> Optional[SweepSpec]:
    if "sweep" not in doc:
        return None
    block = _expect_object(doc["sweep"], "sweep")
    _reject_unknown(block, ("param", "grid", "start", "stop", "step"),
                    "sweep")
    if not isinstance(block.get("param"), str):
        raise ConfigError("sweep.param: expected a string")
    explicit = "grid" in block
    ranged = any(k in block for k in ("start", "stop", "step"))
    if explicit == ranged:
        raise ConfigError(
            "sweep: give either grid or start/stop/step, not both")
    if explicit:
        grid = block["grid"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError("sweep.grid: expected a nonempty array")
        values = tuple(_expect_number(v, f"sweep.grid[{i}]")
                       for i, v in enumerate(grid))
    else:
        for key in ("start", "stop", "step"):
            if key not in block:
                raise ConfigError(f"sweep.{key}: missing field")
        start = _expect_number(block["start"], "sweep.start")
        stop = _expect_number(block["stop"], "sweep.stop")
        step = _expect_number(block["step"], "sweep.step")
        if step <= 0.0 or stop < start:
            raise ConfigError("sweep: need step > 0 and stop >= start")
        count = int((stop - start) / step + 1e-9) + 1
        values = tuple(start + i * step for i in range(count))
    return SweepSpec(param=block["param"], grid=values)


def _parse_trace(doc: dict) -> Optional[TraceSpec]:
    if "trace" not in doc:
        return None
    block = _expect_object(doc["trace"], "trace")
    _reject_unknown(block, ("t_lo", "t_hi"), "trace")
    for key in ("t_lo", "t_hi"):
        if key not in block:
            raise ConfigError(f"trace.{key}: missing field")
    t_lo = _expect_number(block["t_lo"], "trace.t_lo")
    t_hi = _expect_number(block["t_hi"], "trace.t_hi")
    if t_hi <= t_lo:
        raise ConfigError("trace: need t_lo < t_hi")
    return TraceSpec(t_lo=t_lo, t_hi=t_hi)


def _parse_output(doc: dict) -> Optional[OutputSpec]:
    if "output" not in doc:
        return None
    block = _expect_object(doc["output"], "output")
    _reject_unknown(block, ("path", "format"), "output")
    path = block.get("path")
    if not isinstance(path, str) or not path:
        raise ConfigError("output.path: expected a nonempty string")
    fmt = block.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(
            f"output.format: expected 'csv' or 'json', got {fmt!r}")
    return OutputSpec(path=path, format=fmt)


_TOP_KEYS = ("schema", "scenario", "solver", "bisect", "sweep", "trace",
             "output")


def parse_config(doc: dict) -> RunConfig:
    _reject_unknown(doc, _TOP_KEYS, "config")
    if doc.get("schema") != 1:
        raise ConfigError(
            f"config.schema: expected 1, got {doc.get('schema')!r}")
    scenario = doc.get("scenario")
    if scenario is not None:
        scenario = _expect_object(scenario, "scenario")
    solver, window = _parse_solver(doc)
    cfg = RunConfig(
        scenario=scenario,
        solver=solver,
        window=window,
        bisect=_parse_bisect(doc),
        sweep=_parse_sweep(doc),
        trace=_parse_trace(doc),
        output=_parse_output(doc))
    try:
        cfg.classify_options()  # validates numeric ranges eagerly
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc
    return cfg
