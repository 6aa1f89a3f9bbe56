"""Command-line front end: classify, bisect, sweep, trace, limits, repro.

Output files are deterministic: numbers are serialized with 17
significant digits, rows follow grid order, and no timestamps are
written, so identical configs produce byte-identical files. Every CSV
has a JSON sibling with the same stem.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

from .bifurcate import CriticalValue, bisect, candidate_brackets, sweep
from .classify import Classification, classify
from .config import (
    OutputSpec,
    RunConfig,
    apply_overrides,
    load_config,
    parse_config,
)
from .errors import ConfigError, TipcastError
from .limits import limit_structure
from .scenarios import CATALOG, build

FAST_BISECT_TOL = 1e-4
FAST_HORIZON = 2e3


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _json_path(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + ".json"


def _write_json(path: str, record: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: Sequence[str],
               rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _emit(output: Optional[OutputSpec], record: dict,
          header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Write one result record; CSV output gets a JSON sibling."""
    if output is None:
        return
    if output.format == "json":
        _write_json(output.path, record)
        return
    _write_csv(output.path, header, rows)
    _write_json(_json_path(output.path), record)


def _print_warnings(warnings: Sequence[str]) -> None:
    for w in warnings:
        print(f"warning: {w}")


def _classification_record(scn, res: Classification) -> dict:
    return {
        "schema": 1,
        "command": "classify",
        "scenario": scn.name,
        "params": dict(scn.params),
        "case": res.case,
        "tag": res.tag,
        "horizon_used": res.horizon_used,
        "witnesses": dict(res.witnesses),
        "warnings": list(res.warnings),
    }


def cmd_classify(cfg: RunConfig, args) -> int:
    scn = cfg.scenario_instance()
    res = classify(scn, cfg.classify_options())
    print(f"scenario: {scn.name}")
    if scn.params:
        joined = " ".join(f"{k}={_fmt(float(v))}"
                          for k, v in sorted(scn.params.items()))
        print(f"params: {joined}")
    print(f"case: {res.case}" + (f" ({res.tag})" if res.tag else ""))
    print(f"horizon: {_fmt(res.horizon_used)}")
    for key in sorted(res.witnesses):
        print(f"witness {key} = {_fmt(res.witnesses[key])}")
    _print_warnings(res.warnings)
    header = ["scenario", "case", "tag", "horizon_used"]
    row = [scn.name, res.case, res.tag, res.horizon_used]
    for key in sorted(res.witnesses):
        header.append(key)
        row.append(res.witnesses[key])
    _emit(cfg.output, _classification_record(scn, res), header, [row])
    return 0 if res.determinate else 2


def _critical_record(command: str, cv: CriticalValue) -> dict:
    return {
        "schema": 1,
        "command": command,
        "param": cv.param,
        "value": cv.value,
        "bracket": [cv.bracket[0], cv.bracket[1]],
        "case_lo": cv.case_lo,
        "case_hi": cv.case_hi,
        "width": cv.width,
        "kind": cv.kind,
        "bisect_tol": cv.bisect_tol,
        "horizon": cv.horizon,
        "warnings": list(cv.warnings),
    }


_BISECT_HEADER = ["param", "lo", "hi", "mid", "case_lo", "case_hi",
                  "horizon", "bisect_tol", "abs_tol", "rel_tol"]


def _bisect_row(cfg: RunConfig, cv: CriticalValue) -> list:
    return [cv.param, cv.bracket[0], cv.bracket[1], cv.value,
            cv.case_lo, cv.case_hi, cv.horizon, cv.bisect_tol,
            cfg.solver["abs_tol"], cfg.solver["rel_tol"]]


def cmd_bisect(cfg: RunConfig, args) -> int:
    spec = cfg.bisect
    if spec is None:
        raise ConfigError("bisect: missing config block")
    family = cfg.family(spec.param)
    cv = bisect(family, spec.param, spec.lo, spec.hi,
                bisect_tol=spec.tol, options=cfg.classify_options())
    print(f"param: {cv.param}")
    print(f"value: {_fmt(cv.value)}")
    print(f"bracket: [{_fmt(cv.bracket[0])}, {_fmt(cv.bracket[1])}]")
    print(f"cases: {cv.case_lo} -> {cv.case_hi}")
    print(f"kind: {cv.kind}")
    print(f"width: {_fmt(cv.width)}")
    _print_warnings(cv.warnings)
    _emit(cfg.output, _critical_record("bisect", cv), _BISECT_HEADER,
          [_bisect_row(cfg, cv)])
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    spec = cfg.sweep
    if spec is None:
        raise ConfigError("sweep: missing config block")
    family = cfg.family(spec.param)
    points = sweep(family, spec.param, spec.grid,
                   options=cfg.classify_options(), jobs=args.jobs)
    rows = []
    for value, res in points:
        label = res.case + (f":{res.tag}" if res.tag else "")
        print(f"{spec.param}={_fmt(value)} -> {label}")
        rows.append([value, res.case, res.tag, res.horizon_used])
    brackets = candidate_brackets(points)
    for lo, hi, case_lo, case_hi in brackets:
        print(f"change in [{_fmt(lo)}, {_fmt(hi)}]: "
              f"{case_lo} -> {case_hi}")
    record = {
        "schema": 1,
        "command": "sweep",
        "param": spec.param,
        "points": [{"value": v, "case": r.case, "tag": r.tag,
                    "horizon_used": r.horizon_used}
                   for v, r in points],
        "brackets": [{"lo": lo, "hi": hi, "case_lo": a, "case_hi": b}
                     for lo, hi, a, b in brackets],
    }
    _emit(cfg.output, record,
          ["value", "case", "tag", "horizon_used"], rows)
    return 0 if all(r.determinate for _, r in points) else 2


def cmd_trace(cfg: RunConfig, args) -> int:
    if cfg.output is None:
        raise ConfigError("output.path: trace needs an output directory")
    scn = cfg.scenario_instance()
    opts = cfg.classify_options()
    res = classify(scn, opts)
    span = cfg.trace
    t_lo = span.t_lo if span else -opts.horizon
    t_hi = span.t_hi if span else opts.horizon
    outdir = cfg.output.path
    os.makedirs(outdir, exist_ok=True)

    stride = cfg.solver["sample_stride"]

    def snap(t: float) -> float:
        # canonicalize lattice points so files join on equal t values;
        # forward and backward runs carry different float dust
        on_lattice = stride * round(t / stride)
        return on_lattice if abs(on_lattice - t) < 1e-9 else t

    special = {k: v for k, v in res.solutions.items() if k.endswith("_g")}
    limits = {k: v for k, v in res.solutions.items()
              if not k.endswith("_g")}
    files = {}
    for key in sorted(special):
        ts, xs = special[key].window(t_lo, t_hi)
        name = f"{key}.csv"
        _write_csv(os.path.join(outdir, name), ["t", "x"],
                   [(snap(t), x) for t, x in zip(ts.tolist(), xs.tolist())])
        files[key] = name
        print(f"wrote {name} ({len(ts)} rows)")
    # limit solutions live on their certification windows near the
    # horizons; they are emitted unclipped
    rows = []
    for key in sorted(limits):
        traj = limits[key]
        rows.extend([key, snap(t), x]
                    for t, x in zip(traj.ts_increasing.tolist(),
                                    traj.xs_increasing.tolist()))
    _write_csv(os.path.join(outdir, "limits.csv"),
               ["solution", "t", "x"], rows)
    files["limits"] = "limits.csv"
    print(f"wrote limits.csv ({len(rows)} rows)")

    manifest = {
        "schema": 1,
        "command": "trace",
        "scenario": scn.name,
        "case": res.case,
        "tag": res.tag,
        "t_lo": t_lo,
        "t_hi": t_hi,
        "files": files,
    }
    _write_json(os.path.join(outdir, "manifest.json"), manifest)
    print("wrote manifest.json")
    return 0 if res.determinate else 2


def _structure_rows(side: str, structure) -> list:
    if structure.klass == "concave":
        named = [("repeller", structure.repeller),
                 ("attractor", structure.attractor)]
    else:
        named = [("lower", structure.lower), ("middle", structure.middle),
                 ("upper", structure.upper)]
    return [[side, role, est.value, est.exponent, est.stability]
            for role, est in named]


def cmd_limits(cfg: RunConfig, args) -> int:
    scn = cfg.scenario_instance()
    opts = cfg.classify_options()
    past = limit_structure(scn.g_minus, scn.klass,
                           opts.past_window(opts.horizon), opts.solver)
    future = limit_structure(scn.g_plus, scn.klass,
                             opts.future_window(opts.horizon), opts.solver)
    rows = _structure_rows("past", past) + _structure_rows("future", future)
    for side, role, value, exponent, stability in rows:
        print(f"{side} {role}: value={_fmt(value)} "
              f"exponent={_fmt(exponent)} {stability}")
    record = {
        "schema": 1,
        "command": "limits",
        "scenario": scn.name,
        "solutions": [{"side": side, "role": role, "value": value,
                       "exponent": exponent, "stability": stability}
                      for side, role, value, exponent, stability in rows],
    }
    _emit(cfg.output, record,
          ["side", "role", "value", "exponent", "stability"], rows)
    return 0


# repro grids: (L, p) phase/duration grid for the predation pair,
# (L, c) duration/density grid for the stocked range
_PRED_GRID = [(L, p) for L in (1.0, 5.0, 10.0, 15.0, 20.0)
              for p in (0.0, 2.0, 5.0)]
_LIVE_GRID = [(L, c) for L in (2.0, 10.0, 20.0, 30.0, 40.0)
              for c in (0.01, 0.02, 0.03)]


def _repro_tables(fast: bool) -> list[dict]:
    pred_tol = FAST_BISECT_TOL if fast else 1e-7
    live_tol = FAST_BISECT_TOL if fast else 1e-10
    return [
        {"stem": "predation", "scenario": "concave_pred",
         "grid": _PRED_GRID, "keys": ("L", "p"), "lo": 0.0, "hi": 50.0,
         "tol": pred_tol},
        {"stem": "predation_migration",
         "scenario": "concave_pred_migration",
         "grid": _PRED_GRID, "keys": ("L", "p"), "lo": 0.0, "hi": 50.0,
         "tol": pred_tol},
        {"stem": "livestock", "scenario": "dconcave_livestock",
         "grid": _LIVE_GRID, "keys": ("L", "c"), "lo": 0.0, "hi": 20.0,
         "tol": live_tol},
    ]


def _repro_cell(table: dict, cell: tuple[float, float],
                options) -> CriticalValue:
    key1, key2 = table["keys"]
    params = {key1: cell[0], key2: cell[1]}
    if table["scenario"] in ("concave_pred", "concave_pred_migration"):
        params["rho"] = 1.0

    def family(d: float):
        return build(table["scenario"], {**params, "d": d})

    return bisect(family, "d", table["lo"], table["hi"],
                  bisect_tol=table["tol"], options=options)


def cmd_repro(cfg: RunConfig, args) -> int:
    outdir = cfg.output.path if cfg.output else "repro"
    os.makedirs(outdir, exist_ok=True)
    options = cfg.classify_options()
    jobs = max(1, args.jobs)
    written = []
    for table in _repro_tables(args.fast):
        cells = table["grid"]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_repro_cell, table, cell, options)
                           for cell in cells]
                results = [f.result() for f in futures]
        else:
            results = [_repro_cell(table, cell, options)
                       for cell in cells]
        key1, key2 = table["keys"]
        header = [key1, key2, "d_lo", "d_hi", "d", "case_lo", "case_hi",
                  "horizon", "bisect_tol"]
        rows = [[cell[0], cell[1], cv.bracket[0], cv.bracket[1], cv.value,
                 cv.case_lo, cv.case_hi, cv.horizon, cv.bisect_tol]
                for cell, cv in zip(cells, results)]
        path = os.path.join(outdir, table["stem"] + ".csv")
        _write_csv(path, header, rows)
        record = {
            "schema": 1,
            "command": "repro",
            "table": table["stem"],
            "scenario": table["scenario"],
            "rows": [{key1: cell[0], key2: cell[1],
                      "d": cv.value, "d_lo": cv.bracket[0],
                      "d_hi": cv.bracket[1], "case_lo": cv.case_lo,
                      "case_hi": cv.case_hi, "horizon": cv.horizon,
                      "bisect_tol": cv.bisect_tol}
                     for cell, cv in zip(cells, results)],
        }
        _write_json(_json_path(path), record)
        written.append(path)
        print(f"wrote {path}")
    return 0


_COMMANDS: dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "classify": cmd_classify,
    "bisect": cmd_bisect,
    "sweep": cmd_sweep,
    "trace": cmd_trace,
    "limits": cmd_limits,
    "repro": cmd_repro,
}

_HELP = {
    "classify": "case analysis of one scenario",
    "bisect": "locate a critical parameter value between two cases",
    "sweep": "classify along a parameter grid and list case changes",
    "trace": "write special-solution and limit trajectories as CSV",
    "limits": "hyperbolic solutions of the past and future equations",
    "repro": "regenerate the built-in bifurcation tables",
}


def _catalog_epilog() -> str:
    lines = ["built-in scenarios:"]
    for name in sorted(CATALOG):
        entry = CATALOG[name]
        lines.append(f"  {name}({entry.signature()})")
        lines.append(f"      {entry.summary}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tipcast",
        description="classify global dynamics of transition equations "
                    "between concave or d-concave limits and locate "
                    "tipping points",
        epilog=_catalog_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{" + ",".join(_COMMANDS) + "}")
    for name, handler in _COMMANDS.items():
        sp = sub.add_parser(
            name, help=_HELP[name], epilog=_catalog_epilog(),
            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", default=None, metavar="FILE",
                        help="JSON run configuration"
                             + (" (optional)" if name == "repro" else ""))
        sp.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override a config entry by dotted path")
        sp.add_argument("--jobs", type=int, default=1,
                        help="worker threads for sweep and repro")
        sp.add_argument("--fast", action="store_true",
                        help=f"coarse mode: horizon {_fmt(FAST_HORIZON)}, "
                             f"bisect tol {_fmt(FAST_BISECT_TOL)}")
    return parser


def _apply_fast(doc: dict) -> dict:
    solver = doc.setdefault("solver", {})
    solver["horizon"] = FAST_HORIZON
    solver["horizon_max"] = 2.0 * FAST_HORIZON
    if "bisect" in doc:
        doc["bisect"]["tol"] = FAST_BISECT_TOL
    return doc


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            if args.command != "repro":
                raise ConfigError("--config is required for this command")
            doc = {"schema": 1}
        else:
            doc = load_config(args.config)
        doc = apply_overrides(doc, args.overrides)
        if args.fast:
            doc = _apply_fast(doc)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = parse_config(doc)
        return _COMMANDS[args.command](cfg, args)
    except TipcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
