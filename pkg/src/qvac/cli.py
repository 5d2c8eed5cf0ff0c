"""Scenario runner.

    qvac list [--config NAME]
    qvac run CONFIG [--out DIR] [--threads N] [--allow-unconverged]

CONFIG is a TOML file, or a CSV written by a previous run (its header
carries the fully resolved configuration).  Exit status: 0 on success,
2 for configuration errors, 3 when a quantity failed to converge.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import scenarios as sc
from .quadrature import QuadratureSpec

EXIT_OK, EXIT_CONFIG, EXIT_UNCONVERGED = 0, 2, 3

TOP_KEYS = {"scenario", "method", "parameters", "sweep", "quadrature", "output"}
SWEEP_KEYS = {"variable", "grid", "start", "stop", "num", "spacing"}
QUAD_KEYS = {"rel_tol", "abs_tol", "max_subdivisions", "mc_samples", "seed"}
OUTPUT_KEYS = {"name", "plot_script", "shell_table"}
METHODS = {"auto", "exact", "asymptotic"}


class ConfigError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, col: Optional[int] = None):
        super().__init__(msg)
        self.line, self.col = line, col

    def located(self, path) -> str:
        where = f"{path}:{self.line}:{self.col}" if self.line else str(path)
        return f"{where}: {self}"


# --------------------------------------------------------------------------
# Parsing and validation
# --------------------------------------------------------------------------


def _locate(text: str, table: Optional[str], key: str) -> Tuple[Optional[int], Optional[int]]:
    """Line and column of ``key`` inside ``[table]`` (None for the root)."""
    current = None
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            if current == key and table is None:
                return n, line.index("[") + 1
            continue
        if current == table and pat.match(line):
            return n, line.index(key) + 1
    return None, None


def _fail(text, table, key, msg):
    line, col = _locate(text, table, key) if text else (None, None)
    raise ConfigError(msg, line, col)


def _check_keys(text, table, got: dict, allowed: set):
    for k in got:
        if k not in allowed:
            _fail(text, table, k, f"unknown key {k!r}" + (f" in [{table}]" if table else "")
                  + f"; allowed: {', '.join(sorted(allowed))}")


def _sweep_grid(text, sw: dict) -> List[float]:
    if "grid" in sw:
        if any(k in sw for k in ("start", "stop", "num", "spacing")):
            _fail(text, "sweep", "grid", "give either 'grid' or 'start/stop/num', not both")
        grid = sw["grid"]
        if not isinstance(grid, list) or not grid or not all(isinstance(v, (int, float)) for v in grid):
            _fail(text, "sweep", "grid", "grid must be a non-empty list of numbers")
        grid = [float(v) for v in grid]
    else:
        missing = [k for k in ("start", "stop", "num") if k not in sw]
        if missing:
            raise ConfigError(f"[sweep] needs 'grid' or start/stop/num (missing {', '.join(missing)})")
        num = sw["num"]
        if not isinstance(num, int) or num < 1:
            _fail(text, "sweep", "num", "num must be a positive integer")
        spacing = sw.get("spacing", "linear")
        if spacing == "linear":
            grid = list(np.linspace(sw["start"], sw["stop"], num))
        elif spacing == "log":
            if sw["start"] <= 0 or sw["stop"] <= 0:
                _fail(text, "sweep", "start", "log spacing needs positive start and stop")
            grid = list(np.geomspace(sw["start"], sw["stop"], num))
        else:
            _fail(text, "sweep", "spacing", "spacing must be 'linear' or 'log'")
        grid = [float(v) for v in grid]
    d = [b - a for a, b in zip(grid[:-1], grid[1:])]
    if d and not (all(x > 0 for x in d) or all(x < 0 for x in d)):
        _fail(text, "sweep", "grid" if "grid" in sw else "start", "sweep grid must be strictly monotone")
    if any(not math.isfinite(v) or v <= 0 for v in grid):
        _fail(text, "sweep", "grid" if "grid" in sw else "start", "sweep values must be positive and finite")
    return grid


def resolve(raw: dict, text: str = "") -> dict:
    """Validate a parsed config and fill every default; the result is self-contained."""
    _check_keys(text, None, raw, TOP_KEYS)
    name = raw.get("scenario")
    if name is None:
        raise ConfigError("missing required key 'scenario'")
    if name not in sc.SCENARIO_SCHEMA:
        _fail(text, None, "scenario", f"unknown scenario {name!r}; run 'qvac list'")
    method = raw.get("method", "auto")
    if method not in METHODS:
        _fail(text, None, "method", f"method must be one of {sorted(METHODS)}")

    params = sc.defaults(name)
    schema = sc.schema(name)
    given = raw.get("parameters", {})
    _check_keys(text, "parameters", given, set(schema))
    for k, v in given.items():
        d = schema[k].default
        if isinstance(d, str):
            if not isinstance(v, str):
                _fail(text, "parameters", k, f"{k} must be a string")
        elif isinstance(d, list):
            if not isinstance(v, list) or not all(isinstance(x, (int, float)) and x > 0 for x in v):
                _fail(text, "parameters", k, f"{k} must be a list of positive numbers")
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(text, "parameters", k, f"{k} must be a number")
            if schema[k].positive and not (v > 0 and math.isfinite(v)):
                _fail(text, "parameters", k, f"{k} must be positive and finite")
        params[k] = v

    sw = dict(raw.get("sweep", {}))
    _check_keys(text, "sweep", sw, SWEEP_KEYS)
    variable = sw.get("variable", sc.SWEEP_DEFAULT["variable"])
    numeric = [k for k, p in schema.items() if not isinstance(p.default, (str, list))]
    if variable != "u" and variable not in numeric:
        _fail(text, "sweep", "variable", f"cannot sweep {variable!r}; use 'u' or one of {numeric}")
    if variable == "u" and "grid" not in sw and "start" not in sw:
        grid = list(sc.SWEEP_DEFAULT["grid"])
    else:
        grid = _sweep_grid(text, sw)

    q = raw.get("quadrature", {})
    _check_keys(text, "quadrature", q, QUAD_KEYS)
    base = QuadratureSpec()
    quad = {k: q.get(k, getattr(base, k)) for k in QUAD_KEYS}
    for k, v in quad.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            _fail(text, "quadrature", k, f"{k} must be a positive number")
    for k in ("max_subdivisions", "mc_samples", "seed"):
        if not isinstance(quad[k], int):
            _fail(text, "quadrature", k, f"{k} must be an integer")

    out = raw.get("output", {})
    _check_keys(text, "output", out, OUTPUT_KEYS)
    output = {
        "name": str(out.get("name", name)),
        "plot_script": bool(out.get("plot_script", True)),
        "shell_table": bool(out.get("shell_table", name == "shell")),
    }
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", output["name"]):
        _fail(text, "output", "name", "output name may contain only letters, digits, '.', '_' and '-'")
    return {
        "scenario": name,
        "method": method,
        "parameters": params,
        "sweep": {"variable": variable, "grid": grid},
        "quadrature": quad,
        "output": output,
    }


def load_config(path: Path) -> dict:
    """Read a TOML config or the header of a CSV produced by ``run``."""
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        for line in text.splitlines():
            if line.startswith("# config = "):
                return resolve(json.loads(line[len("# config = "):]))
            if not line.startswith("#"):
                break
        raise ConfigError("CSV has no '# config = ' header line")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        raise ConfigError(str(exc).split(" (at line")[0], *(map(int, m.groups()) if m else (None, None)))
    return resolve(raw, text)


# --------------------------------------------------------------------------
# Writers
# --------------------------------------------------------------------------


def fmt(x) -> str:
    """17 significant digits; integers and flags stay integers."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.16e}"


def write_csv(path: Path, cfg: dict, columns: List[str], rows: List[tuple], extra: Dict[str, str]):
    lines = [
        f"# artifact {__version__}",
        f"# scenario = {cfg['scenario']}",
        f"# seed = {cfg['quadrature']['seed']}",
        f"# rel_tol = {fmt(cfg['quadrature']['rel_tol'])}",
    ]
    lines += [f"# {k} = {v}" for k, v in extra.items()]
    lines.append("# config = " + json.dumps(cfg, sort_keys=True, separators=(",", ":")))
    lines.append(",".join(columns))
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_plot_script(path: Path, csv_name: str, columns: List[str], title: str, logx=False, logy=False):
    """gnuplot script for the CSV (plain text; nothing is plotted here)."""
    text = "\n".join([
        f"# gnuplot script for {csv_name}",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{columns[0]}'",
        f"set ylabel '{columns[1]}'",
        "set logscale x" if logx else "unset logscale x",
        "set logscale y" if logy else "unset logscale y",
        "set terminal pngcairo size 800,600",
        f"set output '{Path(csv_name).stem}.png'",
        f"plot '{csv_name}' using 1:2 with linespoints",
        "",
    ])
    path.write_text(text)


def default_toml(name: str) -> str:
    """A complete default config for a scenario, as TOML text."""
    def lit(v):
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, list):
            return "[" + ", ".join(lit(x) for x in v) + "]"
        if isinstance(v, bool):
            return "true" if v else "false"
        return repr(v)

    q = QuadratureSpec()
    lines = [f'scenario = "{name}"', 'method = "auto"', "", "[parameters]"]
    for k, v in sc.defaults(name).items():
        lines.append(f"{k} = {lit(v)}")
    lines += ["", "[sweep]", 'variable = "u"', f"grid = {lit(sc.SWEEP_DEFAULT['grid'])}", "", "[quadrature]"]
    for k in sorted(QUAD_KEYS):
        lines.append(f"{k} = {lit(getattr(q, k))}")
    lines += ["", "[output]", f'name = "{name}"', "plot_script = true", ""]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_list(args) -> int:
    if args.config:
        if args.config not in sc.SCENARIO_SCHEMA:
            print(f"unknown scenario {args.config!r}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(default_toml(args.config))
        return EXIT_OK
    print(f"{len(sc.SCENARIO_SCHEMA)} scenarios, {len(set(sc.SCENARIO_SCHEMA.values()))} parameter schemas\n")
    for name, schema_name in sc.SCENARIO_SCHEMA.items():
        print(f"{name}  [schema: {schema_name}]")
        print(f"    {sc.DESCRIPTIONS[name]}")
        d = sc.defaults(name)
        for k, p in sc.SCHEMAS[schema_name].items():
            print(f"    {k:<20} = {d[k]!r:<24} [{p.unit}] {p.doc}")
    print("\ncommon parameters (all scenarios):")
    for k, p in sc.COMMON.items():
        print(f"    {k:<20} = {p.default!r:<24} [{p.unit}] {p.doc}")
    return EXIT_OK


def execute(cfg: dict, out_dir: Path, threads: int = 1) -> Tuple[dict, bool, List[Path]]:
    """Run a resolved config; returns (summary, converged, written files)."""
    q = cfg["quadrature"]
    quad = QuadratureSpec(rel_tol=q["rel_tol"], abs_tol=q["abs_tol"], max_subdivisions=q["max_subdivisions"],
                          mc_samples=q["mc_samples"], seed=q["seed"], threads=threads)
    name, p, method = cfg["scenario"], cfg["parameters"], cfg["method"]
    stem = cfg["output"]["name"]
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    curve = sc.run_curve(name, p, cfg["sweep"], quad, method)
    scal = sc.run_scalars(name, p, quad, method)
    ok = curve.converged and scal.converged

    csv_path = out_dir / f"{stem}.csv"
    write_csv(csv_path, cfg, curve.columns, curve.rows, {"observable": curve.columns[2]})
    written.append(csv_path)
    if cfg["output"]["plot_script"]:
        gp = out_dir / f"{stem}.gp"
        write_plot_script(gp, csv_path.name, curve.columns, f"{name}: reduced value vs {curve.columns[0]}")
        written.append(gp)
    if cfg["output"]["shell_table"] and sc.SCENARIO_SCHEMA[name] == "shell":
        tab = sc.shell_table(p, quad)
        tp = out_dir / f"{stem}_scaled.csv"
        write_csv(tp, cfg, tab.columns, tab.rows, {"observable": "scaled shell integral"})
        written.append(tp)
        if cfg["output"]["plot_script"]:
            gp = out_dir / f"{stem}_scaled.gp"
            write_plot_script(gp, tp.name, tab.columns, "scaled shell integral", logx=True)
            written.append(gp)

    summary = {"scenario": name, "artifact_version": __version__, "converged": ok}
    summary.update({k: (v if math.isfinite(v) else None) for k, v in scal.scalars.items()})
    for i, row in enumerate(curve.rows):
        summary[f"curve_{i}_{curve.columns[0]}"] = row[0]
        summary[f"curve_{i}_reduced"] = row[1] if math.isfinite(row[1]) else None
        summary[f"curve_{i}_value"] = row[2]
        summary[f"curve_{i}_value_error"] = row[3]
    if scal.notes:
        summary["notes"] = "; ".join(dict.fromkeys(scal.notes))
    js = out_dir / f"{stem}.json"
    js.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(js)
    return summary, ok, written


def cmd_run(args) -> int:
    path = Path(args.config)
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(exc.located(path), file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary, ok, written = execute(cfg, Path(args.out), args.threads)
    except (ValueError, TypeError, OSError) as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in written:
        print(f"wrote {w}")
    if not ok:
        msg = "some quantities did not converge"
        if args.allow_unconverged:
            print(f"warning: {msg} (--allow-unconverged)", file=sys.stderr)
            return EXIT_OK
        print(f"error: {msg}; rerun with --allow-unconverged to keep the output", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qvac", description="Quantum-vacuum force and torque scenarios")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    ls = sub.add_parser("list", help="list scenarios and their parameters")
    ls.add_argument("--config", metavar="NAME", help="print a default TOML config for NAME")
    ls.set_defaults(func=cmd_list)
    rn = sub.add_parser("run", help="run a scenario config (TOML, or a CSV from a previous run)")
    rn.add_argument("config")
    rn.add_argument("--out", default=".", help="output directory (default: current)")
    rn.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    rn.add_argument("--allow-unconverged", action="store_true", help="exit 0 even if an integral failed")
    rn.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
