"""Command line: ``fracdp {simulate,value,verify,special}``.

Exit codes: 0 success / all checks pass, 1 a check failed or the solver
failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__, suites
from .config import ConfigError, RunConfig, load_config
from .dynamics import solve_motion
from .errors import FracDPError
from .fraccalc import gamma_fn, mittag_leffler
from .problems import example_functional
from .value import equal_switch_nodes, value_bruteforce

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# -- emitters -----------------------------------------------------------------


def fmt_num(x) -> str:
    """17 significant digits, '.' decimal, no locale."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def to_json(obj: Any) -> str:
    """Deterministic JSON with 17-digit floats; non-finite floats become null."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_num(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return " ".join(_csv_cell(x) for x in v)
    return fmt_num(v)


def to_csv(doc: dict) -> str:
    """Header comments (command, config, checks) followed by the table."""
    out = io.StringIO()
    out.write(f"# command: {doc['command']}\n")
    out.write(f"# config: {to_json(doc['config'])}\n")
    for c in doc.get("checks", []):
        out.write(f"# check: {c['name']}: value={fmt_num(c['value'])} threshold={fmt_num(c['threshold'])} "
                  f"{'PASS' if c['passed'] else 'FAIL'}\n")
    if "passed" in doc:
        out.write(f"# passed: {fmt_num(doc['passed'])}\n")
    rows = doc.get("table", [])
    if rows:
        cols = list(rows[0])
        out.write(",".join(cols) + "\n")
        for r in rows:
            out.write(",".join(_csv_cell(r.get(c)) for c in cols) + "\n")
    return out.getvalue()


def _emit(doc: dict, fmt: str, path: str | None) -> None:
    text = to_json(doc) + "\n" if fmt == "json" else to_csv(doc)
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------


def _vec(x) -> Any:
    x = np.asarray(x, dtype=float).ravel()
    return float(x[0]) if x.size == 1 else x.tolist()


def cmd_simulate(cfg: RunConfig) -> tuple[dict, int]:
    g = cfg.problem.grid
    theta = cfg.raw["simulate"]["theta"]
    theta_idx = g.N if theta is None else cfg.node_of(theta, "simulate.theta")
    t = cfg.start.t_index
    if theta_idx < t:
        raise ConfigError("simulate.theta", f"must be >= t = {cfg.start.t}")
    control = cfg.control(t, theta_idx)
    motion = solve_motion(cfg.problem, cfg.start, control, theta_idx)
    rows = []
    for j in range(theta_idx + 1):
        u = control.at(j) if t <= j < theta_idx else None
        psi = motion.psi.values[j] if j < theta_idx else None
        rows.append({
            "tau": g.tau(j),
            "x": _vec(motion.w[j]),
            "u": None if u is None else _vec(u),
            "psi": None if psi is None else _vec(psi),
        })
    doc = {"command": "simulate", "config": cfg.raw, "start_index": t,
           "integral_residual": motion.integral_residual(), "table": rows}
    return doc, EXIT_OK


def cmd_value(cfg: RunConfig) -> tuple[dict, int]:
    sec = cfg.raw["value"]
    N, t = cfg.problem.grid.N, cfg.start.t_index
    if N - t < sec["intervals"]:
        raise ConfigError("value.intervals", f"more intervals than the {N - t} cells left")
    nodes = equal_switch_nodes(t, N, sec["intervals"])
    report: list = []
    est = value_bruteforce(cfg.problem, cfg.start, nodes, sec["budget"], report)
    rows = [{"controls": [_vec(cfg.problem.controls[i]) for i in idx], "cost": cost} for idx, cost in report]
    doc = {
        "command": "value", "config": cfg.raw, "value": est.value,
        "argmin": [_vec(cfg.problem.controls[i]) for i in est.indices],
        "switch_nodes": list(est.partition), "count": est.count, "table": rows,
    }
    return doc, EXIT_OK


def _closed_form(cfg: RunConfig, suite: str):
    if cfg.problem.name != "paper-example":
        raise ConfigError("problem.name", f"suite {suite!r} needs a closed-form value; only paper-example has one")
    return example_functional()


def cmd_verify(cfg: RunConfig, suite: str) -> tuple[dict, int]:
    v = cfg.raw["verify"]
    prob, start = cfg.problem, cfg.start
    if suite == "dpp":
        sec = v["dpp"]
        g = prob.grid
        theta = g.index_of(g.T / 2) if sec["theta"] is None and g.N % 2 == 0 else None
        if sec["theta"] is not None:
            theta = cfg.node_of(sec["theta"], "verify.dpp.theta")
            if theta < start.t_index:
                raise ConfigError("verify.dpp.theta", f"must be >= t = {start.t}")
        if theta is None:
            raise ConfigError("verify.dpp.theta", "T/2 is not a node; give theta explicitly")
        if theta != start.t_index and (theta - start.t_index < sec["intervals"] or g.N - theta < sec["tail_intervals"]):
            raise ConfigError("verify.dpp", "not enough cells for the requested switch intervals")
        phi = example_functional() if prob.name == "paper-example" else None
        rep = suites.suite_dpp(prob, start, phi, theta, sec["intervals"], sec["tail_intervals"],
                               sec["tol_closed"], sec["tol_discrete"])
    elif suite == "hjb":
        sec = v["hjb"]
        phi = _closed_form(cfg, suite)
        rep = suites.suite_hjb(prob, start, phi, sec["positions"], v["seed"], sec["numeric"],
                               sec["horizon"], sec["probe_scale"], sec["tol"])
    elif suite == "bounds":
        sec = v["bounds"]
        rep = suites.suite_bounds(sec["trials"], v["seed"], prob.grid.alpha, sec["T"], sec["N"], sec["slack"])
    elif suite == "strategy":
        sec = v["strategy"]
        phi = _closed_form(cfg, suite)
        if max(sec["partitions"]) > prob.grid.N - start.t_index:
            raise ConfigError("verify.strategy.partitions", "more intervals than cells left")
        rep = suites.suite_strategy(prob, start, phi, sec["partitions"], sec["reference"], sec["tol"], sec["noise"])
    else:
        raise ConfigError("suite", f"unknown suite {suite!r}")
    doc = {
        "command": f"verify {suite}", "config": cfg.raw, "passed": rep.passed,
        "checks": [c._asdict() for c in rep.checks], "table": rep.table,
    }
    return doc, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_special(args) -> tuple[dict, int]:
    if args.function == "gamma":
        value = gamma_fn(args.x)
        doc = {"command": "special gamma", "config": {"x": args.x}, "value": value}
    else:
        value = mittag_leffler(args.alpha, args.z)
        doc = {"command": "special ml", "config": {"alpha": args.alpha, "z": args.z}, "value": value}
    return doc, EXIT_OK


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="overrides output.format")
    common.add_argument("--seed", type=int, help="overrides verify.seed")

    p = argparse.ArgumentParser(prog="fracdp", description="Fractional-order optimal control toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="solve a motion and write the node table")
    sub.add_parser("value", parents=[common], help="brute-force value with an enumeration report")
    ver = sub.add_parser("verify", parents=[common], help="run a verification suite")
    ver.add_argument("--suite", required=True, choices=suites.SUITES)

    sp = sub.add_parser("special", help="evaluate a special function")
    sp.add_argument("--out", metavar="PATH")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    fn = sp.add_subparsers(dest="function", required=True)
    fn.add_parser("gamma", help="Gamma(x)").add_argument("x", type=float)
    ml = fn.add_parser("ml", help="Mittag-Leffler E_alpha(z)")
    ml.add_argument("alpha", type=float)
    ml.add_argument("z", type=float)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "special":
            try:
                doc, code = cmd_special(args)
            except FracDPError as exc:
                print(f"fracdp: bad argument: {exc}", file=sys.stderr)
                return EXIT_USAGE
            if args.out or args.format == "json":
                _emit(doc, args.format, args.out)
            else:
                print(fmt_num(doc["value"]))
            return code
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.raw["verify"]["seed"] = args.seed
        fmt = args.format or cfg.raw["output"]["format"]
        out = args.out or cfg.raw["output"]["path"]
        cfg.raw["output"]["format"] = fmt
        cfg.raw["output"]["path"] = out
        if args.command == "simulate":
            doc, code = cmd_simulate(cfg)
        elif args.command == "value":
            doc, code = cmd_value(cfg)
        else:
            doc, code = cmd_verify(cfg, args.suite)
    except ConfigError as exc:
        where = f" at {exc}" if exc.path else f": {exc}"
        print(f"fracdp: config error{where}", file=sys.stderr)
        return EXIT_USAGE
    except (FracDPError, ArithmeticError, ValueError) as exc:
        print(f"fracdp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(doc, fmt, out)
    if code != EXIT_OK:
        print(f"fracdp: {doc['command']} failed", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
