"""Run configuration: a YAML file validated against a fixed schema.

Grammar (every key optional unless noted, unknown keys are errors)::

    problem:
      name: paper-example        # required; a key of problems.CATALOG
      alpha: 0.5                 # required, 0 < alpha < 1
      T: 2.0                     # required, > 0
      N: 200                     # required, >= 1
      controls: [-1, 0, 1]       # scalars or equal-length lists
      params: {a: -1.0}          # keyword parameters of the catalog builder
    initial:
      w0: [1.7071]               # defaults to the catalog's initial state
      history: hist.csv          # or a sampled history: rows tau,x1..xn on nodes 0..j
    simulate:
      control: {constant: -1}    # or {piecewise: {times: [0, 1.5], values: [-1, 0]}}
      theta: 2.0                 # end time, defaults to T
    value:
      intervals: 4               # equal switching intervals on [t, T)
      budget: 10000000
    verify:
      seed: 0
      dpp: {theta: 1.0, intervals: 6, tail_intervals: 2, tol_closed: 0.02, tol_discrete: 1.0e-12}
      hjb: {positions: 100, numeric: false, horizon: 4, probe_scale: 1.0, tol: 1.0e-9}
      bounds: {trials: 200, T: 1.0, N: 100, slack: 1.0e-6}
      strategy: {partitions: [5, 10, 20, 40], tol: 0.05, noise: 1.0e-3, reference: 0.0858}
    output:
      path: out.csv
      format: csv                # csv | json

Times given in time units (``theta``, ``times``) must fall on grid nodes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import ControlSignal, Position, Problem, make_initial_position
from .errors import FracDPError
from .problems import CATALOG, DEFAULT_W0, build_problem

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(FracDPError, ValueError):
    """Malformed configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_REQ = object()

# (type, default); nested dicts are sub-schemas, None type means "any mapping"
_SCHEMA: dict = {
    "problem": {
        "name": (str, _REQ),
        "alpha": (float, _REQ),
        "T": (float, _REQ),
        "N": (int, _REQ),
        "controls": (list, None),
        "params": (dict, {}),
    },
    "initial": {
        "w0": (list, None),
        "history": (str, None),
    },
    "simulate": {
        "control": (dict, None),
        "theta": (float, None),
    },
    "value": {
        "intervals": (int, 4),
        "budget": (int, 10**7),
    },
    "verify": {
        "seed": (int, 0),
        "dpp": {
            "theta": (float, None),
            "intervals": (int, 6),
            "tail_intervals": (int, 2),
            "tol_closed": (float, 2e-2),
            "tol_discrete": (float, 1e-12),
        },
        "hjb": {
            "positions": (int, 100),
            "numeric": (bool, False),
            "horizon": (int, None),
            "probe_scale": (float, 1.0),
            "tol": (float, None),
        },
        "bounds": {
            "trials": (int, 200),
            "T": (float, 1.0),
            "N": (int, 100),
            "slack": (float, 1e-6),
        },
        "strategy": {
            "partitions": (list, [5, 10, 20, 40]),
            "tol": (float, 0.05),
            "noise": (float, 1e-3),
            "reference": (float, None),
        },
    },
    "output": {
        "path": (str, None),
        "format": (str, "csv"),
    },
}


def _coerce(value, kind, path: str):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(path, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _walk(data, schema: dict, path: str) -> dict:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    unknown = sorted(set(data) - set(schema), key=str)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else str(unknown[0])
        raise ConfigError(where, f"unknown key (allowed: {', '.join(schema)})")
    out = {}
    for key, spec in schema.items():
        sub = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _walk(data.get(key), spec, sub)
            continue
        kind, default = spec
        if key not in data or data[key] is None:
            if default is _REQ:
                raise ConfigError(sub, "required")
            out[key] = default
        else:
            out[key] = _coerce(data[key], kind, sub)
    return out


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration with the problem and start position built."""

    raw: dict
    problem: Problem
    start: Position
    source: str = "<memory>"

    def node_of(self, t: float, path: str) -> int:
        try:
            return self.problem.grid.index_of(t)
        except FracDPError as exc:
            raise ConfigError(path, str(exc)) from None

    def control(self, start: int, end: int) -> ControlSignal:
        """The ``simulate.control`` entry as a signal on ``[start, end)``."""
        spec = self.raw["simulate"]["control"]
        path = "simulate.control"
        if spec is None:
            raise ConfigError(path, "required for simulate")
        if set(spec) == {"constant"}:
            u = np.atleast_1d(np.asarray(spec["constant"], dtype=float))
            sig = ControlSignal.constant(self.problem.grid, start, end, u)
        elif set(spec) == {"piecewise"}:
            pw = spec["piecewise"]
            if not isinstance(pw, dict) or set(pw) != {"times", "values"}:
                raise ConfigError(f"{path}.piecewise", "expected keys 'times' and 'values'")
            nodes = [self.node_of(float(t), f"{path}.piecewise.times[{i}]") for i, t in enumerate(pw["times"])]
            if not nodes or nodes[0] != start:
                raise ConfigError(f"{path}.piecewise.times", f"must start at t = {self.problem.grid.tau(start)}")
            vals = np.asarray(pw["values"], dtype=float).reshape(len(nodes), -1)
            try:
                sig = ControlSignal.piecewise(self.problem.grid, nodes, end, vals)
            except FracDPError as exc:
                raise ConfigError(f"{path}.piecewise", str(exc)) from None
        else:
            raise ConfigError(path, "expected exactly one of 'constant' or 'piecewise'")
        for j, u in enumerate(sig.values):
            try:
                self.problem.control_index(u)
            except FracDPError:
                raise ConfigError(path, f"value {u.tolist()} at cell {start + j} is not in problem.controls") from None
        return sig


def _read_history(path: str, grid, base: Path) -> Position:
    file = Path(path)
    if not file.is_absolute():
        file = base / file
    try:
        with open(file, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ConfigError("initial.history", f"cannot read {file}: {exc.strerror}") from None
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ConfigError("initial.history", f"non-numeric entry: {exc}") from None
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 2:
        raise ConfigError("initial.history", "expected rows 'tau,x1,...,xn'")
    j = data.shape[0] - 1
    if j > grid.N or not np.allclose(data[:, 0], grid.nodes[: j + 1], atol=1e-9, rtol=0):
        raise ConfigError("initial.history", "tau column must be the grid nodes 0, h, 2h, ...")
    return Position.from_path(grid, data[:, 1:])


def parse_config(data: Any, base: Path | str = ".", source: str = "<memory>") -> RunConfig:
    raw = _walk(data, _SCHEMA, "")
    p = raw["problem"]
    if p["name"] not in CATALOG:
        raise ConfigError("problem.name", f"unknown problem {p['name']!r} (known: {', '.join(CATALOG)})")
    if not 0.0 < p["alpha"] < 1.0:
        raise ConfigError("problem.alpha", "must lie in (0, 1)")
    if not p["T"] > 0.0:
        raise ConfigError("problem.T", "must be positive")
    if p["N"] < 1:
        raise ConfigError("problem.N", "must be >= 1")
    fmt = raw["output"]["format"]
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", f"expected csv or json, got {fmt!r}")
    try:
        problem = build_problem(p["name"], p["alpha"], p["T"], p["N"], p["controls"], **p["params"])
    except TypeError as exc:
        raise ConfigError("problem.params", str(exc)) from None
    except (FracDPError, ValueError) as exc:
        raise ConfigError("problem", str(exc)) from None

    ini = raw["initial"]
    if ini["w0"] is not None and ini["history"] is not None:
        raise ConfigError("initial", "give either w0 or history, not both")
    if ini["history"] is not None:
        start = _read_history(ini["history"], problem.grid, Path(base))
    else:
        w0 = ini["w0"] if ini["w0"] is not None else DEFAULT_W0[p["name"]](p["alpha"])
        raw["initial"]["w0"] = [float(v) for v in w0]
        try:
            start = make_initial_position(problem.grid, raw["initial"]["w0"])
        except (FracDPError, ValueError) as exc:
            raise ConfigError("initial.w0", str(exc)) from None
    if start.n != problem.n:
        raise ConfigError("initial", f"state dimension {start.n} != problem dimension {problem.n}")
    if start.is_terminal:
        raise ConfigError("initial", "history already reaches T")

    v = raw["verify"]
    for key, sec in (("verify.dpp", v["dpp"]),):
        if sec["intervals"] < 1 or sec["tail_intervals"] < 1:
            raise ConfigError(key, "interval counts must be >= 1")
    parts = v["strategy"]["partitions"]
    if not parts or any(isinstance(k, bool) or not isinstance(k, int) or k < 1 for k in parts):
        raise ConfigError("verify.strategy.partitions", "expected a nonempty list of positive integers")
    if v["hjb"]["positions"] < 1:
        raise ConfigError("verify.hjb.positions", "must be >= 1")
    if v["bounds"]["trials"] < 1:
        raise ConfigError("verify.bounds.trials", "must be >= 1")
    if raw["value"]["intervals"] < 1:
        raise ConfigError("value.intervals", "must be >= 1")
    return RunConfig(raw, problem, start, source)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"invalid YAML in {path}: {exc}") from None
    return parse_config(data, path.parent, str(path))
