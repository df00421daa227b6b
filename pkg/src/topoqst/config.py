"""Strict TOML run configuration.

Precedence is command-line flags > config file > defaults. Every section
is parsed against a fixed key set; unknown keys are rejected.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .disorder import KINDS
from .dynamics import StepControl
from .ensemble import SWEEP_PARAMS, make_schedule
from .schedule import schedule_from_dict

EXPERIMENTS = ("simulate", "two-level", "sweep2d", "ensemble", "compare", "scaling", "area-time", "spectrum")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


DEFAULTS: dict[str, Any] = {
    "experiment": None,
    "protocol": None,
    "chain": {"n_dimers": 10, "t1": 1.0, "t2": 0.0, "delta": 0.0},
    "disorder": {"kind": "on-diagonal", "strength": 0.0, "realizations": 1000, "seed": 0},
    "numerics": {"step_budget": 0.02, "n_samples": 500, "bins": 100, "record_sites": False, "threads": 0},
    "output": {"directory": "out", "formats": ["csv", "json"]},
    "sweep": None,
    "compare": None,
    "scaling": None,
    "area_time": None,
}

_SECTION_KEYS = {
    "chain": {"n_dimers", "t1", "t2", "delta"},
    "disorder": {"kind", "strength", "realizations", "seed"},
    "numerics": {"step_budget", "n_samples", "bins", "record_sites", "threads"},
    "output": {"directory", "formats"},
    "sweep": {"family", "model", "axis1", "axis2", "fixed"},
    "compare": {"rabi", "lz", "paired"},
    "scaling": {"rho", "sizes", "T0", "tau0", "n0"},
    "area_time": {"epsilon", "target"},
}
_PROTOCOL_KEYS = {
    "rabi": {"kind", "epsilon", "T"},
    "lz": {"kind", "epsilon", "delta0", "tau", "tau_z"},
    "static": {"kind", "T", "t1", "t2", "delta"},
}
_SECTION_DEFAULTS = {
    "sweep": {"model": "full", "fixed": {}},
    "compare": {"paired": True},
    "scaling": {"T0": 240.0, "tau0": 60.0, "n0": 10},
    "area_time": {"target": float(np.pi / 2)},
}


def load_file(path: str | Path) -> dict[str, Any]:
    """Read a TOML config, or the ``config`` block of an emitted manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config ({exc.strerror})") from exc
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"line {exc.lineno}: {exc.msg}") from exc
        return data["config"] if "config" in data and "version" in data else data
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), str(exc)) from exc


def parse_override(item: str) -> tuple[list[str], Any]:
    """``section.key=value`` with ``value`` parsed as a TOML value (bare words as strings)."""
    if "=" not in item:
        raise ConfigError(item, "override must look like section.key=value")
    key, raw = item.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip().split("."), value


def merge(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(cfg: dict[str, Any], path: list[str], value: Any) -> None:
    node = cfg
    for part in path[:-1]:
        if node.get(part) is None:
            node[part] = {}
        node = node[part]
        if not isinstance(node, dict):
            raise ConfigError(".".join(path), f"{part!r} is not a section")
    node[path[-1]] = value


def _strict(section: dict[str, Any], allowed: set[str], name: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(name, "expected a table")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown key")


def _number(section: dict[str, Any], key: str, name: str, *, integer: bool = False) -> Any:
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}.{key}", f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name}.{key}", f"expected an integer, got {v!r}")
    return int(v) if integer else float(v)


def _protocol(data: Any, name: str, kind: str | None = None):
    if not isinstance(data, dict):
        raise ConfigError(name, "expected a table")
    data = dict(data)
    kind = data.setdefault("kind", kind)
    if kind not in _PROTOCOL_KEYS:
        raise ConfigError(f"{name}.kind", f"unknown protocol {kind!r}")
    _strict(data, _PROTOCOL_KEYS[kind], name)
    for key in _PROTOCOL_KEYS[kind] - {"kind"}:
        if key in data:
            data[key] = _number(data, key, name)
    try:
        return schedule_from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from exc


def _grid(axis: Any, name: str) -> tuple[str, list[float]]:
    if not isinstance(axis, dict) or "name" not in axis:
        raise ConfigError(name, "axis needs a 'name' and either 'values' or start/stop/num")
    if axis["name"] not in SWEEP_PARAMS:
        raise ConfigError(f"{name}.name", f"unknown parameter {axis['name']!r}; expected one of {SWEEP_PARAMS}")
    if "values" in axis:
        _strict(axis, {"name", "values"}, name)
        values = [float(v) for v in axis["values"]]
    else:
        _strict(axis, {"name", "start", "stop", "num"}, name)
        try:
            values = np.linspace(
                _number(axis, "start", name), _number(axis, "stop", name), _number(axis, "num", name, integer=True)
            ).tolist()
        except KeyError as exc:
            raise ConfigError(f"{name}.{exc.args[0]}", "missing") from exc
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(name, "grid must be non-empty and strictly increasing")
    return axis["name"], values


def resolve(raw: dict[str, Any], experiment: str | None = None) -> dict[str, Any]:
    """Merge defaults, validate everything and return the resolved config dict.

    Raises ``ConfigError`` naming the offending field. Nothing is computed.
    """
    _strict(raw, set(DEFAULTS), "config")
    cfg = merge(DEFAULTS, raw)
    if experiment is not None:
        cfg["experiment"] = experiment
    exp = cfg["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {exp!r}; expected one of {EXPERIMENTS}")

    for name in ("chain", "disorder", "numerics", "output"):
        _strict(cfg[name], _SECTION_KEYS[name], name)
    for name in ("sweep", "compare", "scaling", "area_time"):
        if cfg[name] is not None:
            _strict(cfg[name], _SECTION_KEYS[name], name)
            cfg[name] = merge(_SECTION_DEFAULTS[name], cfg[name])

    chain = cfg["chain"]
    chain["n_dimers"] = _number(chain, "n_dimers", "chain", integer=True)
    if chain["n_dimers"] < 1:
        raise ConfigError("chain.n_dimers", "must be >= 1")
    for key in ("t1", "t2", "delta"):
        chain[key] = _number(chain, key, "chain")

    dis = cfg["disorder"]
    if dis["kind"] not in KINDS:
        raise ConfigError("disorder.kind", f"expected one of {KINDS}, got {dis['kind']!r}")
    dis["strength"] = _number(dis, "strength", "disorder")
    if dis["strength"] < 0:
        raise ConfigError("disorder.strength", "must be >= 0")
    dis["realizations"] = _number(dis, "realizations", "disorder", integer=True)
    if dis["realizations"] < 1:
        raise ConfigError("disorder.realizations", "must be >= 1")
    dis["seed"] = _number(dis, "seed", "disorder", integer=True)
    if not 0 <= dis["seed"] < 2**64:
        raise ConfigError("disorder.seed", "must be an unsigned 64-bit integer")

    num = cfg["numerics"]
    num["step_budget"] = _number(num, "step_budget", "numerics")
    num["n_samples"] = _number(num, "n_samples", "numerics", integer=True)
    num["bins"] = _number(num, "bins", "numerics", integer=True)
    num["threads"] = _number(num, "threads", "numerics", integer=True)
    if num["bins"] < 1:
        raise ConfigError("numerics.bins", "must be >= 1")
    if num["threads"] < 0:
        raise ConfigError("numerics.threads", "must be >= 0 (0 = all cores)")
    if not isinstance(num["record_sites"], bool):
        raise ConfigError("numerics.record_sites", "expected true or false")
    try:
        StepControl(num["step_budget"], num["n_samples"])
    except ValueError as exc:
        raise ConfigError("numerics", str(exc)) from exc

    out = cfg["output"]
    formats = out["formats"]
    if isinstance(formats, str):
        formats = ["csv", "json"] if formats == "both" else [formats]
    if not formats or any(f not in ("csv", "json") for f in formats):
        raise ConfigError("output.formats", "expected csv, json or both")
    out["formats"] = list(formats)
    out["directory"] = str(out["directory"])

    if exp in ("simulate", "two-level", "ensemble"):
        if cfg["protocol"] is None:
            raise ConfigError("protocol", f"required for {exp}")
        _protocol(cfg["protocol"], "protocol")
    elif cfg["protocol"] is not None:
        _protocol(cfg["protocol"], "protocol")

    if exp == "sweep2d":
        sw = cfg["sweep"]
        if sw is None:
            raise ConfigError("sweep", "required for sweep2d")
        if sw.get("family") not in ("rabi", "lz"):
            raise ConfigError("sweep.family", f"expected 'rabi' or 'lz', got {sw.get('family')!r}")
        if sw["model"] not in ("full", "two-level"):
            raise ConfigError("sweep.model", f"expected 'full' or 'two-level', got {sw['model']!r}")
        for key in ("axis1", "axis2"):
            if key not in sw:
                raise ConfigError(f"sweep.{key}", "missing")
            name, values = _grid(sw[key], f"sweep.{key}")
            sw[key] = {"name": name, "values": values}
        _strict(sw["fixed"], set(SWEEP_PARAMS), "sweep.fixed")
        fixed = {k: _number(sw["fixed"], k, "sweep.fixed") for k in sw["fixed"]}
        sw["fixed"] = fixed
        # build the corner cells now so bad parameter sets fail before any run
        a1, a2 = sw["axis1"], sw["axis2"]
        for v1 in (a1["values"][0], a1["values"][-1]):
            for v2 in (a2["values"][0], a2["values"][-1]):
                params = {**fixed, a1["name"]: v1, a2["name"]: v2}
                try:
                    make_schedule(sw["family"], params)
                except KeyError as exc:
                    raise ConfigError(f"sweep.fixed.{exc.args[0]}", "missing") from exc
                except (TypeError, ValueError) as exc:
                    raise ConfigError("sweep", str(exc)) from exc

    if exp == "compare":
        cmp_ = cfg["compare"]
        if cmp_ is None or "rabi" not in cmp_ or "lz" not in cmp_:
            raise ConfigError("compare", "needs [compare.rabi] and [compare.lz] tables")
        _protocol(cmp_["rabi"], "compare.rabi", "rabi")
        _protocol(cmp_["lz"], "compare.lz", "lz")
        cmp_["rabi"].setdefault("kind", "rabi")
        cmp_["lz"].setdefault("kind", "lz")
        if not isinstance(cmp_["paired"], bool):
            raise ConfigError("compare.paired", "expected true or false")

    if exp == "scaling":
        sc = cfg["scaling"]
        if sc is None or "rho" not in sc or "sizes" not in sc:
            raise ConfigError("scaling", "needs rho and sizes")
        sc["rho"] = _number(sc, "rho", "scaling")
        if sc["rho"] < 1:
            raise ConfigError("scaling.rho", "must be >= 1")
        sizes = sc["sizes"]
        if not isinstance(sizes, list) or not sizes or any(
            isinstance(n, bool) or not isinstance(n, int) or n < 2 for n in sizes
        ):
            raise ConfigError("scaling.sizes", "expected a list of integers >= 2")
        sc["T0"] = _number(sc, "T0", "scaling")
        sc["tau0"] = _number(sc, "tau0", "scaling")
        sc["n0"] = _number(sc, "n0", "scaling", integer=True)
        if sc["T0"] - 2 * sc["tau0"] <= 0:
            raise ConfigError("scaling", "T0 - 2 tau0 must be positive (tau_z > 0)")

    if exp == "area-time":
        at = cfg["area_time"]
        if at is None or "epsilon" not in at:
            raise ConfigError("area_time.epsilon", "missing")
        at["epsilon"] = _number(at, "epsilon", "area_time")
        if not 0 < at["epsilon"] < 1:
            raise ConfigError("area_time.epsilon", f"must lie in (0, 1), got {at['epsilon']}")
        at["target"] = _number(at, "target", "area_time")
        if at["target"] <= 0:
            raise ConfigError("area_time.target", "must be positive")

    if exp == "spectrum" and chain["t1"] <= 0:
        raise ConfigError("chain.t1", "must be positive")
    return cfg


def protocol_of(cfg: dict[str, Any], key: str = "protocol"):
    node = cfg
    for part in key.split("."):
        node = node[part]
    return schedule_from_dict(node)
