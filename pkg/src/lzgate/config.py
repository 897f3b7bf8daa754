"""Run configuration: defaults, JSON ingestion, overrides and validation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from lzgate.device import DeviceParams, reference_device
from lzgate.errors import ConfigError, InvalidArgument
from lzgate.schedules import CnParams

MODES = ("simulate", "sweep", "lz-verify", "design-check", "calibrate", "measure-phase")
SWEEPABLE_MODES = tuple(m for m in MODES if m != "sweep")
CONFIG_SCHEMA = "config-v1.json"
REPORT_SCHEMA = "report-v1.json"

REFERENCE_CN = {
    "eps": 0.5,
    "u": 1.0,
    "eta": 1.0,
    "omega": 0.05,
    "tau": 2000.0,
    "ramp": 200.0,
    "hold": None,
    "eps1_level": 0.0,
    "eps2_tail_area": 0.0,
}

_SECTIONS = {
    "simulate": {"cn_params": REFERENCE_CN},
    "calibrate": {
        "cn_params": REFERENCE_CN,
        "calibration": {
            "eps1_bounds": [-0.25, 0.25],
            "tail_bounds": [-math.pi / 2, math.pi / 2],
            "max_evals": 60,
            "chi_tol": 1e-3,
            "fidelity_tol": 1e-4,
        },
    },
    "lz-verify": {"lz": {"omega": 0.05, "u": 1.0, "exponent": [0.5, 1.0, 2.0, 4.0], "eps_offset": 0.0}},
    "design-check": {"device_params": {"preset": "reference"}, "e_ref": None},
    "measure-phase": {"phase": {"p1": 0.8, "phi": math.pi / 6, "qubit": 1, "random_cases": 1000}},
}


def load_schema(name: str) -> dict:
    return json.loads(resources.files("lzgate").joinpath("schemas", name).read_text(encoding="utf-8"))


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; the same seed gives the same stream everywhere."""
    return np.random.Generator(np.random.Philox(int(seed)))


def deep_merge(base: dict, overlay: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in overlay.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_config(mode: str, sweep_mode: str | None = None) -> dict:
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    d: dict[str, Any] = {"mode": mode, "tol": 1e-6, "margin": 3.0, "seed": 0, "output": {"path": None, "format": None}}
    inner = sweep_mode if mode == "sweep" else mode
    if inner is not None:
        d.update(copy.deepcopy(_SECTIONS[inner]))
    return d


def load_config_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(d: dict, path: str, value: Any) -> None:
    """Set ``value`` at dotted ``path`` in ``d``, creating intermediate objects."""
    keys = path.split(".")
    if not all(keys):
        raise ConfigError(f"malformed config path {path!r}")
    node = d
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {path!r}: {k!r} is not an object")
        node = nxt
    node[keys[-1]] = value


def get_path(d: dict, path: str) -> Any:
    node: Any = d
    for k in path.split("."):
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"config has no entry {path!r}")
        node = node[k]
    return node


def parse_set(expr: str) -> tuple[str, Any]:
    key, sep, value = expr.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {expr!r}")
    return key.strip(), parse_value(value)


def _schema_error(err: jsonschema.ValidationError) -> ConfigError:
    where = ".".join(str(p) for p in err.absolute_path) or "<root>"
    return ConfigError(f"config field {where}: {err.message}")


def sweep_points(section: dict) -> tuple[list[str], list[tuple]]:
    """Parameter paths and the cartesian grid of values described by ``section``."""
    axes = section.get("axes")
    if axes is None:
        axes = [{k: section[k] for k in ("parameter", "values", "grid") if k in section}]
    paths, value_lists = [], []
    for axis in axes:
        if "values" in axis:
            values = list(axis["values"])
        elif "grid" in axis:
            g = axis["grid"]
            values = [float(v) for v in np.linspace(g["start"], g["stop"], int(g["count"]))]
        else:
            raise ConfigError(f"sweep axis {axis.get('parameter')!r} needs 'values' or 'grid'")
        if not values:
            raise ConfigError(f"sweep axis {axis.get('parameter')!r} is empty")
        paths.append(axis["parameter"])
        value_lists.append(values)
    grid = [()]
    for values in value_lists:
        grid = [point + (v,) for point in grid for v in values]
    return paths, grid


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration; ``data`` is the fully merged JSON object."""

    data: dict

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def tol(self) -> float:
        return float(self.data["tol"])

    @property
    def margin(self) -> float:
        return float(self.data["margin"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def output_path(self) -> str | None:
        return self.data.get("output", {}).get("path")

    @property
    def output_format(self) -> str:
        fmt = self.data.get("output", {}).get("format")
        return fmt or ("csv" if self.mode == "sweep" else "json")

    @property
    def sweep_mode(self) -> str | None:
        return self.data["sweep"]["mode"] if self.mode == "sweep" else None

    def cn_params(self) -> CnParams:
        return CnParams.from_dict(self.data["cn_params"])

    def device_params(self) -> DeviceParams:
        d = dict(self.data["device_params"])
        if d.pop("preset", None) == "reference":
            return reference_device(**d)
        return DeviceParams.from_dict(d)

    def section(self, name: str) -> dict:
        return self.data.get(name) or {}

    def point(self, paths: list[str], values: tuple) -> "RunConfig":
        """The plain-mode configuration for one sweep grid point."""
        d = copy.deepcopy(self.data)
        d["mode"] = d.pop("sweep")["mode"]
        for p, v in zip(paths, values):
            # sweeping one way of fixing the LZ duration replaces the other
            if p in ("lz.tau", "lz.exponent") and isinstance(d.get("lz"), dict):
                d["lz"].pop("exponent" if p == "lz.tau" else "tau", None)
            set_path(d, p, v)
        return validate_config(d)


def validate_config(d: dict) -> RunConfig:
    """Schema plus semantic validation; raises :class:`ConfigError` with the offending field."""
    validator = jsonschema.Draft202012Validator(load_schema(CONFIG_SCHEMA))
    error = jsonschema.exceptions.best_match(validator.iter_errors(d))
    if error is not None:
        raise _schema_error(error)
    mode = d["mode"]
    if mode == "sweep" and "sweep" not in d:
        raise ConfigError("config field sweep: required in sweep mode")
    inner = d["sweep"]["mode"] if mode == "sweep" else mode
    if "cn_params" in d and "device_params" in d:
        raise ConfigError("config has both cn_params and device_params; exactly one is allowed")
    if inner in ("simulate", "calibrate") and "cn_params" not in d:
        raise ConfigError(f"config field cn_params: required for {inner}")
    if inner == "design-check" and "device_params" not in d:
        raise ConfigError("config field device_params: required for design-check")
    if not 0 < float(d["tol"]) <= 1e-3:
        raise ConfigError(f"config field tol: must lie in (0, 1e-3], got {d['tol']!r}")
    cfg = RunConfig(d)
    try:
        if "cn_params" in d and inner in ("simulate", "calibrate"):
            cfg.cn_params()
        if "device_params" in d and inner == "design-check":
            cfg.device_params()
    except (InvalidArgument, TypeError) as exc:
        raise ConfigError(f"config field {'cn_params' if 'cn_params' in d else 'device_params'}: {exc}") from exc
    if inner == "lz-verify":
        lz = d.get("lz", {})
        if ("tau" in lz) == ("exponent" in lz):
            raise ConfigError("config field lz: give exactly one of 'tau' or 'exponent'")
    if mode == "sweep":
        paths, grid = sweep_points(d["sweep"])
        for p in paths:
            if p.split(".")[0] in ("mode", "sweep", "output", "workers"):
                raise ConfigError(f"config field sweep: cannot sweep {p!r}")
    return cfg


def build_config(
    mode: str,
    config_path: str | Path | None = None,
    overrides: list[tuple[str, Any]] | None = None,
) -> RunConfig:
    """Defaults for ``mode`` <- config file <- dotted overrides, then validated."""
    user = load_config_file(config_path) if config_path else {}
    user.pop("mode", None)
    staged = copy.deepcopy(user)
    for path, value in overrides or ():
        set_path(staged, path, value)
    sweep_mode = None
    if mode == "sweep":
        sweep_mode = (staged.get("sweep") or {}).get("mode")
        if sweep_mode not in SWEEPABLE_MODES:
            raise ConfigError(f"config field sweep.mode: expected one of {', '.join(SWEEPABLE_MODES)}, got {sweep_mode!r}")
    base = default_config(mode, sweep_mode)
    # a user-supplied device/cn section replaces the default rather than merging into it
    for key in ("cn_params", "device_params"):
        if key in staged and key not in base:
            other = "device_params" if key == "cn_params" else "cn_params"
            base.pop(other, None)
    if "tau" in (staged.get("lz") or {}) and "lz" in base:
        base["lz"].pop("exponent", None)
    if "exponent" in (staged.get("lz") or {}) and "lz" in base:
        base["lz"].pop("tau", None)
    merged = deep_merge(base, staged)
    merged["mode"] = mode
    return validate_config(merged)
