"""TOML run configuration, presets, and validation.

Resolution order: built-in defaults, then the preset named by
``scenario.name`` (if any), then the config file, then ``--set`` overrides.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .optics import BeamSpec, GratingSpec, Grid1D, VdwSpec
from .propagation import ScenarioSpec
from .tomography import ReconstructionConfig, SinogramConfig, z_of_theta, theta_of_z


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


DEFAULTS: dict = {
    "scenario": {"name": None},
    "grating": {"open_fraction": 0.3, "slit_count": "infinite"},
    "vdw": {"enabled": False, "c3_mev_nm3": 10.0, "mass_amu": 720.0, "velocity_m_s": 200.0,
            "thickness_nm": 500.0},
    "beam": {"wavelength": 1e-5, "alpha_max": 0.0, "visibility": 1.0},
    "carpet": {"x_min": -3.0, "x_max": 3.0, "dx": 0.01, "n_max": 256, "quad_panels": 64, "n_alpha": 41},
    "scan": {"mode": "theta", "z_max_talbot": 4.0, "n_theta": 100, "half_planes": True},
    "detector": {"dx": 0.1},
    "sinogram": {"x_m": 8.0, "symmetric_extension": False},
    "reconstruction": {"r_c": 30.0, "x_min": -3.0, "x_max": 3.0, "nx": 121, "nu_min": -1.0,
                       "nu_max": 1.0, "n_nu": 81},
    "sweep": {"key": "", "values": []},
    "output": {"dir": "out"},
}


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _slit_count(v):
    return v == "infinite" or (isinstance(v, int) and not isinstance(v, bool) and v >= 1)


# key -> (accepted type, range check, description of the range)
_SCHEMA: dict[str, tuple[Any, Optional[Callable], str]] = {
    "scenario.name": (str, lambda v: bool(v), "non-empty"),
    "grating.open_fraction": (float, lambda v: 0 < v < 1, "in (0, 1)"),
    "grating.slit_count": (object, _slit_count, '"infinite" or an integer >= 1'),
    "vdw.enabled": (bool, None, ""),
    "vdw.c3_mev_nm3": (float, _nonneg, ">= 0"),
    "vdw.mass_amu": (float, _positive, "> 0"),
    "vdw.velocity_m_s": (float, _positive, "> 0"),
    "vdw.thickness_nm": (float, _positive, "> 0"),
    "beam.wavelength": (float, _positive, "> 0"),
    "beam.alpha_max": (float, lambda v: 0 <= v < math.pi / 2, "in [0, pi/2)"),
    "beam.visibility": (float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "carpet.x_min": (float, None, ""),
    "carpet.x_max": (float, None, ""),
    "carpet.dx": (float, _positive, "> 0"),
    "carpet.n_max": (int, lambda v: v >= 1, ">= 1"),
    "carpet.quad_panels": (int, lambda v: v >= 8, ">= 8 panels per slit"),
    "carpet.n_alpha": (int, lambda v: v >= 1 and v % 2 == 1, "odd and >= 1"),
    "scan.mode": (str, lambda v: v in ("theta", "self-image"), '"theta" or "self-image"'),
    "scan.z_max_talbot": (float, _positive, "> 0"),
    "scan.n_theta": (int, lambda v: v >= 2, ">= 2"),
    "scan.half_planes": (bool, None, ""),
    "detector.dx": (float, _positive, "> 0"),
    "sinogram.x_m": (float, _positive, "> 0"),
    "sinogram.symmetric_extension": (bool, None, ""),
    "reconstruction.r_c": (float, _positive, "> 0"),
    "reconstruction.x_min": (float, None, ""),
    "reconstruction.x_max": (float, None, ""),
    "reconstruction.nx": (int, lambda v: v >= 2, ">= 2"),
    "reconstruction.nu_min": (float, lambda v: v <= -1, "<= -1"),
    "reconstruction.nu_max": (float, lambda v: v >= 1, ">= 1"),
    "reconstruction.n_nu": (int, lambda v: v >= 2, ">= 2"),
    "sweep.key": (str, None, ""),
    "sweep.values": (list, None, ""),
    "output.dir": (str, lambda v: bool(v), "non-empty"),
}

_PI_E6 = math.pi * 1e-6

PRESETS: dict[str, tuple[str, dict]] = {
    "baseline": ("infinite grating f0=0.3, 100 angles up to 4 z_T, detector dx=0.1", {}),
    "range-1zT": ("baseline with the scan cut at one Talbot distance",
                  {"scan": {"z_max_talbot": 1.0}}),
    "dx-sweep": ("detector resolution 0.01, 0.05, 0.1 d",
                 {"sweep": {"key": "detector.dx", "values": [0.01, 0.05, 0.1]}}),
    "ntheta-sweep": ("20, 50, 100 scan angles over [0, 4 z_T]",
                     {"sweep": {"key": "scan.n_theta", "values": [20, 50, 100]}}),
    "collimation-sweep": ("incoherent illumination, alpha_max = 0, 1, 2.5, 5 x pi 1e-6",
                          {"sweep": {"key": "beam.alpha_max",
                                     "values": [0.0, _PI_E6, 2.5 * _PI_E6, 5 * _PI_E6]}}),
    "finite-Ns10": ("grating of 21 slits (N_s=10) on a wider window",
                    {"grating": {"slit_count": 10},
                     "carpet": {"x_min": -12.0, "x_max": 12.0},
                     "sinogram": {"x_m": 12.0}}),
    "vdw-f044": ("f0=0.44 with and without the C60/gold van der Waals phase",
                 {"grating": {"open_fraction": 0.44},
                  "sweep": {"key": "vdw.enabled", "values": [False, True]}}),
    "visibility-sweep": ("fringe visibility 1, 0.75, 0.5",
                         {"sweep": {"key": "beam.visibility", "values": [1.0, 0.75, 0.5]}}),
    "visibility-0.5": ("baseline at fringe visibility 0.5", {"beam": {"visibility": 0.5}}),
    "selfimage-planes-only": ("only the self-image planes z = k z_T / 2, k = 0..8",
                              {"scan": {"mode": "self-image"}}),
    "selfimage-integer-planes": ("only the integer Talbot planes z = k z_T, k = 0..4",
                                 {"scan": {"mode": "self-image", "half_planes": False}}),
}


def list_presets() -> list[tuple[str, str]]:
    return [(name, desc) for name, (desc, _) in PRESETS.items()]


def _deep_merge(base: dict, top: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for section, entries in top.items():
        if section not in DEFAULTS:
            raise ConfigError(prefix + section, "unknown section")
        if not isinstance(entries, dict):
            raise ConfigError(section, "expected a table of keys")
        for key, value in entries.items():
            path = f"{section}.{key}"
            if path not in _SCHEMA:
                raise ConfigError(path, "unknown key")
            out[section][key] = value
    return out


def _check_value(path: str, value):
    kind, check, desc = _SCHEMA[path]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
    elif kind is not object and not isinstance(value, kind):
        raise ConfigError(path, f"expected {kind.__name__}, got {value!r}")
    if check is not None and not check(value):
        raise ConfigError(path, f"out of range: {value!r} (must be {desc})")
    return value


def _parse_scalar(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _overrides_to_table(overrides: Iterable[str]) -> dict:
    table: dict = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        path, raw = item.split("=", 1)
        path = path.strip()
        if path.count(".") != 1:
            raise ConfigError(path, "override key must be section.key")
        section, key = path.split(".")
        table.setdefault(section, {})[key] = _parse_scalar(raw.strip())
    return table


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved and validated run parameters.

    The pipeline draws no random numbers; ``random_free`` records that so it
    appears in every manifest.
    """

    scenario: str
    values: dict
    random_free: bool = field(default=True, init=False)

    def get(self, path: str):
        section, key = path.split(".")
        return self.values[section][key]

    @property
    def output_dir(self) -> str:
        return self.values["output"]["dir"]

    def with_value(self, path: str, value) -> "RunConfig":
        vals = copy.deepcopy(self.values)
        section, key = path.split(".")
        vals[section][key] = _check_value(path, value)
        return _validated(self.scenario, vals)

    def as_dict(self) -> dict:
        return copy.deepcopy(self.values)

    # -- builders for the numerical stages -------------------------------
    def grating(self) -> GratingSpec:
        g, v = self.values["grating"], self.values["vdw"]
        vdw = VdwSpec(v["c3_mev_nm3"], v["mass_amu"], v["velocity_m_s"], v["thickness_nm"]) \
            if v["enabled"] else None
        ns = None if g["slit_count"] == "infinite" else g["slit_count"]
        return GratingSpec(g["open_fraction"], ns, vdw)

    def beam(self) -> BeamSpec:
        b = self.values["beam"]
        return BeamSpec(b["wavelength"], b["alpha_max"], b["visibility"])

    def z_values(self) -> np.ndarray:
        s = self.values["scan"]
        lam = self.values["beam"]["wavelength"]
        z_t = 2.0 / lam
        if s["mode"] == "theta":
            th = np.linspace(0.0, theta_of_z(s["z_max_talbot"] * z_t, lam), s["n_theta"])
            return z_of_theta(th, lam)
        k_max = int(math.floor(2 * s["z_max_talbot"] + 1e-9))
        ks = np.arange(k_max + 1)
        if not s["half_planes"]:
            ks = ks[ks % 2 == 0]
        return ks * z_t / 2

    def scenario_spec(self) -> ScenarioSpec:
        c = self.values["carpet"]
        return ScenarioSpec(self.grating(), self.beam(), Grid1D(c["x_min"], c["x_max"], c["dx"]),
                            tuple(float(z) for z in self.z_values()), c["n_max"], c["quad_panels"],
                            c["n_alpha"])

    def sinogram_config(self) -> SinogramConfig:
        s = self.values["sinogram"]
        return SinogramConfig(s["x_m"], self.values["detector"]["dx"], s["symmetric_extension"])

    def reconstruction_config(self) -> ReconstructionConfig:
        r = self.values["reconstruction"]
        return ReconstructionConfig(r["r_c"], Grid1D.linspace(r["x_min"], r["x_max"], r["nx"]),
                                    Grid1D.linspace(r["nu_min"], r["nu_max"], r["n_nu"], unit="1/d"))

    def sweep_points(self) -> list[tuple[str, "RunConfig"]]:
        """(label, config) per sweep value; a single unlabelled point without a sweep."""
        key, values = self.get("sweep.key"), self.get("sweep.values")
        if not key:
            return [("", self)]
        return [(f"{key}={_label(v)}", self.with_value(key, v)) for v in values]


def _label(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    return format(v, ".6g") if isinstance(v, float) else str(v)


def _validated(name: str, vals: dict) -> RunConfig:
    for path in _SCHEMA:
        section, key = path.split(".")
        if path == "scenario.name":
            continue
        vals[section][key] = _check_value(path, vals[section][key])
    c, r = vals["carpet"], vals["reconstruction"]
    if not c["x_max"] > c["x_min"]:
        raise ConfigError("carpet.x_max", "must exceed carpet.x_min")
    if not r["x_max"] > r["x_min"]:
        raise ConfigError("reconstruction.x_max", "must exceed reconstruction.x_min")
    ratio = vals["detector"]["dx"] / c["dx"]
    if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
        raise ConfigError("detector.dx", "must be an integer multiple of carpet.dx")
    sweep = vals["sweep"]
    if sweep["key"]:
        if sweep["key"] not in _SCHEMA or sweep["key"].split(".")[0] in ("sweep", "scenario", "output"):
            raise ConfigError("sweep.key", f"cannot sweep {sweep['key']!r}")
        if not sweep["values"]:
            raise ConfigError("sweep.values", "sweep needs at least one value")
        for v in sweep["values"]:
            _check_value(sweep["key"], v)
    elif sweep["values"]:
        raise ConfigError("sweep.key", "sweep values given without a key")
    vals["scenario"]["name"] = name
    return RunConfig(name, vals)


def parse_config(text: str = "", overrides: Iterable[str] = (), preset: Optional[str] = None) -> RunConfig:
    """Parse TOML ``text`` plus ``section.key=value`` overrides into a RunConfig.

    ``preset`` supplies the scenario name when neither the text nor the
    overrides set one.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<document>", f"not valid TOML: {exc}") from None
    sets = _overrides_to_table(overrides)
    name = sets.get("scenario", {}).get("name") or doc.get("scenario", {}).get("name") or preset
    if not name:
        raise ConfigError("scenario.name", "missing required scenario name")
    if not isinstance(name, str):
        raise ConfigError("scenario.name", f"expected a string, got {name!r}")
    vals = copy.deepcopy(DEFAULTS)
    if name in PRESETS:
        vals = _deep_merge(vals, PRESETS[name][1])
    vals = _deep_merge(vals, doc)
    vals = _deep_merge(vals, sets)
    return _validated(name, vals)


def load_config(path: Optional[str] = None, overrides: Iterable[str] = (),
                preset: Optional[str] = None) -> RunConfig:
    text = ""
    if path is not None:
        try:
            with open(path, "rb") as fh:
                text = fh.read().decode("utf-8")
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
    return parse_config(text, overrides, preset)
