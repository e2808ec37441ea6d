"""Design and scenario configuration files (YAML or JSON).

Bands are written in Hz relative to the band center, e.g. ``[-4e6, -2e6]``
at 20 MHz sampling, and converted to normalized stop bands on load.
``depth_db: null`` requests a perfect null (zero band energy).

Relative config paths that do not exist in the working directory are looked
up in the directories listed in ``NOTCHJAM_CONFIG_PATH``.
"""

from dataclasses import dataclass, field
import os
from pathlib import Path
import re

import jsonschema
import numpy as np
import yaml

from .coexistence import JAMMER_TYPES, ScenarioConfig
from .projection import generate_reference, project_notch
from .qcqp import SolverConfig, design_blockwise
from .spectral import bands_from_hz

__all__ = [
    "ConfigError",
    "CONFIG_PATH_ENV",
    "DESIGN_SCHEMA",
    "SCENARIO_SCHEMA",
    "DesignConfig",
    "resolve_config_path",
    "load_mapping",
    "load_design_config",
    "load_scenario_config",
    "run_design",
]

CONFIG_PATH_ENV = "NOTCHJAM_CONFIG_PATH"


class ConfigError(ValueError):
    """Configuration file is missing, malformed or violates the schema."""


_number = {"type": "number"}
_pos_number = {"type": "number", "exclusiveMinimum": 0}
_pos_int = {"type": "integer", "minimum": 1}

_band_schema = {
    "type": "object",
    "additionalProperties": False,
    "required": ["f_lo", "f_hi"],
    "properties": {
        "f_lo": _number,
        "f_hi": _number,
        "depth_db": {"type": ["number", "null"]},
    },
}

DESIGN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["sample_rate", "method", "bands"],
    "properties": {
        "sample_rate": _pos_number,
        "length": _pos_int,
        "duration": _pos_number,
        "method": {"enum": ["proj", "qcqp"]},
        "blocks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"block_len": _pos_int, "overlap": {"type": "integer", "minimum": 0}},
        },
        "bands": {"type": "array", "items": _band_schema},
        "seed": {"type": "integer", "minimum": 0},
        "reference": {"enum": ["phase", "gaussian"]},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "feasibility_tol": _pos_number,
                "optimality_tol": _pos_number,
                "max_iters": _pos_int,
            },
        },
    },
    "oneOf": [{"required": ["length"]}, {"required": ["duration"]}],
}

_hz_pair = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "sample_rate": _pos_number,
        "noise_power": _pos_number,
        "trials": _pos_int,
        "seed": {"type": "integer", "minimum": 0},
        "comm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "offset": _number,
                "bandwidth": _pos_number,
                "n_bits": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "symbol_rate": _pos_number,
                "rolloff": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "span": _pos_int,
                "snr_db": _number,
            },
        },
        "radar": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "offset": _number,
                "bandwidth": _pos_number,
                "pulse_width": _pos_number,
                "pri": _pos_number,
                "pulses": {"type": "array", "items": _pos_int, "minItems": 1},
                "snr_db": _number,
                "delay": {"type": "number", "minimum": 0},
            },
        },
        "jammer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "types": {"type": "array", "items": {"enum": list(JAMMER_TYPES)}, "minItems": 1},
                "jnr_db": _number,
                "length": {"type": ["integer", "null"], "minimum": 1},
                "depth_db": _number,
                "stop_bands": {"type": "array", "items": _hz_pair},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
    },
}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``20e6`` style floats (YAML 1.1 wants ``20e+6``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def resolve_config_path(path):
    """Find ``path`` directly or in the ``NOTCHJAM_CONFIG_PATH`` directories."""
    p = Path(path)
    if p.exists():
        return p
    if not p.is_absolute():
        for d in os.environ.get(CONFIG_PATH_ENV, "").split(os.pathsep):
            if d and (Path(d) / p).exists():
                return Path(d) / p
    raise ConfigError(f"config file not found: {path}")


def load_mapping(path):
    """Parse a YAML or JSON file into a dict."""
    p = resolve_config_path(path)
    try:
        data = yaml.load(p.read_text(), Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return data


def _validate(data, schema):
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def _check_hz_band(lo, hi, fs, where):
    if not lo < hi:
        raise ConfigError(f"{where}: f_lo must be below f_hi, got [{lo}, {hi}]")
    if lo < -fs / 2 or hi > fs / 2:
        raise ConfigError(f"{where}: band [{lo}, {hi}] Hz lies outside [-fs/2, fs/2] = [{-fs / 2}, {fs / 2}]")


@dataclass
class DesignConfig:
    """Validated waveform design request."""

    sample_rate: float
    length: int
    method: str = "proj"
    bands: list = field(default_factory=list)  # (f_lo Hz, f_hi Hz, depth dB or None)
    block_len: int = None
    overlap: int = 0
    seed: int = 0
    reference: str = "phase"
    solver: SolverConfig = field(default_factory=SolverConfig)

    @classmethod
    def from_dict(cls, data):
        _validate(data, DESIGN_SCHEMA)
        fs = float(data["sample_rate"])
        if "length" in data:
            length = int(data["length"])
        else:
            length = int(round(data["duration"] * fs))
            if length < 1:
                raise ConfigError("duration is shorter than one sample")
        bands = []
        for i, b in enumerate(data["bands"]):
            lo, hi = float(b["f_lo"]), float(b["f_hi"])
            _check_hz_band(lo, hi, fs, f"bands/{i}")
            depth = b.get("depth_db")
            bands.append((lo, hi, None if depth is None else float(depth)))
        blocks = data.get("blocks", {})
        return cls(
            sample_rate=fs,
            length=length,
            method=data["method"],
            bands=bands,
            block_len=blocks.get("block_len"),
            overlap=int(blocks.get("overlap", 0)),
            seed=int(data.get("seed", 0)),
            reference=data.get("reference", "phase"),
            solver=SolverConfig(**data.get("solver", {})),
        )

    def stop_bands(self):
        out = []
        for lo, hi, depth in self.bands:
            out += bands_from_hz(lo, hi, self.sample_rate, depth)
        return out

    def to_dict(self):
        d = {
            "sample_rate": self.sample_rate,
            "length": self.length,
            "method": self.method,
            "bands": [{"f_lo": lo, "f_hi": hi, "depth_db": depth} for lo, hi, depth in self.bands],
            "seed": self.seed,
            "reference": self.reference,
            "solver": {
                "feasibility_tol": self.solver.feasibility_tol,
                "optimality_tol": self.solver.optimality_tol,
                "max_iters": self.solver.max_iters,
            },
        }
        if self.block_len is not None or self.overlap:
            d["blocks"] = {"overlap": self.overlap}
            if self.block_len is not None:
                d["blocks"]["block_len"] = self.block_len
        return d


def load_design_config(path):
    return DesignConfig.from_dict(load_mapping(path))


def load_scenario_config(path):
    data = load_mapping(path)
    _validate(data, SCENARIO_SCHEMA)
    fs = float(data.get("sample_rate", ScenarioConfig.sample_rate))
    for i, (lo, hi) in enumerate(data.get("jammer", {}).get("stop_bands", [])):
        _check_hz_band(lo, hi, fs, f"jammer/stop_bands/{i}")
    try:
        return ScenarioConfig.from_dict(data)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_design(cfg):
    """Synthesize the waveform described by ``cfg``.

    Returns
    -------
    c : ndarray
    diagnostics : list of WindowDiagnostics
        Empty for the projection method.
    """
    c0 = generate_reference(cfg.length, cfg.seed, cfg.reference)
    bands = cfg.stop_bands()
    if cfg.method == "proj":
        return project_notch(c0, bands), []
    c, diags = design_blockwise(c0, bands, cfg.block_len, cfg.overlap, cfg.solver)
    return np.asarray(c), diags
