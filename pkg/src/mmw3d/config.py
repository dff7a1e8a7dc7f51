"""JSON run configuration: versioned schema, validation, and construction of
the typed objects the library consumes.

The shipped defaults encode the reference setup: 77-81 GHz at 40 MHz/us,
100 us chirps sampled at 15 MHz (1500 samples), 50 chirps per 50 ms frame,
a 4x4 receiver array, a 512-point scene at 2 m moving away at 0.05 m/s,
30 dB SNR, and 512 angle bins.
"""

from __future__ import annotations

import copy
import json

import jsonschema

from .dsp import CfarParams
from .experiment import ExperimentConfig, SceneSpec
from .pipeline import PipelineOptions, SrpcParams
from .radar import ChirpConfig, layout_names
from .simulate import NoiseSpec

__all__ = [
    "CONFIG_VERSION",
    "ConfigError",
    "default_config",
    "load_config",
    "validate_config",
    "chirp_from_config",
    "scene_from_config",
    "pipeline_from_config",
    "noise_from_config",
    "experiment_from_config",
]

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Configuration failed schema validation or is internally inconsistent."""


_CHIRP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "f0_hz": {"type": "number", "exclusiveMinimum": 0},
        "slope_hz_per_s": {"type": "number", "exclusiveMinimum": 0},
        "chirp_duration_s": {"type": "number", "exclusiveMinimum": 0},
        "adc_rate_hz": {"type": "number", "exclusiveMinimum": 0},
        "samples_per_chirp": {"type": "integer", "minimum": 1},
        "chirps_per_frame": {"type": "integer", "minimum": 1},
        "chirp_interval_s": {"type": "number", "exclusiveMinimum": 0},
        "frame_duration_s": {"type": "number", "exclusiveMinimum": 0},
    },
}

_SCENE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["mesh", "single", "pair", "ellipsoid", "grid"]},
        "path": {"type": "string"},
        "points": {"type": "integer", "minimum": 1},
        "front_only": {"type": "boolean"},
        "range_m": {"type": "number", "exclusiveMinimum": 0},
        "velocity_mps": {"type": "array", "items": {"type": "number"},
                         "minItems": 3, "maxItems": 3},
        "position": {"type": "array", "items": {"type": "number"},
                     "minItems": 3, "maxItems": 3},
        "separation": {"type": "number", "exclusiveMinimum": 0},
        "depth": {"type": "number", "exclusiveMinimum": 0},
        "axis": {"enum": ["x", "y", "z"]},
        "size": {"type": "array", "items": {"type": "number"},
                 "minItems": 3, "maxItems": 3},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 1},
                   "minItems": 3, "maxItems": 3},
        "spacing": {"type": "number", "exclusiveMinimum": 0},
        "scene_id": {"type": "string"},
    },
}

_CFAR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "train_range": {"type": "integer", "minimum": 1},
        "train_doppler": {"type": "integer", "minimum": 1},
        "guard_range": {"type": "integer", "minimum": 0},
        "guard_doppler": {"type": "integer", "minimum": 0},
        "scale": {"type": "number", "exclusiveMinimum": 0},
    },
}

_SRPC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "upsample_factor": {"type": "integer", "minimum": 2},
        "neighborhood": {"type": "integer", "minimum": 1},
        "max_draws": {"type": "integer", "minimum": 1},
    },
}

_PIPELINE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dpc": {"enum": [1, 2]},
        "estimator": {"enum": ["fft", "conventional", "mvdr", "music"]},
        "search": {"enum": ["1d", "2d", "subgrid"]},
        "angle_bins": {"type": "integer", "minimum": 2},
        "range_nfft": {"type": ["integer", "null"], "minimum": 2},
        "doppler_nfft": {"type": ["integer", "null"], "minimum": 2},
        "loading": {"type": "number", "minimum": 0},
        "subgrid_levels": {"type": "array", "items": {"type": "integer", "minimum": 2},
                           "minItems": 1},
        "dpc1_source_count": {
            "anyOf": [{"type": "integer", "minimum": 1}, {"enum": ["mdl"]}],
        },
        "cfar": _CFAR_SCHEMA,
        "srpc": {"anyOf": [{"type": "null"}, _SRPC_SCHEMA]},
    },
}

_SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "velocity_mps": {"type": "array", "items": {
            "type": "array", "items": {"type": "number"},
            "minItems": 3, "maxItems": 3}},
        "snr_db": {"type": "array", "items": {"type": "number"}},
        "layout": {"type": "array", "items": {"type": "string"}},
        "chirp": {"type": "array", "items": {"type": "object"}},
        "algorithm": {"type": "array", "items": {"type": "object"}},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "radar": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "chirp": _CHIRP_SCHEMA,
                "layout": {"type": "string"},
            },
        },
        "scene": _SCENE_SCHEMA,
        "scenes": {"type": "array", "items": _SCENE_SCHEMA, "minItems": 1},
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"snr_db": {"type": ["number", "null"]}},
        },
        "pipeline": _PIPELINE_SCHEMA,
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d_close_m": {"type": "number", "exclusiveMinimum": 0},
                "voxel_m": {"type": "number", "exclusiveMinimum": 0},
                "repeats": {"type": "integer", "minimum": 1},
            },
        },
        "sweep": _SWEEP_SCHEMA,
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["ply", "csv"]}},
            },
        },
    },
}


def default_config() -> dict:
    return {
        "version": CONFIG_VERSION,
        "seed": 0,
        "radar": {
            "chirp": {
                "f0_hz": 77e9,
                "slope_hz_per_s": 40e12,
                "chirp_duration_s": 100e-6,
                "adc_rate_hz": 15e6,
                "samples_per_chirp": 1500,
                "chirps_per_frame": 50,
                "chirp_interval_s": 1e-3,
                "frame_duration_s": 50e-3,
            },
            "layout": "4x4",
        },
        "scene": {
            "kind": "ellipsoid",
            "size": [0.5, 0.3, 1.7],
            "points": 512,
            "range_m": 2.0,
            "velocity_mps": [0.0, 0.05, 0.0],
        },
        "noise": {"snr_db": 30.0},
        "pipeline": {
            "dpc": 1,
            "estimator": "music",
            "search": "subgrid",
            "angle_bins": 512,
            "cfar": {
                "train_range": 8,
                "train_doppler": 4,
                "guard_range": 2,
                "guard_doppler": 2,
                "scale": 4.0,
            },
            "srpc": None,
        },
        "eval": {"d_close_m": 0.10, "voxel_m": 0.10, "repeats": 10},
        "output": {"dir": "out", "formats": ["ply", "csv"]},
    }


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from exc
    if cfg.get("scene", {}).get("kind") == "mesh" and "path" not in cfg["scene"]:
        raise ConfigError("config invalid at scene/path: mesh scenes require a path")
    for spec in cfg.get("scenes", []):
        if spec.get("kind") == "mesh" and "path" not in spec:
            raise ConfigError("config invalid at scenes/path: mesh scenes require a path")
    layout = cfg.get("radar", {}).get("layout", "4x4")
    if layout not in layout_names():
        raise ConfigError(f"config invalid at radar/layout: unknown preset {layout!r}")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, optionally merged with a JSON file and a dict of overrides,
    then validated."""
    cfg = default_config()
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    return validate_config(cfg)


def chirp_from_config(cfg: dict) -> ChirpConfig:
    c = cfg["radar"]["chirp"]
    try:
        return ChirpConfig(
            f0=c["f0_hz"],
            slope=c["slope_hz_per_s"],
            chirp_duration=c["chirp_duration_s"],
            adc_rate=c["adc_rate_hz"],
            samples_per_chirp=c["samples_per_chirp"],
            chirps_per_frame=c["chirps_per_frame"],
            chirp_interval=c["chirp_interval_s"],
            frame_duration=c["frame_duration_s"],
        )
    except ValueError as exc:
        raise ConfigError(f"config invalid at radar/chirp: {exc}") from exc


def scene_from_config(scene_cfg: dict) -> SceneSpec:
    params = {k: v for k, v in scene_cfg.items()
              if k not in ("kind", "range_m", "velocity_mps", "scene_id")}
    return SceneSpec(
        kind=scene_cfg["kind"],
        params=params,
        range_m=float(scene_cfg.get("range_m", 2.0)),
        velocity_mps=tuple(scene_cfg.get("velocity_mps", (0.0, 0.0, 0.0))),
        scene_id=scene_cfg.get("scene_id", ""),
    )


def pipeline_from_config(cfg: dict, seed: int | None = None) -> PipelineOptions:
    p = cfg["pipeline"]
    cfar_cfg = p.get("cfar", {})
    srpc_cfg = p.get("srpc")
    try:
        return PipelineOptions(
            dpc=p.get("dpc", 1),
            estimator=p.get("estimator", "music"),
            search=p.get("search", "subgrid"),
            cfar=CfarParams(**cfar_cfg),
            angle_bins=p.get("angle_bins", 512),
            range_nfft=p.get("range_nfft"),
            doppler_nfft=p.get("doppler_nfft"),
            loading=p.get("loading", 1e-3),
            subgrid_levels=tuple(p.get("subgrid_levels", (33, 7, 7))),
            dpc1_source_count=p.get("dpc1_source_count", 1),
            srpc=None if srpc_cfg is None else SrpcParams(**srpc_cfg),
            seed=cfg.get("seed", 0) if seed is None else seed,
        )
    except ValueError as exc:
        raise ConfigError(f"config invalid at pipeline: {exc}") from exc


def noise_from_config(cfg: dict) -> NoiseSpec:
    snr = cfg.get("noise", {}).get("snr_db", 30.0)
    return NoiseSpec(float("inf") if snr is None else float(snr))


_CHIRP_KEYS = {
    "f0_hz": "f0",
    "slope_hz_per_s": "slope",
    "chirp_duration_s": "chirp_duration",
    "adc_rate_hz": "adc_rate",
    "samples_per_chirp": "samples_per_chirp",
    "chirps_per_frame": "chirps_per_frame",
    "chirp_interval_s": "chirp_interval",
    "frame_duration_s": "frame_duration",
}


def _translate_sweep(sweep: dict) -> dict:
    """Rewrite JSON sweep values into the field names/objects the runner uses."""
    out = {}
    for axis, values in sweep.items():
        if axis == "chirp":
            conv = []
            for v in values:
                unknown = set(v) - set(_CHIRP_KEYS)
                if unknown:
                    raise ConfigError(f"config invalid at sweep/chirp: unknown keys {sorted(unknown)}")
                conv.append({_CHIRP_KEYS[k]: val for k, val in v.items()})
            out[axis] = conv
        elif axis == "algorithm":
            conv = []
            for v in values:
                v = dict(v)
                if "cfar" in v:
                    v["cfar"] = CfarParams(**v["cfar"])
                if "srpc" in v:
                    v["srpc"] = None if v["srpc"] is None else SrpcParams(**v["srpc"])
                if "subgrid_levels" in v:
                    v["subgrid_levels"] = tuple(v["subgrid_levels"])
                conv.append(v)
            out[axis] = conv
        elif axis == "velocity_mps":
            out[axis] = [tuple(v) for v in values]
        else:
            out[axis] = list(values)
    return out


def experiment_from_config(cfg: dict) -> ExperimentConfig:
    scene_cfgs = cfg.get("scenes") or [cfg["scene"]]
    noise = cfg.get("noise", {}).get("snr_db", 30.0)
    return ExperimentConfig(
        scenes=tuple(scene_from_config(s) for s in scene_cfgs),
        chirp=chirp_from_config(cfg),
        layout=cfg["radar"].get("layout", "4x4"),
        snr_db=float("inf") if noise is None else float(noise),
        pipeline=pipeline_from_config(cfg),
        repeats=cfg["eval"].get("repeats", 10),
        base_seed=cfg.get("seed", 0),
        d_close=cfg["eval"].get("d_close_m", 0.10),
        voxel=cfg["eval"].get("voxel_m", 0.10),
        sweep=_translate_sweep(cfg.get("sweep", {})),
    )
