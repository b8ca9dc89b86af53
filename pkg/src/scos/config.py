"""Flat YAML run configuration and decoder-config construction."""

from __future__ import annotations

import math
from pathlib import Path

import yaml

from .baselines import DscfConfig, ScConfig, SclConfig
from .ordered_search import BiasProfile, ScosConfig

# key -> default; every key is optional in a config file
DEFAULTS: dict[str, object] = {
    "decoder": "scos",
    "snr": [2.0],
    "max_frames": 10 ** 6,
    "min_frames": 0,
    "min_frame_errors": 100,
    "chunk": 1000,
    "all_zero": False,
    # scos
    "lambda_max_ratio": None,   # lambda_max / N; null or inf = unbounded
    "eta": "auto",              # list capacity: auto | integer | null (unbounded)
    "m_max": None,              # null or inf = no threshold test
    "bias": "zero",             # zero | genie | profile:<path>
    "bias_frames": 100000,
    "bias_kind": "first-error",  # genie estimate: first-error | bit-channel
    "budget_check": "pass",     # pass | phase
    # sc
    "sc_update": "minsum",      # check-node update: minsum | exact
    # scl
    "list_size": 16,
    # dscf
    "t_max": 70,
    "alpha": 0.45,
    "flip_order_max": 3,
}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path | None) -> dict:
    cfg = dict(DEFAULTS)
    if path is None:
        return cfg
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat mapping of keys to values")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg.update(data)
    return cfg


def apply_overrides(cfg: dict, overrides: dict) -> dict:
    """Flags win over file keys; ``None`` means the flag was not given."""
    out = dict(cfg)
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def _unbounded(x) -> bool:
    return x is None or (isinstance(x, str) and x.lower() in ("inf", "none", "null")) or (
        isinstance(x, (int, float)) and math.isinf(x))


def scos_config(cfg: dict, N: int, bias: BiasProfile | None) -> ScosConfig:
    lam = cfg["lambda_max_ratio"]
    lam_max = None if _unbounded(lam) else int(round(float(lam) * N))
    eta = cfg["eta"]
    if isinstance(eta, str) and eta != "auto":
        eta = None if _unbounded(eta) else int(eta)
    m_max = math.inf if _unbounded(cfg["m_max"]) else float(cfg["m_max"])
    try:
        return ScosConfig(lambda_max=lam_max, eta=eta, m_max=m_max, bias=bias,
                          budget_check=str(cfg["budget_check"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def decoder_config(cfg: dict, N: int, bias: BiasProfile | None = None):
    name = cfg["decoder"]
    try:
        if name == "scos":
            return scos_config(cfg, N, bias)
        if name == "sc":
            return ScConfig(str(cfg["sc_update"]))
        if name == "scl":
            return SclConfig(int(cfg["list_size"]))
        if name == "dscf":
            return DscfConfig(int(cfg["t_max"]), float(cfg["alpha"]), int(cfg["flip_order_max"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if name == "ml":
        return None
    raise ConfigError(f"unknown decoder {name!r}")


def parse_bias(value: str) -> tuple[str, str | None]:
    """'zero' | 'genie' | 'profile:<path>' -> (kind, path)."""
    if value in ("zero", "genie"):
        return value, None
    if isinstance(value, str) and value.startswith("profile:"):
        return "profile", value.split(":", 1)[1]
    raise ConfigError(f"bias must be zero, genie or profile:<path>, got {value!r}")
