"""Scenario configuration: declarative description of one simulation setup.

The canonical on-disk form is JSON with keys matching the ScenarioConfig
fields (linear units: watts, meters). The loader additionally accepts the
convenience keys ``noise_dbm`` and ``c0_db``; dB/dBm conversion happens only
at this boundary, the in-memory config and the whole core are linear.

Built-in presets reproduce the two user-location tables of the reference
setup (AP at (0,-15,15), RIS at (0,0,15), path-loss exponents 2.2 / 3.0,
noise -93 dBm). The default arrays are desk scale (8x8 RIS, 8 AP antennas)
so full sweeps run in minutes; ``paper_scale=True`` selects the 20x20 RIS
with 16 AP antennas.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields

import numpy as np

from .channel_model import ApGeometry, RisGeometry
from .errors import ConfigError

__all__ = [
    "UserPlacement",
    "ScenarioConfig",
    "RunManifest",
    "preset",
    "load_config",
    "write_config",
    "config_digest",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "ris_geometry",
    "ap_geometry",
    "write_manifest",
]

NOISE_DBM_DEFAULT = -93.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class UserPlacement:
    """User in the horizontal plane: azimuth angle (radians), scatter-ring
    radius and azimuth distance from the origin (meters)."""

    azimuth: float
    ring_radius: float
    azimuth_distance: float

    def __post_init__(self):
        if self.ring_radius <= 0:
            raise ConfigError("user ring_radius must be positive")
        if self.azimuth_distance <= self.ring_radius:
            raise ConfigError("user azimuth_distance must exceed ring_radius")


@dataclass(frozen=True)
class ScenarioConfig:
    users: tuple
    ap_position: tuple = (0.0, -15.0, 15.0)
    ris_position: tuple = (0.0, 0.0, 15.0)
    n_h: int = 8
    n_v: int = 8
    ris_spacing_wavelengths: float = 0.125
    m: int = 8
    ap_spacing_wavelengths: float = 0.5
    wavelength: float = 1.0
    alpha_h: float = 2.2
    alpha_r: float = 3.0
    c0: float = 1e-3
    d0: float = 1.0
    noise_var: float = dbm_to_watts(NOISE_DBM_DEFAULT)
    power_dbm_grid: tuple = (0.0, 10.0, 20.0, 30.0)
    n_paths: int = 4
    path_gain_variances: tuple | None = None
    master_seed: int = 12345
    mc_trials: int = 500
    rank_tol: float = 1e-12
    pilot_alternate_constant: bool = False

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(
            u if isinstance(u, UserPlacement) else UserPlacement(*u)
            for u in self.users))
        object.__setattr__(self, "ap_position", tuple(float(v) for v in self.ap_position))
        object.__setattr__(self, "ris_position", tuple(float(v) for v in self.ris_position))
        object.__setattr__(self, "power_dbm_grid",
                           tuple(float(v) for v in self.power_dbm_grid))
        if self.path_gain_variances is not None:
            object.__setattr__(self, "path_gain_variances",
                               tuple(float(v) for v in self.path_gain_variances))

        if len(self.users) < 1:
            raise ConfigError("users: at least one user is required")
        if len(self.ap_position) != 3 or len(self.ris_position) != 3:
            raise ConfigError("ap_position/ris_position must be 3-vectors")
        if min(self.n_h, self.n_v, self.m) < 1:
            raise ConfigError("n_h, n_v, m must all be >= 1")
        if self.ris_spacing_wavelengths <= 0 or self.ap_spacing_wavelengths <= 0:
            raise ConfigError("element spacings must be positive")
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if self.c0 <= 0 or self.d0 <= 0:
            raise ConfigError("c0 and d0 must be positive")
        if self.noise_var <= 0:
            raise ConfigError("noise_var must be positive")
        if len(self.power_dbm_grid) == 0:
            raise ConfigError("power_dbm_grid must be nonempty")
        if np.any(np.diff(self.power_dbm_grid) <= 0):
            raise ConfigError("power_dbm_grid must be strictly increasing")
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")
        if self.path_gain_variances is not None:
            if len(self.path_gain_variances) != self.n_paths:
                raise ConfigError(
                    "path_gain_variances must have n_paths entries")
            if min(self.path_gain_variances) <= 0:
                raise ConfigError("path_gain_variances must be positive")
        if self.mc_trials < 2:
            raise ConfigError("mc_trials must be >= 2")
        if not 0 <= self.rank_tol < 1:
            raise ConfigError("rank_tol must lie in [0, 1)")

    @property
    def k(self) -> int:
        return len(self.users)

    @property
    def n(self) -> int:
        return self.n_h * self.n_v

    def gain_variances(self) -> tuple:
        if self.path_gain_variances is not None:
            return self.path_gain_variances
        return (1.0,) * self.n_paths


def ris_geometry(cfg: ScenarioConfig) -> RisGeometry:
    d = cfg.ris_spacing_wavelengths * cfg.wavelength
    return RisGeometry(n_h=cfg.n_h, n_v=cfg.n_v, d_h=d, d_v=d,
                       wavelength=cfg.wavelength)


def ap_geometry(cfg: ScenarioConfig) -> ApGeometry:
    return ApGeometry(m=cfg.m, spacing_over_wavelength=cfg.ap_spacing_wavelengths)


_TABLE1_USERS = ((np.pi / 3, 30.0, 80.0),
                 (np.pi / 4, 40.0, 90.0),
                 (np.pi / 6, 50.0, 100.0))
_TABLE2_USERS = ((np.pi / 3, 50.0, 100.0),
                 (np.pi / 4, 50.0, 100.0),
                 (np.pi / 6, 50.0, 100.0))


def preset(name: str, paper_scale: bool = False, **overrides) -> ScenarioConfig:
    """Built-in scenario presets: 'table1' (unsymmetric user locations) and
    'table2' (symmetric: equal distances and ring radii)."""
    tables = {"table1": _TABLE1_USERS, "table2": _TABLE2_USERS}
    if name not in tables:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(tables)}")
    base = dict(users=tables[name])
    if paper_scale:
        base.update(n_h=20, n_v=20, m=16, mc_trials=1000)
    base.update(overrides)
    return ScenarioConfig(**base)


# ---------------------------------------------------------------------------
# File round trip
# ---------------------------------------------------------------------------

_FIELD_NAMES = [f.name for f in fields(ScenarioConfig)]
_CONVENIENCE_KEYS = {"noise_dbm", "c0_db"}


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for name in _FIELD_NAMES:
        value = getattr(cfg, name)
        if name == "users":
            value = [[u.azimuth, u.ring_radius, u.azimuth_distance]
                     for u in value]
        elif isinstance(value, tuple):
            value = list(value)
        out[name] = value
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    data = dict(data)
    unknown = set(data) - set(_FIELD_NAMES) - _CONVENIENCE_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "noise_dbm" in data:
        if "noise_var" in data:
            raise ConfigError("give either noise_dbm or noise_var, not both")
        data["noise_var"] = dbm_to_watts(float(data.pop("noise_dbm")))
    if "c0_db" in data:
        if "c0" in data:
            raise ConfigError("give either c0_db or c0, not both")
        data["c0"] = db_to_linear(float(data.pop("c0_db")))
    if "users" not in data:
        raise ConfigError("config is missing the users key")
    try:
        return ScenarioConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must contain a JSON object")
    return config_from_dict(data)


def write_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")


def config_digest(cfg: ScenarioConfig) -> str:
    """SHA-256 of the canonical (sorted-key) JSON form; insensitive to key
    ordering of the source file."""
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    config_digest: str
    code_version: str
    seeds: tuple
    started: str
    finished: str
    outputs: tuple


def write_manifest(path, manifest: RunManifest) -> None:
    """Sidecar key-value text: one ``key = value`` line per field; list
    fields are comma-separated."""
    lines = [
        f"config_digest = {manifest.config_digest}",
        f"code_version = {manifest.code_version}",
        f"seeds = {','.join(str(s) for s in manifest.seeds)}",
        f"started = {manifest.started}",
        f"finished = {manifest.finished}",
        f"outputs = {','.join(str(p) for p in manifest.outputs)}",
    ]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
