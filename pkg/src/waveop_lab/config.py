"""Run configuration: defaults, JSON loading, validation.

A single JSON file drives every check; unspecified keys fall back to
the defaults below.  The seed fixes all random sample sets, so two runs
with the same config and seed produce byte-identical CSV bodies.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class Config:
    seed: int = 7
    out_dir: str = "waveop_out"
    threads: int = 0                     # 0 = use available cores
    lambda0: float = 0.1
    grid: tuple = (12, 8, 16)            # (n_r, n_theta, n_phi)
    rep_grid: tuple = (8, 6, 10)         # grid for the theta-representation check

    # the counterexample potential: small negative compact bump
    potential: dict = field(default_factory=lambda: {
        "shape": "smooth_bump_compact", "amplitude": -0.01, "R0": 1.0, "mu": 12.0})
    # stronger bump for the inverse-expansion window: the expansion is an
    # asymptotic series in lambda/|a| with |a| ~ ||V||_1/(8 pi), so the
    # mandated fit window [1e-3, 1e-1] needs ||V||_1 of order 5
    expansion_potential: dict = field(default_factory=lambda: {
        "shape": "smooth_bump_compact", "amplitude": -4.0, "R0": 1.0, "mu": 12.0})

    lambda_window: dict = field(default_factory=lambda: {
        "min": 1e-3, "max": 1e-1, "count": 8})
    projection: dict = field(default_factory=lambda: {
        "rep_lambdas": [0.05, 0.02, 0.005]})
    k3: dict = field(default_factory=lambda: {
        "n_lambda": 24, "lambda_min": 1e-3, "n_pairs": 50, "n_spot": 5,
        "radius_max": 200.0, "spot_radius": 2.5})
    sweeps: dict = field(default_factory=lambda: {
        "g11_pairs": 500, "ktp_pairs": 200, "psi2_pairs": 200,
        "kp_pairs": 200, "radius_max": 1.0e3, "kp_radius_max": 300.0,
        "radius_min": 0.05})
    weak11: dict = field(default_factory=lambda: {
        "centers": [2.0, 3.5, 5.0, 7.5, 10.0],
        "widths": [1.0, 0.5, 0.25, 0.125, 0.0625],
        "n_thresholds": 24, "decades": 4.0, "quasi_bound": 10.0})
    hormander: dict = field(default_factory=lambda: {
        "n_triples": 100, "r_range": [2.0, 100.0], "delta_range": [0.1, 5.0],
        "bound": 8.0})
    schur: dict = field(default_factory=lambda: {
        "radii": [500.0, 1000.0, 2000.0, 4000.0], "n_samples": 10,
        "stabilization_rel": 0.10})
    counterexample: dict = field(default_factory=lambda: {
        "R_list": [10.0, 30.0, 100.0, 300.0], "l1_R_max": 1.0e4,
        "mc_samples": 1000000, "slope_range": [0.17, 0.36]})
    tolerances: dict = field(default_factory=lambda: {
        "identity_rel": 1e-12,
        "envelope_stability": 0.05,
        "expansion_slope": [3.0, 0.3], "expansion_r2": 0.98,
        "ablation_a2_slope": [2.0, 0.3], "ablation_ptilde_slope": [1.0, 0.3],
        "gain_plain_slope": [-1.0, 0.1], "gain_projected_slope": [0.0, 0.15],
        "representation_rel": 1e-6,
        "sweep_stability": 0.10,
        "levelset_rel": 0.01,
        "l1_r2": 0.98})

    def rng_for(self, check_name: str):
        import numpy as np
        import zlib
        return np.random.default_rng([self.seed, zlib.crc32(check_name.encode())])


def default_config() -> Config:
    return Config()


def _merge(cfg: Config, data: dict) -> Config:
    valid = {f.name for f in dataclasses.fields(Config)}
    for key, val in data.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {key!r}")
        cur = getattr(cfg, key)
        if isinstance(cur, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            unknown = set(val) - set(cur)
            if unknown:
                raise ConfigError(f"unknown keys in section {key!r}: {sorted(unknown)}")
            cur.update(val)
        elif key == "grid" or key == "rep_grid":
            setattr(cfg, key, tuple(int(v) for v in val))
        else:
            setattr(cfg, key, type(cur)(val) if cur is not None else val)
    return cfg


def load_config(path: str | None) -> Config:
    cfg = default_config()
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        cfg = _merge(cfg, data)
    validate(cfg)
    return cfg


def validate(cfg: Config) -> None:
    if cfg.lambda0 <= 0:
        raise ConfigError("lambda0 must be positive")
    if len(cfg.grid) != 3 or min(cfg.grid) < 2:
        raise ConfigError("grid must be three counts >= 2")
    if cfg.lambda_window["min"] <= 0 or cfg.lambda_window["max"] <= cfg.lambda_window["min"]:
        raise ConfigError("lambda window must satisfy 0 < min < max")
    if cfg.lambda_window["count"] < 6:
        raise ConfigError("lambda window needs at least 6 points")
    for name, val in cfg.tolerances.items():
        widths = val[1:] if isinstance(val, (list, tuple)) else [val]
        if any(not (w > 0) for w in widths):
            raise ConfigError(f"tolerance {name!r} must be positive")
    pot = cfg.potential
    if pot.get("amplitude", 0.0) == 0.0:
        raise ConfigError("potential amplitude must be nonzero")


def config_to_json(cfg: Config) -> str:
    return json.dumps(dataclasses.asdict(cfg), indent=2, sort_keys=True)
