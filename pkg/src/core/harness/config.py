"""
Experiment configuration: a flat JSON document whose keys are exactly the
ExperimentConfig fields.
"""
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from ..errors import ConfigError
from ..estimation import BETA_MODES, CALIBRATED_LAMBDA, HyperParams, default_eta, default_lambda
from ..model.noise import ActivationNoise, NoiseLaw
from ..policies import PolicyManager
from ..policies.etc import EXPLORE_MODES

REQUIRED_KEYS = ("N", "K", "d", "T", "algorithm", "replications", "base_seed")
CALIBRATIONS = ("practical", "theory")
_MAX_SEED = 2 ** 64


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    K: int
    d: int
    T: int
    algorithm: str
    replications: int
    base_seed: int
    C1: float = 0.05
    C: float = 2.0
    M: Optional[int] = None
    ts_utility_scale: Optional[float] = None
    noise_c: float = 0.0
    noise_law: str = "uniform"
    record_diagnostics: bool = True
    beta_mode: str = "fixed"
    calibration: str = "practical"
    eta: Optional[float] = None
    lam: Optional[float] = None
    etc_explore: str = "zero"
    oracle_grid: int = 0

    def __post_init__(self):
        for key in ("N", "K", "d", "T", "replications", "base_seed", "oracle_grid"):
            if not _is_int(getattr(self, key)):
                raise ConfigError(key, f"'{key}' must be an integer")
        for key in ("N", "K", "d", "T", "replications"):
            if getattr(self, key) < 1:
                raise ConfigError(key, f"'{key}' must be at least 1")
        if self.K > self.N:
            raise ConfigError("K", f"K={self.K} exceeds N={self.N}")
        if not 0 <= self.base_seed < _MAX_SEED:
            raise ConfigError("base_seed", "'base_seed' must be a 64-bit unsigned integer")
        if self.oracle_grid < 0:
            raise ConfigError("oracle_grid", "'oracle_grid' must be nonnegative")
        if not isinstance(self.algorithm, str) or not self.algorithm.strip():
            raise ConfigError("algorithm", "'algorithm' must be a non-empty string")
        manager = PolicyManager()
        for name in self.algorithm.split(","):
            manager.normalize_name(name)

        for key in ("C1", "C", "noise_c"):
            if not _is_number(getattr(self, key)):
                raise ConfigError(key, f"'{key}' must be a number")
        if self.C1 < 0:
            raise ConfigError("C1", "'C1' must be nonnegative")
        if self.C <= 1:
            raise ConfigError("C", "'C' must exceed 1")
        if not 0 <= self.noise_c <= 1:
            raise ConfigError("noise_c", "'noise_c' must lie in [0, 1]")
        if self.M is not None and (not _is_int(self.M) or self.M < 1):
            raise ConfigError("M", "'M' must be a positive integer or null")
        if self.ts_utility_scale is not None and not _is_number(self.ts_utility_scale):
            raise ConfigError("ts_utility_scale", "'ts_utility_scale' must be a number or null")
        if self.noise_law not in {law.value for law in NoiseLaw}:
            raise ConfigError("noise_law", f"unknown noise law '{self.noise_law}'")
        if not isinstance(self.record_diagnostics, bool):
            raise ConfigError("record_diagnostics", "'record_diagnostics' must be true or false")
        if self.beta_mode not in BETA_MODES:
            raise ConfigError("beta_mode", f"'beta_mode' must be one of {BETA_MODES}")
        if self.calibration not in CALIBRATIONS:
            raise ConfigError("calibration", f"'calibration' must be one of {CALIBRATIONS}")
        for key in ("eta", "lam"):
            value = getattr(self, key)
            if value is not None and (not _is_number(value) or value <= 0):
                raise ConfigError(key, f"'{key}' must be a positive number or null")
        if self.etc_explore not in EXPLORE_MODES:
            raise ConfigError("etc_explore", f"'etc_explore' must be one of {EXPLORE_MODES}")

    @property
    def algorithms(self) -> Tuple[str, ...]:
        manager = PolicyManager()
        return tuple(manager.normalize_name(name) for name in self.algorithm.split(","))

    @property
    def noise(self) -> ActivationNoise:
        return ActivationNoise(self.noise_c, NoiseLaw(self.noise_law))

    def hyperparams(self) -> HyperParams:
        eta = self.eta if self.eta is not None else default_eta(self.K)
        lam = self.lam
        if lam is None:
            lam = CALIBRATED_LAMBDA if self.calibration == "practical" else default_lambda(self.d, eta)
        return HyperParams(
            d=self.d, K=self.K, N=self.N, T=self.T, C1=self.C1, C=self.C,
            eta=eta, lam=lam, beta_mode=self.beta_mode,
        )

    @property
    def utility_scale(self) -> Optional[float]:
        """Thompson utility multiplier: C under the practical calibration, 8C (the policy default) under theory."""
        if self.ts_utility_scale is not None:
            return float(self.ts_utility_scale)
        return float(self.C) if self.calibration == "practical" else None

    def policy_manager(self) -> PolicyManager:
        return PolicyManager(
            noise_c=self.noise_c,
            M=self.M,
            ts_utility_scale=self.utility_scale,
            etc_explore=self.etc_explore,
            oracle_grid=self.oracle_grid,
        )

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "config must be a flat key-value object")
        known = {f.name for f in fields(cls)}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(key, f"unknown config key '{key}'")
            if isinstance(value, (dict, list)):
                raise ConfigError(key, f"'{key}' must be a scalar value")
        for key in REQUIRED_KEYS:
            if key not in data:
                raise ConfigError(key, f"missing required config key '{key}'")
        return cls(**data)


def load_config(path: str) -> ExperimentConfig:
    if not os.path.isfile(path):
        raise ConfigError("config", f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"config is not valid JSON: {e}")
    return ExperimentConfig.from_dict(data)
