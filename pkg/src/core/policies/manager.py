from typing import Optional

import numpy as np

from ..errors import ConfigError
from ..estimation import HyperParams
from ..logging_utils import get_logger
from ..model.choice import Theta
from .base import Policy
from .baselines import OraclePolicy, RandomPolicy
from .etc import ETCPolicy
from .thompson import TSAPolicy
from .ucb import UCBAELCBPPolicy, UCBALCBPPolicy

logger = get_logger(__name__)

ALGORITHMS = ("ucba-lcbp", "tsa-lcbp", "ucba-elcbp", "etc", "random", "oracle")


class PolicyManager:
    """Builds a fresh policy per replication from its algorithm name."""

    def __init__(
        self,
        noise_c: float = 0.0,
        M: Optional[int] = None,
        ts_utility_scale: Optional[float] = None,
        etc_explore: str = "zero",
        oracle_grid: int = 0,
    ):
        self.noise_c = noise_c
        self.M = M
        self.ts_utility_scale = ts_utility_scale
        self.etc_explore = etc_explore
        self.oracle_grid = oracle_grid

    def normalize_name(self, name: str) -> str:
        key = (name or "").strip().lower().replace("_", "-")
        if key not in ALGORITHMS:
            raise ConfigError("algorithm", f"unknown algorithm '{name}', expected one of {', '.join(ALGORITHMS)}")
        return key

    def create(
        self,
        name: str,
        hp: HyperParams,
        rng: Optional[np.random.Generator] = None,
        theta: Optional[Theta] = None,
    ) -> Policy:
        key = self.normalize_name(name)
        logger.debug("Creating policy %s (N=%s, K=%s, d=%s)", key, hp.N, hp.K, hp.d)
        if key == "ucba-lcbp":
            return UCBALCBPPolicy(hp, rng)
        elif key == "tsa-lcbp":
            return TSAPolicy(hp, rng, M=self.M, utility_scale=self.ts_utility_scale)
        elif key == "ucba-elcbp":
            return UCBAELCBPPolicy(hp, rng, noise_c=self.noise_c)
        elif key == "etc":
            return ETCPolicy(hp, rng, explore=self.etc_explore)
        elif key == "random":
            return RandomPolicy(hp, rng)
        else:
            if theta is None:
                raise ConfigError("algorithm", "the oracle policy needs the true parameters")
            return OraclePolicy(hp, theta, rng, grid=self.oracle_grid)
