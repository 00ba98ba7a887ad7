from typing import Optional

import numpy as np

from ..estimation import HyperParams
from ..model.choice import Offer, RoundFeatures, Theta
from .base import Policy, PolicyDecision
from .oracle import oracle_decision


class RandomPolicy(Policy):
    """Uniform random size-K assortment with prices uniform on [0, 1]."""
    name = "random"

    def _decide(self, features: RoundFeatures) -> PolicyDecision:
        size = min(self.hp.K, features.n_arms)
        assortment = np.sort(self.rng.choice(features.n_arms, size=size, replace=False))
        return PolicyDecision(Offer(tuple(assortment), self.rng.uniform(0.0, 1.0, size)))


class OraclePolicy(Policy):
    """Plays the clairvoyant decision under the true parameters."""
    name = "oracle"

    def __init__(
        self,
        hp: HyperParams,
        theta: Theta,
        rng: Optional[np.random.Generator] = None,
        grid: int = 0,
        method: str = "threshold",
    ):
        super().__init__(hp, rng)
        self.theta = theta
        self.grid = grid
        self.method = method

    def _decide(self, features: RoundFeatures) -> PolicyDecision:
        best = oracle_decision(features, self.theta, self.hp.K, grid=self.grid, method=self.method)
        return PolicyDecision(Offer(best.assortment, best.prices))
