import math
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import InputError
from ..estimation import HyperParams
from ..model.choice import RoundFeatures, z_matrix
from .base import EstimatorPolicy, PolicyDecision


def default_sample_count(n_arms: int) -> int:
    """M = ceil(1 - log(2N) / log(1 - 1/(4 sqrt(e pi))))."""
    miss = math.log(1.0 - 1.0 / (4.0 * math.sqrt(math.e * math.pi)))
    return int(math.ceil(1.0 - math.log(2.0 * n_arms) / miss))


class TSAPolicy(EstimatorPolicy):
    """
    Thompson-sampling assortment with LCB pricing.

    Each round draws M valuation samples from N(theta_v, beta^2 H_v^{-1}) and
    M full samples from N(theta, 2 beta^2 H^{-1}); indices take the maximum
    over samples.
    """
    name = "tsa-lcbp"

    def __init__(
        self,
        hp: HyperParams,
        rng: Optional[np.random.Generator] = None,
        M: Optional[int] = None,
        utility_scale: Optional[float] = None,
    ):
        super().__init__(hp, rng)
        self.M = default_sample_count(hp.N) if M is None else int(M)
        if self.M < 1:
            raise InputError("TS sample count M must be positive")
        self.utility_scale = 8.0 * hp.C if utility_scale is None else float(utility_scale)

    def _gaussian(self, mean: np.ndarray, chol: np.ndarray, scale: float) -> np.ndarray:
        """M draws of mean + scale * L^{-T} xi as columns, with L L^T the design."""
        xi = self.rng.standard_normal((mean.shape[0], self.M))
        return mean[:, None] + scale * solve_triangular(chol, xi, lower=True, trans="T", check_finite=False)

    def sample_valuation_parameters(self) -> np.ndarray:
        state = self.state
        return self._gaussian(state.theta_hat[: state.dim], state.chol_H_v, self.radius)

    def sample_parameters(self) -> np.ndarray:
        return self._gaussian(self.state.theta_hat, self.state.chol_H, math.sqrt(2.0) * self.radius)

    def _indices(self, features: RoundFeatures) -> PolicyDecision:
        state = self.state
        beta_t = self.radius
        lcb, prices = self.lcb_prices(features, beta_t, math.sqrt(self.hp.C))

        ts_v = np.max(features.x @ self.sample_valuation_parameters(), axis=1)
        optimism = ts_v - features.x @ state.theta_hat[: state.dim]

        rows = z_matrix(features, np.arange(features.n_arms), prices)
        ts_u = np.max(rows @ self.sample_parameters(), axis=1) + self.utility_scale * optimism

        # Arms with a negative sampled valuation get zero reward and are never offered.
        offer = self.assort(ts_v, ts_u, prices)
        return PolicyDecision(offer, lcb, ts_v, ts_u, state.tau)
