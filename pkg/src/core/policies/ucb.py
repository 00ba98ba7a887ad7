import math
from dataclasses import replace
from typing import Optional

import numpy as np

from ..estimation import HyperParams
from ..model.choice import RoundFeatures, z_matrix
from .base import EstimatorPolicy, PolicyDecision


class UCBAPolicy(EstimatorPolicy):
    """
    UCB assortment with LCB pricing.

    Prices are (v_lcb - c)^+ and the utility index is inflated by c, where
    c is the activation-noise half-width; c = 0 gives the noiseless variant.
    """
    name = "ucba-lcbp"

    def __init__(self, hp: HyperParams, rng: Optional[np.random.Generator] = None, price_shift: float = 0.0):
        super().__init__(hp, rng)
        self.price_shift = float(price_shift)

    def _indices(self, features: RoundFeatures) -> PolicyDecision:
        state = self.state
        beta_t = self.radius
        root_c = math.sqrt(self.hp.C)
        x_norms = self.valuation_norms(features)

        lcb, prices = self.lcb_prices(features, beta_t, root_c, self.price_shift)
        ucb = features.x @ state.theta_hat[: state.dim] + beta_t * x_norms

        rows = z_matrix(features, np.arange(features.n_arms), prices)
        utility = (
            rows @ state.theta_hat
            + beta_t * self.design_norms(rows)
            + 2.0 * root_c * beta_t * x_norms
            + self.price_shift
        )
        offer = self.assort(ucb, utility, prices)
        return PolicyDecision(offer, lcb, ucb, utility, state.tau)


class UCBALCBPPolicy(UCBAPolicy):
    name = "ucba-lcbp"

    def __init__(self, hp: HyperParams, rng: Optional[np.random.Generator] = None):
        super().__init__(hp, rng, price_shift=0.0)


class UCBAELCBPPolicy(UCBAPolicy):
    """Noise-robust variant: the determinant trigger is fixed at C = 2."""
    name = "ucba-elcbp"

    def __init__(self, hp: HyperParams, rng: Optional[np.random.Generator] = None, noise_c: float = 0.0):
        super().__init__(replace(hp, C=2.0), rng, price_shift=noise_c)
