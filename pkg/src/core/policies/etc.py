"""
Explore-then-commit baseline: random exploration for ceil(T^(2/3)) rounds,
a one-shot ridge-regularised likelihood fit, then greedy exploitation.
"""
import math
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from ..assortment import AssortmentProblem, solve
from ..errors import InputError
from ..estimation import HyperParams
from ..logging_utils import get_logger
from ..model.choice import Offer, RoundFeatures, z_matrix
from .base import Policy, PolicyDecision

logger = get_logger(__name__)

EXPLORE_MODES = ("zero", "uniform")


def exploration_length(T: int) -> int:
    """Smallest n with n^3 >= T^2, i.e. ceil(T^(2/3)) without float drift."""
    n = max(1, int(math.ceil(T ** (2.0 / 3.0))))
    while n > 1 and (n - 1) ** 3 >= T * T:
        n -= 1
    while n ** 3 < T * T:
        n += 1
    return n


class ETCPolicy(Policy):
    name = "etc"

    def __init__(
        self,
        hp: HyperParams,
        rng: Optional[np.random.Generator] = None,
        explore: str = "zero",
        ridge: float = 1.0,
        gtol: float = 1e-6,
        max_iter: int = 1000,
    ):
        super().__init__(hp, rng)
        if explore not in EXPLORE_MODES:
            raise InputError(f"ETC exploration mode must be one of {EXPLORE_MODES}")
        self.explore = explore
        self.ridge = ridge
        self.gtol = gtol
        self.max_iter = max_iter
        self.switch_round = exploration_length(hp.T)
        self.theta_hat: Optional[np.ndarray] = None
        self._rows: List[np.ndarray] = []
        self._choices: List[int] = []

    @property
    def exploring(self) -> bool:
        return self.t <= self.switch_round

    def _decide(self, features: RoundFeatures) -> PolicyDecision:
        if self.exploring:
            size = min(self.hp.K, features.n_arms)
            assortment = np.sort(self.rng.choice(features.n_arms, size=size, replace=False))
            if self.explore == "zero":
                prices = np.zeros(size)
            else:
                prices = self.rng.uniform(0.0, 1.0, size)
            return PolicyDecision(Offer(tuple(assortment), prices))

        if self.theta_hat is None:
            self.theta_hat = self.fit()
        d = features.dim
        values = features.x @ self.theta_hat[:d]
        prices = np.maximum(values, 0.0)
        utilities = z_matrix(features, np.arange(features.n_arms), prices) @ self.theta_hat
        assortment, _ = solve(AssortmentProblem(prices, utilities, self.hp.K))
        return PolicyDecision(Offer(assortment, prices[list(assortment)]), ucb_v=values, utility_index=utilities)

    def _record(self, features: RoundFeatures, offer: Offer, chosen: int) -> None:
        if self.t <= self.switch_round:
            self._rows.append(z_matrix(features, offer.assortment, offer.prices))
            self._choices.append(chosen)

    def _objective(self, theta: np.ndarray):
        loss = 0.5 * self.ridge * float(theta @ theta)
        grad = self.ridge * theta
        for rows, chosen in zip(self._rows, self._choices):
            logits = np.concatenate([[0.0], rows @ theta])
            loss += float(logsumexp(logits) - logits[chosen])
            residual = softmax(logits)[1:]
            if chosen > 0:
                residual[chosen - 1] -= 1.0
            grad = grad + rows.T @ residual
        return loss, grad

    def fit(self) -> np.ndarray:
        start = np.zeros(2 * self.hp.d)
        result = minimize(
            self._objective,
            start,
            jac=True,
            method="L-BFGS-B",
            options={"gtol": self.gtol, "maxiter": self.max_iter},
        )
        if not result.success:
            self.fit_warning = True
            logger.warning("ETC fit did not converge after %s iterations: %s", result.nit, result.message)
        logger.debug("ETC fit on %s rounds: loss=%.6f", len(self._rows), result.fun)
        return np.asarray(result.x, dtype=float)
