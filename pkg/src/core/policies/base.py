from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from ..assortment import AssortmentProblem, solve
from ..errors import ContractError
from ..estimation import (
    EstimatorState,
    HyperParams,
    advance_designs,
    gradient,
    gram,
    gram_v,
    maybe_refresh_pricing_estimate,
    omd_step,
)
from ..logging_utils import get_logger
from ..model.choice import Offer, RoundFeatures, smooth_choice_probabilities, z_matrix

logger = get_logger(__name__)


@dataclass(eq=False)
class PolicyDecision:
    """
    What a policy offered in one round, plus the indices it was built from.

    `ucb_v` holds the UCB valuation (or the Thompson valuation for TS
    policies); index vectors are None for policies that do not compute them.
    """
    offer: Offer
    lcb_v: Optional[np.ndarray] = None
    ucb_v: Optional[np.ndarray] = None
    utility_index: Optional[np.ndarray] = None
    tau_at_decision: int = 0
    max_design_norm: float = float("nan")
    kappa_contribution: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "assortment": list(self.offer.assortment),
            "prices": self.offer.prices.tolist(),
            "tau": self.tau_at_decision,
            "max_design_norm": self.max_design_norm,
            "kappa_contribution": self.kappa_contribution,
        }


class Policy(ABC):
    """
    Round protocol shared by every policy: `act` once, then `observe` once.
    """
    name = "policy"

    def __init__(self, hp: HyperParams, rng: Optional[np.random.Generator] = None):
        self.hp = hp
        self.rng = rng if rng is not None else np.random.default_rng()
        self.t = 0
        self.fit_warning = False
        self._pending: Optional[Tuple[RoundFeatures, PolicyDecision]] = None

    def act(self, features: RoundFeatures) -> PolicyDecision:
        if self._pending is not None:
            raise ContractError(f"{self.name}: act called twice without observe")
        self.t += 1
        decision = self._decide(features)
        decision.offer.validate_against(features, self.hp.K)
        self._pending = (features, decision)
        return decision

    def observe(self, offer: Offer, chosen: int) -> None:
        """`chosen` is the choice slot: 0 for no purchase, k for offer.assortment[k-1]."""
        if self._pending is None:
            raise ContractError(f"{self.name}: observe called without a preceding act")
        features, decision = self._pending
        if tuple(offer.assortment) != decision.offer.assortment:
            raise ContractError(f"{self.name}: observed offer differs from the acted one")
        if chosen < 0 or chosen > len(offer):
            raise ContractError(f"{self.name}: choice slot {chosen} out of range")
        self._pending = None
        self._record(features, offer, int(chosen))

    def good_event(self, theta_star: Sequence[float]) -> float:
        """1.0 if the confidence event holds now, 0.0 if not, NaN without an estimator."""
        return float("nan")

    @abstractmethod
    def _decide(self, features: RoundFeatures) -> PolicyDecision:
        pass

    def _record(self, features: RoundFeatures, offer: Offer, chosen: int) -> None:
        pass


def _weighted_norms(chol: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """||row||_{A^{-1}} for every row, where chol is the lower Cholesky factor of A."""
    solved = solve_triangular(chol, rows.T, lower=True, check_finite=False)
    return np.sqrt(np.sum(solved * solved, axis=0))


class EstimatorPolicy(Policy):
    """
    Base for the OMD-driven policies. Each round first folds in the previous
    round's feedback: advance designs, take the OMD step, check the
    determinant trigger. Subclasses then build their indices in `_indices`.
    """

    def __init__(self, hp: HyperParams, rng: Optional[np.random.Generator] = None):
        super().__init__(hp, rng)
        self.state = EstimatorState.initial(hp)
        self._feedback: Optional[Tuple[RoundFeatures, Offer, int]] = None

    def inject(self, theta: Sequence[float], freeze: bool = True) -> None:
        self.state.inject(theta, freeze=freeze)

    @property
    def radius(self) -> float:
        return self.state.radius(self.hp)

    def _fold_feedback(self) -> None:
        if self._feedback is None:
            return
        features, offer, chosen = self._feedback
        self._feedback = None
        state = self.state
        previous = state.theta_hat
        G = gram(previous, offer, features)
        G_v = gram_v(previous, offer, features)
        g = gradient(previous, offer, features, chosen)
        advance_designs(state, G, G_v, self.hp.eta)
        if not state.frozen:
            state.theta_hat = omd_step(state, self.hp.eta, g)

    def _decide(self, features: RoundFeatures) -> PolicyDecision:
        self._fold_feedback()
        maybe_refresh_pricing_estimate(self.state, self.hp, self.t)
        decision = self._indices(features)
        self._diagnose(features, decision)
        return decision

    def _record(self, features: RoundFeatures, offer: Offer, chosen: int) -> None:
        self._feedback = (features, offer, chosen)

    def valuation_norms(self, features: RoundFeatures) -> np.ndarray:
        return _weighted_norms(self.state.chol_H_v, features.x)

    def design_norms(self, rows: np.ndarray) -> np.ndarray:
        return _weighted_norms(self.state.chol_H, rows)

    def lcb_prices(self, features: RoundFeatures, beta_t: float, scale: float, shift: float = 0.0):
        """LCB valuation x^T theta_v(tau) - scale*beta*||x|| and the price (lcb - shift)^+."""
        lcb = features.x @ self.state.theta_v_frozen - scale * beta_t * self.valuation_norms(features)
        return lcb, np.maximum(lcb - shift, 0.0)

    def assort(self, rewards: np.ndarray, utilities: np.ndarray, prices: np.ndarray) -> Offer:
        problem = AssortmentProblem(np.maximum(rewards, 0.0), utilities, self.hp.K)
        assortment, _ = solve(problem)
        return Offer(assortment, prices[list(assortment)])

    def good_event(self, theta_star: Sequence[float]) -> float:
        error = self.state.theta_hat - np.asarray(theta_star, dtype=float)
        return float(self.state.h_norm(error) <= self.radius)

    def _diagnose(self, features: RoundFeatures, decision: PolicyDecision) -> None:
        offer = decision.offer
        if len(offer) == 0:
            return
        rows = z_matrix(features, offer.assortment, offer.prices)
        decision.max_design_norm = float(np.max(self.design_norms(rows) ** 2))
        probs = smooth_choice_probabilities(features, self.state.theta_hat, offer).probs
        decision.kappa_contribution = float(np.min(probs[1:]) * probs[0])

    @abstractmethod
    def _indices(self, features: RoundFeatures) -> PolicyDecision:
        pass
