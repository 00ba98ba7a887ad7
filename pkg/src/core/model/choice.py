"""
Censored multinomial logit (C-MNL) environment.

Arms are indexed 0..N-1. A ChoiceDistribution keeps the outside option
(no purchase) at slot 0 and the offered arms at slots 1..|S| in offer order.
"""
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import InputError
from .noise import ActivationNoise

_NORM_SLACK = 1e-12


@dataclass(eq=False)
class Theta:
    """Latent parameters theta* = [theta_v; theta_alpha]."""
    v_part: np.ndarray
    alpha_part: np.ndarray

    def __post_init__(self):
        self.v_part = np.asarray(self.v_part, dtype=float)
        self.alpha_part = np.asarray(self.alpha_part, dtype=float)
        if self.v_part.shape != self.alpha_part.shape or self.v_part.ndim != 1:
            raise InputError("theta blocks must be vectors of equal length")
        if not (np.all(np.isfinite(self.v_part)) and np.all(np.isfinite(self.alpha_part))):
            raise InputError("theta must be finite")
        if np.linalg.norm(self.v_part) > 1 + _NORM_SLACK or np.linalg.norm(self.alpha_part) > 1 + _NORM_SLACK:
            raise InputError("theta blocks must have l2 norm <= 1")

    @property
    def dim(self) -> int:
        return self.v_part.shape[0]

    @property
    def theta_star(self) -> np.ndarray:
        return np.concatenate([self.v_part, self.alpha_part])

    @classmethod
    def from_stacked(cls, vector: Sequence[float]) -> "Theta":
        vector = np.asarray(vector, dtype=float)
        d = vector.shape[0] // 2
        return cls(vector[:d], vector[d:])


@dataclass(eq=False)
class RoundFeatures:
    """Per-round valuation features x (N x d) and sensitivity features w (N x d)."""
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.w = np.atleast_2d(np.asarray(self.w, dtype=float))
        if self.x.shape != self.w.shape:
            raise InputError("x and w must have the same shape")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.w))):
            raise InputError("features must be finite")

    @property
    def n_arms(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def valuations(self, theta: Theta) -> np.ndarray:
        return self.x @ theta.v_part

    def sensitivities(self, theta: Theta) -> np.ndarray:
        return self.w @ theta.alpha_part


@dataclass(eq=False)
class Offer:
    """An assortment S (ordered arm indices) with aligned prices."""
    assortment: Tuple[int, ...] = ()
    prices: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.assortment = tuple(int(i) for i in self.assortment)
        self.prices = np.asarray(self.prices, dtype=float).reshape(-1)
        if len(set(self.assortment)) != len(self.assortment):
            raise InputError("assortment contains duplicate arms")
        if self.prices.shape[0] != len(self.assortment):
            raise InputError("prices must align with the assortment")
        if not np.all(np.isfinite(self.prices)) or np.any(self.prices < 0):
            raise InputError("prices must be finite and nonnegative")

    def __len__(self) -> int:
        return len(self.assortment)

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self.assortment, dtype=int)

    def validate_against(self, features: RoundFeatures, capacity: Optional[int] = None) -> None:
        if any(i < 0 or i >= features.n_arms for i in self.assortment):
            raise InputError("assortment refers to an unknown arm")
        if capacity is not None and len(self.assortment) > capacity:
            raise InputError(f"assortment larger than capacity {capacity}")


@dataclass(eq=False)
class ChoiceDistribution:
    """Probabilities over {outside} + offered arms; outside at slot 0."""
    probs: np.ndarray

    @property
    def outside(self) -> float:
        return float(self.probs[0])

    def arm_probability(self, position: int) -> float:
        """Probability of the arm at `position` in the offer (0-based)."""
        return float(self.probs[position + 1])


def z_vector(x_i: Sequence[float], w_i: Sequence[float], p: float) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=float)
    w_i = np.asarray(w_i, dtype=float)
    if not (np.all(np.isfinite(x_i)) and np.all(np.isfinite(w_i)) and np.isfinite(p)):
        raise InputError("z_vector inputs must be finite")
    if p < 0:
        raise InputError("price must be nonnegative")
    return np.concatenate([x_i, -p * w_i])


def z_matrix(features: RoundFeatures, indices: Sequence[int], prices: Sequence[float]) -> np.ndarray:
    """Rows z_i(p_i) for the given arms, shape (len(indices), 2d)."""
    idx = np.asarray(indices, dtype=int)
    prices = np.asarray(prices, dtype=float)
    return np.hstack([features.x[idx], -prices[:, None] * features.w[idx]])


def _softmax_with_outside(utilities: np.ndarray, active: np.ndarray) -> np.ndarray:
    # Max-subtracted so large prices or utilities never overflow.
    shift = max(0.0, float(np.max(utilities[active]))) if np.any(active) else 0.0
    weights = np.where(active, np.exp(np.where(active, utilities, 0.0) - shift), 0.0)
    outside = np.exp(-shift)
    denom = outside + weights.sum()
    return np.concatenate([[outside / denom], weights / denom])


def _offer_utilities(features: RoundFeatures, theta: Theta, offer: Offer) -> Tuple[np.ndarray, np.ndarray]:
    # Sliced from the full products so an arm priced at exactly v stays active.
    idx = offer.indices
    values = features.valuations(theta)[idx]
    alphas = features.sensitivities(theta)[idx]
    return values - alphas * offer.prices, values


def choice_probabilities(
    features: RoundFeatures,
    theta: Theta,
    offer: Offer,
    noise: Optional[Sequence[float]] = None,
) -> ChoiceDistribution:
    offer.validate_against(features)
    utilities, values = _offer_utilities(features, theta, offer)
    if noise is None:
        thresholds = values
    else:
        zeta = np.asarray(noise, dtype=float)
        if zeta.shape != (len(offer),):
            raise InputError("one noise realization is required per offered arm")
        thresholds = np.maximum(values + zeta, 0.0)
    active = offer.prices <= thresholds
    return ChoiceDistribution(_softmax_with_outside(utilities, active))


def smooth_choice_probabilities(features: RoundFeatures, theta_any: Sequence[float], offer: Offer) -> ChoiceDistribution:
    """Choice probabilities with every activation indicator forced to 1."""
    offer.validate_against(features)
    utilities = z_matrix(features, offer.assortment, offer.prices) @ np.asarray(theta_any, dtype=float)
    return ChoiceDistribution(_softmax_with_outside(utilities, np.ones(len(offer), dtype=bool)))


def sample_choice(dist: ChoiceDistribution, rng: np.random.Generator) -> int:
    """Draw a slot index from `dist` (0 means the outside option)."""
    cumulative = np.cumsum(dist.probs)
    draw = rng.random() * cumulative[-1]
    return int(min(np.searchsorted(cumulative, draw, side="right"), len(cumulative) - 1))


def _revenue_given_mask(prices: np.ndarray, utilities: np.ndarray, active: np.ndarray) -> float:
    probs = _softmax_with_outside(utilities, active)
    return float(np.dot(prices, probs[1:]))


def expected_revenue(
    features: RoundFeatures,
    theta: Theta,
    offer: Offer,
    noise_model: Optional[ActivationNoise] = None,
) -> float:
    offer.validate_against(features)
    if len(offer) == 0:
        return 0.0
    utilities, values = _offer_utilities(features, theta, offer)
    if noise_model is None or noise_model.c == 0:
        return _revenue_given_mask(offer.prices, utilities, offer.prices <= values)

    # Activation of arm i is independent across arms: P(p_i <= (v_i + zeta_i)^+).
    activation = np.where(offer.prices == 0, 1.0, noise_model.survival(offer.prices - values))
    certain = activation >= 1.0
    uncertain = np.flatnonzero((activation > 0.0) & (activation < 1.0))
    if uncertain.size > noise_model.max_enumerated_arms:
        raise InputError(f"{uncertain.size} uncertain arms exceed the exact enumeration limit")

    total = 0.0
    for pattern in itertools.product((False, True), repeat=uncertain.size):
        mask = certain.copy()
        weight = 1.0
        for arm, on in zip(uncertain, pattern):
            mask[arm] = on
            weight *= activation[arm] if on else 1.0 - activation[arm]
        if weight > 0.0:
            total += weight * _revenue_given_mask(offer.prices, utilities, mask)
    return total
