"""
Per-round MNL negative log-likelihood f_t, its gradient g_t and Gram
(Hessian) matrices G_t, G_{v,t}. All use the smooth choice probability,
i.e. the C-MNL softmax with every activation indicator set to 1.
"""
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

from ..errors import InputError
from ..model.choice import Offer, RoundFeatures, smooth_choice_probabilities, z_matrix

Outcome = Union[int, Sequence[float]]


def outcome_index(y: Outcome, n_offered: int) -> int:
    """Accept a slot index (0 = outside) or a one-hot vector over {outside} + S."""
    if np.isscalar(y):
        index = int(y)
    else:
        onehot = np.asarray(y, dtype=float).reshape(-1)
        if onehot.shape[0] != n_offered + 1 or onehot.sum() != 1 or np.count_nonzero(onehot) != 1:
            raise InputError("outcome must be one-hot over the outside option and the offered arms")
        index = int(np.flatnonzero(onehot)[0])
    if index < 0 or index > n_offered:
        raise InputError(f"outcome slot {index} out of range")
    return index


def negative_log_likelihood(theta: Sequence[float], offer: Offer, features: RoundFeatures, y: Outcome) -> float:
    index = outcome_index(y, len(offer))
    utilities = z_matrix(features, offer.assortment, offer.prices) @ np.asarray(theta, dtype=float)
    logits = np.concatenate([[0.0], utilities])
    return float(logsumexp(logits) - logits[index])


def gradient(theta: Sequence[float], offer: Offer, features: RoundFeatures, y: Outcome) -> np.ndarray:
    index = outcome_index(y, len(offer))
    theta = np.asarray(theta, dtype=float)
    if len(offer) == 0:
        return np.zeros_like(theta)
    z = z_matrix(features, offer.assortment, offer.prices)
    residual = smooth_choice_probabilities(features, theta, offer).probs[1:].copy()
    if index > 0:
        residual[index - 1] -= 1.0
    return z.T @ residual


def _covariance(rows: np.ndarray, probs: np.ndarray) -> np.ndarray:
    mean = rows.T @ probs
    matrix = (rows * probs[:, None]).T @ rows - np.outer(mean, mean)
    return 0.5 * (matrix + matrix.T)


def gram(theta: Sequence[float], offer: Offer, features: RoundFeatures) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if len(offer) == 0:
        return np.zeros((theta.shape[0], theta.shape[0]))
    probs = smooth_choice_probabilities(features, theta, offer).probs[1:]
    return _covariance(z_matrix(features, offer.assortment, offer.prices), probs)


def gram_v(theta: Sequence[float], offer: Offer, features: RoundFeatures) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    d = features.dim
    if len(offer) == 0:
        return np.zeros((d, d))
    probs = smooth_choice_probabilities(features, theta, offer).probs[1:]
    return _covariance(features.x[offer.indices], probs)
