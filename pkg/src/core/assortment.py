"""
Cardinality-constrained MNL assortment optimization:

    max_{|S| <= K} sum_{i in S} r_i e^{u_i} / (1 + sum_{j in S} e^{u_j})

solved exactly through the revenue fixed point, with an exhaustive
enumeration used as a reference.
"""
import itertools
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import InputError
from .logging_utils import get_logger

logger = get_logger(__name__)

BRUTE_FORCE_MAX_ARMS = 20
_MAX_BISECTIONS = 200


@dataclass(eq=False)
class AssortmentProblem:
    rewards: np.ndarray
    utilities: np.ndarray
    capacity: int

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float).reshape(-1)
        self.utilities = np.asarray(self.utilities, dtype=float).reshape(-1)
        if self.rewards.shape != self.utilities.shape:
            raise InputError("rewards and utilities must align")
        if not (np.all(np.isfinite(self.rewards)) and np.all(np.isfinite(self.utilities))):
            raise InputError("rewards and utilities must be finite")
        if np.any(self.rewards < 0):
            raise InputError("rewards must be nonnegative")
        if self.capacity < 0:
            raise InputError("capacity must be nonnegative")

    @property
    def n_arms(self) -> int:
        return self.rewards.shape[0]

    def shifted_weights(self) -> Tuple[np.ndarray, float]:
        """Weights e^{u - m} and the shift m = max(0, max u)."""
        shift = max(0.0, float(self.utilities.max())) if self.n_arms else 0.0
        return np.exp(self.utilities - shift), shift


def objective(assortment: Sequence[int], problem: AssortmentProblem) -> float:
    idx = np.asarray(list(assortment), dtype=int)
    if idx.size == 0:
        return 0.0
    weights, shift = problem.shifted_weights()
    w = weights[idx]
    return float(np.dot(problem.rewards[idx], w) / (np.exp(-shift) + w.sum()))


def _top_contributors(contributions: np.ndarray, capacity: int) -> np.ndarray:
    positive = np.flatnonzero(contributions > 0)
    # Stable sort over ascending indices breaks ties toward the lower index.
    ranked = positive[np.argsort(-contributions[positive], kind="stable")]
    return ranked[:capacity]


def solve(problem: AssortmentProblem) -> Tuple[Tuple[int, ...], float]:
    if problem.n_arms == 0 or problem.capacity == 0 or problem.rewards.max() <= 0:
        return (), 0.0

    weights, shift = problem.shifted_weights()
    outside = np.exp(-shift)
    rewards = problem.rewards

    # In shifted units the fixed point reads sum_S w_i (r_i - lam) = lam * outside.
    def excess(lam: float) -> float:
        contributions = weights * (rewards - lam)
        return float(contributions[_top_contributors(contributions, problem.capacity)].sum() - lam * outside)

    lo, hi = 0.0, float(rewards.max())
    mid = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        gap = excess(mid)
        if abs(gap) < 1e-10 * outside and hi - lo < 1e-13 * max(1.0, hi):
            break
        if gap > 0:
            lo = mid
        else:
            hi = mid

    best_set, best_value = (), 0.0
    for lam in (lo, mid, hi):
        contributions = weights * (rewards - lam)
        candidate = tuple(sorted(int(i) for i in _top_contributors(contributions, problem.capacity)))
        value = objective(candidate, problem)
        if value > best_value or (value == best_value and candidate < best_set):
            best_set, best_value = candidate, value

    if abs(best_value - mid) > 1e-9:
        logger.warning("Assortment exactness pass mismatch: objective=%s fixed point=%s", best_value, mid)
    return best_set, best_value


def brute_force(problem: AssortmentProblem) -> Tuple[Tuple[int, ...], float]:
    n = problem.n_arms
    if n > BRUTE_FORCE_MAX_ARMS:
        raise InputError(f"brute force limited to {BRUTE_FORCE_MAX_ARMS} arms, got {n}")
    weights, shift = problem.shifted_weights()
    outside = np.exp(-shift)

    best_value = 0.0
    candidates = [((), 0.0)]
    for size in range(1, min(problem.capacity, n) + 1):
        combos = np.array(list(itertools.combinations(range(n), size)), dtype=int)
        w = weights[combos]
        values = (problem.rewards[combos] * w).sum(axis=1) / (outside + w.sum(axis=1))
        top = float(values.max())
        if top < best_value - 1e-12:
            continue
        best_value = max(best_value, top)
        for row in np.flatnonzero(values >= top - 1e-12):
            candidates.append((tuple(int(i) for i in combos[row]), float(values[row])))

    tolerance = 1e-12 * max(1.0, best_value)
    winners = [s for s, v in candidates if v >= best_value - tolerance]
    best_set = min(winners)
    return best_set, objective(best_set, problem)
