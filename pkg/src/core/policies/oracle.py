"""
Clairvoyant per-round decision (S*, p*) under known theta*.

For a fixed assortment the optimal censored-MNL prices have the form
p_i(R) = min(v_i, R + 1/alpha_i), where R is the optimal revenue, the root of

    sum_{i in S} (p_i(R) - R) exp(v_i - alpha_i p_i(R)) = R.

`method="enumerate"` solves this for every |S| <= K and cross-checks each
assortment with a per-arm grid search. `method="threshold"` solves the joint
problem directly: the optimal revenue is the root of
sum of the K largest positive per-arm terms minus R.
"""
import itertools
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import InputError
from ..logging_utils import get_logger
from ..model.choice import RoundFeatures, Theta

logger = get_logger(__name__)

ORACLE_MAX_ARMS = 20
_BISECTION_TOL = 1e-10
_MAX_GRID_SWEEPS = 50


@dataclass(eq=False)
class OracleDecision:
    assortment: Tuple[int, ...]
    prices: np.ndarray
    value: float


def _optimal_prices(revenue: float, values: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        markup = np.where(alphas > 0, revenue + 1.0 / np.where(alphas > 0, alphas, 1.0), np.inf)
    return np.minimum(values, markup)


def _arm_terms(revenue: float, values: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    prices = _optimal_prices(revenue, values, alphas)
    return (prices - revenue) * np.exp(values - alphas * prices)


def uncensored_revenue(prices: np.ndarray, values: np.ndarray, alphas: np.ndarray) -> float:
    """Revenue of offering every given arm at prices p <= v (no censoring)."""
    if prices.size == 0:
        return 0.0
    utilities = values - alphas * prices
    shift = max(0.0, float(utilities.max()))
    weights = np.exp(utilities - shift)
    return float(np.dot(prices, weights) / (np.exp(-shift) + weights.sum()))


def _bisect_revenue(excess, upper: float) -> float:
    lo, hi = 0.0, upper
    while hi - lo > _BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fixed_point_prices(values: np.ndarray, alphas: np.ndarray) -> Tuple[np.ndarray, float]:
    """Optimal prices and revenue when every given arm must be offered."""
    if values.size == 0 or values.max() <= 0:
        return np.zeros_like(values), 0.0
    revenue = _bisect_revenue(lambda r: _arm_terms(r, values, alphas).sum() - r, float(values.max()))
    prices = _optimal_prices(revenue, values, alphas)
    return prices, uncensored_revenue(prices, values, alphas)


def grid_search_prices(values: np.ndarray, alphas: np.ndarray, grid: int) -> Tuple[np.ndarray, float]:
    """Coordinate-wise search over `grid` evenly spaced prices on [0, v_i] per arm."""
    grids = [np.linspace(0.0, v, grid) for v in values]
    prices = values.copy()
    best = uncensored_revenue(prices, values, alphas)
    for _ in range(_MAX_GRID_SWEEPS):
        improved = False
        for i, candidates in enumerate(grids):
            trial = np.repeat(prices[None, :], candidates.size, axis=0)
            trial[:, i] = candidates
            utilities = values[None, :] - alphas[None, :] * trial
            shift = max(0.0, float(utilities.max()))
            weights = np.exp(utilities - shift)
            revenue = (trial * weights).sum(axis=1) / (np.exp(-shift) + weights.sum(axis=1))
            j = int(np.argmax(revenue))
            if revenue[j] > best + 1e-15:
                best = float(revenue[j])
                prices[i] = candidates[j]
                improved = True
        if not improved:
            break
    return prices, best


def _enumerate(values: np.ndarray, alphas: np.ndarray, K: int, grid: int) -> OracleDecision:
    # Arms with v < 0 are censored at every nonnegative price.
    eligible = [int(i) for i in np.flatnonzero(values >= 0)]
    best = OracleDecision((), np.zeros(0), 0.0)
    for size in range(1, min(K, len(eligible)) + 1):
        for subset in itertools.combinations(eligible, size):
            idx = np.asarray(subset)
            prices, value = fixed_point_prices(values[idx], alphas[idx])
            if grid > 0:
                grid_prices, grid_value = grid_search_prices(values[idx], alphas[idx], grid)
                if grid_value > value:
                    if grid_value > value + 1e-9:
                        logger.warning("Grid search beat the fixed point on %s: %s > %s", subset, grid_value, value)
                    prices, value = grid_prices, grid_value
            if value > best.value:
                best = OracleDecision(tuple(subset), prices, value)
    return best


def _threshold(values: np.ndarray, alphas: np.ndarray, K: int, grid: int) -> OracleDecision:
    if values.size == 0 or K == 0 or values.max() <= 0:
        return OracleDecision((), np.zeros(0), 0.0)

    def top(revenue: float) -> np.ndarray:
        terms = _arm_terms(revenue, values, alphas)
        positive = np.flatnonzero(terms > 0)
        return positive[np.argsort(-terms[positive], kind="stable")][:K]

    def excess(revenue: float) -> float:
        return float(_arm_terms(revenue, values, alphas)[top(revenue)].sum() - revenue)

    revenue = _bisect_revenue(excess, float(values.max()))
    best = OracleDecision((), np.zeros(0), 0.0)
    for r in (revenue - _BISECTION_TOL, revenue, revenue + _BISECTION_TOL):
        idx = np.sort(top(max(r, 0.0)))
        if idx.size == 0:
            continue
        prices, value = fixed_point_prices(values[idx], alphas[idx])
        if value > best.value:
            best = OracleDecision(tuple(int(i) for i in idx), prices, value)
    if grid > 0 and best.assortment:
        idx = np.asarray(best.assortment)
        grid_prices, grid_value = grid_search_prices(values[idx], alphas[idx], grid)
        if grid_value > best.value:
            best = OracleDecision(best.assortment, grid_prices, grid_value)
    return best


def oracle_decision(
    features: RoundFeatures,
    theta: Theta,
    K: int,
    grid: int = 200,
    method: str = "enumerate",
) -> OracleDecision:
    values = features.valuations(theta)
    alphas = features.sensitivities(theta)
    if method == "enumerate":
        if features.n_arms > ORACLE_MAX_ARMS:
            raise InputError(f"oracle enumeration limited to {ORACLE_MAX_ARMS} arms, got {features.n_arms}")
        return _enumerate(values, alphas, K, grid)
    if method == "threshold":
        return _threshold(values, alphas, K, grid)
    raise InputError(f"unknown oracle method '{method}'")
