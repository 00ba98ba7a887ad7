"""
Invariant and oracle checks run by `validate`.

Each check returns a CheckResult; the suite passes only if every check does.
"""
import itertools
import math
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .assortment import AssortmentProblem, brute_force, solve
from .errors import InputError
from .estimation import HyperParams, empirical_kappa, gradient, gram, negative_log_likelihood
from .export import write_trace_csv
from .harness import ExperimentConfig, replicate, run_episode
from .logging_utils import get_logger
from .model import (
    Instance,
    Offer,
    RoundFeatures,
    choice_probabilities,
    expected_revenue,
    generate_instance,
    sample_choice,
)
from .policies import UCBALCBPPolicy, grid_search_prices, oracle_decision

logger = get_logger(__name__)

FAULTS = ("gradient",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "seconds": self.seconds}


def finite_difference_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Centered-difference gradient of a scalar function."""
    grad = np.zeros_like(x, dtype=float)
    for j in range(x.shape[0]):
        step = np.zeros_like(x, dtype=float)
        step[j] = eps
        grad[j] = (func(x + step) - func(x - step)) / (2 * eps)
    return grad


def finite_difference_jacobian(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Centered-difference Jacobian of a vector function; column j is d func / d x_j."""
    columns = []
    for j in range(x.shape[0]):
        step = np.zeros_like(x, dtype=float)
        step[j] = eps
        columns.append((func(x + step) - func(x - step)) / (2 * eps))
    return np.column_stack(columns)


def random_round(rng: np.random.Generator, n_arms: int, dim: int) -> RoundFeatures:
    return RoundFeatures(rng.uniform(0.0, 1.0, (n_arms, dim)), rng.uniform(0.0, 1.0, (n_arms, dim)))


def _random_likelihood_case(rng: np.random.Generator):
    n_arms, dim = int(rng.integers(2, 8)), int(rng.integers(1, 5))
    features = random_round(rng, n_arms, dim)
    size = int(rng.integers(1, min(4, n_arms) + 1))
    offer = Offer(tuple(rng.choice(n_arms, size=size, replace=False)), rng.uniform(0.0, 1.0, size))
    theta = rng.normal(0.0, 1.0, 2 * dim)
    y = int(rng.integers(0, size + 1))
    return features, offer, theta, y


def check_gradient(trials: int, fault: Optional[str] = None) -> Tuple[bool, str]:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(trials):
        features, offer, theta, y = _random_likelihood_case(rng)
        analytic = gradient(theta, offer, features, y)
        if fault == "gradient":
            analytic = analytic * 1.01 + 1e-3
        numeric = finite_difference_gradient(lambda th: negative_log_likelihood(th, offer, features, y), theta)
        error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-2)
        worst = max(worst, float(error))
    return worst < 1e-5, f"max relative error {worst:.2e} over {trials} cases"


def check_hessian(trials: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(trials):
        features, offer, theta, y = _random_likelihood_case(rng)
        numeric = finite_difference_jacobian(lambda th: gradient(th, offer, features, y), theta)
        worst = max(worst, float(np.max(np.abs(gram(theta, offer, features) - numeric))))
    return worst < 1e-4, f"max entrywise error {worst:.2e} over {trials} cases"


def check_gram_psd(trials: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(103)
    lowest = np.inf
    for _ in range(trials):
        features, offer, theta, _ = _random_likelihood_case(rng)
        lowest = min(lowest, float(np.linalg.eigvalsh(gram(theta, offer, features))[0]))
    return lowest >= -1e-10, f"smallest eigenvalue {lowest:.2e} over {trials} cases"


def check_assortment(trials: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(trials):
        n_arms = int(rng.integers(1, 13))
        problem = AssortmentProblem(rng.uniform(0, 2, n_arms), rng.uniform(-3, 3, n_arms), int(rng.integers(1, 6)))
        worst = max(worst, abs(solve(problem)[1] - brute_force(problem)[1]))
    return worst < 1e-9, f"max value gap {worst:.2e} over {trials} problems"


def _grid_oracle_value(values: np.ndarray, alphas: np.ndarray, K: int, grid: int) -> float:
    eligible = [int(i) for i in np.flatnonzero(values >= 0)]
    best = 0.0
    for size in range(1, min(K, len(eligible)) + 1):
        for subset in itertools.combinations(eligible, size):
            idx = np.asarray(subset)
            best = max(best, grid_search_prices(values[idx], alphas[idx], grid)[1])
    return best


def check_oracle(trials: int, grid: int = 200) -> Tuple[bool, str]:
    rng = np.random.default_rng(105)
    worst_grid, worst_methods = 0.0, 0.0
    interior = 0
    for _ in range(trials):
        n_arms, dim, K = int(rng.integers(1, 9)), int(rng.integers(1, 5)), int(rng.integers(1, 4))
        theta = generate_instance(n_arms, dim, int(rng.integers(0, 2 ** 32))).theta
        base = random_round(rng, n_arms, dim)
        # Scaled features put some valuations above R + 1/alpha, where prices are strictly interior.
        features = RoundFeatures(base.x * rng.uniform(1.0, 2.5), base.w * rng.uniform(1.0, 2.0))
        exact = oracle_decision(features, theta, K, grid=0, method="enumerate")
        fast = oracle_decision(features, theta, K, grid=0, method="threshold")
        reference = _grid_oracle_value(features.valuations(theta), features.sensitivities(theta), K, grid)
        worst_grid = max(worst_grid, abs(exact.value - reference))
        worst_methods = max(worst_methods, abs(exact.value - fast.value))
        values = features.valuations(theta)[list(exact.assortment)]
        interior += int(np.any(exact.prices < values - 1e-9))
    passed = worst_grid < 1e-3 and worst_methods < 1e-9 and interior > 0
    return passed, (
        f"fixed point vs grid {worst_grid:.2e}, enumerate vs threshold {worst_methods:.2e}, "
        f"{interior}/{trials} optima with interior prices"
    )


def _play(policy, instance: Instance, T: int, rng: np.random.Generator, inspect: Callable) -> None:
    for features in instance.feature_stream(T):
        decision = policy.act(features)
        inspect(features, decision)
        chosen = sample_choice(choice_probabilities(features, instance.theta, decision.offer), rng)
        policy.observe(decision.offer, chosen)


def check_good_event(T: int) -> Tuple[bool, str]:
    instance = generate_instance(10, 4, 106)
    hp = HyperParams(d=4, K=5, N=10, T=T)
    policy = UCBALCBPPolicy(hp, np.random.default_rng(1))
    policy.inject(instance.theta.theta_star, freeze=True)
    violations = {"bounds": 0, "censored": 0}

    def inspect(features: RoundFeatures, decision) -> None:
        v = features.valuations(instance.theta)
        if np.any(np.maximum(decision.lcb_v, 0.0) > v + 1e-12) or np.any(v > decision.ucb_v + 1e-12):
            violations["bounds"] += 1
        offer = decision.offer
        if np.any(offer.prices > v[offer.indices]):
            violations["censored"] += 1

    _play(policy, instance, T, np.random.default_rng(2), inspect)
    passed = violations["bounds"] == 0 and violations["censored"] == 0
    return passed, f"{violations['bounds']} bound violations, {violations['censored']} censored offers over {T} rounds"


def check_zero_radius(T: int) -> Tuple[bool, str]:
    instance = generate_instance(10, 4, 107)
    hp = HyperParams(d=4, K=5, N=10, T=T, C1=0.0)
    policy = UCBALCBPPolicy(hp, np.random.default_rng(3))
    policy.inject(instance.theta.theta_star, freeze=True)
    worst = [0.0]

    def inspect(features: RoundFeatures, decision) -> None:
        v = features.valuations(instance.theta)
        a = features.sensitivities(instance.theta)
        prices = np.maximum(v, 0.0)
        _, target = solve(AssortmentProblem(prices, v - a * prices, hp.K))
        achieved = expected_revenue(features, instance.theta, decision.offer)
        worst[0] = max(worst[0], abs(achieved - target))

    _play(policy, instance, T, np.random.default_rng(4), inspect)
    return worst[0] < 1e-9, f"max gap to the p = v optimum {worst[0]:.2e} over {T} rounds"


def _diagnostic_config(T: int) -> ExperimentConfig:
    return ExperimentConfig(N=10, K=5, d=4, T=T, algorithm="ucba-lcbp", replications=1, base_seed=108)


def check_elliptical_potential(T: int) -> Tuple[bool, str]:
    config = _diagnostic_config(T)
    trace = run_episode(config)
    hp = config.hyperparams()
    kappa = empirical_kappa(trace.kappa_contribution)
    potential = float(np.nansum(trace.max_design_norm))
    bound = 4 * hp.d / kappa * math.log(1 + 2 * T * hp.K / (hp.d * hp.lam))
    return potential <= bound, f"potential {potential:.4g} <= bound {bound:.4g} (kappa {kappa:.3g})"


def check_update_count(T: int) -> Tuple[bool, str]:
    config = _diagnostic_config(T)
    trace = run_episode(config)
    hp = config.hyperparams()
    tau = int(trace.tau[-1])
    limit = 2 * hp.d * math.log2(1 + 2 * T * hp.K / (hp.d * hp.lam)) + 2
    growth = trace.logdet_at_last_update - 2 * hp.d * math.log(hp.lam)
    by_construction = (tau - 1) * math.log(hp.C) <= growth + 1e-9
    refreshed = tau > 1
    return refreshed and tau <= limit and by_construction, f"1 < tau_T={tau} <= {limit:.2f}, log det growth {growth:.3f}"


def check_determinism(T: int) -> Tuple[bool, str]:
    config = ExperimentConfig(N=6, K=3, d=2, T=T, algorithm="tsa-lcbp", replications=3, base_seed=109)
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, parallel in enumerate((False, False, True)):
            path = write_trace_csv(replicate(config, parallel=parallel, max_workers=3), os.path.join(tmp, f"{i}.csv"))
            with open(path, "rb") as f:
                outputs.append(f.read())
    identical = all(out == outputs[0] for out in outputs)
    return identical, "sequential, repeated and parallel traces are byte-identical" if identical else "traces differ"


def check_per_round_cost(T: int, window: int) -> Tuple[bool, str]:
    instance = generate_instance(10, 4, 110)
    hp = HyperParams(d=4, K=5, N=10, T=T)
    policy = UCBALCBPPolicy(hp, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    seconds = np.zeros(T)
    for t, features in enumerate(instance.feature_stream(T)):
        tick = time.perf_counter()
        decision = policy.act(features)
        chosen = sample_choice(choice_probabilities(features, instance.theta, decision.offer), rng)
        policy.observe(decision.offer, chosen)
        seconds[t] = time.perf_counter() - tick
    early = float(seconds[100:100 + window].mean())
    late = float(seconds[T - window:].mean())
    return late < 2 * early, f"late/early per-round time ratio {late / early:.2f}"


def build_checks(quick: bool = False, fault: Optional[str] = None) -> Dict[str, Callable[[], Tuple[bool, str]]]:
    if fault is not None and fault not in FAULTS:
        raise InputError(f"unknown fault '{fault}', expected one of {FAULTS}")
    scale = 0.2 if quick else 1.0

    def n(count: int) -> int:
        return max(1, int(count * scale))

    return {
        "gradient": lambda: check_gradient(n(100), fault),
        "hessian": lambda: check_hessian(n(100)),
        "gram_psd": lambda: check_gram_psd(n(100)),
        "assortment": lambda: check_assortment(n(1000)),
        "oracle": lambda: check_oracle(n(200)),
        "good_event": lambda: check_good_event(n(500)),
        "zero_radius": lambda: check_zero_radius(n(300)),
        "elliptical_potential": lambda: check_elliptical_potential(n(500)),
        "update_count": lambda: check_update_count(n(2000)),
        "determinism": lambda: check_determinism(n(60)),
        "per_round_cost": lambda: check_per_round_cost(3000, 1000) if quick else check_per_round_cost(10000, 1000),
    }


def run_validation(
    quick: bool = False,
    fault: Optional[str] = None,
    progress_callback: Optional[Callable[[int, int], None]] = None,
) -> List[CheckResult]:
    checks = build_checks(quick, fault)
    results = []
    for i, (name, check) in enumerate(checks.items()):
        started = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as e:
            logger.exception("Check %s raised", name)
            passed, detail = False, f"{type(e).__name__}: {e}"
        result = CheckResult(name, bool(passed), detail, time.perf_counter() - started)
        logger.debug("Check %s: %s (%s)", name, "PASS" if result.passed else "FAIL", detail)
        results.append(result)
        if progress_callback:
            progress_callback(i + 1, len(checks))
    return results
