import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..logging_utils import get_logger
from ..model import Instance, choice_probabilities, expected_revenue, generate_instance, sample_choice
from ..policies import Policy, oracle_decision
from .config import ExperimentConfig
from .seeding import EpisodeStreams, episode_streams

logger = get_logger(__name__)

PolicyFactory = Callable[[ExperimentConfig, Instance, np.random.Generator], Policy]


@dataclass(eq=False)
class RegretTrace:
    """Per-round expected revenues and diagnostics of one episode."""
    algorithm: str
    seed: int
    oracle_revenue: np.ndarray
    policy_revenue: np.ndarray
    tau: np.ndarray
    good_event: np.ndarray
    max_design_norm: np.ndarray
    kappa_contribution: np.ndarray
    round_seconds: np.ndarray
    wall_time: float = 0.0
    fit_warning: bool = False
    logdet_at_last_update: float = float("nan")

    def __len__(self) -> int:
        return self.oracle_revenue.shape[0]

    @property
    def instant_regret(self) -> np.ndarray:
        return self.oracle_revenue - self.policy_revenue

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.instant_regret)

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "rounds": len(self),
            "final_regret": self.final_regret,
            "final_tau": float(self.tau[-1]),
            "wall_time": self.wall_time,
            "fit_warning": self.fit_warning,
        }


def default_policy_factory(config: ExperimentConfig, instance: Instance, rng: np.random.Generator) -> Policy:
    return config.policy_manager().create(config.algorithm, config.hyperparams(), rng, theta=instance.theta)


def run_episode(
    config: ExperimentConfig,
    policy_factory: Optional[PolicyFactory] = None,
    instance: Optional[Instance] = None,
    streams: Optional[EpisodeStreams] = None,
    policy: Optional[Policy] = None,
) -> RegretTrace:
    """
    Play T rounds. Regret uses exact expected revenues; the sampled choice
    only feeds the policy. `policy` overrides the factory, e.g. for a
    policy whose estimator was injected beforehand.
    """
    streams = streams or episode_streams(config.base_seed)
    instance = instance or generate_instance(config.N, config.d, streams.instance_seed)
    if policy is None:
        policy = (policy_factory or default_policy_factory)(config, instance, streams.policy_rng)

    theta = instance.theta
    theta_star = theta.theta_star
    noise = config.noise
    T = config.T
    oracle_revenue = np.zeros(T)
    policy_revenue = np.zeros(T)
    tau = np.zeros(T)
    good = np.full(T, np.nan)
    design_norm = np.full(T, np.nan)
    kappa = np.full(T, np.nan)
    round_seconds = np.zeros(T)

    logger.info("Episode start: %s N=%s T=%s seed=%s", policy.name, config.N, T, streams.seed)
    started = time.perf_counter()
    for t, features in enumerate(instance.feature_stream(T)):
        best = oracle_decision(features, theta, config.K, grid=config.oracle_grid, method="threshold")
        oracle_revenue[t] = best.value

        tick = time.perf_counter()
        decision = policy.act(features)
        round_seconds[t] = time.perf_counter() - tick

        offer = decision.offer
        policy_revenue[t] = expected_revenue(features, theta, offer, noise if noise.c > 0 else None)
        zeta = noise.sample(streams.choice_rng, len(offer)) if noise.c > 0 else None
        chosen = sample_choice(choice_probabilities(features, theta, offer, zeta), streams.choice_rng)

        tau[t] = decision.tau_at_decision
        if config.record_diagnostics:
            good[t] = policy.good_event(theta_star)
            design_norm[t] = decision.max_design_norm
            kappa[t] = decision.kappa_contribution

        tick = time.perf_counter()
        policy.observe(offer, chosen)
        round_seconds[t] += time.perf_counter() - tick

    wall_time = time.perf_counter() - started
    state = getattr(policy, "state", None)
    trace = RegretTrace(
        algorithm=policy.name,
        seed=streams.seed,
        oracle_revenue=oracle_revenue,
        policy_revenue=policy_revenue,
        tau=tau,
        good_event=good,
        max_design_norm=design_norm,
        kappa_contribution=kappa,
        round_seconds=round_seconds,
        wall_time=wall_time,
        fit_warning=policy.fit_warning,
        logdet_at_last_update=state.logdet_at_last_update if state is not None else float("nan"),
    )
    logger.info(
        "Episode finished: %s N=%s seed=%s regret=%.4f in %.2fs",
        policy.name, config.N, streams.seed, trace.final_regret, wall_time,
    )
    return trace
