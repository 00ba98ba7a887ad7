import json
import math
import os
import sys
import tempfile
import unittest

import numpy as np

# Add src to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.core.errors import ConfigError, NumericalError
from src.core.estimation import CALIBRATED_LAMBDA, beta, default_lambda, empirical_kappa, kappa_bound
from src.core.harness import (
    ExperimentConfig,
    ReplicationQueue,
    TaskStatus,
    episode_streams,
    load_config,
    replicate,
    replication_seed,
    run_episode,
    splitmix64,
    sweep,
)


def make_config(**overrides) -> ExperimentConfig:
    values = dict(N=6, K=3, d=3, T=40, algorithm="ucba-lcbp", replications=2, base_seed=7)
    values.update(overrides)
    return ExperimentConfig(**values)


class TestExperimentConfig(unittest.TestCase):
    def setUp(self):
        self.data = dict(N=10, K=5, d=4, T=100, algorithm="ucba-lcbp", replications=3, base_seed=1)

    def test_defaults(self):
        config = ExperimentConfig.from_dict(self.data)
        self.assertEqual(config.C1, 0.05)
        self.assertEqual(config.C, 2.0)
        self.assertIsNone(config.M)
        self.assertEqual(config.noise_c, 0.0)
        self.assertTrue(config.record_diagnostics)
        self.assertEqual(config.hyperparams().C1, 0.05)
        self.assertEqual(config.beta_mode, "fixed")
        self.assertEqual(config.hyperparams().lam, CALIBRATED_LAMBDA)
        self.assertEqual(config.utility_scale, config.C)

    def test_theory_calibration_uses_the_analytic_constants(self):
        config = ExperimentConfig.from_dict(dict(self.data, calibration="theory", beta_mode="main"))
        hp = config.hyperparams()
        self.assertAlmostEqual(hp.lam, default_lambda(4, hp.eta))
        self.assertIsNone(config.utility_scale)

    def test_explicit_constants_override_the_calibration(self):
        config = ExperimentConfig.from_dict(dict(self.data, lam=3.0, eta=2.0, ts_utility_scale=16.0))
        hp = config.hyperparams()
        self.assertEqual((hp.lam, hp.eta), (3.0, 2.0))
        self.assertEqual(config.utility_scale, 16.0)

    def test_missing_key_is_named(self):
        del self.data["K"]
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.from_dict(self.data)
        self.assertEqual(ctx.exception.key, "K")
        self.assertIn("K", ctx.exception.message)

    def test_unknown_key_is_named(self):
        self.data["gamma"] = 1
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.from_dict(self.data)
        self.assertEqual(ctx.exception.key, "gamma")

    def test_range_and_type_violations(self):
        cases = {
            "K": 11, "T": 0, "N": 10.5, "C": 1.0, "noise_c": 2.0, "algorithm": "greedy", "base_seed": -1,
            "beta_mode": "widest", "calibration": "tuned", "lam": 0, "eta": -1.0,
        }
        for key, value in cases.items():
            data = dict(self.data, **{key: value})
            with self.assertRaises(ConfigError) as ctx:
                ExperimentConfig.from_dict(data)
            self.assertEqual(ctx.exception.key, key)

    def test_rejects_nested_values(self):
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.from_dict(dict(self.data, C1={"value": 1}))
        self.assertEqual(ctx.exception.key, "C1")

    def test_algorithm_lists(self):
        config = ExperimentConfig.from_dict(dict(self.data, algorithm="UCBA-LCBP, random"))
        self.assertEqual(config.algorithms, ("ucba-lcbp", "random"))

    def test_load_config_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump(self.data, f)
            self.assertEqual(load_config(path).to_dict()["N"], 10)
            with open(path, "w", encoding="utf-8") as f:
                f.write("{not json")
            with self.assertRaises(ConfigError):
                load_config(path)


class TestSeeding(unittest.TestCase):
    def test_splitmix_reference_value(self):
        self.assertEqual(splitmix64(0), 0xE220A8397B1DCDAF)

    def test_replication_seeds_are_distinct_and_stable(self):
        seeds = [replication_seed(42, rep) for rep in range(100)]
        self.assertEqual(len(set(seeds)), 100)
        self.assertEqual(replication_seed(42, 3), 42 ^ splitmix64(3))

    def test_streams_are_reproducible(self):
        a, b = episode_streams(5), episode_streams(5)
        self.assertEqual(a.instance_seed, b.instance_seed)
        self.assertEqual(a.policy_rng.random(), b.policy_rng.random())
        self.assertNotEqual(episode_streams(6).instance_seed, a.instance_seed)


class TestRunEpisode(unittest.TestCase):
    def test_oracle_agent_has_zero_regret(self):
        trace = run_episode(make_config(algorithm="oracle", T=25))
        self.assertEqual(len(trace), 25)
        self.assertTrue(np.all(np.abs(trace.instant_regret) <= 1e-9))

    def test_regret_is_nonnegative_for_every_policy(self):
        for algorithm in ("ucba-lcbp", "tsa-lcbp", "ucba-elcbp", "etc", "random"):
            trace = run_episode(make_config(algorithm=algorithm, T=60))
            self.assertTrue(np.all(trace.instant_regret >= -1e-9), algorithm)
            self.assertTrue(np.all(np.diff(trace.cumulative_regret) >= -1e-9), algorithm)

    def test_same_seed_same_trace(self):
        config = make_config(algorithm="tsa-lcbp", T=30)
        a, b = run_episode(config), run_episode(config)
        self.assertTrue(np.array_equal(a.policy_revenue, b.policy_revenue))
        self.assertTrue(np.array_equal(a.oracle_revenue, b.oracle_revenue))
        self.assertTrue(np.array_equal(a.tau, b.tau))

    def test_good_event_is_nan_without_an_estimator(self):
        self.assertTrue(np.all(np.isnan(run_episode(make_config(algorithm="random", T=10)).good_event)))
        flags = run_episode(make_config(T=10)).good_event
        self.assertTrue(np.all((flags == 0.0) | (flags == 1.0)))

    def test_diagnostics_can_be_skipped(self):
        trace = run_episode(make_config(T=10, record_diagnostics=False))
        self.assertTrue(np.all(np.isnan(trace.kappa_contribution)))

    def test_noisy_activation_runs(self):
        trace = run_episode(make_config(algorithm="ucba-elcbp", noise_c=0.2, T=40))
        self.assertTrue(np.all(np.isfinite(trace.policy_revenue)))
        trace = run_episode(make_config(algorithm="ucba-elcbp", noise_c=0.2, noise_law="triangular", T=20))
        self.assertTrue(np.all(trace.policy_revenue >= 0))

    def test_round_times_are_recorded(self):
        trace = run_episode(make_config(T=15))
        self.assertTrue(np.all(trace.round_seconds > 0))
        self.assertGreater(trace.wall_time, 0)

    def test_random_regret_grows_linearly(self):
        config = make_config(algorithm="random", N=15, K=5, d=4, T=400, replications=5)
        regret = replicate(config, parallel=False).regret_mean
        ratio = regret[-1] / regret[199]
        self.assertGreaterEqual(ratio, 1.7)
        self.assertLessEqual(ratio, 2.3)

    def test_pricing_estimate_refreshes_under_the_default_calibration(self):
        config = make_config(N=10, K=5, d=4, T=300)
        trace = run_episode(config)
        hp = config.hyperparams()
        tau = int(trace.tau[-1])
        self.assertGreater(tau, 1)
        self.assertLessEqual(tau, 2 * hp.d * math.log2(1 + 2 * hp.T * hp.K / (hp.d * hp.lam)) + 2)
        growth = trace.logdet_at_last_update - 2 * hp.d * math.log(hp.lam)
        self.assertLessEqual((tau - 1) * math.log(hp.C), growth + 1e-9)

    def test_empirical_kappa_respects_the_analytic_bound(self):
        for algorithm in ("ucba-lcbp", "tsa-lcbp"):
            config = make_config(algorithm=algorithm, N=10, K=5, d=4, T=200)
            trace = run_episode(config)
            self.assertGreaterEqual(empirical_kappa(trace.kappa_contribution), kappa_bound(config.hyperparams()))

    def test_good_event_holds_when_the_radius_covers_the_parameter_set(self):
        # ||theta_hat - theta*||_H^2 <= 8 (lam + 2t) because both blocks lie in unit balls and ||z||^2 <= 2.
        config = make_config(N=10, K=5, d=4, T=200, C1=4.0)
        hp = config.hyperparams()
        self.assertGreater(beta(1, hp), math.sqrt(8 * (hp.lam + 2 * config.T)))
        self.assertTrue(np.all(run_episode(config).good_event == 1.0))


class TestLearningCurves(unittest.TestCase):
    """Scaled-down comparison of the learners against the baselines on one synthetic setting."""

    T = 1200
    window = 300

    @classmethod
    def setUpClass(cls):
        base = dict(N=15, K=5, d=4, T=cls.T, replications=2, base_seed=2024)
        cls.regret = {
            algorithm: replicate(ExperimentConfig(algorithm=algorithm, **base), parallel=False).regret_mean
            for algorithm in ("ucba-lcbp", "tsa-lcbp", "etc", "random")
        }

    def per_round(self, algorithm: str, start: int, stop: int) -> float:
        curve = self.regret[algorithm]
        before = curve[start - 1] if start > 0 else 0.0
        return float(curve[stop - 1] - before) / (stop - start)

    def late(self, algorithm: str) -> float:
        return self.per_round(algorithm, self.T - self.window, self.T)

    def test_learners_improve_over_time(self):
        for algorithm in ("ucba-lcbp", "tsa-lcbp"):
            self.assertLess(self.late(algorithm), self.per_round(algorithm, 0, self.window), algorithm)

    def test_learners_end_below_the_baselines(self):
        for algorithm in ("ucba-lcbp", "tsa-lcbp"):
            self.assertLess(self.late(algorithm), self.late("random"), algorithm)
            self.assertLess(self.late(algorithm), self.late("etc"), algorithm)

    def test_learner_regret_grows_sublinearly(self):
        half = self.T // 2
        for algorithm in ("ucba-lcbp", "tsa-lcbp"):
            curve = self.regret[algorithm]
            self.assertLess(curve[-1] / curve[half - 1], 1.9, algorithm)
        random_curve = self.regret["random"]
        self.assertGreaterEqual(random_curve[-1] / random_curve[half - 1], 1.8)


class TestReplicationQueue(unittest.TestCase):
    def test_results_come_back_in_task_order(self):
        queue = ReplicationQueue(max_workers=3)
        for rep in range(5):
            queue.add_task(rep, rep * 10)
        results = queue.run(lambda seed: seed, parallel=True)
        self.assertEqual(results, [0, 10, 20, 30, 40])
        self.assertEqual(queue.get_stats()["completed"], 5)

    def test_failures_are_marked_and_raised(self):
        queue = ReplicationQueue(max_workers=2)
        queue.add_task(0, 1)
        queue.add_task(1, 2)

        def handler(seed):
            if seed == 2:
                raise NumericalError("boom", {"seed": seed})
            return seed

        with self.assertRaises(NumericalError):
            queue.run(handler)
        self.assertEqual(queue.get_task(1).status, TaskStatus.FAILED)
        self.assertEqual(queue.get_task(0).status, TaskStatus.COMPLETED)

    def test_progress_callback_counts_every_task(self):
        queue = ReplicationQueue(max_workers=1)
        for rep in range(3):
            queue.add_task(rep, rep)
        calls = []
        queue.run(lambda seed: seed, progress_callback=lambda done, total: calls.append((done, total)))
        self.assertEqual(calls, [(1, 3), (2, 3), (3, 3)])


class TestReplicate(unittest.TestCase):
    def test_parallel_equals_sequential(self):
        config = make_config(algorithm="tsa-lcbp", replications=3, T=30)
        a = replicate(config, parallel=False)
        b = replicate(config, parallel=True, max_workers=3)
        for name in ("regret_mean", "regret_std", "oracle_rev_mean", "policy_rev_mean", "tau_mean"):
            self.assertTrue(np.array_equal(getattr(a, name), getattr(b, name)), name)
        self.assertEqual(a.seeds, b.seeds)

    def test_single_replication_equals_its_trace(self):
        summary = replicate(make_config(replications=1, T=20), parallel=False)
        trace = summary.traces[0]
        self.assertTrue(np.array_equal(summary.regret_mean, trace.cumulative_regret))
        self.assertTrue(np.all(summary.regret_std == 0))
        self.assertEqual(summary.seeds, [replication_seed(7, 0)])

    def test_rejects_several_algorithms(self):
        with self.assertRaises(ConfigError):
            replicate(make_config(algorithm="random,etc"))

    def test_good_event_fraction_is_nan_for_baselines(self):
        summary = replicate(make_config(algorithm="random", T=5), parallel=False)
        self.assertTrue(np.all(np.isnan(summary.good_event_frac)))
        summary = replicate(make_config(T=5), parallel=False)
        self.assertTrue(np.all((summary.good_event_frac >= 0) & (summary.good_event_frac <= 1)))


class TestSweep(unittest.TestCase):
    def test_rows_keyed_by_n_and_algorithm(self):
        rows = sweep(make_config(algorithm="ucba-lcbp,random", T=15, replications=1), [6, 8], parallel=False)
        self.assertEqual([(r.N, r.algorithm) for r in rows],
                         [(6, "ucba-lcbp"), (6, "random"), (8, "ucba-lcbp"), (8, "random")])
        for row in rows:
            self.assertEqual(row.final_regret_mean, float(row.summary.regret_mean[-1]))

    def test_single_value(self):
        self.assertEqual(len(sweep(make_config(T=10, replications=1), [6], parallel=False)), 1)

    def test_n_below_capacity_is_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            sweep(make_config(T=10), [2], parallel=False)
        self.assertEqual(ctx.exception.key, "K")


if __name__ == "__main__":
    unittest.main()
