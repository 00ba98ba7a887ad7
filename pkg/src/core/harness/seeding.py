"""
Seed scheme: replication seed = base_seed XOR splitmix64(rep), then three
independent streams per episode (instance, policy, user choice).
"""
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(value: int) -> int:
    z = (int(value) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replication_seed(base_seed: int, rep: int) -> int:
    return (int(base_seed) ^ splitmix64(rep)) & _MASK64


@dataclass(eq=False)
class EpisodeStreams:
    seed: int
    instance_seed: int
    policy_rng: np.random.Generator
    choice_rng: np.random.Generator


def episode_streams(seed: int) -> EpisodeStreams:
    instance, policy, choice = np.random.SeedSequence(int(seed)).spawn(3)
    return EpisodeStreams(
        seed=int(seed),
        instance_seed=int(instance.generate_state(1, dtype=np.uint64)[0]),
        policy_rng=np.random.default_rng(policy),
        choice_rng=np.random.default_rng(choice),
    )
