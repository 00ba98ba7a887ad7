"""
Synthetic C-MNL instances: unit-norm positive parameters and a
deterministic, randomly addressable per-round feature stream.
"""
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..errors import InputError
from .choice import RoundFeatures, Theta


def _normalized_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    # Draws from (0, 1) so every row has a strictly positive norm.
    draws = 1.0 - rng.random(shape)
    norms = np.linalg.norm(draws, axis=-1, keepdims=True)
    return draws / norms


@dataclass(eq=False)
class Instance:
    theta: Theta
    n_arms: int
    dim: int
    seed: int

    def round_features(self, t: int) -> RoundFeatures:
        """Features of round t (1-based); same (seed, t) gives identical arrays."""
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(int(t),)))
        x = _normalized_uniform(rng, (self.n_arms, self.dim))
        w = _normalized_uniform(rng, (self.n_arms, self.dim))
        return RoundFeatures(x, w)

    def feature_stream(self, horizon: int) -> Iterator[RoundFeatures]:
        for t in range(1, horizon + 1):
            yield self.round_features(t)


def generate_instance(n_arms: int, dim: int, seed: int) -> Instance:
    if n_arms < 1 or dim < 1:
        raise InputError("n_arms and dim must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    theta = Theta(_normalized_uniform(rng, dim), _normalized_uniform(rng, dim))
    return Instance(theta=theta, n_arms=int(n_arms), dim=int(dim), seed=int(seed))
