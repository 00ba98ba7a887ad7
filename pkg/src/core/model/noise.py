from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import InputError


class NoiseLaw(Enum):
    UNIFORM = "uniform"
    TRIANGULAR = "triangular"


@dataclass(frozen=True)
class ActivationNoise:
    """Zero-mean noise zeta on [-c, c] shifting each arm's censoring threshold."""
    c: float = 0.0
    law: NoiseLaw = NoiseLaw.UNIFORM
    max_enumerated_arms: int = 20

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 0 or self.c > 1:
            raise InputError("noise half-width c must lie in [0, 1]")
        if not isinstance(self.law, NoiseLaw):
            object.__setattr__(self, "law", NoiseLaw(self.law))

    def survival(self, x) -> np.ndarray:
        """P(zeta >= x), elementwise."""
        x = np.asarray(x, dtype=float)
        c = self.c
        if c == 0:
            return (x <= 0).astype(float)
        if self.law is NoiseLaw.UNIFORM:
            return np.clip((c - x) / (2 * c), 0.0, 1.0)
        u = np.clip(x, -c, c)
        lower = 1.0 - (u + c) ** 2 / (2 * c * c)
        upper = (c - u) ** 2 / (2 * c * c)
        return np.where(u <= 0, lower, upper)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.c == 0:
            return np.zeros(size)
        if self.law is NoiseLaw.UNIFORM:
            return rng.uniform(-self.c, self.c, size)
        return rng.triangular(-self.c, 0.0, self.c, size)
