"""
Online mirror descent estimation of theta* with the design-matrix
recurrences and the determinant-triggered pricing-estimate schedule.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky
from scipy.optimize import minimize

from ..errors import InputError, NumericalError
from ..logging_utils import get_logger

logger = get_logger(__name__)

BETA_MODES = ("main", "recursive", "fixed")


def default_eta(K: int) -> float:
    return 0.5 * math.log(K + 1) + 3.0


def default_lambda(d: int, eta: float) -> float:
    return max(84.0 * d * eta, 192.0 * math.sqrt(2.0) * eta)


# Regularizer the experiment harness uses unless a config sets lam or calibration.
CALIBRATED_LAMBDA = 0.05


@dataclass
class HyperParams:
    d: int
    K: int
    N: int
    T: int
    C1: float = 0.05
    C: float = 2.0
    eta: Optional[float] = None
    lam: Optional[float] = None
    beta_mode: str = "main"

    def __post_init__(self):
        if min(self.d, self.K, self.N, self.T) < 1:
            raise InputError("d, K, N and T must be positive")
        if self.C1 < 0:
            raise InputError("C1 must be nonnegative")
        if self.C <= 1:
            raise InputError("determinant trigger C must exceed 1")
        if self.beta_mode not in BETA_MODES:
            raise InputError(f"beta_mode must be one of {BETA_MODES}")
        if self.eta is None:
            self.eta = default_eta(self.K)
        if self.lam is None:
            self.lam = default_lambda(self.d, self.eta)

    def to_dict(self) -> dict:
        return asdict(self)


def beta(tau: int, hp: HyperParams) -> float:
    if tau < 1:
        raise InputError("tau starts at 1")
    return hp.C1 * math.sqrt(hp.d * tau) * math.log(hp.T) * math.log(hp.K)


def recursive_beta_increment(t: int, hp: HyperParams) -> float:
    """Per-refresh increment of the recursive squared radius at round t."""
    lam, eta = hp.lam, hp.eta
    log_term = math.log(2.0 * math.sqrt(1.0 + 2.0 * t) * hp.T ** 2)
    return (
        eta * (6.0 * math.log(1.0 + (hp.K + 1) * t) + 6.0)
        * (17.0 / 16.0 * lam + 2.0 * math.sqrt(lam) * log_term + 16.0 * log_term ** 2)
        + 4.0 * eta
        + 2.0 * eta * math.sqrt(6.0) * (2.0 * eta) * hp.d * math.log(1.0 + (t + 1) / (2.0 * lam))
    )


def _factor(matrix: np.ndarray, name: str) -> np.ndarray:
    try:
        return cholesky(matrix, lower=True, check_finite=False)
    except LinAlgError as e:
        raise NumericalError(
            f"{name} lost positive definiteness",
            {"matrix": name, "min_eigenvalue": float(np.linalg.eigvalsh(matrix)[0]), "error": str(e)},
        )


@dataclass(eq=False)
class EstimatorState:
    """Mutable, single-owner estimator state for one policy in one replication."""
    theta_hat: np.ndarray
    theta_v_frozen: np.ndarray
    H: np.ndarray
    H_tilde: np.ndarray
    H_v: np.ndarray
    tau: int = 1
    t_tau: int = 1
    logdet_at_last_update: float = 0.0
    last_gram: Optional[np.ndarray] = None
    beta_sq: float = 0.0
    frozen: bool = False
    chol_H: np.ndarray = field(default=None, repr=False)
    chol_H_tilde: np.ndarray = field(default=None, repr=False)
    chol_H_v: np.ndarray = field(default=None, repr=False)

    @classmethod
    def initial(cls, hp: HyperParams) -> "EstimatorState":
        d = hp.d
        state = cls(
            theta_hat=np.zeros(2 * d),
            theta_v_frozen=np.zeros(d),
            H=hp.lam * np.eye(2 * d),
            H_tilde=hp.lam * np.eye(2 * d),
            H_v=hp.lam * np.eye(d),
            logdet_at_last_update=2 * d * math.log(hp.lam),
        )
        if hp.beta_mode == "recursive":
            state.beta_sq = recursive_beta_increment(1, hp) + 16.0 * hp.lam
        state.refresh_factors()
        return state

    @property
    def dim(self) -> int:
        return self.H_v.shape[0]

    @property
    def logdet_H(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol_H))))

    def refresh_factors(self) -> None:
        self.chol_H = _factor(self.H, "H")
        self.chol_H_tilde = _factor(self.H_tilde, "H_tilde")
        self.chol_H_v = _factor(self.H_v, "H_v")

    def radius(self, hp: HyperParams) -> float:
        if hp.beta_mode == "recursive":
            return math.sqrt(self.beta_sq)
        if hp.beta_mode == "fixed":
            return beta(1, hp)
        return beta(self.tau, hp)

    def inject(self, theta: Sequence[float], freeze: bool = True) -> None:
        """Seed theta_hat and the pricing estimate; a frozen state skips OMD updates."""
        theta = np.asarray(theta, dtype=float).copy()
        if theta.shape != self.theta_hat.shape:
            raise InputError("injected theta has the wrong dimension")
        self.theta_hat = theta
        self.theta_v_frozen = theta[: self.dim].copy()
        self.frozen = freeze

    def h_norm(self, vector: np.ndarray) -> float:
        """||vector||_{H}."""
        return float(np.linalg.norm(self.chol_H.T @ vector))


def _project_euclidean(theta: np.ndarray, d: int) -> np.ndarray:
    projected = theta.copy()
    for block in (slice(0, d), slice(d, 2 * d)):
        norm = np.linalg.norm(projected[block])
        if norm > 1.0:
            projected[block] /= norm
    return projected


def _in_theta(theta: np.ndarray, d: int) -> bool:
    return np.linalg.norm(theta[:d]) <= 1.0 and np.linalg.norm(theta[d:]) <= 1.0


def project_to_theta(
    target: np.ndarray,
    metric: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> np.ndarray:
    """
    Minimize 0.5 ||theta - target||_metric^2 over the product of the two unit balls.

    Solved through the concave dual in the two ball multipliers mu >= 0, where
    theta(mu) = (metric + diag(mu_v I, mu_alpha I))^{-1} metric target.
    """
    d = target.shape[0] // 2
    rhs = metric @ target
    blocks = (slice(0, d), slice(d, 2 * d))

    def primal(mu: np.ndarray) -> np.ndarray:
        shifted = metric + np.diag(np.repeat(mu, d))
        return cho_solve((_factor(shifted, "projection system"), True), rhs, check_finite=False)

    def negative_dual(mu: np.ndarray):
        theta = primal(mu)
        diff = theta - target
        excess = np.array([theta[b] @ theta[b] - 1.0 for b in blocks])
        return -(0.5 * float(diff @ metric @ diff) + 0.5 * float(mu @ excess)), -0.5 * excess

    result = minimize(
        negative_dual,
        np.zeros(2),
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None), (0.0, None)],
        options={"maxiter": max_iter, "gtol": tol, "ftol": 0.0},
    )
    theta = primal(result.x)
    violation = max(float(np.linalg.norm(theta[b])) - 1.0 for b in blocks)
    if violation > 1e-6:
        raise NumericalError(
            "projection onto the parameter set did not converge",
            {"iterations": int(result.nit), "violation": violation, "message": str(result.message)},
        )
    return _project_euclidean(theta, d)


def omd_step(
    state: EstimatorState,
    eta: float,
    g: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> np.ndarray:
    """
    argmin_{theta in Theta} g^T theta + 1/(2 eta) ||theta - theta_hat||^2_{H_tilde}.
    """
    g = np.asarray(g, dtype=float)
    unconstrained = state.theta_hat - eta * cho_solve((state.chol_H_tilde, True), g, check_finite=False)
    if _in_theta(unconstrained, state.dim):
        return unconstrained
    return project_to_theta(unconstrained, state.H_tilde, max_iter=max_iter, tol=tol)


def advance_designs(state: EstimatorState, G: np.ndarray, G_v: np.ndarray, eta: float) -> EstimatorState:
    """H_tilde <- H + eta*G; H <- H + G; H_v <- H_v + G_v; refresh factors."""
    state.H_tilde = state.H + eta * G
    state.H = state.H + G
    state.H_v = state.H_v + G_v
    state.last_gram = G
    state.refresh_factors()
    return state


def maybe_refresh_pricing_estimate(state: EstimatorState, hp: HyperParams, t: int) -> bool:
    logdet = state.logdet_H
    if logdet <= math.log(hp.C) + state.logdet_at_last_update:
        return False
    state.tau += 1
    state.t_tau = t
    state.theta_v_frozen = state.theta_hat[: state.dim].copy()
    state.logdet_at_last_update = logdet
    if hp.beta_mode == "recursive":
        state.beta_sq += recursive_beta_increment(t, hp)
    logger.debug("Pricing estimate refreshed: tau=%s at t=%s", state.tau, t)
    return True


def kappa_bound(hp: Union[HyperParams, int]) -> float:
    """Lower bound on P(i) P(outside) when ||theta|| blocks <= 1 and prices <= 1."""
    K = hp.K if isinstance(hp, HyperParams) else int(hp)
    bound = 2.0 * math.sqrt(2.0)
    return math.exp(-bound) / (1.0 + K * math.exp(bound)) ** 2


def empirical_kappa(contributions: Sequence[float]) -> float:
    values = np.asarray(contributions, dtype=float)
    values = values[np.isfinite(values)]
    return float(values.min()) if values.size else math.nan
