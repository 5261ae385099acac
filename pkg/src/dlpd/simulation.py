"""Simulation models 1-4 with covariate-dependent means and covariances.

All four models use ``p >= 21`` features, of which the first 20 carry the
class signal. Models 1-3 have a scalar covariate, model 4 a bivariate one;
covariates are i.i.d. uniform on the unit cube.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve

from .classifier import SINGULAR_RTOL, OracleModel, _cholesky
from .core import DataSet, as_point, seeded_rng
from .exceptions import DomainError, SingularCovarianceError

__all__ = [
    "MODEL_IDS",
    "ModelSpec",
    "oracle_of",
    "sample_dataset",
    "sample_test_dataset",
    "test_seed",
    "true_beta",
]

logger = logging.getLogger(__name__)

MODEL_IDS = ("M1", "M2", "M3", "M4")
N_SIGNAL = 20
TEST_SEED_XOR = 0x5EED_7E57
JITTER = 1e-12


@dataclass(frozen=True)
class ModelSpec:
    id: str = "M1"
    p: int = 50
    n1: int = 100
    n2: int = 100
    seed: int = 0

    def __post_init__(self):
        mid = str(self.id).upper()
        if not mid.startswith("M"):
            mid = "M" + mid
        if mid not in MODEL_IDS:
            raise ValueError(f"unknown model {self.id!r}; expected one of {MODEL_IDS}")
        object.__setattr__(self, "id", mid)
        if self.p < N_SIGNAL + 1:
            raise ValueError("the simulation models need p >= 21")
        if self.n1 < 0 or self.n2 < 0 or self.seed < 0:
            raise ValueError("sample sizes and seed must be nonnegative")

    @property
    def d(self) -> int:
        return 2 if self.id == "M4" else 1


def _toeplitz_power(base, p):
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    # 0 ** 0 == 1 keeps a unit diagonal at base == 0
    return np.power(float(base), lag)


def _equicorrelation(rho, p):
    S = np.full((p, p), float(rho))
    np.fill_diagonal(S, 1.0)
    return S


def _split(head, tail, p):
    out = np.full(p, float(tail))
    out[:N_SIGNAL] = head
    return out


def _singular(what):
    raise SingularCovarianceError(f"{what} covariance is singular")


def _equicorrelation_distance_sq(delta, rho, generalized):
    """``delta' S^-1 delta`` for ``S = rho 11' + (1 - rho) I`` via its two eigenvalues."""
    p = delta.size
    mean_part = delta.sum() ** 2 / p
    orth_part = max(float(delta @ delta) - mean_part, 0.0)
    small, large = 1.0 - rho, 1.0 - rho + p * rho
    if small <= SINGULAR_RTOL * large:
        if not generalized:
            _singular("equicorrelation")
        if orth_part > (1e-9 * np.linalg.norm(delta)) ** 2:
            return np.inf
        return mean_part / large
    return orth_part / small + mean_part / large


def _ar1_distance_sq(delta, rho, generalized):
    """``delta' S^-1 delta`` for ``S = (rho^|i-j|)`` from its tridiagonal inverse."""
    if rho >= 1.0:
        return _equicorrelation_distance_sq(delta, 1.0, generalized)
    inner = float(delta[1:-1] @ delta[1:-1])
    quad = float(delta @ delta) - 2.0 * rho * float(delta[:-1] @ delta[1:]) + rho**2 * inner
    return quad / (1.0 - rho**2)


def _m4_rho(u):
    s = u[0] + u[1]
    if s == 0:
        raise DomainError("model 4 correlation is undefined at U1 + U2 = 0")
    return abs(u[0] - u[1]) / s


def oracle_of(spec: ModelSpec) -> OracleModel:
    """True mean and covariance functions of a simulation model."""
    p = spec.p
    # correlation parameter and closed-form distance of each covariance family
    rho_of, form = {
        "M1": (lambda u: 0.5, _ar1_distance_sq),
        "M2": (lambda u: u[0], _ar1_distance_sq),
        "M3": (lambda u: u[0], _equicorrelation_distance_sq),
        "M4": (_m4_rho, _equicorrelation_distance_sq),
    }[spec.id]
    if spec.id == "M1":
        S1 = _toeplitz_power(0.5, p)
        mu_x = lambda u: np.ones(p)  # noqa: E731
        mu_y = lambda u: _split(0.0, 1.0, p)  # noqa: E731
        sigma = lambda u: S1.copy()  # noqa: E731
    elif spec.id == "M2":
        mu_x = lambda u: np.full(p, np.exp(u[0]))  # noqa: E731
        mu_y = lambda u: _split(u[0], np.exp(u[0]), p)  # noqa: E731
        sigma = lambda u: _toeplitz_power(u[0], p)  # noqa: E731
    elif spec.id == "M3":
        mu_x = lambda u: np.full(p, u[0])  # noqa: E731
        mu_y = lambda u: _split(-u[0], u[0], p)  # noqa: E731
        sigma = lambda u: _equicorrelation(u[0], p)  # noqa: E731
    else:
        mu_x = lambda u: _split(0.5 + np.sin(u[0] + u[1]), np.cos(u[0] + u[1]), p)  # noqa: E731
        mu_y = lambda u: np.full(p, np.cos(u[0] + u[1]))  # noqa: E731
        sigma = lambda u: _equicorrelation(_m4_rho(u), p)  # noqa: E731

    def distance_sq(u, generalized=False):
        return form(mu_x(u) - mu_y(u), float(rho_of(u)), generalized)

    return OracleModel(mu_x=mu_x, mu_y=mu_y, sigma=sigma, d=spec.d, distance_sq=distance_sq)


def _cholesky_jittered(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        logger.warning("covariance not numerically positive definite; adding %.0e jitter",
                       JITTER)
        return np.linalg.cholesky(S + JITTER * np.eye(S.shape[0]))


def sample_dataset(spec: ModelSpec) -> DataSet:
    """Draw a training set from ``spec``.

    Draw order is fixed: the ``n1`` then ``n2`` covariate vectors, then one
    standard-normal vector of length ``p`` per sample in the same order,
    coloured by the Cholesky factor of the covariance at its covariate.
    """
    rng = seeded_rng(spec.seed)
    oracle = oracle_of(spec)
    n1, n2, p, d = spec.n1, spec.n2, spec.p, spec.d
    U = rng.random((n1 + n2, d))
    Z = rng.standard_normal((n1 + n2, p))
    feats = np.empty((n1 + n2, p))
    const_chol = _cholesky_jittered(oracle.sigma(U[0])) if spec.id == "M1" and n1 + n2 else None
    for i in range(n1 + n2):
        u = U[i]
        mean = oracle.mu_x(u) if i < n1 else oracle.mu_y(u)
        L = const_chol if const_chol is not None else _cholesky_jittered(oracle.sigma(u))
        feats[i] = mean + L @ Z[i]
    labels = ["X"] * n1 + ["Y"] * n2
    return DataSet(feats, U, labels)


def test_seed(seed: int) -> int:
    return int(seed) ^ TEST_SEED_XOR


def sample_test_dataset(spec: ModelSpec, n1=100, n2=100) -> DataSet:
    """Independent evaluation sample, drawn from the stream ``seed XOR 0x5EED7E57``."""
    return sample_dataset(replace(spec, n1=n1, n2=n2, seed=test_seed(spec.seed)))


def true_beta(spec: ModelSpec, u) -> np.ndarray:
    """``Sigma(u)^{-1} (mu_X(u) - mu_Y(u))`` by a linear solve."""
    oracle = oracle_of(spec)
    u = as_point(u, spec.d)
    mx, my, S = oracle.moments(u)
    return cho_solve((_cholesky(S), True), mx - my)
