"""The DLPD decision rule, the Bayes rule under known moments, and their risks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import roots_legendre

from .core import ClassLabel, DataSet, as_point, seeded_rng, std_normal_cdf
from .dantzig import DantzigProblem, DantzigSolution, solve_dantzig
from .exceptions import DegenerateDirectionError, SingularCovarianceError
from .kernels import Bandwidth, KernelSpec
from .local_moments import WEIGHT_FLOOR, LocalMoments, pooled_local_moments

__all__ = [
    "DlpdModel",
    "OracleModel",
    "RiskEstimate",
    "dlpd_classify",
    "dlpd_score",
    "bayes_classify",
    "mahalanobis_delta",
    "bayes_conditional_risk",
    "bayes_expected_risk",
    "dlpd_conditional_risk",
]


SINGULAR_RTOL = 1e-12
DEGENERATE_TOL = 1e-14
CACHE_QUANTUM = 1e-9


def _decide(score) -> ClassLabel:
    # ">= 0" assigns exact ties to population X
    return ClassLabel.X if score >= 0 else ClassLabel.Y


@dataclass(eq=False)
class DlpdModel:
    """Fitted DLPD state: training data, bandwidths, kernel and Dantzig level.

    Local fits are memoised per covariate point (quantised to a 1e-9 grid)
    unless ``use_cache`` is false. The cache is a plain dict and the model is
    therefore not meant to be shared across threads while caching.
    """

    training: DataSet
    Hx: Bandwidth
    Hy: Bandwidth
    kernel: KernelSpec
    lam: float
    weight_floor: float = WEIGHT_FLOOR
    use_cache: bool = True
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.training.n1 < 1 or self.training.n2 < 1:
            raise ValueError("training data must contain both classes")
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")
        if self.Hx.d != self.training.d or self.Hy.d != self.training.d:
            raise ValueError("bandwidth dimension differs from the covariate dimension")

    def local_fit(self, u) -> tuple[LocalMoments, DantzigSolution]:
        u = as_point(u, self.training.d)
        key = tuple(np.round(u / CACHE_QUANTUM).astype(np.int64)) if self.use_cache else None
        if key is not None and key in self.cache:
            return self.cache[key]
        mom = pooled_local_moments(self.training, u, self.Hx, self.Hy, self.kernel,
                                   self.weight_floor)
        sol = solve_dantzig(DantzigProblem(mom.sigma_hat, mom.delta_hat, self.lam))
        sol.raise_for_status(f"at u={u.tolist()}")
        fit = (mom, sol)
        if key is not None:
            self.cache[key] = fit
        return fit

    def beta(self, u) -> np.ndarray:
        return self.local_fit(u)[1].beta_hat

    def score(self, z, u) -> float:
        mom, sol = self.local_fit(u)
        z = np.asarray(z, dtype=float).ravel()
        return float((z - mom.midpoint) @ sol.beta_hat)

    def classify(self, z, u) -> ClassLabel:
        return dlpd_classify(self, z, u)


def dlpd_score(model: DlpdModel, z, u) -> float:
    return model.score(z, u)


def dlpd_classify(model: DlpdModel, z, u) -> ClassLabel:
    mom, sol = model.local_fit(u)
    if not np.any(sol.beta_hat):
        warnings.warn("estimated direction is zero (lambda too large); every point "
                      "is assigned to X", RuntimeWarning, stacklevel=2)
    z = np.asarray(z, dtype=float).ravel()
    return _decide((z - mom.midpoint) @ sol.beta_hat)


@dataclass(frozen=True)
class OracleModel:
    """Known class-mean and covariance functions of the covariate.

    ``distance_sq(u, generalized)``, when given, is a closed form of the squared
    Mahalanobis distance between the means at ``u``; it must agree with the
    dense computation, including its treatment of singular covariances.
    """

    mu_x: Callable[[np.ndarray], np.ndarray]
    mu_y: Callable[[np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray], np.ndarray]
    d: int = 1
    distance_sq: Callable[[np.ndarray, bool], float] | None = None

    def moments(self, u):
        u = as_point(u, self.d)
        return (np.asarray(self.mu_x(u), dtype=float), np.asarray(self.mu_y(u), dtype=float),
                np.asarray(self.sigma(u), dtype=float))

    def beta(self, u) -> np.ndarray:
        mx, my, S = self.moments(u)
        vals, vecs = _checked_eigh(S)
        return vecs @ ((vecs.T @ (mx - my)) / vals)


def _checked_eigh(S):
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    if vals[0] <= SINGULAR_RTOL * max(vals[-1], 0.0) or vals[-1] <= 0:
        raise SingularCovarianceError(
            f"covariance is singular (eigenvalues in [{vals[0]:.3e}, {vals[-1]:.3e}])")
    return vals, vecs


def _cholesky(S):
    S = 0.5 * (S + S.T)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("covariance is not positive definite") from exc
    dg = np.diag(L) ** 2
    if dg.min() <= SINGULAR_RTOL * dg.max():
        # cheap screen passed the threshold; confirm with the spectrum
        _checked_eigh(S)
    return L


def _mahalanobis_sq(delta, S, generalized=False) -> float:
    if not generalized:
        w = solve_triangular(_cholesky(S), delta, lower=True)
        return float(w @ w)
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    coef = vecs.T @ delta
    null = vals <= SINGULAR_RTOL * max(vals[-1], 0.0)
    if np.any(null) and np.linalg.norm(coef[null]) > 1e-9 * max(np.linalg.norm(delta), 1e-300):
        return np.inf
    return float(np.sum(coef[~null] ** 2 / vals[~null]))


def bayes_classify(oracle: OracleModel, z, u) -> ClassLabel:
    mx, my, S = oracle.moments(u)
    beta = cho_solve((_cholesky(S), True), mx - my)
    z = np.asarray(z, dtype=float).ravel()
    return _decide((z - 0.5 * (mx + my)) @ beta)


def mahalanobis_delta(oracle: OracleModel, u, generalized=False) -> float:
    """Mahalanobis distance between the class means at ``u``.

    With ``generalized=True`` a singular covariance is accepted: the distance
    is infinite when the mean difference has a component in the null space and
    is computed on the range otherwise.
    """
    if oracle.distance_sq is not None:
        return float(np.sqrt(oracle.distance_sq(as_point(u, oracle.d), generalized)))
    mx, my, S = oracle.moments(u)
    return float(np.sqrt(_mahalanobis_sq(mx - my, S, generalized)))


def bayes_conditional_risk(oracle: OracleModel, u, generalized=False) -> float:
    return std_normal_cdf(-0.5 * mahalanobis_delta(oracle, u, generalized))


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    stderr: float
    method: str
    n_points: int

    def __float__(self):
        return self.value


def bayes_expected_risk(oracle: OracleModel, method=None, *, grid_size=100, n_draws=100_000,
                        quad_order=64, seed=0, epsabs=1e-6) -> RiskEstimate:
    """Average of the conditional Bayes risk over covariates uniform on ``[0, 1]^d``.

    ``method``:

    ``"quad"``
        adaptive Gauss-Kronrod for ``d == 1``; a tensor Gauss-Legendre rule of
        ``quad_order`` nodes per axis for ``d == 2``.
    ``"grid"``
        right-endpoint rule on ``{1/G, 2/G, ..., 1}^d`` with ``G = grid_size``.
    ``"mc"``
        ``n_draws`` uniform draws, reported with its standard error.

    Defaults to ``"quad"`` when ``d == 1`` and ``"mc"`` otherwise. Singular
    covariances are handled through the generalized distance.
    """
    d = oracle.d
    if method is None:
        method = "quad" if d == 1 else "mc"
    risk = lambda u: bayes_conditional_risk(oracle, u, generalized=True)  # noqa: E731
    if method == "quad":
        if d == 1:
            val, err = integrate.quad(lambda t: risk([t]), 0.0, 1.0, epsabs=epsabs,
                                      epsrel=0.0, limit=200)
            return RiskEstimate(float(val), float(err), "quad", 0)
        nodes, weights = roots_legendre(quad_order)
        nodes = 0.5 * (nodes + 1.0)
        weights = 0.5 * weights
        grids = np.meshgrid(*([nodes] * d), indexing="ij")
        wgrid = np.ones_like(grids[0])
        for w in np.meshgrid(*([weights] * d), indexing="ij"):
            wgrid = wgrid * w
        pts = np.stack([g.ravel() for g in grids], axis=1)
        vals = np.array([risk(pt) for pt in pts])
        return RiskEstimate(float(vals @ wgrid.ravel()), float("nan"), "quad", len(pts))
    if method == "grid":
        axis = np.arange(1, grid_size + 1) / grid_size
        pts = np.stack([g.ravel() for g in np.meshgrid(*([axis] * d), indexing="ij")], axis=1)
        vals = np.array([risk(pt) for pt in pts])
        return RiskEstimate(float(vals.mean()), float("nan"), "grid", len(pts))
    if method == "mc":
        rng = seeded_rng(seed)
        pts = rng.random((n_draws, d))
        vals = np.array([risk(pt) for pt in pts])
        return RiskEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_draws)),
                            "mc", n_draws)
    raise ValueError(f"unknown integration method {method!r}")


def dlpd_conditional_risk(mu_x_hat, mu_y_hat, beta_hat, oracle: OracleModel, u,
                          on_degenerate="half") -> float:
    """Exact conditional error of a linear rule built from plug-in estimates.

    Averages the two class-conditional Gaussian error probabilities of the rule
    ``(z - (mu_x_hat + mu_y_hat) / 2) @ beta_hat >= 0`` under the true moments at
    ``u``. When ``beta_hat`` has zero variance under the true covariance the rule
    carries no information; the limit value 0.5 is returned, or
    :class:`DegenerateDirectionError` raised when ``on_degenerate="raise"``.
    """
    mx, my, S = oracle.moments(u)
    _checked_eigh(S)
    beta = np.asarray(beta_hat, dtype=float).ravel()
    mxh = np.asarray(mu_x_hat, dtype=float).ravel()
    myh = np.asarray(mu_y_hat, dtype=float).ravel()
    var = float(beta @ S @ beta)
    if var <= DEGENERATE_TOL:
        if on_degenerate == "raise":
            raise DegenerateDirectionError(f"beta' Sigma beta = {var:.3e}")
        return 0.5
    sd = np.sqrt(var)
    half_gap = (mxh - myh) @ beta / (2.0 * sd)
    y_term = std_normal_cdf(-half_gap - (myh - my) @ beta / sd)
    x_term = std_normal_cdf(-half_gap + (mxh - mx) @ beta / sd)
    return 0.5 * (y_term + x_term)
