"""Tuning: subset-variable leave-one-out CV for bandwidths, K-fold CV for lambda."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ClassLabel, DataSet, seeded_rng
from .dantzig import DantzigProblem, lambda_rate, solve_dantzig
from .exceptions import AllWindowsEmptyError, DLPDError
from .kernels import Bandwidth, KernelSpec, product_kernel_weights, rate_bandwidth
from .local_moments import WEIGHT_FLOOR, pooled_local_moments

__all__ = [
    "BandwidthCvConfig",
    "LambdaCvConfig",
    "default_subset_size",
    "draw_subsets",
    "cv_bandwidth_score",
    "bandwidth_cv_path",
    "select_bandwidth",
    "stratified_folds",
    "default_lambda_grid",
    "lambda_cv_path",
    "select_lambda",
    "LambdaCvResult",
]

DEFAULT_BANDWIDTH_GRID = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0)
DEFAULT_LAMBDA_C = (0.25, 0.5, 1.0, 2.0, 4.0)


def default_subset_size(n1, n2, p) -> int:
    return max(1, min(10, min(n1, n2) // 4, p))


@dataclass(frozen=True)
class BandwidthCvConfig:
    N: int = 50
    m: int | None = None
    grid: Sequence[float] = DEFAULT_BANDWIDTH_GRID
    ridge: float = 1e-8

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.m is not None and self.m < 1:
            raise ValueError("subset size m must be at least 1")
        grid = tuple(float(g) for g in self.grid)
        if not grid or any(not g > 0 for g in grid):
            raise ValueError("bandwidth grid must be nonempty and positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        object.__setattr__(self, "grid", grid)

    def subset_size(self, n_class, p) -> int:
        m = self.m if self.m is not None else default_subset_size(n_class, n_class, p)
        if m > p:
            raise ValueError(f"subset size {m} exceeds p={p}")
        if m >= n_class:
            raise ValueError(f"subset size {m} must be smaller than the class size {n_class}")
        return m


def draw_subsets(p, m, N, rng) -> np.ndarray:
    """``N`` coordinate subsets of size ``m``, each drawn without replacement."""
    rng = seeded_rng(rng)
    return np.array([np.sort(rng.choice(p, size=m, replace=False)) for _ in range(N)])


def _loo_weights(covariates, H, spec, weight_floor):
    W = product_kernel_weights(spec, H, covariates, covariates)
    np.fill_diagonal(W, 0.0)
    totals = W.sum(axis=1)
    if np.any(totals <= weight_floor):
        return None
    return W / totals[:, None]


def _subset_score(F, A, idx, ridge):
    Fr = F[:, idx]
    mean = A @ Fr
    D = Fr[None, :, :] - mean[:, None, :]
    cov = np.matmul(np.swapaxes(D * A[:, :, None], 1, 2), D)
    m = len(idx)
    scale = np.trace(cov, axis1=1, axis2=2) / m
    scale = np.where(scale > 0, scale, 1.0)
    cov = cov + (ridge * scale)[:, None, None] * np.eye(m)
    resid = Fr - mean
    try:
        L = np.linalg.cholesky(cov)
        w = np.linalg.solve(L, resid[:, :, None])[:, :, 0]
        maha = np.sum(w * w, axis=1)
        logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
    except np.linalg.LinAlgError:
        sign, logdet = np.linalg.slogdet(cov)
        if np.any(sign <= 0):
            return math.inf
        maha = np.einsum("ij,ij->i", resid, np.linalg.solve(cov, resid[:, :, None])[:, :, 0])
    return float(np.mean(maha + logdet))


def cv_bandwidth_score(data: DataSet, label, H: Bandwidth, cfg: BandwidthCvConfig, rng=None,
                       spec: KernelSpec = None, *, subsets=None,
                       weight_floor=WEIGHT_FLOOR) -> float:
    """Subset-variable leave-one-out Gaussian score of one class at bandwidth ``H``.

    For each of ``cfg.N`` random coordinate subsets the left-out observation is
    scored by its Mahalanobis distance to the leave-one-out local mean plus the
    log-determinant of the leave-one-out local covariance (both restricted to
    the subset, with a relative ridge). Scores are averaged over observations
    and subsets. Returns ``inf`` when some left-out point has an empty window.
    """
    spec = spec or KernelSpec()
    F, C = data.class_arrays(label)
    n, p = F.shape
    if subsets is None:
        subsets = draw_subsets(p, cfg.subset_size(n, p), cfg.N, rng)
    A = _loo_weights(C, H, spec, weight_floor)
    if A is None:
        return math.inf
    scores = [_subset_score(F, A, idx, cfg.ridge) for idx in subsets]
    return float(np.mean(scores))


def _center_bandwidth(covariates, n, p, scale_mode="range"):
    base = rate_bandwidth(max(n, 2), max(p, 2), covariates.shape[1])
    if scale_mode == "unit":
        return base
    spread = np.ptp(covariates, axis=0) if len(covariates) > 1 else np.ones(covariates.shape[1])
    spread = np.where(spread > 0, spread, 1.0)
    return Bandwidth(base.diag * spread)


def bandwidth_cv_path(data: DataSet, label, cfg: BandwidthCvConfig, rng=None,
                      spec: KernelSpec = None, scale_mode="range"):
    """CV score for every grid multiplier. Returns ``(bandwidths, scores)``.

    All candidates share the same coordinate subsets.
    """
    spec = spec or KernelSpec()
    F, C = data.class_arrays(label)
    n, p = F.shape
    subsets = draw_subsets(p, cfg.subset_size(n, p), cfg.N, rng)
    center = _center_bandwidth(C, n, p, scale_mode)
    bandwidths = [center.scaled(g) for g in cfg.grid]
    scores = [cv_bandwidth_score(data, label, H, cfg, spec=spec, subsets=subsets)
              for H in bandwidths]
    return bandwidths, np.array(scores)


def select_bandwidth(data: DataSet, label, cfg: BandwidthCvConfig = None, rng=None,
                     spec: KernelSpec = None, scale_mode="range") -> Bandwidth:
    """Grid multiplier of the rate bandwidth minimising the subset CV score.

    Ties go to the smaller multiplier.
    """
    cfg = cfg or BandwidthCvConfig()
    bandwidths, scores = bandwidth_cv_path(data, label, cfg, rng, spec, scale_mode)
    if not np.any(np.isfinite(scores)):
        raise AllWindowsEmptyError(
            f"every bandwidth candidate leaves a class-{ClassLabel(label).value} point "
            "with an empty window")
    order = sorted(range(len(scores)), key=lambda i: (scores[i], cfg.grid[i]))
    return bandwidths[order[0]]


@dataclass(frozen=True)
class LambdaCvConfig:
    K: int = 5
    grid: Sequence[float] | None = None
    C_grid: Sequence[float] = DEFAULT_LAMBDA_C
    fold_seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.grid is not None:
            grid = tuple(float(g) for g in self.grid)
            if not grid or any(not (g >= 0 and math.isfinite(g)) for g in grid):
                raise ValueError("lambda grid must be nonempty, finite and nonnegative")
            object.__setattr__(self, "grid", grid)
        if not self.C_grid or any(not c > 0 for c in self.C_grid):
            raise ValueError("C grid must be nonempty and positive")
        object.__setattr__(self, "C_grid", tuple(float(c) for c in self.C_grid))


def stratified_folds(labels, K, seed) -> list[np.ndarray]:
    """Split indices into ``K`` disjoint folds, each class shuffled and dealt separately."""
    labels = np.asarray(labels)
    rng = seeded_rng(seed)
    folds = [[] for _ in range(K)]
    for lab in ("X", "Y"):
        idx = np.flatnonzero(labels == lab)
        if idx.size < K:
            raise ValueError(f"class {lab} has {idx.size} samples, fewer than K={K} folds")
        idx = rng.permutation(idx)
        for k, part in enumerate(np.array_split(idx, K)):
            folds[k].extend(part.tolist())
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def _local_moments_fn(Hx, Hy, kernel, weight_floor):
    def moments(train: DataSet, U):
        out = []
        for u in U:
            try:
                mom = pooled_local_moments(train, u, Hx, Hy, kernel, weight_floor)
                out.append((mom.midpoint, mom.delta_hat, mom.sigma_hat))
            except DLPDError:
                out.append(None)
        return out
    return moments


def default_lambda_grid(data: DataSet, moments_fn, C_grid=DEFAULT_LAMBDA_C) -> list[float]:
    """``lambda_rate`` at each ``C`` with the sup-norm local mean gap as scale.

    The Mahalanobis scale in the rate is not estimable when ``p`` exceeds the
    local sample size, so the largest ``|mu_X(u) - mu_Y(u)|_inf`` over the
    training covariates stands in for it.
    """
    fits = [f for f in moments_fn(data, data.covariates) if f is not None]
    if not fits:
        raise AllWindowsEmptyError("no training covariate has nonempty windows for both classes")
    scale = max(float(np.max(np.abs(f[1]))) for f in fits)
    if not scale > 0:
        scale = 1.0
    return [lambda_rate(max(data.n, 2), max(data.p, 2), data.d, scale, C) for C in C_grid]


@dataclass
class LambdaCvResult:
    lam: float
    grid: list
    scores: np.ndarray
    fold_counts: np.ndarray = field(repr=False)
    failures: int = 0


def lambda_cv_path(data: DataSet, moments_fn: Callable, cfg: LambdaCvConfig) -> LambdaCvResult:
    """K-fold CV of the averaged number of correct classifications per lambda.

    ``moments_fn(train, U)`` returns, for each row of ``U``, either ``None``
    (no usable local fit, counted as an error) or ``(midpoint, delta, sigma)``.
    An infeasible Dantzig program also counts as an error. The selected lambda
    maximises the score, ties going to the larger lambda.
    """
    grid = list(cfg.grid) if cfg.grid is not None else default_lambda_grid(
        data, moments_fn, cfg.C_grid)
    folds = stratified_folds(data.labels, cfg.K, cfg.fold_seed)
    counts = np.zeros((cfg.K, len(grid)))
    failures = 0
    all_idx = np.arange(data.n)
    for k, test in enumerate(folds):
        train = data.subset(np.setdiff1d(all_idx, test))
        fits = moments_fn(train, data.covariates[test])
        for i, fit in zip(test, fits):
            if fit is None:
                failures += 1
                continue
            mid, delta, sigma = fit
            z = data.features[i] - mid
            is_x = data.labels[i] == "X"
            for j, lam in enumerate(grid):
                sol = solve_dantzig(DantzigProblem(sigma, delta, lam))
                if not sol.ok:
                    continue
                s = z @ sol.beta_hat
                # ties belong to X, as in the decision rule
                counts[k, j] += (s >= 0) if is_x else (s < 0)
    scores = counts.mean(axis=0)
    best = max(range(len(grid)), key=lambda j: (scores[j], grid[j]))
    return LambdaCvResult(lam=float(grid[best]), grid=[float(g) for g in grid], scores=scores,
                          fold_counts=counts, failures=failures)


def select_lambda(data: DataSet, Hx: Bandwidth, Hy: Bandwidth, kernel: KernelSpec,
                  cfg: LambdaCvConfig = None, weight_floor=WEIGHT_FLOOR) -> float:
    """Lambda maximising the K-fold averaged count of correct DLPD classifications."""
    cfg = cfg or LambdaCvConfig()
    return lambda_cv_path(data, _local_moments_fn(Hx, Hy, kernel, weight_floor), cfg).lam
