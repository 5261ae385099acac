"""Kernel-weighted (Nadaraya-Watson) class means and pooled local covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClassLabel, DataSet, as_point
from .exceptions import EmptyWindowError
from .kernels import Bandwidth, KernelSpec, product_kernel_weights

__all__ = [
    "WEIGHT_FLOOR",
    "LocalMoments",
    "local_weights",
    "weighted_moments",
    "nw_mean",
    "local_class_covariance",
    "pooled_local_moments",
]

WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class LocalMoments:
    mu_x_hat: np.ndarray
    mu_y_hat: np.ndarray
    sigma_hat: np.ndarray
    effective_weight_x: float
    effective_weight_y: float

    @property
    def delta_hat(self) -> np.ndarray:
        return self.mu_x_hat - self.mu_y_hat

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.mu_x_hat + self.mu_y_hat)


def local_weights(covariates, u, H: Bandwidth, spec: KernelSpec, *,
                  label=None, weight_floor=WEIGHT_FLOOR):
    """Kernel weights of ``covariates`` at ``u`` and their total.

    Raises :class:`EmptyWindowError` when the total is at or below ``weight_floor``.
    """
    w = product_kernel_weights(spec, H, covariates, u)
    total = float(w.sum())
    if not total > weight_floor:
        lab = None if label is None else ClassLabel(label).value
        raise EmptyWindowError(
            f"empty kernel window for class {lab} at u={np.round(u, 6).tolist()} "
            f"(total weight {total:.3g})", label=lab, point=np.asarray(u).tolist())
    return w, total


def weighted_moments(features, w, total, covariance=True):
    """Weighted mean and (optionally) weighted covariance with weights ``w / total``.

    The covariance is accumulated from centered rows, which equals the second
    moment minus the outer product of the mean but loses less precision.
    """
    a = w / total
    mean = a @ features
    if not covariance:
        return mean, None
    centered = features - mean
    cov = (centered * a[:, None]).T @ centered
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _class_moments(data: DataSet, label, u, H, spec, covariance, weight_floor):
    feats, covs = data.class_arrays(label)
    u = as_point(u, data.d)
    w, total = local_weights(covs, u, H, spec, label=label, weight_floor=weight_floor)
    mean, cov = weighted_moments(feats, w, total, covariance)
    return mean, cov, total


def nw_mean(data: DataSet, label, u, H: Bandwidth, spec: KernelSpec,
            weight_floor=WEIGHT_FLOOR) -> np.ndarray:
    """Nadaraya-Watson estimate of one class's mean feature vector at ``u``."""
    return _class_moments(data, label, u, H, spec, False, weight_floor)[0]


def local_class_covariance(data: DataSet, label, u, H: Bandwidth, spec: KernelSpec,
                           weight_floor=WEIGHT_FLOOR) -> np.ndarray:
    return _class_moments(data, label, u, H, spec, True, weight_floor)[1]


def pooled_local_moments(data: DataSet, u, Hx: Bandwidth, Hy: Bandwidth,
                         spec: KernelSpec, weight_floor=WEIGHT_FLOOR) -> LocalMoments:
    """Both class means and the ``(n1/n, n2/n)`` pooled covariance at ``u``."""
    mx, sx, wx = _class_moments(data, ClassLabel.X, u, Hx, spec, True, weight_floor)
    my, sy, wy = _class_moments(data, ClassLabel.Y, u, Hy, spec, True, weight_floor)
    n1, n2 = data.n1, data.n2
    n = n1 + n2
    sigma = (n1 / n) * sx + (n2 / n) * sy
    return LocalMoments(mx, my, sigma, wx, wy)
