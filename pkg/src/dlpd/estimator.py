"""scikit-learn compatible front end for the DLPD classifier.

``fit`` and ``predict`` take the covariate matrix ``U`` as a third argument
next to the feature matrix::

    clf = DLPDClassifier(random_state=0).fit(X, y, U)
    clf.predict(X_new, U_new)

The first entry of ``classes_`` (in sorted order) plays the role of
population X; a nonnegative discriminant score predicts it.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .classifier import DlpdModel
from .core import DataSet, seeded_rng
from .exceptions import DLPDError
from .kernels import Bandwidth, KernelSpec
from .local_moments import WEIGHT_FLOOR
from .model_selection import (
    DEFAULT_BANDWIDTH_GRID,
    DEFAULT_LAMBDA_C,
    BandwidthCvConfig,
    LambdaCvConfig,
    _center_bandwidth,
    _local_moments_fn,
    lambda_cv_path,
    select_bandwidth,
)

__all__ = ["DLPDClassifier", "check_covariates", "to_dataset"]


def check_covariates(U, n_samples):
    U = check_array(U, ensure_2d=False, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[0] != n_samples:
        raise ValueError(f"U has {U.shape[0]} rows but X has {n_samples}")
    return U


def to_dataset(X, y, U, classes):
    """Map ``classes[0]`` to population X and ``classes[1]`` to Y."""
    labels = np.where(np.asarray(y) == classes[0], "X", "Y")
    return DataSet(X, U, labels)


class DLPDClassifier(ClassifierMixin, BaseEstimator):
    """Dynamic linear programming discriminant.

    Parameters
    ----------
    kernel : {"tgauss", "epanechnikov"}
        Univariate kernel of the product kernel.
    tgauss_cutoff : float
        Truncation point of the truncated Gaussian kernel.
    bandwidth : "cv", float or array-like
        ``"cv"`` selects the class-X bandwidth by subset-variable CV. A float is
        a multiplier of the rate bandwidth; an array gives the diagonal directly.
    bandwidth_y : None, "same", float or array-like
        Class-Y bandwidth. ``None`` follows ``bandwidth`` with an independent
        selection; ``"same"`` reuses the class-X bandwidth.
    lam : "cv" or float
        Dantzig level. ``"cv"`` uses K-fold CV over ``lambda_grid`` or, when that
        is None, over the rate-based grid built from ``lambda_C_grid``.
    tuning : {"separate", "joint"}
        ``"joint"`` searches the bandwidth multiplier (shared by both classes)
        and lambda together by the lambda CV criterion.
    bandwidth_scale : {"range", "unit"}
        Whether the rate bandwidth is multiplied by each covariate's sample range.
    """

    def __init__(self, kernel="tgauss", tgauss_cutoff=4.0, bandwidth="cv", bandwidth_y=None,
                 bandwidth_grid=DEFAULT_BANDWIDTH_GRID, n_subsets=50, subset_size=None,
                 ridge=1e-8, lam="cv", lambda_grid=None, lambda_C_grid=DEFAULT_LAMBDA_C,
                 n_folds=5, tuning="separate", bandwidth_scale="range",
                 weight_floor=WEIGHT_FLOOR, cache=True, random_state=0):
        self.kernel = kernel
        self.tgauss_cutoff = tgauss_cutoff
        self.bandwidth = bandwidth
        self.bandwidth_y = bandwidth_y
        self.bandwidth_grid = bandwidth_grid
        self.n_subsets = n_subsets
        self.subset_size = subset_size
        self.ridge = ridge
        self.lam = lam
        self.lambda_grid = lambda_grid
        self.lambda_C_grid = lambda_C_grid
        self.n_folds = n_folds
        self.tuning = tuning
        self.bandwidth_scale = bandwidth_scale
        self.weight_floor = weight_floor
        self.cache = cache
        self.random_state = random_state

    def _kernel_spec(self):
        return KernelSpec(self.kernel, self.tgauss_cutoff)

    def _resolve_bandwidth(self, value, data, label, rng):
        F, C = data.class_arrays(label)
        if isinstance(value, str) and value == "cv":
            cfg = BandwidthCvConfig(N=self.n_subsets, m=self.subset_size,
                                    grid=self.bandwidth_grid, ridge=self.ridge)
            return select_bandwidth(data, label, cfg, rng, self._kernel_spec(),
                                    self.bandwidth_scale)
        if isinstance(value, numbers.Real):
            return _center_bandwidth(C, len(F), data.p, self.bandwidth_scale).scaled(float(value))
        return Bandwidth(np.broadcast_to(np.asarray(value, dtype=float), (data.d,)))

    def _lambda_cfg(self, seed):
        return LambdaCvConfig(K=self.n_folds, grid=self.lambda_grid, C_grid=self.lambda_C_grid,
                              fold_seed=seed)

    def fit(self, X, y, U):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        U = check_covariates(U, X.shape[0])
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(f"DLPD is a binary classifier; got {self.classes_.shape[0]} classes")
        self.n_features_in_ = X.shape[1]
        self.n_covariates_in_ = U.shape[1]
        data = to_dataset(X, y, U, self.classes_)
        spec = self._kernel_spec()
        rng = seeded_rng(self.random_state)
        bw_seed, fold_seed = (int(s) for s in rng.integers(0, 2**63 - 1, size=2))
        self.cv_results_ = {}

        if self.tuning == "joint":
            Hx, Hy, lam = self._joint_search(data, spec, fold_seed)
        elif self.tuning == "separate":
            Hx = self._resolve_bandwidth(self.bandwidth, data, "X", bw_seed)
            if isinstance(self.bandwidth_y, str) and self.bandwidth_y == "same":
                Hy = Hx
            else:
                by = self.bandwidth if self.bandwidth_y is None else self.bandwidth_y
                Hy = self._resolve_bandwidth(by, data, "Y", bw_seed + 1)
            lam = self._resolve_lambda(data, Hx, Hy, spec, fold_seed)
        else:
            raise ValueError(f"unknown tuning mode {self.tuning!r}")

        self.bandwidth_x_, self.bandwidth_y_, self.lambda_ = Hx, Hy, float(lam)
        self.model_ = DlpdModel(data, Hx, Hy, spec, self.lambda_, self.weight_floor,
                                use_cache=self.cache)
        return self

    def _resolve_lambda(self, data, Hx, Hy, spec, fold_seed):
        if not (isinstance(self.lam, str) and self.lam == "cv"):
            return float(self.lam)
        res = lambda_cv_path(data, _local_moments_fn(Hx, Hy, spec, self.weight_floor),
                             self._lambda_cfg(fold_seed))
        self.cv_results_["lambda"] = res
        return res.lam

    def _joint_search(self, data, spec, fold_seed):
        best = None
        path = []
        for mult in self.bandwidth_grid:
            Hx = self._resolve_bandwidth(float(mult), data, "X", None)
            Hy = self._resolve_bandwidth(float(mult), data, "Y", None)
            res = lambda_cv_path(data, _local_moments_fn(Hx, Hy, spec, self.weight_floor),
                                 self._lambda_cfg(fold_seed))
            score = float(res.scores.max())
            path.append((float(mult), res))
            key = (score, res.lam, float(mult))
            if best is None or key > best[0]:
                best = (key, Hx, Hy, res.lam)
        self.cv_results_["joint"] = path
        return best[1], best[2], best[3]

    def _check_predict_input(self, X, U):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        U = check_covariates(U, X.shape[0])
        if U.shape[1] != self.n_covariates_in_:
            raise ValueError(f"U has {U.shape[1]} columns, expected {self.n_covariates_in_}")
        return X, U

    def discriminant_score(self, X, U):
        """DLPD score per row; ``>= 0`` means ``classes_[0]``."""
        X, U = self._check_predict_input(X, U)
        return np.array([self.model_.score(z, u) for z, u in zip(X, U)])

    def predict(self, X, U):
        scores = self.discriminant_score(X, U)
        return np.where(scores >= 0, self.classes_[0], self.classes_[1])

    def predict_with_status(self, X, U):
        """Predict row by row, recording failures instead of raising.

        Returns ``(labels, errors)`` where ``labels`` is an object array holding
        ``None`` for rows that could not be classified and ``errors`` holds the
        matching exception messages (``None`` on success).
        """
        X, U = self._check_predict_input(X, U)
        labels = np.empty(X.shape[0], dtype=object)
        errors = [None] * X.shape[0]
        for i, (z, u) in enumerate(zip(X, U)):
            try:
                s = self.model_.score(z, u)
                labels[i] = self.classes_[0] if s >= 0 else self.classes_[1]
            except DLPDError as exc:
                labels[i] = None
                errors[i] = f"{type(exc).__name__}: {exc}"
        return labels, errors

    def local_direction(self, u):
        """Estimated discriminant direction at a covariate point."""
        check_is_fitted(self, "model_")
        return self.model_.beta(u)

    def score(self, X, y, U, sample_weight=None):
        from sklearn.metrics import accuracy_score
        return accuracy_score(y, self.predict(X, U), sample_weight=sample_weight)
