"""Comparators: the static (covariate-free) LPD rule and k-nearest neighbours."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.model_selection import GridSearchCV, StratifiedKFold
from sklearn.neighbors import KNeighborsClassifier
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import ClassLabel, DataSet
from .dantzig import DantzigProblem, solve_dantzig
from .estimator import to_dataset
from .model_selection import DEFAULT_LAMBDA_C, LambdaCvConfig, lambda_cv_path

__all__ = [
    "StaticLpdModel",
    "global_moments",
    "fit_static_lpd",
    "StaticLPDClassifier",
    "knn_classify",
    "KNNBaseline",
]


@dataclass(frozen=True, eq=False)
class StaticLpdModel:
    mu_x_bar: np.ndarray
    mu_y_bar: np.ndarray
    sigma_bar: np.ndarray
    lam: float
    beta_hat: np.ndarray

    def score(self, z) -> float:
        return float((np.asarray(z, dtype=float) - 0.5 * (self.mu_x_bar + self.mu_y_bar))
                     @ self.beta_hat)

    def classify(self, z, u=None) -> ClassLabel:
        return ClassLabel.X if self.score(z) >= 0 else ClassLabel.Y


def global_moments(data: DataSet):
    """Class means and the ``(n1/n, n2/n)`` pooled maximum-likelihood covariance."""
    fx, _ = data.class_arrays("X")
    fy, _ = data.class_arrays("Y")
    mx, my = fx.mean(axis=0), fy.mean(axis=0)
    sx = (fx - mx).T @ (fx - mx) / len(fx)
    sy = (fy - my).T @ (fy - my) / len(fy)
    n = len(fx) + len(fy)
    sigma = (len(fx) / n) * sx + (len(fy) / n) * sy
    return mx, my, 0.5 * (sigma + sigma.T)


def _static_moments_fn(train: DataSet, U):
    try:
        mx, my, sigma = global_moments(train)
    except (ValueError, ZeroDivisionError):
        return [None] * len(U)
    fit = (0.5 * (mx + my), mx - my, sigma)
    return [fit] * len(U)


def fit_static_lpd(data: DataSet, lambda_cv: LambdaCvConfig | float = None) -> StaticLpdModel:
    """Fit the static rule; ``lambda_cv`` is a fixed level or a CV configuration."""
    if data.n1 < 1 or data.n2 < 1:
        raise ValueError("both classes must be present")
    if lambda_cv is None:
        lambda_cv = LambdaCvConfig()
    if isinstance(lambda_cv, LambdaCvConfig):
        lam = lambda_cv_path(data, _static_moments_fn, lambda_cv).lam
    else:
        lam = float(lambda_cv)
    mx, my, sigma = global_moments(data)
    sol = solve_dantzig(DantzigProblem(sigma, mx - my, lam)).raise_for_status("static LPD")
    return StaticLpdModel(mx, my, sigma, lam, sol.beta_hat)


class StaticLPDClassifier(ClassifierMixin, BaseEstimator):
    """Linear programming discriminant with covariate-free moments.

    ``U`` is accepted for interface symmetry with :class:`DLPDClassifier` and ignored.
    """

    def __init__(self, lam="cv", lambda_grid=None, lambda_C_grid=DEFAULT_LAMBDA_C, n_folds=5,
                 random_state=0):
        self.lam = lam
        self.lambda_grid = lambda_grid
        self.lambda_C_grid = lambda_C_grid
        self.n_folds = n_folds
        self.random_state = random_state

    def fit(self, X, y, U=None):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError("static LPD is a binary classifier")
        self.n_features_in_ = X.shape[1]
        data = to_dataset(X, y, np.zeros((X.shape[0], 1)), self.classes_)
        if isinstance(self.lam, str) and self.lam == "cv":
            seed = int(np.random.default_rng(self.random_state).integers(0, 2**63 - 1, size=2)[1])
            cfg = LambdaCvConfig(K=self.n_folds, grid=self.lambda_grid,
                                 C_grid=self.lambda_C_grid, fold_seed=seed)
        else:
            cfg = float(self.lam)
        self.model_ = fit_static_lpd(data, cfg)
        self.lambda_ = self.model_.lam
        self.coef_ = self.model_.beta_hat
        return self

    def discriminant_score(self, X, U=None):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        m = self.model_
        return (X - 0.5 * (m.mu_x_bar + m.mu_y_bar)) @ m.beta_hat

    def predict(self, X, U=None):
        s = self.discriminant_score(X)
        return np.where(s >= 0, self.classes_[0], self.classes_[1])

    def score(self, X, y, U=None, sample_weight=None):
        from sklearn.metrics import accuracy_score
        return accuracy_score(y, self.predict(X), sample_weight=sample_weight)


def knn_classify(train: DataSet, k: int, z, u=None) -> ClassLabel:
    """Majority label among the ``k`` Euclidean-nearest training rows; ties go to X."""
    if not 1 <= k <= train.n:
        raise ValueError(f"k must lie in [1, {train.n}]")
    z = np.asarray(z, dtype=float).ravel()
    dist = np.sum((train.features - z) ** 2, axis=1)
    nearest = np.argsort(dist, kind="stable")[:k]
    n_x = np.count_nonzero(train.labels[nearest] == "X")
    return ClassLabel.X if 2 * n_x >= k else ClassLabel.Y


class KNNBaseline(ClassifierMixin, BaseEstimator):
    """KNN on the features alone with ``k`` picked by stratified K-fold CV.

    Ties in the vote go to ``classes_[0]``, which is what
    :class:`~sklearn.neighbors.KNeighborsClassifier` does for sorted classes.
    """

    def __init__(self, k="cv", k_grid=tuple(range(1, 26, 2)), n_folds=5, random_state=0):
        self.k = k
        self.k_grid = k_grid
        self.n_folds = n_folds
        self.random_state = random_state

    def fit(self, X, y, U=None):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        if isinstance(self.k, str) and self.k == "cv":
            _, counts = np.unique(y, return_counts=True)
            folds = min(self.n_folds, int(counts.min()))
            max_k = len(y) - -(-len(y) // folds)
            grid = [k for k in self.k_grid if k <= max_k] or [1]
            cv = StratifiedKFold(folds, shuffle=True, random_state=self.random_state)
            search = GridSearchCV(KNeighborsClassifier(), {"n_neighbors": grid}, cv=cv)
            search.fit(X, y)
            self.k_ = int(search.best_params_["n_neighbors"])
        else:
            self.k_ = int(self.k)
        self.knn_ = KNeighborsClassifier(n_neighbors=self.k_).fit(X, y)
        return self

    def predict(self, X, U=None):
        check_is_fitted(self, "knn_")
        return self.knn_.predict(check_array(X, dtype=np.float64))

    def score(self, X, y, U=None, sample_weight=None):
        from sklearn.metrics import accuracy_score
        return accuracy_score(y, self.predict(X), sample_weight=sample_weight)
