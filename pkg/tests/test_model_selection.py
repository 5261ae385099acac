import math

import numpy as np
import pytest

from _oracles import full_loo_gaussian_score
from dlpd.core import DataSet
from dlpd.exceptions import AllWindowsEmptyError
from dlpd.kernels import Bandwidth, KernelSpec
from dlpd.model_selection import (BandwidthCvConfig, LambdaCvConfig, _local_moments_fn,
                                  bandwidth_cv_path, cv_bandwidth_score, default_subset_size,
                                  draw_subsets, lambda_cv_path, select_bandwidth, select_lambda,
                                  stratified_folds)
from dlpd.simulation import ModelSpec, sample_dataset


def small_data(seed=0, n=40, p=5, d=1):
    r = np.random.default_rng(seed)
    fx = r.normal(size=(n, p)) + 0.8
    fy = r.normal(size=(n, p))
    return DataSet.from_classes(fx, r.uniform(size=(n, d)), fy, r.uniform(size=(n, d)))


def test_default_subset_size():
    assert default_subset_size(100, 100, 50) == 10
    assert default_subset_size(20, 30, 50) == 5
    assert default_subset_size(100, 100, 3) == 3
    assert default_subset_size(2, 2, 3) == 1


def test_subsets_distinct_and_deterministic():
    s = draw_subsets(30, 6, 20, 4)
    assert s.shape == (20, 6)
    assert all(len(set(row)) == 6 for row in s)
    assert np.array_equal(s, draw_subsets(30, 6, 20, 4))


@pytest.mark.parametrize("kind", ["tgauss", "epanechnikov"])
def test_full_subset_matches_loop_oracle(kind):
    ds = small_data(1, n=25, p=5)
    H = Bandwidth([0.6])
    cfg = BandwidthCvConfig(N=1, m=5, ridge=1e-3)
    spec = KernelSpec(kind)
    got = cv_bandwidth_score(ds, "X", H, cfg, rng=0, spec=spec)
    F, C = ds.class_arrays("X")
    ref = full_loo_gaussian_score(F, C, H.diag, spec, 1e-3)
    assert got == pytest.approx(ref, rel=1e-8)


def test_empty_window_scores_infinite():
    fx = np.random.default_rng(0).normal(size=(6, 3))
    ds = DataSet.from_classes(fx, [[0], [0.01], [0.02], [0.9], [0.91], [0.92]],
                              fx + 1, np.zeros((6, 1)))
    cfg = BandwidthCvConfig(N=2, m=2)
    assert cv_bandwidth_score(ds, "X", Bandwidth([0.01]), cfg, rng=0,
                              spec=KernelSpec("epanechnikov")) == math.inf


def test_select_bandwidth_all_empty():
    fx = np.random.default_rng(0).normal(size=(6, 3))
    U = [[0.0], [0.2], [0.4], [0.6], [0.8], [1.0]]
    ds = DataSet.from_classes(fx, U, fx, U)
    cfg = BandwidthCvConfig(N=2, m=2, grid=(1e-3,))
    with pytest.raises(AllWindowsEmptyError):
        select_bandwidth(ds, "X", cfg, 0, KernelSpec("epanechnikov"))


def test_single_candidate_grid():
    ds = small_data(2)
    cfg = BandwidthCvConfig(N=5, grid=(1.0,))
    H, scores = bandwidth_cv_path(ds, "Y", cfg, 3)
    assert len(scores) == 1
    assert select_bandwidth(ds, "Y", cfg, 3) == H[0]


def test_bandwidth_selection_deterministic():
    ds = small_data(3)
    cfg = BandwidthCvConfig(N=10)
    assert select_bandwidth(ds, "X", cfg, 11) == select_bandwidth(ds, "X", cfg, 11)


def test_bandwidth_cv_prefers_local_fit():
    # strongly covariate-dependent mean: tiny windows beat a global fit
    r = np.random.default_rng(5)
    u = r.uniform(size=(120, 1))
    f = 6 * np.sin(6 * u) + 0.3 * r.normal(size=(120, 4))
    ds = DataSet.from_classes(f, u, f[:10], u[:10])
    cfg = BandwidthCvConfig(N=4, m=4, grid=(0.25, 8.0))
    H, scores = bandwidth_cv_path(ds, "X", cfg, 0)
    assert scores[0] < scores[1]


def test_stratified_folds_partition():
    labels = np.array(["X"] * 23 + ["Y"] * 17)
    folds = stratified_folds(labels, 5, 9)
    allidx = np.sort(np.concatenate(folds))
    assert np.array_equal(allidx, np.arange(40))
    for f in folds:
        nx = np.count_nonzero(labels[f] == "X")
        assert nx in (4, 5) and len(f) - nx in (3, 4)
    with pytest.raises(ValueError):
        stratified_folds(labels[:22].tolist() + ["Y"] * 3, 5, 0)


def test_lambda_cv_scores_in_range_and_deterministic():
    ds = small_data(4, n=30)
    H = Bandwidth([0.5])
    fn = _local_moments_fn(H, H, KernelSpec(), 1e-12)
    cfg = LambdaCvConfig(K=5, fold_seed=2)
    a = lambda_cv_path(ds, fn, cfg)
    b = lambda_cv_path(ds, fn, cfg)
    assert a.lam == b.lam and np.array_equal(a.scores, b.scores)
    assert np.all(a.scores >= 0) and np.all(a.scores <= ds.n / cfg.K + 1)
    assert a.fold_counts.sum(axis=0).max() <= ds.n
    assert a.lam in a.grid and len(a.grid) == 5


def test_lambda_single_candidate():
    ds = small_data(5, n=20)
    H = Bandwidth([1.0])
    cfg = LambdaCvConfig(K=4, grid=(0.3,))
    assert select_lambda(ds, H, H, KernelSpec(), cfg) == 0.3


def test_lambda_cv_separated_classes():
    # perfectly separated along the first coordinate; small lambda classifies all
    r = np.random.default_rng(6)
    fx = r.normal(size=(25, 3)) * 0.1
    fy = fx.copy()
    fx[:, 0] += 5
    ds = DataSet.from_classes(fx, r.uniform(size=25), fy, r.uniform(size=25))
    H = Bandwidth([10.0])
    res = lambda_cv_path(ds, _local_moments_fn(H, H, KernelSpec(), 1e-12),
                         LambdaCvConfig(K=5, grid=(0.1, 100.0)))
    assert res.scores[0] == pytest.approx(10.0)
    # lambda above |delta|_inf zeroes beta, so every Y point is lost
    assert res.scores[1] == pytest.approx(5.0)
    assert res.lam == 0.1


def test_lambda_ties_go_to_larger():
    ds = small_data(7, n=20)
    H = Bandwidth([1.0])
    res = lambda_cv_path(ds, _local_moments_fn(H, H, KernelSpec(), 1e-12),
                         LambdaCvConfig(K=4, grid=(1e5, 1e6)))
    assert res.scores[0] == res.scores[1]
    assert res.lam == 1e6


def test_failures_counted_as_errors():
    fx = np.ones((10, 2)) + np.random.default_rng(0).normal(size=(10, 2))
    ux = np.r_[np.zeros(5), np.ones(5)]
    ds = DataSet.from_classes(fx, ux, fx - 1, np.zeros(10))
    H = Bandwidth([0.05])
    res = lambda_cv_path(ds, _local_moments_fn(H, H, KernelSpec("epanechnikov"), 1e-12),
                         LambdaCvConfig(K=5, grid=(0.5,)))
    # class-X points at u = 1 have no class-Y neighbours
    assert res.failures == 5


@pytest.mark.slow
def test_model2_bandwidth_interior_minimum():
    spec = ModelSpec("M2", 50, 100, 100, seed=0)
    ds = sample_dataset(spec)
    cfg = BandwidthCvConfig(N=50, grid=(0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 16.0))
    _, scores = bandwidth_cv_path(ds, "X", cfg, 1)
    k = int(np.argmin(scores))
    assert 0 < k < len(scores) - 1


def test_lambda_cv_constant_classes():
    r = np.random.default_rng(10)
    fx = 10 + 1e-3 * r.normal(size=(20, 1))
    fy = -10 + 1e-3 * r.normal(size=(20, 1))
    ds = DataSet.from_classes(fx, r.uniform(size=20), fy, r.uniform(size=20))
    H = Bandwidth([5.0])
    grid = (0.5, 5.0, 15.0, 30.0)
    res = lambda_cv_path(ds, _local_moments_fn(H, H, KernelSpec(), 1e-12),
                         LambdaCvConfig(K=5, grid=grid))
    # every lambda below |delta| = 20 classifies all points, a fold holds 8 of them
    assert np.allclose(res.scores[:3], 8.0)
    assert res.lam == 15.0


@pytest.mark.slow
def test_model1_cv_lambda_close_to_best_grid_lambda():
    from dlpd.classifier import DlpdModel
    from dlpd.estimator import DLPDClassifier
    from dlpd.exceptions import DLPDError
    from dlpd.simulation import sample_test_dataset

    def test_error(model, test):
        wrong = 0
        for z, u, lab in zip(test.features, test.covariates, test.labels):
            try:
                wrong += model.classify(z, u).value != lab
            except DLPDError:
                wrong += 1
        return wrong / test.n

    gaps = []
    for seed in range(10):
        spec = ModelSpec("M1", 50, 100, 100, seed)
        train, test = sample_dataset(spec), sample_test_dataset(spec)
        clf = DLPDClassifier(random_state=seed).fit(train.features, train.labels,
                                                    train.covariates)
        errs = {}
        for lam in clf.cv_results_["lambda"].grid:
            model = DlpdModel(train, clf.bandwidth_x_, clf.bandwidth_y_, clf.model_.kernel, lam)
            errs[lam] = test_error(model, test)
        gaps.append(errs[clf.lambda_] - min(errs.values()))
    assert np.median(gaps) <= 0.03
