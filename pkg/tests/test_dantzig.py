import math

import numpy as np
import pytest

from _oracles import dantzig_vertex_optimum
from dlpd.dantzig import (DantzigProblem, SolveStatus, build_lp, lambda_rate, soft_threshold,
                          solve_dantzig)
from dlpd.exceptions import InfeasibleError
from dlpd.simplex import linprog_simplex


def random_problem(r, p, singular=False):
    k = max(1, p - 1) if singular else p + 3
    A = r.normal(size=(k, p))
    S = A.T @ A / k
    delta = r.normal(size=p)
    lam = float(r.uniform(0.0, 0.8) * np.abs(delta).max())
    return DantzigProblem(S, delta, lam)


class TestSimplex:
    def test_textbook_max(self):
        # max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
        res = linprog_simplex([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        assert res.success
        assert np.allclose(res.x, [2, 6])
        assert res.fun == pytest.approx(-36)

    def test_phase_one_needed(self):
        # min x + y st x + y >= 2, x <= 3
        res = linprog_simplex([1, 1], [[-1, -1], [1, 0]], [-2, 3])
        assert res.success and res.fun == pytest.approx(2)

    def test_infeasible(self):
        res = linprog_simplex([1], [[1], [-1]], [1, -2])
        assert res.status == "infeasible"

    def test_unbounded(self):
        res = linprog_simplex([-1, 0], [[-1, 1]], [1])
        assert res.status == "unbounded"

    def test_free_variable(self):
        # min x st x >= -5 with x free
        res = linprog_simplex([1], [[-1]], [5], free=[True])
        assert res.success and res.x[0] == pytest.approx(-5)

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the textbook rule without anti-cycling
        c = [-0.75, 150, -0.02, 6]
        A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
        res = linprog_simplex(c, A, [0, 0, 1], bland_after=1)
        assert res.success and res.fun == pytest.approx(-0.05)

    def test_iteration_cap(self):
        res = linprog_simplex([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], max_iter=1)
        assert res.status == "iteration_limit"


class TestBuildLp:
    @pytest.mark.parametrize("p", [1, 3])
    def test_shape(self, p, rng):
        c, A, b, free = build_lp(random_problem(rng, p))
        assert c.shape == (2 * p,) and A.shape == (4 * p, 2 * p) and b.shape == (4 * p,)
        assert free.sum() == p

    def test_zero_feasible_iff_small_delta(self, rng):
        for _ in range(20):
            prob = random_problem(rng, 3)
            _, A, b, _ = build_lp(prob)
            zero_ok = bool(np.all(A @ np.zeros(6) <= b))
            assert zero_ok == (np.abs(prob.delta_hat).max() <= prob.lam)

    def test_problem_validation(self):
        with pytest.raises(ValueError):
            DantzigProblem(np.eye(2), [1.0, 1.0], -0.1)
        with pytest.raises(ValueError):
            DantzigProblem([[1.0, 0.5], [0.0, 1.0]], [1.0, 1.0], 0.1)
        with pytest.raises(ValueError):
            DantzigProblem(np.eye(3), [1.0, 1.0], 0.1)


class TestSolveDantzig:
    def test_zero_delta(self, rng):
        sol = solve_dantzig(DantzigProblem(np.eye(3) * 2, np.zeros(3), 0.0))
        assert sol.ok and np.array_equal(sol.beta_hat, np.zeros(3)) and sol.objective == 0

    def test_large_lambda(self, rng):
        prob = random_problem(rng, 4)
        sol = solve_dantzig(DantzigProblem(prob.sigma_hat, prob.delta_hat,
                                           np.abs(prob.delta_hat).max()))
        assert np.array_equal(sol.beta_hat, np.zeros(4))

    @pytest.mark.parametrize("formulation", ["split", "paper"])
    def test_identity_example(self, formulation):
        sol = solve_dantzig(DantzigProblem(np.eye(2), [1.0, 0.2], 0.1), formulation=formulation)
        assert sol.status is SolveStatus.OPTIMAL
        assert np.allclose(sol.beta_hat, [0.9, 0.1], atol=1e-12)
        assert sol.objective == pytest.approx(1.0, abs=1e-12)
        assert dantzig_vertex_optimum(np.eye(2), [1.0, 0.2], 0.1)[0] == pytest.approx(1.0)

    def test_vertex_oracle_random(self, rng):
        for _ in range(60):
            p = int(rng.integers(1, 5))
            prob = random_problem(rng, p, singular=bool(rng.random() < 0.3))
            ref, _ = dantzig_vertex_optimum(prob.sigma_hat, prob.delta_hat, prob.lam)
            for form in ("split", "paper"):
                sol = solve_dantzig(prob, formulation=form)
                if math.isinf(ref):
                    assert sol.status is SolveStatus.INFEASIBLE
                    with pytest.raises(InfeasibleError):
                        sol.raise_for_status()
                else:
                    assert sol.ok
                    assert sol.objective == pytest.approx(ref, abs=1e-8)
                    assert sol.residual_inf_norm <= prob.lam + 1e-9
                    assert sol.objective == pytest.approx(np.abs(sol.beta_hat).sum(), abs=1e-10)

    def test_soft_threshold_identity(self, rng):
        for _ in range(100):
            p = int(rng.integers(1, 12))
            delta = rng.normal(size=p)
            lam = float(rng.uniform(0, 1.5))
            sol = solve_dantzig(DantzigProblem(np.eye(p), delta, lam))
            assert np.allclose(sol.beta_hat, soft_threshold(delta, lam), rtol=0, atol=1e-9)

    def test_monotone_in_lambda(self, rng):
        for _ in range(50):
            prob = random_problem(rng, int(rng.integers(2, 7)))
            top = np.abs(prob.delta_hat).max()
            objs = [solve_dantzig(DantzigProblem(prob.sigma_hat, prob.delta_hat, lam)).objective
                    for lam in np.linspace(0.0, top, 10)]
            assert np.all(np.diff(objs) <= 1e-9)

    def test_dominance_by_exact_inverse(self, rng):
        for _ in range(50):
            prob = random_problem(rng, int(rng.integers(2, 10)))
            sol = solve_dantzig(prob)
            bound = np.abs(np.linalg.solve(prob.sigma_hat, prob.delta_hat)).sum()
            assert sol.objective <= bound + 1e-8

    def test_lambda_zero_interpolates(self, rng):
        prob = random_problem(rng, 5)
        sol = solve_dantzig(DantzigProblem(prob.sigma_hat, prob.delta_hat, 0.0))
        assert np.allclose(sol.beta_hat, np.linalg.solve(prob.sigma_hat, prob.delta_hat), atol=1e-8)

    def test_deterministic(self, rng):
        prob = random_problem(rng, 8)
        a, b = solve_dantzig(prob), solve_dantzig(prob)
        assert np.array_equal(a.beta_hat, b.beta_hat) and a.iterations == b.iterations

    def test_high_dimensional_singular_sigma(self, rng):
        # p = 60 with 30 observations: feasible only once lambda is large enough
        X = rng.normal(size=(30, 60))
        S = np.cov(X.T, bias=True)
        delta = np.r_[np.ones(10), np.zeros(50)] + 0.1 * rng.normal(size=60)
        big = solve_dantzig(DantzigProblem(S, delta, 0.5 * np.abs(delta).max()))
        assert big.ok and big.residual_inf_norm <= 0.5 * np.abs(delta).max() + 1e-9


def test_lambda_rate():
    # (log 50 / 100) ** 0.4 * 2.7724 from mpmath
    assert lambda_rate(100, 50, 1, 2.7724, 1.0) == pytest.approx(0.75825703828756717, rel=1e-13)
    assert lambda_rate(100, 50, 1, 2.7724, 2.0) == pytest.approx(2 * 0.75825703828756717)
    n = 5
    assert lambda_rate(n, math.exp(n), 1, 3.0, 1.5) == pytest.approx(4.5)
