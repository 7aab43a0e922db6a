import csv
import os
import tempfile
import unittest

import numpy as np

from proxcomp.components.compiler import compile_problem
from proxcomp.components.separator import separate
from proxcomp.components.solver import ADMMSolver, SolverParams, solve, stopping_check
from proxcomp.objects import Constant, Logger, NonNeg, Problem, Variable, evaluate
from proxcomp.objects.atoms import sum_squares
from proxcomp.problems.library import BenchmarkSpec, generate
from proxcomp.utils.constants import Constants

Logger.DISABLED = True


def separable_of(problem):
    return separate(compile_problem(problem).prox_affine)


def lasso_reference(X, y, lam, iterations=20000):
    """ Accelerated proximal gradient for 1/2 ||X theta - y||^2 + lam ||theta||_1. """
    step = 1.0 / np.linalg.norm(X, 2) ** 2
    theta = np.zeros(X.shape[1])
    z, t = theta.copy(), 1.0
    for _ in range(iterations):
        g = z - step * (X.T @ (X @ z - y))
        new = np.sign(g) * np.maximum(np.abs(g) - step * lam, 0.0)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = new + ((t - 1.0) / t_next) * (new - theta)
        theta, t = new, t_next
    return theta


class TestSolver(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(17)

    def test_least_squares_in_one_step(self):
        A = self.rng.standard_normal((12, 4))
        b = self.rng.standard_normal((12, 1))
        x = Variable(4, name='x')
        result = solve(separable_of(Problem(sum_squares(Constant(A) @ x - b))))
        self.assertEqual(result.status, Constants.OPTIMAL)
        self.assertLessEqual(result.diagnostics['iterations'], 2)
        expected = np.linalg.lstsq(A, b.reshape(-1), rcond=None)[0]
        np.testing.assert_allclose(result.solution['x'].reshape(-1), expected, rtol=1e-8, atol=1e-10)

    def test_nonneg_least_squares(self):
        a = np.array([1.5, -2.0, 0.25, -0.1])
        x = Variable(4, name='x')
        problem = Problem(sum_squares(x - a.reshape(4, 1)), [NonNeg(x)])
        params = SolverParams(abs_tol=1e-8, rel_tol=1e-8)
        result = solve(separable_of(problem), params)
        self.assertEqual(result.status, Constants.OPTIMAL)
        np.testing.assert_allclose(result.solution['x'].reshape(-1), np.maximum(a, 0.0), atol=1e-6)

    def test_lasso_matches_reference(self):
        instance = generate(BenchmarkSpec('lasso', m=30, n=20, seed=3))
        X, y, lam = instance.data['X'], instance.data['y'], instance.data['lam']
        params = SolverParams(max_iters=10000, abs_tol=1e-7, rel_tol=1e-6)
        result = solve(separable_of(instance.problem), params)
        objective = evaluate(instance.problem.objective, result.solution)
        theta = lasso_reference(X, y, lam)
        reference = 0.5 * float(np.sum((X @ theta - y) ** 2)) + lam * float(np.sum(np.abs(theta)))
        self.assertAlmostEqual(objective, reference, delta=1e-4 * (1.0 + abs(reference)))

    def test_scaled_dual_step(self):
        instance = generate(BenchmarkSpec('lasso', m=10, n=6, seed=8))
        solver = ADMMSolver(separable_of(instance.problem))
        state = solver.initial_state()
        for _ in range(5):
            before = state.u.copy()
            solver.sweep(state)
            residual = sum(state.products) - solver.b
            np.testing.assert_allclose(state.u - before, residual, atol=1e-12)
            np.testing.assert_allclose(state.primal_residual, residual, atol=1e-12)

    def test_stopping_check(self):
        a = np.array([1.5, -2.0, 0.25, -0.1])
        x = Variable(4, name='x')
        params = SolverParams(abs_tol=1e-8, rel_tol=1e-8)
        solver = ADMMSolver(separable_of(Problem(sum_squares(x - a.reshape(4, 1)), [NonNeg(x)])), params)
        self.assertEqual(solver.solve().status, Constants.OPTIMAL)
        self.assertTrue(stopping_check(solver, solver.state, params))

        instance = generate(BenchmarkSpec('lasso', m=10, n=6, seed=8))
        tight = SolverParams(abs_tol=1e-12, rel_tol=1e-12, initial='random', seed=1)
        solver = ADMMSolver(separable_of(instance.problem), tight)
        state = solver.initial_state()
        solver.sweep(state)
        self.assertFalse(stopping_check(solver, state, tight))

    def test_compute_v(self):
        instance = generate(BenchmarkSpec('lasso', m=10, n=6, seed=8))
        solver = ADMMSolver(separable_of(instance.problem),
                            SolverParams(initial='random', max_iters=1))
        state = solver.initial_state()
        solver.sweep(state)
        v = solver.compute_v(0, state)
        expected = solver.b - state.u - sum(state.products[1:])
        np.testing.assert_allclose(v, expected)

    def test_deterministic(self):
        instance = generate(BenchmarkSpec('lasso', m=10, n=8, seed=2))
        separable = separable_of(instance.problem)
        params = SolverParams(max_iters=200, initial='random', seed=4)
        first = ADMMSolver(separable, params).solve()
        second = ADMMSolver(separable, params).solve()
        self.assertEqual(first.diagnostics['iterations'], second.diagnostics['iterations'])
        for var_id, value in first.solution.items():
            np.testing.assert_array_equal(value, second.solution[var_id])

    def test_max_iters_status(self):
        instance = generate(BenchmarkSpec('lasso', m=10, n=30, seed=2))
        result = solve(separable_of(instance.problem), SolverParams(max_iters=3, abs_tol=1e-12,
                                                                     rel_tol=1e-12))
        self.assertEqual(result.status, Constants.MAX_ITERS)
        self.assertEqual(result.diagnostics['iterations'], 3)
        self.assertEqual(len(result.diagnostics['primal_residuals']), 3)
        self.assertEqual(sum(result.diagnostics['prox_calls'].values()), 6)

    def test_adaptive_lambda_moves(self):
        instance = generate(BenchmarkSpec('lasso', m=20, n=10, seed=6))
        params = SolverParams(lam=100.0, adaptive=True, max_iters=50)
        result = solve(separable_of(instance.problem), params)
        self.assertNotEqual(result.diagnostics['lam'], 100.0)

    def test_trace_csv(self):
        instance = generate(BenchmarkSpec('lasso', m=10, n=8, seed=2))
        path = os.path.join(tempfile.mkdtemp(), 'trace.csv')
        result = solve(separable_of(instance.problem), SolverParams(max_iters=20), trace_csv=path)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['iter', 'objective', 'primal_res', 'dual_res', 'elapsed_ms'])
        self.assertEqual(len(rows) - 1, result.diagnostics['iterations'])

    def test_params_validation(self):
        with self.assertRaises(ValueError):
            SolverParams(lam=0.0)
        with self.assertRaises(ValueError):
            SolverParams(max_iters=0)
        with self.assertRaises(ValueError):
            SolverParams(initial='ones')
        with self.assertRaises(ValueError):
            SolverParams(adaptive='yes')
        with self.assertRaises(ValueError):
            SolverParams(abs_tol=-1.0)


if __name__ == '__main__':
    unittest.main()
