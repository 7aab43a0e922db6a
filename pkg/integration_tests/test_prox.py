import unittest

import numpy as np
from scipy.optimize import minimize_scalar

from proxcomp.linops import DenseOp, DiagonalOp, ScalarOp
from proxcomp.objects import Logger
from proxcomp.prox import (project_cone, project_l1_ball, project_soc, prox_exact_equation,
                           prox_fused_lasso, prox_l2_group, prox_linf, prox_log_sum_exp,
                           prox_orthogonal_invariant, prox_scalar_newton, prox_sum_squares,
                           soft_threshold)
from proxcomp.prox.cones import project_nonneg, project_psd, project_subspace
from proxcomp.prox.elementwise import (prox_deadzone, prox_exp, prox_hinge, prox_inv_pos,
                                       prox_logistic, prox_neg_entropy, prox_neg_log,
                                       prox_quantile, prox_square)
from proxcomp.prox.matrix import prox_neg_log_det, prox_nuclear_norm
from proxcomp.prox.registry import ProxRequest, eval_prox, get_prox
from proxcomp.prox.vector import project_l1_ball_sorted
from proxcomp.utils.errors import ProxError, UnknownAtomError

Logger.DISABLED = True

SCALAR_ATOMS = {
    'abs': (lambda x: abs(x), lambda v, t: soft_threshold(v, t), (-np.inf, np.inf)),
    'square': (lambda x: x * x, prox_square, (-np.inf, np.inf)),
    'hinge': (lambda x: max(x, 0.0), prox_hinge, (-np.inf, np.inf)),
    'deadzone': (lambda x: max(abs(x) - 0.5, 0.0), lambda v, t: prox_deadzone(v, t, 0.5),
                 (-np.inf, np.inf)),
    'quantile': (lambda x: max(0.3 * x, -0.7 * x), lambda v, t: prox_quantile(v, t, 0.3),
                 (-np.inf, np.inf)),
    'neg_log': (lambda x: -np.log(x), prox_neg_log, (0.0, np.inf)),
    'logistic': (lambda x: np.logaddexp(0.0, x), prox_logistic, (-np.inf, np.inf)),
    'exp': (lambda x: np.exp(x), prox_exp, (-np.inf, np.inf)),
    'neg_entropy': (lambda x: x * np.log(x), prox_neg_entropy, (0.0, np.inf)),
    'inv_pos': (lambda x: 1.0 / x, prox_inv_pos, (0.0, np.inf)),
}


def scalar_oracle(f, v, t, domain):
    """ Bounded Brent search around v; the prox lies within t * |f'| of v. """
    lo = max(domain[0] + 1e-12, v - 50.0)
    hi = min(domain[1], v + 50.0) if np.isfinite(domain[1]) else v + 50.0
    if hi <= lo:
        hi = lo + 50.0
    res = minimize_scalar(lambda x: t * f(x) + 0.5 * (x - v) ** 2, bounds=(lo, hi),
                          method='bounded', options={'xatol': 1e-12, 'maxiter': 2000})
    return res.fun


def fused_lasso_kkt(x, v, t):
    """
    Checks the optimality conditions of min t sum |x_{i+1} - x_i| + 1/2 ||x - v||^2:
    v - x = D^T u with |u| <= t and u_i = t sign((Dx)_i) on every jump.
    """
    r = v - x
    s = np.cumsum(r)
    if abs(s[-1]) > 1e-8:
        return False
    u = -s[:-1]
    if np.any(np.abs(u) > t + 1e-8):
        return False
    jumps = np.diff(x)
    moving = np.abs(jumps) > 1e-9
    return bool(np.all(np.abs(u[moving] - t * np.sign(jumps[moving])) <= 1e-8))


class TestKernels(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_scalar_kernels_reach_the_minimum(self):
        for name, (f, kernel, domain) in SCALAR_ATOMS.items():
            for _ in range(100):
                v = self.rng.uniform(-3.0, 3.0)
                t = self.rng.uniform(0.05, 3.0)
                x = float(np.asarray(kernel(np.array([v]), t)).reshape(-1)[0])
                value = t * f(x) + 0.5 * (x - v) ** 2
                self.assertLessEqual(value, scalar_oracle(f, v, t, domain) + 1e-6, name)

    def test_soft_threshold_grid(self):
        v, t = np.meshgrid(np.linspace(-5.0, 5.0, 100), np.linspace(0.0, 3.0, 100))
        expected = np.where(v > t, v - t, np.where(v < -t, v + t, 0.0))
        np.testing.assert_array_equal(soft_threshold(v, t), expected)

    def test_linf_l1_moreau(self):
        for _ in range(1000):
            n = int(self.rng.integers(1, 100))
            v = 3.0 * self.rng.standard_normal(n)
            total = prox_linf(v, 1.0) + project_l1_ball(v, 1.0)
            self.assertLessEqual(np.max(np.abs(total - v)), 1e-10)

    def test_l1_projection_matches_sort(self):
        for _ in range(200):
            n = int(self.rng.integers(1, 60))
            v = 2.0 * self.rng.standard_normal(n)
            radius = self.rng.uniform(0.1, 3.0)
            np.testing.assert_allclose(project_l1_ball(v, radius), project_l1_ball_sorted(v, radius),
                                       atol=1e-10)

    def test_l2_group(self):
        v = np.array([3.0, 4.0])
        np.testing.assert_allclose(prox_l2_group(v, 1.0), 0.8 * v)
        np.testing.assert_array_equal(prox_l2_group(v, 5.0), np.zeros(2))

    def test_log_sum_exp_stationarity(self):
        for _ in range(50):
            v = self.rng.standard_normal(8)
            t = self.rng.uniform(0.1, 2.0)
            x = prox_log_sum_exp(v, t)
            softmax = np.exp(x - np.max(x))
            softmax /= softmax.sum()
            np.testing.assert_allclose(x - v + t * softmax, np.zeros(8), atol=1e-8)

    def test_fused_lasso_optimality(self):
        for _ in range(200):
            n = int(self.rng.integers(2, 50))
            v = self.rng.standard_normal(n)
            t = self.rng.uniform(0.01, 2.0)
            x = prox_fused_lasso(v, t)
            self.assertTrue(fused_lasso_kkt(x, v, t))

    def test_fused_lasso_large_threshold_is_mean(self):
        v = np.array([1.0, 5.0, -2.0, 4.0])
        np.testing.assert_allclose(prox_fused_lasso(v, 100.0), np.full(4, 2.0))

    def test_soc_projection(self):
        x, t = project_soc(np.array([3.0, 4.0]), 0.0)
        np.testing.assert_allclose(x, [1.5, 2.0])
        self.assertAlmostEqual(t, 2.5)
        x, t = project_soc(np.array([1.0, 0.0]), 2.0)
        np.testing.assert_allclose(x, [1.0, 0.0])
        self.assertEqual(t, 2.0)
        x, t = project_soc(np.array([1.0, 0.0]), -2.0)
        np.testing.assert_allclose(x, [0.0, 0.0])
        self.assertEqual(t, 0.0)

    def test_psd_and_nonneg(self):
        projected = project_psd(np.array([[1.0, 0.0], [0.0, -2.0]]))
        np.testing.assert_allclose(projected, [[1.0, 0.0], [0.0, 0.0]], atol=1e-12)
        np.testing.assert_array_equal(project_nonneg([-1.0, 2.0]), [0.0, 2.0])

    def test_subspace_projection(self):
        A = np.array([[1.0, 1.0]])
        x = project_subspace(np.array([2.0, 0.0]), A, np.array([0.0]))
        np.testing.assert_allclose(x, [1.0, -1.0])

    def test_matrix_kernels(self):
        V = np.diag([3.0, 0.5])
        np.testing.assert_allclose(prox_nuclear_norm(V, 1.0), np.diag([2.0, 0.0]), atol=1e-12)
        X = prox_neg_log_det(np.eye(2), 1.0)
        expected = 0.5 * (1.0 + np.sqrt(5.0))
        np.testing.assert_allclose(X, expected * np.eye(2), atol=1e-12)


class TestGeneralizedProx(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_identity_maps_match_kernel(self):
        v = self.rng.standard_normal(6)
        x = eval_prox('norm1', ProxRequest(v, 0.5, ScalarOp(1.0, 6), ScalarOp(1.0, 6)))
        np.testing.assert_allclose(x, soft_threshold(v, 0.5))

    def test_diagonal_outer_map(self):
        a = self.rng.uniform(0.5, 2.0, 5)
        v = self.rng.standard_normal(5)
        x = eval_prox('norm1', ProxRequest(v, 0.3, ScalarOp(1.0, 5), DiagonalOp(a)))
        np.testing.assert_allclose(x, soft_threshold(v / a, 0.3 / (a * a)))

    def test_scale_parameter(self):
        v = self.rng.standard_normal(4)
        x = eval_prox('norm1', ProxRequest(v, 0.5, ScalarOp(1.0, 4), ScalarOp(1.0, 4),
                                           params={'scale': 2.0}))
        np.testing.assert_allclose(x, soft_threshold(v, 1.0))

    def test_sum_squares_general_maps(self):
        H = self.rng.standard_normal((7, 4))
        v = self.rng.standard_normal(4)
        lam = 0.7
        x = eval_prox('sum_squares', ProxRequest(v, lam, DenseOp(H), ScalarOp(1.0, 4)))
        expected = np.linalg.solve(2.0 * lam * H.T @ H + np.eye(4), v)
        np.testing.assert_allclose(x, expected, rtol=1e-8)

    def test_zero_indicator_projects(self):
        H = np.array([[1.0, 1.0, 1.0]])
        v = np.array([1.0, 2.0, 3.0])
        x = eval_prox('zero', ProxRequest(v, 1.0, DenseOp(H), ScalarOp(1.0, 3)))
        np.testing.assert_allclose(x, v - 2.0, atol=1e-10)

    def test_folded_linear_term(self):
        v = np.zeros(3)
        req = ProxRequest(v, 1.0, ScalarOp(1.0, 3), ScalarOp(1.0, 3), linear=np.array([1.0, -1.0, 0.0]))
        np.testing.assert_allclose(eval_prox('null', req), [-1.0, 1.0, 0.0])

    def test_general_inner_map_rejected_for_separable(self):
        with self.assertRaises(ProxError):
            eval_prox('norm1', ProxRequest(np.ones(2), 1.0, DenseOp([[1.0, 1.0], [0.0, 1.0]]),
                                           ScalarOp(1.0, 2)))

    def test_non_uniform_metric_rejected_for_uniform(self):
        with self.assertRaises(ProxError):
            eval_prox('norm2', ProxRequest(np.ones(2), 1.0, ScalarOp(1.0, 2), DiagonalOp([1.0, 2.0])))

    def test_unknown_function(self):
        with self.assertRaises(UnknownAtomError):
            get_prox('no_such_function')

    def test_invalid_lambda(self):
        with self.assertRaises(ValueError):
            ProxRequest(np.ones(2), 0.0, ScalarOp(1.0, 2), ScalarOp(1.0, 2))

    def test_values(self):
        f = get_prox('norm1')
        self.assertEqual(f.value([np.array([[1.0], [-2.0]])], {'scale': 2.0}), 6.0)
        self.assertTrue(get_prox('nonneg').indicator)
        self.assertEqual(get_prox('nonneg').value([np.array([[1.0]])], {}), 0.0)


class TestKernelDispatch(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(23)

    def test_scalar_newton(self):
        v = self.rng.standard_normal(5)
        np.testing.assert_allclose(prox_scalar_newton('exp', v, 0.4), prox_exp(v, 0.4))
        np.testing.assert_allclose(prox_scalar_newton('logistic', v, 0.4), prox_logistic(v, 0.4))
        np.testing.assert_allclose(prox_scalar_newton('log_sum_exp', v, 0.4), prox_log_sum_exp(v, 0.4))
        x, y = prox_scalar_newton('kl_div', (np.ones(3), 2.0 * np.ones(3)), 0.5)
        self.assertTrue(np.all(x >= 0.0) and np.all(y > 0.0))
        with self.assertRaises(KeyError):
            prox_scalar_newton('norm1', v, 0.4)

    def test_exact_equation(self):
        v = self.rng.standard_normal(5)
        np.testing.assert_allclose(prox_exact_equation('square', v, 0.5), v / 2.0)
        np.testing.assert_allclose(prox_exact_equation('neg_log', v, 0.5),
                                   0.5 * (v + np.sqrt(v * v + 2.0)))
        with self.assertRaises(KeyError):
            prox_exact_equation('exp', v, 0.5)

    def test_project_cone(self):
        np.testing.assert_array_equal(project_cone('nonneg', np.array([-1.0, 3.0])), [0.0, 3.0])
        x, t = project_cone('soc', (np.array([3.0, 4.0]), 0.0))
        np.testing.assert_allclose(x, [1.5, 2.0])
        self.assertAlmostEqual(t, 2.5)
        np.testing.assert_allclose(project_cone('psd', np.diag([2.0, -1.0])), np.diag([2.0, 0.0]),
                                   atol=1e-12)
        x = project_cone('zero', np.array([2.0, 0.0]), matrix=np.array([[1.0, 1.0]]),
                         rhs=np.array([0.0]))
        np.testing.assert_allclose(x, [1.0, -1.0])
        with self.assertRaises(ProxError):
            project_cone('exp_cone', np.zeros(3))

    def test_orthogonal_invariant(self):
        V = np.diag([3.0, 0.5])
        np.testing.assert_allclose(prox_orthogonal_invariant('spectral_norm', V, 1.0),
                                   np.diag([2.0, 0.5]), atol=1e-12)
        np.testing.assert_allclose(prox_orthogonal_invariant('nuclear_norm', V, 1.0),
                                   prox_nuclear_norm(V, 1.0), atol=1e-12)
        with self.assertRaises(ProxError):
            prox_orthogonal_invariant('norm1', V, 1.0)

    def test_sum_squares_with_outer_map(self):
        H = self.rng.standard_normal((7, 4))
        A = self.rng.standard_normal((5, 4))
        b = self.rng.standard_normal(7)
        v = self.rng.standard_normal(5)
        lam = 0.3
        x = prox_sum_squares(v, lam, DenseOp(H), b, DenseOp(A))
        expected = np.linalg.solve(2.0 * lam * H.T @ H + A.T @ A, 2.0 * lam * H.T @ b + A.T @ v)
        np.testing.assert_allclose(x, expected, rtol=1e-8, atol=1e-10)


if __name__ == '__main__':
    unittest.main()
