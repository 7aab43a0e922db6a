import unittest

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, minimize
from scipy.special import expit, huber

from proxcomp.components.compiler import compile_problem
from proxcomp.components.separator import separate
from proxcomp.components.solver import SolverParams, solve
from proxcomp.objects import Logger, evaluate
from proxcomp.problems import BenchmarkSpec, generate, problem_names

Logger.DISABLED = True

PARAMS = SolverParams(max_iters=10000, abs_tol=1e-7, rel_tol=1e-6)


def dense(matrix):
    return matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)


def soft(v, k):
    return np.sign(v) * np.maximum(np.abs(v) - k, 0.0)


def signed_rows(data):
    return dense(data['X']) * data['labels'][:, None]


def accelerated_prox_gradient(grad, prox, x0, step, iterations=20000):
    x, z, t = x0.copy(), x0.copy(), 1.0
    for _ in range(iterations):
        new = prox(z - step * grad(z), step)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = new + ((t - 1.0) / t_next) * (new - x)
        x, t = new, t_next
    return x


def lasso_optimum(X, y, lam):
    X = dense(X)
    theta = accelerated_prox_gradient(lambda th: X.T @ (X @ th - y), lambda v, s: soft(v, s * lam),
                                      np.zeros((X.shape[1],) + y.shape[1:]),
                                      1.0 / np.linalg.norm(X, 2) ** 2)
    return 0.5 * np.sum((X @ theta - y) ** 2) + lam * np.sum(np.abs(theta))


def logreg_optimum(data):
    D, lam = signed_rows(data), data['lam']
    theta = accelerated_prox_gradient(lambda th: -D.T @ expit(-D @ th), lambda v, s: soft(v, s * lam),
                                      np.zeros(D.shape[1]), 4.0 / np.linalg.norm(D, 2) ** 2)
    return np.sum(np.logaddexp(0.0, -D @ theta)) + lam * np.sum(np.abs(theta))


def huber_optimum(data):
    X, y, width = data['X'], data['y'], data['m']

    def fun(theta):
        r = X @ theta - y
        return 2.0 * np.sum(huber(width, r)), X.T @ (2.0 * np.clip(r, -width, width))

    result = minimize(fun, np.zeros(X.shape[1]), jac=True, method='L-BFGS-B',
                      options={'gtol': 1e-10, 'ftol': 1e-15, 'maxiter': 20000})
    return fun(result.x)[0]


def lp_optimum(data):
    return linprog(data['c'], A_eq=data['A'], b_eq=data['b'], bounds=(0, None), method='highs').fun


def basis_pursuit_optimum(data):
    A = data['A']
    n = A.shape[1]
    return linprog(np.ones(2 * n), A_eq=np.hstack([A, -A]), b_eq=data['b'], bounds=(0, None),
                   method='highs').fun


def least_abs_dev_optimum(data):
    # min 1^T t with -t <= X theta - y <= t
    X, y = data['X'], data['y']
    m, n = X.shape
    c = np.concatenate([np.zeros(n), np.ones(m)])
    A_ub = np.block([[X, -np.eye(m)], [-X, -np.eye(m)]])
    bounds = [(None, None)] * n + [(0, None)] * m
    return linprog(c, A_ub=A_ub, b_ub=np.concatenate([y, -y]), bounds=bounds, method='highs').fun


def hinge_l1_optimum(data):
    # variables (theta, t, a) with t >= 1 - D theta, t >= 0 and |theta| <= a
    D, lam = signed_rows(data), data['lam']
    m, n = D.shape
    c = np.concatenate([np.zeros(n), np.ones(m), lam * np.ones(n)])
    A_ub = np.block([[-D, -np.eye(m), np.zeros((m, n))],
                     [np.eye(n), np.zeros((n, m)), -np.eye(n)],
                     [-np.eye(n), np.zeros((n, m)), -np.eye(n)]])
    b_ub = np.concatenate([-np.ones(m), np.zeros(2 * n)])
    bounds = [(None, None)] * n + [(0, None)] * (m + n)
    return linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method='highs').fun


def hinge_l2_optimum(data):
    # dual: max sum(alpha) - ||D^T alpha||^2 / (4 lam) over 0 <= alpha <= 1
    D, lam = signed_rows(data), data['lam']

    def fun(alpha):
        w = D.T @ alpha
        return -np.sum(alpha) + w @ w / (4.0 * lam), -1.0 + D @ w / (2.0 * lam)

    result = minimize(fun, np.zeros(D.shape[0]), jac=True, method='L-BFGS-B',
                      bounds=[(0.0, 1.0)] * D.shape[0],
                      options={'gtol': 1e-12, 'ftol': 1e-15, 'maxiter': 20000})
    theta = D.T @ result.x / (2.0 * lam)
    return np.sum(np.maximum(0.0, 1.0 - D @ theta)) + lam * theta @ theta


def tv_1d_optimum(data):
    # dual: min 1/2 ||y - Delta^T z||^2 over |z| <= lam, then x = y - Delta^T z
    y, lam = data['y'], data['lam']
    delta = np.diff(np.eye(y.size), axis=0)

    def fun(z):
        r = y - delta.T @ z
        return 0.5 * r @ r, -delta @ r

    result = minimize(fun, np.zeros(y.size - 1), jac=True, method='L-BFGS-B',
                      bounds=[(-lam, lam)] * (y.size - 1),
                      options={'gtol': 1e-12, 'ftol': 1e-15, 'maxiter': 20000})
    x = y - delta.T @ result.x
    return 0.5 * np.sum((x - y) ** 2) + lam * np.sum(np.abs(np.diff(x)))


def fused_lasso_optimum(data):
    # variables (theta, a, d) with |theta| <= a and |Delta theta| <= d
    X, y, lam1, lam2 = data['X'], data['y'], data['lam1'], data['lam2']
    n = X.shape[1]
    delta = np.diff(np.eye(n), axis=0)

    def fun(v):
        theta = v[:n]
        r = X @ theta - y
        value = 0.5 * r @ r + lam1 * np.sum(v[n:2 * n]) + lam2 * np.sum(v[2 * n:])
        return value, np.concatenate([X.T @ r, lam1 * np.ones(n), lam2 * np.ones(n - 1)])

    eye, gap, pad = np.eye(n), np.zeros((n, n - 1)), np.zeros((n - 1, n))
    K = np.block([[eye, eye, gap], [-eye, eye, gap],
                  [delta, pad, np.eye(n - 1)], [-delta, pad, np.eye(n - 1)]])
    result = minimize(fun, np.zeros(3 * n - 1), jac=True, method='SLSQP',
                      constraints=[{'type': 'ineq', 'fun': lambda v: K @ v, 'jac': lambda v: K}],
                      options={'ftol': 1e-12, 'maxiter': 2000})
    theta = result.x[:n]
    return 0.5 * np.sum((X @ theta - y) ** 2) + lam1 * np.sum(np.abs(theta)) \
        + lam2 * np.sum(np.abs(np.diff(theta)))


def qp_optimum(data):
    # dual: min 1/2 (q + G^T mu)^T P^-1 (q + G^T mu) + h^T mu over mu >= 0
    F, q, G, h = data['F'], data['q'], data['G'], data['h']
    P = F.T @ F

    def fun(mu):
        w = np.linalg.solve(P, q + G.T @ mu)
        return 0.5 * (q + G.T @ mu) @ w + h @ mu, G @ w + h

    result = minimize(fun, np.zeros(G.shape[0]), jac=True, method='L-BFGS-B',
                      bounds=[(0.0, None)] * G.shape[0],
                      options={'gtol': 1e-12, 'ftol': 1e-15, 'maxiter': 20000})
    return -fun(result.x)[0]


def covsel_optimum(data, iterations=5000):
    """ Proximal gradient with backtracking that keeps Theta positive definite. """
    S, lam = data['S'], data['lam']

    def smooth(theta):
        sign, logdet = np.linalg.slogdet(theta)
        return np.inf if sign <= 0 else -logdet + np.sum(S * theta)

    theta = np.diag(1.0 / (np.diag(S) + lam))
    step = 1.0
    for _ in range(iterations):
        grad = S - np.linalg.inv(theta)
        value = smooth(theta)
        while True:
            new = soft(theta - step * grad, step * lam)
            diff = new - theta
            if np.linalg.eigvalsh(new).min() > 0 and \
                    smooth(new) <= value + np.sum(grad * diff) + np.sum(diff * diff) / (2.0 * step):
                break
            step *= 0.5
        theta = new
    return smooth(theta) + lam * np.sum(np.abs(theta))


def robust_pca_optimum(data, iterations=10000):
    """ Augmented Lagrangian iteration on L + S = M with a fixed penalty. """
    M, mu = data['M'], data['mu']
    rho = M.size / (4.0 * np.sum(np.abs(M)))
    S, Y = np.zeros_like(M), np.zeros_like(M)
    for _ in range(iterations):
        U, s, Vt = np.linalg.svd(M - S + Y / rho, full_matrices=False)
        L = (U * np.maximum(s - 1.0 / rho, 0.0)) @ Vt
        S = soft(M - L + Y / rho, mu / rho)
        Y = Y + rho * (M - L - S)
    return np.sum(np.linalg.svd(L, compute_uv=False)) + mu * np.sum(np.abs(M - L))


REFERENCES = {
    'lasso': ({'m': 10}, lambda d: lasso_optimum(d['X'], d['y'], d['lam'])),
    'lasso_sparse': ({'m': 10, 'density': 0.3}, lambda d: lasso_optimum(d['X'], d['y'], d['lam'])),
    'mv_lasso': ({'m': 10, 'n': 30, 'k': 3}, lambda d: lasso_optimum(d['X'], d['Y'], d['lam'])),
    'fused_lasso': ({'m': 10, 'n': 20}, fused_lasso_optimum),
    'tv_1d': ({'m': 3}, tv_1d_optimum),
    'hinge_l1': ({'m': 10}, hinge_l1_optimum),
    'hinge_l1_sparse': ({'m': 10, 'density': 0.3}, hinge_l1_optimum),
    'hinge_l2': ({'m': 10}, hinge_l2_optimum),
    'hinge_l2_sparse': ({'m': 10, 'density': 0.3}, hinge_l2_optimum),
    'logreg_l1': ({'m': 10}, logreg_optimum),
    'logreg_l1_sparse': ({'m': 10, 'density': 0.3}, logreg_optimum),
    'huber': ({'m': 20}, huber_optimum),
    'least_abs_dev': ({'m': 20}, least_abs_dev_optimum),
    'lp': ({'m': 10}, lp_optimum),
    'qp': ({'m': 10}, qp_optimum),
    'basis_pursuit': ({'m': 10}, basis_pursuit_optimum),
    'covsel': ({'m': 8, 'density': 0.3}, covsel_optimum),
    'robust_pca': ({'m': 10}, robust_pca_optimum),
}


def admm_objective(name, instance, solution):
    values = {var_id: solution[var_id] for var_id in instance.variables}
    if name == 'covsel':
        values['Theta'] = 0.5 * (values['Theta'] + values['Theta'].T)
    return evaluate(instance.problem.objective, values)


class TestReferenceOptima(unittest.TestCase):

    def test_every_problem_has_a_reference(self):
        self.assertEqual(set(REFERENCES), set(problem_names()))

    def test_admm_matches_reference_optimum(self):
        for name in problem_names():
            with self.subTest(problem=name):
                sizes, optimum = REFERENCES[name]
                instance = generate(BenchmarkSpec(name, seed=11, **sizes))
                result = solve(separate(compile_problem(instance.problem).prox_affine), PARAMS)
                reference = float(optimum(instance.data))
                achieved = admm_objective(name, instance, result.solution)
                self.assertAlmostEqual(achieved, reference, delta=1e-2 * (1.0 + abs(reference)))

    def test_least_squares_reference_is_closed_form(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((12, 4))
        y = rng.standard_normal(12)
        theta = np.linalg.lstsq(X, y, rcond=None)[0]
        expected = 0.5 * np.sum((X @ theta - y) ** 2)
        self.assertAlmostEqual(lasso_optimum(X, y, 0.0), expected, places=6)


if __name__ == '__main__':
    unittest.main()
