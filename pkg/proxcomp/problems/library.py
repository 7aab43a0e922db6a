"""
Synthetic benchmark problems at desk scale.

Every generator is deterministic given the seed of its BenchmarkSpec. Regularized
regression problems use X with 10 m columns unless n is given, a sparse ground
truth with 10% nonzeros and the regularization weight 0.1 ||X^T y||_inf.
"""
from collections import namedtuple

import numpy as np
import scipy.sparse as sp

from proxcomp.objects.atoms import (hinge, huber, logistic, neg_log_det, norm1, nuclear_norm,
                                    sum_entries, sum_squares, trace, tv)
from proxcomp.objects.expression import Constant, Variable
from proxcomp.objects.problem import NonNeg, Problem, eq, leq
from proxcomp.utils.constants import default_seed
from proxcomp.utils.errors import UnknownAtomError

Instance = namedtuple('Instance', ['problem', 'variables', 'data'])

GENERATORS = {}

NOISE = 0.05
SEGMENT = 10


def register_generator(name):
    def decorator(fn):
        GENERATORS[name] = fn
        return fn
    return decorator


def problem_names():
    return sorted(GENERATORS)


class BenchmarkSpec(object):
    """
    A benchmark instance description.

    Args:
        name (str): Registered problem name.
        m (int): Number of rows (samples or constraints).
        n (int): Number of columns; a per-problem default derived from m when None.
        k (int): Number of columns of the matrix variable (mv_lasso).
        density (float): Density of sparse data matrices.
        seed (int): Data seed; PROXCOMP_SEED or 0 when None.
        params (dict): Hyperparameters overriding the documented defaults.
    """

    def __init__(self, name, m=50, n=None, k=10, density=0.05, seed=None, params=None):
        if name not in GENERATORS:
            raise UnknownAtomError('unknown benchmark problem %r, choose from %s'
                                   % (name, ', '.join(problem_names())))
        self.name = name
        self.m = m
        self.n = n
        self.k = k
        self.density = density
        self.seed = default_seed() if seed is None else int(seed)
        self.params = dict(params or {})

    @property
    def m(self):
        return self._m

    @m.setter
    def m(self, value):
        if int(value) < 1:
            raise ValueError('m must be positive')
        self._m = int(value)

    @property
    def k(self):
        return self._k

    @k.setter
    def k(self, value):
        if int(value) < 1:
            raise ValueError('k must be positive')
        self._k = int(value)

    @property
    def density(self):
        return self._density

    @density.setter
    def density(self, value):
        if not 0 < float(value) <= 1:
            raise ValueError('density must be in (0, 1]')
        self._density = float(value)

    def columns(self, factor=10):
        return self.n if self.n is not None else factor * self.m

    def rng(self):
        return np.random.default_rng(self.seed)

    def __repr__(self):
        return 'BenchmarkSpec(%s, m=%d, n=%s, seed=%d)' % (self.name, self.m, self.n, self.seed)


def generate(spec):
    """
    Build the problem of a spec.

    Args:
        spec (BenchmarkSpec): The instance description.
    Returns:
        (Instance): The Problem, its variables by name and the generated data.
    """
    return GENERATORS[spec.name](spec, spec.rng())


def _sparse_truth(rng, n, fraction=0.1):
    theta = np.zeros(n)
    support = rng.choice(n, max(1, int(fraction * n)), replace=False)
    theta[support] = rng.standard_normal(support.size)
    return theta


def _sparse_matrix(rng, m, n, density):
    matrix = sp.random(m, n, density=density, format='csc', random_state=rng,
                       data_rvs=rng.standard_normal)
    # every row gets at least one entry
    empty = np.flatnonzero(np.diff(matrix.tocsr().indptr) == 0)
    if empty.size:
        extra = sp.csc_matrix((rng.standard_normal(empty.size),
                               (empty, rng.integers(0, n, empty.size))), shape=(m, n))
        matrix = (matrix + extra).tocsc()
    return matrix


def _lambda_max(X, y):
    return float(np.max(np.abs(X.T @ y)))


def _column(v):
    return np.asarray(v, dtype=float).reshape(-1, 1)


def _lasso(spec, rng, sparse):
    m, n = spec.m, spec.columns()
    X = _sparse_matrix(rng, m, n, spec.density) if sparse else rng.standard_normal((m, n))
    theta0 = _sparse_truth(rng, n)
    y = X @ theta0 + NOISE * rng.standard_normal(m)
    lam = spec.params.get('lam', 0.1 * _lambda_max(X, y))
    theta = Variable(n, name='theta')
    objective = 0.5 * sum_squares(Constant(X) @ theta - _column(y)) + lam * norm1(theta)
    return Instance(Problem(objective), {'theta': theta},
                    {'X': X, 'y': y, 'theta0': theta0, 'lam': lam})


@register_generator('lasso')
def lasso(spec, rng):
    """ 1/2 ||X theta - y||^2 + lam ||theta||_1 with dense X, y = X theta0 + N(0, 0.05^2). """
    return _lasso(spec, rng, False)


@register_generator('lasso_sparse')
def lasso_sparse(spec, rng):
    return _lasso(spec, rng, True)


@register_generator('mv_lasso')
def mv_lasso(spec, rng):
    """ 1/2 ||X Theta - Y||_F^2 + lam ||Theta||_1 with Theta in R^{n x k}. """
    m, n, k = spec.m, spec.columns(), spec.k
    X = rng.standard_normal((m, n))
    Theta0 = np.column_stack([_sparse_truth(rng, n) for _ in range(k)])
    Y = X @ Theta0 + NOISE * rng.standard_normal((m, k))
    lam = spec.params.get('lam', 0.1 * float(np.max(np.abs(X.T @ Y))))
    Theta = Variable(n, k, name='Theta')
    objective = 0.5 * sum_squares(Constant(X) @ Theta - Y) + lam * norm1(Theta)
    return Instance(Problem(objective), {'Theta': Theta},
                    {'X': X, 'Y': Y, 'Theta0': Theta0, 'lam': lam})


def _piecewise_constant(rng, n):
    segments = -(-n // SEGMENT)
    levels = rng.standard_normal(segments)
    return np.repeat(levels, SEGMENT)[:n]


@register_generator('fused_lasso')
def fused_lasso(spec, rng):
    """
    1/2 ||X theta - y||^2 + lam1 ||theta||_1 + lam2 sum_i |theta_{i+1} - theta_i|
    with theta0 piecewise constant on segments of length 10.
    """
    m, n = spec.m, spec.columns()
    X = rng.standard_normal((m, n))
    theta0 = _piecewise_constant(rng, n)
    y = X @ theta0 + NOISE * rng.standard_normal(m)
    scale = _lambda_max(X, y)
    lam1 = spec.params.get('lam1', 0.01 * scale)
    lam2 = spec.params.get('lam2', 0.1 * scale)
    theta = Variable(n, name='theta')
    objective = 0.5 * sum_squares(Constant(X) @ theta - _column(y)) + lam1 * norm1(theta) \
        + lam2 * tv(theta)
    return Instance(Problem(objective), {'theta': theta},
                    {'X': X, 'y': y, 'theta0': theta0, 'lam1': lam1, 'lam2': lam2})


@register_generator('tv_1d')
def tv_1d(spec, rng):
    """ 1/2 ||x - y||^2 + lam sum_i |x_{i+1} - x_i|, y piecewise constant plus noise; n = 10 m. """
    n = spec.columns()
    signal = _piecewise_constant(rng, n)
    y = signal + NOISE * rng.standard_normal(n)
    lam = spec.params.get('lam', 0.1)
    x = Variable(n, name='x')
    objective = 0.5 * sum_squares(x - _column(y)) + lam * tv(x)
    return Instance(Problem(objective), {'x': x}, {'y': y, 'signal': signal, 'lam': lam})


def _classification(spec, rng, sparse):
    m, n = spec.m, spec.columns(factor=2)
    X = _sparse_matrix(rng, m, n, spec.density) if sparse else rng.standard_normal((m, n))
    theta0 = _sparse_truth(rng, n, 0.2)
    labels = np.sign(X @ theta0 + 0.1 * rng.standard_normal(m))
    labels[labels == 0] = 1.0
    return X, labels


def _signed_rows(X, labels):
    if sp.issparse(X):
        return sp.diags(labels) @ X
    return labels[:, None] * X


def _hinge(spec, rng, sparse, l1):
    X, labels = _classification(spec, rng, sparse)
    n = X.shape[1]
    D = _signed_rows(X, labels)
    lam = spec.params.get('lam', 0.1 if l1 else 1.0)
    theta = Variable(n, name='theta')
    loss = sum_entries(hinge(1.0 - Constant(D) @ theta))
    regularizer = norm1(theta) if l1 else sum_squares(theta)
    return Instance(Problem(loss + lam * regularizer), {'theta': theta},
                    {'X': X, 'labels': labels, 'lam': lam})


@register_generator('hinge_l1')
def hinge_l1(spec, rng):
    """ sum_i max(0, 1 - y_i x_i^T theta) + lam ||theta||_1, n = 2 m, labels from a sparse model. """
    return _hinge(spec, rng, False, True)


@register_generator('hinge_l1_sparse')
def hinge_l1_sparse(spec, rng):
    return _hinge(spec, rng, True, True)


@register_generator('hinge_l2')
def hinge_l2(spec, rng):
    """ sum_i max(0, 1 - y_i x_i^T theta) + lam ||theta||_2^2. """
    return _hinge(spec, rng, False, False)


@register_generator('hinge_l2_sparse')
def hinge_l2_sparse(spec, rng):
    return _hinge(spec, rng, True, False)


def _logreg(spec, rng, sparse):
    X, labels = _classification(spec, rng, sparse)
    n = X.shape[1]
    D = _signed_rows(X, labels)
    lam = spec.params.get('lam', 0.1 * 0.5 * float(np.max(np.abs(D.T @ np.ones(spec.m)))))
    theta = Variable(n, name='theta')
    objective = sum_entries(logistic(-1.0 * (Constant(D) @ theta))) + lam * norm1(theta)
    return Instance(Problem(objective), {'theta': theta}, {'X': X, 'labels': labels, 'lam': lam})


@register_generator('logreg_l1')
def logreg_l1(spec, rng):
    """ sum_i log(1 + exp(-y_i x_i^T theta)) + lam ||theta||_1, lam a tenth of its critical value. """
    return _logreg(spec, rng, False)


@register_generator('logreg_l1_sparse')
def logreg_l1_sparse(spec, rng):
    return _logreg(spec, rng, True)


@register_generator('huber')
def huber_fit(spec, rng):
    """ sum_i huber(x_i^T theta - y_i) with 5% of the responses corrupted; n = m / 2. """
    m = spec.m
    n = spec.n if spec.n is not None else max(1, m // 2)
    X = rng.standard_normal((m, n))
    theta0 = rng.standard_normal(n)
    y = X @ theta0 + NOISE * rng.standard_normal(m)
    outliers = rng.choice(m, max(1, m // 20), replace=False)
    y[outliers] += 10.0 * rng.standard_normal(outliers.size)
    width = spec.params.get('m', 1.0)
    theta = Variable(n, name='theta')
    objective = sum_entries(huber(Constant(X) @ theta - _column(y), width))
    return Instance(Problem(objective), {'theta': theta}, {'X': X, 'y': y, 'm': width})


@register_generator('least_abs_dev')
def least_abs_dev(spec, rng):
    """ ||X theta - y||_1 with Laplacian noise; n = m / 2. """
    m = spec.m
    n = spec.n if spec.n is not None else max(1, m // 2)
    X = rng.standard_normal((m, n))
    theta0 = rng.standard_normal(n)
    y = X @ theta0 + rng.laplace(scale=0.5, size=m)
    theta = Variable(n, name='theta')
    objective = norm1(Constant(X) @ theta - _column(y))
    return Instance(Problem(objective), {'theta': theta}, {'X': X, 'y': y})


@register_generator('lp')
def lp(spec, rng):
    """
    c^T x subject to A x = b, x >= 0 with n = 2 m. b comes from a nonnegative
    point and c = A^T y0 + s0 with s0 >= 0, so the problem is feasible and bounded.
    """
    m, n = spec.m, spec.columns(factor=2)
    A = rng.standard_normal((m, n))
    x0 = np.maximum(rng.standard_normal(n), 0.0)
    b = A @ x0
    c = A.T @ rng.standard_normal(m) + rng.uniform(0.0, 1.0, n)
    x = Variable(n, name='x')
    objective = Constant(c.reshape(1, -1)) @ x
    constraints = [eq(Constant(A) @ x, _column(b)), NonNeg(x)]
    return Instance(Problem(objective, constraints), {'x': x}, {'A': A, 'b': b, 'c': c})


@register_generator('qp')
def qp(spec, rng):
    """
    1/2 ||F x||^2 + q^T x subject to G x <= h with F square and well conditioned;
    n = m, h = G x0 + s with s >= 0.
    """
    n = spec.columns(factor=1)
    F = rng.standard_normal((n, n)) / np.sqrt(n) + np.eye(n)
    q = rng.standard_normal(n)
    G = rng.standard_normal((spec.m, n))
    h = G @ rng.standard_normal(n) + rng.uniform(0.0, 1.0, spec.m)
    x = Variable(n, name='x')
    objective = 0.5 * sum_squares(Constant(F) @ x) + Constant(q.reshape(1, -1)) @ x
    constraints = [leq(Constant(G) @ x, _column(h))]
    return Instance(Problem(objective, constraints), {'x': x}, {'F': F, 'q': q, 'G': G, 'h': h})


@register_generator('basis_pursuit')
def basis_pursuit(spec, rng):
    """ ||x||_1 subject to A x = b with b = A x0, x0 sparse; n = 3 m. """
    m, n = spec.m, spec.columns(factor=3)
    A = rng.standard_normal((m, n))
    x0 = _sparse_truth(rng, n)
    b = A @ x0
    x = Variable(n, name='x')
    problem = Problem(norm1(x), [eq(Constant(A) @ x, _column(b))])
    return Instance(problem, {'x': x}, {'A': A, 'b': b, 'x0': x0})


@register_generator('covsel')
def covsel(spec, rng):
    """
    -log det(Theta) + tr(S Theta) + lam ||Theta||_1 with S the sample covariance
    of 10 n draws from a sparse precision matrix; n = m unless given.
    """
    n = spec.n if spec.n is not None else spec.m
    P = sp.random(n, n, density=spec.density, random_state=rng, data_rvs=rng.standard_normal)
    P = P.toarray()
    P = 0.5 * (P + P.T)
    shift = max(0.0, -np.linalg.eigvalsh(P).min()) + 1.0
    precision = P + shift * np.eye(n)
    samples = rng.multivariate_normal(np.zeros(n), np.linalg.inv(precision), size=10 * n)
    S = np.cov(samples, rowvar=False)
    lam = spec.params.get('lam', 0.1 * float(np.max(np.abs(S - np.diag(np.diag(S))))))
    Theta = Variable(n, n, name='Theta')
    objective = neg_log_det(Theta) + trace(Constant(S) @ Theta) + lam * norm1(Theta)
    return Instance(Problem(objective), {'Theta': Theta}, {'S': S, 'lam': lam})


@register_generator('robust_pca')
def robust_pca(spec, rng):
    """
    ||L||_* + mu ||S||_1 subject to L + S = M with M a rank-n/10 matrix plus 5%
    sparse corruption; M is n x n with n = m unless given, mu = 1 / sqrt(n).
    """
    n = spec.n if spec.n is not None else spec.m
    rank = max(1, n // 10)
    low_rank = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, n))
    corruption = sp.random(n, n, density=0.05, random_state=rng,
                           data_rvs=lambda size: 10.0 * rng.standard_normal(size)).toarray()
    M = low_rank + corruption
    mu = spec.params.get('mu', 1.0 / np.sqrt(n))
    L = Variable(n, n, name='L')
    S = Variable(n, n, name='S')
    problem = Problem(nuclear_norm(L) + mu * norm1(S), [eq(L + S, M)])
    return Instance(problem, {'L': L, 'S': S}, {'M': M, 'mu': mu})
