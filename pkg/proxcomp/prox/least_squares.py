"""
Linear-solve prox kernels: the null function, linear functions, sums of
squares and zero-cone indicators. These admit any inner map H and any outer
map A because their generalized prox is a linear system or a KKT system.
"""
import numpy as np
import scipy.sparse as sp

from proxcomp.linops.algebra import materialize, to_sparse
from proxcomp.linops.factorization import CholeskySolver, LUSolver, PinvSolver, SparseLUSolver
from proxcomp.linops.linear_op import DenseOp, KronOp, ScalarOp
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import ProxError, SingularOperatorError


def factor_symmetric(matrix):
    """
    Factor a symmetric positive semidefinite matrix, falling back from
    Cholesky to LU to a pseudo-inverse.

    Args:
        matrix (ndarray or sparse matrix): The matrix.
    Returns:
        A solver with solve(rhs) and solve_transpose(rhs).
    """
    if sp.issparse(matrix):
        try:
            return SparseLUSolver(matrix)
        except SingularOperatorError:
            return PinvSolver(matrix.toarray())
    try:
        return CholeskySolver(matrix)
    except SingularOperatorError:
        pass
    try:
        return LUSolver(matrix)
    except SingularOperatorError:
        return PinvSolver(matrix)


def _cached(cache, key, builder):
    if cache is None:
        return builder()
    return cache.get(key, builder)


def _block_matrix(affine_map):
    """ The inner map over the whole block, sparse when every segment is. """
    return affine_map.matrix()


def _diagonal(matrix):
    if sp.issparse(matrix):
        return np.asarray(matrix.diagonal(), dtype=float)
    return np.diag(matrix).astype(float)


def _is_diagonal(matrix):
    if sp.issparse(matrix):
        off = matrix - sp.diags(matrix.diagonal())
        return off.count_nonzero() == 0
    return np.count_nonzero(matrix - np.diag(np.diag(matrix))) == 0


def _is_uniform(q):
    return q.size > 0 and np.all(q == q[0])


def solve_null(metric, rhs, cache=None, key=('null',)):
    """ argmin 1/2 x^T Q x - r^T x for the null function, Q = metric. """
    if _is_diagonal(metric):
        q = _diagonal(metric)
        if np.all(q > 0):
            return rhs / q
    solver = _cached(cache, key, lambda: factor_symmetric(_to_dense_if_small(metric)))
    return solver.solve(rhs)


def _to_dense_if_small(matrix):
    if sp.issparse(matrix) and matrix.shape[0] <= 500:
        return matrix.toarray()
    return matrix


def prox_sum_squares_general(affine_map, metric, rhs, lam, scale=1.0, cache=None):
    """
    argmin lam * scale * ||H x + c||^2 + 1/2 x^T Q x - r^T x, i.e. the normal
    equations (2 lam scale H^T H + Q) x = r - 2 lam scale H^T c.

    Kronecker maps with a scalar factor and a uniform metric factor only the
    small dense block; elementwise maps with a diagonal metric need no
    factorization at all.
    """
    weight = 2.0 * lam * scale
    rhs = rhs - weight * affine_map.adjoint(affine_map.offset)
    q = _diagonal(metric)
    metric_diagonal = _is_diagonal(metric)

    elementwise = affine_map.elementwise()
    if elementwise is not None and metric_diagonal:
        start, stop, d = elementwise
        denom = np.array(q)
        denom[start:stop] += weight * d * d
        if np.all(denom > 0):
            return rhs / denom

    op = affine_map.single_operator()
    if op is not None and isinstance(op, KronOp) and metric_diagonal and _is_uniform(q):
        structured = _solve_kron(op, q[0], weight, rhs, cache, lam)
        if structured is not None:
            return structured

    def build():
        h = _block_matrix(affine_map)
        if sp.issparse(h):
            normal = (weight * (h.T @ h) + sp.csc_matrix(metric)).tocsc()
        else:
            m = metric.toarray() if sp.issparse(metric) else metric
            normal = weight * (h.T @ h) + m
        return factor_symmetric(_to_dense_if_small(normal))

    solver = _cached(cache, ('sum_squares', lam), build)
    return solver.solve(rhs)


def _solve_kron(op, alpha, weight, rhs, cache, lam):
    left, right = op.left, op.right
    if isinstance(left, ScalarOp):
        beta, k = left.alpha, left.input_dim
        block, side = right, 'left'
    elif isinstance(right, ScalarOp):
        beta, k = right.alpha, right.input_dim
        block, side = left, 'right'
    else:
        return None

    def build():
        dense = materialize(block)
        normal = weight * beta * beta * (dense.T @ dense) + alpha * np.eye(dense.shape[1])
        return factor_symmetric(normal)

    solver = _cached(cache, ('sum_squares-kron', lam), build)
    n = block.input_dim
    if side == 'left':
        # (I_k (x) N) vec(X) = vec(N X) with X of shape n x k
        mat = rhs.reshape((n, k), order='F')
        return solver.solve(mat).reshape(-1, order='F')
    # (N (x) I_k) vec(X) = vec(X N) with X of shape k x n
    mat = rhs.reshape((k, n), order='F')
    return solver.solve(mat.T).T.reshape(-1, order='F')


def prox_sum_squares(v, lam, a_inner, b, a_outer):
    """
    Generalized prox of f(x) = ||A_inner x - b||^2 with outer map A_outer:
    solves (2 lam A_inner^T A_inner + A_outer^T A_outer) x = 2 lam A_inner^T b + A_outer^T v.

    Args:
        v (ndarray): Point in the range of A_outer.
        lam (float): Prox parameter.
        a_inner (LinearOp): Inner map.
        b (ndarray): Offset, so the argument is A_inner x - b.
        a_outer (LinearOp): Outer map.
    Returns:
        (ndarray): The minimizer.
    """
    from proxcomp.prox.registry import AffineMap
    affine_map = AffineMap.from_operator(a_inner, -np.asarray(b, dtype=float))
    outer = _outer_matrix(a_outer)
    metric = (outer.T @ outer)
    rhs = np.asarray(outer.T @ np.asarray(v, dtype=float)).reshape(-1)
    return prox_sum_squares_general(affine_map, sp.csc_matrix(metric), rhs, lam)


def _outer_matrix(op):
    if isinstance(op, ScalarOp) or op.variant in (Constants.DIAGONAL, Constants.SPARSE):
        return to_sparse(op)
    if isinstance(op, DenseOp):
        return sp.csc_matrix(op.matrix)
    return sp.csc_matrix(materialize(op))


class SubspaceProjector(object):
    """
    Solves argmin 1/2 x^T Q x - r^T x subject to H x = h. With a positive
    diagonal Q the projection runs through the factorization of H Q^-1 H^T;
    otherwise through the full KKT matrix.
    """

    def __init__(self, matrix, rhs, metric=None):
        self._h = matrix
        self._target = np.asarray(rhs, dtype=float)
        n = matrix.shape[1]
        if metric is None:
            metric = sp.identity(n, format='csc')
        self._metric = metric
        q = _diagonal(metric)
        self._q = q if (_is_diagonal(metric) and np.all(q > 0)) else None
        if self._q is not None:
            qinv = sp.diags(1.0 / self._q)
            if sp.issparse(matrix):
                schur = (matrix @ qinv @ matrix.T).tocsc()
            else:
                schur = (matrix * (1.0 / self._q)[None, :]) @ matrix.T
            self._solver = factor_symmetric(_to_dense_if_small(schur))
        else:
            h = matrix.toarray() if sp.issparse(matrix) else matrix
            m = metric.toarray() if sp.issparse(metric) else metric
            p = h.shape[0]
            kkt = np.block([[m, h.T], [h, np.zeros((p, p))]])
            try:
                self._solver = LUSolver(kkt)
            except SingularOperatorError:
                self._solver = PinvSolver(kkt)

    def solve(self, r):
        h, n = self._h, self._h.shape[1]
        if self._q is not None:
            nu = self._solver.solve(np.asarray(h @ (r / self._q)).reshape(-1) - self._target)
            x = (r - np.asarray(h.T @ nu).reshape(-1)) / self._q
        else:
            x = self._solver.solve(np.concatenate([r, self._target]))[:n]
        residual = np.asarray(h @ x).reshape(-1) - self._target
        scale = 1.0 + np.max(np.abs(self._target), initial=0.0) + np.max(np.abs(x), initial=0.0)
        if np.max(np.abs(residual), initial=0.0) > 1e-6 * scale:
            raise ProxError('zero-cone subspace is empty or inconsistent (residual %.3e)'
                            % np.max(np.abs(residual)))
        return x

    def project(self, v):
        """ Euclidean projection of v (metric = identity). """
        return self.solve(np.asarray(v, dtype=float))


def prox_zero(affine_map, metric, rhs, lam, cache=None):
    """ Generalized prox of the zero-cone indicator of H x + c. """
    def build():
        return SubspaceProjector(_block_matrix(affine_map), -affine_map.offset, metric)

    projector = _cached(cache, ('zero', lam), build)
    return projector.solve(rhs)
