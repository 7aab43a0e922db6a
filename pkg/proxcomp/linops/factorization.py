import threading
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from proxcomp.linops.linear_op import AbstractOp
from proxcomp.utils.errors import DecompositionError, SingularOperatorError
from proxcomp.utils.safe_dict import SafeDict


class OperationCounter(object):
    """
    Process-wide accounting of factorizations and scalar multiplies. Tests and
    benchmarks reset it and inspect what a computation did.
    """
    __instance = None

    @staticmethod
    def get_instance():
        if OperationCounter.__instance is None:
            OperationCounter()
        return OperationCounter.__instance

    def __init__(self):
        if OperationCounter.__instance is None:
            self._lock = threading.Lock()
            self._factorizations = []
            self._multiplies = 0
            OperationCounter.__instance = self
        else:
            raise Exception('this is a singleton class')

    @property
    def factorizations(self):
        """
        Factorizations performed since the last reset.

        Returns:
            (list): (kind, dimension) pairs in the order they happened.
        """
        with self._lock:
            return list(self._factorizations)

    @property
    def multiplies(self):
        with self._lock:
            return self._multiplies

    def record_factorization(self, kind, dim):
        with self._lock:
            self._factorizations.append((kind, int(dim)))

    def record_multiplies(self, count):
        with self._lock:
            self._multiplies += int(count)

    def reset(self):
        with self._lock:
            self._factorizations = []
            self._multiplies = 0


def _condition(matrix):
    try:
        return float(np.linalg.cond(matrix))
    except np.linalg.LinAlgError:
        return float('inf')


class CholeskySolver(object):
    """ Cholesky factorization of a symmetric positive definite matrix. """

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        try:
            self._factor = sla.cho_factor(matrix, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            raise SingularOperatorError('matrix is not positive definite', _condition(matrix))
        self.dim = matrix.shape[0]
        OperationCounter.get_instance().record_factorization('cholesky', self.dim)

    def solve(self, rhs):
        return sla.cho_solve(self._factor, rhs, check_finite=False)

    def solve_transpose(self, rhs):
        return self.solve(rhs)


class LUSolver(object):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', sla.LinAlgWarning)
            self._factor = sla.lu_factor(matrix, check_finite=True)
        pivots = np.abs(np.diag(self._factor[0]))
        scale = max(np.abs(matrix).max(), 1.0) if matrix.size else 1.0
        if matrix.size and pivots.min() <= np.finfo(float).eps * scale * matrix.shape[0]:
            raise SingularOperatorError('singular operator', _condition(matrix))
        self.dim = matrix.shape[0]
        OperationCounter.get_instance().record_factorization('lu', self.dim)

    def solve(self, rhs):
        return sla.lu_solve(self._factor, rhs, check_finite=False)

    def solve_transpose(self, rhs):
        return sla.lu_solve(self._factor, rhs, trans=1, check_finite=False)


class SparseLUSolver(object):
    def __init__(self, matrix):
        matrix = sp.csc_matrix(matrix)
        try:
            self._factor = spla.splu(matrix)
        except RuntimeError as e:
            raise SingularOperatorError('singular sparse operator: %s' % e)
        self.dim = matrix.shape[0]
        OperationCounter.get_instance().record_factorization('sparse-lu', self.dim)

    def solve(self, rhs):
        return self._factor.solve(np.asarray(rhs, dtype=float))

    def solve_transpose(self, rhs):
        return self._factor.solve(np.asarray(rhs, dtype=float), trans='T')


class PinvSolver(object):
    """ Pseudo-inverse of a singular or badly conditioned matrix; least-norm solutions. """

    def __init__(self, matrix):
        self._pinv = np.linalg.pinv(np.asarray(matrix, dtype=float))
        self.dim = self._pinv.shape[0]
        OperationCounter.get_instance().record_factorization('pinv', self.dim)

    def solve(self, rhs):
        return self._pinv @ rhs

    def solve_transpose(self, rhs):
        return self._pinv.T @ rhs


def _solver_op(solver, label, payload, forward):
    n = solver.dim
    return AbstractOp(n, n, solver.solve, solver.solve_transpose,
                      inverse_fn=lambda: forward, payload=payload, label=label)


def dense_inverse(matrix, spd=False):
    """
    Inverse of a dense matrix as an abstract operator wrapping a cached
    factorization.

    Args:
        matrix (ndarray): Square matrix.
        spd (bool): Use a Cholesky factorization instead of LU.
    Returns:
        (AbstractOp): The inverse.
    """
    from proxcomp.linops.linear_op import DenseOp
    matrix = np.asarray(matrix, dtype=float)
    solver = CholeskySolver(matrix) if spd else LUSolver(matrix)
    return _solver_op(solver, 'cholesky-inverse' if spd else 'lu-inverse', matrix.size,
                      DenseOp(matrix))


def sparse_inverse(matrix):
    from proxcomp.linops.linear_op import SparseOp
    solver = SparseLUSolver(matrix)
    return _solver_op(solver, 'sparse-lu-inverse', matrix.nnz, SparseOp(matrix))


def symmetric_eig(matrix):
    """
    Eigendecomposition of a symmetric matrix.

    Args:
        matrix (ndarray): Symmetric n x n matrix.
    Returns:
        (tuple): Ascending eigenvalues and the orthonormal eigenvectors as columns.
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        w, q = np.linalg.eigh(0.5 * (matrix + matrix.T))
    except np.linalg.LinAlgError as e:
        raise DecompositionError('eigendecomposition of a %dx%d matrix did not converge: %s'
                                 % (matrix.shape[0], matrix.shape[1], e))
    OperationCounter.get_instance().record_factorization('eigh', matrix.shape[0])
    return w, q


def singular_value_decomposition(matrix):
    """
    Thin SVD.

    Args:
        matrix (ndarray): m x n matrix.
    Returns:
        (tuple): U, singular values (descending) and V^T.
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise DecompositionError('SVD of a %dx%d matrix did not converge: %s'
                                 % (matrix.shape[0], matrix.shape[1], e))
    OperationCounter.get_instance().record_factorization('svd', min(matrix.shape))
    return u, s, vt


class FactorCache(object):
    """
    Cache of factorizations keyed by the caller. Every entry is built once under
    the write lock of a SafeDict; later reads only take the read lock.
    """

    def __init__(self):
        self._entries = SafeDict()

    def get(self, key, builder):
        return self._entries.get_or_create(key, builder)

    def clear(self):
        self._entries.clear()

    def __len__(self):
        return len(self._entries)
