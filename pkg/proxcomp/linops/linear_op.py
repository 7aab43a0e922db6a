import numpy as np
import scipy.sparse as sp

from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DimensionError, LinearOpError, SingularOperatorError


def _as_vector(x, length):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = x.reshape(-1, order='F')
    if x.shape[0] != length:
        raise DimensionError('operator expects a vector of length %d, got %d' % (length, x.shape[0]))
    return x


class LinearOp(object):
    """
    Base class of the structured linear operators. Operators map column-major
    vectorized inputs of length *input_dim* to outputs of length *output_dim*
    and are immutable after construction.
    """
    variant = None

    def __init__(self, output_dim, input_dim):
        if output_dim < 0 or input_dim < 0:
            raise DimensionError('operator dimensions must be nonnegative')
        self._output_dim = int(output_dim)
        self._input_dim = int(input_dim)

    @property
    def output_dim(self):
        return self._output_dim

    @property
    def input_dim(self):
        return self._input_dim

    @property
    def shape(self):
        return self._output_dim, self._input_dim

    @property
    def is_square(self):
        return self._output_dim == self._input_dim

    def apply(self, x):
        """
        Apply the operator to a vector.

        Args:
            x (ndarray): Vector of length input_dim.
        Returns:
            (ndarray): The product, of length output_dim.
        """
        x = _as_vector(x, self._input_dim)
        return self.apply_matrix(x.reshape(-1, 1))[:, 0]

    def apply_matrix(self, x):
        """
        Apply the operator to every column of a 2-D array.

        Args:
            x (ndarray): Array of shape (input_dim, k).
        Returns:
            (ndarray): Array of shape (output_dim, k).
        """
        raise NotImplementedError('apply_matrix is not implemented for %s' % self.variant)

    def transpose(self):
        raise NotImplementedError

    def inverse(self):
        raise NotImplementedError

    def storage(self):
        """ Number of stored scalars in the operator payload. """
        raise NotImplementedError

    def _check_square(self):
        if not self.is_square:
            raise DimensionError('inverse of a non-square %dx%d operator' % self.shape)

    @property
    def T(self):
        return self.transpose()

    def __repr__(self):
        return '%s(%dx%d)' % (self.__class__.__name__, self._output_dim, self._input_dim)


class DenseOp(LinearOp):
    variant = Constants.DENSE

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix.reshape(-1, 1)
        if matrix.ndim != 2:
            raise DimensionError('dense operator needs a 2-D array')
        super().__init__(matrix.shape[0], matrix.shape[1])
        matrix.setflags(write=False)
        self._matrix = matrix

    @property
    def matrix(self):
        return self._matrix

    def apply_matrix(self, x):
        from proxcomp.linops.factorization import OperationCounter
        OperationCounter.get_instance().record_multiplies(self._matrix.size * x.shape[1])
        return self._matrix @ x

    def transpose(self):
        return DenseOp(self._matrix.T)

    def inverse(self):
        self._check_square()
        from proxcomp.linops.factorization import dense_inverse
        return dense_inverse(self._matrix)

    def storage(self):
        return self._matrix.size


class SparseOp(LinearOp):
    """ Compressed-column sparse operator with sorted row indices. """
    variant = Constants.SPARSE

    def __init__(self, matrix):
        matrix = sp.csc_matrix(matrix, dtype=float, copy=True)
        matrix.sum_duplicates()
        matrix.sort_indices()
        super().__init__(matrix.shape[0], matrix.shape[1])
        self._matrix = matrix

    @property
    def matrix(self):
        return self._matrix

    def apply_matrix(self, x):
        from proxcomp.linops.factorization import OperationCounter
        OperationCounter.get_instance().record_multiplies(self._matrix.nnz * x.shape[1])
        return np.asarray(self._matrix @ x)

    def transpose(self):
        return SparseOp(self._matrix.T)

    def inverse(self):
        self._check_square()
        from proxcomp.linops.factorization import sparse_inverse
        return sparse_inverse(self._matrix)

    def storage(self):
        return self._matrix.nnz


class DiagonalOp(LinearOp):
    variant = Constants.DIAGONAL

    def __init__(self, diagonal):
        diagonal = np.array(diagonal, dtype=float).reshape(-1)
        super().__init__(diagonal.shape[0], diagonal.shape[0])
        diagonal.setflags(write=False)
        self._diagonal = diagonal

    @property
    def diagonal(self):
        return self._diagonal

    def apply_matrix(self, x):
        return self._diagonal[:, None] * x

    def transpose(self):
        return self

    def inverse(self):
        zeros = np.flatnonzero(self._diagonal == 0)
        if zeros.size:
            raise SingularOperatorError('zero diagonal entry at index %d' % zeros[0])
        return DiagonalOp(1.0 / self._diagonal)

    def storage(self):
        return self._diagonal.shape[0]


class ScalarOp(LinearOp):
    """ The scalar matrix alpha * I of size n. """
    variant = Constants.SCALAR

    def __init__(self, alpha, n):
        super().__init__(n, n)
        self._alpha = float(alpha)

    @property
    def alpha(self):
        return self._alpha

    @property
    def is_identity(self):
        return self._alpha == 1.0

    def apply_matrix(self, x):
        return self._alpha * x

    def transpose(self):
        return self

    def inverse(self):
        if self._alpha == 0:
            raise SingularOperatorError('zero scalar operator')
        return ScalarOp(1.0 / self._alpha, self._output_dim)

    def storage(self):
        return 1


class KronOp(LinearOp):
    """
    The Kronecker product left (x) right. With left a x b and right c x d it
    maps vec(X), X of shape d x b, to vec(right X left^T).
    """
    variant = Constants.KRON

    def __init__(self, left, right):
        super().__init__(left.output_dim * right.output_dim, left.input_dim * right.input_dim)
        self._left = left
        self._right = right

    @property
    def left(self):
        return self._left

    @property
    def right(self):
        return self._right

    def apply_matrix(self, x):
        b, d = self._left.input_dim, self._right.input_dim
        a, c = self._left.output_dim, self._right.output_dim
        k = x.shape[1]
        out = np.empty((a * c, k))
        for j in range(k):
            mat = x[:, j].reshape((d, b), order='F')
            rx = self._right.apply_matrix(mat)
            if isinstance(self._left, ScalarOp):
                res = self._left.alpha * rx
            else:
                res = self._left.apply_matrix(rx.T).T
            out[:, j] = res.reshape(-1, order='F')
        return out

    def transpose(self):
        return KronOp(self._left.transpose(), self._right.transpose())

    def inverse(self):
        self._check_square()
        return KronOp(self._left.inverse(), self._right.inverse())

    def storage(self):
        return self._left.storage() + self._right.storage()

    def __repr__(self):
        return 'KronOp(%r, %r)' % (self._left, self._right)


class SumOp(LinearOp):
    variant = Constants.SUM

    def __init__(self, ops):
        ops = list(ops)
        if not ops:
            raise LinearOpError('empty operator sum')
        shape = ops[0].shape
        for op in ops:
            if op.shape != shape:
                raise DimensionError('sum members must share dimensions: %s vs %s' % (shape, op.shape))
        super().__init__(*shape)
        self._ops = tuple(ops)

    @property
    def ops(self):
        return self._ops

    def apply_matrix(self, x):
        out = self._ops[0].apply_matrix(x)
        for op in self._ops[1:]:
            out = out + op.apply_matrix(x)
        return out

    def transpose(self):
        return SumOp([op.transpose() for op in self._ops])

    def inverse(self):
        self._check_square()
        from proxcomp.linops.algebra import materialize
        from proxcomp.linops.factorization import dense_inverse
        return dense_inverse(materialize(self))

    def storage(self):
        return sum(op.storage() for op in self._ops)


class ProductOp(LinearOp):
    """ The product ops[0] ops[1] ... ops[-1]; the last member is applied first. """
    variant = Constants.PRODUCT

    def __init__(self, ops):
        ops = list(ops)
        if not ops:
            raise LinearOpError('empty operator product')
        for outer, inner in zip(ops[:-1], ops[1:]):
            if outer.input_dim != inner.output_dim:
                raise DimensionError('product members do not chain: %r after %r' % (outer, inner))
        super().__init__(ops[0].output_dim, ops[-1].input_dim)
        self._ops = tuple(ops)

    @property
    def ops(self):
        return self._ops

    def apply_matrix(self, x):
        for op in reversed(self._ops):
            x = op.apply_matrix(x)
        return x

    def transpose(self):
        return ProductOp([op.transpose() for op in reversed(self._ops)])

    def inverse(self):
        self._check_square()
        if all(op.is_square for op in self._ops):
            return ProductOp([op.inverse() for op in reversed(self._ops)])
        from proxcomp.linops.algebra import materialize
        from proxcomp.linops.factorization import dense_inverse
        return dense_inverse(materialize(self))

    def storage(self):
        return sum(op.storage() for op in self._ops)


class AbstractOp(LinearOp):
    """
    Operator defined by closures, used to represent factorizations. Never an
    operand of the combination rules.
    """
    variant = Constants.ABSTRACT

    def __init__(self, output_dim, input_dim, apply_fn, transpose_fn, inverse_fn=None,
                 payload=0, label='abstract'):
        super().__init__(output_dim, input_dim)
        self._apply_fn = apply_fn
        self._transpose_fn = transpose_fn
        self._inverse_fn = inverse_fn
        self._payload = payload
        self._label = label

    @property
    def label(self):
        return self._label

    def apply_matrix(self, x):
        return np.column_stack([self._apply_fn(x[:, j]) for j in range(x.shape[1])]) \
            if x.shape[1] else np.zeros((self._output_dim, 0))

    def transpose(self):
        return AbstractOp(self._input_dim, self._output_dim, self._transpose_fn, self._apply_fn,
                          payload=self._payload, label=self._label + "'")

    def inverse(self):
        if self._inverse_fn is None:
            raise LinearOpError('abstract operator %s has no inverse' % self._label)
        return self._inverse_fn()

    def storage(self):
        return self._payload


def identity(n):
    return ScalarOp(1.0, n)
