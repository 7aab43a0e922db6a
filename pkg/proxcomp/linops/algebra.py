"""
Combination rules for structured operators.

Promotion follows Dense > Sparse > Diagonal > Scalar. Kronecker products
combine under addition when they share a factor on the same side, and under
composition when their factors are conformable. Everything else falls back to
SUM or PRODUCT nodes.
"""
import numpy as np
import scipy.sparse as sp

from proxcomp.linops.linear_op import (AbstractOp, DenseOp, DiagonalOp, KronOp, ProductOp,
                                       ScalarOp, SparseOp, SumOp)
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DimensionError, MaterializeCapError

_RANK = {
    Constants.SCALAR: 0,
    Constants.DIAGONAL: 1,
    Constants.SPARSE: 2,
    Constants.DENSE: 3,
}


def _is_basic(op):
    return op.variant in _RANK


def _as_sparse(op):
    if isinstance(op, SparseOp):
        return op.matrix
    if isinstance(op, DiagonalOp):
        return sp.diags(op.diagonal, format='csc')
    if isinstance(op, ScalarOp):
        return op.alpha * sp.identity(op.output_dim, format='csc')
    return sp.csc_matrix(materialize(op))


def _as_dense(op):
    if isinstance(op, DenseOp):
        return op.matrix
    return materialize(op)


def materialize(op, cap=Constants.MATERIALIZE_CAP):
    """
    Explicit matrix of an operator.

    Args:
        op (LinearOp): The operator.
        cap (int): Largest allowed number of matrix entries.
    Returns:
        (ndarray): Matrix M with M x = op.apply(x).
    """
    rows, cols = op.shape
    if rows * cols > cap:
        raise MaterializeCapError('materializing a %dx%d operator exceeds the cap of %d entries'
                                  % (rows, cols, cap))
    if isinstance(op, DenseOp):
        return np.array(op.matrix)
    if isinstance(op, SparseOp):
        return op.matrix.toarray()
    if isinstance(op, DiagonalOp):
        return np.diag(op.diagonal)
    if isinstance(op, ScalarOp):
        return op.alpha * np.eye(rows)
    if isinstance(op, KronOp):
        return np.kron(materialize(op.left, cap), materialize(op.right, cap))
    if isinstance(op, SumOp):
        return sum(materialize(member, cap) for member in op.ops)
    if isinstance(op, ProductOp):
        out = materialize(op.ops[-1], cap)
        for member in reversed(op.ops[:-1]):
            out = materialize(member, cap) @ out
        return out
    return op.apply_matrix(np.eye(cols))


def same_op(a, b):
    """ Structural equality of two operators. """
    if a is b:
        return True
    if a.variant != b.variant or a.shape != b.shape:
        return False
    if isinstance(a, ScalarOp):
        return a.alpha == b.alpha
    if isinstance(a, DiagonalOp):
        return np.array_equal(a.diagonal, b.diagonal)
    if isinstance(a, DenseOp):
        return np.array_equal(a.matrix, b.matrix)
    if isinstance(a, SparseOp):
        return (a.matrix != b.matrix).nnz == 0
    if isinstance(a, KronOp):
        return same_op(a.left, b.left) and same_op(a.right, b.right)
    if isinstance(a, (SumOp, ProductOp)):
        return len(a.ops) == len(b.ops) and all(same_op(x, y) for x, y in zip(a.ops, b.ops))
    return False


def add(a, b):
    """
    Sum of two operators.

    Args:
        a (LinearOp): First operand.
        b (LinearOp): Second operand, same shape.
    Returns:
        (LinearOp): a + b, combined when a rule applies, SUM otherwise.
    """
    if a.shape != b.shape:
        raise DimensionError('cannot add a %dx%d operator to a %dx%d operator' % (a.shape + b.shape))
    if _is_basic(a) and _is_basic(b):
        if _RANK[a.variant] < _RANK[b.variant]:
            a, b = b, a
        if isinstance(a, ScalarOp):
            return ScalarOp(a.alpha + b.alpha, a.output_dim)
        if isinstance(a, DiagonalOp):
            other = b.diagonal if isinstance(b, DiagonalOp) else b.alpha
            return DiagonalOp(a.diagonal + other)
        if isinstance(a, SparseOp):
            return SparseOp(a.matrix + _as_sparse(b))
        if isinstance(b, DenseOp):
            return DenseOp(a.matrix + b.matrix)
        if isinstance(b, ScalarOp):
            return DenseOp(a.matrix + b.alpha * np.eye(a.output_dim))
        if isinstance(b, DiagonalOp):
            return DenseOp(a.matrix + np.diag(b.diagonal))
        return DenseOp(a.matrix + b.matrix.toarray())
    if isinstance(a, KronOp) and isinstance(b, KronOp):
        if a.left.shape == b.left.shape and a.right.shape == b.right.shape:
            if same_op(a.left, b.left) and _combinable(a.right, b.right):
                return KronOp(a.left, add(a.right, b.right))
            if same_op(a.right, b.right) and _combinable(a.left, b.left):
                return KronOp(add(a.left, b.left), a.right)
    members = []
    for op in (a, b):
        members.extend(op.ops if isinstance(op, SumOp) else [op])
    return SumOp(members)


def _combinable(a, b):
    return not isinstance(a, AbstractOp) and not isinstance(b, AbstractOp)


def scale(op, alpha):
    """ alpha * op, keeping the operator's structure. """
    alpha = float(alpha)
    if alpha == 1.0:
        return op
    if isinstance(op, ScalarOp):
        return ScalarOp(alpha * op.alpha, op.output_dim)
    if isinstance(op, DiagonalOp):
        return DiagonalOp(alpha * op.diagonal)
    if isinstance(op, DenseOp):
        return DenseOp(alpha * op.matrix)
    if isinstance(op, SparseOp):
        return SparseOp(alpha * op.matrix)
    if isinstance(op, KronOp):
        if isinstance(op.left, ScalarOp) or not isinstance(op.right, ScalarOp):
            return KronOp(scale(op.left, alpha), op.right)
        return KronOp(op.left, scale(op.right, alpha))
    if isinstance(op, SumOp):
        return SumOp([scale(member, alpha) for member in op.ops])
    if isinstance(op, ProductOp):
        return ProductOp([scale(op.ops[0], alpha)] + list(op.ops[1:]))
    return ProductOp([ScalarOp(alpha, op.output_dim), op])


def compose(a, b):
    """
    The composition a(b(x)).

    Args:
        a (LinearOp): Outer operator.
        b (LinearOp): Inner operator; b.output_dim must equal a.input_dim.
    Returns:
        (LinearOp): The product, collapsed when a rule applies, PRODUCT otherwise.
    """
    if a.input_dim != b.output_dim:
        raise DimensionError('cannot compose a %dx%d operator after a %dx%d operator'
                             % (a.shape + b.shape))
    if isinstance(a, AbstractOp) or isinstance(b, AbstractOp):
        return _product(a, b)
    if isinstance(a, ScalarOp):
        return scale(b, a.alpha)
    if isinstance(b, ScalarOp):
        return scale(a, b.alpha)
    if isinstance(a, DiagonalOp) and isinstance(b, DiagonalOp):
        return DiagonalOp(a.diagonal * b.diagonal)
    if isinstance(a, DiagonalOp) and isinstance(b, DenseOp):
        return DenseOp(a.diagonal[:, None] * b.matrix)
    if isinstance(a, DenseOp) and isinstance(b, DiagonalOp):
        return DenseOp(a.matrix * b.diagonal[None, :])
    if isinstance(a, (DiagonalOp, SparseOp)) and isinstance(b, (DiagonalOp, SparseOp)):
        return SparseOp(_as_sparse(a) @ _as_sparse(b))
    if isinstance(a, (DenseOp, SparseOp)) and isinstance(b, (DenseOp, SparseOp)):
        rows, cols = a.output_dim, b.input_dim
        if rows * cols <= a.storage() + b.storage():
            return DenseOp(np.asarray(_dense_product(a, b)))
        return _product(a, b)
    if isinstance(a, KronOp) and isinstance(b, KronOp):
        if a.left.input_dim == b.left.output_dim and a.right.input_dim == b.right.output_dim:
            return KronOp(compose(a.left, b.left), compose(a.right, b.right))
    return _product(a, b)


def _dense_product(a, b):
    if isinstance(a, SparseOp):
        return (a.matrix @ _as_dense(b))
    if isinstance(b, SparseOp):
        return (b.matrix.T @ a.matrix.T).T
    return a.matrix @ b.matrix


def _product(a, b):
    members = []
    for op in (a, b):
        members.extend(op.ops if isinstance(op, ProductOp) else [op])
    return ProductOp(members)


def gram(op):
    """ The operator op^T op, structured when op is scalar, diagonal or Kronecker. """
    if isinstance(op, ScalarOp):
        return ScalarOp(op.alpha ** 2, op.input_dim)
    if isinstance(op, DiagonalOp):
        return DiagonalOp(op.diagonal ** 2)
    if isinstance(op, KronOp):
        return KronOp(gram(op.left), gram(op.right))
    if isinstance(op, DenseOp):
        return DenseOp(op.matrix.T @ op.matrix)
    if isinstance(op, SparseOp):
        return SparseOp(op.matrix.T @ op.matrix)
    return DenseOp(materialize(op).T @ materialize(op))


def diagonal_of(op):
    """
    Diagonal of a scalar or diagonal operator.

    Returns:
        (ndarray or None): The diagonal, or None when op is not scalar/diagonal.
    """
    if isinstance(op, ScalarOp):
        return np.full(op.output_dim, op.alpha)
    if isinstance(op, DiagonalOp):
        return np.array(op.diagonal)
    return None


def to_sparse(op):
    """ The operator as a scipy compressed-column matrix. """
    return sp.csc_matrix(_as_sparse(op))


def is_simple(op):
    """ Scalar and diagonal maps are simple; they can live in explicit constraints. """
    return isinstance(op, (ScalarOp, DiagonalOp)) and op.is_square


def storage(op):
    return op.storage()


def vector_to_matrix(x, rows, cols):
    return np.asarray(x, dtype=float).reshape((rows, cols), order='F')


def matrix_to_vector(x):
    return np.asarray(x, dtype=float).reshape(-1, order='F')


def apply(op, x):
    return op.apply(x)


def transpose(op):
    return op.transpose()


def inverse(op):
    return op.inverse()
