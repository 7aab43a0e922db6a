"""
Affine-form analysis of linearized expressions: an affine expression is
reduced to sum_j op_j vec(x_j) + c with one structured operator per variable.
"""
import numpy as np

from proxcomp.linops.algebra import add, compose
from proxcomp.linops.linear_op import DiagonalOp, KronOp, ScalarOp, identity
from proxcomp.prox.registry import AffineMap
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import UnsupportedAtomError


class AffineForm(object):
    """
    The affine map of an expression.

    Args:
        dim (Dim): Dimension of the expression.
        terms (dict): var_id -> LinearOp, in first-traversal order.
        dims (dict): var_id -> Dim of the variable.
        offset (ndarray): Constant part, column-major.
    """

    def __init__(self, dim, terms, dims, offset):
        self.dim = dim
        self.terms = terms
        self.dims = dims
        self.offset = offset

    @property
    def variables(self):
        return list(self.terms)

    def is_constant(self):
        return not self.terms

    def has_offset(self):
        return bool(np.any(self.offset != 0))

    def single(self):
        """ (var_id, op) when exactly one variable occurs, None otherwise. """
        if len(self.terms) != 1:
            return None
        return next(iter(self.terms.items()))

    def affine_map(self, layout, block_size):
        """
        The form as an AffineMap over a block.

        Args:
            layout (dict): var_id -> (start, stop) inside the block vector.
            block_size (int): Length of the block vector.
        """
        segments = [(layout[var_id][0], layout[var_id][1], op) for var_id, op in self.terms.items()]
        return AffineMap(segments, self.offset, self.dim, block_size)

    def apply(self, values):
        out = np.array(self.offset)
        for var_id, op in self.terms.items():
            out = out + op.apply(np.asarray(values[var_id], dtype=float).reshape(-1, order='F'))
        return out


def _merge(target, dims, var_id, op, dim):
    if var_id in target:
        target[var_id] = add(target[var_id], op)
    else:
        target[var_id] = op
        dims[var_id] = dim


def affine_form(expr):
    """
    Affine form of a linearized expression built from variables, constants,
    ADD and LINEAR_MAP nodes.

    Args:
        expr (Expr): The expression.
    Returns:
        (AffineForm): The form.
    Raises:
        UnsupportedAtomError: The expression contains a non-affine node.
    """
    kind = expr.kind
    size = expr.dim.size
    if kind == Constants.VARIABLE:
        return AffineForm(expr.dim, {expr.var_id: identity(size)}, {expr.var_id: expr.dim},
                          np.zeros(size))
    if kind == Constants.CONSTANT:
        return AffineForm(expr.dim, {}, {}, np.array(expr.data.vec(), dtype=float))
    if kind == Constants.ADD:
        terms, dims = {}, {}
        offset = np.zeros(size)
        for child in expr.children:
            form = affine_form(child)
            for var_id, op in form.terms.items():
                _merge(terms, dims, var_id, op, form.dims[var_id])
            offset = offset + form.offset
        return AffineForm(expr.dim, terms, dims, offset)
    if kind == Constants.LINEAR_MAP:
        form = affine_form(expr.children[0])
        terms = {var_id: compose(expr.op, op) for var_id, op in form.terms.items()}
        return AffineForm(expr.dim, terms, dict(form.dims), expr.op.apply(form.offset))
    raise UnsupportedAtomError('%s is not affine' % (expr.name or kind))


def is_affine_expr(expr):
    return all(node.kind in (Constants.VARIABLE, Constants.CONSTANT, Constants.ADD,
                             Constants.LINEAR_MAP) for node in expr.walk())


def is_elementwise_op(op, size):
    """ Nonsingular scalar or diagonal map of a vector of the given size. """
    if op.output_dim != size or op.input_dim != size:
        return False
    if isinstance(op, ScalarOp):
        return op.alpha != 0
    if isinstance(op, DiagonalOp):
        return bool(np.all(op.diagonal != 0))
    return False


def is_scalar_op(op, size):
    return isinstance(op, ScalarOp) and op.alpha != 0 and op.input_dim == size


def is_two_sided_kron(op):
    """ A Kronecker map whose factors are both non-scalar. """
    return isinstance(op, KronOp) and not isinstance(op.left, ScalarOp) \
        and not isinstance(op.right, ScalarOp)
