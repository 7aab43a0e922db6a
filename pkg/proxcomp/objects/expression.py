import itertools
import threading
from collections import namedtuple
from types import MappingProxyType

import numpy as np

from proxcomp.objects.constant_pool import ConstantPool
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DimensionError


class Dim(namedtuple('Dim', ['rows', 'cols'])):
    """ Dimensions of a value. Scalars are 1x1 and vectors in R^n are n x 1. """

    def __new__(cls, rows, cols=1):
        rows, cols = int(rows), int(cols)
        if rows < 1 or cols < 1:
            raise DimensionError('dimensions must be positive, got %dx%d' % (rows, cols))
        return super().__new__(cls, rows, cols)

    @property
    def size(self):
        return self.rows * self.cols

    @property
    def is_scalar(self):
        return self.rows == 1 and self.cols == 1

    @property
    def is_vector(self):
        return self.cols == 1

    @property
    def is_square(self):
        return self.rows == self.cols

    def __str__(self):
        return '%dx%d' % (self.rows, self.cols)


SCALAR_DIM = Dim(1, 1)

_id_counter = itertools.count()
_id_lock = threading.Lock()


def _next_variable_id():
    with _id_lock:
        return 'v%d' % next(_id_counter)


class Expr(object):
    """
    Immutable expression-tree node. The node kinds are VARIABLE and CONSTANT
    leaves, LINEAR_MAP (one child), ADD, ATOM (a modeling function) and
    PROX_FUNCTION (a compiled prox term).
    """
    __slots__ = ('_kind', '_dim', '_children', '_payload')
    __array_ufunc__ = None

    def __init__(self, kind, dim, children=(), payload=None):
        children = tuple(children)
        if kind in (Constants.VARIABLE, Constants.CONSTANT) and children:
            raise ValueError('%s nodes are leaves' % kind)
        if kind == Constants.ADD:
            for child in children:
                if child.dim != dim:
                    raise DimensionError('add operands must share dimensions: %s vs %s'
                                         % (dim, child.dim))
        if kind == Constants.LINEAR_MAP:
            if len(children) != 1:
                raise ValueError('linear map nodes have exactly one child')
            if payload.input_dim != children[0].dim.size:
                raise DimensionError('linear map expects input of size %d, child has %s'
                                     % (payload.input_dim, children[0].dim))
        self._kind = kind
        self._dim = dim
        self._children = children
        self._payload = payload

    @property
    def kind(self):
        return self._kind

    @property
    def dim(self):
        return self._dim

    @property
    def children(self):
        return self._children

    @property
    def payload(self):
        return self._payload

    @property
    def var_id(self):
        return self._payload if self._kind == Constants.VARIABLE else None

    @property
    def data(self):
        return self._payload if self._kind == Constants.CONSTANT else None

    @property
    def op(self):
        return self._payload if self._kind == Constants.LINEAR_MAP else None

    @property
    def name(self):
        if self._kind in (Constants.ATOM, Constants.PROX_FUNCTION):
            return self._payload[0]
        return None

    @property
    def params(self):
        if self._kind in (Constants.ATOM, Constants.PROX_FUNCTION):
            return self._payload[1]
        return MappingProxyType({})

    @property
    def value(self):
        """ Constant value as a 2-D array. """
        return self._payload.value if self._kind == Constants.CONSTANT else None

    def is_constant(self):
        """ True when no variable occurs in the subtree. """
        if self._kind == Constants.VARIABLE:
            return False
        return all(child.is_constant() for child in self._children)

    def variables(self):
        """
        Variables of the subtree in first-traversal order.

        Returns:
            (list): (var_id, Dim) pairs without repetitions.
        """
        seen = {}
        stack = [self]
        while stack:
            node = stack.pop()
            if node.kind == Constants.VARIABLE:
                if node.var_id not in seen:
                    seen[node.var_id] = node.dim
            else:
                stack.extend(reversed(node.children))
        return list(seen.items())

    def walk(self):
        """ Depth-first pre-order traversal. """
        yield self
        for child in self._children:
            yield from child.walk()

    def with_children(self, children):
        return Expr(self._kind, self._dim, children, self._payload)

    def structurally_equal(self, other):
        from proxcomp.linops.algebra import same_op
        if self._kind != other.kind or self._dim != other.dim:
            return False
        if len(self._children) != len(other.children):
            return False
        if self._kind == Constants.VARIABLE:
            if self.var_id != other.var_id:
                return False
        elif self._kind == Constants.CONSTANT:
            if not np.array_equal(self.value, other.value):
                return False
        elif self._kind == Constants.LINEAR_MAP:
            if not same_op(self.op, other.op):
                return False
        elif self._kind in (Constants.ATOM, Constants.PROX_FUNCTION):
            if self.name != other.name or not _params_equal(self.params, other.params):
                return False
        return all(a.structurally_equal(b) for a, b in zip(self._children, other.children))

    # Modeling-layer operators.

    def __add__(self, other):
        other = as_expr(other, like=self)
        left, right = _broadcast(self, other)
        return add_exprs([left, right])

    def __radd__(self, other):
        return as_expr(other, like=self).__add__(self)

    def __sub__(self, other):
        return self + (-as_expr(other, like=self))

    def __rsub__(self, other):
        return as_expr(other, like=self) + (-self)

    def __neg__(self):
        from proxcomp.objects.atoms import build_atom
        return build_atom('neg', [self])

    def __mul__(self, other):
        from proxcomp.objects.atoms import build_atom
        other = as_expr(other)
        if other.is_constant():
            return build_atom('mul', [other, self])
        return build_atom('mul', [self, other])

    def __rmul__(self, other):
        from proxcomp.objects.atoms import build_atom
        return build_atom('mul', [as_expr(other), self])

    def __truediv__(self, other):
        other = np.asarray(other, dtype=float)
        return (1.0 / other) * self

    def __matmul__(self, other):
        from proxcomp.objects.atoms import build_atom
        return build_atom('matmul', [self, as_expr(other)])

    def __rmatmul__(self, other):
        from proxcomp.objects.atoms import build_atom
        return build_atom('matmul', [as_expr(other), self])

    def __getitem__(self, key):
        from proxcomp.objects.atoms import index
        return index(self, key)

    @property
    def T(self):
        from proxcomp.objects.atoms import build_atom
        return build_atom('transpose', [self])

    __hash__ = object.__hash__

    def __repr__(self):
        if self._kind == Constants.VARIABLE:
            return 'var(%s)' % self.var_id
        if self._kind == Constants.CONSTANT:
            return 'const(%s)' % (self._dim,)
        if self._kind == Constants.LINEAR_MAP:
            return '%s*%r' % (self.op.variant, self._children[0])
        label = self.name if self.name is not None else self._kind
        return '%s(%s)' % (label, ', '.join(repr(c) for c in self._children))


def _params_equal(a, b):
    if set(a) != set(b):
        return False
    for key in a:
        x, y = a[key], b[key]
        if isinstance(x, Expr) or isinstance(y, Expr):
            if not (isinstance(x, Expr) and isinstance(y, Expr) and x.structurally_equal(y)):
                return False
        elif not np.array_equal(np.asarray(x), np.asarray(y)):
            return False
    return True


def _broadcast(left, right):
    """ Scalars added to non-scalars are promoted with a ones vector. """
    if left.dim == right.dim:
        return left, right
    from proxcomp.objects.atoms import build_atom
    if left.dim.is_scalar:
        return build_atom('promote', [left], {'rows': right.dim.rows, 'cols': right.dim.cols}), right
    if right.dim.is_scalar:
        return left, build_atom('promote', [right], {'rows': left.dim.rows, 'cols': left.dim.cols})
    raise DimensionError('cannot add %s and %s' % (left.dim, right.dim))


def freeze_params(params):
    return MappingProxyType(dict(params or {}))


def Variable(rows, cols=1, name=None):
    """
    A new optimization variable.

    Args:
        rows (int): Number of rows.
        cols (int): Number of columns.
        name (str): Identifier; generated when omitted.
    Returns:
        (Expr): The variable node.
    """
    return Expr(Constants.VARIABLE, Dim(rows, cols), payload=name or _next_variable_id())


def variable_with_id(var_id, dim):
    return Expr(Constants.VARIABLE, dim, payload=var_id)


def Constant(value):
    """
    A constant node backed by the constant pool.

    Args:
        value (scalar, array or scipy sparse matrix): The data.
    Returns:
        (Expr): The constant node.
    """
    data = ConstantPool.get_instance().intern(value)
    return Expr(Constants.CONSTANT, Dim(*data.shape), payload=data)


def as_expr(value, like=None):
    if isinstance(value, Expr):
        return value
    return Constant(value)


def add_exprs(children):
    """ ADD node over *children*, flattening nested additions. """
    flat = []
    for child in children:
        if child.kind == Constants.ADD:
            flat.extend(child.children)
        else:
            flat.append(child)
    if len(flat) == 1:
        return flat[0]
    return Expr(Constants.ADD, flat[0].dim, flat)


def linear_map(op, child):
    """ LINEAR_MAP node applying *op* to *child*; the result is a column vector. """
    return Expr(Constants.LINEAR_MAP, Dim(op.output_dim, 1), [child], op)


def reshaped_linear_map(op, child, dim):
    if dim.size != op.output_dim:
        raise DimensionError('linear map output %d does not fill %s' % (op.output_dim, dim))
    return Expr(Constants.LINEAR_MAP, dim, [child], op)


def prox_function(name, args, params=None):
    """ Compiled prox term f(args); always scalar valued. """
    return Expr(Constants.PROX_FUNCTION, SCALAR_DIM, args, (name, freeze_params(params)))


def map_output_dim(op, child_dim):
    """
    Shape of op applied to a child of shape child_dim: Kronecker maps act as
    X -> R X L^T, size-preserving maps keep the child's shape, anything else
    yields a column vector.
    """
    from proxcomp.linops.linear_op import KronOp
    if isinstance(op, KronOp):
        return Dim(op.right.output_dim, op.left.output_dim)
    if op.output_dim == child_dim.size and op.input_dim == child_dim.size:
        return child_dim
    return Dim(op.output_dim, 1)


def apply_map(op, child):
    """ LINEAR_MAP node whose shape follows map_output_dim. """
    return Expr(Constants.LINEAR_MAP, map_output_dim(op, child.dim), [child], op)


def as_column(expr):
    """ The same values as a column vector. """
    if expr.dim.is_vector:
        return expr
    column = Dim(expr.dim.size, 1)
    if expr.kind == Constants.LINEAR_MAP:
        return Expr(Constants.LINEAR_MAP, column, expr.children, expr.op)
    if expr.kind == Constants.CONSTANT:
        return Constant(expr.data.vec().reshape(-1, 1))
    from proxcomp.linops.linear_op import ScalarOp
    return Expr(Constants.LINEAR_MAP, column, [expr], ScalarOp(1.0, expr.dim.size))


def affine_sum(children):
    """
    ADD of affine expressions. Children of equal size but different shapes are
    summed as column vectors.
    """
    flat = []
    for child in children:
        flat.extend(child.children if child.kind == Constants.ADD else [child])
    if len(flat) == 1:
        return flat[0]
    dims = set(child.dim for child in flat)
    if len(dims) > 1:
        sizes = set(d.size for d in dims)
        if len(sizes) > 1:
            raise DimensionError('cannot add shapes %s' % sorted(str(d) for d in dims))
        flat = [as_column(child) for child in flat]
    return Expr(Constants.ADD, flat[0].dim, flat)
