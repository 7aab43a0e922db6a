"""
Conic reductions. Each reduction replaces an atom h(z) by an expression R over
fresh variables together with cone indicators such that h(z) <= R holds on the
feasible set and equality is attainable.
"""
from collections import namedtuple

import numpy as np
import scipy.sparse as sp

from proxcomp.linops.linear_op import DenseOp, ScalarOp, SparseOp
from proxcomp.objects.atoms import build_atom
from proxcomp.objects.evaluate import evaluate_array
from proxcomp.objects.expression import (Constant, add_exprs, affine_sum, apply_map,
                                         as_column, linear_map)
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import UnsupportedAtomError

Reduction = namedtuple('Reduction', ['replacement', 'constraints'])

REDUCTIONS = {}


def register_reduction(atom):
    def decorator(fn):
        REDUCTIONS[atom] = fn
        return fn
    return decorator


def has_reduction(atom):
    return atom in REDUCTIONS


def reduce_atom(expr, fresh):
    """
    Apply the registered reduction of an atom.

    Args:
        expr (Expr): The ATOM node; its arguments are linearized.
        fresh (callable): fresh(dim, definition) returns a new variable whose
            value at a feasible point is given by definition (an Expr or a
            callable on an assignment).
    Returns:
        (Reduction): The replacement and the cone indicators.
    """
    try:
        reduction = REDUCTIONS[expr.name]
    except KeyError:
        raise UnsupportedAtomError('no conic reduction for %s' % expr.name)
    return reduction(expr, fresh)


def negate(expr):
    return apply_map(ScalarOp(-1.0, expr.dim.size), expr)


def scaled(alpha, expr):
    return apply_map(ScalarOp(alpha, expr.dim.size), expr)


def subtract(a, b):
    return affine_sum([a, negate(b)])


def filled(dim, value):
    return Constant(np.full((dim.rows, dim.cols), float(value)))


def broadcast(scalar, dim):
    """ A scalar expression repeated as a column of dim.size entries. """
    return linear_map(DenseOp(np.ones((dim.size, 1))), scalar)


def _nonneg(expr):
    return build_atom(Constants.NONNEG, [expr])


def _epigraph_of(expr, fresh, atom):
    """ Fresh variable shaped like the atom's value, defined as the atom itself. """
    z = expr.children[0]
    return fresh(expr.dim, build_atom(atom, [z], dict(expr.params)))


@register_reduction('abs')
def _abs(expr, fresh):
    z = expr.children[0]
    t = _epigraph_of(expr, fresh, 'abs')
    return Reduction(t, [_nonneg(subtract(t, z)), _nonneg(affine_sum([t, z]))])


@register_reduction('norm1')
def _norm1(expr, fresh):
    z = expr.children[0]
    t = fresh(z.dim, build_atom('abs', [z]))
    total = linear_map(DenseOp(np.ones((1, z.dim.size))), t)
    return Reduction(total, [_nonneg(subtract(t, z)), _nonneg(affine_sum([t, z]))])


@register_reduction('norm_inf')
def _norm_inf(expr, fresh):
    z = expr.children[0]
    s = _epigraph_of(expr, fresh, 'norm_inf')
    column = broadcast(s, z.dim)
    return Reduction(s, [_nonneg(subtract(column, as_column(z))),
                         _nonneg(affine_sum([column, as_column(z)]))])


@register_reduction('norm2')
def _norm2(expr, fresh):
    z = expr.children[0]
    s = _epigraph_of(expr, fresh, 'norm2')
    return Reduction(s, [build_atom(Constants.SOC, [z, s])])


@register_reduction('hinge')
def _hinge(expr, fresh):
    z = expr.children[0]
    t = _epigraph_of(expr, fresh, 'hinge')
    return Reduction(t, [_nonneg(t), _nonneg(subtract(t, z))])


@register_reduction('deadzone')
def _deadzone(expr, fresh):
    z = expr.children[0]
    epsilon = float(expr.params['epsilon'])
    t = _epigraph_of(expr, fresh, 'deadzone')
    shift = filled(z.dim, epsilon)
    return Reduction(t, [_nonneg(t),
                         _nonneg(affine_sum([subtract(t, z), shift])),
                         _nonneg(affine_sum([t, z, shift]))])


@register_reduction('quantile')
def _quantile(expr, fresh):
    z = expr.children[0]
    alpha = float(expr.params['alpha'])
    t = _epigraph_of(expr, fresh, 'quantile')
    return Reduction(t, [_nonneg(subtract(t, scaled(alpha, z))),
                         _nonneg(subtract(t, scaled(alpha - 1.0, z)))])


def _stack(parts, rows):
    """ Column vector [parts...]; each part is (expression, scale). """
    children, offset = [], 0
    for expr, alpha in parts:
        size = expr.dim.size
        embed = sp.csc_matrix((np.full(size, alpha), (np.arange(offset, offset + size),
                                                       np.arange(size))), shape=(rows, size))
        children.append(linear_map(SparseOp(embed), as_column(expr)))
        offset += size
    return affine_sum(children)


@register_reduction('sum_squares')
def _sum_squares(expr, fresh):
    # ||z||^2 <= s  iff  ||(2 z, s - 1)||_2 <= s + 1
    z = expr.children[0]
    s = _epigraph_of(expr, fresh, 'sum_squares')
    rows = z.dim.size + 1
    last = np.zeros((rows, 1))
    last[-1, 0] = -1.0
    x = affine_sum([_stack([(z, 2.0), (s, 1.0)], rows), Constant(last)])
    bound = affine_sum([s, Constant(1.0)])
    return Reduction(s, [build_atom(Constants.SOC, [x, bound])])


@register_reduction('huber')
def _huber(expr, fresh):
    # huber(z) = min_w w^2 + 2 m |z - w|, attained at w = clip(z, -m, m)
    z = expr.children[0]
    m = float(expr.params['m'])
    w = fresh(z.dim, lambda assignment: np.clip(evaluate_array(z, assignment), -m, m))
    replacement = add_exprs([build_atom('square', [w]),
                             scaled(2.0 * m, build_atom('abs', [subtract(z, w)]))])
    return Reduction(replacement, [])
