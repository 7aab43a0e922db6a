from proxcomp.objects.atoms import build_atom
from proxcomp.objects.expression import as_expr, add_exprs, Constant
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DimensionError


class Constraint(object):
    """
    A cone constraint. ZERO, NONNEG and PSD take one expression; SOC takes the
    pair (x, t) meaning ||x||_2 <= t.
    """

    def __init__(self, cone, args):
        if cone not in Constants.CONES:
            raise ValueError('unknown cone %r' % cone)
        args = tuple(as_expr(a) for a in args)
        expected = 2 if cone == Constants.SOC else 1
        if len(args) != expected:
            raise DimensionError('%s constraint takes %d expression(s)' % (cone, expected))
        if cone == Constants.SOC and not args[1].dim.is_scalar:
            raise DimensionError('second-order cone bound must be scalar, got %s' % (args[1].dim,))
        if cone == Constants.PSD and not args[0].dim.is_square:
            raise DimensionError('PSD constraint needs a square matrix, got %s' % (args[0].dim,))
        self._cone = cone
        self._args = args

    @property
    def cone(self):
        return self._cone

    @property
    def args(self):
        return self._args

    @property
    def expr(self):
        return self._args[0]

    def as_indicator(self):
        """ The constraint as its cone-indicator atom. """
        return build_atom(self._cone, list(self._args))

    def with_args(self, args):
        return Constraint(self._cone, args)

    def __repr__(self):
        return '%s(%s)' % (self._cone, ', '.join(repr(a) for a in self._args))


def Zero(expr):
    return Constraint(Constants.ZERO, [expr])


def NonNeg(expr):
    return Constraint(Constants.NONNEG, [expr])


def SecondOrderCone(x, t):
    return Constraint(Constants.SOC, [x, t])


def PSD(expr):
    return Constraint(Constants.PSD, [expr])


def eq(lhs, rhs):
    """ lhs == rhs as a zero-cone constraint. """
    return Zero(as_expr(lhs) - rhs)


def leq(lhs, rhs):
    """ lhs <= rhs as a nonnegative-orthant constraint. """
    return NonNeg(as_expr(rhs) - lhs)


def geq(lhs, rhs):
    return NonNeg(as_expr(lhs) - rhs)


class Problem(object):
    """ minimize objective subject to constraints. """

    def __init__(self, objective, constraints=None):
        objective = as_expr(objective)
        if not objective.dim.is_scalar:
            raise DimensionError('objective must be scalar, got %s' % (objective.dim,))
        self._objective = objective
        self._constraints = tuple(constraints or ())

    @property
    def objective(self):
        return self._objective

    @property
    def constraints(self):
        return self._constraints

    def variables(self):
        """ (var_id, Dim) pairs in first-traversal order over objective then constraints. """
        seen = dict(self._objective.variables())
        for constraint in self._constraints:
            for arg in constraint.args:
                for var_id, dim in arg.variables():
                    seen.setdefault(var_id, dim)
        return list(seen.items())


class ProxAffineProblem(object):
    """
    A sum of prox terms f_i(H_i x) plus a constant offset. Parsed separable text
    additionally carries explicit zero constraints (affine expressions equal to 0).
    """

    def __init__(self, terms, offset=0.0, constraints=None):
        self._terms = tuple(terms)
        for term in self._terms:
            if term.kind != Constants.PROX_FUNCTION:
                raise ValueError('prox-affine terms must be prox functions, got %s' % term.kind)
        self._offset = float(offset)
        self._constraints = tuple(constraints or ())

    @property
    def terms(self):
        return self._terms

    @property
    def offset(self):
        return self._offset

    @property
    def constraints(self):
        return self._constraints

    @property
    def objective(self):
        """ The objective as a single expression (an ADD of the terms and the offset). """
        children = list(self._terms)
        if self._offset != 0.0 or not children:
            children.append(Constant(self._offset))
        return add_exprs(children)

    def variables(self):
        seen = {}
        for expr in list(self._terms) + list(self._constraints):
            for var_id, dim in expr.variables():
                seen.setdefault(var_id, dim)
        return list(seen.items())

    def __len__(self):
        return len(self._terms)
