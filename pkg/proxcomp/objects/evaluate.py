import numpy as np

from proxcomp.objects.atoms import atom_signature
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DimensionError, MissingVariableError


def _variable_value(node, assignment):
    try:
        raw = assignment[node.var_id]
    except KeyError:
        raise MissingVariableError('no value for variable %r' % node.var_id)
    value = np.asarray(raw, dtype=float)
    if value.size != node.dim.size:
        raise DimensionError('variable %r is %s, got a value with %d entries'
                             % (node.var_id, node.dim, value.size))
    if value.ndim == 2 and value.shape == (node.dim.rows, node.dim.cols):
        return value
    return value.reshape((node.dim.rows, node.dim.cols), order='F')


def _as_2d(value, dim):
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        value = value.reshape(1, 1)
    if value.shape != (dim.rows, dim.cols):
        value = value.reshape((dim.rows, dim.cols), order='F')
    return value


def evaluate_array(expr, assignment):
    """
    Value of an expression as a 2-D array shaped like its Dim.

    Args:
        expr (Expr): The expression.
        assignment (dict): var_id -> value; values may be flat (column-major) or shaped.
    Returns:
        (ndarray): The value.
    """
    kind = expr.kind
    if kind == Constants.VARIABLE:
        return _variable_value(expr, assignment)
    if kind == Constants.CONSTANT:
        return expr.value
    if kind == Constants.ADD:
        total = np.zeros((expr.dim.rows, expr.dim.cols))
        for child in expr.children:
            total = total + _as_2d(evaluate_array(child, assignment), expr.dim)
        return total
    if kind == Constants.LINEAR_MAP:
        child = evaluate_array(expr.children[0], assignment)
        out = expr.op.apply(child.reshape(-1, order='F'))
        return _as_2d(out, expr.dim)
    vals = [evaluate_array(child, assignment) for child in expr.children]
    if kind == Constants.PROX_FUNCTION:
        from proxcomp.prox.registry import get_prox
        return _as_2d(get_prox(expr.name).value(vals, expr.params), expr.dim)
    signature = atom_signature(expr.name)
    return _as_2d(signature.value(vals, dict(expr.params)), expr.dim)


def evaluate(expr, assignment):
    """
    Numeric value of an expression. Indicator atoms evaluate to 0 inside their
    cone (within a relative tolerance of 1e-6) and +inf outside.

    Args:
        expr (Expr): The expression.
        assignment (dict): var_id -> value for every variable of expr.
    Returns:
        (float or ndarray): A float for scalar expressions, a 2-D array otherwise.
    Raises:
        MissingVariableError: A variable has no value.
        DimensionError: A value has the wrong number of entries.
    """
    value = evaluate_array(expr, assignment)
    if expr.dim.is_scalar:
        return float(value[0, 0])
    return value


def objective_value(problem, assignment):
    """ Objective of a Problem plus its constraint indicators. """
    total = evaluate(problem.objective, assignment)
    for constraint in problem.constraints:
        total += evaluate(constraint.as_indicator(), assignment)
    return total
