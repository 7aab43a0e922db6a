"""
Disciplined convex programming verification.

Curvature is computed bottom-up with the composition rule: h(g_1, ..., g_k) is
convex when h is convex and every argument is affine, convex under a
nondecreasing slot or concave under a nonincreasing slot. Sign tracking only
covers constants and atoms that are nonnegative by definition.
"""
import numpy as np

from proxcomp.linops.linear_op import DenseOp, DiagonalOp, KronOp, ScalarOp, SparseOp
from proxcomp.objects.atoms import BY_COEFFICIENT, SIGNED, atom_signature
from proxcomp.objects.problem import Problem
from proxcomp.utils.constants import Constants

CONSTANT = Constants.CONSTANT_CURVATURE
AFFINE = Constants.AFFINE
CONVEX = Constants.CONVEX
CONCAVE = Constants.CONCAVE
UNKNOWN = Constants.UNKNOWN

POSITIVE = Constants.POSITIVE
NEGATIVE = Constants.NEGATIVE
UNKNOWN_SIGN = Constants.UNKNOWN_SIGN


def join(a, b):
    """ Curvature of a sum of terms with curvatures a and b. """
    if a == CONSTANT:
        return b
    if b == CONSTANT:
        return a
    if a == AFFINE:
        return b
    if b == AFFINE:
        return a
    return a if a == b else UNKNOWN


def flip(curvature):
    if curvature == CONVEX:
        return CONCAVE
    if curvature == CONCAVE:
        return CONVEX
    return curvature


def is_convex(curvature):
    return curvature in (CONSTANT, AFFINE, CONVEX)


def is_concave(curvature):
    return curvature in (CONSTANT, AFFINE, CONCAVE)


def is_affine(curvature):
    return curvature in (CONSTANT, AFFINE)


def _values_sign(values):
    if values.size == 0 or np.all(values >= 0):
        return POSITIVE
    if np.all(values <= 0):
        return NEGATIVE
    return UNKNOWN_SIGN


def _times(a, b):
    if UNKNOWN_SIGN in (a, b):
        return UNKNOWN_SIGN
    return POSITIVE if a == b else NEGATIVE


def op_sign(op):
    """ Sign of the entries of an operator, UNKNOWN when mixed or not inspected. """
    if isinstance(op, ScalarOp):
        return _values_sign(np.array([op.alpha]))
    if isinstance(op, DiagonalOp):
        return _values_sign(op.diagonal)
    if isinstance(op, DenseOp):
        return _values_sign(op.matrix)
    if isinstance(op, SparseOp):
        return _values_sign(op.matrix.data)
    if isinstance(op, KronOp):
        return _times(op_sign(op.left), op_sign(op.right))
    return UNKNOWN_SIGN


def _slot_monotonicity(slot, arg_sign):
    if slot == SIGNED:
        if arg_sign == POSITIVE:
            return Constants.NONDECREASING
        if arg_sign == NEGATIVE:
            return Constants.NONINCREASING
        return Constants.NONMONOTONE
    return slot


def _from_sign(sign):
    if sign == POSITIVE:
        return Constants.NONDECREASING
    if sign == NEGATIVE:
        return Constants.NONINCREASING
    return Constants.NONMONOTONE


def _through(monotonicity, curvature):
    """ Curvature an argument contributes through a slot of an affine function. """
    if is_affine(curvature):
        return curvature
    if monotonicity == Constants.NONDECREASING:
        return curvature
    if monotonicity == Constants.NONINCREASING:
        return flip(curvature)
    return UNKNOWN


def _admits(atom_curvature, monotonicity, curvature):
    """ Whether an argument of the given curvature keeps a convex/concave atom DCP. """
    if is_affine(curvature):
        return True
    if atom_curvature == CONCAVE:
        monotonicity = {Constants.NONDECREASING: Constants.NONINCREASING,
                        Constants.NONINCREASING: Constants.NONDECREASING}.get(monotonicity,
                                                                             monotonicity)
    if curvature == CONVEX:
        return monotonicity == Constants.NONDECREASING
    if curvature == CONCAVE:
        return monotonicity == Constants.NONINCREASING
    return False


class _Analyzer(object):
    """ Memoized curvature and sign analysis of one tree. """

    def __init__(self):
        self._curvature = {}
        self._sign = {}

    def sign(self, expr):
        key = id(expr)
        if key not in self._sign:
            self._sign[key] = self._compute_sign(expr)
        return self._sign[key]

    def curvature(self, expr):
        key = id(expr)
        if key not in self._curvature:
            self._curvature[key] = self._compute_curvature(expr)
        return self._curvature[key]

    def _compute_sign(self, expr):
        kind = expr.kind
        if kind == Constants.CONSTANT:
            data = expr.data
            return _values_sign(data.sparse.data if data.is_sparse else data.value)
        if kind == Constants.VARIABLE:
            return UNKNOWN_SIGN
        if kind == Constants.ADD:
            signs = set(self.sign(c) for c in expr.children)
            return signs.pop() if len(signs) == 1 else UNKNOWN_SIGN
        if kind == Constants.LINEAR_MAP:
            return _times(op_sign(expr.op), self.sign(expr.children[0]))
        if kind == Constants.PROX_FUNCTION:
            scale = float(expr.params.get('scale', 1.0))
            return POSITIVE if scale >= 0 and expr.name in ('null', 'zero', 'nonneg', 'soc', 'psd') \
                else UNKNOWN_SIGN
        name = expr.name
        signature = atom_signature(name)
        if name == 'neg':
            return _times(NEGATIVE, self.sign(expr.children[0]))
        if name in ('mul', 'matmul'):
            return _times(self.sign(expr.children[0]), self.sign(expr.children[1]))
        if signature.linear:
            signs = set(self.sign(c) for c in expr.children)
            return signs.pop() if len(signs) == 1 else UNKNOWN_SIGN
        return signature.dcp.sign

    def _compute_curvature(self, expr):
        kind = expr.kind
        if kind == Constants.CONSTANT:
            return CONSTANT
        if kind == Constants.VARIABLE:
            return AFFINE
        if kind == Constants.ADD:
            result = CONSTANT
            for child in expr.children:
                result = join(result, self.curvature(child))
            return result
        if kind == Constants.LINEAR_MAP:
            child = self.curvature(expr.children[0])
            if child == CONSTANT:
                return CONSTANT
            return join(AFFINE, _through(_from_sign(op_sign(expr.op)), child))
        if kind == Constants.PROX_FUNCTION:
            if all(is_affine(self.curvature(c)) for c in expr.children):
                return CONVEX
            return UNKNOWN
        if expr.is_constant():
            return CONSTANT
        return self._atom_curvature(expr)

    def slot(self, expr, index):
        """ Monotonicity of an atom in its argument *index*. """
        signature = atom_signature(expr.name)
        slot = signature.dcp.monotonicity_of(index)
        if slot == BY_COEFFICIENT:
            other = expr.children[1 - index]
            if not other.is_constant():
                return Constants.NONMONOTONE
            return _from_sign(self.sign(other))
        return _slot_monotonicity(slot, self.sign(expr.children[index]))

    def _atom_curvature(self, expr):
        signature = atom_signature(expr.name)
        if expr.name in ('mul', 'matmul') and not any(c.is_constant() for c in expr.children):
            return UNKNOWN
        atom_curvature = signature.dcp.curvature
        if atom_curvature == AFFINE:
            result = AFFINE
            for index, child in enumerate(expr.children):
                result = join(result, _through(self.slot(expr, index), self.curvature(child)))
            return result
        for index, child in enumerate(expr.children):
            if not _admits(atom_curvature, self.slot(expr, index), self.curvature(child)):
                return UNKNOWN
        return atom_curvature

    def reason(self, expr):
        """ Why the rules fail at a node whose children all have known curvature. """
        kind = expr.kind
        if kind == Constants.ADD:
            return 'sum of convex and concave terms'
        if kind == Constants.LINEAR_MAP:
            return 'linear map with mixed-sign coefficients applied to a %s expression' \
                   % self.curvature(expr.children[0])
        if kind == Constants.PROX_FUNCTION:
            return 'prox function %s with a non-affine argument' % expr.name
        if expr.name in ('mul', 'matmul') and not any(c.is_constant() for c in expr.children):
            return '%s of two non-constant expressions' % expr.name
        curvature = atom_signature(expr.name).dcp.curvature
        for index, child in enumerate(expr.children):
            child_curvature = self.curvature(child)
            slot = self.slot(expr, index)
            if curvature == AFFINE:
                if _through(slot, child_curvature) == UNKNOWN:
                    return 'argument %d of %s is %s but %s is %s in it' \
                           % (index, expr.name, child_curvature, expr.name, slot)
            elif not _admits(curvature, slot, child_curvature):
                return 'argument %d of %s %s is %s but %s is %s in it' \
                       % (index, curvature, expr.name, child_curvature, expr.name, slot)
        return 'curvature of %s is unknown' % expr.name


def curvature_of(expr):
    """
    The strongest curvature the DCP rules derive for an expression.

    Args:
        expr (Expr): The expression.
    Returns:
        (str): One of constant, affine, convex, concave, unknown.
    """
    return _Analyzer().curvature(expr)


def sign_of(expr):
    return _Analyzer().sign(expr)


def _label(expr):
    if expr.kind in (Constants.ATOM, Constants.PROX_FUNCTION):
        return expr.name
    return expr.kind


class Verdict(object):
    """
    Outcome of verify.

    Args:
        accepted (bool): Whether the problem is DCP.
        path (tuple): Steps from the root to the first offending subtree.
        reason (str): What rule failed there.
    """

    def __init__(self, accepted, path=(), reason=None):
        self.accepted = accepted
        self.path = tuple(path)
        self.reason = reason

    def describe(self):
        if self.accepted:
            return 'accepted'
        return 'rejected at %s: %s' % (' > '.join(self.path), self.reason)

    def __bool__(self):
        return self.accepted

    def __repr__(self):
        return 'Verdict(%s)' % self.describe()


def _first_violation(analyzer, expr, path):
    """ First node in depth-first order whose own rule fails. """
    if analyzer.curvature(expr) != UNKNOWN:
        return None
    for index, child in enumerate(expr.children):
        step = '%s[%d]' % (_label(expr), index)
        found = _first_violation(analyzer, child, path + (step,))
        if found is not None:
            return found
    return path + (_label(expr),), analyzer.reason(expr)


def _check(analyzer, expr, path, wanted):
    """
    Verdict for an expression that must have the *wanted* curvature class
    (convex, concave or affine).
    """
    found = _first_violation(analyzer, expr, path)
    if found is not None:
        return Verdict(False, found[0], found[1])
    curvature = analyzer.curvature(expr)
    test = {CONVEX: is_convex, CONCAVE: is_concave, AFFINE: is_affine}[wanted]
    if not test(curvature):
        return Verdict(False, path + (_label(expr),),
                       'expression is %s where %s is required' % (curvature, wanted))
    return None


_CONSTRAINT_NEEDS = {
    Constants.ZERO: (AFFINE,),
    Constants.NONNEG: (CONCAVE,),
    Constants.SOC: (AFFINE, AFFINE),
    Constants.PSD: (AFFINE,),
}


def verify(problem):
    """
    Verify a problem with the DCP ruleset.

    Args:
        problem (Problem): The problem.
    Returns:
        (Verdict): Accepted, or rejected with the path to the first violation in
        depth-first order (objective first, then constraints in order).
    """
    analyzer = _Analyzer()
    verdict = _check(analyzer, problem.objective, ('objective',), CONVEX)
    if verdict is not None:
        return verdict
    constraints = problem.constraints if isinstance(problem, Problem) else ()
    for index, constraint in enumerate(constraints):
        needs = _CONSTRAINT_NEEDS[constraint.cone]
        for position, (arg, wanted) in enumerate(zip(constraint.args, needs)):
            path = ('constraints[%d]' % index, '%s[%d]' % (constraint.cone, position))
            verdict = _check(analyzer, arg, path, wanted)
            if verdict is not None:
                return verdict
    return Verdict(True)


def is_dcp(problem):
    return verify(problem).accepted


def argument_monotonicity(expr, index):
    """ Monotonicity of an atom node in one of its arguments, signs resolved. """
    return _Analyzer().slot(expr, index)
