"""
Compilation of a DCP problem into prox-affine form.

The first pass rewrites linear atoms into LINEAR_MAP nodes. The second pass
walks the objective and the constraint indicators, matches every atom against
the prox rules and emits PROX_FUNCTION terms, transforming arguments (epigraph
variables, Kronecker splitting) or falling back to conic reductions where a
direct match is not possible.
"""
import itertools
from collections import namedtuple

import numpy as np
import scipy.sparse as sp

from proxcomp.components import dcp
from proxcomp.components.affine import affine_form, is_affine_expr
from proxcomp.components.reductions import negate, reduce_atom, subtract
from proxcomp.components.rules import (INDICATORS, argument_admissible, kron_split_target,
                                       match_rule)
from proxcomp.linops.algebra import compose, materialize, scale
from proxcomp.linops.linear_op import DenseOp, DiagonalOp, KronOp, ScalarOp, SparseOp
from proxcomp.objects.atoms import NEGATIONS, atom_signature, build_atom
from proxcomp.objects.evaluate import evaluate_array
from proxcomp.objects.expression import (Constant, Expr, Variable, add_exprs, affine_sum,
                                         apply_map, map_output_dim, prox_function,
                                         reshaped_linear_map)
from proxcomp.objects.logger import Logger
from proxcomp.objects.problem import Problem, ProxAffineProblem
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DcpError, InternalCompilerError, UnsupportedAtomError

TraceEntry = namedtuple('TraceEntry', ['subtree', 'rule'])

# Sums of these elementwise atoms are compiled as their vector counterparts.
_SUMMED = {'abs': 'norm1', 'square': 'sum_squares'}


class CompileOptions(object):
    """
    Options of compile_problem.

    Args:
        prox_rules (bool): Map atoms onto prox functions; when False every atom
            with a conic reduction goes through it.
        fold_constants (bool): Evaluate constant subexpressions into constants.
    """

    def __init__(self, prox_rules=True, fold_constants=True):
        self.prox_rules = prox_rules
        self.fold_constants = fold_constants

    @property
    def prox_rules(self):
        return self._prox_rules

    @prox_rules.setter
    def prox_rules(self, value):
        if not isinstance(value, bool):
            raise ValueError('prox_rules should be a boolean value')
        self._prox_rules = value

    @property
    def fold_constants(self):
        return self._fold_constants

    @fold_constants.setter
    def fold_constants(self, value):
        if not isinstance(value, bool):
            raise ValueError('fold_constants should be a boolean value')
        self._fold_constants = value


class CompileOutput(object):
    """
    Result of compile_problem.

    Args:
        prox_affine (ProxAffineProblem): The compiled program.
        new_variables (list): (var_id, Dim) of every introduced variable.
        introduced_indicators (int): Number of cone indicators the compiler added.
        rule_trace (list): TraceEntry per rule decision, in decision order.
        definitions (dict): var_id -> Expr or callable giving the value of an
            introduced variable from the values of the variables before it.
    """

    def __init__(self, prox_affine, new_variables, introduced_indicators, rule_trace, definitions):
        self.prox_affine = prox_affine
        self.new_variables = list(new_variables)
        self.introduced_indicators = introduced_indicators
        self.rule_trace = list(rule_trace)
        self.definitions = dict(definitions)

    def lift(self, assignment):
        """
        Extend an assignment of the original variables to the introduced ones so
        that every introduced indicator holds.

        Args:
            assignment (dict): var_id -> value for the original variables.
        Returns:
            (dict): var_id -> 2-D array for all variables.
        """
        dims = dict(self.new_variables)
        values = dict(assignment)
        for var_id, definition in self.definitions.items():
            if isinstance(definition, Expr):
                value = evaluate_array(definition, values)
            else:
                value = definition(values)
            dim = dims[var_id]
            values[var_id] = np.asarray(value, dtype=float).reshape((dim.rows, dim.cols), order='F')
        return values


# Linearization.

def _selection(rows, cols, pairs):
    """ Sparse 0/1 matrix with a one at every (row, col) pair. """
    if not pairs:
        return sp.csc_matrix((rows, cols))
    r, c = zip(*pairs)
    return sp.csc_matrix((np.ones(len(pairs)), (r, c)), shape=(rows, cols))


def _index_op(dim, params):
    rows = list(range(*params['rows']))
    cols = list(range(*params['cols']))
    pairs = []
    for j, col in enumerate(cols):
        for i, row in enumerate(rows):
            pairs.append((i + j * len(rows), row + col * dim.rows))
    return SparseOp(_selection(len(rows) * len(cols), dim.size, pairs))


def _transpose_op(dim):
    pairs = [(c + r * dim.cols, r + c * dim.rows) for r in range(dim.rows) for c in range(dim.cols)]
    return SparseOp(_selection(dim.size, dim.size, pairs))


def _stack_ops(dims, out, horizontal):
    """ Embeddings of the blocks of hstack / vstack into the output. """
    ops, offset = [], 0
    for dim in dims:
        pairs = []
        for c in range(dim.cols):
            for r in range(dim.rows):
                if horizontal:
                    target = r + (offset + c) * out.rows
                else:
                    target = (offset + r) + c * out.rows
                pairs.append((target, r + c * dim.rows))
        ops.append(SparseOp(_selection(out.size, dim.size, pairs)))
        offset += dim.cols if horizontal else dim.rows
    return ops


def _matrix_op(data):
    if data.is_sparse:
        return SparseOp(data.sparse)
    return DenseOp(data.value)


class _Linearizer(object):
    def __init__(self, fold_constants=True):
        self._fold = fold_constants

    def run(self, expr):
        kind = expr.kind
        if kind in (Constants.VARIABLE, Constants.CONSTANT):
            return expr
        children = [self.run(child) for child in expr.children]
        if kind == Constants.ADD:
            return self.add(children)
        if kind == Constants.LINEAR_MAP:
            return self.mapped(expr.op, children[0], expr.dim)
        if kind == Constants.PROX_FUNCTION:
            return expr.with_children(children)
        rebuilt = expr.with_children(children)
        signature = atom_signature(expr.name)
        if all(child.is_constant() for child in children):
            if self._fold or not signature.linear:
                return Constant(evaluate_array(rebuilt, {}))
        if signature.linear:
            return self.linear_atom(rebuilt)
        return rebuilt

    def add(self, children):
        if not self._fold:
            return add_exprs(children)
        flat = []
        for child in children:
            flat.extend(child.children if child.kind == Constants.ADD else [child])
        constants = [c for c in flat if c.kind == Constants.CONSTANT]
        if len(constants) < 2:
            return add_exprs(flat)
        dim = flat[0].dim
        total = sum(c.data.vec() for c in constants)
        merged, placed = [], False
        for child in flat:
            if child.kind != Constants.CONSTANT:
                merged.append(child)
            elif not placed:
                merged.append(Constant(total.reshape((dim.rows, dim.cols), order='F')))
                placed = True
        return add_exprs(merged)

    def mapped(self, op, child, dim):
        """
        op applied to child with result shape dim. Consecutive maps over a
        non-affine child are composed, and nonpositive maps over concave atoms
        become nonnegative maps over their convex counterparts.
        """
        if child.kind == Constants.LINEAR_MAP and not is_affine_expr(child.children[0]):
            op = compose(op, child.op)
            child = child.children[0]
        if child.kind == Constants.ATOM and child.name in NEGATIONS \
                and dcp.op_sign(op) == Constants.NEGATIVE:
            child = build_atom(NEGATIONS[child.name], child.children, dict(child.params))
            op = scale(op, -1.0)
        if child.kind == Constants.CONSTANT and self._fold:
            value = op.apply(child.data.vec())
            return Constant(value.reshape((dim.rows, dim.cols), order='F'))
        if isinstance(op, ScalarOp) and op.is_identity and child.dim == dim:
            return child
        if map_output_dim(op, child.dim) == dim:
            return apply_map(op, child)
        return reshaped_linear_map(op, child, dim)

    def linear_atom(self, expr):
        name = expr.name
        args = expr.children
        dim = expr.dim
        if name == 'neg':
            return self.mapped(ScalarOp(-1.0, args[0].dim.size), args[0], dim)
        if name == 'mul':
            return self._mul(args, dim)
        if name == 'matmul':
            return self._matmul(args, dim)
        if name == 'sum':
            return self.mapped(DenseOp(np.ones((1, args[0].dim.size))), args[0], dim)
        if name == 'trace':
            n = args[0].dim.rows
            row = np.zeros((1, n * n))
            row[0, [i + i * n for i in range(n)]] = 1.0
            return self.mapped(DenseOp(row), args[0], dim)
        if name == 'index':
            return self.mapped(_index_op(args[0].dim, expr.params), args[0], dim)
        if name == 'transpose':
            return self.mapped(_transpose_op(args[0].dim), args[0], dim)
        if name in ('hstack', 'vstack'):
            if len(args) == 1:
                return args[0]
            ops = _stack_ops([a.dim for a in args], dim, name == 'hstack')
            return self.add([self.mapped(op, arg, dim) for op, arg in zip(ops, args)])
        if name == 'reshape':
            return self.mapped(ScalarOp(1.0, dim.size), args[0], dim)
        if name == 'promote':
            return self.mapped(DenseOp(np.ones((dim.size, 1))), args[0], dim)
        raise InternalCompilerError('no linearization for %s' % name)

    def _mul(self, args, dim):
        a, b = args
        if a.is_constant():
            const, other = a, b
        elif b.is_constant():
            const, other = b, a
        else:
            raise InternalCompilerError('product of two non-constant expressions')
        value = evaluate_array(const, {})
        if value.size == 1:
            return self.mapped(ScalarOp(value[0, 0], other.dim.size), other, dim)
        if other.dim.is_scalar:
            return self.mapped(DenseOp(value.reshape(-1, 1, order='F')), other, dim)
        return self.mapped(DiagonalOp(value.reshape(-1, order='F')), other, dim)

    def _matmul(self, args, dim):
        a, b = args
        if a.is_constant():
            matrix = _matrix_op(a.data) if a.kind == Constants.CONSTANT \
                else DenseOp(evaluate_array(a, {}))
            k = b.dim.cols
            op = matrix if k == 1 else KronOp(ScalarOp(1.0, k), matrix)
            return self.mapped(op, b, dim)
        if b.is_constant():
            value = b.data.value if b.kind == Constants.CONSTANT else evaluate_array(b, {})
            m = a.dim.rows
            transposed = DenseOp(np.asarray(value).T)
            op = transposed if m == 1 else KronOp(transposed, ScalarOp(1.0, m))
            return self.mapped(op, a, dim)
        raise InternalCompilerError('matrix product of two non-constant expressions')


def linearize(expr, fold_constants=True):
    return _Linearizer(fold_constants).run(expr)


def linearize_pass(problem, options=None):
    """
    Rewrite every linear atom of a problem into LINEAR_MAP nodes.

    Args:
        problem (Problem): A DCP problem.
        options (CompileOptions): Compile options.
    Returns:
        (Problem): The same problem with linear atoms replaced.
    """
    options = options or CompileOptions()
    linearizer = _Linearizer(options.fold_constants)
    objective = linearizer.run(problem.objective)
    constraints = [c.with_args([linearizer.run(a) for a in c.args]) for c in problem.constraints]
    return Problem(objective, constraints)


# Prox conversion.

def _row_weight(op):
    """ alpha when op is the row alpha * 1^T (or the 1x1 scalar alpha), None otherwise. """
    if op.output_dim != 1:
        return None
    if isinstance(op, ScalarOp):
        return op.alpha
    row = materialize(op).reshape(-1)
    if np.all(row == row[0]):
        return float(row[0])
    return None


def _map_to(op, child, dim):
    if map_output_dim(op, child.dim) == dim:
        return apply_map(op, child)
    return reshaped_linear_map(op, child, dim)


def _addends(expr):
    """ Flatten sums and distribute linear maps over them. """
    if expr.kind == Constants.ADD:
        for child in expr.children:
            yield from _addends(child)
    elif expr.kind == Constants.LINEAR_MAP and expr.children[0].kind == Constants.ADD:
        for child in expr.children[0].children:
            yield from _addends(_map_to(expr.op, child, expr.dim))
    elif expr.kind == Constants.LINEAR_MAP and expr.children[0].kind == Constants.LINEAR_MAP \
            and not is_affine_expr(expr.children[0]):
        inner = expr.children[0]
        yield from _addends(_map_to(compose(expr.op, inner.op), inner.children[0], expr.dim))
    else:
        yield expr


def _summed(expr):
    if expr.dim.is_scalar:
        return expr
    return apply_map(DenseOp(np.ones((1, expr.dim.size))), expr)


class _Converter(object):
    """ State of one prox conversion: emitted terms, fresh variables and the trace. """

    def __init__(self, options=None, rules=None):
        self.options = options or CompileOptions()
        self.rules = rules
        self.terms = []
        self.offset = 0.0
        self.trace = []
        self.definitions = {}
        self.new_variables = []
        self.indicators = 0
        self._counter = itertools.count()
        self._logger = Logger.get_instance()

    def fresh(self, prefix, dim, definition):
        var_id = '%s%d' % (prefix, next(self._counter))
        self.new_variables.append((var_id, dim))
        self.definitions[var_id] = definition
        return Variable(dim.rows, dim.cols, name=var_id)

    def _record(self, expr, rule_name):
        entry = TraceEntry(repr(expr), rule_name)
        self.trace.append(entry)
        self._logger.debug('%s -> %s', entry.subtree, rule_name, stage=Constants.STAGE_COMPILER)

    def result(self):
        children = list(self.terms)
        if self.offset != 0.0 or not children:
            children.append(Constant(self.offset))
        return add_exprs(children)

    def convert(self, expr, weight=1.0):
        """ Convert a scalar objective expression scaled by weight. """
        if expr.kind == Constants.CONSTANT:
            self.offset += weight * float(np.sum(expr.value))
        elif expr.kind == Constants.ADD:
            affine = [c for c in expr.children if is_affine_expr(c)]
            for child in expr.children:
                if not is_affine_expr(child):
                    self.convert(child, weight)
                elif child is affine[0]:
                    self._affine(affine_sum(affine) if len(affine) > 1 else child, weight)
        elif is_affine_expr(expr):
            self._affine(expr, weight)
        elif expr.kind == Constants.PROX_FUNCTION:
            self._prox_function(expr, weight)
        elif expr.kind == Constants.LINEAR_MAP:
            self._linear_map(expr, weight)
        else:
            self._atom(expr, weight)

    def _affine(self, expr, weight):
        form = affine_form(expr)
        self.offset += weight * float(np.sum(form.offset))
        if form.terms:
            self._record(expr, 'affine')
        for var_id, op in form.terms.items():
            var = Variable(form.dims[var_id].rows, form.dims[var_id].cols, name=var_id)
            arg = var if op.is_square and isinstance(op, ScalarOp) and op.is_identity \
                else apply_map(op, var)
            params = {} if weight == 1.0 else {'scale': weight}
            self.terms.append(prox_function('affine', [arg], params))

    def _prox_function(self, expr, weight):
        params = dict(expr.params)
        if expr.name not in INDICATORS and weight != 1.0:
            params['scale'] = float(params.get('scale', 1.0)) * weight
        self._record(expr, 'prox-function')
        self.terms.append(prox_function(expr.name, expr.children, params))

    def _linear_map(self, expr, weight):
        op, child = expr.op, expr.children[0]
        if child.kind == Constants.ADD or child.kind == Constants.LINEAR_MAP:
            for part in _addends(expr):
                self.convert(part, weight)
            return
        if child.kind == Constants.PROX_FUNCTION and child.dim.is_scalar:
            self.convert(child, weight * _row_weight(op))
            return
        alpha = _row_weight(op)
        if alpha is not None:
            if alpha < 0 and child.name not in INDICATORS:
                raise InternalCompilerError('negative weight on the convex term %r' % child)
            self._atom(child, weight * alpha)
            return
        if dcp.op_sign(op) != Constants.POSITIVE:
            raise InternalCompilerError('mixed-sign weights on the convex term %r' % child)
        # weighted sum of an elementwise atom: epigraph variable per entry
        t = self.fresh(Constants.EPI_PREFIX, child.dim, child)
        self._record(expr, '%s:%s' % (Constants.EPIGRAPH, child.name))
        self._affine(_map_to(op, t, expr.dim), weight)
        self._emit(build_atom(Constants.NONNEG, [subtract(t, child)]))

    def _emit(self, indicator):
        self.indicators += 1
        self._atom(indicator, 1.0)

    def _atom(self, expr, weight):
        if weight == 0.0:
            return
        if not expr.dim.is_scalar and expr.name in _SUMMED:
            expr = build_atom(_SUMMED[expr.name], expr.children, dict(expr.params))
        pending = []
        if expr.name == Constants.NONNEG and not is_affine_expr(expr.children[0]):
            expr, pending = self._nonneg_of_concave(expr)
        rule = match_rule(expr, self.rules, self.options.prox_rules)
        self._record(expr, rule.name)
        if rule.kind == Constants.CONIC:
            reduction = reduce_atom(expr, lambda dim, d: self.fresh(Constants.CONIC_PREFIX, dim, d))
            self.convert(_summed(reduction.replacement), weight)
            for indicator in pending + list(reduction.constraints):
                self._emit(indicator)
            return
        if rule.kind == Constants.KRON_SPLIT:
            args, emitted = self._kron_split(expr)
        else:
            args, emitted = self.arguments(rule, expr)
        params = dict(expr.params)
        if expr.name not in INDICATORS and weight != 1.0:
            params['scale'] = weight
        self.terms.append(prox_function(rule.prox, args, params))
        for indicator in pending + emitted:
            self._emit(indicator)

    def arguments(self, rule, expr):
        """
        Arguments of the prox term and the indicators that make the rewrite exact.

        Returns:
            (tuple): (list of arguments, list of indicator ATOM nodes).
        """
        args, emitted, seen = [], [], set()
        for index, arg in enumerate(expr.children):
            if not is_affine_expr(arg):
                y = self.fresh(Constants.EPI_PREFIX, arg.dim, arg)
                monotonicity = dcp.argument_monotonicity(expr, index)
                curvature = dcp.curvature_of(arg)
                if monotonicity == Constants.NONDECREASING and dcp.is_convex(curvature):
                    emitted.append(build_atom(Constants.NONNEG, [subtract(y, arg)]))
                elif monotonicity == Constants.NONINCREASING and dcp.is_concave(curvature):
                    emitted.append(build_atom(Constants.NONNEG, [add_exprs([arg, negate(y)])]))
                else:
                    raise InternalCompilerError('argument %d of %s breaks the composition rule'
                                                % (index, expr.name))
                arg = y
            else:
                variables = set(affine_form(arg).terms)
                shared = len(expr.children) > 1 and bool(variables & seen)
                if shared or not argument_admissible(rule.policy(index), arg):
                    y = self.fresh(Constants.EPI_PREFIX, arg.dim, arg)
                    emitted.append(build_atom(Constants.ZERO, [subtract(arg, y)]))
                    arg = y
            seen |= set(affine_form(arg).terms)
            args.append(arg)
        return args, emitted

    def _kron_split(self, expr):
        # || R X L^T + C ||^2 with Z = X L^T becomes || R Z + C ||^2 and 0 = X L^T - Z
        arg = expr.children[0]
        var_id, op = kron_split_target(expr)
        form = affine_form(arg)
        left, right = op.left, op.right
        x = Variable(form.dims[var_id].rows, form.dims[var_id].cols, name=var_id)
        product = apply_map(KronOp(left, ScalarOp(1.0, right.input_dim)), x)
        z = self.fresh(Constants.SPLIT_PREFIX, product.dim, product)
        new_arg = apply_map(KronOp(ScalarOp(1.0, left.output_dim), right), z)
        if form.has_offset():
            offset = form.offset.reshape((new_arg.dim.rows, new_arg.dim.cols), order='F')
            new_arg = affine_sum([new_arg, Constant(offset)])
        return [new_arg], [build_atom(Constants.ZERO, [subtract(product, z)])]

    def _nonneg_of_concave(self, expr):
        """
        nonneg(a - sum_k c_k h_k) with convex h_k and nonnegative c_k: every h_k
        is replaced by the epigraph of its conic reduction.
        """
        arg = expr.children[0]
        parts, pending = [], []
        for part in _addends(arg):
            if is_affine_expr(part):
                parts.append(part)
                continue
            inner = part.children[0] if part.kind == Constants.LINEAR_MAP else None
            if inner is None or inner.kind != Constants.ATOM \
                    or dcp.op_sign(part.op) != Constants.NEGATIVE:
                raise UnsupportedAtomError('cannot bound %r inside a nonnegativity constraint' % part)
            self._record(inner, '%s:%s' % (Constants.CONIC, inner.name))
            reduction = reduce_atom(inner, lambda dim, d: self.fresh(Constants.CONIC_PREFIX, dim, d))
            if not is_affine_expr(reduction.replacement):
                raise UnsupportedAtomError('no conic epigraph for %s' % inner.name)
            parts.append(_map_to(part.op, reduction.replacement, part.dim))
            pending.extend(reduction.constraints)
        return build_atom(Constants.NONNEG, [affine_sum(parts)]), pending

    def constraint(self, constraint):
        self._atom(constraint.as_indicator(), 1.0)


def convert_prox(tree, rules=None, options=None):
    """
    Convert a linearized objective into a sum of prox terms.

    Args:
        tree (Expr): Linearized scalar expression.
        rules (list): Prox rules; the registry by default.
        options (CompileOptions): Compile options.
    Returns:
        (Expr): ADD of PROX_FUNCTION terms, plus a constant when the offset is nonzero.
    """
    converter = _Converter(options, rules)
    converter.convert(tree)
    return converter.result()


def convert_prox_arguments(rule, tree):
    """
    Transform the arguments of an atom for a matched rule.

    Returns:
        (tuple): (arguments, indicator ATOM nodes introduced).
    """
    converter = _Converter()
    if rule.kind == Constants.KRON_SPLIT:
        return converter._kron_split(tree)
    return converter.arguments(rule, tree)


def convert_conic(tree):
    """ Replace an atom by its conic reduction and convert the result. """
    converter = _Converter(CompileOptions(prox_rules=False))
    reduction = reduce_atom(tree, lambda dim, d: converter.fresh(Constants.CONIC_PREFIX, dim, d))
    converter.convert(_summed(reduction.replacement))
    for indicator in reduction.constraints:
        converter._emit(indicator)
    return converter.result()


def compile_problem(problem, options=None, rules=None):
    """
    Verify and compile a problem into prox-affine form.

    Args:
        problem (Problem or ProxAffineProblem): The problem; an already compiled
            program is passed through with its zero constraints as terms.
        options (CompileOptions): Compile options.
        rules (list): Prox rules; the registry by default.
    Returns:
        (CompileOutput): The compiled program and the compilation record.
    Raises:
        DcpError: The problem is not DCP.
        UnsupportedAtomError: An atom has neither a prox rule nor a conic reduction.
    """
    options = options or CompileOptions()
    converter = _Converter(options, rules)
    if isinstance(problem, ProxAffineProblem):
        for term in problem.terms:
            converter.convert(term)
        for constraint in problem.constraints:
            converter.convert(prox_function(Constants.ZERO, [constraint]))
        converter.offset += problem.offset
    else:
        verdict = dcp.verify(problem)
        if not verdict.accepted:
            raise DcpError(verdict)
        linearized = linearize_pass(problem, options)
        converter.convert(linearized.objective)
        for constraint in linearized.constraints:
            converter.constraint(constraint)
    prox_affine = ProxAffineProblem(converter.terms, converter.offset)
    Logger.get_instance().log('compiled %d prox terms, %d new variables, %d indicators',
                              len(prox_affine), len(converter.new_variables), converter.indicators,
                              stage=Constants.STAGE_COMPILER)
    return CompileOutput(prox_affine, converter.new_variables, converter.indicators,
                         converter.trace, converter.definitions)
