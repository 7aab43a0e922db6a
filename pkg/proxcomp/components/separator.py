"""
Conversion of a prox-affine program into separable form.

The program is held as a bipartite graph between prox terms and variables; an
edge carries the operators through which a term touches a variable. Three
passes run once each, in order: zero-cone indicators with simple maps become
explicit equality constraints, linear and simple quadratic terms are folded
into other terms, and variables shared between terms are copied with chain
consensus constraints.
"""
import itertools
from collections import OrderedDict

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

from proxcomp.components.affine import affine_form
from proxcomp.linops.algebra import diagonal_of, is_simple
from proxcomp.linops.linear_op import ScalarOp
from proxcomp.objects.expression import Constant, affine_sum, apply_map, variable_with_id
from proxcomp.objects.logger import Logger
from proxcomp.objects.separable import LinearConstraint, SeparableProblem, SeparableTerm
from proxcomp.prox.registry import EXCEPTION, SEPARABLE, UNIFORM, get_prox
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import InternalCompilerError


def _function_node(key):
    return 'f', key


def _variable_node(var_id):
    return 'x', var_id


def _rename(expr, old, new):
    """ The expression with every occurrence of variable old renamed to new. """
    if expr.kind == Constants.VARIABLE:
        return variable_with_id(new, expr.dim) if expr.var_id == old else expr
    if not expr.children:
        return expr
    return expr.with_children([_rename(child, old, new) for child in expr.children])


class FunctionVariableGraph(object):
    """
    Bipartite graph of prox terms and variables.

    Function nodes are ('f', key) with the term stored under key; variable
    nodes are ('x', var_id). The edge between them holds the list of
    (argument index, LinearOp) pairs of the term's affine arguments.
    """

    def __init__(self, dims=None):
        self.graph = nx.Graph()
        self.terms = OrderedDict()
        self.constraints = []
        self.dims = dict(dims or {})
        self.offset = 0.0
        self._keys = itertools.count()
        self._fresh = itertools.count()

    @staticmethod
    def from_problem(problem):
        """
        Args:
            problem (ProxAffineProblem): The compiled program. Explicit constraints
                of parsed programs enter as zero-cone terms.
        Returns:
            (FunctionVariableGraph): The graph.
        """
        graph = FunctionVariableGraph(dict(problem.variables()))
        graph.offset = problem.offset
        for term in problem.terms:
            graph.add_term(SeparableTerm(term.name, term.children, _plain_params(term.params),
                                         (), *_folds(term.params)))
        for constraint in problem.constraints:
            graph.add_term(SeparableTerm(Constants.ZERO, [constraint], {}, ()))
        return graph

    def add_term(self, term, position=None):
        key = next(self._keys)
        if position is None:
            self.terms[key] = term
        else:
            items = list(self.terms.items())
            items.insert(position, (key, term))
            self.terms = OrderedDict(items)
        self._connect(key, term)
        return key

    def replace_term(self, key, term):
        self.graph.remove_node(_function_node(key))
        self.terms[key] = term
        self._connect(key, term)

    def remove_term(self, key):
        self.graph.remove_node(_function_node(key))
        del self.terms[key]

    def _connect(self, key, term):
        node = _function_node(key)
        self.graph.add_node(node, bipartite=0)
        for index, arg in enumerate(term.args):
            for var_id, op in affine_form(arg).terms.items():
                var_node = _variable_node(var_id)
                self.graph.add_node(var_node, bipartite=1)
                if self.graph.has_edge(node, var_node):
                    self.graph.edges[node, var_node]['ops'].append((index, op))
                else:
                    self.graph.add_edge(node, var_node, ops=[(index, op)])
        for var_id in list(term.linear) + list(term.quad):
            var_node = _variable_node(var_id)
            if not self.graph.has_edge(node, var_node):
                self.graph.add_node(var_node, bipartite=1)
                self.graph.add_edge(node, var_node, ops=[])

    def variables_of(self, key):
        """ Variables of a term in first-occurrence order. """
        seen = OrderedDict()
        term = self.terms[key]
        for arg in term.args:
            for var_id, _ in arg.variables():
                seen[var_id] = True
        for var_id in list(term.linear) + list(term.quad):
            seen[var_id] = True
        return list(seen)

    def terms_of(self, var_id):
        """ Keys of the terms using a variable, in term order. """
        node = _variable_node(var_id)
        if not self.graph.has_node(node):
            return []
        neighbors = set(key for _, key in self.graph.neighbors(node))
        return [key for key in self.terms if key in neighbors]

    def edge_ops(self, key, var_id):
        return list(self.graph.edges[_function_node(key), _variable_node(var_id)]['ops'])

    def fresh_variable(self, prefix, dim):
        while True:
            var_id = '%s%d' % (prefix, next(self._fresh))
            if var_id not in self.dims:
                self.dims[var_id] = dim
                return var_id

    def constraint_variables(self):
        seen = OrderedDict()
        for constraint in self.constraints:
            for var_id in constraint.variables():
                seen[var_id] = True
        return list(seen)

    def audit(self):
        """
        Check that the graph matches the term list.

        Raises:
            InternalCompilerError: A term and its edges disagree.
        """
        function_nodes = set(n for n in self.graph.nodes if n[0] == 'f')
        if function_nodes != set(_function_node(key) for key in self.terms):
            raise InternalCompilerError('graph function nodes do not match the term list')
        for key in self.terms:
            expected = set(_variable_node(v) for v in self.variables_of(key))
            if set(self.graph.neighbors(_function_node(key))) != expected:
                raise InternalCompilerError('edges of term %d do not match its arguments' % key)

    def draw(self):
        """ Draws the bipartite graph. """
        functions = [n for n in self.graph.nodes if n[0] == 'f']
        labels = {n: (self.terms[n[1]].name if n[0] == 'f' else n[1]) for n in self.graph.nodes}
        nx.draw_networkx(self.graph, pos=nx.bipartite_layout(self.graph, functions),
                         labels=labels, with_labels=True)
        plt.show()


def _plain_params(params):
    return {k: v for k, v in params.items() if not k.startswith(('linear:', 'quad:'))}


def _folds(params):
    linear, quad = {}, {}
    for key, value in params.items():
        if key.startswith('linear:'):
            linear[key[len('linear:'):]] = np.asarray(value, dtype=float).reshape(-1)
        elif key.startswith('quad:'):
            quad[key[len('quad:'):]] = np.asarray(value, dtype=float).reshape(-1)
    return linear, quad


def _affine_expr(pieces, offset, dim):
    """ sum of op_j x_j plus a constant, shaped like dim. """
    children = []
    for var_id, op, var_dim in pieces:
        var = variable_with_id(var_id, var_dim)
        children.append(var if isinstance(op, ScalarOp) and op.is_identity and var_dim == dim
                        else apply_map(op, var))
    if np.any(offset != 0):
        children.append(Constant(np.asarray(offset).reshape((dim.rows, dim.cols), order='F')))
    return affine_sum(children)


# Pass 1.

def move_equality_indicators(graph):
    """
    Move zero-cone indicators whose variables enter through simple maps into
    explicit constraints. A term mixing simple and general maps keeps the general
    part against a fresh variable w when two or more simple maps can move out.

    Args:
        graph (FunctionVariableGraph): The graph, modified in place.
    Returns:
        (FunctionVariableGraph): The same graph.
    """
    for key in list(graph.terms):
        term = graph.terms[key]
        if term.name != Constants.ZERO or term.linear or term.quad:
            continue
        arg = term.args[0]
        form = affine_form(arg)
        if form.is_constant():
            continue
        simple = [(v, op) for v, op in form.terms.items() if is_simple(op)]
        general = [(v, op) for v, op in form.terms.items() if not is_simple(op)]
        if not general:
            graph.constraints.append(LinearConstraint(simple, -form.offset))
            graph.remove_term(key)
        elif len(simple) >= 2:
            w = graph.fresh_variable(Constants.SEPARATE_PREFIX, arg.dim)
            size = arg.dim.size
            pieces = [(v, op, form.dims[v]) for v, op in general]
            pieces.append((w, ScalarOp(-1.0, size), arg.dim))
            kept = _affine_expr(pieces, form.offset, arg.dim)
            graph.replace_term(key, SeparableTerm(Constants.ZERO, [kept], term.params, ()))
            graph.constraints.append(LinearConstraint([(w, ScalarOp(1.0, size))] + simple))
    graph.audit()
    return graph


# Pass 2.

def _accepts_quadratic(term, op):
    """ Whether a diagonal quadratic fold keeps the term's prox evaluable. """
    category = get_prox(term.name).category
    if category in (SEPARABLE, EXCEPTION):
        return True
    return category == UNIFORM and isinstance(op, ScalarOp)


def _add_fold(store, var_id, values, size):
    current = store.get(var_id, np.zeros(size))
    store[var_id] = current + np.asarray(values, dtype=float).reshape(-1)


def _fold_target(graph, key, var_id):
    for other in graph.terms_of(var_id):
        if other != key:
            return other
    return None


def _single_variable(term):
    if len(term.args) != 1 or term.linear or term.quad:
        return None
    return affine_form(term.args[0]).single()


def combine_objective_terms(graph):
    """
    Fold linear terms c^T x and quadratics s ||d x + e||^2 with scalar or
    diagonal d into the first other term using the same variable.

    Args:
        graph (FunctionVariableGraph): The graph, modified in place.
    Returns:
        (FunctionVariableGraph): The same graph.
    """
    for key in list(graph.terms):
        term = graph.terms[key]
        single = _single_variable(term)
        if single is None or term.name not in ('affine', 'sum_squares'):
            continue
        var_id, op = single
        target_key = _fold_target(graph, key, var_id)
        if target_key is None:
            continue
        target = graph.terms[target_key]
        size = graph.dims[var_id].size
        scale = float(term.params.get('scale', 1.0))
        if term.name == 'affine':
            coefficients = scale * op.transpose().apply(np.ones(op.output_dim))
            _add_fold(target.linear, var_id, coefficients, size)
        else:
            d = diagonal_of(op)
            if d is None or not is_simple(op) or not _accepts_quadratic(target, op):
                continue
            e = affine_form(term.args[0]).offset
            _add_fold(target.quad, var_id, scale * d * d, size)
            _add_fold(target.linear, var_id, 2.0 * scale * d * e, size)
            graph.offset += scale * float(e @ e)
        graph.remove_term(key)
        graph.replace_term(target_key, target)
    graph.audit()
    return graph


# Pass 3.

def add_consensus_constraints(graph):
    """
    Copy every variable shared by several terms, one copy per term, tied by the
    chain constraints copy_2 - copy_1 = 0, copy_3 - copy_2 = 0, ... Variables
    appearing only in constraints get a null term.

    Args:
        graph (FunctionVariableGraph): The graph after the first two passes.
    Returns:
        (SeparableProblem): The separable program.
    """
    origin = {var_id: var_id for var_id in graph.dims}
    for var_id in list(graph.dims):
        keys = graph.terms_of(var_id)
        if len(keys) < 2:
            continue
        dim = graph.dims[var_id]
        previous = var_id
        for key in keys[1:]:
            copy = graph.fresh_variable(Constants.SEPARATE_PREFIX, dim)
            origin[copy] = var_id
            graph.replace_term(key, _renamed_term(graph.terms[key], var_id, copy))
            graph.constraints.append(LinearConstraint([(copy, ScalarOp(1.0, dim.size)),
                                                       (previous, ScalarOp(-1.0, dim.size))]))
            previous = copy
    for var_id in graph.constraint_variables():
        if not graph.terms_of(var_id):
            graph.add_term(SeparableTerm('null', [variable_with_id(var_id, graph.dims[var_id])],
                                         {}, ()))
    graph.audit()
    terms = []
    for key, term in graph.terms.items():
        terms.append(SeparableTerm(term.name, term.args, term.params, graph.variables_of(key),
                                   term.linear, term.quad))
    used = set(v for term in terms for v in term.block)
    dims = {v: d for v, d in graph.dims.items() if v in used}
    return SeparableProblem(terms, graph.constraints, dims,
                            {v: o for v, o in origin.items() if v in dims}, graph.offset)


def _renamed_term(term, old, new):
    args = [_rename(arg, old, new) for arg in term.args]
    linear = {(new if v == old else v): c for v, c in term.linear.items()}
    quad = {(new if v == old else v): c for v, c in term.quad.items()}
    return SeparableTerm(term.name, args, term.params, (), linear, quad)


def separate(problem):
    """
    Convert a prox-affine program into separable form.

    Args:
        problem (ProxAffineProblem): The compiled program.
    Returns:
        (SeparableProblem): Terms over disjoint variable blocks and the linear
        equality constraints coupling them.
    """
    logger = Logger.get_instance()
    graph = FunctionVariableGraph.from_problem(problem)
    move_equality_indicators(graph)
    logger.log('moved equality indicators: %d terms, %d constraints', len(graph.terms),
               len(graph.constraints), stage=Constants.STAGE_SEPARATOR)
    combine_objective_terms(graph)
    logger.log('combined objective terms: %d terms', len(graph.terms), stage=Constants.STAGE_SEPARATOR)
    separable = add_consensus_constraints(graph)
    logger.log('separable form: %d terms, %d constraints, %d variables', len(separable.terms),
               len(separable.constraints), len(separable.dims), stage=Constants.STAGE_SEPARATOR)
    return separable
