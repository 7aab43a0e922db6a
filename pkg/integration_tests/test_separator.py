import unittest

import numpy as np

from proxcomp.components.compiler import compile_problem
from proxcomp.components.separator import (FunctionVariableGraph, add_consensus_constraints,
                                           combine_objective_terms, move_equality_indicators,
                                           separate)
from proxcomp.linops import DenseOp, ScalarOp
from proxcomp.objects import Constant, Logger, Problem, Variable
from proxcomp.objects.atoms import exp, norm1, norm2
from proxcomp.objects.expression import affine_sum, apply_map, prox_function
from proxcomp.objects.problem import ProxAffineProblem
from proxcomp.objects.separable import SeparableProblem, SeparableTerm
from proxcomp.problems.library import BenchmarkSpec, generate
from proxcomp.utils.constants import Constants

Logger.DISABLED = True


def minus(expr):
    return apply_map(ScalarOp(-1.0, expr.dim.size), expr)


class TestSeparator(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(13)
        self.x = Variable(3, name='x')
        self.y = Variable(3, name='y')

    def assertPartition(self, separable):
        owners = {}
        for index, term in enumerate(separable.terms):
            for var_id in term.block:
                self.assertNotIn(var_id, owners)
                owners[var_id] = index
        self.assertEqual(set(owners), set(separable.dims))

    def test_exp_example(self):
        x = Variable(4, name='x')
        c = Constant(self.rng.standard_normal((1, 4)))
        compiled = compile_problem(Problem(exp(norm2(x) + c @ x) + norm1(x)))
        separable = separate(compiled.prox_affine)
        self.assertEqual(len(separable), 5)
        self.assertEqual(sorted(len(c.coefficients) for c in separable.constraints), [2, 2, 4])
        self.assertEqual(len(separable.consensus_pairs()), 2)
        copies = [v for v, origin in separable.origin.items() if origin == 'x']
        self.assertEqual(len(copies), 3)
        self.assertPartition(separable)

    def test_lasso_gets_one_consensus_constraint(self):
        instance = generate(BenchmarkSpec('lasso', m=10, seed=4))
        separable = separate(compile_problem(instance.problem).prox_affine)
        self.assertEqual([term.name for term in separable.terms], ['sum_squares', 'norm1'])
        self.assertEqual(len(separable.constraints), 1)
        self.assertEqual(len(separable.consensus_pairs()), 1)
        self.assertPartition(separable)

    def test_simple_equality_becomes_constraint(self):
        program = ProxAffineProblem([
            prox_function('sum_squares', [self.x]),
            prox_function('norm1', [self.y]),
            prox_function(Constants.ZERO, [affine_sum([self.x, minus(self.y)])]),
        ])
        separable = separate(program)
        self.assertEqual([term.name for term in separable.terms], ['sum_squares', 'norm1'])
        self.assertEqual(len(separable.constraints), 1)
        self.assertEqual(separable.constraints[0].variables(), ['x', 'y'])

    def test_general_equality_stays_a_term(self):
        A = self.rng.standard_normal((2, 3))
        program = ProxAffineProblem([
            prox_function(Constants.ZERO, [affine_sum([apply_map(DenseOp(A), self.x),
                                                       Constant(np.ones((2, 1)))])]),
        ])
        separable = separate(program)
        self.assertEqual([term.name for term in separable.terms], [Constants.ZERO])
        self.assertEqual(separable.constraints, [])

    def test_mixed_equality_is_split(self):
        A = self.rng.standard_normal((3, 3))
        z = Variable(3, name='z')
        program = ProxAffineProblem([
            prox_function('norm1', [self.x]),
            prox_function('sum_squares', [self.y]),
            prox_function('norm2', [z]),
            prox_function(Constants.ZERO, [affine_sum([apply_map(DenseOp(A), self.x), self.y, z])]),
        ])
        graph = move_equality_indicators(FunctionVariableGraph.from_problem(program))
        self.assertEqual(len(graph.constraints), 1)
        constraint = graph.constraints[0]
        self.assertEqual(len(constraint.coefficients), 3)
        self.assertTrue(constraint.variables()[0].startswith(Constants.SEPARATE_PREFIX))
        kept = [term for term in graph.terms.values() if term.name == Constants.ZERO]
        self.assertEqual(len(kept), 1)
        self.assertEqual(len(kept[0].args[0].variables()), 2)

    def test_linear_term_is_folded(self):
        c = self.rng.standard_normal(3)
        program = ProxAffineProblem([
            prox_function('affine', [apply_map(DenseOp(c.reshape(1, 3)), self.x)]),
            prox_function('norm1', [self.x]),
        ])
        separable = separate(program)
        self.assertEqual(len(separable), 1)
        self.assertEqual(separable.terms[0].name, 'norm1')
        np.testing.assert_allclose(separable.terms[0].linear['x'], c)
        self.assertEqual(separable.constraints, [])

    def test_lone_linear_term_is_kept(self):
        c = self.rng.standard_normal(3)
        program = ProxAffineProblem([
            prox_function('affine', [apply_map(DenseOp(c.reshape(1, 3)), self.x)]),
            prox_function('norm1', [self.y]),
        ])
        graph = combine_objective_terms(FunctionVariableGraph.from_problem(program))
        self.assertEqual(len(graph.terms), 2)

    def test_quadratic_term_is_folded(self):
        b = np.array([1.0, -2.0, 0.5])
        program = ProxAffineProblem([
            prox_function('sum_squares', [affine_sum([self.x, Constant(-b.reshape(3, 1))])]),
            prox_function('norm1', [self.x]),
        ])
        separable = separate(program)
        self.assertEqual(len(separable), 1)
        term = separable.terms[0]
        np.testing.assert_allclose(term.quad['x'], np.ones(3))
        np.testing.assert_allclose(term.linear['x'], -2.0 * b)
        self.assertAlmostEqual(separable.offset, float(b @ b))

    def test_shared_variable_gets_chain_consensus(self):
        program = ProxAffineProblem([
            prox_function('norm1', [self.x]),
            prox_function('norm2', [self.x]),
            prox_function('norm_inf', [self.x]),
        ])
        separable = separate(program)
        self.assertEqual(len(separable.constraints), 2)
        pairs = separable.consensus_pairs()
        self.assertEqual(len(pairs), 2)
        self.assertEqual(pairs[0][0], 'x')
        self.assertEqual(pairs[1][0], pairs[0][1])
        self.assertPartition(separable)

    def test_consensus_on_graph(self):
        program = ProxAffineProblem([
            prox_function('norm1', [self.x]),
            prox_function('norm2', [self.x]),
            prox_function('norm1', [self.y]),
        ])
        graph = FunctionVariableGraph.from_problem(program)
        separable = add_consensus_constraints(graph)
        self.assertIsInstance(separable, SeparableProblem)
        self.assertEqual(len(separable.constraints), 1)
        self.assertEqual(separable.origin['y'], 'y')
        copies = [v for v, origin in separable.origin.items() if origin == 'x']
        self.assertEqual(len(copies), 2)
        self.assertTrue(all(term.block for term in separable.terms))
        self.assertPartition(separable)

    def test_single_term_unchanged(self):
        separable = separate(ProxAffineProblem([prox_function('norm1', [self.x])]))
        self.assertEqual(len(separable), 1)
        self.assertEqual(separable.constraints, [])
        self.assertEqual(separable.terms[0].block, ('x',))

    def test_graph_edges_and_audit(self):
        A = self.rng.standard_normal((2, 3))
        program = ProxAffineProblem([
            prox_function('sum_squares', [affine_sum([apply_map(DenseOp(A), self.x),
                                                      apply_map(DenseOp(A), self.y)])]),
            prox_function('norm1', [self.y]),
        ])
        graph = FunctionVariableGraph.from_problem(program)
        graph.audit()
        keys = list(graph.terms)
        self.assertEqual(graph.variables_of(keys[0]), ['x', 'y'])
        self.assertEqual(graph.terms_of('y'), keys)
        ((index, op),) = graph.edge_ops(keys[0], 'x')
        self.assertEqual(index, 0)
        np.testing.assert_allclose(op.matrix, A)

    def test_partition_is_enforced(self):
        with self.assertRaises(ValueError):
            SeparableProblem([SeparableTerm('norm1', [self.x], {}, ['x']),
                              SeparableTerm('norm2', [self.x], {}, ['x'])], [],
                             {'x': self.x.dim})


if __name__ == '__main__':
    unittest.main()
