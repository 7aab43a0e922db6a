import unittest

import numpy as np
import scipy.sparse as sp

from proxcomp.linops import (DenseOp, DiagonalOp, KronOp, ProductOp, ScalarOp, SparseOp, SumOp,
                             OperationCounter, add, compose, materialize, scale)
from proxcomp.linops.algebra import diagonal_of, gram, is_simple, same_op
from proxcomp.linops.factorization import CholeskySolver, LUSolver, PinvSolver, SparseLUSolver
from proxcomp.objects import Logger
from proxcomp.utils.errors import DimensionError, MaterializeCapError, SingularOperatorError

Logger.DISABLED = True


def random_leaf(rng, n):
    kind = rng.integers(0, 4)
    if kind == 0:
        return ScalarOp(rng.uniform(0.5, 2.0), n)
    if kind == 1:
        return DiagonalOp(rng.uniform(0.5, 2.0, n))
    if kind == 2:
        return SparseOp(sp.random(n, n, density=0.3, random_state=int(rng.integers(1 << 30)))
                        + sp.eye(n))
    return DenseOp(rng.standard_normal((n, n)))


def random_tree(rng, n, depth):
    if depth == 0 or rng.random() < 0.3:
        return random_leaf(rng, n)
    choice = rng.integers(0, 3)
    if choice == 0:
        return add(random_tree(rng, n, depth - 1), random_tree(rng, n, depth - 1))
    if choice == 1:
        return compose(random_tree(rng, n, depth - 1), random_tree(rng, n, depth - 1))
    return scale(random_tree(rng, n, depth - 1), rng.uniform(-2.0, 2.0))


class TestLinearOps(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_random_trees_match_materialized(self):
        for _ in range(200):
            n = int(self.rng.integers(1, 12))
            op = random_tree(self.rng, n, 4)
            matrix = materialize(op)
            x = self.rng.standard_normal(n)
            np.testing.assert_allclose(op.apply(x), matrix @ x, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(materialize(op.transpose()), matrix.T, rtol=1e-10, atol=1e-10)

    def test_inverse_matches_materialized(self):
        for _ in range(50):
            n = int(self.rng.integers(1, 10))
            op = DenseOp(self.rng.standard_normal((n, n)) + 3.0 * n * np.eye(n))
            inverse = op.inverse()
            x = self.rng.standard_normal(n)
            np.testing.assert_allclose(inverse.apply(op.apply(x)), x, rtol=1e-9, atol=1e-9)

    def test_diagonal_and_scalar_inverse(self):
        d = DiagonalOp([1.0, 2.0, 4.0])
        np.testing.assert_allclose(d.inverse().diagonal, [1.0, 0.5, 0.25])
        self.assertEqual(ScalarOp(4.0, 3).inverse().alpha, 0.25)
        with self.assertRaises(SingularOperatorError):
            DiagonalOp([1.0, 0.0]).inverse()
        with self.assertRaises(SingularOperatorError):
            ScalarOp(0.0, 2).inverse()

    def test_singular_dense_inverse(self):
        with self.assertRaises(SingularOperatorError):
            DenseOp([[1.0, 2.0], [2.0, 4.0]]).inverse()

    def test_kron_apply(self):
        A = self.rng.standard_normal((3, 2))
        B = self.rng.standard_normal((4, 5))
        op = KronOp(DenseOp(A), DenseOp(B))
        x = self.rng.standard_normal(10)
        np.testing.assert_allclose(op.apply(x), np.kron(A, B) @ x, rtol=1e-10)
        X = x.reshape((5, 2), order='F')
        np.testing.assert_allclose(op.apply(x), (B @ X @ A.T).reshape(-1, order='F'), rtol=1e-10)

    def test_kron_sum_shares_left_factor(self):
        A = DenseOp(self.rng.standard_normal((2, 2)))
        B = DenseOp(self.rng.standard_normal((3, 3)))
        C = DiagonalOp(self.rng.uniform(1.0, 2.0, 3))
        total = add(KronOp(A, B), KronOp(A, C))
        self.assertIsInstance(total, KronOp)
        np.testing.assert_allclose(materialize(total),
                                   np.kron(A.matrix, B.matrix + np.diag(C.diagonal)), rtol=1e-10)

    def test_kron_composition(self):
        A = DenseOp(self.rng.standard_normal((2, 3)))
        B = DenseOp(self.rng.standard_normal((4, 2)))
        C = DenseOp(self.rng.standard_normal((3, 2)))
        D = DenseOp(self.rng.standard_normal((2, 3)))
        product = compose(KronOp(A, B), KronOp(C, D))
        self.assertIsInstance(product, KronOp)
        np.testing.assert_allclose(materialize(product),
                                   np.kron(A.matrix @ C.matrix, B.matrix @ D.matrix), rtol=1e-10)

    def test_kron_inverse(self):
        A = DenseOp(np.array([[2.0, 1.0], [0.0, 3.0]]))
        B = DiagonalOp([1.0, 2.0, 4.0])
        op = KronOp(A, B)
        np.testing.assert_allclose(materialize(op.inverse()), np.linalg.inv(materialize(op)),
                                   rtol=1e-10, atol=1e-12)

    def test_promotion(self):
        self.assertIsInstance(add(ScalarOp(1.0, 3), ScalarOp(2.0, 3)), ScalarOp)
        self.assertIsInstance(add(ScalarOp(1.0, 3), DiagonalOp([1.0, 2.0, 3.0])), DiagonalOp)
        self.assertIsInstance(add(DiagonalOp([1.0, 2.0]), DenseOp(np.eye(2))), DenseOp)
        self.assertIsInstance(add(SparseOp(sp.eye(2)), DiagonalOp([1.0, 2.0])), SparseOp)
        self.assertIsInstance(compose(DiagonalOp([1.0, 2.0]), DiagonalOp([3.0, 4.0])), DiagonalOp)

    def test_fallback_nodes(self):
        left = KronOp(DenseOp(np.eye(2)), DenseOp(np.ones((2, 2))))
        right = DenseOp(np.ones((4, 4)))
        self.assertIsInstance(add(left, right), SumOp)
        product = compose(left, ProductOp([right, right]))
        self.assertIsInstance(product, ProductOp)
        self.assertEqual(len(product.ops), 3)

    def test_dimension_errors(self):
        with self.assertRaises(DimensionError):
            add(ScalarOp(1.0, 2), ScalarOp(1.0, 3))
        with self.assertRaises(DimensionError):
            compose(DenseOp(np.ones((2, 3))), DenseOp(np.ones((2, 3))))
        with self.assertRaises(DimensionError):
            DenseOp(np.ones((2, 3))).apply(np.ones(2))

    def test_materialize_cap(self):
        with self.assertRaises(MaterializeCapError):
            materialize(ScalarOp(1.0, 100), cap=99)

    def test_gram_and_diagonal(self):
        op = KronOp(ScalarOp(2.0, 3), DenseOp(self.rng.standard_normal((4, 2))))
        np.testing.assert_allclose(materialize(gram(op)), materialize(op).T @ materialize(op),
                                   rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(diagonal_of(ScalarOp(3.0, 2)), [3.0, 3.0])
        self.assertIsNone(diagonal_of(DenseOp(np.eye(2))))
        self.assertTrue(is_simple(DiagonalOp([1.0, 2.0])))
        self.assertFalse(is_simple(DenseOp(np.eye(2))))

    def test_same_op(self):
        self.assertTrue(same_op(ScalarOp(2.0, 3), ScalarOp(2.0, 3)))
        self.assertFalse(same_op(ScalarOp(2.0, 3), ScalarOp(1.0, 3)))
        self.assertTrue(same_op(DenseOp(np.eye(2)), DenseOp(np.eye(2))))

    def test_solvers_share_an_interface(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((4, 4)) + 4.0 * np.eye(4)
        spd = A @ A.T
        b = rng.standard_normal(4)
        cases = [(CholeskySolver(spd), spd), (LUSolver(A), A), (SparseLUSolver(sp.csc_matrix(A)), A),
                 (PinvSolver(A), A)]
        for solver, matrix in cases:
            with self.subTest(solver=type(solver).__name__):
                self.assertEqual(solver.dim, 4)
                np.testing.assert_allclose(solver.solve(b), np.linalg.solve(matrix, b), atol=1e-10)
                np.testing.assert_allclose(solver.solve_transpose(b), np.linalg.solve(matrix.T, b),
                                           atol=1e-10)

    def test_pinv_solver_on_singular_matrix(self):
        A = np.array([[1.0, 1.0], [0.0, 0.0]])
        b = np.array([2.0, 3.0])
        solver = PinvSolver(A)
        np.testing.assert_allclose(solver.solve(b), [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(solver.solve_transpose(b), np.linalg.pinv(A.T) @ b, atol=1e-12)

    def test_factorizations_are_counted(self):
        counter = OperationCounter.get_instance()
        counter.reset()
        DenseOp(np.eye(3) * 2.0).inverse()
        self.assertEqual(counter.factorizations, [('lu', 3)])
        counter.reset()
        self.assertEqual(counter.factorizations, [])


if __name__ == '__main__':
    unittest.main()
