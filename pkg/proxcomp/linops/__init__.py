from .linear_op import (LinearOp, DenseOp, SparseOp, DiagonalOp, ScalarOp, KronOp, SumOp,
                        ProductOp, AbstractOp, identity)
from .algebra import add, compose, materialize, scale, transpose, inverse, apply, same_op
from .factorization import OperationCounter
