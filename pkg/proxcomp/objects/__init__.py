from .logger import Logger
from .daemon_thread import DaemonThread
from .constant_pool import ConstantPool, ConstantData
from .expression import Dim, Expr, Variable, Constant, SCALAR_DIM
from .atoms import *
from .problem import (Constraint, Problem, ProxAffineProblem, Zero, NonNeg, SecondOrderCone, PSD,
                      eq, leq, geq)
from .separable import LinearConstraint, SeparableTerm, SeparableProblem
from .evaluate import evaluate, objective_value
from .text_format import (serialize, serialize_data, serialize_problem, parse, parse_problem,
                          write_program, read_program)
