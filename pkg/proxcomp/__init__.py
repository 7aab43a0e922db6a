from .components import compile_problem, separate, solve, verify, SolverParams, CompileOptions
from .objects import *
