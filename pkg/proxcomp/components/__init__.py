from .dcp import Verdict, verify, is_dcp, curvature_of, sign_of
from .affine import AffineForm, affine_form
from .rules import ProxRule, RULES, register_rule, match_rule
from .reductions import Reduction, register_reduction, reduce_atom
from .compiler import (CompileOptions, CompileOutput, TraceEntry, linearize_pass, convert_prox,
                       convert_prox_arguments, convert_conic, compile_problem)
from .separator import (FunctionVariableGraph, move_equality_indicators, combine_objective_terms,
                        add_consensus_constraints, separate)
from .solver import (SolverParams, SolverState, SolveResult, ADMMSolver, stopping_check,
                     plot_residuals, solve)
