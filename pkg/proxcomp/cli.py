"""
The proxcomp command line: compile, solve, bench and check.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np
from pathvalidate import ValidationError, validate_filename

from proxcomp.components.compiler import CompileOptions, compile_problem
from proxcomp.components.dcp import verify
from proxcomp.components.separator import separate
from proxcomp.components.solver import ADMMSolver, SolverParams, plot_residuals
from proxcomp.objects.evaluate import evaluate
from proxcomp.objects.logger import Logger
from proxcomp.objects.problem import Problem
from proxcomp.objects.text_format import read_program, serialize, write_program
from proxcomp.problems.library import BenchmarkSpec, problem_names
from proxcomp.problems.runner import run_benchmarks
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import (DcpError, DimensionError, MissingVariableError, ParseError,
                                   ProxCompError, SerializationError, UnknownAtomError,
                                   UnsupportedAtomError)

USER_ERRORS = (ParseError, DimensionError, DcpError, UnsupportedAtomError, MissingVariableError,
               UnknownAtomError, SerializationError, FileNotFoundError, IsADirectoryError,
               ValidationError, ValueError)


class _Parser(argparse.ArgumentParser):
    """ Usage errors exit with the user error code. """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(Constants.EXIT_USER_ERROR, '%s: error: %s\n' % (self.prog, message))


def _output_path(path):
    """ Validates the file name part of an output path. """
    validate_filename(os.path.basename(path))
    return path


def _read(path):
    if not os.path.isfile(path):
        raise FileNotFoundError('no such file: %s' % path)
    return read_program(path)


def _solver_params(args):
    params = SolverParams(max_iters=args.max_iters)
    if getattr(args, 'lam', None) is not None:
        params.lam = args.lam
    if getattr(args, 'abs_tol', None) is not None:
        params.abs_tol = args.abs_tol
    if getattr(args, 'rel_tol', None) is not None:
        params.rel_tol = args.rel_tol
    if getattr(args, 'adaptive', False):
        params.adaptive = True
    return params


def _compile_command(args, out):
    program = _read(args.file)
    if args.check_only:
        if not isinstance(program, Problem):
            out.write('already compiled\n')
            return Constants.EXIT_OK
        verdict = verify(program)
        out.write(verdict.describe() + '\n')
        return Constants.EXIT_OK if verdict.accepted else Constants.EXIT_USER_ERROR
    compiled = compile_problem(program, CompileOptions(prox_rules=not args.conic))
    result = compiled.prox_affine
    if args.emit == 'separable':
        result = separate(result)
    if args.trace:
        for entry in compiled.rule_trace:
            out.write('# %s -> %s\n' % (entry.subtree, entry.rule))
    if args.output:
        write_program(_output_path(args.output), result)
    else:
        out.write(serialize(result))
    return Constants.EXIT_OK


def _original_variables(program):
    if isinstance(program, Problem):
        return [var_id for var_id, _ in program.variables()]
    found = dict(program.objective.variables())
    for constraint in program.constraints:
        found.update(constraint.variables())
    return list(found)


def _solve_command(args, out):
    program = _read(args.file)
    compiled = compile_problem(program)
    solver = ADMMSolver(separate(compiled.prox_affine), _solver_params(args))
    trace = _output_path(args.trace_csv) if args.trace_csv else None
    result = solver.solve(trace)
    solution = {var_id: result.solution[var_id] for var_id in _original_variables(program)
                if var_id in result.solution}
    if isinstance(program, Problem):
        objective = float(evaluate(program.objective, solution))
    else:
        objective = result.diagnostics['final_objective']
    if args.plot:
        plot_residuals(result.diagnostics, _output_path(args.plot))
    if args.json:
        out.write(json.dumps({
            'status': result.status,
            'objective': objective,
            'iterations': result.diagnostics['iterations'],
            'prox_calls': result.diagnostics['prox_calls'],
            'elapsed': result.diagnostics['elapsed'],
            'solution': {k: np.asarray(v).tolist() for k, v in solution.items()},
        }, indent=2) + '\n')
    else:
        out.write('status: %s\nobjective: %.10g\niterations: %d\n'
                  % (result.status, objective, result.diagnostics['iterations']))
        for var_id, value in solution.items():
            out.write('%s = %s\n' % (var_id, np.array2string(np.asarray(value).reshape(-1, order='F'),
                                                            precision=6)))
    return Constants.EXIT_OK


def _bench_command(args, out):
    names = args.problem or problem_names()
    specs = [BenchmarkSpec(name, m=args.m, n=args.n, k=args.k, density=args.density, seed=args.seed)
             for name in names]
    report = run_benchmarks(specs, _solver_params(args), workers=args.workers,
                            progress=args.progress)
    if args.csv:
        report.to_csv(_output_path(args.csv))
    text = report.to_json() if args.json else report.to_table()
    if args.save:
        with open(_output_path(args.save), 'w') as handle:
            handle.write(text + '\n')
    out.write(text + '\n')
    return Constants.EXIT_OK


def _check_command(args, out):
    program = _read(args.file)
    if not isinstance(program, Problem):
        out.write('compiled program: nothing to verify\n')
        return Constants.EXIT_OK
    verdict = verify(program)
    out.write(verdict.describe() + '\n')
    return Constants.EXIT_OK if verdict.accepted else Constants.EXIT_USER_ERROR


def build_parser():
    parser = _Parser(prog='proxcomp', description='Compile and solve convex programs with ADMM.')
    parser.add_argument('--verbose', action='store_true', help='log progress')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    compile_parser = commands.add_parser('compile', help='compile a problem file')
    compile_parser.add_argument('file')
    compile_parser.add_argument('--emit', choices=('prox-affine', 'separable'),
                                default='prox-affine')
    compile_parser.add_argument('--check-only', action='store_true',
                                help='only run the DCP check')
    compile_parser.add_argument('--trace', action='store_true', help='print the rule decisions')
    compile_parser.add_argument('--conic', action='store_true',
                                help='use conic reductions instead of prox rules')
    compile_parser.add_argument('-o', '--output', help='write the program and its sidecar here')
    compile_parser.set_defaults(handler=_compile_command)

    solve_parser = commands.add_parser('solve', help='compile and solve a problem file')
    solve_parser.add_argument('file')
    _add_solver_flags(solve_parser)
    solve_parser.add_argument('--trace-csv', help='write per-iteration residuals as CSV')
    solve_parser.add_argument('--plot', help='save a residual plot')
    solve_parser.add_argument('--json', action='store_true')
    solve_parser.set_defaults(handler=_solve_command)

    bench_parser = commands.add_parser('bench', help='run benchmark problems')
    bench_parser.add_argument('--problem', action='append', choices=problem_names())
    bench_parser.add_argument('--m', type=int, default=50)
    bench_parser.add_argument('--n', type=int)
    bench_parser.add_argument('--k', type=int, default=10)
    bench_parser.add_argument('--density', type=float, default=0.05)
    bench_parser.add_argument('--seed', type=int)
    bench_parser.add_argument('--workers', type=int, default=1)
    bench_parser.add_argument('--progress', action='store_true')
    bench_parser.add_argument('--save', help='write the report here')
    bench_parser.add_argument('--csv', help='write the report as CSV')
    bench_parser.add_argument('--json', action='store_true')
    _add_solver_flags(bench_parser)
    bench_parser.set_defaults(handler=_bench_command)

    check_parser = commands.add_parser('check', help='run the DCP check on a problem file')
    check_parser.add_argument('file')
    check_parser.set_defaults(handler=_check_command)
    return parser


def _add_solver_flags(parser):
    parser.add_argument('--lambda', dest='lam', type=float)
    parser.add_argument('--max-iters', type=int, default=Constants.DEFAULT_MAX_ITERS)
    parser.add_argument('--abs-tol', type=float)
    parser.add_argument('--rel-tol', type=float)
    parser.add_argument('--adaptive', action='store_true')


def main(argv=None, out=None):
    """
    Run the command line.

    Args:
        argv (list): Arguments without the program name; sys.argv by default.
        out (file): Output stream; stdout by default.
    Returns:
        (int): 0 on success, 1 on user error, 2 on internal error.
    """
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else Constants.EXIT_USER_ERROR
    if args.verbose:
        Logger.DISABLED = False
        Logger.get_instance().set_level(logging.DEBUG)
    try:
        return args.handler(args, out)
    except USER_ERRORS as e:
        sys.stderr.write('error: %s\n' % e)
        return Constants.EXIT_USER_ERROR
    except ProxCompError as e:
        sys.stderr.write('internal error: %s: %s\n' % (type(e).__name__, e))
        return Constants.EXIT_INTERNAL_ERROR
    except Exception as e:
        sys.stderr.write('internal error: %s: %s\n' % (type(e).__name__, e))
        return Constants.EXIT_INTERNAL_ERROR


if __name__ == '__main__':
    sys.exit(main())
