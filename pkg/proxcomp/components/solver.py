"""
Gauss-Seidel ADMM over a separable program

    minimize  sum_i f_i(H_i x_i)  subject to  sum_i A_i x_i = b.

Each sweep updates the blocks in term order with the generalized prox

    x_i <- argmin lam f_i(H_i x_i) + 1/2 ||A_i x_i - v_i||^2,
    v_i  = b - u - sum_{j < i} A_j x_j^{k+1} - sum_{j > i} A_j x_j^k,

followed by the scaled dual step u <- u + A x - b.
"""
import csv
import time
from collections import Counter, namedtuple

import numpy as np
import scipy.sparse as sp

from proxcomp.components.affine import affine_form
from proxcomp.linops.algebra import to_sparse
from proxcomp.linops.factorization import FactorCache
from proxcomp.objects.logger import Logger
from proxcomp.prox.registry import ProxRequest, eval_prox, get_prox
from proxcomp.utils.constants import Constants, default_seed
from proxcomp.utils.errors import NumericalError

SolveResult = namedtuple('SolveResult', ['solution', 'status', 'diagnostics'])


class SolverParams(object):
    """
    Parameters of the ADMM iteration.

    Args:
        lam (float): Prox parameter (inverse augmented-Lagrangian penalty), positive.
        max_iters (int): Iteration cap.
        abs_tol (float): Absolute tolerance of the stopping rule.
        rel_tol (float): Relative tolerance of the stopping rule.
        seed (int): Seed of the random initialization.
        adaptive (bool): Rebalance lam from the residual ratio.
        initial (str): 'zeros' or 'random' block initialization.
        log_every (int): Log every this many iterations.
        trace_objective (bool): Record the objective every iteration.
    """

    def __init__(self, lam=Constants.DEFAULT_LAMBDA, max_iters=Constants.DEFAULT_MAX_ITERS,
                 abs_tol=Constants.DEFAULT_ABS_TOL, rel_tol=Constants.DEFAULT_REL_TOL, seed=None,
                 adaptive=False, initial='zeros', log_every=Constants.DEFAULT_LOG_EVERY,
                 trace_objective=True):
        self.lam = lam
        self.max_iters = max_iters
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self.seed = default_seed() if seed is None else seed
        self.adaptive = adaptive
        self.initial = initial
        self.log_every = log_every
        self.trace_objective = trace_objective

    @property
    def lam(self):
        return self._lam

    @lam.setter
    def lam(self, value):
        value = float(value)
        if not value > 0:
            raise ValueError('lam must be positive, got %r' % value)
        self._lam = value

    @property
    def max_iters(self):
        return self._max_iters

    @max_iters.setter
    def max_iters(self, value):
        if int(value) < 1:
            raise ValueError('max_iters must be at least 1')
        self._max_iters = int(value)

    @property
    def abs_tol(self):
        return self._abs_tol

    @abs_tol.setter
    def abs_tol(self, value):
        if not float(value) > 0:
            raise ValueError('abs_tol must be positive')
        self._abs_tol = float(value)

    @property
    def rel_tol(self):
        return self._rel_tol

    @rel_tol.setter
    def rel_tol(self, value):
        if not float(value) > 0:
            raise ValueError('rel_tol must be positive')
        self._rel_tol = float(value)

    @property
    def adaptive(self):
        return self._adaptive

    @adaptive.setter
    def adaptive(self, value):
        if not isinstance(value, bool):
            raise ValueError('adaptive should be a boolean value')
        self._adaptive = value

    @property
    def initial(self):
        return self._initial

    @initial.setter
    def initial(self, value):
        if value not in ('zeros', 'random'):
            raise ValueError("initial must be 'zeros' or 'random', got %r" % value)
        self._initial = value

    @property
    def log_every(self):
        return self._log_every

    @log_every.setter
    def log_every(self, value):
        if int(value) < 1:
            raise ValueError('log_every must be at least 1')
        self._log_every = int(value)


class _Block(object):
    """ One term of the separable program with its variable layout and maps. """

    def __init__(self, term, dims, rows, row_offsets, constraints):
        self.term = term
        self.function = get_prox(term.name)
        self.layout = {}
        start = 0
        for var_id in term.block:
            size = dims[var_id].size
            self.layout[var_id] = (start, start + size)
            start += size
        self.size = start
        self.maps = [affine_form(arg).affine_map(self.layout, self.size) for arg in term.args]
        self.A = self._constraint_matrix(rows, row_offsets, constraints)
        self.free = np.flatnonzero(np.asarray(abs(self.A).sum(axis=0)).reshape(-1) == 0)
        self.exact = term.name == 'sum_squares' and rows == 0
        self.linear = self._folded(term.linear)
        self.quad = self._folded(term.quad)
        self.cache = FactorCache()
        self._outer = None

    def _constraint_matrix(self, rows, row_offsets, constraints):
        data, row_index, col_index = [], [], []
        for offset, constraint in zip(row_offsets, constraints):
            for var_id, op in constraint.coefficients:
                if var_id in self.layout:
                    block = to_sparse(op).tocoo()
                    data.append(block.data)
                    row_index.append(block.row + offset)
                    col_index.append(block.col + self.layout[var_id][0])
        if not data:
            return sp.csc_matrix((rows, self.size))
        return sp.csc_matrix((np.concatenate(data), (np.concatenate(row_index),
                                                     np.concatenate(col_index))),
                             shape=(rows, self.size))

    def _folded(self, values):
        if not values:
            return None
        out = np.zeros(self.size)
        for var_id, coefficients in values.items():
            start, stop = self.layout[var_id]
            out[start:stop] += coefficients
        return out

    def outer(self):
        """ A_i with identity rows appended for the columns no constraint touches. """
        if self._outer is None:
            if self.exact or self.free.size == 0:
                self._outer = self.A
            else:
                selector = sp.csc_matrix((np.ones(self.free.size),
                                          (np.arange(self.free.size), self.free)),
                                         shape=(self.free.size, self.size))
                self._outer = sp.vstack([self.A, selector]).tocsc()
        return self._outer

    def update(self, v, x, lam):
        """ The generalized prox step; v covers the constraint rows only. """
        if not self.exact and self.free.size:
            v = np.concatenate([v, x[self.free]])
        request = ProxRequest(v, lam, self.maps, self.outer(), self.term.params, self.linear,
                              self.quad, self.cache)
        return eval_prox(self.function, request)

    def objective(self, x):
        """ Value of the term at x; indicators count as zero. """
        if self.function.indicator:
            return 0.0
        vals = [np.asarray(m.apply(x)).reshape((m.dim.rows, m.dim.cols), order='F')
                for m in self.maps]
        value = self.function.value(vals, self.term.params)
        if self.linear is not None:
            value += float(self.linear @ x)
        if self.quad is not None:
            value += float(x @ (self.quad * x))
        return value


class SolverState(object):
    """
    Iterate of the ADMM loop.

    Args:
        blocks (list): Block vectors x_i.
        u (ndarray): Scaled dual variable.
        lam (float): Current prox parameter.
    """

    def __init__(self, blocks, u, lam):
        self.blocks = blocks
        self.u = u
        self.lam = lam
        self.iteration = 0
        self.products = []
        self.primal_residual = np.zeros_like(u)
        self.dual_residual = np.zeros(sum(x.size for x in blocks))
        self.objective = []


class ADMMSolver(object):
    """
    Gauss-Seidel ADMM for a SeparableProblem.

    Args:
        problem (SeparableProblem): The separable program.
        params (SolverParams): Parameters; defaults when None.
    """

    def __init__(self, problem, params=None):
        self.problem = problem
        self.params = params or SolverParams()
        offsets, rows = [], 0
        for constraint in problem.constraints:
            offsets.append(rows)
            rows += constraint.rows
        self.rows = rows
        self.b = np.concatenate([c.rhs for c in problem.constraints]) if rows else np.zeros(0)
        self.blocks = [_Block(term, problem.dims, rows, offsets, problem.constraints)
                       for term in problem.terms]
        self.prox_calls = Counter()
        self._logger = Logger.get_instance()

    def initial_state(self):
        if self.params.initial == 'random':
            rng = np.random.default_rng(self.params.seed)
            xs = [rng.standard_normal(block.size) for block in self.blocks]
        else:
            xs = [np.zeros(block.size) for block in self.blocks]
        state = SolverState(xs, np.zeros(self.rows), self.params.lam)
        state.products = [np.asarray(block.A @ x).reshape(-1) for block, x in zip(self.blocks, xs)]
        return state

    def compute_v(self, i, state):
        """
        v_i = b - u - sum_{j != i} A_j x_j with the current values of the other
        blocks (already updated this sweep for j < i).
        """
        v = self.b - state.u
        for j, product in enumerate(state.products):
            if j != i:
                v = v - product
        return v

    def sweep(self, state):
        """ One pass of block updates followed by the dual step. """
        lam = state.lam
        changes, free_steps = [], []
        for i, block in enumerate(self.blocks):
            previous = state.blocks[i]
            x = block.update(self.compute_v(i, state), previous, lam)
            self.prox_calls[block.term.name] += 1
            product = np.asarray(block.A @ x).reshape(-1)
            changes.append(product - state.products[i])
            free_steps.append((x - previous)[block.free] if not block.exact else np.zeros(0))
            state.blocks[i] = x
            state.products[i] = product
        total = sum(state.products) if state.products else np.zeros(self.rows)
        r = np.asarray(total - self.b).reshape(-1)
        state.u = state.u + r
        state.primal_residual = r
        state.dual_residual = self._dual_residual(changes, free_steps, lam)
        state.iteration += 1
        return state

    def _dual_residual(self, changes, free_steps, lam):
        parts = []
        later = np.zeros(self.rows)
        suffix = [None] * len(self.blocks)
        for i in reversed(range(len(self.blocks))):
            suffix[i] = later
            later = later + changes[i]
        for i, block in enumerate(self.blocks):
            s = np.asarray(block.A.T @ suffix[i]).reshape(-1) / lam
            if block.free.size and not block.exact:
                s[block.free] += free_steps[i] / lam
            parts.append(s)
        return np.concatenate(parts) if parts else np.zeros(0)

    def objective(self, state):
        return self.problem.offset + sum(block.objective(x)
                                         for block, x in zip(self.blocks, state.blocks))

    def _rebalance(self, state):
        r = np.linalg.norm(state.primal_residual)
        s = np.linalg.norm(state.dual_residual)
        factor, ratio = Constants.ADAPTIVE_FACTOR, Constants.ADAPTIVE_RATIO
        if r > ratio * s:
            new = state.lam / factor
        elif s > ratio * r:
            new = state.lam * factor
        else:
            return
        state.u = state.u * (new / state.lam)
        state.lam = new
        for block in self.blocks:
            block.cache.clear()
        self._logger.debug('lam rebalanced to %g', new, stage=Constants.STAGE_SOLVER)

    def values(self, state):
        """ Variable values with consensus copies averaged, keyed by original id. """
        copies = {}
        for block, x in zip(self.blocks, state.blocks):
            for var_id, (start, stop) in block.layout.items():
                origin = self.problem.origin.get(var_id, var_id)
                copies.setdefault(origin, []).append(x[start:stop])
        solution = {}
        for origin, parts in copies.items():
            dim = self.problem.dims[origin]
            solution[origin] = np.mean(parts, axis=0).reshape((dim.rows, dim.cols), order='F')
        return solution

    def block_values(self, state):
        """ Values of every block variable, copies included. """
        out = {}
        for block, x in zip(self.blocks, state.blocks):
            for var_id, (start, stop) in block.layout.items():
                dim = self.problem.dims[var_id]
                out[var_id] = x[start:stop].reshape((dim.rows, dim.cols), order='F')
        return out

    def solve(self, trace_csv=None):
        """
        Run the iteration until the stopping rule holds or max_iters.

        Args:
            trace_csv (str): Path of a CSV file receiving one row per iteration.
        Returns:
            (SolveResult): solution (original id -> 2-D array), status and diagnostics.
        Raises:
            NumericalError: An iterate or residual is not finite.
        """
        params = self.params
        state = self.initial_state()
        started = time.perf_counter()
        diagnostics = {'primal_residuals': [], 'dual_residuals': [], 'objective': []}
        rows = []
        status = Constants.MAX_ITERS
        while state.iteration < params.max_iters:
            self.sweep(state)
            r = float(np.linalg.norm(state.primal_residual))
            s = float(np.linalg.norm(state.dual_residual))
            if not (np.isfinite(r) and np.isfinite(s)) or \
                    not all(np.all(np.isfinite(x)) for x in state.blocks):
                raise NumericalError('iterates are not finite', state.iteration)
            diagnostics['primal_residuals'].append(r)
            diagnostics['dual_residuals'].append(s)
            objective = self.objective(state) if params.trace_objective else float('nan')
            diagnostics['objective'].append(objective)
            elapsed = time.perf_counter() - started
            rows.append((state.iteration, objective, r, s, 1000.0 * elapsed))
            if state.iteration % params.log_every == 0:
                self._logger.log('iter %d: primal %.3e, dual %.3e', state.iteration, r, s,
                                 stage=Constants.STAGE_SOLVER)
            if stopping_check(self, state, params):
                status = Constants.OPTIMAL
                break
            if params.adaptive:
                self._rebalance(state)
        if trace_csv is not None:
            write_trace(trace_csv, rows)
        diagnostics.update({
            'iterations': state.iteration,
            'prox_calls': dict(self.prox_calls),
            'elapsed': time.perf_counter() - started,
            'lam': state.lam,
            'final_objective': self.objective(state),
            'block_values': self.block_values(state),
        })
        self._logger.log('%s after %d iterations', status, state.iteration, stage=Constants.STAGE_SOLVER)
        self.state = state
        return SolveResult(self.values(state), status, diagnostics)


def stopping_check(solver, state, params):
    """
    ||r|| <= sqrt(rows) abs_tol + rel_tol max(||Ax||, ||b||) and
    ||s|| <= sqrt(cols) abs_tol + rel_tol ||u / lam||.
    """
    products = sum(state.products) if state.products else np.zeros(solver.rows)
    r = np.linalg.norm(state.primal_residual)
    s = np.linalg.norm(state.dual_residual)
    primal_tol = np.sqrt(solver.rows) * params.abs_tol + params.rel_tol * max(
        np.linalg.norm(products), np.linalg.norm(solver.b))
    dual_tol = np.sqrt(state.dual_residual.size) * params.abs_tol + \
        params.rel_tol * np.linalg.norm(state.u / state.lam)
    return bool(r <= primal_tol and s <= dual_tol)


def compute_v(solver, i, state):
    return solver.compute_v(i, state)


def write_trace(path, rows):
    """ Write iteration rows as CSV with the header iter, objective, primal_res, dual_res, elapsed_ms. """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['iter', 'objective', 'primal_res', 'dual_res', 'elapsed_ms'])
        for row in rows:
            writer.writerow([row[0]] + ['%.10g' % value for value in row[1:]])


def plot_residuals(diagnostics, path=None):
    """
    Plots the primal and dual residual curves on a log scale.

    Args:
        diagnostics (dict): Diagnostics returned by solve.
        path (str): Save the figure here instead of showing it.
    """
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots()
    ax.semilogy(diagnostics['primal_residuals'], label='primal')
    ax.semilogy(diagnostics['dual_residuals'], label='dual')
    ax.set_xlabel('iteration')
    ax.set_ylabel('residual norm')
    ax.legend()
    if path is None:
        plt.show()
    else:
        fig.savefig(path)
    plt.close(fig)


def solve(problem, params=None, trace_csv=None):
    """
    Solve a separable program.

    Args:
        problem (SeparableProblem): The program.
        params (SolverParams): Parameters.
        trace_csv (str): Optional CSV trace path.
    Returns:
        (SolveResult): (solution, status, diagnostics).
    """
    return ADMMSolver(problem, params).solve(trace_csv)
