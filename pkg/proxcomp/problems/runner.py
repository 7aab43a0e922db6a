"""
Benchmark runner: compile, separate and solve generated problems and tabulate the results.
"""
import csv
import json
import time
from collections import namedtuple

from tqdm import tqdm

from proxcomp.components.compiler import compile_problem
from proxcomp.components.separator import separate
from proxcomp.components.solver import ADMMSolver, SolverParams
from proxcomp.objects.daemon_thread import DaemonThread
from proxcomp.objects.evaluate import evaluate
from proxcomp.objects.logger import Logger
from proxcomp.problems.library import generate
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import ProxCompError
from proxcomp.utils.safe_dict import SafeDict

FIELDS = ['problem', 'status', 'objective', 'iterations', 'prox_calls', 'time', 'error']


class RunRecord(namedtuple('RunRecord', ['name', 'status', 'objective', 'iterations',
                                         'prox_calls', 'time', 'error'])):
    """ Outcome of one benchmark problem. """

    def as_row(self):
        return {
            'problem': self.name,
            'status': self.status,
            'objective': self.objective,
            'iterations': self.iterations,
            'prox_calls': sum(self.prox_calls.values()),
            'time': self.time,
            'error': self.error or '',
        }


class RunReport(object):
    """ Per-problem records, ordered by problem name. """

    def __init__(self, records):
        self.records = sorted(records, key=lambda record: record.name)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def record(self, name):
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    def rows(self):
        return [record.as_row() for record in self.records]

    def to_csv(self, path):
        with open(path, 'w', newline='') as handle:
            writer = csv.DictWriter(handle, fieldnames=FIELDS)
            writer.writeheader()
            for row in self.rows():
                writer.writerow(row)

    def to_json(self):
        rows = []
        for record in self.records:
            row = record.as_row()
            row['prox_calls'] = dict(record.prox_calls)
            rows.append(row)
        return json.dumps(rows, indent=2)

    def to_table(self):
        """ Problem, Time, Objective and status columns. """
        lines = ['%-18s %10s %16s %10s %s' % ('Problem', 'Time', 'Objective', 'Iters', 'Status')]
        for record in self.records:
            objective = '%16.6e' % record.objective if record.objective is not None else '%16s' % '-'
            lines.append('%-18s %9.2fs %s %10d %s' % (record.name, record.time, objective,
                                                     record.iterations, record.status))
        return '\n'.join(lines)


def run_one(spec, params=None):
    """
    Compile, separate and solve one benchmark problem.

    Args:
        spec (BenchmarkSpec): The problem.
        params (SolverParams): Solver parameters.
    Returns:
        (RunRecord): The outcome. The objective is the original problem's
        objective at the returned solution.
    """
    logger = Logger.get_instance()
    started = time.perf_counter()
    try:
        instance = generate(spec)
        compiled = compile_problem(instance.problem)
        result = ADMMSolver(separate(compiled.prox_affine), params or SolverParams()).solve()
        assignment = {var_id: value for var_id, value in result.solution.items()}
        objective = evaluate(instance.problem.objective, assignment)
        record = RunRecord(spec.name, result.status, float(objective),
                           result.diagnostics['iterations'], result.diagnostics['prox_calls'],
                           time.perf_counter() - started, None)
    except ProxCompError as e:
        record = RunRecord(spec.name, Constants.FAILED, None, 0, {},
                           time.perf_counter() - started, '%s: %s' % (type(e).__name__, e))
    logger.log('%s: %s in %.2fs', record.name, record.status, record.time, stage=Constants.STAGE_RUNNER)
    return record


def run_benchmarks(specs, params=None, workers=1, progress=False):
    """
    Run a benchmark suite.

    Args:
        specs (list): BenchmarkSpec instances.
        params (SolverParams): Solver parameters shared by every problem.
        workers (int): Number of problems solved concurrently.
        progress (bool): Show a progress bar.
    Returns:
        (RunReport): One record per spec, sorted by problem name.
    """
    if workers < 1:
        raise ValueError('workers must be positive')
    specs = list(specs)
    results = SafeDict()
    bar = tqdm(total=len(specs), disable=not progress, desc='benchmarks')

    def task(position, spec):
        results.add_to_dict(position, run_one(spec, params))
        bar.update(1)

    pending = list(enumerate(specs))
    while pending:
        batch, pending = pending[:workers], pending[workers:]
        threads = [DaemonThread(task, args=(position, spec)) for position, spec in batch]
        for thread in threads:
            thread.join()
        for (position, spec), thread in zip(batch, threads):
            if thread.exception is not None and results.get_from_dict(position) is None:
                results.add_to_dict(position, RunRecord(
                    spec.name, Constants.FAILED, None, 0, {}, 0.0,
                    '%s: %s' % (type(thread.exception).__name__, thread.exception)))
    bar.close()
    return RunReport([record for _, record in results.items()])
