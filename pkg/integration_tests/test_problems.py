import json
import os
import tempfile
import unittest

import numpy as np

from proxcomp.components.compiler import compile_problem
from proxcomp.components.dcp import verify
from proxcomp.components.separator import separate
from proxcomp.components.solver import SolverParams
from proxcomp.objects import Logger
from proxcomp.objects.text_format import serialize_data, serialize_problem
from proxcomp.problems import (BenchmarkSpec, RunRecord, RunReport, generate, problem_names,
                               run_benchmarks, run_one)
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import UnknownAtomError

Logger.DISABLED = True

SMALL = {'m': 10, 'k': 3, 'density': 0.3}


class TestLibrary(unittest.TestCase):

    def test_problem_names(self):
        names = problem_names()
        self.assertEqual(len(names), 18)
        for name in ('lasso', 'mv_lasso', 'fused_lasso', 'tv_1d', 'hinge_l1', 'logreg_l1_sparse',
                     'huber', 'lp', 'qp', 'basis_pursuit', 'covsel', 'robust_pca'):
            self.assertIn(name, names)

    def test_every_problem_is_dcp_and_compiles(self):
        for name in problem_names():
            instance = generate(BenchmarkSpec(name, **SMALL))
            verdict = verify(instance.problem)
            self.assertTrue(verdict.accepted, '%s: %s' % (name, verdict.describe()))
            separable = separate(compile_problem(instance.problem).prox_affine)
            self.assertGreaterEqual(len(separable), 1, name)

    def test_generation_is_deterministic(self):
        for name in problem_names():
            first = generate(BenchmarkSpec(name, seed=5, **SMALL)).problem
            second = generate(BenchmarkSpec(name, seed=5, **SMALL)).problem
            self.assertEqual(serialize_problem(first), serialize_problem(second), name)
            self.assertEqual(serialize_data(first), serialize_data(second), name)

    def test_seed_changes_data(self):
        first = generate(BenchmarkSpec('lasso', m=10, seed=1)).data['X']
        second = generate(BenchmarkSpec('lasso', m=10, seed=2)).data['X']
        self.assertFalse(np.array_equal(first, second))

    def test_default_sizes(self):
        self.assertEqual(generate(BenchmarkSpec('lasso', m=10)).data['X'].shape, (10, 100))
        self.assertEqual(generate(BenchmarkSpec('huber', m=10)).data['X'].shape, (10, 5))
        self.assertEqual(generate(BenchmarkSpec('lp', m=10)).data['A'].shape, (10, 20))
        instance = generate(BenchmarkSpec('mv_lasso', m=10, n=20, k=4))
        self.assertEqual(instance.variables['Theta'].dim.cols, 4)

    def test_spec_validation(self):
        with self.assertRaises(UnknownAtomError):
            BenchmarkSpec('no_such_problem')
        with self.assertRaises(ValueError):
            BenchmarkSpec('lasso', m=0)
        with self.assertRaises(ValueError):
            BenchmarkSpec('lasso', density=0.0)

    def test_seed_from_environment(self):
        previous = os.environ.get(Constants.SEED_ENV)
        os.environ[Constants.SEED_ENV] = '42'
        try:
            self.assertEqual(BenchmarkSpec('lasso').seed, 42)
        finally:
            if previous is None:
                del os.environ[Constants.SEED_ENV]
            else:
                os.environ[Constants.SEED_ENV] = previous


class TestRunner(unittest.TestCase):

    def setUp(self):
        self.params = SolverParams(max_iters=50)

    def test_run_one(self):
        record = run_one(BenchmarkSpec('tv_1d', m=5), self.params)
        self.assertIn(record.status, (Constants.OPTIMAL, Constants.MAX_ITERS))
        self.assertTrue(np.isfinite(record.objective))
        self.assertGreater(record.iterations, 0)
        self.assertIsNone(record.error)

    def test_failure_is_a_status(self):
        record = run_one(BenchmarkSpec('lasso', m=5, params={'lam': -1.0}), self.params)
        self.assertEqual(record.status, Constants.FAILED)
        self.assertIsNone(record.objective)
        self.assertTrue(record.error.startswith('DcpError'))

    def test_run_benchmarks(self):
        specs = [BenchmarkSpec('tv_1d', m=5), BenchmarkSpec('lasso', m=5, params={'lam': -1.0}),
                 BenchmarkSpec('basis_pursuit', m=5)]
        report = run_benchmarks(specs, self.params, workers=2)
        self.assertEqual(len(report), 3)
        self.assertEqual([record.name for record in report], ['basis_pursuit', 'lasso', 'tv_1d'])
        self.assertEqual(report.record('lasso').status, Constants.FAILED)
        rows = json.loads(report.to_json())
        self.assertEqual(rows[2]['problem'], 'tv_1d')
        self.assertIn('Objective', report.to_table().splitlines()[0])

    def test_report_csv(self):
        report = RunReport([RunRecord('b', Constants.MAX_ITERS, 1.0, 10, {'norm1': 10}, 0.5, None),
                            RunRecord('a', Constants.OPTIMAL, 2.0, 5, {'norm1': 5}, 0.1, None)])
        path = os.path.join(tempfile.mkdtemp(), 'report.csv')
        report.to_csv(path)
        with open(path) as handle:
            lines = handle.read().splitlines()
        self.assertEqual(lines[0], 'problem,status,objective,iterations,prox_calls,time,error')
        self.assertTrue(lines[1].startswith('a,'))

    def test_workers_must_be_positive(self):
        with self.assertRaises(ValueError):
            run_benchmarks([BenchmarkSpec('tv_1d', m=5)], workers=0)


if __name__ == '__main__':
    unittest.main()
