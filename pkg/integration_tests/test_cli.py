import io
import json
import os
import tempfile
import unittest

from proxcomp.cli import main
from proxcomp.objects import Logger, Problem, Variable, write_program
from proxcomp.objects.atoms import sum_squares
from proxcomp.problems import BenchmarkSpec, generate
from proxcomp.utils.constants import Constants

Logger.DISABLED = True


class TestCli(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.path = os.path.join(self.directory, 'lasso.pa')
        write_program(self.path, generate(BenchmarkSpec('lasso', m=5, seed=3)).problem)

    def run_cli(self, *argv):
        out = io.StringIO()
        code = main(list(argv), out)
        return code, out.getvalue()

    def test_compile(self):
        code, text = self.run_cli('compile', self.path)
        self.assertEqual(code, Constants.EXIT_OK)
        lines = text.splitlines()
        self.assertEqual(lines[0], 'objective:')
        self.assertTrue(lines[1].strip().startswith('sum_squares('))
        self.assertTrue(lines[2].strip().startswith('norm1('))

    def test_compile_separable_with_trace(self):
        code, text = self.run_cli('compile', self.path, '--emit', 'separable', '--trace')
        self.assertEqual(code, Constants.EXIT_OK)
        self.assertIn('constraints:', text)
        self.assertTrue(text.startswith('# '))

    def test_compile_to_file_and_solve_it(self):
        output = os.path.join(self.directory, 'lasso.sep')
        code, _ = self.run_cli('compile', self.path, '--emit', 'separable', '-o', output)
        self.assertEqual(code, Constants.EXIT_OK)
        self.assertTrue(os.path.exists(output + '.dat'))
        code, text = self.run_cli('solve', output, '--max-iters', '20')
        self.assertEqual(code, Constants.EXIT_OK)
        self.assertIn('status:', text)

    def test_check(self):
        code, text = self.run_cli('check', self.path)
        self.assertEqual(code, Constants.EXIT_OK)
        self.assertEqual(text.strip(), 'accepted')
        code, text = self.run_cli('compile', self.path, '--check-only')
        self.assertEqual(code, Constants.EXIT_OK)

    def test_check_rejects(self):
        path = os.path.join(self.directory, 'concave.pa')
        write_program(path, Problem(-1.0 * sum_squares(Variable(3, name='x'))))
        code, text = self.run_cli('check', path)
        self.assertEqual(code, Constants.EXIT_USER_ERROR)
        self.assertTrue(text.startswith('rejected at objective'))
        code, _ = self.run_cli('compile', path)
        self.assertEqual(code, Constants.EXIT_USER_ERROR)

    def test_solve_json(self):
        code, text = self.run_cli('solve', self.path, '--max-iters', '30', '--json')
        self.assertEqual(code, Constants.EXIT_OK)
        result = json.loads(text)
        self.assertIn(result['status'], (Constants.OPTIMAL, Constants.MAX_ITERS))
        self.assertEqual(list(result['solution']), ['x'])
        self.assertEqual(len(result['solution']['x']), 50)

    def test_solve_trace_csv(self):
        trace = os.path.join(self.directory, 'trace.csv')
        code, _ = self.run_cli('solve', self.path, '--max-iters', '10', '--trace-csv', trace)
        self.assertEqual(code, Constants.EXIT_OK)
        with open(trace) as handle:
            self.assertTrue(handle.readline().startswith('iter,objective'))

    def test_bench(self):
        code, text = self.run_cli('bench', '--problem', 'tv_1d', '--m', '5', '--max-iters', '20')
        self.assertEqual(code, Constants.EXIT_OK)
        self.assertIn('tv_1d', text)

    def test_bench_json(self):
        code, text = self.run_cli('bench', '--problem', 'tv_1d', '--problem', 'lasso', '--m', '5',
                                  '--max-iters', '10', '--json')
        self.assertEqual(code, Constants.EXIT_OK)
        self.assertEqual([row['problem'] for row in json.loads(text)], ['lasso', 'tv_1d'])

    def test_user_errors(self):
        code, _ = self.run_cli('compile', os.path.join(self.directory, 'missing.pa'))
        self.assertEqual(code, Constants.EXIT_USER_ERROR)
        code, _ = self.run_cli('compile')
        self.assertEqual(code, Constants.EXIT_USER_ERROR)
        code, _ = self.run_cli('bench', '--problem', 'no_such_problem')
        self.assertEqual(code, Constants.EXIT_USER_ERROR)
        code, _ = self.run_cli('solve', self.path, '--lambda', '-1')
        self.assertEqual(code, Constants.EXIT_USER_ERROR)


if __name__ == '__main__':
    unittest.main()
