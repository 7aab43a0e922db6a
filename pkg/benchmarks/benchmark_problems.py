from proxcomp.components import SolverParams, compile_problem, separate, solve
from proxcomp.linops import OperationCounter
from proxcomp.objects import Logger
from proxcomp.problems import BenchmarkSpec, generate, problem_names, run_one
from proxcomp.utils.constants import Constants
import pytest

Logger.DISABLED = True


def compile_and_separate(problem):
    return separate(compile_problem(problem).prox_affine)


@pytest.mark.mv_lasso
def test_mv_lasso_factors_once(benchmark):
    instance = generate(BenchmarkSpec('mv_lasso', m=40, n=400, k=10, seed=0))
    separable = compile_and_separate(instance.problem)
    counter = OperationCounter.get_instance()
    counter.reset()
    result = benchmark.pedantic(solve, args=(separable, SolverParams(max_iters=200)), rounds=1)
    assert result.diagnostics['iterations'] > 1
    # only the 400 x 400 block of I_k (x) X^T X is factored, never the 4000 x 4000 system
    assert len(counter.factorizations) == 1
    assert counter.factorizations[0][1] == 400


@pytest.mark.compile
@pytest.mark.parametrize('name', ['lasso', 'fused_lasso', 'covsel', 'robust_pca', 'qp'])
def test_compile(benchmark, name):
    instance = generate(BenchmarkSpec(name, m=50, seed=0))
    separable = benchmark.pedantic(compile_and_separate, args=(instance.problem,), rounds=5)
    assert len(separable) >= 1


@pytest.mark.suite
@pytest.mark.parametrize('name', problem_names())
def test_suite(benchmark, name):
    spec = BenchmarkSpec(name, m=20, k=3, seed=0)
    record = benchmark.pedantic(run_one, args=(spec, SolverParams(max_iters=500)), rounds=1)
    assert record.name == name
    assert record.status in (Constants.OPTIMAL, Constants.MAX_ITERS, Constants.FAILED)
