from proxcomp.linops import DenseOp, KronOp, ScalarOp
from proxcomp.prox import prox_fused_lasso, project_l1_ball, soft_threshold
from proxcomp.prox.registry import ProxRequest, eval_prox
import numpy as np
import pytest


def fused_lasso(v, t):
    for _ in range(10):
        x = prox_fused_lasso(v, t)
    return x


def l1_projection(v):
    for _ in range(10):
        x = project_l1_ball(v, 1.0)
    return x


def kron_sum_squares(request):
    for _ in range(10):
        x = eval_prox('sum_squares', request)
    return x


@pytest.mark.fused_lasso
@pytest.mark.parametrize('n', [1000, 10000, 100000])
def test_fused_lasso_prox(benchmark, n):
    rng = np.random.default_rng(n)
    v = np.repeat(rng.standard_normal(n // 10), 10) + 0.1 * rng.standard_normal(n)
    x = benchmark.pedantic(fused_lasso, args=(v, 0.5), rounds=5)
    assert x.shape == (n,)
    assert abs(x.sum() - v.sum()) <= 1e-6 * n


@pytest.mark.l1_projection
@pytest.mark.parametrize('n', [1000, 100000])
def test_l1_projection(benchmark, n):
    v = np.random.default_rng(n).standard_normal(n)
    x = benchmark.pedantic(l1_projection, args=(v,), rounds=5)
    assert np.abs(x).sum() <= 1.0 + 1e-9


@pytest.mark.soft_threshold
def test_soft_threshold(benchmark):
    v = np.random.default_rng(0).standard_normal(10 ** 6)
    x = benchmark.pedantic(soft_threshold, args=(v, 0.5), rounds=10)
    assert np.all(np.abs(x) <= np.maximum(np.abs(v) - 0.5, 0.0) + 1e-12)


@pytest.mark.kron
def test_kron_sum_squares(benchmark):
    rng = np.random.default_rng(1)
    m, n, k = 40, 400, 10
    op = KronOp(ScalarOp(1.0, k), DenseOp(rng.standard_normal((m, n))))
    request = ProxRequest(rng.standard_normal(n * k), 1.0, op, ScalarOp(1.0, n * k))
    x = benchmark.pedantic(kron_sum_squares, args=(request,), rounds=3)
    assert x.shape == (n * k,)
