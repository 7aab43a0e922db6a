import numpy as np
from scipy.special import logsumexp, wrightomega

from proxcomp.prox.elementwise import guarded_newton


def project_l1_ball(v, radius=1.0, seed=0):
    """
    Euclidean projection onto {x : ||x||_1 <= radius} in expected linear time,
    by randomized selection of the soft-threshold level.

    Args:
        v (ndarray): Point to project.
        radius (float): Ball radius, positive.
        seed (int): Seed of the pivot generator; fixed for reproducible pivots.
    Returns:
        (ndarray): The projection.
    """
    v = np.asarray(v, dtype=float)
    u = np.abs(v)
    if u.sum() <= radius:
        return v.copy()
    rng = np.random.default_rng(seed)
    candidates = u
    total = 0.0
    count = 0
    while candidates.size:
        pivot = candidates[rng.integers(candidates.size)]
        upper = candidates[candidates >= pivot]
        upper_sum = upper.sum()
        if (total + upper_sum) - (count + upper.size) * pivot < radius:
            total += upper_sum
            count += upper.size
            candidates = candidates[candidates < pivot]
        else:
            above = candidates[candidates > pivot]
            ties = upper.size - above.size - 1
            candidates = np.concatenate([above, np.full(ties, pivot)])
    theta = (total - radius) / count
    return np.sign(v) * np.maximum(u - theta, 0.0)


def project_l1_ball_sorted(v, radius=1.0):
    """ Sort-based O(n log n) projection onto the l1 ball; reference for the fast one. """
    v = np.asarray(v, dtype=float)
    u = np.abs(v)
    if u.sum() <= radius:
        return v.copy()
    s = np.sort(u)[::-1]
    cumulative = np.cumsum(s) - radius
    ks = np.arange(1, s.size + 1)
    rho = np.nonzero(s - cumulative / ks > 0)[0][-1]
    theta = cumulative[rho] / (rho + 1.0)
    return np.sign(v) * np.maximum(u - theta, 0.0)


def prox_linf(v, t):
    """ Prox of t ||x||_inf through the Moreau decomposition with the l1 ball. """
    v = np.asarray(v, dtype=float)
    return v - t * project_l1_ball(v / t, 1.0)


def prox_l2_group(v, t):
    """ Group soft thresholding max(1 - t / ||v||_2, 0) v. """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= t:
        return np.zeros_like(v)
    return (1.0 - t / norm) * v


def prox_log_sum_exp(v, t):
    """
    Prox of t log(sum(exp(x))). At the solution x = v - s with
    s_i = omega(log t + v_i - mu), omega the Wright omega function and mu the
    log-sum-exp of x; mu is the root of a monotone scalar equation bracketed
    by [lse(v) - t, lse(v)].
    """
    v = np.asarray(v, dtype=float)
    log_t = np.log(t)

    def weights(mu):
        return np.real(wrightomega(log_t + v - mu))

    def g(mu):
        return np.array([1.0 - weights(mu[0]).sum() / t])

    def dg(mu):
        w = weights(mu[0])
        return np.array([np.sum(w / (1.0 + w)) / t])

    top = logsumexp(v)
    mu = guarded_newton(g, dg, np.array([top - t]), np.array([top]))[0]
    return v - weights(mu)


def prox_fused_lasso(v, t):
    """
    Prox of t sum |x_i - x_{i+1}| by the direct taut-string scan, linear in
    practice. Segment bounds vmin/vmax and the dual running sums umin/umax are
    updated one sample at a time; a jump is emitted when a bound is violated.
    """
    y = np.asarray(v, dtype=float).reshape(-1)
    n = y.size
    out = np.empty(n)
    if n == 0:
        return out
    if t <= 0:
        return y.copy()
    k = k0 = kplus = kminus = 0
    umin, umax = t, -t
    vmin, vmax = y[0] - t, y[0] + t
    while True:
        while k == n - 1:
            if umin < 0.0:
                out[k0:kminus + 1] = vmin
                k0 = k = kminus = kminus + 1
                vmin = y[k]
                umin = t
                umax = vmin + umin - vmax
            elif umax > 0.0:
                out[k0:kplus + 1] = vmax
                k0 = k = kplus = kplus + 1
                vmax = y[k]
                umax = -t
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                out[k0:k + 1] = vmin
                return out
        umin += y[k + 1] - vmin
        if umin < -t:
            out[k0:kminus + 1] = vmin
            k0 = k = kminus = kplus = kminus + 1
            vmin = y[k]
            vmax = vmin + 2.0 * t
            umin, umax = t, -t
            continue
        umax += y[k + 1] - vmax
        if umax > t:
            out[k0:kplus + 1] = vmax
            k0 = k = kminus = kplus = kplus + 1
            vmax = y[k]
            vmin = vmax - 2.0 * t
            umin, umax = t, -t
            continue
        k += 1
        if umin >= t:
            kminus = k
            vmin += (umin - t) / (kminus - k0 + 1)
            umin = t
        if umax <= -t:
            kplus = k
            vmax += (umax + t) / (kplus - k0 + 1)
            umax = -t
