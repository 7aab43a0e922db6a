"""
Separable prox kernels. Every kernel takes the point v and a threshold t that
is either a scalar or an array matching v, and returns argmin t f(x) + 1/2 (x - v)^2
coordinate by coordinate.
"""
import numpy as np

from proxcomp.utils.constants import Constants


def soft_threshold(v, t):
    """
    Soft thresholding: v - t above t, v + t below -t, and 0 in between.

    Args:
        v (ndarray): Input point.
        t (float or ndarray): Threshold, positive.
    Returns:
        (ndarray): The prox of t |x| at v.
    """
    v = np.asarray(v, dtype=float)
    return np.where(v > t, v - t, np.where(v < -t, v + t, 0.0))


def prox_hinge(v, t):
    v = np.asarray(v, dtype=float)
    return np.where(v > t, v - t, np.where(v < 0.0, v, 0.0))


def prox_deadzone(v, t, epsilon):
    v = np.asarray(v, dtype=float)
    mag = np.abs(v)
    inner = np.where(mag <= epsilon, v, np.sign(v) * epsilon)
    return np.where(mag > epsilon + t, v - np.sign(v) * t, inner)


def prox_quantile(v, t, alpha):
    """ Asymmetric soft thresholding for max(alpha x, (alpha - 1) x). """
    v = np.asarray(v, dtype=float)
    upper = alpha * t
    lower = (1.0 - alpha) * t
    return np.where(v > upper, v - upper, np.where(v < -lower, v + lower, 0.0))


def prox_square(v, t):
    return np.asarray(v, dtype=float) / (1.0 + 2.0 * t)


def prox_neg_log(v, t):
    v = np.asarray(v, dtype=float)
    return 0.5 * (v + np.sqrt(v * v + 4.0 * t))


def guarded_newton(g, dg, lo, hi, x0=None, tol=Constants.NEWTON_TOL,
                   max_iters=Constants.NEWTON_MAX_ITERS):
    """
    Root of an increasing function on a bracket, by Newton steps that fall
    back to bisection whenever a step leaves the bracket.

    Args:
        g (callable): Increasing function, vectorized.
        dg (callable): Its derivative.
        lo (ndarray): Points with g(lo) <= 0.
        hi (ndarray): Points with g(hi) >= 0.
        x0 (ndarray): Starting points inside the brackets.
        tol (float): Residual tolerance, relative to max(1, |x|).
        max_iters (int): Iteration cap.
    Returns:
        (ndarray): The roots.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.array(x0, dtype=float), lo, hi)
    for _ in range(max_iters):
        gx = g(x)
        done = np.abs(gx) <= tol * np.maximum(1.0, np.abs(x))
        if np.all(done | (hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)))):
            break
        lo = np.where(gx < 0, x, lo)
        hi = np.where(gx > 0, x, hi)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            step = x - gx / dg(x)
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), step))
    return x


def _expand_lower(g, start, width):
    """ Walk down from start until g is nonpositive, doubling the step. """
    lo = np.array(start, dtype=float)
    step = np.maximum(np.array(width, dtype=float), 1.0)
    for _ in range(200):
        bad = g(lo) > 0
        if not np.any(bad):
            break
        lo = np.where(bad, lo - step, lo)
        step = step * 2.0
    return lo


def prox_logistic(v, t):
    v = np.asarray(v, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), v.shape)

    def sigmoid(x):
        return 0.5 * (1.0 + np.tanh(0.5 * x))

    def g(x):
        return t * sigmoid(x) + x - v

    def dg(x):
        s = sigmoid(x)
        return t * s * (1.0 - s) + 1.0

    return guarded_newton(g, dg, v - t, v, x0=v - 0.5 * t)


def prox_exp(v, t):
    v = np.asarray(v, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), v.shape)

    def g(x):
        with np.errstate(over='ignore'):
            return t * np.exp(x) + x - v

    def dg(x):
        with np.errstate(over='ignore'):
            return t * np.exp(x) + 1.0

    lo = _expand_lower(g, v - 1.0, 1.0)
    return guarded_newton(g, dg, lo, v, x0=np.minimum(v, lo + 1.0))


def prox_neg_entropy(v, t):
    """ Prox of x log x, solved for y = log x to stay inside the domain. """
    v = np.asarray(v, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), v.shape)

    def g(y):
        with np.errstate(over='ignore'):
            return t * (y + 1.0) + np.exp(y) - v

    def dg(y):
        with np.errstate(over='ignore'):
            return t + np.exp(y)

    # t (y + 1) < v at the root, so v / t - 1 bounds it from above
    ceiling = v / t - 1.0
    hi = np.minimum(ceiling, np.log1p(np.abs(v)) + 1.0)
    step = np.ones_like(hi)
    for _ in range(200):
        low = g(hi) < 0
        if not np.any(low):
            break
        hi = np.where(low, np.minimum(hi + step, ceiling), hi)
        step = step * 2.0
    lo = _expand_lower(g, hi - 1.0, 1.0)
    y = guarded_newton(g, dg, lo, hi)
    return np.exp(y)


def prox_inv_pos(v, t):
    v = np.asarray(v, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), v.shape)

    def g(x):
        with np.errstate(divide='ignore'):
            return x - v - t / (x * x)

    def dg(x):
        with np.errstate(divide='ignore'):
            return 1.0 + 2.0 * t / (x * x * x)

    hi = np.maximum(v, 0.0) + np.cbrt(t) + 1.0
    lo = np.minimum(np.cbrt(t), hi) * 0.5
    for _ in range(2000):
        bad = g(lo) > 0
        if not np.any(bad):
            break
        lo = np.where(bad, lo * 0.5, lo)
    return guarded_newton(g, dg, lo, hi)


def prox_kl_div(a, b, t, wx=1.0, wy=1.0):
    """
    Weighted prox of kl_div(x, y) = x log(x / y) - x + y:
    argmin t f(x, y) + wx/2 (x - a)^2 + wy/2 (y - b)^2, coordinatewise.

    Eliminating x through the stationarity condition in y leaves an increasing
    scalar equation in y.

    Returns:
        (tuple): The x and y parts.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast(a, b).shape
    t = np.broadcast_to(np.asarray(t, dtype=float), shape)
    wx = np.broadcast_to(np.asarray(wx, dtype=float), shape)
    wy = np.broadcast_to(np.asarray(wy, dtype=float), shape)

    def ratio(y):
        return 1.0 + wy * (y - b) / t

    def g(y):
        with np.errstate(divide='ignore', invalid='ignore'):
            r = ratio(y)
            return np.where(r > 0, t * np.log(np.where(r > 0, r, 1.0)) + wx * (y * r - a), -np.inf)

    def dg(y):
        r = ratio(y)
        with np.errstate(divide='ignore', invalid='ignore'):
            return wy / r + wx * (r + wy * y / t)

    lo = np.maximum(0.0, b - t / wy)
    g_lo = g(lo)
    boundary = (lo == 0.0) & (g_lo >= 0)
    hi = np.maximum(lo, np.maximum(np.abs(a), np.abs(b))) + 1.0
    for _ in range(200):
        low = g(hi) < 0
        if not np.any(low):
            break
        hi = np.where(low, hi * 2.0, hi)
    y = guarded_newton(g, dg, lo, hi)
    x = y * ratio(y)
    x = np.where(boundary, 0.0, x)
    y = np.where(boundary, 0.0, y)
    return x, y


def quad_over_lin_objective(x, y, a, b, t, wx, wy):
    sq = float(np.sum(x * x))
    if y > 0:
        f = sq / y
    elif y == 0 and sq == 0:
        f = 0.0
    else:
        return np.inf
    return t * f + 0.5 * wx * float(np.sum((x - a) ** 2)) + 0.5 * wy * (y - b) ** 2


def prox_quad_over_lin(a, b, t, wx=1.0, wy=1.0):
    """
    Weighted prox of ||x||^2 / y with scalar y. The minimizer over x for fixed
    y is a scaling of a, which leaves a cubic in y; every real positive root is
    a candidate, together with the origin.

    Returns:
        (tuple): The x part and the scalar y.
    """
    a = np.asarray(a, dtype=float)
    b = float(b)
    norm_sq = float(np.sum(a * a))
    coefficients = [wy * wx * wx,
                    wy * (4.0 * t * wx - b * wx * wx),
                    wy * (4.0 * t * t - 4.0 * b * t * wx),
                    -4.0 * wy * b * t * t - t * wx * wx * norm_sq]
    candidates = [(np.zeros_like(a), 0.0), (np.zeros_like(a), max(b, 0.0))]
    for root in np.roots(coefficients):
        if abs(root.imag) <= 1e-9 * max(1.0, abs(root.real)) and root.real > 0:
            y = float(root.real)
            candidates.append((wx * a * y / (wx * y + 2.0 * t), y))
    best = min(candidates, key=lambda c: quad_over_lin_objective(c[0], c[1], a, b, t, wx, wy))
    return best
