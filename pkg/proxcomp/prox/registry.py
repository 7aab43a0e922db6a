"""
The prox function registry and the generalized prox evaluation

    argmin_x  lam * f(H x) + 1/2 ||A x - v||^2

used by the solver's block updates.
"""
import numpy as np
import scipy.sparse as sp

from proxcomp.linops.algebra import materialize, to_sparse
from proxcomp.linops.linear_op import DenseOp, DiagonalOp, LinearOp, ScalarOp, SparseOp
from proxcomp.objects.atoms import atom_signature
from proxcomp.prox import cones, elementwise, least_squares, matrix, vector
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import ProxError, UnknownAtomError

SEPARABLE = 'separable'
UNIFORM = 'uniform'
WEIGHTED = 'weighted'
EXCEPTION = 'exception'

_SIMPLE_MAPS = frozenset([Constants.MAP_IDENTITY, Constants.MAP_SCALAR, Constants.MAP_DIAGONAL])
_UNIFORM_MAPS = frozenset([Constants.MAP_IDENTITY, Constants.MAP_SCALAR])
_ALL_MAPS = _SIMPLE_MAPS | frozenset([Constants.MAP_GENERAL])


def map_class(op):
    """ Classify an operator as identity, scalar, diagonal or general. """
    if isinstance(op, ScalarOp):
        return Constants.MAP_IDENTITY if op.is_identity else Constants.MAP_SCALAR
    if isinstance(op, DiagonalOp):
        return Constants.MAP_DIAGONAL
    return Constants.MAP_GENERAL


class AffineMap(object):
    """
    An affine map z = sum_k op_k x[start_k:stop_k] + offset from a block vector
    x to the flattened argument of a prox function.
    """

    def __init__(self, segments, offset, dim, block_size):
        self._segments = tuple((int(s), int(e), op) for s, e, op in segments)
        self._offset = np.zeros(dim.size) if offset is None else np.asarray(offset, dtype=float).reshape(-1)
        self._dim = dim
        self._block_size = int(block_size)
        for start, stop, op in self._segments:
            if op.input_dim != stop - start or op.output_dim != dim.size:
                raise ProxError('segment [%d, %d) does not match a %dx%d operator'
                                % (start, stop, op.output_dim, op.input_dim))

    @classmethod
    def from_operator(cls, op, offset=None):
        from proxcomp.objects.expression import Dim
        return cls([(0, op.input_dim, op)], offset, Dim(op.output_dim, 1), op.input_dim)

    @property
    def segments(self):
        return self._segments

    @property
    def offset(self):
        return self._offset

    @property
    def dim(self):
        return self._dim

    @property
    def block_size(self):
        return self._block_size

    def apply(self, x):
        out = np.array(self._offset)
        for start, stop, op in self._segments:
            out += op.apply(x[start:stop])
        return out

    def adjoint(self, y):
        out = np.zeros(self._block_size)
        for start, stop, op in self._segments:
            out[start:stop] += op.transpose().apply(y)
        return out

    def elementwise(self):
        """
        Returns:
            (tuple or None): (start, stop, d) when the map is d * x[start:stop] + c
            with a nonzero scalar or diagonal d, None otherwise.
        """
        if len(self._segments) != 1:
            return None
        start, stop, op = self._segments[0]
        if isinstance(op, ScalarOp) and op.alpha != 0:
            return start, stop, np.full(op.output_dim, op.alpha)
        if isinstance(op, DiagonalOp) and np.all(op.diagonal != 0):
            return start, stop, np.array(op.diagonal)
        return None

    def single_operator(self):
        if len(self._segments) == 1:
            start, stop, op = self._segments[0]
            if start == 0 and stop == self._block_size:
                return op
        return None

    def matrix(self):
        """ The linear part over the whole block; sparse unless a segment is dense. """
        dense = any(not isinstance(op, (ScalarOp, DiagonalOp, SparseOp)) for _, _, op in self._segments)
        if dense:
            out = np.zeros((self._dim.size, self._block_size))
            for start, stop, op in self._segments:
                out[:, start:stop] += materialize(op)
            return out
        out = sp.csc_matrix((self._dim.size, self._block_size))
        for start, stop, op in self._segments:
            padded = sp.hstack([sp.csc_matrix((self._dim.size, start)), to_sparse(op),
                                sp.csc_matrix((self._dim.size, self._block_size - stop))])
            out = out + padded
        return sp.csc_matrix(out)


class ProxFunction(object):
    """
    A registered prox function.

    Args:
        name (str): Prox function name as printed in the IR.
        category (str): How the generalized prox is reduced to the kernel:
            SEPARABLE (per-coordinate weights), UNIFORM (one weight per
            argument), WEIGHTED (multi-argument kernel taking weights) or
            EXCEPTION (any maps, solved by linear algebra).
        method (str): Solution-method tag.
        kernel (callable): The kernel.
        inner (frozenset): Allowed map classes for H.
        outer (frozenset): Allowed map classes for A.
        indicator (bool): Whether the function is a cone indicator.
    """

    def __init__(self, name, category, method, kernel, inner, outer, indicator=False, atom=None):
        self.name = name
        self.category = category
        self.method = method
        self.kernel = kernel
        self.inner = frozenset(inner)
        self.outer = frozenset(outer)
        self.indicator = indicator
        self.atom = atom if atom is not None else name

    def value(self, vals, params):
        """
        Value scale * f(args), args given as 2-D arrays.

        Returns:
            (float): The value, +inf outside the domain.
        """
        scale = float(params.get('scale', 1.0))
        if self.name == 'null':
            return 0.0
        if self.name == 'affine':
            return scale * float(np.sum(vals[0]))
        signature = atom_signature(self.atom)
        raw = signature.value(vals, dict(params))
        total = float(np.sum(raw))
        if self.indicator:
            return total
        return scale * total

    def __repr__(self):
        return 'ProxFunction(%s, %s)' % (self.name, self.method)


PROX_FUNCTIONS = {}


def register_prox(function):
    PROX_FUNCTIONS[function.name] = function
    return function


def get_prox(name):
    try:
        return PROX_FUNCTIONS[name]
    except KeyError:
        raise UnknownAtomError('no prox function named %r' % name)


def has_prox(name):
    return name in PROX_FUNCTIONS


def _square_view(z, dim):
    return z.reshape((dim.rows, dim.cols), order='F')


def _flat(matrix_value):
    return np.asarray(matrix_value).reshape(-1, order='F')


def _symmetric(z, dim):
    m = _square_view(z, dim)
    return 0.5 * (m + m.T)


def _separable(name, method, kernel, indicator=False):
    register_prox(ProxFunction(name, SEPARABLE, method, kernel, _SIMPLE_MAPS, _SIMPLE_MAPS,
                               indicator=indicator))


def _uniform(name, method, kernel, indicator=False, atom=None):
    register_prox(ProxFunction(name, UNIFORM, method, kernel, _UNIFORM_MAPS, _UNIFORM_MAPS,
                               indicator=indicator, atom=atom))


_separable('abs', Constants.SOFT_THRESHOLD, lambda z, t, p: elementwise.soft_threshold(z, t))
_separable('norm1', Constants.SOFT_THRESHOLD, lambda z, t, p: elementwise.soft_threshold(z, t))
_separable('square', Constants.EXACT_EQUATION, lambda z, t, p: elementwise.prox_square(z, t))
_separable('hinge', Constants.SOFT_THRESHOLD, lambda z, t, p: elementwise.prox_hinge(z, t))
_separable('deadzone', Constants.SOFT_THRESHOLD,
           lambda z, t, p: elementwise.prox_deadzone(z, t, p['epsilon']))
_separable('quantile', Constants.SOFT_THRESHOLD,
           lambda z, t, p: elementwise.prox_quantile(z, t, p['alpha']))
_separable('neg_log', Constants.EXACT_EQUATION, lambda z, t, p: elementwise.prox_neg_log(z, t))
_separable('logistic', Constants.NEWTON, lambda z, t, p: elementwise.prox_logistic(z, t))
_separable('exp', Constants.NEWTON, lambda z, t, p: elementwise.prox_exp(z, t))
_separable('neg_entropy', Constants.NEWTON, lambda z, t, p: elementwise.prox_neg_entropy(z, t))
_separable('inv_pos', Constants.NEWTON, lambda z, t, p: elementwise.prox_inv_pos(z, t))
_separable(Constants.NONNEG, Constants.PROJECTION, lambda z, t, p: cones.project_nonneg(z),
           indicator=True)

_uniform('norm2', Constants.SOFT_THRESHOLD, lambda z, t, p, d: vector.prox_l2_group(z, t))
_uniform('norm_inf', Constants.PROJECTION, lambda z, t, p, d: vector.prox_linf(z, t))
_uniform('log_sum_exp', Constants.NEWTON, lambda z, t, p, d: vector.prox_log_sum_exp(z, t))
_uniform('tv_1d', Constants.SPECIAL_PURPOSE, lambda z, t, p, d: vector.prox_fused_lasso(z, t),
         atom='tv')
_uniform('neg_log_det', Constants.ORTHOGONALLY_INVARIANT,
         lambda z, t, p, d: _flat(matrix.prox_neg_log_det(_symmetric(z, d), t)))
_uniform('nuclear_norm', Constants.ORTHOGONALLY_INVARIANT,
         lambda z, t, p, d: _flat(matrix.prox_nuclear_norm(_square_view(z, d), t)))
_uniform('spectral_norm', Constants.ORTHOGONALLY_INVARIANT,
         lambda z, t, p, d: _flat(matrix.prox_spectral_norm(_square_view(z, d), t)))
_uniform(Constants.PSD, Constants.PROJECTION,
         lambda z, t, p, d: _flat(cones.project_psd(_symmetric(z, d))), indicator=True)


def _soc_kernel(zs, ws, t, params):
    x, s = cones.project_soc(zs[0], zs[1][0], _uniform_weight(ws[0], 'soc'),
                             _uniform_weight(ws[1], 'soc'))
    return [x, np.array([s])]


def _kl_div_kernel(zs, ws, t, params):
    x, y = elementwise.prox_kl_div(zs[0], zs[1], t, ws[0], ws[1])
    return [np.asarray(x), np.asarray(y)]


def _quad_over_lin_kernel(zs, ws, t, params):
    x, y = elementwise.prox_quad_over_lin(zs[0], zs[1][0], t, _uniform_weight(ws[0], 'quad_over_lin'),
                                          _uniform_weight(ws[1], 'quad_over_lin'))
    return [x, np.array([y])]


register_prox(ProxFunction(Constants.SOC, WEIGHTED, Constants.PROJECTION, _soc_kernel,
                           _UNIFORM_MAPS, _UNIFORM_MAPS, indicator=True))
register_prox(ProxFunction('kl_div', WEIGHTED, Constants.NEWTON, _kl_div_kernel,
                           _SIMPLE_MAPS, _SIMPLE_MAPS))
register_prox(ProxFunction('quad_over_lin', WEIGHTED, Constants.EXACT_EQUATION,
                           _quad_over_lin_kernel, _UNIFORM_MAPS, _UNIFORM_MAPS))

register_prox(ProxFunction('null', EXCEPTION, Constants.LINEAR_SOLVE, None, _ALL_MAPS, _ALL_MAPS))
register_prox(ProxFunction('affine', EXCEPTION, Constants.LINEAR_SOLVE, None, _ALL_MAPS, _ALL_MAPS))
register_prox(ProxFunction('sum_squares', EXCEPTION, Constants.LINEAR_SOLVE, None, _ALL_MAPS,
                           _ALL_MAPS))
register_prox(ProxFunction(Constants.ZERO, EXCEPTION, Constants.LINEAR_SOLVE, None, _ALL_MAPS,
                           _ALL_MAPS, indicator=True))


def _uniform_weight(w, name):
    w = np.asarray(w, dtype=float)
    if not np.allclose(w, w.flat[0], rtol=1e-12, atol=0.0):
        raise ProxError('%s needs a uniform metric on each argument' % name)
    return float(w.flat[0])


def _as_matrix(op, cols=None):
    if op is None:
        return sp.csc_matrix((0, cols or 0))
    if sp.issparse(op):
        return sp.csc_matrix(op)
    if isinstance(op, (ScalarOp, DiagonalOp, SparseOp)):
        return to_sparse(op)
    if isinstance(op, DenseOp):
        return sp.csc_matrix(op.matrix)
    if isinstance(op, LinearOp):
        return sp.csc_matrix(materialize(op))
    return sp.csc_matrix(np.atleast_2d(np.asarray(op, dtype=float)))


class ProxRequest(object):
    """
    One generalized prox evaluation.

    Args:
        v (ndarray): Point in the range of A.
        lam (float): Prox parameter, positive.
        H: The inner map: a LinearOp, an AffineMap or a list of AffineMaps (one
            per argument of a multi-argument function).
        A: The outer map: a LinearOp or a scipy sparse matrix; None for no rows.
        params (dict): Function parameters, including the weight 'scale'.
        linear (ndarray): Folded linear term g, objective adds g^T x.
        quad (ndarray): Folded diagonal quadratic a, objective adds x^T diag(a) x.
        cache (FactorCache): Cache for factorizations reused across calls.
    """

    def __init__(self, v, lam, H, A=None, params=None, linear=None, quad=None, cache=None):
        lam = float(lam)
        if not lam > 0:
            raise ValueError('prox parameter must be positive, got %r' % lam)
        if isinstance(H, LinearOp):
            H = [AffineMap.from_operator(H)]
        elif isinstance(H, AffineMap):
            H = [H]
        self.args = list(H)
        block_size = self.args[0].block_size
        self.A = _as_matrix(A, block_size)
        if self.A.shape[1] != block_size:
            raise ProxError('outer map has %d columns, block has %d' % (self.A.shape[1], block_size))
        self.v = np.zeros(0) if v is None else np.asarray(v, dtype=float).reshape(-1)
        if self.v.size != self.A.shape[0]:
            raise ProxError('v has %d entries, outer map has %d rows' % (self.v.size, self.A.shape[0]))
        self.lam = lam
        self.params = dict(params or {})
        self.linear = None if linear is None else np.asarray(linear, dtype=float)
        self.quad = None if quad is None else np.asarray(quad, dtype=float)
        self.cache = cache
        self.block_size = block_size

    def metric(self):
        """ Q = A^T A + 2 lam diag(quad) and r = A^T v - lam * linear. """
        gram = (self.A.T @ self.A).tocsc()
        rhs = np.asarray(self.A.T @ self.v).reshape(-1)
        if self.quad is not None:
            gram = (gram + sp.diags(2.0 * self.lam * self.quad)).tocsc()
        if self.linear is not None:
            rhs = rhs - self.lam * self.linear
        return gram, rhs


def eval_prox(f, req):
    """
    Evaluate the generalized prox of a registered function.

    When A^T A (plus folded quadratics) is diagonal with entries q and each
    argument is elementwise affine z = d * x + c, the problem reduces to the
    kernel's weighted prox at zhat = c + d * r / q with weights q / d^2.

    Args:
        f (ProxFunction or str): The function.
        req (ProxRequest): The request.
    Returns:
        (ndarray): The minimizing block vector.
    Raises:
        ProxError: The (H, A) combination is outside the function's allowed set.
    """
    if isinstance(f, str):
        f = get_prox(f)
    metric, rhs = req.metric()
    scale = float(req.params.get('scale', 1.0))
    if f.category == EXCEPTION:
        return _eval_exception(f, req, metric, rhs, scale)

    diagonal = metric.diagonal()
    if (metric - sp.diags(diagonal)).count_nonzero() != 0:
        raise ProxError('%s needs a diagonal outer Gram matrix' % f.name)
    t = req.lam * scale
    x = np.zeros(req.block_size)
    covered = np.zeros(req.block_size, dtype=bool)
    zhats, weights, layout = [], [], []
    for arg in req.args:
        elementwise_map = arg.elementwise()
        if elementwise_map is None:
            raise ProxError('%s needs an elementwise inner map' % f.name)
        start, stop, d = elementwise_map
        if np.any(covered[start:stop]):
            raise ProxError('%s arguments must use disjoint variables' % f.name)
        covered[start:stop] = True
        q = diagonal[start:stop]
        if np.any(q <= 0):
            raise ProxError('%s needs a positive definite outer metric' % f.name)
        zhats.append(arg.offset + d * rhs[start:stop] / q)
        weights.append(q / (d * d))
        layout.append((start, stop, d, arg.offset))
    if np.any(~covered):
        # coordinates outside every argument only see the quadratic
        rest = ~covered
        if np.any(diagonal[rest] <= 0):
            raise ProxError('%s leaves unconstrained coordinates in its block' % f.name)
        x[rest] = rhs[rest] / diagonal[rest]

    if f.category == SEPARABLE:
        results = [f.kernel(zhats[0], t / weights[0], req.params)]
    elif f.category == UNIFORM:
        results = [f.kernel(zhats[0], t / _uniform_weight(weights[0], f.name), req.params,
                            req.args[0].dim)]
    else:
        results = f.kernel(zhats, weights, t, req.params)
    for (start, stop, d, c), z in zip(layout, results):
        x[start:stop] = (np.asarray(z, dtype=float).reshape(-1) - c) / d
    return x


def _eval_exception(f, req, metric, rhs, scale):
    if f.name == 'null':
        return least_squares.solve_null(metric, rhs, req.cache, ('null', req.lam))
    if f.name == 'affine':
        arg = req.args[0]
        rhs = rhs - req.lam * scale * arg.adjoint(np.ones(arg.dim.size))
        return least_squares.solve_null(metric, rhs, req.cache, ('affine', req.lam))
    if f.name == 'sum_squares':
        return least_squares.prox_sum_squares_general(req.args[0], metric, rhs, req.lam, scale,
                                                      req.cache)
    return least_squares.prox_zero(req.args[0], metric, rhs, req.lam, req.cache)


def evaluate_prox_value(name, vals, params):
    """ Value of a prox term given its argument values as 2-D arrays. """
    return get_prox(name).value(vals, params)
