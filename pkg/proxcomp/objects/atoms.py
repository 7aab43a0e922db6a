"""
Atom registry and modeling-layer constructors.

Every atom carries a signature (arity, output dimension, parameters), its DCP
attributes and a value function. Linear atoms are rewritten into LINEAR_MAP
nodes by the compiler; the others are matched against prox rules.
"""
import numpy as np
import scipy.special

from proxcomp.objects.expression import (SCALAR_DIM, Constant, Dim, Expr, as_expr,
                                         freeze_params)
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import DimensionError, UnknownAtomError

__all__ = ['AtomSignature', 'AtomDcpInfo', 'register_atom', 'atom_signature', 'build_atom',
           'sum_squares', 'norm1', 'norm2', 'norm_inf', 'abs_', 'square', 'hinge', 'deadzone',
           'quantile', 'logistic', 'inv_pos', 'log', 'neg_log', 'exp', 'entropy', 'neg_entropy',
           'kl_div', 'quad_over_lin', 'log_sum_exp', 'tv', 'log_det', 'neg_log_det',
           'nuclear_norm', 'spectral_norm', 'huber', 'sum_entries', 'hstack', 'vstack', 'reshape',
           'transpose', 'trace', 'neg', 'mul', 'matmul', 'index']

# Monotonicity entries besides the three Constants values.
SIGNED = 'signed'
BY_COEFFICIENT = 'by-coefficient'


class AtomDcpInfo(object):
    """
    DCP attributes of an atom.

    Args:
        curvature (str): Curvature of the atom as a function.
        monotonicity (tuple): One entry per argument; the last entry repeats for
            variadic atoms. SIGNED means nondecreasing on nonnegative and
            nonincreasing on nonpositive arguments; BY_COEFFICIENT follows the
            sign of the constant operand.
        sign (str): Sign of the result.
    """

    def __init__(self, curvature, monotonicity, sign=Constants.UNKNOWN_SIGN):
        self.curvature = curvature
        self.monotonicity = tuple(monotonicity)
        self.sign = sign

    def monotonicity_of(self, index):
        if index < len(self.monotonicity):
            return self.monotonicity[index]
        return self.monotonicity[-1]


class AtomSignature(object):
    def __init__(self, name, arity, infer_dim, value, dcp, defaults=None, linear=False,
                 elementwise=False, indicator=False, check_params=None):
        self.name = name
        self.arity = arity
        self.infer_dim = infer_dim
        self.value = value
        self.dcp = dcp
        self.defaults = dict(defaults or {})
        self.linear = linear
        self.elementwise = elementwise
        self.indicator = indicator
        self.check_params = check_params

    def accepts_arity(self, count):
        low, high = self.arity
        return count >= low and (high is None or count <= high)


ATOMS = {}


def register_atom(signature):
    ATOMS[signature.name] = signature
    return signature


def atom_signature(name):
    try:
        return ATOMS[name]
    except KeyError:
        raise UnknownAtomError('unknown atom %r' % name)


def build_atom(name, args, params=None):
    """
    Build an ATOM node.

    Args:
        name (str): Atom identifier.
        args (list): Argument expressions.
        params (dict): Atom parameters; defaults fill the missing ones.
    Returns:
        (Expr): The ATOM node with its inferred dimension.
    """
    signature = atom_signature(name)
    args = [as_expr(a) for a in args]
    if not signature.accepts_arity(len(args)):
        low, high = signature.arity
        expected = str(low) if low == high else '%d..%s' % (low, '' if high is None else high)
        raise DimensionError('%s takes %s argument(s), got %d with dims %s'
                             % (name, expected, len(args), [str(a.dim) for a in args]))
    merged = dict(signature.defaults)
    merged.update(params or {})
    if signature.check_params is not None:
        signature.check_params(merged)
    dims = [a.dim for a in args]
    dim = signature.infer_dim(dims, merged)
    return Expr(Constants.ATOM, dim, args, (name, freeze_params(merged)))


# Dimension rules.

def _same_as_arg(dims, params):
    return dims[0]


def _scalar(dims, params):
    return SCALAR_DIM


def _vector_arg(dims, params):
    if dims[0].cols != 1:
        raise DimensionError('argument must be a column vector, got %s' % (dims[0],))
    return SCALAR_DIM


def _square_arg(dims, params):
    if not dims[0].is_square:
        raise DimensionError('argument must be a square matrix, got %s' % (dims[0],))
    return SCALAR_DIM


def _all_same(dims, params):
    for d in dims[1:]:
        if d != dims[0]:
            raise DimensionError('arguments must share dimensions, got %s' % [str(x) for x in dims])
    return dims[0]


def _soc_dims(dims, params):
    if not dims[1].is_scalar:
        raise DimensionError('second-order cone bound must be scalar, got %s' % (dims[1],))
    return SCALAR_DIM


def _quad_over_lin_dims(dims, params):
    if not dims[1].is_scalar:
        raise DimensionError('quad_over_lin denominator must be scalar, got %s' % (dims[1],))
    return SCALAR_DIM


def _mul_dims(dims, params):
    a, b = dims
    if a.is_scalar:
        return b
    if b.is_scalar or a == b:
        return a
    raise DimensionError('elementwise product of %s and %s' % (a, b))


def _matmul_dims(dims, params):
    a, b = dims
    if a.cols != b.rows:
        raise DimensionError('matrix product of %s and %s' % (a, b))
    return Dim(a.rows, b.cols)


def _hstack_dims(dims, params):
    rows = dims[0].rows
    for d in dims:
        if d.rows != rows:
            raise DimensionError('hstack needs equal row counts, got %s' % [str(x) for x in dims])
    return Dim(rows, sum(d.cols for d in dims))


def _vstack_dims(dims, params):
    cols = dims[0].cols
    for d in dims:
        if d.cols != cols:
            raise DimensionError('vstack needs equal column counts, got %s' % [str(x) for x in dims])
    return Dim(sum(d.rows for d in dims), cols)


def _reshape_dims(dims, params):
    target = Dim(params['rows'], params['cols'])
    if target.size != dims[0].size:
        raise DimensionError('cannot reshape %s into %s' % (dims[0], target))
    return target


def _transpose_dims(dims, params):
    return Dim(dims[0].cols, dims[0].rows)


def _index_dims(dims, params):
    rows = range(*params['rows'])
    cols = range(*params['cols'])
    if len(rows) == 0 or len(cols) == 0:
        raise DimensionError('empty index into %s' % (dims[0],))
    if max(rows) >= dims[0].rows or max(cols) >= dims[0].cols or min(rows) < 0 or min(cols) < 0:
        raise DimensionError('index out of range for %s' % (dims[0],))
    return Dim(len(rows), len(cols))


def _promote_dims(dims, params):
    if not dims[0].is_scalar:
        raise DimensionError('only scalars are promoted, got %s' % (dims[0],))
    return Dim(params['rows'], params['cols'])


# Parameter checks.

def _check_epsilon(params):
    if params['epsilon'] < 0:
        raise ValueError('deadzone epsilon must be nonnegative')


def _check_alpha(params):
    if not 0 < params['alpha'] < 1:
        raise ValueError('quantile alpha must lie in (0, 1)')


def _check_m(params):
    if params['m'] <= 0:
        raise ValueError('huber threshold must be positive')


# Value functions. Arguments arrive as 2-D arrays.

def _nonneg_domain(fn):
    def value(x):
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(x > 0, fn(np.where(x > 0, x, 1.0)), np.inf)
    return value


def _indicator(violation, scale):
    tol = Constants.INDICATOR_TOL * (1.0 + scale)
    return 0.0 if violation <= tol else np.inf


def _zero_value(vals, params):
    x = vals[0]
    return _indicator(np.max(np.abs(x)), np.max(np.abs(x)))


def _nonneg_value(vals, params):
    x = vals[0]
    return _indicator(max(np.max(-x), 0.0), np.max(np.abs(x)))


def _soc_value(vals, params):
    x, t = vals[0], float(vals[1][0, 0])
    norm = np.linalg.norm(x)
    return _indicator(max(norm - t, 0.0), max(np.max(np.abs(x)), abs(t)))


def _psd_value(vals, params):
    x = vals[0]
    asym = np.max(np.abs(x - x.T))
    low = np.linalg.eigvalsh(0.5 * (x + x.T))[0]
    return _indicator(max(asym, -low, 0.0), np.max(np.abs(x)))


def _quad_over_lin_value(vals, params):
    x, y = vals[0], float(vals[1][0, 0])
    sq = float(np.sum(x * x))
    if y > 0:
        return sq / y
    if y == 0 and sq == 0:
        return 0.0
    return np.inf


def _neg_log_det_value(vals, params):
    x = vals[0]
    if np.max(np.abs(x - x.T)) > 1e-8 * (1 + np.max(np.abs(x))):
        return np.inf
    w = np.linalg.eigvalsh(0.5 * (x + x.T))
    if w[0] <= 0:
        return np.inf
    return -float(np.sum(np.log(w)))


def _log_det_value(vals, params):
    return -_neg_log_det_value(vals, params)


def _neg_entropy(x):
    return -scipy.special.entr(x)


def _tv_value(vals, params):
    return float(np.sum(np.abs(np.diff(vals[0][:, 0]))))


def _elementwise(fn):
    return lambda vals, params: fn(vals[0])


def _reduce(fn):
    return lambda vals, params: float(fn(vals[0]))


_CONVEX = Constants.CONVEX
_CONCAVE = Constants.CONCAVE
_AFFINE = Constants.AFFINE
_ND = Constants.NONDECREASING
_NI = Constants.NONINCREASING
_NM = Constants.NONMONOTONE
_POS = Constants.POSITIVE
_UNK = Constants.UNKNOWN_SIGN

# Nonlinear atoms.
register_atom(AtomSignature('abs', (1, 1), _same_as_arg, _elementwise(np.abs),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS), elementwise=True))
register_atom(AtomSignature('square', (1, 1), _same_as_arg, _elementwise(np.square),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS), elementwise=True))
register_atom(AtomSignature('hinge', (1, 1), _same_as_arg,
                            _elementwise(lambda x: np.maximum(x, 0.0)),
                            AtomDcpInfo(_CONVEX, [_ND], _POS), elementwise=True))
register_atom(AtomSignature('deadzone', (1, 1), _same_as_arg,
                            lambda vals, p: np.maximum(np.abs(vals[0]) - p['epsilon'], 0.0),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS), defaults={'epsilon': 1.0},
                            elementwise=True, check_params=_check_epsilon))
register_atom(AtomSignature('quantile', (1, 1), _same_as_arg,
                            lambda vals, p: np.maximum(p['alpha'] * vals[0],
                                                       (p['alpha'] - 1.0) * vals[0]),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS), defaults={'alpha': 0.5},
                            elementwise=True, check_params=_check_alpha))
register_atom(AtomSignature('logistic', (1, 1), _same_as_arg,
                            _elementwise(lambda x: np.logaddexp(0.0, x)),
                            AtomDcpInfo(_CONVEX, [_ND], _POS), elementwise=True))
register_atom(AtomSignature('inv_pos', (1, 1), _same_as_arg,
                            _elementwise(_nonneg_domain(lambda x: 1.0 / x)),
                            AtomDcpInfo(_CONVEX, [_NI], _POS), elementwise=True))
register_atom(AtomSignature('neg_log', (1, 1), _same_as_arg,
                            _elementwise(_nonneg_domain(lambda x: -np.log(x))),
                            AtomDcpInfo(_CONVEX, [_NI], _UNK), elementwise=True))
register_atom(AtomSignature('log', (1, 1), _same_as_arg,
                            _elementwise(lambda x: -_nonneg_domain(lambda y: -np.log(y))(x)),
                            AtomDcpInfo(_CONCAVE, [_ND], _UNK), elementwise=True))
register_atom(AtomSignature('exp', (1, 1), _same_as_arg, _elementwise(np.exp),
                            AtomDcpInfo(_CONVEX, [_ND], _POS), elementwise=True))
register_atom(AtomSignature('neg_entropy', (1, 1), _same_as_arg, _elementwise(_neg_entropy),
                            AtomDcpInfo(_CONVEX, [_NM], _UNK), elementwise=True))
register_atom(AtomSignature('entropy', (1, 1), _same_as_arg,
                            _elementwise(scipy.special.entr),
                            AtomDcpInfo(_CONCAVE, [_NM], _UNK), elementwise=True))
register_atom(AtomSignature('kl_div', (2, 2), _all_same,
                            lambda vals, p: scipy.special.kl_div(vals[0], vals[1]),
                            AtomDcpInfo(_CONVEX, [_NM, _NM], _POS), elementwise=True))
register_atom(AtomSignature('huber', (1, 1), _same_as_arg,
                            lambda vals, p: 2.0 * scipy.special.huber(p['m'], vals[0]),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS), defaults={'m': 1.0},
                            elementwise=True, check_params=_check_m))
register_atom(AtomSignature('quad_over_lin', (2, 2), _quad_over_lin_dims, _quad_over_lin_value,
                            AtomDcpInfo(_CONVEX, [SIGNED, _NI], _POS)))
register_atom(AtomSignature('sum_squares', (1, 1), _scalar,
                            _reduce(lambda x: np.sum(x * x)),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS)))
register_atom(AtomSignature('norm1', (1, 1), _scalar, _reduce(lambda x: np.sum(np.abs(x))),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS)))
register_atom(AtomSignature('norm2', (1, 1), _scalar, _reduce(np.linalg.norm),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS)))
register_atom(AtomSignature('norm_inf', (1, 1), _scalar, _reduce(lambda x: np.max(np.abs(x))),
                            AtomDcpInfo(_CONVEX, [SIGNED], _POS)))
register_atom(AtomSignature('log_sum_exp', (1, 1), _scalar, _reduce(scipy.special.logsumexp),
                            AtomDcpInfo(_CONVEX, [_ND], _UNK)))
register_atom(AtomSignature('tv', (1, 1), _vector_arg, _tv_value,
                            AtomDcpInfo(_CONVEX, [_NM], _POS)))
register_atom(AtomSignature('neg_log_det', (1, 1), _square_arg, _neg_log_det_value,
                            AtomDcpInfo(_CONVEX, [_NM], _UNK)))
register_atom(AtomSignature('log_det', (1, 1), _square_arg, _log_det_value,
                            AtomDcpInfo(_CONCAVE, [_NM], _UNK)))
register_atom(AtomSignature('nuclear_norm', (1, 1), _scalar,
                            _reduce(lambda x: np.sum(np.linalg.svd(x, compute_uv=False))),
                            AtomDcpInfo(_CONVEX, [_NM], _POS)))
register_atom(AtomSignature('spectral_norm', (1, 1), _scalar,
                            _reduce(lambda x: np.linalg.norm(x, 2)),
                            AtomDcpInfo(_CONVEX, [_NM], _POS)))

# Cone indicators.
register_atom(AtomSignature('zero', (1, 1), _scalar, _zero_value,
                            AtomDcpInfo(_CONVEX, [_NM], _POS), indicator=True))
register_atom(AtomSignature('nonneg', (1, 1), _scalar, _nonneg_value,
                            AtomDcpInfo(_CONVEX, [_NI], _POS), indicator=True))
register_atom(AtomSignature('soc', (2, 2), _soc_dims, _soc_value,
                            AtomDcpInfo(_CONVEX, [_NM, _NI], _POS), indicator=True))
register_atom(AtomSignature('psd', (1, 1), _square_arg, _psd_value,
                            AtomDcpInfo(_CONVEX, [_NM], _POS), indicator=True))


# Linear atoms.

def _mul_value(vals, params):
    return vals[0] * vals[1]


def _index_value(vals, params):
    return vals[0][slice(*params['rows']), slice(*params['cols'])]


register_atom(AtomSignature('neg', (1, 1), _same_as_arg, lambda vals, p: -vals[0],
                            AtomDcpInfo(_AFFINE, [_NI]), linear=True))
register_atom(AtomSignature('mul', (2, 2), _mul_dims, _mul_value,
                            AtomDcpInfo(_AFFINE, [BY_COEFFICIENT]), linear=True))
register_atom(AtomSignature('matmul', (2, 2), _matmul_dims, lambda vals, p: vals[0] @ vals[1],
                            AtomDcpInfo(_AFFINE, [BY_COEFFICIENT]), linear=True))
register_atom(AtomSignature('sum', (1, 1), _scalar, lambda vals, p: np.sum(vals[0]),
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('hstack', (1, None), _hstack_dims, lambda vals, p: np.hstack(vals),
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('vstack', (1, None), _vstack_dims, lambda vals, p: np.vstack(vals),
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('reshape', (1, 1), _reshape_dims,
                            lambda vals, p: vals[0].reshape((p['rows'], p['cols']), order='F'),
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('transpose', (1, 1), _transpose_dims, lambda vals, p: vals[0].T,
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('trace', (1, 1), _square_arg, lambda vals, p: np.trace(vals[0]),
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('index', (1, 1), _index_dims, _index_value,
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))
register_atom(AtomSignature('promote', (1, 1), _promote_dims,
                            lambda vals, p: np.full((p['rows'], p['cols']), vals[0][0, 0]),
                            AtomDcpInfo(_AFFINE, [_ND]), linear=True))

# Prox names for atoms whose compiled form is named differently.
PROX_NAMES = {'tv': 'tv_1d'}

# Negation folding of concave atoms into their convex counterparts.
NEGATIONS = {'log': 'neg_log', 'entropy': 'neg_entropy', 'log_det': 'neg_log_det'}


# Modeling functions.

def sum_squares(x):
    return build_atom('sum_squares', [x])


def norm1(x):
    return build_atom('norm1', [x])


def norm2(x):
    return build_atom('norm2', [x])


def norm_inf(x):
    return build_atom('norm_inf', [x])


def abs_(x):
    return build_atom('abs', [x])


def square(x):
    return build_atom('square', [x])


def hinge(x):
    return build_atom('hinge', [x])


def deadzone(x, epsilon=1.0):
    return build_atom('deadzone', [x], {'epsilon': float(epsilon)})


def quantile(x, alpha=0.5):
    return build_atom('quantile', [x], {'alpha': float(alpha)})


def logistic(x):
    return build_atom('logistic', [x])


def inv_pos(x):
    return build_atom('inv_pos', [x])


def log(x):
    return build_atom('log', [x])


def neg_log(x):
    return build_atom('neg_log', [x])


def exp(x):
    return build_atom('exp', [x])


def entropy(x):
    return build_atom('entropy', [x])


def neg_entropy(x):
    return build_atom('neg_entropy', [x])


def kl_div(x, y):
    return build_atom('kl_div', [x, y])


def quad_over_lin(x, y):
    return build_atom('quad_over_lin', [x, y])


def log_sum_exp(x):
    return build_atom('log_sum_exp', [x])


def tv(x):
    return build_atom('tv', [x])


def log_det(x):
    return build_atom('log_det', [x])


def neg_log_det(x):
    return build_atom('neg_log_det', [x])


def nuclear_norm(x):
    return build_atom('nuclear_norm', [x])


def spectral_norm(x):
    return build_atom('spectral_norm', [x])


def huber(x, m=1.0):
    return build_atom('huber', [x], {'m': float(m)})


def sum_entries(x):
    return build_atom('sum', [x])


def hstack(*args):
    return build_atom('hstack', list(args))


def vstack(*args):
    return build_atom('vstack', list(args))


def reshape(x, rows, cols=1):
    return build_atom('reshape', [x], {'rows': int(rows), 'cols': int(cols)})


def transpose(x):
    return build_atom('transpose', [x])


def trace(x):
    return build_atom('trace', [x])


def neg(x):
    return build_atom('neg', [x])


def mul(c, x):
    return build_atom('mul', [c, x])


def matmul(a, b):
    return build_atom('matmul', [a, b])


def _normalize_slice(key, length):
    if isinstance(key, slice):
        return key.indices(length)
    key = int(key)
    if key < 0:
        key += length
    return key, key + 1, 1


def index(x, key):
    """
    Rectangular selection x[rows, cols] with integers or slices.

    Args:
        x (Expr): Expression to index.
        key: An integer, a slice, or a (row key, column key) pair.
    Returns:
        (Expr): The selection.
    """
    x = as_expr(x)
    if not isinstance(key, tuple):
        key = (key, slice(None))
    if len(key) != 2:
        raise DimensionError('index takes at most two keys')
    rows = _normalize_slice(key[0], x.dim.rows)
    cols = _normalize_slice(key[1], x.dim.cols)
    return build_atom('index', [x], {'rows': rows, 'cols': cols})


def constant(value):
    return Constant(value)
