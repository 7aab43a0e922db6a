import numpy as np

from proxcomp.linops.factorization import singular_value_decomposition, symmetric_eig
from proxcomp.prox.elementwise import prox_neg_log, soft_threshold
from proxcomp.prox.vector import prox_linf
from proxcomp.utils.errors import ProxError


def _spectral(matrix, spectrum_prox):
    u, s, vt = singular_value_decomposition(matrix)
    return (u * spectrum_prox(s)) @ vt


def prox_neg_log_det(matrix, t):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] != matrix.shape[1]:
        raise ProxError('neg_log_det needs a square matrix, got %s' % (matrix.shape,))
    w, q = symmetric_eig(matrix)
    return (q * prox_neg_log(w, t)) @ q.T


def prox_nuclear_norm(matrix, t):
    return _spectral(matrix, lambda s: soft_threshold(s, t))


def prox_spectral_norm(matrix, t):
    return _spectral(matrix, lambda s: prox_linf(s, t))


ORTHOGONALLY_INVARIANT = {
    'neg_log_det': prox_neg_log_det,
    'nuclear_norm': prox_nuclear_norm,
    'spectral_norm': prox_spectral_norm,
}


def prox_orthogonal_invariant(atom, matrix, t):
    """
    Prox of a spectral function: decompose, apply the scalar or vector prox to
    the spectrum, reconstruct.

    Args:
        atom (str): neg_log_det, nuclear_norm or spectral_norm.
        matrix (ndarray): The point V.
        t (float): Prox parameter.
    Returns:
        (ndarray): The prox, same shape as V.
    """
    try:
        kernel = ORTHOGONALLY_INVARIANT[atom]
    except KeyError:
        raise ProxError('%s is not an orthogonally invariant atom' % atom)
    return kernel(matrix, t)
