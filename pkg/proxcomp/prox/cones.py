import numpy as np

from proxcomp.linops.factorization import symmetric_eig
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import ProxError


def project_nonneg(v):
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def project_soc(x, t, wx=1.0, wt=1.0):
    """
    Projection onto {(x, t) : ||x||_2 <= t} in the metric
    wx ||dx||^2 + wt |dt|^2, with scalar weights.

    Args:
        x (ndarray): Vector part.
        t (float): Scalar part.
        wx (float): Weight of the vector part.
        wt (float): Weight of the scalar part.
    Returns:
        (tuple): The projected vector and scalar.
    """
    x = np.asarray(x, dtype=float)
    t = float(t)
    c = np.sqrt(wx / wt)
    xs = np.sqrt(wx) * x
    ts = np.sqrt(wt) * t
    norm = np.linalg.norm(xs)
    if norm <= c * ts:
        return x.copy(), t
    alpha = (norm + ts / c) / (1.0 + 1.0 / (c * c))
    if alpha <= 0.0 or norm == 0.0:
        return np.zeros_like(x), 0.0
    return (alpha / norm) * xs / np.sqrt(wx), (alpha / c) / np.sqrt(wt)


def project_psd(matrix):
    """ Projection of a symmetric matrix onto the PSD cone by eigenvalue clipping. """
    w, q = symmetric_eig(matrix)
    return (q * np.maximum(w, 0.0)) @ q.T


def project_cone(cone, v, **kwargs):
    """
    Projection onto one of the constraint cones.

    Args:
        cone (str): One of zero, nonneg, soc, psd.
        v: The point. For SOC the pair (x, t); for PSD a square matrix; for
            the zero cone the keyword arguments *matrix* and *rhs* describe the
            affine subspace {x : matrix x = rhs}.
    Returns:
        The projection, shaped like the input.
    """
    if cone == Constants.NONNEG:
        return project_nonneg(v)
    if cone == Constants.SOC:
        x, t = v
        return project_soc(x, t)
    if cone == Constants.PSD:
        return project_psd(v)
    if cone == Constants.ZERO:
        return project_subspace(v, kwargs['matrix'], kwargs['rhs'])
    raise ProxError('unknown cone %r' % cone)


def project_subspace(v, matrix, rhs):
    """
    Euclidean projection onto {x : matrix x = rhs}.

    Raises:
        ProxError: The subspace is empty.
    """
    from proxcomp.prox.least_squares import SubspaceProjector
    return SubspaceProjector(np.asarray(matrix, dtype=float), np.asarray(rhs, dtype=float)).project(v)
