from .elementwise import (soft_threshold, prox_square, prox_neg_log, prox_logistic, prox_exp,
                          prox_neg_entropy, prox_inv_pos, prox_kl_div, prox_quad_over_lin)
from .vector import project_l1_ball, prox_linf, prox_l2_group, prox_log_sum_exp, prox_fused_lasso
from .cones import project_cone, project_soc, project_psd, project_nonneg
from .matrix import prox_orthogonal_invariant
from .least_squares import prox_sum_squares
from .registry import AffineMap, ProxFunction, ProxRequest, eval_prox, get_prox


def prox_scalar_newton(atom, v, lam):
    """
    Newton-type prox kernels by atom name: logistic, exp, neg_entropy, inv_pos,
    log_sum_exp, and kl_div on the pair v = (x, y).
    """
    kernels = {
        'logistic': prox_logistic,
        'exp': prox_exp,
        'neg_entropy': prox_neg_entropy,
        'inv_pos': prox_inv_pos,
        'log_sum_exp': prox_log_sum_exp,
    }
    if atom == 'kl_div':
        return prox_kl_div(v[0], v[1], lam)
    return kernels[atom](v, lam)


def prox_exact_equation(atom, v, lam):
    """ Closed-form kernels: square, neg_log, and quad_over_lin on the pair v = (x, y). """
    if atom == 'square':
        return prox_square(v, lam)
    if atom == 'neg_log':
        return prox_neg_log(v, lam)
    if atom == 'quad_over_lin':
        return prox_quad_over_lin(v[0], v[1], lam)
    raise KeyError(atom)
