"""
The prox rule registry.

Rules are ordered by (priority, registration order). Direct rules map an atom
onto its prox function when every argument already has an admissible form;
Kronecker splitting and epigraph rules transform the arguments first; conic
rules replace the atom by its cone formulation.
"""
from proxcomp.components.affine import (affine_form, is_affine_expr, is_elementwise_op,
                                        is_scalar_op, is_two_sided_kron)
from proxcomp.objects.atoms import PROX_NAMES
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import UnsupportedAtomError

DIRECT_PRIORITY = 0
SPLIT_PRIORITY = 1
EPIGRAPH_PRIORITY = 2
CONIC_PRIORITY = 3

INDICATORS = frozenset(Constants.CONES)


class ProxRule(object):
    """
    Args:
        atom (str): Atom the rule matches.
        kind (str): DIRECT, KRON_SPLIT, EPIGRAPH or CONIC.
        priority (int): Lower wins.
        policies (tuple): One argument policy per argument; the last repeats.
        prox (str): Prox function emitted, None for conic rules.
    """

    def __init__(self, atom, kind, priority, policies=(), prox=None):
        self.atom = atom
        self.kind = kind
        self.priority = priority
        self.policies = tuple(policies)
        self.prox = prox
        self.order = None

    @property
    def name(self):
        return '%s:%s' % (self.kind, self.atom)

    def policy(self, index):
        return self.policies[min(index, len(self.policies) - 1)]

    def matches(self, expr):
        if expr.name != self.atom:
            return False
        if self.kind == Constants.DIRECT:
            return arguments_admissible(self, expr.children)
        if self.kind == Constants.KRON_SPLIT:
            return kron_split_target(expr) is not None
        return True

    def __repr__(self):
        return 'ProxRule(%s, priority=%d)' % (self.name, self.priority)


RULES = []


def register_rule(rule):
    rule.order = len(RULES)
    RULES.append(rule)
    return rule


def argument_admissible(policy, arg):
    """
    Whether one affine argument satisfies an argument policy.

    Args:
        policy (str): ACCEPT, ELEMENTWISE, VARIABLE_ONLY or KRON_SPLITTABLE.
        arg (Expr): The argument.
    Returns:
        (bool): True when the argument can be handed to the prox as it is.
    """
    if not is_affine_expr(arg):
        return False
    if policy in (Constants.ACCEPT, Constants.KRON_SPLITTABLE):
        return True
    form = affine_form(arg)
    single = form.single()
    if single is None:
        return False
    var_id, op = single
    var_dim = form.dims[var_id]
    if policy == Constants.ELEMENTWISE:
        return var_dim.size == arg.dim.size and is_elementwise_op(op, var_dim.size)
    return var_dim == arg.dim and is_scalar_op(op, var_dim.size)


def arguments_admissible(rule, args):
    seen = set()
    for index, arg in enumerate(args):
        if not argument_admissible(rule.policy(index), arg):
            return False
        if len(args) > 1:
            variables = set(affine_form(arg).terms)
            if variables & seen:
                return False
            seen |= variables
    if rule.atom == 'sum_squares' and kron_split_target_args(args) is not None:
        return False
    return True


def kron_split_target_args(args):
    arg = args[0]
    if not is_affine_expr(arg):
        return None
    single = affine_form(arg).single()
    if single is None or not is_two_sided_kron(single[1]):
        return None
    return single


def kron_split_target(expr):
    """ (var_id, KronOp) when a sum of squares acts on one variable through a two-sided Kronecker map. """
    if expr.name != 'sum_squares':
        return None
    return kron_split_target_args(expr.children)


def _prox_rules(atom, policies):
    prox = PROX_NAMES.get(atom, atom)
    register_rule(ProxRule(atom, Constants.DIRECT, DIRECT_PRIORITY, policies, prox))
    if atom == 'sum_squares':
        register_rule(ProxRule(atom, Constants.KRON_SPLIT, SPLIT_PRIORITY, policies, prox))
    register_rule(ProxRule(atom, Constants.EPIGRAPH, EPIGRAPH_PRIORITY, policies, prox))


_ELEMENTWISE = (Constants.ELEMENTWISE,)
_VARIABLE = (Constants.VARIABLE_ONLY,)

_prox_rules('sum_squares', (Constants.KRON_SPLITTABLE,))
for _atom in ('abs', 'norm1', 'square', 'hinge', 'deadzone', 'quantile', 'neg_log', 'logistic',
              'exp', 'neg_entropy', 'inv_pos', Constants.NONNEG):
    _prox_rules(_atom, _ELEMENTWISE)
_prox_rules('kl_div', _ELEMENTWISE * 2)
for _atom in ('norm2', 'norm_inf', 'log_sum_exp', 'tv', 'neg_log_det', 'nuclear_norm',
              'spectral_norm', Constants.PSD):
    _prox_rules(_atom, _VARIABLE)
_prox_rules('quad_over_lin', _VARIABLE * 2)
_prox_rules(Constants.SOC, _VARIABLE * 2)
_prox_rules(Constants.ZERO, (Constants.ACCEPT,))

for _atom in ('abs', 'norm1', 'norm_inf', 'norm2', 'hinge', 'deadzone', 'quantile', 'sum_squares',
              'huber'):
    register_rule(ProxRule(_atom, Constants.CONIC, CONIC_PRIORITY))


def rules_for(atom, rules=None):
    return [rule for rule in (RULES if rules is None else rules) if rule.atom == atom]


def match_rule(expr, rules=None, prox_rules=True):
    """
    The best rule for an atom node.

    Args:
        expr (Expr): An ATOM node.
        rules (list): Rules to consider; the registry by default.
        prox_rules (bool): When False, atoms with a conic rule only use it.
    Returns:
        (ProxRule): The matching rule with the lowest (priority, order).
    Raises:
        UnsupportedAtomError: No rule matches.
    """
    candidates = rules_for(expr.name, rules)
    if not prox_rules and expr.name not in INDICATORS:
        conic = [rule for rule in candidates if rule.kind == Constants.CONIC]
        if conic:
            candidates = conic
    candidates = sorted(candidates, key=lambda rule: (rule.priority, rule.order))
    for rule in candidates:
        if rule.matches(expr):
            return rule
    raise UnsupportedAtomError('no prox rule or conic reduction for %r' % expr)
