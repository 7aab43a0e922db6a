import numpy as np

from proxcomp.objects.expression import affine_sum, apply_map, Constant, prox_function, variable_with_id


class LinearConstraint(object):
    """
    The equality sum_j op_j x_j = rhs.

    Args:
        coefficients (list): (var_id, LinearOp) pairs in print order.
        rhs (ndarray): Right-hand side; None means zero.
    """

    def __init__(self, coefficients, rhs=None):
        self._coefficients = tuple(coefficients)
        rows = self._coefficients[0][1].output_dim
        for var_id, op in self._coefficients:
            if op.output_dim != rows:
                raise ValueError('constraint blocks disagree on the row count')
        self._rhs = np.zeros(rows) if rhs is None else np.asarray(rhs, dtype=float).reshape(-1)

    @property
    def coefficients(self):
        return self._coefficients

    @property
    def rhs(self):
        return self._rhs

    @property
    def rows(self):
        return self._rhs.size

    def variables(self):
        return [var_id for var_id, _ in self._coefficients]

    def as_expr(self, dims):
        """ The constraint as the affine expression sum_j op_j x_j - rhs. """
        children = []
        for var_id, op in self._coefficients:
            var = variable_with_id(var_id, dims[var_id])
            if getattr(op, 'is_identity', False):
                children.append(var)
            else:
                children.append(apply_map(op, var))
        if np.any(self._rhs != 0):
            first = children[0].dim
            shape = (first.rows, first.cols) if first.size == self._rhs.size else (-1, 1)
            children.append(Constant(-self._rhs.reshape(shape, order='F')))
        return affine_sum(children)

    def __repr__(self):
        return 'LinearConstraint(%s)' % ', '.join(v for v, _ in self._coefficients)


class SeparableTerm(object):
    """
    One prox term of a separable problem together with the variable block it owns.

    Args:
        name (str): Prox function name.
        args (list): Affine argument expressions over the block's variables.
        params (dict): Function parameters (scale and atom parameters).
        block (list): Variable ids owned by the term, in block order.
        linear (dict): var_id -> folded linear coefficients.
        quad (dict): var_id -> folded diagonal quadratic coefficients.
    """

    def __init__(self, name, args, params, block, linear=None, quad=None):
        self.name = name
        self.args = tuple(args)
        self.params = dict(params or {})
        self.block = tuple(block)
        self.linear = dict(linear or {})
        self.quad = dict(quad or {})

    def as_expr(self):
        """ The term as a PROX_FUNCTION node; folds travel as parameters. """
        params = dict(self.params)
        for var_id, coefficients in self.linear.items():
            params['linear:' + var_id] = np.asarray(coefficients, dtype=float)
        for var_id, coefficients in self.quad.items():
            params['quad:' + var_id] = np.asarray(coefficients, dtype=float)
        return prox_function(self.name, self.args, params)

    def __repr__(self):
        return 'SeparableTerm(%s, block=%s)' % (self.name, list(self.block))


class SeparableProblem(object):
    """
    A sum of prox terms over disjoint variable blocks, coupled only through
    linear equality constraints.

    Args:
        terms (list): SeparableTerm objects.
        constraints (list): LinearConstraint objects.
        dims (dict): var_id -> Dim for every variable.
        origin (dict): var_id -> id of the variable it copies (itself for originals).
        offset (float): Constant added to the objective.
    """

    def __init__(self, terms, constraints, dims, origin=None, offset=0.0):
        self.terms = list(terms)
        self.constraints = list(constraints)
        self.dims = dict(dims)
        self.origin = dict(origin or {v: v for v in self.dims})
        self.offset = float(offset)
        self._check_partition()

    def _check_partition(self):
        owner = {}
        for index, term in enumerate(self.terms):
            for var_id in term.block:
                if var_id in owner:
                    raise ValueError('variable %s appears in terms %d and %d'
                                     % (var_id, owner[var_id], index))
                owner[var_id] = index
        self.owner = owner

    @property
    def constraint_rows(self):
        return sum(c.rows for c in self.constraints)

    def term_exprs(self):
        return [term.as_expr() for term in self.terms]

    def constraint_exprs(self):
        return [c.as_expr(self.dims) for c in self.constraints]

    def consensus_pairs(self):
        """ (copy, copy) pairs tied by a consensus constraint. """
        pairs = []
        for constraint in self.constraints:
            if len(constraint.coefficients) != 2:
                continue
            (a, op_a), (b, op_b) = constraint.coefficients
            if self.origin.get(a) == self.origin.get(b) and a != b:
                pairs.append((b, a))
        return pairs

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return 'SeparableProblem(%d terms, %d constraints)' % (len(self.terms), len(self.constraints))
