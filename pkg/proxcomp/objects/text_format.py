"""
Text form of problems.

A compiled program reads

    objective:
      sum_squares(add(const(a), scalar(-1.00)*dense(B)*var(x))){scale=0.50}
      norm1(var(y)){scale=0.10}
    constraints:
      zero(add(var(y), scalar(-1.00)*var(x)))

and an uncompiled one uses the sections ``minimize:`` and ``subject to:`` with
modeling atoms. Numeric data lives in a sidecar file: one ``var <name> <rows>
<cols>`` line per variable, then for every constant a ``const`` (or ``sparse``)
header ``<name> <rows> <cols>`` followed by its rows.
"""
import re
import string

import numpy as np
import scipy.sparse as sp

from proxcomp.linops.algebra import materialize
from proxcomp.linops.linear_op import DenseOp, DiagonalOp, KronOp, ScalarOp, SparseOp
from proxcomp.objects.atoms import PROX_NAMES, atom_signature, build_atom
from proxcomp.objects.constant_pool import ConstantPool
from proxcomp.objects.expression import (Constant, Dim, add_exprs, affine_sum, apply_map,
                                         prox_function, variable_with_id)
from proxcomp.objects.problem import Constraint, Problem, ProxAffineProblem
from proxcomp.objects.separable import SeparableProblem
from proxcomp.utils.constants import Constants
from proxcomp.utils.errors import ParseError, SerializationError, UnresolvedConstantError

OBJECTIVE = 'objective:'
CONSTRAINTS = 'constraints:'
OFFSET = 'offset:'
MINIMIZE = 'minimize:'
SUBJECT_TO = 'subject to:'

_OP_TOKENS = ('scalar', 'dense', 'sparse', 'diag', 'kron')
_VARIABLE_NAMES = ['x', 'y', 'z', 'w', 'u', 'v', 's', 't', 'p', 'q', 'r']
_FOLD_PREFIXES = ('linear:', 'quad:')


def format_number(value):
    """ Two decimals when that is exact, full precision otherwise. """
    value = float(value)
    short = '%.2f' % value
    if float(short) == value:
        return short
    return repr(value)


def _format_param(value, namer):
    if isinstance(value, tuple):
        return ':'.join(str(int(v)) for v in value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, np.ndarray):
        return 'const(%s)' % namer.constant(ConstantPool.get_instance().intern(value.reshape(-1, 1)))
    return format_number(value)


class _Namer(object):
    """ Deterministic first-traversal names for variables and constants. """

    def __init__(self):
        self.variables = {}
        self.variable_dims = {}
        self.constants = {}
        self.constant_data = []
        self._constant_count = 0

    def variable(self, var_id, dim):
        if var_id not in self.variables:
            index = len(self.variables)
            base = _VARIABLE_NAMES[index % len(_VARIABLE_NAMES)]
            name = base if index < len(_VARIABLE_NAMES) else '%s%d' % (base, index // len(_VARIABLE_NAMES))
            if dim.cols > 1:
                name = name.upper()
            self.variables[var_id] = name
            self.variable_dims[name] = dim
        return self.variables[var_id]

    def constant(self, data):
        if data.key not in self.constants:
            index = self._constant_count
            self._constant_count += 1
            letters = string.ascii_lowercase
            name = letters[index % 26] if index < 26 else '%s%d' % (letters[index % 26], index // 26)
            if data.shape[1] > 1:
                name = name.upper()
            self.constants[data.key] = name
            self.constant_data.append((name, data))
        return self.constants[data.key]


def _op_text(op, namer):
    pool = ConstantPool.get_instance()
    if isinstance(op, ScalarOp):
        return 'scalar(%s)' % format_number(op.alpha)
    if isinstance(op, DiagonalOp):
        return 'diag(%s)' % namer.constant(pool.intern(op.diagonal.reshape(-1, 1)))
    if isinstance(op, SparseOp):
        return 'sparse(%s)' % namer.constant(pool.intern(op.matrix))
    if isinstance(op, KronOp):
        return 'kron(%s, %s)' % (_op_text(op.left, namer), _op_text(op.right, namer))
    if isinstance(op, DenseOp):
        return 'dense(%s)' % namer.constant(pool.intern(op.matrix))
    return 'dense(%s)' % namer.constant(pool.intern(materialize(op)))


def _params_text(name, params, namer):
    inverse = {v: k for k, v in PROX_NAMES.items()}
    atom = inverse.get(name, name)
    try:
        defaults = atom_signature(atom).defaults
    except KeyError:
        defaults = {}
    items = []
    for key in sorted(params):
        value = params[key]
        if key == 'scale' and float(value) == 1.0:
            continue
        if key in defaults and not isinstance(value, np.ndarray) and value == defaults[key]:
            continue
        label = key
        for prefix in _FOLD_PREFIXES:
            if key.startswith(prefix):
                label = prefix + namer.variables.get(key[len(prefix):], key[len(prefix):])
        items.append('%s=%s' % (label, _format_param(value, namer)))
    return '{%s}' % ', '.join(items) if items else ''


def _expr_text(expr, namer, compiled):
    kind = expr.kind
    if kind == Constants.VARIABLE:
        return 'var(%s)' % namer.variable(expr.var_id, expr.dim)
    if kind == Constants.CONSTANT:
        return 'const(%s)' % namer.constant(expr.data)
    if kind == Constants.LINEAR_MAP:
        op = _op_text(expr.op, namer)
        return '%s*%s' % (op, _expr_text(expr.children[0], namer, compiled))
    if kind == Constants.ADD:
        return 'add(%s)' % ', '.join(_expr_text(c, namer, compiled) for c in expr.children)
    if kind == Constants.ATOM and compiled:
        raise SerializationError('uncompiled atom %s in a compiled program' % expr.name)
    args = ', '.join(_expr_text(c, namer, compiled) for c in expr.children)
    for key in expr.params:
        for prefix in _FOLD_PREFIXES:
            if key.startswith(prefix):
                namer.variable(key[len(prefix):], Dim(np.asarray(expr.params[key]).size, 1))
    return '%s(%s)%s' % (expr.name, args, _params_text(expr.name, expr.params, namer))


def _sidecar(namer):
    lines = []
    for name, dim in namer.variable_dims.items():
        lines.append('var %s %d %d' % (name, dim.rows, dim.cols))
    for name, data in namer.constant_data:
        rows, cols = data.shape
        lines.append('%s %s %d %d' % ('sparse' if data.is_sparse else 'const', name, rows, cols))
        for row in data.value:
            lines.append(' '.join(repr(float(v)) for v in row))
    return '\n'.join(lines) + '\n'


def _compiled_sections(p):
    if isinstance(p, SeparableProblem):
        return p.term_exprs(), p.constraint_exprs(), p.offset
    if isinstance(p, ProxAffineProblem):
        return list(p.terms), list(p.constraints), p.offset
    raise SerializationError('cannot serialize %s as a compiled program' % type(p).__name__)


def _render_compiled(p):
    terms, constraints, offset = _compiled_sections(p)
    namer = _Namer()
    lines = [OBJECTIVE]
    for term in terms:
        if term.kind != Constants.PROX_FUNCTION:
            raise SerializationError('objective term of kind %s is not a prox function' % term.kind)
        lines.append('  ' + _expr_text(term, namer, True))
    if offset != 0.0:
        lines.append('%s %s' % (OFFSET, format_number(offset)))
    if constraints:
        lines.append(CONSTRAINTS)
        for constraint in constraints:
            lines.append('  zero(%s)' % _expr_text(constraint, namer, True))
    return '\n'.join(lines) + '\n', _sidecar(namer)


def serialize(p):
    """
    Text of a compiled program (prox-affine or separable).

    Args:
        p (ProxAffineProblem or SeparableProblem): The program.
    Returns:
        (str): The program text; names are assigned in first-traversal order.
    Raises:
        SerializationError: A modeling atom is still present.
    """
    return _render_compiled(p)[0]


def serialize_data(p):
    """ The sidecar text that goes with serialize(p). """
    if isinstance(p, Problem):
        return _render_problem(p)[1]
    return _render_compiled(p)[1]


def _render_problem(problem):
    namer = _Namer()
    lines = [MINIMIZE, '  ' + _expr_text(problem.objective, namer, False)]
    if problem.constraints:
        lines.append(SUBJECT_TO)
        for constraint in problem.constraints:
            args = ', '.join(_expr_text(a, namer, False) for a in constraint.args)
            lines.append('  %s(%s)' % (constraint.cone, args))
    return '\n'.join(lines) + '\n', _sidecar(namer)


def serialize_problem(problem):
    """ Text of an uncompiled Problem. """
    return _render_problem(problem)[0]


# Parsing.

_TOKEN = re.compile(r'\s*(?:'
                    r'(?P<number>[-+]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|inf\b|nan\b)'
                    r'(?::[-+]?\d+)*)'
                    r'|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?::[A-Za-z_][A-Za-z0-9_]*)?)'
                    r'|(?P<punct>[(),*{}=]))')


def _tokenize(text, line):
    tokens = []
    position = 0
    text = text.rstrip()
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None or match.end() == position:
            raise ParseError('unexpected character %r' % text[position:].strip()[:1], line, position + 1)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), line, match.start(kind) + 1))
        position = match.end()
    tokens.append(('end', '', line, len(text) + 1))
    return tokens


def parse_data(data):
    """
    Read a sidecar file.

    Returns:
        (tuple): (variable dims by name, constants by name as (kind, 2-D array)).
    """
    variables, constants = {}, {}
    if data is None:
        return variables, constants
    lines = data.splitlines()
    index = 0
    while index < len(lines):
        fields = lines[index].split()
        index += 1
        if not fields:
            continue
        if fields[0] == 'var' and len(fields) == 4:
            variables[fields[1]] = Dim(int(fields[2]), int(fields[3]))
        elif fields[0] in ('const', 'sparse') and len(fields) == 4:
            rows, cols = int(fields[2]), int(fields[3])
            values = []
            for _ in range(rows):
                if index >= len(lines):
                    raise ParseError('constant %s ends early' % fields[1], index + 1, 1)
                row = [float(v) for v in lines[index].split()]
                index += 1
                if len(row) != cols:
                    raise ParseError('constant %s: expected %d values' % (fields[1], cols), index, 1)
                values.append(row)
            constants[fields[1]] = (fields[0], np.array(values, dtype=float).reshape(rows, cols))
        else:
            raise ParseError('unrecognized sidecar line %r' % lines[index - 1], index, 1)
    return variables, constants


class _Parser(object):
    def __init__(self, tokens, variables, constants, compiled):
        self._tokens = tokens
        self._index = 0
        self._variables = variables
        self._constants = constants
        self._compiled = compiled

    def _peek(self, offset=0):
        return self._tokens[min(self._index + offset, len(self._tokens) - 1)]

    def _next(self):
        token = self._peek()
        self._index += 1
        return token

    def _fail(self, message, token=None):
        token = token or self._peek()
        raise ParseError(message, token[2], token[3])

    def _expect(self, value):
        token = self._next()
        if token[1] != value or token[0] == 'end':
            self._fail('expected %r, found %r' % (value, token[1] or 'end of line'), token)
        return token

    def _name(self):
        token = self._next()
        if token[0] != 'name':
            self._fail('expected a name, found %r' % (token[1] or 'end of line'), token)
        return token

    def finish(self):
        token = self._peek()
        if token[0] != 'end':
            self._fail('unexpected %r after the expression' % token[1], token)

    def _constant_value(self, name, token):
        if name not in self._constants:
            raise UnresolvedConstantError('unresolved constant %r' % name, token[2], token[3])
        return self._constants[name]

    def _constant_ref(self):
        token = self._peek()
        self._expect('const')
        self._expect('(')
        name_token = self._name()
        self._expect(')')
        return self._constant_value(name_token[1], name_token)

    def expression(self):
        token = self._name()
        name = token[1]
        if name in _OP_TOKENS:
            self._index -= 1
            spec = self.op_spec()
            self._expect('*')
            child = self.expression()
            return apply_map(self._build_op(spec, child.dim.size, token), child)
        self._expect('(')
        if name == 'var':
            var_token = self._name()
            self._expect(')')
            if var_token[1] not in self._variables:
                raise UnresolvedConstantError('undeclared variable %r' % var_token[1],
                                              var_token[2], var_token[3])
            return variable_with_id(var_token[1], self._variables[var_token[1]])
        if name == 'const':
            const_token = self._name()
            self._expect(')')
            kind, value = self._constant_value(const_token[1], const_token)
            return Constant(sp.csc_matrix(value) if kind == 'sparse' else value)
        args = []
        if self._peek()[1] != ')':
            args.append(self.expression())
            while self._peek()[1] == ',':
                self._next()
                args.append(self.expression())
        self._expect(')')
        if name == 'add':
            if not args:
                self._fail('add needs at least one argument', token)
            return affine_sum(args) if self._compiled else add_exprs(args)
        params = self.params() if self._peek()[1] == '{' else {}
        if self._compiled:
            atom = {v: k for k, v in PROX_NAMES.items()}.get(name, name)
            from proxcomp.prox.registry import has_prox
            if not has_prox(name):
                self._fail('unknown prox function %r' % name, token)
            try:
                merged = dict(atom_signature(atom).defaults)
            except KeyError:
                merged = {}
            merged.update(params)
            return prox_function(name, args, merged)
        try:
            return build_atom(name, args, params)
        except KeyError:
            self._fail('unknown atom %r' % name, token)

    def params(self):
        self._expect('{')
        params = {}
        while True:
            key = self._name()[1]
            self._expect('=')
            params[key] = self._param_value(key)
            if self._peek()[1] == ',':
                self._next()
                continue
            self._expect('}')
            return params

    def _param_value(self, key):
        token = self._peek()
        if token[1] == 'const':
            kind, value = self._constant_ref()
            return np.array(value.reshape(-1, order='F'))
        token = self._next()
        if token[0] != 'number':
            self._fail('expected a number for %s' % key, token)
        text = token[1]
        if ':' in text:
            return tuple(int(v) for v in text.split(':'))
        if re.fullmatch(r'[-+]?\d+', text):
            return int(text)
        return float(text)

    def op_spec(self):
        token = self._name()
        kind = token[1]
        if kind not in _OP_TOKENS:
            self._fail('expected a linear operator, found %r' % kind, token)
        self._expect('(')
        if kind == 'scalar':
            number = self._next()
            if number[0] != 'number':
                self._fail('scalar() takes a number', number)
            spec = ('scalar', float(number[1]))
        elif kind == 'kron':
            left = self.op_spec()
            self._expect(',')
            right = self.op_spec()
            spec = ('kron', left, right)
        else:
            name_token = self._name()
            spec = (kind, self._constant_value(name_token[1], name_token)[1])
        self._expect(')')
        return spec

    def _spec_input(self, spec):
        kind = spec[0]
        if kind == 'scalar':
            return None
        if kind == 'diag':
            return spec[1].size
        if kind in ('dense', 'sparse'):
            return spec[1].shape[1]
        left, right = self._spec_input(spec[1]), self._spec_input(spec[2])
        if left is None or right is None:
            return None
        return left * right

    def _build_op(self, spec, n_in, token):
        kind = spec[0]
        if kind == 'scalar':
            return ScalarOp(spec[1], n_in)
        if kind == 'diag':
            return DiagonalOp(spec[1].reshape(-1, order='F'))
        if kind == 'dense':
            return DenseOp(spec[1])
        if kind == 'sparse':
            return SparseOp(sp.csc_matrix(spec[1]))
        left_spec, right_spec = spec[1], spec[2]
        right_in = self._spec_input(right_spec)
        left_in = self._spec_input(left_spec)
        if right_in is not None:
            left_in = n_in // right_in
        elif left_in is not None:
            right_in = n_in // left_in
        else:
            left_in, right_in = 1, n_in
        if left_in * right_in != n_in:
            self._fail('kron operator does not fit an input of size %d' % n_in, token)
        return KronOp(self._build_op(left_spec, left_in, token), self._build_op(right_spec, right_in, token))


def _parse_line(text, number, variables, constants, compiled):
    parser = _Parser(_tokenize(text, number), variables, constants, compiled)
    expr = parser.expression()
    parser.finish()
    return expr


def _sections(text):
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if line in (OBJECTIVE, CONSTRAINTS, MINIMIZE, SUBJECT_TO):
            section = line
            continue
        if line.startswith(OFFSET):
            yield OFFSET, line[len(OFFSET):], number
            continue
        if section is None:
            raise ParseError('expected a section header before %r' % line, number, 1)
        column = len(raw) - len(raw.lstrip()) + 1
        yield section, raw[column - 1:], number


def parse(text, data=None):
    """
    Parse a compiled program.

    Args:
        text (str): Program text.
        data (str): Sidecar text with variable dimensions and constant values.
    Returns:
        (ProxAffineProblem): Terms, offset and the zero constraints of a separable listing.
    Raises:
        ParseError: Malformed text, with line and column.
        UnresolvedConstantError: A constant or variable missing from the sidecar.
    """
    variables, constants = parse_data(data)
    terms, constraints, offset = [], [], 0.0
    for section, body, number in _sections(text):
        if section == OFFSET:
            try:
                offset = float(body)
            except ValueError:
                raise ParseError('bad offset %r' % body.strip(), number, 1)
        elif section == OBJECTIVE:
            expr = _parse_line(body, number, variables, constants, True)
            if expr.kind != Constants.PROX_FUNCTION:
                raise ParseError('objective lines must be prox functions', number, 1)
            terms.append(expr)
        elif section == CONSTRAINTS:
            expr = _parse_line(body, number, variables, constants, True)
            if expr.kind != Constants.PROX_FUNCTION or expr.name != Constants.ZERO:
                raise ParseError('constraints must be zero(...) lines', number, 1)
            constraints.append(expr.children[0])
        else:
            raise ParseError('%s belongs to an uncompiled problem' % section, number, 1)
    return ProxAffineProblem(terms, offset, constraints)


def parse_problem(text, data=None):
    """ Parse an uncompiled Problem written by serialize_problem. """
    variables, constants = parse_data(data)
    objective, constraints = None, []
    for section, body, number in _sections(text):
        if section == MINIMIZE:
            if objective is not None:
                raise ParseError('more than one objective line', number, 1)
            objective = _parse_line(body, number, variables, constants, False)
        elif section == SUBJECT_TO:
            expr = _parse_line(body, number, variables, constants, False)
            if expr.kind != Constants.ATOM or expr.name not in Constants.CONES:
                raise ParseError('constraints must be cone atoms', number, 1)
            constraints.append(Constraint(expr.name, expr.children))
        else:
            raise ParseError('%s belongs to a compiled program' % section, number, 1)
    if objective is None:
        raise ParseError('missing objective', 1, 1)
    return Problem(objective, constraints)


def is_compiled_text(text):
    for line in text.splitlines():
        line = line.strip()
        if line:
            return line != MINIMIZE
    return True


def write_program(path, p):
    """ Write a program and its sidecar (``<path>.dat``). """
    if isinstance(p, Problem):
        text, data = _render_problem(p)
    else:
        text, data = _render_compiled(p)
    with open(path, 'w') as handle:
        handle.write(text)
    with open(path + '.dat', 'w') as handle:
        handle.write(data)


def read_program(path):
    """
    Read a program written by write_program.

    Returns:
        (Problem or ProxAffineProblem): Depending on the sections found.
    """
    with open(path) as handle:
        text = handle.read()
    data = None
    try:
        with open(path + '.dat') as handle:
            data = handle.read()
    except FileNotFoundError:
        pass
    if is_compiled_text(text):
        return parse(text, data)
    return parse_problem(text, data)
