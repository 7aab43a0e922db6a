class ProxCompError(Exception):
    """ Base class of every error raised by proxcomp. """
    pass


class DimensionError(ProxCompError, ValueError):
    pass


class UnknownAtomError(ProxCompError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ''


class ParseError(ProxCompError, ValueError):
    """ Syntax error in the text format. Carries the 1-based line and column. """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = '%s (line %d, column %d)' % (message, line, column)
        super().__init__(message)
        self.line = line
        self.column = column


class UnresolvedConstantError(ParseError):
    pass


class SerializationError(ProxCompError):
    pass


class MissingVariableError(ProxCompError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ''


class DcpError(ProxCompError):
    """ The problem was rejected by DCP verification. """

    def __init__(self, verdict):
        super().__init__('problem is not DCP: %s' % verdict.describe())
        self.verdict = verdict


class UnsupportedAtomError(ProxCompError):
    pass


class InternalCompilerError(ProxCompError, RuntimeError):
    pass


class LinearOpError(ProxCompError):
    pass


class SingularOperatorError(LinearOpError):
    def __init__(self, message, condition=None):
        if condition is not None:
            message = '%s (condition estimate %.3e)' % (message, condition)
        super().__init__(message)
        self.condition = condition


class MaterializeCapError(LinearOpError):
    pass


class DecompositionError(LinearOpError):
    pass


class ProxError(ProxCompError):
    pass


class NumericalError(ProxCompError, ArithmeticError):
    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = '%s at iteration %d' % (message, iteration)
        super().__init__(message)
        self.iteration = iteration


USER_ERRORS = (ParseError, DimensionError, DcpError, UnsupportedAtomError,
               UnknownAtomError, MissingVariableError, SerializationError)
