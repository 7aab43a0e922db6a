class Constants:
    # EXPRESSION KINDS
    VARIABLE = 'variable'
    CONSTANT = 'constant'
    LINEAR_MAP = 'linear_map'
    PROX_FUNCTION = 'prox_function'
    ATOM = 'atom'
    ADD = 'add'

    # CONES
    ZERO = 'zero'
    NONNEG = 'nonneg'
    SOC = 'soc'
    PSD = 'psd'
    CONES = (ZERO, NONNEG, SOC, PSD)

    # CURVATURE
    CONSTANT_CURVATURE = 'constant'
    AFFINE = 'affine'
    CONVEX = 'convex'
    CONCAVE = 'concave'
    UNKNOWN = 'unknown'

    # SIGN
    POSITIVE = 'positive'
    NEGATIVE = 'negative'
    UNKNOWN_SIGN = 'unknown'

    # MONOTONICITY
    NONDECREASING = 'nondecreasing'
    NONINCREASING = 'nonincreasing'
    NONMONOTONE = 'nonmonotone'

    # LINEAR OPERATOR VARIANTS
    DENSE = 'dense'
    SPARSE = 'sparse'
    DIAGONAL = 'diag'
    SCALAR = 'scalar'
    KRON = 'kron'
    SUM = 'sum'
    PRODUCT = 'product'
    ABSTRACT = 'abstract'

    # MAP CLASSES FOR PROX COMPOSITIONS
    MAP_IDENTITY = 'identity'
    MAP_SCALAR = 'scalar'
    MAP_DIAGONAL = 'diagonal'
    MAP_GENERAL = 'general'

    # SOLUTION METHODS
    EXACT_EQUATION = 'exact-equation'
    SOFT_THRESHOLD = 'soft-threshold'
    NEWTON = 'newton'
    PROJECTION = 'projection/moreau'
    ORTHOGONALLY_INVARIANT = 'orthogonally-invariant'
    SPECIAL_PURPOSE = 'special-purpose'
    LINEAR_SOLVE = 'linear-solve'

    # ARGUMENT POLICIES
    ACCEPT = 'accept-as-is'
    ELEMENTWISE = 'require-elementwise-affine'
    VARIABLE_ONLY = 'require-variable-only'
    KRON_SPLITTABLE = 'kron-splittable'

    # RULE KINDS
    DIRECT = 'direct'
    EPIGRAPH = 'epigraph'
    KRON_SPLIT = 'kron-split'
    CONIC = 'conic'

    # SOLVER STATUS
    OPTIMAL = 'optimal-to-tolerance'
    MAX_ITERS = 'max-iters'
    FAILED = 'failed'

    # EMIT FORMS
    EMIT_PROX_AFFINE = 'prox-affine'
    EMIT_SEPARABLE = 'separable'

    # FRESH VARIABLE PREFIXES
    EPI_PREFIX = '_epi'
    SPLIT_PREFIX = '_split'
    CONIC_PREFIX = '_conic'
    SEPARATE_PREFIX = '_sep'

    # DEFAULTS
    DEFAULT_LAMBDA = 1.0
    DEFAULT_MAX_ITERS = 2000
    DEFAULT_ABS_TOL = 1e-4
    DEFAULT_REL_TOL = 1e-3
    DEFAULT_SEED = 0
    DEFAULT_LOG_EVERY = 50
    INDICATOR_TOL = 1e-6
    NEWTON_TOL = 1e-12
    NEWTON_MAX_ITERS = 100
    MATERIALIZE_CAP = 10 ** 7
    ADAPTIVE_FACTOR = 2.0
    ADAPTIVE_RATIO = 10.0

    # ENVIRONMENT
    SEED_ENV = 'PROXCOMP_SEED'
    LOG_LEVEL_ENV = 'PROXCOMP_LOG_LEVEL'

    # LOGGING
    LOGGER_NAME = 'proxcomp'
    STAGE_COMPILER = 'compiler'
    STAGE_SEPARATOR = 'separator'
    STAGE_SOLVER = 'solver'
    STAGE_RUNNER = 'runner'

    # EXIT CODES
    EXIT_OK = 0
    EXIT_USER_ERROR = 1
    EXIT_INTERNAL_ERROR = 2


def default_seed():
    """
    The default seed, overridden by the PROXCOMP_SEED environment variable.

    Returns:
        (int): The seed.
    """
    import os
    value = os.environ.get(Constants.SEED_ENV)
    if value is None or value.strip() == '':
        return Constants.DEFAULT_SEED
    try:
        return int(value)
    except ValueError:
        raise ValueError('%s must be an integer, got %r' % (Constants.SEED_ENV, value))
