"""
Euler-Poisson ion lab - dispersion relation

The dispersion relation of the linearized ion system is Lambda(xi) =
lambda(|xi|) with lambda(x) = x * sqrt((2 + x^2) / (1 + x^2)). Its second
derivative changes sign at gamma0 = sqrt(1 + sqrt(7)), where the radial
group velocity lambda' reaches its minimum, which makes gamma0 the single
degenerate frequency of the system.
"""

import math
import logging
import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize
from epion import output
from epion.misc import GuardError, ConfigError, validate, main_function, \
    OutputArgumentParser, positive_float, positive_int

# Module's logger
LOGGER = logging.getLogger(__name__)

# The degenerate frequency, where lambda'' vanishes
GAMMA0 = math.sqrt(1 + math.sqrt(7))

# The highest derivative order supported
MAX_ORDER = 6

# Default half-width of the window around gamma0
DEFAULT_WINDOW = 0.5

# Largest accepted window half-width (lambda' stays below one left of it)
MAX_WINDOW = 0.75

# Tolerance of the bracketed root searches
ROOT_TOLERANCE = 1e-14

# Largest abscissa searched on the right branch
RIGHT_BRANCH_LIMIT = 1e6

# Names of the symbols symbol_eval() supports
SYMBOLS = ("Lambda", "q", "L", "inv_one_minus_laplacian", "abs")


class DomainError(GuardError):
    """A point is outside the domain of an operation"""


class NoRootError(GuardError):
    """A root searched for doesn't exist"""


def _derivative_numerators(max_order):
    """
    Compute the numerator polynomials P_m of the derivatives
    lambda^(m)(x) = P_m(x) (1+x^2)^-(2m+1)/2 (2+x^2)^-(2m-1)/2, m >= 1,
    by differentiating the representation symbolically.
    """
    x = Polynomial([0, 1])
    a_poly = Polynomial([1, 0, 1])
    b_poly = Polynomial([2, 0, 1])
    numerators = [None, Polynomial([2, 0, 2, 0, 1])]
    for order in range(1, max_order):
        a_power = (2 * order + 1) / 2
        b_power = (2 * order - 1) / 2
        numerator = numerators[-1]
        numerators.append(
            numerator.deriv() * a_poly * b_poly -
            2 * x * numerator * (a_power * b_poly + b_power * a_poly)
        )
    return numerators


# Derivative numerators, indexed by order
NUMERATORS = _derivative_numerators(MAX_ORDER)


def lambda_values(x, order=0):
    """
    Evaluate lambda or its derivative for non-negative abscissas, without
    domain checks. Order zero and one are continuous at x = 0.

    Args:
        x:      A number or an array of non-negative numbers.
        order:  The derivative order, 0 to MAX_ORDER.

    Returns:
        The value(s), shaped like x.
    """
    assert 0 <= order <= MAX_ORDER
    x = np.asarray(x, dtype=float)
    square = x * x
    if order == 0:
        return x * np.sqrt((2 + square) / (1 + square))
    return NUMERATORS[order](x) * \
        (1 + square) ** (-(2 * order + 1) / 2) * \
        (2 + square) ** (-(2 * order - 1) / 2)


def _as_result(value):
    """Return a Python float for zero-dimensional arrays"""
    return float(value) if np.ndim(value) == 0 else value


def lambda_eval(x, order=0):
    """
    Evaluate the radial dispersion profile lambda(x) or one of its
    derivatives.

    Args:
        x:      A positive number, or an array of positive numbers.
        order:  The derivative order, 0 to 4 (up to MAX_ORDER is accepted).

    Returns:
        The value(s): a float for a scalar x, an array otherwise.

    Raises:
        DomainError if any x is not positive and finite, or the order is
        out of range.
    """
    if isinstance(order, bool) or not isinstance(order, int) or \
       not 0 <= order <= MAX_ORDER:
        raise DomainError(f"lambda derivatives have orders 0 to "
                          f"{MAX_ORDER}, got {order!r}")
    array = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(array)) or np.any(array <= 0):
        raise DomainError(f"lambda is evaluated for positive x only, "
                          f"got {x!r}")
    return _as_result(lambda_values(array, order))


def gamma0():
    """Get the degenerate frequency sqrt(1 + sqrt(7))"""
    return GAMMA0


# Taylor coefficients of lambda at zero (odd powers) and infinity
SERIES = dict(
    zero=(math.sqrt(2), -1 / (2 * math.sqrt(2)), 7 / (16 * math.sqrt(2)),
          -25 / (64 * math.sqrt(2))),
    infinity=(1, 1 / 2, -5 / 8, 13 / 16),
)


def lambda_series(x, at, terms=3):
    """
    Evaluate a truncated asymptotic expansion of lambda.

    Args:
        x:      The abscissa (small for "zero", large for "infinity").
        at:     "zero" for sqrt(2)x - x^3/(2sqrt(2)) + ..., or "infinity"
                for x + 1/(2x) - 5/(8x^3) + ....
        terms:  Number of terms, 1 to 4.

    Returns:
        The value of the truncated expansion.
    """
    assert at in SERIES
    assert 1 <= terms <= len(SERIES[at])
    x = np.asarray(x, dtype=float)
    coefficients = SERIES[at][:terms]
    if at == "zero":
        powers = [x ** (2 * n + 1) for n in range(terms)]
    else:
        powers = [x] + [x ** -(2 * n - 1) for n in range(1, terms)]
    return _as_result(sum(c * p for c, p in zip(coefficients, powers)))


def _bracketed_root(function, lower, upper, derivative=None):
    """
    Find a root of a function changing sign on an interval with bisection,
    then polish it with one Newton step if that stays in the bracket and
    reduces the residual.
    """
    root = optimize.bisect(function, lower, upper, xtol=ROOT_TOLERANCE,
                           maxiter=200)
    if derivative is not None:
        slope = derivative(root)
        if slope != 0:
            polished = root - function(root) / slope
            if lower <= polished <= upper and \
               abs(function(polished)) <= abs(function(root)):
                root = polished
    return float(root)


def dlambda_inverse(value, branch):
    """
    Invert lambda' on one of its monotone branches.

    Args:
        value:  The value of lambda' to find the abscissa for.
        branch: "left" for (0, gamma0], where lambda' decreases from sqrt(2)
                to lambda'(gamma0), or "right" for [gamma0, infinity), where
                it increases from lambda'(gamma0) towards one.

    Returns:
        The abscissa on the branch with lambda' equal to the value.

    Raises:
        NoRootError if the value is outside the branch's range.
    """
    assert branch in ("left", "right")
    minimum = float(lambda_values(GAMMA0, 1))
    if value <= minimum:
        # lambda' is minimal at gamma0, lower values are rounding
        return GAMMA0

    def residual(x):
        return float(lambda_values(x, 1)) - value

    def slope(x):
        return float(lambda_values(x, 2))

    if branch == "left":
        if not minimum < value < math.sqrt(2):
            raise NoRootError(f"lambda' takes no value {value!r} "
                              f"on (0, gamma0)")
        return _bracketed_root(residual, 0.0, GAMMA0, slope)

    if not minimum < value < 1:
        raise NoRootError(f"lambda' takes no value {value!r} "
                          f"on (gamma0, infinity)")
    upper = GAMMA0 + 1
    while residual(upper) <= 0:
        upper *= 2
        if upper > RIGHT_BRANCH_LIMIT:
            raise NoRootError(f"lambda' reaches {value!r} beyond "
                              f"{RIGHT_BRANCH_LIMIT!r}")
    return _bracketed_root(residual, GAMMA0, upper, slope)


def _check_window(window):
    """Check a window half-width is supported"""
    assert isinstance(window, (int, float))
    assert 0 < window <= MAX_WINDOW, \
        f"Window half-width {window!r} outside (0, {MAX_WINDOW!r}]"


def pi_map(x, window=DEFAULT_WINDOW):
    """
    Map a point to the point on the other side of gamma0 where lambda' takes
    the same value.

    Args:
        x:      A point with |x - gamma0| < window.
        window: The window half-width around gamma0.

    Returns:
        The point pi(x), with pi(gamma0) = gamma0.

    Raises:
        DomainError     - x is outside the window.
        NoRootError     - lambda'(x) is outside the range of the other
                          branch.
    """
    _check_window(window)
    if not abs(x - GAMMA0) < window:
        raise DomainError(f"pi is defined within {window!r} of gamma0, "
                          f"got {x!r}")
    if x == GAMMA0:
        return GAMMA0
    value = float(lambda_values(x, 1))
    return dlambda_inverse(value, "right" if x < GAMMA0 else "left")


def _in_window(x, window):
    return abs(x - GAMMA0) < window


def space_resonance_roots(s, signs, window=DEFAULT_WINDOW):
    """
    Find the roots r of lambda'(r - s) = lambda'(r) with both frequencies of
    the interaction, |r| and |s - r|, within the window around gamma0.

    Args:
        s:      The output frequency magnitude, positive.
        signs:  The pair of interaction signs (iota1, iota2), each +1 or -1.
        window: The window half-width around gamma0.

    Returns:
        The sorted list of roots. For equal signs these are s/2 and, for
        s > 2 gamma0, the pair P1 < gamma0 < P2 = pi(P1) with P1 + P2 = s.
        For opposite signs this is the root r > gamma0 with r - s = pi(r).

    Raises:
        DomainError if s is not positive.
    """
    assert len(signs) == 2 and all(sign in (1, -1) for sign in signs)
    _check_window(window)
    if not s > 0 or not math.isfinite(s):
        raise DomainError(f"Frequency magnitude must be positive, got {s!r}")
    roots = []
    inner = window * (1 - 1e-9)

    if signs[0] == signs[1]:
        if _in_window(s / 2, window):
            roots.append(s / 2)
        if s > 2 * GAMMA0:
            def excess(x):
                return x + pi_map(x, window) - s
            lower = GAMMA0 - inner
            try:
                lower_excess = excess(lower)
            except NoRootError:
                lower_excess = math.inf
            if lower_excess > 0:
                first = _bracketed_root(excess, lower, GAMMA0)
                second = pi_map(first, window)
                for root in (first, second):
                    if _in_window(root, window) and \
                       _in_window(s - root, window):
                        roots.append(root)
    else:
        def excess(r):
            return r - pi_map(r, window) - s
        upper = GAMMA0 + inner
        if excess(upper) > 0:
            root = _bracketed_root(excess, GAMMA0, upper)
            if _in_window(root - s, window):
                roots.append(root)

    LOGGER.debug("Space resonance roots for s=%r, signs=%r: %r",
                 s, signs, roots)
    return sorted(roots)


def symbol(which, radius):
    """
    Evaluate a radial Fourier multiplier symbol on frequency magnitudes,
    with the limit value at zero.

    Args:
        which:  The symbol name: "Lambda" (the dispersion relation), "q"
                (Lambda(xi)/|xi|), "L" (|xi|/(1+|xi|^2)),
                "inv_one_minus_laplacian" (1/(1+|xi|^2)), or "abs" (|xi|).
        radius: A number or an array of non-negative frequency magnitudes.

    Returns:
        The symbol values, shaped like radius.
    """
    assert which in SYMBOLS
    radius = np.asarray(radius, dtype=float)
    square = radius * radius
    if which == "Lambda":
        return lambda_values(radius)
    if which == "q":
        return np.sqrt((2 + square) / (1 + square))
    if which == "L":
        return radius / (1 + square)
    if which == "inv_one_minus_laplacian":
        return 1 / (1 + square)
    return radius


def symbol_eval(xi, which):
    """
    Evaluate a radial symbol at a frequency vector.

    Args:
        xi:     A 2-vector, or an array of 2-vectors along the last axis.
        which:  The symbol name, one of SYMBOLS.

    Returns:
        The symbol value(s).

    Raises:
        DomainError if which is unknown.
    """
    if which not in SYMBOLS:
        raise DomainError(f"Unknown symbol {which!r}")
    xi = np.asarray(xi, dtype=float)
    assert xi.shape[-1] == 2
    return _as_result(symbol(which, np.linalg.norm(xi, axis=-1)))


def dlambda_sup(points=4096):
    """
    Estimate the supremum of lambda' over (0, infinity) from a log-spaced
    scan. The supremum is the limit sqrt(2) at zero.

    Args:
        points: Number of scan points.

    Returns:
        The largest scanned value, at least the value at the smallest point.
    """
    scan = np.concatenate(([0.0], np.geomspace(1e-8, 1e4, points)))
    return float(np.max(lambda_values(scan, 1)))


def _window_offsets(window, samples):
    return np.geomspace(1e-3 * window, window * (1 - 1e-9), samples)


def comparability_constants(window=0.1, samples=200):
    """
    Estimate the constants of the two-sided comparability
    |lambda'(x) - lambda'(y)| ~ |x - y| max(|x - gamma0|, |y - gamma0|)
    for x, y on the same side of gamma0 within the window.

    Args:
        window:     The window half-width around gamma0.
        samples:    Number of offsets sampled on each side.

    Returns:
        The (lower, upper) bounds of the ratio over the sampled pairs.
    """
    _check_window(window)
    offsets = _window_offsets(window, samples)
    first, second = np.meshgrid(offsets, offsets, indexing="ij")
    mask = first < second
    ratios = []
    for side in (-1, 1):
        x = GAMMA0 + side * first[mask]
        y = GAMMA0 + side * second[mask]
        ratios.append(
            np.abs(lambda_values(x, 1) - lambda_values(y, 1)) /
            (np.abs(x - y) * np.maximum(np.abs(x - GAMMA0),
                                        np.abs(y - GAMMA0)))
        )
    ratios = np.concatenate(ratios)
    return float(np.min(ratios)), float(np.max(ratios))


def reflection_constants(window=0.1, samples=100):
    """
    Estimate the constants of the reflection pi around gamma0:
    |pi(x) - gamma0| ~ |x - gamma0| and
    |lambda''(x) + lambda''(pi(x))| <~ |x - gamma0|^2.

    Args:
        window:     The window half-width around gamma0.
        samples:    Number of offsets sampled on each side.

    Returns:
        A dictionary with "distance" (lower, upper) bounds of
        |pi(x) - gamma0| / |x - gamma0|, and "curvature", the upper bound of
        |lambda''(x) + lambda''(pi(x))| / |x - gamma0|^2.
    """
    _check_window(window)
    distances = []
    curvatures = []
    for side in (-1, 1):
        for offset in _window_offsets(window, samples):
            x = GAMMA0 + side * offset
            try:
                image = pi_map(x, window)
            except NoRootError:
                continue
            distances.append(abs(image - GAMMA0) / offset)
            curvatures.append(
                abs(lambda_values(x, 2) + lambda_values(image, 2)) /
                offset ** 2
            )
    return dict(distance=(min(distances), max(distances)),
                curvature=float(max(curvatures)))


def tabulate(kind, x_min=0.05, x_max=5.0, points=100, window=DEFAULT_WINDOW,
             all_orders=False):
    """
    Tabulate the dispersion relation and its derived maps.

    Args:
        kind:       "lambda" for x, lambda, dlambda, d2lambda (and d3lambda,
                    d4lambda with all_orders), "pi" for x, pi over the
                    window, or "roots" for s, iota1, iota2, root over
                    s in [x_min, x_max].
        x_min:      The smallest abscissa (or s), positive.
        x_max:      The largest abscissa (or s).
        points:     Number of abscissas.
        window:     The window half-width around gamma0 for "pi" and
                    "roots".
        all_orders: Add the third and fourth derivatives to the "lambda"
                    table.

    Returns:
        The header list and the list of rows.
    """
    assert kind in ("lambda", "pi", "roots")
    assert 0 < x_min < x_max
    assert isinstance(points, int) and points >= 2
    if kind == "lambda":
        orders = range(5 if all_orders else 3)
        header = ["x"] + ["lambda", "dlambda", "d2lambda",
                          "d3lambda", "d4lambda"][:len(orders)]
        xs = np.linspace(x_min, x_max, points)
        columns = [xs] + [lambda_values(xs, order) for order in orders]
        return header, [list(row) for row in zip(*columns)]
    if kind == "pi":
        rows = []
        xs = np.linspace(GAMMA0 - window, GAMMA0 + window, points + 2)
        for x in xs[1:-1]:
            try:
                rows.append([x, pi_map(x, window)])
            except NoRootError:
                LOGGER.debug("No reflection of %r", x)
        return ["x", "pi"], rows
    rows = []
    for s in np.linspace(x_min, x_max, points):
        for signs in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            for root in space_resonance_roots(s, signs, window):
                rows.append([s, signs[0], signs[1], root])
    return ["s", "iota1", "iota2", "root"], rows


# JSON schema for dispersion tabulation parameters
PARAMETERS_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["lambda", "pi", "roots"]},
        "x_min": {"type": "number", "exclusiveMinimum": 0},
        "x_max": {"type": "number", "exclusiveMinimum": 0},
        "points": {"type": "integer", "minimum": 2, "maximum": 1000000},
        "window": {"type": "number", "exclusiveMinimum": 0,
                   "maximum": MAX_WINDOW},
        "all_orders": {"type": "boolean"},
    },
    "additionalProperties": False,
}


def experiment(parameters, seed, out):
    """
    Run the dispersion tabulation experiment and write its CSV.

    Args:
        parameters: The JSON parameters (see PARAMETERS_SCHEMA).
        seed:       The seed (recorded in the manifest only).
        out:        The output CSV path.

    Returns:
        The path written.

    Raises:
        ConfigError if the parameters are invalid.
    """
    validate(parameters, PARAMETERS_SCHEMA)
    kwargs = dict(parameters)
    kind = kwargs.pop("kind", "lambda")
    if kwargs.get("x_min", 0.05) >= kwargs.get("x_max", 5.0):
        raise ConfigError("x_min must be below x_max")
    header, rows = tabulate(kind, **kwargs)
    LOGGER.info("Tabulated %d rows of %r", len(rows), kind)
    return output.write_csv(out, header, rows,
                            output.manifest("dispersion", parameters, seed))


@main_function
def tabulate_main():
    """Execute the epion-dispersion command-line tool"""
    description = \
        'epion-dispersion - Tabulate the dispersion relation, ' \
        'its reflection map pi, or space resonance roots'
    parser = OutputArgumentParser(description=description,
                                  default_out="dispersion.csv")
    parser.add_argument(
        '--kind',
        choices=["lambda", "pi", "roots"],
        default="lambda",
        help='The table to write. Default is lambda.'
    )
    parser.add_argument('--x-min', metavar="X", type=positive_float,
                        default=0.05, help='Smallest abscissa (or s).')
    parser.add_argument('--x-max', metavar="X", type=positive_float,
                        default=5.0, help='Largest abscissa (or s).')
    parser.add_argument('--points', metavar="NUMBER", type=positive_int,
                        default=100, help='Number of abscissas.')
    parser.add_argument('--window', metavar="WIDTH", type=positive_float,
                        default=DEFAULT_WINDOW,
                        help='Window half-width around gamma0.')
    parser.add_argument('--all-orders', action='store_true',
                        help='Add third and fourth derivative columns.')
    args = parser.parse_args()
    experiment(dict(kind=args.kind, x_min=args.x_min, x_max=args.x_max,
                    points=args.points, window=args.window,
                    all_orders=args.all_orders),
               args.seed, args.out)
    return 0
