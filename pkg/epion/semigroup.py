"""
Euler-Poisson ion lab - the linear dispersive semigroup

Exact evaluation of exp(it Lambda(D)) on periodic grids, a radial
quadrature oracle for the same flow on the plane, and measurement of
sup-norm decay exponents.
"""

import sys
import math
import logging
from collections import namedtuple
import numpy as np
from scipy import special, stats
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar
from epion import output
from epion.dispersion import GAMMA0, MAX_WINDOW, lambda_values, \
    dlambda_inverse
from epion.field import Grid, SpectralField
from epion.paley import CUTOFFS, NormParams, a_symbol
from epion.misc import ConfigError, GuardError, validate, json_dump, \
    main_function, OutputArgumentParser, non_negative_int, positive_int, \
    positive_float

# Module's logger
LOGGER = logging.getLogger(__name__)

# Largest group velocity, the limit of lambda' at zero
MAX_GROUP_VELOCITY = math.sqrt(2)

# Relative mass in the boundary strip signalling wrap-around
WRAP_TOLERANCE = 1e-6

# Largest relative change of the sup-norm under grid refinement
REFINEMENT_TOLERANCE = 0.02

# Quadrature nodes per period of the radial integrand's oscillation
NODES_PER_PERIOD = 6

# Largest number of integrand values evaluated at once
CHUNK_SIZE = 1 << 22


class WrapAroundError(GuardError):
    """A propagated field reached the boundary of the periodic domain"""


class ResolutionError(GuardError):
    """A decay measurement changed under grid refinement"""


def propagate(profile, t):
    """
    Apply the linear flow exp(it Lambda(D)) to a field.

    Args:
        profile:    The SpectralField to propagate.
        t:          The (real) time to propagate by.

    Returns:
        The propagated (complex) field.
    """
    assert isinstance(profile, SpectralField)
    phase = np.exp(1j * t * lambda_values(profile.grid.abs_xi))
    return profile.apply(phase, real=False)


def degenerate_onset_time(width):
    """
    Get the time after which a band of the given width centered on gamma0
    decays in the cubic-degenerate regime.

    Args:
        width:  The band width, positive.

    Returns:
        The onset time 6 / (lambda'''(gamma0) (width/2)^3).
    """
    assert width > 0
    return 6 / (float(lambda_values(GAMMA0, 3)) * (width / 2) ** 3)


def stationary_points(r_prime):
    """
    Find the radii where the group velocity lambda' equals a value.

    Args:
        r_prime:    The group velocity, non-negative.

    Returns:
        The sorted list of zero, one, or two radii.
    """
    assert r_prime >= 0
    minimum = float(lambda_values(GAMMA0, 1))
    if r_prime < minimum:
        return []
    points = {dlambda_inverse(r_prime, "left")} \
        if r_prime < MAX_GROUP_VELOCITY else set()
    if r_prime < 1:
        points.add(dlambda_inverse(r_prime, "right"))
    return sorted(points)


class RadialProfile:
    """
    An L2-normalized radial profile given by its continuum Fourier transform
    on a band of frequency magnitudes.
    """

    def __init__(self, shape, lower, upper, nodes=4001):
        """
        Initialize the profile, normalizing its shape.

        Args:
            shape:  A function of frequency magnitude arrays, vanishing
                    outside [lower, upper].
            lower:  The lower band boundary, non-negative.
            upper:  The upper band boundary.
            nodes:  Number of quadrature nodes for the normalization.

        Raises:
            ConfigError if the shape vanishes.
        """
        assert 0 <= lower < upper
        self.shape = shape
        self.lower = lower
        self.upper = upper
        rho = np.linspace(lower, upper, nodes)
        norm = math.sqrt(trapezoid(shape(rho) ** 2 * rho, rho) / (2 * np.pi))
        if not norm > 0:
            raise ConfigError(f"Empty profile on [{lower!r}, {upper!r}]")
        self.scale = 1 / norm

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        inside = (rho >= self.lower) & (rho <= self.upper)
        return np.where(inside, self.scale * self.shape(rho), 0.0)

    def group_velocities(self, nodes=2001):
        """Get the smallest and largest group velocity over the band"""
        velocities = lambda_values(np.linspace(self.lower, self.upper,
                                               nodes), 1)
        return float(np.min(velocities)), float(np.max(velocities))


class DecayProbeSpec:
    """Parameters of a dispersive decay measurement"""

    # JSON schema for the parameters
    JSON_SCHEMA = {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": -20, "maximum": 20},
            "shell": {
                "anyOf": [
                    {"enum": ["generic", "aggregate"]},
                    {"type": "integer", "minimum": 0},
                ]
            },
            "band": {
                "type": "array",
                "items": {"type": "number", "minimum": 0},
                "minItems": 2, "maxItems": 2,
            },
            "times": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 3,
            },
            "method": {"enum": ["radial", "grid"]},
            "domain_length": {"type": "number", "exclusiveMinimum": 0},
            "grid": {"type": "integer", "minimum": 2},
            "gamma_scale": {"type": "number", "minimum": 1},
            "refine": {"type": "boolean"},
        },
        "required": ["times"],
        "additionalProperties": False,
    }

    # pylint: disable=too-many-arguments,too-many-branches
    # pylint: disable=too-many-instance-attributes
    def __init__(self, times, k=0, shell="generic", band=None,
                 method="radial", domain_length=None, grid=None,
                 gamma_scale=2 ** 6, refine=False):
        """
        Initialize the probe parameters.

        Args:
            times:          The increasing positive times to measure at.
            k:              The frequency shell of the profile.
            shell:          "generic" to exclude the gamma0 neighborhood,
                            an integer n for the gamma0-distance shell A_n,
                            or "aggregate" for the sum of A_n, n >= 1.
            band:           A (lower, upper) band of frequency magnitudes
                            overriding k and shell, or None.
            method:         "radial" for the quadrature oracle, "grid" for
                            the periodic grid.
            domain_length:  The grid domain length, None for the smallest
                            one without wrap-around.
            grid:           The grid size, a power of two, None for the
                            smallest one resolving the band.
            gamma_scale:    The scale of the gamma0-distance shells.
            refine:         Check the last sup-norm on a twice finer grid.

        Raises:
            ConfigError if the parameters are inconsistent.
        """
        times = [float(t) for t in times]
        if len(times) < 3 or times[0] <= 0 or \
           any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("Need at least three increasing positive times")
        if method not in ("radial", "grid"):
            raise ConfigError(f"Unknown method {method!r}")
        self.times = times
        self.k = k
        self.shell = shell
        self.band = None if band is None else tuple(band)
        self.method = method
        self.gamma_scale = gamma_scale
        self.refine = refine
        self.profile = radial_profile(self)
        self.domain_length = domain_length
        self.grid = grid
        if method != "grid":
            return
        minimum_length = 4 * MAX_GROUP_VELOCITY * times[-1]
        if domain_length is None:
            self.domain_length = minimum_length
        elif domain_length < minimum_length:
            raise ConfigError(f"Domain length {domain_length!r} allows "
                              f"wrap-around before t={times[-1]!r}, "
                              f"need at least {minimum_length!r}")
        if grid is None:
            self.grid = 2
            while Grid(self.grid, self.domain_length).nyquist <= \
                    2 * self.profile.upper:
                self.grid *= 2
        elif grid & (grid - 1):
            raise ConfigError(f"Grid size {grid!r} is not a power of two")
        resolved = Grid(self.grid, self.domain_length)
        if self.profile.upper >= resolved.nyquist:
            raise ConfigError(f"{resolved!r} doesn't resolve frequencies "
                              f"up to {self.profile.upper!r}")
        if self.profile.upper - self.profile.lower < \
           8 * resolved.lowest_wavenumber:
            raise ConfigError(f"{resolved!r} is too coarse in frequency "
                              f"for the band [{self.profile.lower!r}, "
                              f"{self.profile.upper!r}]")

    @classmethod
    def from_json(cls, data):
        """
        Create probe parameters from their JSON representation.

        Raises:
            ConfigError if the JSON is invalid.
        """
        return cls(**validate(data, cls.JSON_SCHEMA))


def _band_profile(lower, upper):
    """
    A Gaussian in the frequency magnitude, three standard deviations to
    each side of the band center fitting the band, cut at six.
    """
    center = (lower + upper) / 2
    sigma = (upper - lower) / 6

    def shape(rho):
        return np.exp(-((rho - center) / sigma) ** 2 / 2)
    return RadialProfile(shape, max(0.0, center - 6 * sigma),
                         center + 6 * sigma)


def radial_profile(spec):
    """
    Create the radial profile of a decay probe: the shell psi_k times the
    gamma0-distance localization, or a Gaussian on an explicit band.

    Args:
        spec:   The DecayProbeSpec.

    Returns:
        The RadialProfile.

    Raises:
        ConfigError if the localization is empty.
    """
    if spec.band is not None:
        lower, upper = spec.band
        if not 0 <= lower < upper:
            raise ConfigError(f"Invalid band {spec.band!r}")
        return _band_profile(lower, upper)
    params = NormParams(gamma_scale=spec.gamma_scale)
    lower = CUTOFFS.plateau / 2 * 2.0 ** spec.k
    upper = CUTOFFS.support * 2.0 ** spec.k
    # A_0 excludes the gamma0 neighborhood, like the generic profile
    shell = "generic" if spec.shell == 0 else spec.shell
    if shell == "aggregate":
        reach = CUTOFFS.support / 2 / spec.gamma_scale
    elif shell != "generic":
        reach = CUTOFFS.support * 2.0 ** -shell / spec.gamma_scale
    if shell != "generic":
        if reach > MAX_WINDOW:
            raise ConfigError(f"Shell {shell!r} reaches beyond the "
                              f"gamma0 window")
        lower = max(lower, GAMMA0 - reach)
        upper = min(upper, GAMMA0 + reach)
        if lower >= upper:
            raise ConfigError(f"Frequency shell k={spec.k} doesn't meet "
                              f"gamma0-distance shell {shell!r}")

    def shape(rho):
        return CUTOFFS.psi(rho, spec.k) * \
            a_symbol(rho, 0 if shell == "generic" else shell, params)
    return RadialProfile(shape, lower, upper)


def profile_bump(grid, spec):
    """
    Sample a decay probe's profile on a grid.

    Args:
        grid:   The Grid to sample on.
        spec:   The DecayProbeSpec, or a RadialProfile.

    Returns:
        The real SpectralField centered at the origin.
    """
    profile = spec if isinstance(spec, RadialProfile) else spec.profile
    return SpectralField.from_symbol(
        grid, lambda xi1, xi2: profile(np.hypot(xi1, xi2)), real=True
    )


def radial_values(profile, t, radii):
    """
    Evaluate exp(it Lambda(D)) f for a radial profile on the plane by
    quadrature of (2 pi)^-1 integral exp(it lambda(rho)) f(rho) J0(r rho)
    rho d rho.

    Args:
        profile:    The RadialProfile.
        t:          The time.
        radii:      An array of non-negative radii.

    Returns:
        The complex values at the radii.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    frequency = abs(t) * MAX_GROUP_VELOCITY + np.max(radii) + 1
    periods = frequency * (profile.upper - profile.lower) / (2 * np.pi)
    nodes = max(2001, int(math.ceil(NODES_PER_PERIOD * periods)) + 1)
    rho = np.linspace(profile.lower, profile.upper, nodes)
    weights = np.exp(1j * t * lambda_values(rho)) * profile(rho) * rho
    values = np.empty(len(radii), dtype=complex)
    chunk = max(1, CHUNK_SIZE // nodes)
    for start in range(0, len(radii), chunk):
        part = radii[start:start + chunk]
        values[start:start + chunk] = trapezoid(
            weights * special.j0(np.outer(part, rho)), rho, axis=1
        )
    return values / (2 * np.pi)


def radial_supnorm(profile, t, points=512, peaks=3):
    """
    Compute sup |exp(it Lambda(D)) f| for a radial profile, scanning the
    group-velocity cone and refining around the largest local maxima.

    Args:
        profile:    The RadialProfile.
        t:          The non-negative time.
        points:     Number of radii in the scan.
        peaks:      Number of local maxima to refine.

    Returns:
        The sup-norm.
    """
    slowest, fastest = profile.group_velocities()
    margin = 20 / (profile.upper - profile.lower) + 10
    lower = max(0.0, slowest * t - margin)
    radii = np.linspace(lower, fastest * t + margin, points)
    magnitudes = np.abs(radial_values(profile, t, radii))
    padded = np.concatenate(([-np.inf], magnitudes, [-np.inf]))
    maxima = np.flatnonzero((padded[1:-1] >= padded[:-2]) &
                            (padded[1:-1] >= padded[2:]))
    maxima = maxima[np.argsort(magnitudes[maxima])[::-1][:peaks]]
    best = float(np.max(magnitudes))
    for index in maxima:
        if index == 0 and lower == 0:
            continue
        result = minimize_scalar(
            lambda r: -abs(radial_values(profile, t, r)[0]),
            bounds=(radii[max(index - 1, 0)],
                    radii[min(index + 1, points - 1)]),
            method="bounded",
            options=dict(xatol=1e-3 * (radii[1] - radii[0])),
        )
        best = max(best, float(-result.fun))
    return best


# A fitted power law: the log-log slope, its 95% confidence interval,
# the prefactor, and the number of points fitted
DecayFit = namedtuple("DecayFit", "slope interval prefactor points")


def fit_decay(times, values):
    """
    Fit a power law to values over the last decade of times.

    Args:
        times:  The increasing positive times.
        values: The positive values at the times.

    Returns:
        The DecayFit.

    Raises:
        ConfigError if fewer than three times are in the last decade.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    window = times >= times[-1] / 10 * (1 - 1e-12)
    if np.count_nonzero(window) < 3:
        raise ConfigError("Need at least three times in the last decade")
    fit = stats.linregress(np.log(times[window]), np.log(values[window]))
    points = int(np.count_nonzero(window))
    spread = stats.t.ppf(0.975, points - 2) * fit.stderr
    return DecayFit(float(fit.slope),
                    (float(fit.slope - spread), float(fit.slope + spread)),
                    float(math.exp(fit.intercept)), points)


def boundary_mass(field):
    """Get the relative mass of a field in the outer strip of its domain"""
    grid = field.grid
    strip = np.maximum(np.abs(grid.x[0]), np.abs(grid.x[1])) > \
        0.45 * grid.length
    density = np.abs(field.physical) ** 2
    return float(np.sum(density[strip]) / np.sum(density))


def supnorm_series(profile, times):
    """
    Propagate a field on its grid and measure it at a series of times.

    Args:
        profile:    The SpectralField to propagate.
        times:      The times to measure at.

    Returns:
        The list of (t, sup-norm, L2 norm) tuples.

    Raises:
        WrapAroundError if the field reaches the domain boundary.
    """
    rows = []
    for t in times:
        field = propagate(profile, t)
        mass = boundary_mass(field)
        if mass > WRAP_TOLERANCE:
            raise WrapAroundError(f"Relative mass {mass:.3g} reached the "
                                  f"boundary of {profile.grid!r} at t={t!r}")
        rows.append((t, field.sup_norm(), field.l2_norm()))
        LOGGER.debug("t=%r: sup-norm %r", t, rows[-1][1])
    return rows


# A decay measurement: the DecayFit and the (t, sup-norm, L2 norm) rows
DecayProbe = namedtuple("DecayProbe", "fit rows")


def decay_exponent_probe(spec):
    """
    Measure the sup-norm decay of the linear flow from a localized profile.

    Args:
        spec:   The DecayProbeSpec.

    Returns:
        The DecayProbe.

    Raises:
        WrapAroundError     - the field reached the grid domain boundary.
        ResolutionError     - the last sup-norm changed under refinement.
    """
    assert isinstance(spec, DecayProbeSpec)
    if spec.method == "radial":
        rows = [(t, radial_supnorm(spec.profile, t), 1.0)
                for t in spec.times]
    else:
        grid = Grid(spec.grid, spec.domain_length)
        LOGGER.info("Probing decay on %r", grid)
        rows = supnorm_series(profile_bump(grid, spec), spec.times)
        if spec.refine:
            fine = Grid(2 * spec.grid, spec.domain_length)
            _, value, _ = supnorm_series(profile_bump(fine, spec),
                                         spec.times[-1:])[0]
            change = abs(value - rows[-1][1]) / rows[-1][1]
            if change > REFINEMENT_TOLERANCE:
                raise ResolutionError(f"Sup-norm changed by {change:.3g} "
                                      f"on {fine!r}")
    fit = fit_decay([row[0] for row in rows], [row[1] for row in rows])
    if spec.band is None and spec.shell != "generic":
        LOGGER.info("Cubic-degenerate decay onset at t=%.3g",
                    degenerate_onset_time(spec.profile.upper -
                                          spec.profile.lower))
    LOGGER.info("Decay slope %.4f in [%.4f, %.4f]", fit.slope, *fit.interval)
    return DecayProbe(fit, rows)


def radial_decay_probe(spec):
    """Measure decay with the radial quadrature oracle, see
    decay_exponent_probe()"""
    if spec.method != "radial":
        spec = DecayProbeSpec(spec.times, k=spec.k, shell=spec.shell,
                              band=spec.band, gamma_scale=spec.gamma_scale)
    return decay_exponent_probe(spec)


def center_of_mass(field):
    """Get the center of mass of |field|^2 in centered coordinates"""
    density = np.abs(field.physical) ** 2
    total = np.sum(density)
    return tuple(float(np.sum(x * density) / total) for x in field.grid.x)


def group_velocity(packet, times):
    """
    Measure the velocity of a wave packet under the linear flow, fitting
    its centers of mass over time.

    Args:
        packet: The SpectralField wave packet.
        times:  At least two times to locate the packet at.

    Returns:
        The fitted velocity vector (v1, v2).

    Raises:
        WrapAroundError if the packet reaches the domain boundary.
    """
    assert len(times) >= 2
    centers = []
    for t in times:
        field = propagate(packet, t)
        if boundary_mass(field) > WRAP_TOLERANCE:
            raise WrapAroundError(f"Packet reached the boundary at t={t!r}")
        centers.append(center_of_mass(field))
    centers = np.array(centers)
    return tuple(float(stats.linregress(times, centers[:, axis]).slope)
                 for axis in (0, 1))


# JSON schema for decay experiment parameters
PARAMETERS_SCHEMA = DecayProbeSpec.JSON_SCHEMA


def experiment(parameters, seed, out):
    """
    Run a decay probe and write its CSV table of t, supnorm, l2norm.

    Args:
        parameters: The JSON parameters (see PARAMETERS_SCHEMA).
        seed:       The seed (recorded in the manifest only).
        out:        The output CSV path.

    Returns:
        The DecayFit.
    """
    probe = decay_exponent_probe(DecayProbeSpec.from_json(parameters))
    output.write_csv(out, ["t", "supnorm", "l2norm"], probe.rows,
                     output.manifest("decay", parameters, seed))
    return probe.fit


def shell_type(string):
    """
    Parse a gamma0-distance shell: "generic", "aggregate", or a
    non-negative integer. Matches the argparse type function interface.
    """
    if string in ("generic", "aggregate"):
        return string
    return non_negative_int(string)


@main_function
def decay_main():
    """Execute the epion-decay command-line tool"""
    description = 'epion-decay - Measure the sup-norm decay exponent of ' \
        'the linear flow, print the fit as JSON'
    parser = OutputArgumentParser(description=description,
                                  default_out="decay.csv")
    parser.add_argument('--k', metavar="K", type=int, default=0,
                        help='The frequency shell. Default is 0.')
    parser.add_argument('--gamma0-shell', metavar="N", type=shell_type,
                        default="generic",
                        help='The gamma0-distance shell: generic, '
                             'aggregate, or a number. Default is generic.')
    parser.add_argument('--band', metavar="RHO", type=positive_float,
                        nargs=2, help='Use a Gaussian on the band of '
                                      'frequency magnitudes instead.')
    parser.add_argument('--tmax', metavar="T", type=positive_float,
                        default=1000.0,
                        help='The last time. Default is 1000.')
    parser.add_argument('--times', metavar="NUMBER", type=positive_int,
                        default=11,
                        help='Number of log-spaced times over the last two '
                             'decades. Default is 11.')
    parser.add_argument('--method', choices=["radial", "grid"],
                        default="radial",
                        help='Propagate with the radial quadrature or on '
                             'a periodic grid. Default is radial.')
    parser.add_argument('--grid', metavar="G", type=positive_int,
                        help='The grid size for the grid method.')
    parser.add_argument('--domain-length', metavar="L", type=positive_float,
                        help='The domain length for the grid method.')
    parser.add_argument('--refine', action='store_true',
                        help='Check the last sup-norm on a finer grid.')
    args = parser.parse_args()
    parameters = dict(
        times=[float(t) for t in
               np.geomspace(args.tmax / 100, args.tmax, args.times)],
        k=args.k, shell=args.gamma0_shell, method=args.method,
        refine=args.refine,
    )
    if args.band:
        parameters["band"] = args.band
    if args.grid is not None:
        parameters["grid"] = args.grid
    if args.domain_length is not None:
        parameters["domain_length"] = args.domain_length
    fit = experiment(parameters, args.seed, args.out)
    json_dump(fit._asdict(), sys.stdout, indent=args.indent)
    return 0
