"""
Euler-Poisson ion lab - Littlewood-Paley localization and norms

Frequency shells P_k, spatial shells Q_j, the gamma0-distance shells A_n,
and the dyadic Z-norm and weighted energy norms built from them, all
evaluated on discrete periodic fields.
"""

import math
import logging
from collections import namedtuple
import numpy as np
from epion import output
from epion.dispersion import GAMMA0
from epion.field import SpectralField
from epion.misc import ConfigError, GuardError, validate, json_load, \
    main_function, OutputArgumentParser, non_negative_int

# Module's logger
LOGGER = logging.getLogger(__name__)

# Largest gamma_scale accepted without a warning
GAMMA_SCALE_WARNING = 2 ** 20

# Relative energy tolerated in the outer band or the boundary strip
ALIASING_TOLERANCE = 1e-8


class InvalidIndexError(ConfigError):
    """A dyadic index is inconsistent with the cutoff requested"""


class UnresolvableShell(GuardError):
    """A dyadic shell is not resolved by the grid"""


class AliasingError(GuardError):
    """A rotation derivative is not resolved by the grid"""


def smooth_step(t):
    """
    Evaluate the smooth transition h(t) = g(t) / (g(t) + g(1 - t)),
    g(t) = exp(-1/t) for t > 0 and zero otherwise: zero for t <= 0, one for
    t >= 1, infinitely differentiable.
    """
    t = np.asarray(t, dtype=float)

    def g(value):
        positive = value > 0
        return np.where(positive,
                        np.exp(-1 / np.where(positive, value, 1)), 0.0)

    rising = g(t)
    return rising / (rising + g(1 - t))


class CutoffFamily:
    """
    The Littlewood-Paley cutoff family built from a smooth radial bump phi,
    equal to one up to the plateau radius and vanishing beyond the support
    radius. Immutable.
    """

    def __init__(self, plateau=5 / 4, support=3 / 2):
        """
        Initialize the family.

        Args:
            plateau:    The radius up to which phi is one.
            support:    The radius beyond which phi vanishes. Must not exceed
                        twice the plateau radius, for the shells to
                        telescope into a partition of unity.
        """
        assert 0 < plateau < support <= 2 * plateau
        self.plateau = plateau
        self.support = support

    def phi(self, t):
        """The bump phi at (arrays of) radii t"""
        t = np.abs(np.asarray(t, dtype=float))
        return smooth_step((self.support - t) / (self.support - self.plateau))

    def phi_k(self, t, k):
        """The scaled bump phi_k(t) = phi(t / 2^k)"""
        return self.phi(np.asarray(t, dtype=float) / 2.0 ** k)

    def psi(self, t, k):
        """The shell psi_k(t) = phi(t / 2^k) - phi(t / 2^(k-1))"""
        return self.phi_k(t, k) - self.phi_k(t, k - 1)

    def phi_at_least(self, t, l):
        """The tail phi_{>=l}(t) = 1 - phi(t / 2^(l-1))"""
        return 1 - self.phi_k(t, l - 1)

    def varphi(self, t, k, l):
        """
        The cutoff varphi^l_k: psi_k for k > l, phi_l for k = l.

        Raises:
            InvalidIndexError if k < l.
        """
        if k < l:
            raise InvalidIndexError(f"varphi^l_k needs k >= l, "
                                    f"got k={k}, l={l}")
        return self.phi_k(t, l) if k == l else self.psi(t, k)

    def tilde_varphi(self, t, k, l):
        """
        The cutoff tilde varphi^l_k: psi_k for k < l, phi_{>=l} for k = l.

        Raises:
            InvalidIndexError if k > l.
        """
        if k > l:
            raise InvalidIndexError(f"tilde varphi^l_k needs k <= l, "
                                    f"got k={k}, l={l}")
        return self.phi_at_least(t, l) if k == l else self.psi(t, k)


# The standard cutoff family
CUTOFFS = CutoffFamily()


def cutoff_eval(family, kind, index, point):
    """
    Evaluate a member of a cutoff family.

    Args:
        family: The CutoffFamily.
        kind:   "phi", "psi_k", "varphi" or "tilde_varphi".
        index:  None for "phi", k for "psi_k", and (k, l) for the others.
        point:  The point (or array of points) to evaluate at.

    Returns:
        The value(s), in [0, 1].

    Raises:
        InvalidIndexError if the index is inconsistent with the kind.
    """
    assert isinstance(family, CutoffFamily)
    if kind == "phi":
        value = family.phi(point)
    elif kind == "psi_k":
        value = family.psi(point, index)
    elif kind == "varphi":
        value = family.varphi(point, *index)
    elif kind == "tilde_varphi":
        value = family.tilde_varphi(point, *index)
    else:
        raise InvalidIndexError(f"Unknown cutoff kind {kind!r}")
    return float(value) if np.ndim(value) == 0 else value


# A dyadic localization index: frequency shell k, spatial shell j,
# and gamma0-distance shell n (None if not localized in n)
DyadicIndex = namedtuple("DyadicIndex", "j k n", defaults=(None,))


class NormParams:
    """Parameters of the Z-norm and the energy norm"""

    # JSON schema for norm parameters
    JSON_SCHEMA = {
        "type": "object",
        "properties": {
            "delta": {"type": "number",
                      "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "N0": {"type": "number", "exclusiveMinimum": 0},
            "N1": {"type": "number", "exclusiveMinimum": 0},
            "N2": {"type": "number", "exclusiveMinimum": 0},
            "N3": {"type": "number", "exclusiveMinimum": 0},
            "gamma_scale": {"type": "number", "minimum": 1},
        },
        "additionalProperties": False,
    }

    # pylint: disable=too-many-arguments,invalid-name
    def __init__(self, delta=1e-5, N0=6, N1=4, N2=3, N3=2, gamma_scale=2 ** 6):
        """
        Initialize the parameters.

        Args:
            delta:          The small weight exponent, in (0, 1).
            N0, N1, N2, N3: The regularity indices, N0 > N1 > N2 > N3 > 0.
                            N1 and N2 are used as rotation counts and are
                            rounded to integers.
            gamma_scale:    The scale of the gamma0-distance shells A_n,
                            standing for the (unresolvable) 2^100.

        Raises:
            ConfigError if the parameters are inconsistent.
        """
        if not 0 < delta < 1:
            raise ConfigError(f"delta must be in (0, 1), got {delta!r}")
        if not N0 > N1 > N2 > N3 > 0:
            raise ConfigError(f"Need N0 > N1 > N2 > N3 > 0, "
                              f"got {(N0, N1, N2, N3)!r}")
        if not gamma_scale >= 1:
            raise ConfigError(f"gamma_scale must be at least one, "
                              f"got {gamma_scale!r}")
        if gamma_scale > GAMMA_SCALE_WARNING:
            LOGGER.warning("gamma_scale %r makes most A_n shells narrower "
                           "than any grid resolves", gamma_scale)
        self.delta = delta
        self.N0 = N0
        self.N1 = N1
        self.N2 = N2
        self.N3 = N3
        self.gamma_scale = gamma_scale

    def z_weight(self, j, k):
        """The Z-norm weight 2^(10k+) 2^(delta k) 2^((1-20delta)(j+k))"""
        return 2.0 ** (10 * max(k, 0) + self.delta * k +
                       (1 - 20 * self.delta) * (j + k))

    @classmethod
    def from_json(cls, data):
        """
        Create parameters from their JSON representation.

        Raises:
            ConfigError if the JSON is invalid.
        """
        return cls(**validate(data, cls.JSON_SCHEMA))

    def to_json(self):
        """Get the JSON representation"""
        return dict(delta=self.delta, N0=self.N0, N1=self.N1, N2=self.N2,
                    N3=self.N3, gamma_scale=self.gamma_scale)


def k_resolvable(grid, k):
    """Check the grid resolves the frequency shell k"""
    return 2.0 ** k <= grid.nyquist and \
        CUTOFFS.support * 2.0 ** k >= grid.lowest_wavenumber


def j_resolvable(grid, j):
    """Check the spatial shell j meets the domain"""
    return CUTOFFS.plateau / 2 * 2.0 ** j < grid.length / math.sqrt(2)


def max_resolved_j(grid):
    """Get the largest spatial shell meeting the domain"""
    j = 0
    while j_resolvable(grid, j + 1):
        j += 1
    return j


def admissible_pairs(grid, k_range, j_range):
    """
    Get the admissible (j, k) index pairs the grid resolves.

    Args:
        grid:       The grid.
        k_range:    An iterable of frequency shells.
        j_range:    An iterable of spatial shells.

    Returns:
        The list of DyadicIndex with j >= max(-k, 0), resolvable.
    """
    return [
        DyadicIndex(j, k)
        for k in k_range if k_resolvable(grid, k)
        for j in j_range if j >= max(-k, 0) and j_resolvable(grid, j)
    ]


def a_symbol(radius, n, params, family=CUTOFFS):
    """
    Evaluate the gamma0-distance shell A_n symbol, or the aggregate
    sum over n >= 1 of them, on frequency magnitudes.

    Args:
        radius: The frequency magnitudes.
        n:      The non-negative shell number, or "aggregate".
        params: The NormParams supplying gamma_scale.
        family: The cutoff family.

    Returns:
        The symbol values.
    """
    distance = params.gamma_scale * (np.asarray(radius) - GAMMA0)
    if n == "aggregate":
        return family.phi(2 * distance)
    assert isinstance(n, int) and n >= 0
    return family.tilde_varphi(distance, -n, 0)


def shell_band_symbol(radius, lower, upper, family=CUTOFFS):
    """The multiplier of P_[lower, upper], the sum of psi_k over the band"""
    return family.phi_k(radius, upper) - family.phi_k(radius, lower - 1)


def spatial_cutoff(grid, index, family=CUTOFFS):
    """
    The spatial cutoff of Q_jk on the grid's centered coordinates:
    varphi^l_j with the base l = max(-k, 0), so the admissible pieces of a
    frequency shell add up to it.

    Raises:
        InvalidIndexError if j < max(-k, 0).
    """
    return family.varphi(grid.abs_x, index.j, max(-index.k, 0))


def project(field, index, which, params=None, family=CUTOFFS):
    """
    Localize a field with a dyadic operator.

    Args:
        field:  The SpectralField to localize.
        index:  The DyadicIndex.
        which:  "P" for P_k, "Q" for Q_jk = Q_j P_k, "Qstar" for
                Q*_jk = P_[k-2,k+2] Q_j P_k, or "AQstar" for A_n Q*_jk.
        params: The NormParams, required for "AQstar".
        family: The cutoff family.

    Returns:
        The localized field.

    Raises:
        UnresolvableShell   - the grid doesn't resolve shell k or j.
        InvalidIndexError   - the index is inconsistent with the operator.
    """
    assert isinstance(field, SpectralField)
    assert which in ("P", "Q", "Qstar", "AQstar")
    grid = field.grid
    if not k_resolvable(grid, index.k):
        raise UnresolvableShell(f"Frequency shell k={index.k} is not "
                                f"resolved by {grid!r}")
    result = field.apply(family.psi(grid.abs_xi, index.k))
    if which == "P":
        return result
    if not j_resolvable(grid, index.j):
        raise UnresolvableShell(f"Spatial shell j={index.j} doesn't meet "
                                f"the domain of {grid!r}")
    cutoff = spatial_cutoff(grid, index, family)
    result = SpectralField(grid, physical=cutoff * result.physical,
                           real=result.real)
    if which == "Q":
        return result
    result = result.apply(shell_band_symbol(grid.abs_xi,
                                            index.k - 2, index.k + 2, family))
    if which == "Qstar":
        return result
    if index.n is None or params is None:
        raise InvalidIndexError("A_n localization needs n and parameters")
    width = family.support * 2.0 ** -index.n / params.gamma_scale
    if width < grid.lowest_wavenumber:
        LOGGER.warning("Shell n=%d is narrower than the frequency spacing "
                       "of %r", index.n, grid)
    return result.apply(a_symbol(grid.abs_xi, index.n, params, family))


def _relative_energy(field, mask, reference):
    return np.sum(np.abs(field.spectral[mask]) ** 2) / reference


def rotate(field, times=1, strict=True, tolerance=ALIASING_TOLERANCE):
    """
    Apply the rotation vector field Omega = x1 d2 - x2 d1 a number of times,
    multiplying by the centered coordinates in physical space and
    differentiating spectrally.

    Args:
        field:      The SpectralField to rotate.
        times:      The number of applications.
        strict:     Raise an AliasingError for unresolved results, if true,
                    only log a warning otherwise.
        tolerance:  The relative energy tolerated in the outer third of the
                    frequency band, and the relative mass tolerated in the
                    boundary strip.

    Returns:
        The resulting field.

    Raises:
        AliasingError if strict and the result is not resolved.
    """
    assert isinstance(times, int) and times >= 0
    grid = field.grid
    x1, x2 = grid.x
    xi1, xi2 = grid.xi
    outer = np.maximum(np.abs(xi1), np.abs(xi2)) > 2 / 3 * grid.nyquist
    strip = np.maximum(np.abs(x1), np.abs(x2)) > 0.45 * grid.length
    # Leaks are measured against at least the input energy
    floor = np.sum(np.abs(field.spectral) ** 2)
    for _ in range(times):
        first, second = field.gradient()
        field = SpectralField(
            grid, physical=x1 * second.physical - x2 * first.physical,
            real=field.real
        )
        reference = max(np.sum(np.abs(field.spectral) ** 2), floor)
        if reference == 0:
            continue
        leaks = dict(
            band=_relative_energy(field, outer, reference),
            boundary=np.sum(np.abs(field.physical[strip]) ** 2) *
            grid.size ** 2 / reference,
        )
        for where, leak in leaks.items():
            if leak > tolerance:
                message = f"Rotation leaks {leak:.3g} of its energy into " \
                    f"the {where} of {grid!r}"
                if strict:
                    raise AliasingError(message)
                LOGGER.warning("%s", message)
    return field


def z_norm(profile, params, k_range, j_range, rotations=0, strict=True):
    """
    Compute the truncated dyadic Z-norm
    sup 2^(10k+) 2^(delta k) 2^((1-20delta)(j+k)) ||Q_jk f||_2 over the
    admissible resolvable (j, k) in the ranges, and over Omega^a f,
    a <= rotations.

    Args:
        profile:    The SpectralField to measure.
        params:     The NormParams.
        k_range:    An iterable of frequency shells.
        j_range:    An iterable of spatial shells.
        rotations:  The largest power of Omega included.
        strict:     Raise on unresolved rotations, if true.

    Returns:
        The norm value and the DyadicIndex attaining it (None if the index
        set is empty or the profile vanishes).
    """
    assert isinstance(params, NormParams)
    pairs = admissible_pairs(profile.grid, k_range, j_range)
    best, best_index = 0.0, None
    rotated = profile
    for power in range(rotations + 1):
        if power:
            rotated = rotate(rotated, strict=strict)
        for k in sorted({index.k for index in pairs}):
            shell = project(rotated, DyadicIndex(0, k), "P")
            for index in pairs:
                if index.k != k:
                    continue
                cutoff = spatial_cutoff(profile.grid, index)
                piece = SpectralField(profile.grid,
                                      physical=cutoff * shell.physical,
                                      real=shell.real)
                value = params.z_weight(index.j, k) * piece.l2_norm()
                if value > best:
                    best, best_index = value, index
    LOGGER.debug("Z-norm %r attained at %r", best, best_index)
    return best, best_index


def energy_norm(field, params, n_rot=None, strict=True):
    """
    Compute the weighted energy norm
    ||(|D|^delta + |D|^N0) f||_2 + ||(|D|^delta) Omega^n_rot f||_2.

    Args:
        field:  The SpectralField to measure.
        params: The NormParams.
        n_rot:  The number of rotations, None for params.N1.
        strict: Raise on unresolved rotations, if true.

    Returns:
        The norm value.

    Raises:
        AliasingError if strict and a rotation is not resolved.
    """
    assert isinstance(params, NormParams)
    if n_rot is None:
        n_rot = int(round(params.N1))
    radius = field.grid.abs_xi
    low = radius ** params.delta
    value = field.apply(low + radius ** params.N0).l2_norm()
    rotated = rotate(field, n_rot, strict=strict)
    return value + rotated.apply(low).l2_norm()


# JSON schema for norm computation parameters
PARAMETERS_SCHEMA = {
    "type": "object",
    "properties": {
        "field": {"type": "string", "minLength": 1},
        "norm_params": NormParams.JSON_SCHEMA,
        "k_range": {"type": "array", "items": {"type": "integer"},
                    "minItems": 2, "maxItems": 2},
        "j_range": {"type": "array", "items": {"type": "integer"},
                    "minItems": 2, "maxItems": 2},
        "rotations": {"type": "integer", "minimum": 0},
    },
    "required": ["field"],
    "additionalProperties": False,
}


def experiment(parameters, seed, out, indent=4):
    """
    Compute the norms of a field stored in a field file and write them as
    JSON.

    Args:
        parameters: The JSON parameters (see PARAMETERS_SCHEMA).
        seed:       The seed (recorded in the manifest only).
        out:        The output JSON path.
        indent:     The JSON indent.

    Returns:
        The path written.
    """
    validate(parameters, PARAMETERS_SCHEMA)
    field = SpectralField.load(parameters["field"])
    params = NormParams(**parameters.get("norm_params", {}))
    k_min, k_max = parameters.get("k_range", [-3, 3])
    j_min, j_max = parameters.get("j_range", [0, max_resolved_j(field.grid)])
    rotations = parameters.get("rotations", 0)
    value, index = z_norm(field, params, range(k_min, k_max + 1),
                          range(j_min, j_max + 1), rotations=rotations)
    result = dict(
        z_norm=value,
        z_argmax=None if index is None else dict(j=index.j, k=index.k),
        energy_norm=energy_norm(field, params),
        l2_norm=field.l2_norm(),
        norm_params=params.to_json(),
    )
    return output.write_json(out, result,
                             output.manifest("norms", parameters, seed),
                             indent=indent)


@main_function
def norms_main():
    """Execute the epion-norms command-line tool"""
    description = 'epion-norms - Compute the Z-norm and the energy norm ' \
        'of a field file'
    parser = OutputArgumentParser(description=description,
                                  default_out="norms.json")
    parser.add_argument('--in', dest="field", metavar="FIELD", required=True,
                        help='The field file to measure.')
    parser.add_argument('--params', metavar="JSON",
                        help='A JSON file with norm parameters.')
    parser.add_argument('--k-range', metavar="K", type=int,
                        nargs=2, help='Smallest and largest frequency shell.')
    parser.add_argument('--j-max', metavar="J", type=non_negative_int,
                        help='Largest spatial shell.')
    parser.add_argument('--rotations', metavar="NUMBER",
                        type=non_negative_int, default=0,
                        help='Include up to NUMBER rotations in the Z-norm.')
    args = parser.parse_args()
    parameters = dict(field=args.field, rotations=args.rotations)
    if args.params:
        parameters["norm_params"] = json_load(args.params)
    if args.k_range:
        parameters["k_range"] = args.k_range
    if args.j_max is not None:
        parameters["j_range"] = [0, args.j_max]
    experiment(parameters, args.seed, args.out, indent=args.indent)
    return 0
