"""
Euler-Poisson ion lab - resonance functions

The phases of quadratic and cubic interactions, Phi and Phi~, their
gradients, and sampled checks of the lower bounds and the localization of
near-resonant frequencies around the degenerate frequency gamma0. Sampled
evidence can be turned into finite certificates on frequency boxes with a
Lipschitz grid bound.
"""

import math
import logging
import argparse
import concurrent.futures
from collections import namedtuple
import numpy as np
from scipy import stats
from epion import output
from epion.dispersion import GAMMA0, MAX_WINDOW, DomainError, \
    lambda_values, dlambda_sup, space_resonance_roots
from epion.misc import ConfigError, validate, random_streams, \
    main_function, OutputArgumentParser, positive_int, positive_float

# Module's logger
LOGGER = logging.getLogger(__name__)

# Names of the checks verify_main() runs
LEMMAS = ("time", "space", "root", "iterated")

# Cubic sign patterns whose phase can vanish near gamma0
DEGENERATE_PATTERNS = ((1, 1, -1), (1, -1, 1), (-1, 1, 1))

# Default window half-width around gamma0 for space resonance checks
SPACE_WINDOW = 0.1

# Default window half-width around gamma0 for iterated resonance checks
ITERATED_WINDOW = 0.2

# Number of samples drawn from each random stream
CHUNK_SAMPLES = 1 << 16

# Bisection steps of the vectorized lambda' inversion
BISECTION_STEPS = 64

# Largest number of grid points certify_min_on_box() evaluates
MAX_GRID_POINTS = 1 << 22


class PreconditionError(DomainError):
    """Frequencies violate the ordering a bound assumes"""


def _vectors(value):
    """Convert a 2-vector or an array of them to a float array"""
    value = np.asarray(value, dtype=float)
    assert value.shape[-1] == 2, f"Not 2-vectors: shape {value.shape!r}"
    return value


def _norms(vectors, name):
    """Get the norms of 2-vectors, checking none vanishes"""
    norms = np.linalg.norm(vectors, axis=-1)
    if not np.all(norms > 0) or not np.all(np.isfinite(norms)):
        raise DomainError(f"{name} frequency must be nonzero and finite")
    return norms


def _as_result(value):
    return float(value) if np.ndim(value) == 0 else value


def _check_signs(signs, count):
    assert len(signs) == count and \
        all(sign in (1, -1) for sign in signs), f"Invalid signs {signs!r}"


def _grad_lambda(vectors, norms):
    """The gradient of Lambda at nonzero 2-vectors"""
    return (lambda_values(norms, 1) / norms)[..., None] * vectors


def phi(xi, eta, signs):
    """
    Evaluate the quadratic phase
    Phi = -Lambda(xi) + iota1 Lambda(xi - eta) + iota2 Lambda(eta).

    Args:
        xi:     The output frequency, a 2-vector or an array of them along
                the last axis.
        eta:    The second input frequency, likewise.
        signs:  The pair (iota1, iota2) of signs, each 1 or -1.

    Returns:
        The phase value(s): a float for single vectors.

    Raises:
        DomainError if xi, xi - eta, or eta vanishes.
    """
    _check_signs(signs, 2)
    xi, eta = _vectors(xi), _vectors(eta)
    value = -lambda_values(_norms(xi, "Output")) + \
        signs[0] * lambda_values(_norms(xi - eta, "First input")) + \
        signs[1] * lambda_values(_norms(eta, "Second input"))
    return _as_result(value)


def grad_eta(xi, eta, signs):
    """
    Evaluate Xi, the gradient of the quadratic phase Phi in eta.

    Args:
        xi:     The output frequency (array).
        eta:    The second input frequency (array).
        signs:  The pair (iota1, iota2) of signs.

    Returns:
        The gradient 2-vector(s).

    Raises:
        DomainError if xi - eta or eta vanishes.
    """
    _check_signs(signs, 2)
    xi, eta = _vectors(xi), _vectors(eta)
    first = xi - eta
    return -signs[0] * _grad_lambda(first, _norms(first, "First input")) + \
        signs[1] * _grad_lambda(eta, _norms(eta, "Second input"))


def phi_tilde(xi, eta, sigma, signs):
    """
    Evaluate the cubic phase Phi~ = -Lambda(xi) + iota1 Lambda(xi - eta) +
    iota2 Lambda(eta - sigma) + iota3 Lambda(sigma).

    Args:
        xi:     The output frequency, a 2-vector or an array of them.
        eta:    The intermediate frequency, likewise.
        sigma:  The third input frequency, likewise.
        signs:  The triple (iota1, iota2, iota3) of signs.

    Returns:
        The phase value(s).

    Raises:
        DomainError if the output or any input frequency vanishes.
    """
    _check_signs(signs, 3)
    xi, eta, sigma = _vectors(xi), _vectors(eta), _vectors(sigma)
    value = -lambda_values(_norms(xi, "Output")) + \
        signs[0] * lambda_values(_norms(xi - eta, "First input")) + \
        signs[1] * lambda_values(_norms(eta - sigma, "Second input")) + \
        signs[2] * lambda_values(_norms(sigma, "Third input"))
    return _as_result(value)


def phi_tilde_gradients(xi, eta, sigma, signs):
    """
    Evaluate the gradients of the cubic phase Phi~.

    Args:
        xi:     The output frequency (array).
        eta:    The intermediate frequency (array).
        sigma:  The third input frequency (array).
        signs:  The triple (iota1, iota2, iota3) of signs.

    Returns:
        The gradient in xi (2-vectors), and Xi~, the gradient in
        (eta, sigma) (4-vectors, the eta part first).

    Raises:
        DomainError if the output or any input frequency vanishes.
    """
    _check_signs(signs, 3)
    xi, eta, sigma = _vectors(xi), _vectors(eta), _vectors(sigma)
    first, second = xi - eta, eta - sigma
    grad_output = _grad_lambda(xi, _norms(xi, "Output"))
    grad_first = _grad_lambda(first, _norms(first, "First input"))
    grad_second = _grad_lambda(second, _norms(second, "Second input"))
    grad_third = _grad_lambda(sigma, _norms(sigma, "Third input"))
    by_xi = -grad_output + signs[0] * grad_first
    by_eta = -signs[0] * grad_first + signs[1] * grad_second
    by_sigma = -signs[1] * grad_second + signs[2] * grad_third
    return by_xi, np.concatenate([by_eta, by_sigma], axis=-1)


def _time_ratios(a, b):
    """Compute time resonance ratios without checking the ordering"""
    c = a + b
    abs_a, abs_b = _norms(a, "Smallest"), _norms(b, "Second")
    abs_c = _norms(c, "Sum")
    gain = lambda_values(abs_a) + lambda_values(abs_b) - lambda_values(abs_c)
    unit_c = c / abs_c[..., None]
    angular = 2 - np.sum(unit_c * a, axis=-1) / abs_a - \
        np.sum(unit_c * b, axis=-1) / abs_b
    product = abs_b * abs_c
    bound = abs_a * angular + \
        product / (1 + product) * abs_a / (1 + abs_a ** 2)
    return gain / bound


def time_resonance_ratio(a, b):
    """
    Compute the ratio of Lambda(a) + Lambda(b) - Lambda(a + b) to its lower
    bound |a|(2 - c.a/|c||a| - c.b/|c||b|) + |b||c|/(1 + |b||c|) |a|/(1 +
    |a|^2), with c = a + b.

    Args:
        a:  The smallest frequency, a 2-vector or an array of them.
        b:  The other input frequency, likewise.

    Returns:
        The ratio(s).

    Raises:
        DomainError         - a frequency vanishes.
        PreconditionError   - |a| exceeds |b| or |a + b|.
    """
    a, b = _vectors(a), _vectors(b)
    abs_a = _norms(a, "Smallest")
    smaller = np.minimum(_norms(b, "Second"), _norms(a + b, "Sum"))
    if np.any(abs_a > smaller):
        raise PreconditionError("|a| must not exceed |b| and |a + b|")
    return _as_result(_time_ratios(a, b))


class VerificationReport:
    """The outcome of a sampled check of a resonance bound"""

    # JSON schema for the report
    JSON_SCHEMA = {
        "type": "object",
        "properties": {
            "lemma": {"enum": list(LEMMAS)},
            "samples": {"type": "integer", "minimum": 0},
            "min_ratio": {"type": ["number", "null"], "minimum": 0},
            "argmin": {"type": ["array", "null"]},
            "window": {"type": ["number", "null"]},
            "seed": {"type": "integer", "minimum": 0},
            "constant_estimate": {"type": ["number", "null"]},
            "vacuous": {"type": "boolean"},
            "non_degenerate": {"type": "boolean"},
            "details": {"type": "object"},
        },
        "required": ["lemma", "samples", "min_ratio", "argmin", "window",
                     "seed", "constant_estimate", "vacuous",
                     "non_degenerate", "details"],
        "additionalProperties": False,
    }

    # pylint: disable=too-many-arguments,too-many-instance-attributes
    def __init__(self, lemma, samples, min_ratio=None, argmin=None,
                 window=None, seed=0, constant_estimate=None,
                 non_degenerate=False, details=None):
        """
        Initialize the report.

        Args:
            lemma:              The checked property, one of LEMMAS.
            samples:            Number of admissible samples evaluated.
            min_ratio:          The smallest ratio of the bounded quantity
                                to its bound, None if no sample was
                                admissible.
            argmin:             The frequencies attaining min_ratio, as
                                lists.
            window:             The window half-width around gamma0, if
                                any.
            seed:               The seed of the random streams.
            constant_estimate:  The empirical constant of the bound.
            non_degenerate:     True if the phase was found bounded away
                                from zero, without the degenerate scaling.
            details:            A JSON object with check-specific values.
        """
        assert lemma in LEMMAS
        assert isinstance(samples, int) and samples >= 0
        assert (min_ratio is None) == (samples == 0)
        self.lemma = lemma
        self.samples = samples
        self.min_ratio = None if min_ratio is None else float(min_ratio)
        self.argmin = argmin
        self.window = window
        self.seed = seed
        self.constant_estimate = None if constant_estimate is None \
            else float(constant_estimate)
        self.non_degenerate = bool(non_degenerate)
        self.details = details or {}

    @property
    def vacuous(self):
        """True if no sample satisfied the check's constraints"""
        return self.samples == 0

    @property
    def success(self):
        """True if the check found a positive minimum ratio"""
        return not self.vacuous and self.min_ratio > 0

    def to_json(self):
        """Get the JSON representation"""
        return dict(
            lemma=self.lemma, samples=self.samples, min_ratio=self.min_ratio,
            argmin=self.argmin, window=self.window, seed=self.seed,
            constant_estimate=self.constant_estimate, vacuous=self.vacuous,
            non_degenerate=self.non_degenerate,
            details=dict(self.details, success=self.success),
        )


def _time_stress_pairs():
    """
    Generate collinear, anti-collinear and near-collinear pairs with
    magnitudes on ladders from 1e-6 to 1e4.
    """
    ladder = np.geomspace(1e-6, 1e4, 41)
    angles = np.array([0, 1e-4, 1e-2, 0.5, np.pi / 2, 2.0,
                       np.pi - 1e-2, np.pi])
    small, large, angle = np.meshgrid(ladder, ladder, angles, indexing="ij")
    ordered = small <= large
    small, large, angle = small[ordered], large[ordered], angle[ordered]
    a = np.stack([small, np.zeros_like(small)], axis=-1)
    b = large[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=-1)
    valid = np.linalg.norm(a + b, axis=-1) >= small
    return a[valid], b[valid]


def _random_time_pairs(rng, count):
    """
    Generate pairs with log-uniform magnitudes and uniform directions,
    ordered so the first is the smallest of a, b and a + b.
    """
    magnitudes = 10 ** rng.uniform(-4, 3, (count, 2))
    angles = rng.uniform(0, 2 * np.pi, (count, 2))
    first, second = (
        magnitudes[:, i, None] *
        np.stack([np.cos(angles[:, i]), np.sin(angles[:, i])], axis=-1)
        for i in (0, 1)
    )
    # Three vectors summing to zero: a, b, and -(a + b)
    vectors = np.stack([first, second, -(first + second)], axis=1)
    norms = np.linalg.norm(vectors, axis=-1)
    vectors = vectors[np.all(norms > 0, axis=1)]
    smallest = np.argmin(np.linalg.norm(vectors, axis=-1), axis=1)
    rows = np.arange(len(vectors))
    return vectors[rows, smallest], vectors[rows, (smallest + 1) % 3]


def _min_time_ratio(a, b):
    """Get the smallest time resonance ratio, its pair and sample count"""
    ratios = _time_ratios(a, b)
    index = int(np.argmin(ratios))
    return float(ratios[index]), [a[index].tolist(), b[index].tolist()], \
        len(ratios)


def verify_time_resonance(n_samples, seed=0, workers=1):
    """
    Check Lambda(a) + Lambda(b) - Lambda(a + b) is bounded below by a
    positive multiple of its lower bound, over random pairs and stress
    sets.

    Args:
        n_samples:  Number of random pairs, positive.
        seed:       The seed of the random streams. The result doesn't
                    depend on the number of workers.
        workers:    Number of worker threads.

    Returns:
        The VerificationReport, with the smallest ratio as the constant.
    """
    assert isinstance(n_samples, int) and n_samples >= 1
    assert isinstance(workers, int) and workers >= 1
    counts = [CHUNK_SAMPLES] * (n_samples // CHUNK_SAMPLES)
    if n_samples % CHUNK_SAMPLES:
        counts.append(n_samples % CHUNK_SAMPLES)
    streams = random_streams(seed, len(counts))

    def sample(rng, count):
        return _min_time_ratio(*_random_time_pairs(rng, count))

    stress = _min_time_ratio(*_time_stress_pairs())
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) \
            as executor:
        results = [stress] + list(executor.map(sample, streams, counts))
    min_ratio, argmin, _ = min(results, key=lambda result: result[0])
    samples = sum(result[2] for result in results)
    LOGGER.info("Time resonance ratio >= %.6g over %d pairs",
                min_ratio, samples)
    return VerificationReport(
        "time", samples, min_ratio, argmin, seed=seed,
        constant_estimate=min_ratio,
        details=dict(stress_samples=stress[2], stress_min_ratio=stress[0],
                     workers=workers),
    )


def _disk_samples(rng, count, radius):
    """Sample points uniformly on a disk centered at the origin"""
    radii = radius * np.sqrt(rng.random(count))
    angles = rng.uniform(0, 2 * np.pi, count)
    return radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], -1)


def _box_samples(rng, count, center, axes, scales):
    """
    Sample points around a center in boxes with the given half-widths along
    two orthonormal axes, scaled by a log-uniform factor in [1e-2, 1e2].
    """
    spread = 10 ** rng.uniform(-2, 2, count)
    offsets = rng.uniform(-1, 1, (count, 2)) * spread[:, None]
    return center + \
        (offsets[:, :1] * scales[0]) * axes[0] + \
        (offsets[:, 1:] * scales[1]) * axes[1]


def _in_window(norms, window):
    return np.abs(norms - GAMMA0) < window


# pylint: disable=too-many-arguments,too-many-locals
def verify_space_resonance(xi, kappa, signs, n_samples, seed=0,
                           window=SPACE_WINDOW):
    """
    Check frequencies eta with |Xi(xi, eta)| <= kappa, and xi - eta and eta
    within the window around gamma0, lie close to the space resonance
    points p(xi). For equal signs the distance is measured along xi in
    units of kappa / (kappa^2/3 + ||xi| - 2 gamma0|) and across xi in units
    of kappa. For opposite signs it's measured to p(xi) or xi - p(xi),
    whichever is closer, in units of kappa / |xi|.

    Args:
        xi:         The output frequency, a nonzero 2-vector.
        kappa:      The bound on |Xi|, positive, at most the window.
        signs:      The pair (iota1, iota2) of signs.
        n_samples:  Number of candidate frequencies drawn.
        seed:       The seed of the random stream.
        window:     The window half-width around gamma0.

    Returns:
        The VerificationReport, with the largest normalized distance as
        the constant, and its inverse as the ratio. Vacuous if no
        candidate satisfied the constraints.

    Raises:
        ConfigError if kappa is out of range.
    """
    _check_signs(signs, 2)
    xi = _vectors(xi)
    assert xi.shape == (2,)
    s = float(_norms(xi, "Output"))
    if not 0 < kappa <= window <= MAX_WINDOW:
        raise ConfigError(f"Need 0 < kappa <= window <= {MAX_WINDOW!r}, "
                          f"got kappa={kappa!r}, window={window!r}")
    direction = xi / s
    axes = (direction, np.array([-direction[1], direction[0]]))
    opposite = signs[0] != signs[1]
    roots = space_resonance_roots(s, signs, window)
    centers = [root * direction for root in roots]
    if opposite:
        centers += [xi - root * direction for root in roots]
        scales = (kappa / s, kappa / s)
    else:
        scales = (kappa / (kappa ** (2 / 3) + abs(s - 2 * GAMMA0)), kappa)

    rng, = random_streams(seed, 1)
    count = n_samples // (len(centers) + 1)
    candidates = np.concatenate(
        [_disk_samples(rng, n_samples - count * len(centers),
                       GAMMA0 + window)] +
        [_box_samples(rng, count, center, axes, scales)
         for center in centers]
    )
    candidates = candidates[
        _in_window(np.linalg.norm(candidates, axis=-1), window) &
        _in_window(np.linalg.norm(xi - candidates, axis=-1), window)
    ]
    admissible = candidates[
        np.linalg.norm(grad_eta(xi, candidates, signs), axis=-1) <= kappa
    ]
    details = dict(xi=xi.tolist(), kappa=kappa, signs=list(signs),
                   roots=roots, candidates=len(candidates))
    LOGGER.info("%d of %d candidates near-resonant for |xi|=%r, "
                "signs %r", len(admissible), len(candidates), s, signs)
    if len(admissible) == 0:
        return VerificationReport("space", 0, window=window, seed=seed,
                                  details=details)
    if not centers:
        return VerificationReport("space", len(admissible), 0.0,
                                  [admissible[0].tolist()], window, seed,
                                  details=details)

    offsets = admissible[:, None, :] - np.array(centers)[None, :, :]
    parallel = np.abs(offsets @ axes[0]) / scales[0]
    perpendicular = np.abs(offsets @ axes[1]) / scales[1]
    if opposite:
        normalized = np.linalg.norm(offsets, axis=-1) / scales[0]
    else:
        normalized = np.maximum(parallel, perpendicular)
    rows = np.arange(len(admissible))
    nearest = np.argmin(normalized, axis=1)
    distances = normalized[rows, nearest]
    worst = int(np.argmax(distances))
    constant = float(distances[worst])
    details.update(max_parallel=float(np.max(parallel[rows, nearest])),
                   max_perpendicular=float(np.max(perpendicular[rows,
                                                                nearest])))
    return VerificationReport("space", len(admissible), 1 / constant,
                              [admissible[worst].tolist()], window, seed,
                              constant_estimate=constant, details=details)


def verify_root_localization(s, kappa, window=SPACE_WINDOW, n_samples=20000,
                             seed=0):
    """
    Check radii r with |lambda'(s - r) - lambda'(r)| <= kappa, and r and
    s - r within the window around gamma0, lie within
    C kappa / (kappa^2/3 + |s - 2 gamma0|) of a space resonance root.

    Args:
        s:          The output frequency magnitude, positive.
        kappa:      The bound, positive, at most the window.
        window:     The window half-width around gamma0.
        n_samples:  Number of candidate radii drawn.
        seed:       The seed of the random stream.

    Returns:
        The VerificationReport, with C as the constant and its inverse as
        the ratio.

    Raises:
        ConfigError if kappa is out of range.
    """
    if not 0 < kappa <= window <= MAX_WINDOW:
        raise ConfigError(f"Need 0 < kappa <= window <= {MAX_WINDOW!r}, "
                          f"got kappa={kappa!r}, window={window!r}")
    roots = space_resonance_roots(s, (1, 1), window)
    scale = kappa / (kappa ** (2 / 3) + abs(s - 2 * GAMMA0))
    rng, = random_streams(seed, 1)
    count = n_samples // (len(roots) + 1)
    radii = np.concatenate(
        [rng.uniform(GAMMA0 - window, GAMMA0 + window,
                     n_samples - count * len(roots))] +
        [root + scale * 10 ** rng.uniform(-2, 2, count) *
         rng.uniform(-1, 1, count) for root in roots]
    )
    radii = radii[_in_window(radii, window) & _in_window(s - radii, window)]
    radii = radii[np.abs(lambda_values(s - radii, 1) -
                         lambda_values(radii, 1)) <= kappa]
    details = dict(s=s, kappa=kappa, roots=roots)
    if len(radii) == 0:
        return VerificationReport("root", 0, window=window, seed=seed,
                                  details=details)
    if not roots:
        return VerificationReport("root", len(radii), 0.0,
                                  [float(radii[0])], window, seed,
                                  details=details)
    distances = np.min(np.abs(radii[:, None] - np.array(roots)[None, :]),
                       axis=1) / scale
    worst = int(np.argmax(distances))
    constant = float(distances[worst])
    return VerificationReport("root", len(radii), 1 / constant,
                              [float(radii[worst])], window, seed,
                              constant_estimate=constant, details=details)


def _invert_dlambda(values, left):
    """
    Invert lambda' near gamma0 by vectorized bisection, on the left branch
    where left is true and on the right one elsewhere. Values out of a
    branch's range give the end of its bracket.
    """
    low = np.where(left, GAMMA0 - 1.5, GAMMA0)
    high = np.where(left, GAMMA0, GAMMA0 + 3.0)
    for _ in range(BISECTION_STEPS):
        middle = (low + high) / 2
        # lambda' decreases left of gamma0 and increases right of it
        raise_low = (lambda_values(middle, 1) > values) == left
        low = np.where(raise_low, middle, low)
        high = np.where(raise_low, high, middle)
    return (low + high) / 2


def _iterated_samples(rng, count, kappa1, signs, window):
    """
    Sample near-collinear frequency triples with |Xi~| of order kappa1:
    sigma = z e, eta - sigma = iota2 iota3 y e, xi - eta = iota1 iota3 x e
    for a random unit vector e, with lambda'(x), lambda'(y) within kappa1 / 2
    of lambda'(z), plus perpendicular offsets of order kappa1.
    """
    side = rng.choice([-1.0, 1.0], count)
    z = GAMMA0 + side * window * 10 ** rng.uniform(-3, 0, count)
    y_value = lambda_values(z, 1) + kappa1 / 2 * rng.uniform(-1, 1, count)
    x_value = y_value + kappa1 / 2 * rng.uniform(-1, 1, count)
    y = _invert_dlambda(y_value, rng.random(count) < 0.5)
    x = _invert_dlambda(x_value, rng.random(count) < 0.5)
    angles = rng.uniform(0, 2 * np.pi, count)
    unit = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    normal = np.stack([-unit[:, 1], unit[:, 0]], axis=-1)
    wobble = kappa1 / 4 * rng.uniform(-1, 1, (count, 2))
    sigma = z[:, None] * unit
    eta = sigma + (signs[1] * signs[2] * y)[:, None] * unit + \
        wobble[:, :1] * normal
    xi = eta + (signs[0] * signs[2] * x)[:, None] * unit + \
        wobble[:, 1:] * normal
    return xi, eta, sigma


def verify_iterated_resonance(kappa1, kappa2, n_samples, seed=0,
                              signs=(-1, 1, 1), window=ITERATED_WINDOW):
    """
    Check |Phi~| >= c kappa2^3/2 for frequency triples with xi - eta,
    eta - sigma and sigma within the window around gamma0, |Xi~| <= kappa1
    and |grad_xi Phi~| >= kappa2. Sign patterns outside
    DEGENERATE_PATTERNS are checked for |Phi~| >= c instead, and reported
    as non-degenerate.

    Args:
        kappa1:     The bound on |Xi~|, positive.
        kappa2:     The lower bound on |grad_xi Phi~|, at least
                    kappa1 / window and at most sqrt(window).
        n_samples:  Number of candidate triples drawn.
        seed:       The seed of the random stream.
        signs:      The triple (iota1, iota2, iota3) of signs.
        window:     The window half-width around gamma0.

    Returns:
        The VerificationReport, with the smallest ratio as the constant.

    Raises:
        ConfigError if the kappas are out of range.
    """
    _check_signs(signs, 3)
    signs = tuple(signs)
    if not 0 < window <= MAX_WINDOW:
        raise ConfigError(f"Invalid window {window!r}")
    if not (0 < kappa1 < kappa2 and
            kappa1 / window <= kappa2 <= math.sqrt(window)):
        raise ConfigError(f"Need 0 < kappa1/window <= kappa2 <= "
                          f"sqrt(window), "
                          f"got kappa1={kappa1!r}, kappa2={kappa2!r}")
    rng, = random_streams(seed, 1)
    xi, eta, sigma = _iterated_samples(rng, n_samples, kappa1, signs,
                                       window)
    inside = _in_window(np.linalg.norm(xi - eta, axis=-1), window) & \
        _in_window(np.linalg.norm(eta - sigma, axis=-1), window) & \
        _in_window(np.linalg.norm(sigma, axis=-1), window) & \
        (np.linalg.norm(xi, axis=-1) > 0)
    xi, eta, sigma = xi[inside], eta[inside], sigma[inside]
    by_xi, by_inputs = phi_tilde_gradients(xi, eta, sigma, signs)
    admissible = (np.linalg.norm(by_inputs, axis=-1) <= kappa1) & \
        (np.linalg.norm(by_xi, axis=-1) >= kappa2)
    xi, eta, sigma = xi[admissible], eta[admissible], sigma[admissible]
    non_degenerate = signs not in DEGENERATE_PATTERNS
    details = dict(kappa1=kappa1, kappa2=kappa2, signs=list(signs))
    LOGGER.info("%d of %d triples admissible for kappa2=%r",
                len(xi), n_samples, kappa2)
    if len(xi) == 0:
        return VerificationReport("iterated", 0, window=window, seed=seed,
                                  non_degenerate=non_degenerate,
                                  details=details)
    values = np.abs(phi_tilde(xi, eta, sigma, signs))
    index = int(np.argmin(values))
    details.update(min_abs_phi=float(values[index]))
    ratio = values[index] / (1.0 if non_degenerate else kappa2 ** 1.5)
    return VerificationReport(
        "iterated", len(xi), ratio,
        [xi[index].tolist(), eta[index].tolist(), sigma[index].tolist()],
        window, seed, constant_estimate=ratio,
        non_degenerate=non_degenerate, details=details,
    )


# The fitted power of min |Phi~| in kappa2 and the per-kappa2 reports
ExponentSweep = namedtuple("ExponentSweep", "exponent reports")


def iterated_exponent_sweep(kappa1, kappa2_values, n_samples, seed=0,
                            signs=(-1, 1, 1), window=ITERATED_WINDOW):
    """
    Fit the power of min |Phi~| in kappa2 by log-log least squares over
    iterated resonance checks, see verify_iterated_resonance().

    Returns:
        The ExponentSweep.

    Raises:
        ConfigError if fewer than two checks were non-vacuous.
    """
    reports = [
        verify_iterated_resonance(kappa1, kappa2, n_samples, seed, signs,
                                  window)
        for kappa2 in kappa2_values
    ]
    points = [(kappa2, report.details["min_abs_phi"])
              for kappa2, report in zip(kappa2_values, reports)
              if not report.vacuous]
    if len(points) < 2:
        raise ConfigError("Need two non-vacuous checks to fit an exponent")
    fit = stats.linregress(*np.log(np.array(points)).T)
    LOGGER.info("min |Phi~| ~ kappa2^%.4f", fit.slope)
    return ExponentSweep(float(fit.slope), reports)


class BoxFunction:
    """A resonance phase as a function of stacked frequency coordinates"""

    def __init__(self, kind, signs):
        """
        Initialize the function.

        Args:
            kind:   "phi" for Phi on (xi, eta), or "phi_tilde" for Phi~ on
                    (xi, eta, sigma).
            signs:  The signs of the phase.
        """
        assert kind in ("phi", "phi_tilde")
        self.kind = kind
        self.signs = tuple(signs)
        _check_signs(self.signs, 2 if kind == "phi" else 3)
        self.dimension = 4 if kind == "phi" else 6

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        assert points.shape[-1] == self.dimension
        vectors = [points[..., i:i + 2] for i in range(0, self.dimension, 2)]
        if self.kind == "phi":
            return phi(*vectors, self.signs)
        return phi_tilde(*vectors, self.signs)

    @property
    def inputs(self):
        """
        The frequencies which must not vanish, as coefficients of the
        stacked frequency vectors.
        """
        if self.kind == "phi":
            return [(1, 0), (1, -1), (0, 1)]
        return [(1, 0, 0), (1, -1, 0), (0, 1, -1), (0, 0, 1)]


def lipschitz_constant(kind):
    """
    Get a Lipschitz constant of a resonance phase on the whole space:
    2 sqrt(2) sup lambda' for Phi, 2 sqrt(3) sup lambda' for Phi~.

    Args:
        kind:   "phi" or "phi_tilde".
    """
    assert kind in ("phi", "phi_tilde")
    return (2 * math.sqrt(2) if kind == "phi" else 2 * math.sqrt(3)) * \
        dlambda_sup()


# A certified lower bound of a function on a box: the bound, whether it's
# positive, the smallest grid value, where it's attained, the grid cell
# counts per axis, and the number of boxes evaluated
Certificate = namedtuple("Certificate",
                         "bound conclusive minimum argmin cells boxes")


def _check_box(function, box):
    """Check a box is non-empty and keeps the function's inputs nonzero"""
    box = np.asarray(box, dtype=float)
    if box.shape != (function.dimension, 2) or \
       not np.all(np.isfinite(box)) or np.any(box[:, 0] >= box[:, 1]):
        raise ConfigError(f"Invalid {function.dimension}-dimensional box "
                          f"{box.tolist()!r}")
    for coefficients in function.inputs:
        vanishing = True
        for component in (0, 1):
            ends = [coefficient * box[2 * vector + component]
                    for vector, coefficient in enumerate(coefficients)]
            lower = sum(np.min(end) for end in ends)
            upper = sum(np.max(end) for end in ends)
            vanishing = vanishing and lower <= 0 <= upper
        if vanishing:
            raise DomainError(f"An input frequency can vanish on "
                              f"{box.tolist()!r}")
    return box


def _cells(width, grid_step):
    """Get the power-of-two cell count with cells no wider than the step"""
    cells = 2
    while width / cells > grid_step:
        cells *= 2
    return cells


def certify_min_on_box(function, box, lipschitz, grid_step, absolute=True):
    """
    Certify a lower bound of a function on a box: the minimum over a grid
    minus the Lipschitz constant times half a cell diagonal. The cell
    counts per axis are powers of two, so the halves of a box bisected
    with bisect_box() reuse its grid points.

    Args:
        function:   The BoxFunction.
        box:        The box, an array of (lower, upper) per coordinate.
        lipschitz:  A Lipschitz constant of the function on the box.
        grid_step:  The largest grid step.
        absolute:   Bound the absolute value of the function.

    Returns:
        The Certificate. Inconclusive if the bound isn't positive.

    Raises:
        ConfigError     - the box or the grid is invalid.
        DomainError     - an input frequency can vanish on the box.
    """
    assert isinstance(function, BoxFunction)
    box = _check_box(function, box)
    if not lipschitz > 0 or not grid_step > 0:
        raise ConfigError("Lipschitz constant and grid step must be "
                          "positive")
    widths = box[:, 1] - box[:, 0]
    cells = [_cells(width, grid_step) for width in widths]
    total = math.prod(count + 1 for count in cells)
    if total > MAX_GRID_POINTS:
        raise ConfigError(f"Box needs {total} grid points, more than "
                          f"{MAX_GRID_POINTS}")
    axes = [lower + width * np.arange(count + 1) / count
            for lower, width, count in zip(box[:, 0], widths, cells)]
    points = np.stack(np.meshgrid(*axes, indexing="ij"),
                      axis=-1).reshape(-1, function.dimension)
    values = function(points)
    if absolute:
        values = np.abs(values)
    index = int(np.argmin(values))
    steps = widths / np.array(cells)
    bound = float(values[index] -
                  lipschitz * math.sqrt(np.sum(steps ** 2)) / 2)
    LOGGER.debug("Certified %.6g on %r", bound, box.tolist())
    return Certificate(bound, bound > 0, float(values[index]),
                       points[index].tolist(), cells, 1)


def bisect_box(box):
    """
    Split a box in two halves along its widest axis.

    Returns:
        The lower and the upper half.
    """
    box = np.asarray(box, dtype=float)
    axis = int(np.argmax(box[:, 1] - box[:, 0]))
    middle = (box[axis, 0] + box[axis, 1]) / 2
    lower, upper = box.copy(), box.copy()
    lower[axis, 1] = middle
    upper[axis, 0] = middle
    return lower, upper


def certify_branch_and_bound(function, box, lipschitz, grid_step, depth,
                             floor=-math.inf):
    """
    Certify a lower bound of a function on a box, bisecting inconclusive
    boxes and halving the grid step, down to a depth.

    Args:
        function:   The BoxFunction.
        box:        The box.
        lipschitz:  A Lipschitz constant of the function on the box.
        grid_step:  The largest grid step on the box.
        depth:      The largest number of bisections.
        floor:      A lower bound already certified on an enclosing box.

    Returns:
        The Certificate, with the bound the largest of the floor, the box's
        own, and its halves' smaller one. Halves are certified with the
        box's bound as their floor, so no bound drops below its parent's.
    """
    assert isinstance(depth, int) and depth >= 0
    certificate = certify_min_on_box(function, box, lipschitz, grid_step)
    bound = max(certificate.bound, floor)
    if bound > 0 or depth == 0:
        return certificate._replace(bound=bound, conclusive=bound > 0)
    halves = [
        certify_branch_and_bound(function, half, lipschitz, grid_step / 2,
                                 depth - 1, bound)
        for half in bisect_box(box)
    ]
    worst = min(halves, key=lambda half: half.bound)
    bound = max(bound, worst.bound)
    return Certificate(bound, bound > 0,
                       min(half.minimum for half in halves), worst.argmin,
                       worst.cells, 1 + sum(half.boxes for half in halves))


# JSON schema for verification parameters
PARAMETERS_SCHEMA = {
    "type": "object",
    "properties": {
        "lemma": {"enum": list(LEMMAS)},
        "samples": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "kappa": {"type": "number", "exclusiveMinimum": 0},
        "kappa1": {"type": "number", "exclusiveMinimum": 0},
        "kappa2": {"type": "number", "exclusiveMinimum": 0},
        "s": {"type": "number", "exclusiveMinimum": 0},
        "signs": {
            "type": "array",
            "items": {"enum": [1, -1]},
            "minItems": 2, "maxItems": 3,
        },
        "window": {"type": "number", "exclusiveMinimum": 0,
                   "maximum": MAX_WINDOW},
    },
    "required": ["lemma"],
    "additionalProperties": False,
}


def run_check(parameters, seed):
    """
    Run the resonance check described by JSON parameters.

    Args:
        parameters: The JSON parameters (see PARAMETERS_SCHEMA).
        seed:       The seed of the random streams.

    Returns:
        The VerificationReport.

    Raises:
        ConfigError if the parameters are invalid.
    """
    validate(parameters, PARAMETERS_SCHEMA)
    lemma = parameters["lemma"]
    samples = parameters.get("samples", 100000)
    signs = parameters.get("signs")
    s = parameters.get("s", 2 * GAMMA0 + 0.05)
    if lemma == "time":
        return verify_time_resonance(samples, seed,
                                     parameters.get("workers", 1))
    if lemma in ("space", "root"):
        window = parameters.get("window", SPACE_WINDOW)
        kappa = parameters.get("kappa", 1e-4)
        if lemma == "root":
            return verify_root_localization(s, kappa, window, samples, seed)
        if signs is None:
            signs = [1, 1]
        if len(signs) != 2:
            raise ConfigError("Space resonances need two signs")
        return verify_space_resonance([s, 0.0], kappa, tuple(signs),
                                      samples, seed, window)
    if signs is None:
        signs = [-1, 1, 1]
    if len(signs) != 3:
        raise ConfigError("Iterated resonances need three signs")
    return verify_iterated_resonance(
        parameters.get("kappa1", 1e-8), parameters.get("kappa2", 1e-3),
        samples, seed, tuple(signs),
        parameters.get("window", ITERATED_WINDOW)
    )


def experiment(parameters, seed, out, indent=4):
    """
    Run a resonance check and write its report as JSON.

    Args:
        parameters: The JSON parameters (see PARAMETERS_SCHEMA).
        seed:       The seed of the random streams.
        out:        The output JSON path.
        indent:     The JSON indent.

    Returns:
        The VerificationReport.
    """
    report = run_check(parameters, seed)
    if not report.success:
        LOGGER.warning("Resonance check %r found no positive bound%s",
                       report.lemma,
                       " (vacuous)" if report.vacuous else "")
    output.write_json(out,
                      validate(report.to_json(),
                               VerificationReport.JSON_SCHEMA),
                      output.manifest("resonance", parameters, seed),
                      indent=indent)
    return report


def signs_type(string):
    """
    Parse a sign pattern, such as "+-" or "-++", into a list of 1 and -1.
    Matches the argparse type function interface.
    """
    if len(string) not in (2, 3) or set(string) - {"+", "-"}:
        raise argparse.ArgumentTypeError(
            f'{string!r} is not a pattern of two or three signs'
        )
    return [1 if sign == "+" else -1 for sign in string]


@main_function
def verify_main():
    """Execute the epion-resonance-verify command-line tool"""
    description = 'epion-resonance-verify - Check a resonance bound on ' \
        'sampled frequencies and write a JSON report'
    parser = OutputArgumentParser(description=description,
                                  default_out="report.json")
    parser.add_argument('--lemma', choices=LEMMAS, required=True,
                        help='The bound to check.')
    parser.add_argument('--samples', metavar="NUMBER", type=positive_int,
                        default=100000,
                        help='Number of samples. Default is 100000.')
    parser.add_argument('--workers', metavar="NUMBER", type=positive_int,
                        help='Number of worker threads for the time '
                             'resonance check.')
    parser.add_argument('--kappa', metavar="KAPPA", type=positive_float,
                        help='The space resonance bound.')
    parser.add_argument('--kappa1', metavar="KAPPA", type=positive_float,
                        help='The iterated resonance bound on |Xi~|.')
    parser.add_argument('--kappa2', metavar="KAPPA", type=positive_float,
                        help='The iterated resonance bound on '
                             '|grad_xi Phi~|.')
    parser.add_argument('--xi', metavar="S", type=positive_float,
                        help='The output frequency magnitude.')
    parser.add_argument('--signs', metavar="PATTERN", type=signs_type,
                        help='The sign pattern, such as ++ or -++.')
    parser.add_argument('--window', metavar="WIDTH", type=positive_float,
                        help='The window half-width around gamma0.')
    args = parser.parse_args()
    parameters = dict(lemma=args.lemma, samples=args.samples)
    for name, value in (("workers", args.workers), ("kappa", args.kappa),
                        ("kappa1", args.kappa1), ("kappa2", args.kappa2),
                        ("s", args.xi), ("signs", args.signs),
                        ("window", args.window)):
        if value is not None:
            parameters[name] = value
    experiment(parameters, args.seed, args.out, indent=args.indent)
    return 0
