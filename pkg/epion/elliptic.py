"""
Euler-Poisson ion lab - electron equilibrium

Solve the Boltzmann-electron Poisson equation
Delta phi = exp(phi) - 1 - n_tilde for phi, given the ion density
perturbation n_tilde, with a contraction iteration or Newton-Krylov.
"""

import math
import logging
from collections import namedtuple
import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres
from epion.field import SpectralField
from epion.misc import ConfigError, GuardError, validate

# Module's logger
LOGGER = logging.getLogger(__name__)

# Supported iteration schemes
SCHEMES = ("fixed_point", "newton")

# Largest potential magnitude exp() is evaluated at
EXP_LIMIT = 700.0


class SmallnessError(GuardError):
    """The density perturbation is too large for the contraction"""


class ConvergenceError(GuardError):
    """The iteration didn't reach the tolerance"""


class BlowUpError(GuardError):
    """The iteration produced non-finite values"""


class EllipticConfig:
    """Electron equilibrium solver configuration"""

    # JSON schema for the configuration
    JSON_SCHEMA = {
        "type": "object",
        "properties": {
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
            "scheme": {"enum": list(SCHEMES)},
            "smallness": {"type": "number", "exclusiveMinimum": 0},
            "padding": {"type": "number", "minimum": 1},
        },
        "additionalProperties": False,
    }

    # pylint: disable=too-many-arguments
    def __init__(self, tol=1e-10, max_iter=200, scheme="fixed_point",
                 smallness=0.5, padding=2.0):
        """
        Initialize the configuration.

        Args:
            tol:        The L2 residual to reach.
            max_iter:   The maximum number of iterations.
            scheme:     "fixed_point" or "newton".
            smallness:  The largest sup-norm of n_tilde accepted.
            padding:    The dealiasing padding factor of exp(phi).

        Raises:
            ConfigError if the configuration is invalid.
        """
        if not tol > 0:
            raise ConfigError(f"Tolerance must be positive, got {tol!r}")
        if not (isinstance(max_iter, int) and max_iter >= 1):
            raise ConfigError(f"max_iter must be a positive integer, "
                              f"got {max_iter!r}")
        if scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme {scheme!r}")
        if not smallness > 0 or not padding >= 1:
            raise ConfigError("Invalid smallness threshold or padding")
        self.tol = tol
        self.max_iter = max_iter
        self.scheme = scheme
        self.smallness = smallness
        self.padding = padding

    @classmethod
    def from_json(cls, data):
        """
        Create a configuration from its JSON representation.

        Raises:
            ConfigError if the JSON is invalid.
        """
        return cls(**validate(data, cls.JSON_SCHEMA))

    def to_json(self):
        """Get the JSON representation"""
        return dict(tol=self.tol, max_iter=self.max_iter, scheme=self.scheme,
                    smallness=self.smallness, padding=self.padding)


# A solution of the electron equilibrium: the potential field, the number of
# iterates computed, the final L2 residual, the largest observed ratio of
# successive fixed-point increments (None if unmeasured), and the scheme
Solution = namedtuple("Solution",
                      "phi iterations residual contraction scheme")


def resolvent(grid):
    """The multiplier (1 - Delta)^-1 = (1 + |xi|^2)^-1 on a grid"""
    return 1 / (1 + grid.abs_xi ** 2)


def exp_remainder(values, order):
    """
    Evaluate exp(x) minus its Taylor polynomial of degree below order,
    pointwise.

    Args:
        values: The array of x values.
        order:  The lowest power kept, at least one.

    Returns:
        The array of remainders.
    """
    assert isinstance(order, int) and order >= 1
    result = np.expm1(values)
    term = np.ones_like(values)
    for power in range(1, order):
        term = term * values / power
        result = result - term
    return result


def phi_expansion_terms(phi, order, padding=2.0):
    """
    Compute the expansion remainder (Delta - 1)^-1 [exp]_{>=order}(phi) of
    the electron equilibrium, the exponential minus its Taylor polynomial
    of degree below order, evaluated pointwise on a padded grid.

    Args:
        phi:        The real potential field.
        order:      The remainder order, 2, 3 or 4.
        padding:    The dealiasing padding factor.

    Returns:
        The remainder field.
    """
    assert order in (2, 3, 4)
    remainder = phi.map(lambda values: exp_remainder(values, order),
                        padding=padding)
    return remainder.apply(-resolvent(phi.grid))


def residual(phi, n_tilde, padding=2.0):
    """
    Compute the L2 norm of Delta phi - exp(phi) + 1 + n_tilde from scratch.

    Args:
        phi:        The real potential field.
        n_tilde:    The real density perturbation field.
        padding:    The dealiasing padding factor of exp(phi).

    Returns:
        The residual norm.
    """
    return (phi.laplacian() - phi.map(np.expm1, padding=padding) +
            n_tilde).l2_norm()


def _check_bounded(phi, iteration):
    if not np.all(np.isfinite(phi.spectral)) or \
       phi.sup_norm() > EXP_LIMIT:
        raise BlowUpError(f"Potential exponential overflows at iteration "
                          f"{iteration}")


def _fixed_point(n_tilde, cfg):
    """Iterate phi = (1 - Delta)^-1 (n_tilde - [exp]_{>=2}(phi))"""
    multiplier = resolvent(n_tilde.grid)
    phi = n_tilde.apply(multiplier)
    increments = []
    for iteration in range(1, cfg.max_iter + 1):
        _check_bounded(phi, iteration)
        error = residual(phi, n_tilde, cfg.padding)
        LOGGER.debug("Fixed-point iterate %d: residual %.3g",
                     iteration, error)
        if error <= cfg.tol:
            ratios = [
                later / earlier
                for earlier, later in zip(increments, increments[1:])
                if earlier > 0
            ]
            return Solution(phi, iteration, error,
                            max(ratios) if ratios else None, "fixed_point")
        nonlinear = phi.map(lambda values: exp_remainder(values, 2),
                            padding=cfg.padding)
        update = (n_tilde - nonlinear).apply(multiplier)
        increments.append((update - phi).l2_norm())
        phi = update
    raise ConvergenceError(f"Fixed-point iteration didn't reach residual "
                           f"{cfg.tol:.3g} in {cfg.max_iter} iterations, "
                           f"last increment {increments[-1]:.3g}")


def _newton(n_tilde, cfg):
    """Solve with Newton's method, the linear systems by GMRES"""
    grid = n_tilde.grid
    fine_grid = grid.padded(cfg.padding)
    shape = (grid.size, grid.size)
    phi = n_tilde.apply(resolvent(grid))
    for iteration in range(1, cfg.max_iter + 1):
        _check_bounded(phi, iteration)
        fine_exp = np.exp(phi.pad(fine_grid).physical)
        value = phi.laplacian() - \
            SpectralField(fine_grid, physical=fine_exp - 1,
                          real=True).truncate(grid) + n_tilde
        error = value.l2_norm()
        LOGGER.debug("Newton iterate %d: residual %.3g", iteration, error)
        if error <= cfg.tol:
            return Solution(phi, iteration, error, None, "newton")

        def jacobian(vector, fine_exp=fine_exp):
            delta = SpectralField(grid, physical=vector.reshape(shape),
                                  real=True)
            product = SpectralField(
                fine_grid, physical=fine_exp * delta.pad(fine_grid).physical,
                real=True
            ).truncate(grid)
            return (delta.laplacian() - product).physical.ravel()

        mean_exp = float(np.mean(fine_exp))

        def preconditioner(vector, mean_exp=mean_exp):
            field = SpectralField(grid, physical=vector.reshape(shape),
                                  real=True)
            return field.apply(-1 / (grid.abs_xi ** 2 + mean_exp)). \
                physical.ravel()

        size = grid.size ** 2
        step, info = gmres(
            LinearOperator((size, size), matvec=jacobian, dtype=float),
            -value.physical.ravel(),
            M=LinearOperator((size, size), matvec=preconditioner,
                             dtype=float),
            rtol=1e-12,
            atol=0.01 * cfg.tol / math.sqrt(grid.cell_area),
        )
        if info < 0:
            raise ConvergenceError(f"GMRES breakdown at Newton iterate "
                                   f"{iteration}")
        if info > 0:
            LOGGER.warning("GMRES stopped short of its tolerance at Newton "
                           "iterate %d", iteration)
        phi = phi + SpectralField(grid, physical=step.reshape(shape),
                                  real=True)
    raise ConvergenceError(f"Newton iteration didn't reach residual "
                           f"{cfg.tol:.3g} in {cfg.max_iter} iterations")


def solve(n_tilde, cfg=None):
    """
    Solve Delta phi = exp(phi) - 1 - n_tilde, starting from the linear
    solution phi = (1 - Delta)^-1 n_tilde.

    Args:
        n_tilde:    The real density perturbation field.
        cfg:        The EllipticConfig, None for the default one.

    Returns:
        The Solution.

    Raises:
        SmallnessError      - the sup-norm of n_tilde exceeds the threshold.
        ConvergenceError    - the tolerance wasn't reached.
        BlowUpError         - the iterates stopped being finite.
    """
    assert isinstance(n_tilde, SpectralField) and n_tilde.real
    if cfg is None:
        cfg = EllipticConfig()
    assert isinstance(cfg, EllipticConfig)
    size = n_tilde.sup_norm()
    if size > cfg.smallness:
        raise SmallnessError(f"Density perturbation sup-norm {size:.3g} "
                             f"exceeds {cfg.smallness!r}")
    solution = (_newton if cfg.scheme == "newton" else _fixed_point)(
        n_tilde, cfg
    )
    LOGGER.debug("Solved for the potential with %s in %d iterates, "
                 "residual %.3g, contraction %r", solution.scheme,
                 solution.iterations, solution.residual,
                 solution.contraction)
    return solution


def solve_phi(n_tilde, cfg=None):
    """
    Solve for the electric potential, see solve().

    Returns:
        The real potential field.
    """
    return solve(n_tilde, cfg).phi
