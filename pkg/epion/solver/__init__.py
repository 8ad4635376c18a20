"""
Euler-Poisson ion lab - nonlinear solver

Integrate the ion system

    rho_t + (div/|D|)((1 + n) grad psi) = 0,
    psi_t + |grad psi|^2 / 2 = -log(1 + n) - phi,    n = |D| rho,

with phi the electron equilibrium potential of n, pseudo-spectrally on a
periodic grid. The linear part is propagated exactly in the diagonalizing
variable U = psi + i q(D) rho, the nonlinear remainder with a fourth-order
Runge-Kutta scheme (integrating factor RK4).
"""

import os
import logging
from collections import namedtuple
import numpy as np
from cached_property import cached_property
from epion import output
from epion.dispersion import GAMMA0, symbol
from epion.elliptic import solve_phi, resolvent
from epion.field import Grid, SpectralField
from epion.misc import GuardError, OutputError, random_streams, \
    json_load, main_function, OutputArgumentParser
from epion.paley import energy_norm, z_norm, max_resolved_j
from epion.semigroup import propagate
# Silence flake8 "imported but unused" warning
from epion.solver import schema  # noqa
from epion.solver.schema import SimConfig, InitialData

# Module's logger
LOGGER = logging.getLogger(__name__)

# Smallest 1 + n the nonlinearity is evaluated for
VACUUM_THRESHOLD = 0.5

# Largest time step the automatic step selection starts from
DT_MAX = 0.25

# Most halvings of the automatic time step
MAX_HALVINGS = 12

# Spread of gamma0-concentrated random initial data in frequency
GAMMA0_SPREAD = 0.25

# Snapshot file name format, by record index
SNAPSHOT_FORMAT = "snapshot-{:06d}.epf"


class VacuumError(GuardError):
    """The ion density approached vacuum"""


class StabilityError(GuardError):
    """No time step kept the Hamiltonian drift small"""


def _inverse_abs(grid):
    """The multiplier 1/|xi|, zero at the zero mode"""
    radius = grid.abs_xi
    return np.divide(1, radius, out=np.zeros_like(radius),
                     where=radius > 0)


class SimState:
    """The ion density and the velocity potential at a time"""

    # pylint: disable=too-many-arguments
    def __init__(self, rho, psi, t=0.0, elliptic=None, padding=2.0):
        """
        Initialize the state.

        Args:
            rho:        The real density field, with n = |D| rho.
            psi:        The real velocity potential field.
            t:          The time.
            elliptic:   The EllipticConfig of the potential solve, None for
                        the default.
            padding:    The dealiasing padding factor.
        """
        assert isinstance(rho, SpectralField) and rho.real
        assert isinstance(psi, SpectralField) and psi.real
        assert rho.grid == psi.grid
        self.rho = rho
        self.psi = psi
        self.t = float(t)
        self.grid = rho.grid
        self.elliptic = elliptic
        self.padding = padding

    # pylint: disable=too-many-arguments
    @classmethod
    def from_u(cls, u, t, elliptic=None, padding=2.0):
        """
        Create a state from U = psi + i q(D) rho.

        Args:
            u:          The complex SpectralField U.
            t:          The time.
            elliptic:   The EllipticConfig of the potential solve.
            padding:    The dealiasing padding factor.

        Returns:
            The created state.
        """
        q = symbol("q", u.grid.abs_xi)
        return cls(u.imag_part().apply(1 / q), u.real_part(), t,
                   elliptic=elliptic, padding=padding)

    def replace(self, u):
        """Create a state with the same time and settings from another U"""
        return SimState.from_u(u, self.t, self.elliptic, self.padding)

    @cached_property
    def n_tilde(self):
        """The ion density perturbation n = |D| rho, with zero mean"""
        return self.rho.apply(self.grid.abs_xi)

    @cached_property
    def phi(self):
        """The electron equilibrium potential"""
        check_vacuum(self)
        return solve_phi(self.n_tilde, self.elliptic)

    # The name of the variable, pylint: disable=invalid-name
    @cached_property
    def U(self):
        """The diagonalizing variable psi + i q(D) rho"""
        q = symbol("q", self.grid.abs_xi)
        return self.psi + self.rho.apply(1j * q, real=False)

    @cached_property
    def profile(self):
        """The profile V = exp(-it Lambda(D)) U"""
        return propagate(self.U, -self.t)


def check_vacuum(state):
    """
    Check the ion density stays away from vacuum.

    Raises:
        VacuumError if 1 + n drops to VACUUM_THRESHOLD or below.
    """
    lowest = 1 + float(np.min(state.n_tilde.physical))
    if not lowest > VACUUM_THRESHOLD:
        raise VacuumError(f"Ion density 1 + n reached {lowest:.3g} at "
                          f"t={state.t!r}")


def _nonlinear_parts(state):
    """Get the nonlinear parts of d rho/dt and d psi/dt"""
    check_vacuum(state)
    grid, padding = state.grid, state.padding
    n_tilde = state.n_tilde
    psi_1, psi_2 = state.psi.gradient()
    flux_1 = n_tilde.multiply(psi_1, padding)
    flux_2 = n_tilde.multiply(psi_2, padding)
    d_rho = -(flux_1.derivative(0) + flux_2.derivative(1)). \
        apply(_inverse_abs(grid))
    speed = psi_1.multiply(psi_1, padding) + psi_2.multiply(psi_2, padding)
    log_remainder = n_tilde.map(lambda values: np.log1p(values) - values,
                                padding=padding)
    phi_remainder = state.phi - n_tilde.apply(resolvent(grid))
    d_psi = -(speed.scale(0.5) + log_remainder + phi_remainder)
    return d_rho, d_psi


def rhs(state):
    """
    Evaluate the time derivatives of the density and the velocity
    potential, with the potential solved for the state's density.

    Args:
        state:  The SimState.

    Returns:
        The d rho/dt and d psi/dt real fields.

    Raises:
        VacuumError if the state is too close to vacuum, or the potential
        solver's errors.
    """
    assert isinstance(state, SimState)
    d_rho, d_psi = _nonlinear_parts(state)
    grid = state.grid
    linear_rho = state.psi.apply(grid.abs_xi)
    linear_psi = -state.n_tilde.apply(1 + resolvent(grid))
    return linear_rho + d_rho, linear_psi + d_psi


def nonlinear_terms(state):
    """
    Evaluate the nonlinearity of U_t - i Lambda(D) U = N.

    Returns:
        The complex field N.
    """
    d_rho, d_psi = _nonlinear_parts(state)
    return d_psi + d_rho.apply(1j * symbol("q", state.grid.abs_xi),
                               real=False)


def quadratic_terms(state):
    """
    Evaluate the quadratic part of the nonlinearity of U_t - i Lambda(D) U:
    -|grad psi|^2/2 + n^2/2 + (1 - Delta)^-1 ((1 - Delta)^-1 n)^2 / 2
    plus i q(D) times -(div/|D|)(n grad psi).

    Returns:
        The complex field of quadratic terms.
    """
    grid, padding = state.grid, state.padding
    n_tilde = state.n_tilde
    psi_1, psi_2 = state.psi.gradient()
    linear_phi = n_tilde.apply(resolvent(grid))
    d_psi = (n_tilde.multiply(n_tilde, padding) -
             psi_1.multiply(psi_1, padding) -
             psi_2.multiply(psi_2, padding) +
             linear_phi.multiply(linear_phi, padding).
             apply(resolvent(grid))).scale(0.5)
    d_rho = -(n_tilde.multiply(psi_1, padding).derivative(0) +
              n_tilde.multiply(psi_2, padding).derivative(1)). \
        apply(_inverse_abs(grid))
    return d_psi + d_rho.apply(1j * symbol("q", grid.abs_xi), real=False)


def step(state, dt, linear=False):
    """
    Advance a state by a time step with the integrating factor RK4 scheme
    in U: the linear flow exp(i t Lambda(D)) is applied exactly.

    Args:
        state:  The SimState.
        dt:     The (possibly negative) time step.
        linear: Drop the nonlinearity, if true.

    Returns:
        The advanced SimState.

    Raises:
        As rhs().
    """
    assert isinstance(state, SimState)
    u, t = state.U, state.t
    if linear:
        return SimState.from_u(propagate(u, dt), t + dt, state.elliptic,
                               state.padding)

    def forcing(value, time):
        return nonlinear_terms(SimState.from_u(value, time, state.elliptic,
                                               state.padding))

    half = dt / 2
    first = forcing(u, t)
    second = forcing(propagate(u + first.scale(half), half), t + half)
    third = forcing(propagate(u, half) + second.scale(half), t + half)
    fourth = forcing(propagate(u, dt) + propagate(third, half).scale(dt),
                     t + dt)
    result = propagate(u + first.scale(dt / 6), dt) + \
        propagate(second + third, half).scale(dt / 3) + \
        fourth.scale(dt / 6)
    return SimState.from_u(result, t + dt, state.elliptic, state.padding)


def filtered(state, order):
    """
    Apply the exponential filter exp(-36 ((|xi1|/K)^order + (|xi2|/K)^order))
    to U, with K the Nyquist wavenumber.
    """
    assert isinstance(order, int) and order > 0
    grid = state.grid
    exponent = sum((np.abs(xi) / grid.nyquist) ** order for xi in grid.xi)
    return state.replace(state.U.apply(np.exp(-36 * exponent)))


def hamiltonian(state):
    """
    Compute the conserved energy
    H = integral of (1 + n)|grad psi|^2/2 + (1 + n) log(1 + n) - n +
    |grad phi|^2/2 + phi exp(phi) - exp(phi) + 1,
    by quadrature on the padded grid.

    Args:
        state:  The SimState.

    Returns:
        The energy.

    Raises:
        VacuumError if the state is too close to vacuum, or the potential
        solver's errors.
    """
    check_vacuum(state)
    fine = state.grid.padded(state.padding)

    def values(field):
        return field.pad(fine).physical

    n_tilde = values(state.n_tilde)
    phi = values(state.phi)
    psi_square = sum(values(part) ** 2 for part in state.psi.gradient())
    phi_square = sum(values(part) ** 2 for part in state.phi.gradient())
    density = (1 + n_tilde) * psi_square / 2 + \
        (1 + n_tilde) * np.log1p(n_tilde) - n_tilde + phi_square / 2 + \
        phi * np.exp(phi) - np.expm1(phi)
    return float(np.sum(density) * fine.cell_area)


def mass(state):
    """Get the ion mass perturbation, the integral of n"""
    return float(state.n_tilde.integral())


# pylint: disable=too-many-arguments
def initial_state(grid, initial_data, norm_params, seed=0, elliptic=None,
                  padding=2.0):
    """
    Generate initial data: Gaussian, or seeded band-limited noise under a
    Gaussian window, in both the density and the velocity potential,
    scaled to the requested energy norm of U. The density is not checked
    for vacuum.

    Args:
        grid:           The Grid.
        initial_data:   The InitialData.
        norm_params:    The NormParams of the energy norm.
        seed:           The seed of the random streams.
        elliptic:       The EllipticConfig of the state.
        padding:        The dealiasing padding factor of the state.

    Returns:
        The SimState at time zero.
    """
    assert isinstance(grid, Grid)
    assert isinstance(initial_data, InitialData)
    x1, x2 = grid.x
    window = np.exp(-(x1 ** 2 + x2 ** 2) / (2 * initial_data.width ** 2))
    if initial_data.profile == "gaussian":
        parts = [window, window]
    else:
        if initial_data.gamma0:
            mask = np.exp(-((grid.abs_xi - GAMMA0) / GAMMA0_SPREAD) ** 2 / 2)
        else:
            mask = np.exp(-(grid.abs_xi / initial_data.band) ** 8)
        parts = [
            np.real(np.fft.ifft2(np.fft.fft2(rng.standard_normal(x1.shape)) *
                                 mask)) * window
            for rng in random_streams(seed, 2)
        ]
    rho, psi = (SpectralField(grid, physical=part, real=True)
                for part in parts)
    state = SimState(rho, psi, 0.0, elliptic, padding)
    norm = energy_norm(state.U, norm_params, strict=False)
    scale = initial_data.amplitude / norm if norm > 0 else 0.0
    LOGGER.info("Initial data scaled by %.6g to energy norm %r",
                scale, initial_data.amplitude)
    return SimState(rho.scale(scale), psi.scale(scale), 0.0, elliptic,
                    padding)


# pylint: disable=too-many-arguments
def stable_dt(state, dt_max, steps=100, drift=1e-10, max_halvings=None):
    """
    Find a stable time step by halving, until the relative Hamiltonian
    drift over a number of steps falls below a threshold.

    Args:
        state:          The SimState to start from.
        dt_max:         The first time step tried.
        steps:          Number of steps to measure the drift over.
        drift:          The relative drift to reach.
        max_halvings:   Most halvings, None for MAX_HALVINGS.

    Returns:
        The time step.

    Raises:
        StabilityError if no step reached the drift.
    """
    assert dt_max > 0 and steps >= 1
    reference = hamiltonian(state)
    if reference == 0:
        return dt_max
    dt = dt_max
    for _ in range((MAX_HALVINGS if max_halvings is None
                    else max_halvings) + 1):
        current = state
        for _ in range(steps):
            current = step(current, dt)
        change = abs(hamiltonian(current) - reference) / abs(reference)
        LOGGER.debug("Time step %r: Hamiltonian drift %.3g", dt, change)
        if change < drift:
            return dt
        dt /= 2
    raise StabilityError(f"Hamiltonian drift stayed above {drift!r} down "
                         f"to time step {2 * dt!r}")


# A diagnostics record of a simulation: time, mass, Hamiltonian, L2 norm
# and energy norm of U, Z-norm of the profile V, sup-norms of n and
# grad psi, L2 and Z-norm of V(t) - V(0), and whether the record reports a
# guard violation, with its reason
DiagnosticsRecord = namedtuple(
    "DiagnosticsRecord",
    "t mass hamiltonian l2_U energy_norm z_norm sup_n sup_gradpsi "
    "profile_drift z_cauchy flagged reason",
    defaults=(False, ""),
)


def _sup_gradient(field):
    return float(np.max(np.hypot(*(part.physical
                                   for part in field.gradient()))))


def _z_norm(field, config):
    if config.z_k_range is None:
        return None
    k_min, k_max = config.z_k_range
    value, _ = z_norm(field, config.norm_params, range(k_min, k_max + 1),
                      range(0, max_resolved_j(field.grid) + 1))
    return value


def diagnose(state, reference, config):
    """
    Compute the diagnostics of a simulation state.

    Args:
        state:      The SimState.
        reference:  The initial SimState.
        config:     The SimConfig.

    Returns:
        The DiagnosticsRecord.
    """
    assert isinstance(config, SimConfig)
    difference = state.profile - reference.profile
    return DiagnosticsRecord(
        t=state.t,
        mass=mass(state),
        hamiltonian=hamiltonian(state),
        l2_U=state.U.l2_norm(),
        energy_norm=energy_norm(state.U, config.norm_params, strict=False),
        z_norm=_z_norm(state.profile, config),
        sup_n=state.n_tilde.sup_norm(),
        sup_gradpsi=_sup_gradient(state.psi),
        profile_drift=difference.l2_norm(),
        z_cauchy=_z_norm(difference, config),
    )


def _flagged(state, exc):
    """Create the record of a guard violation after a state"""
    return DiagnosticsRecord(
        t=state.t, mass=mass(state), hamiltonian=None,
        l2_U=state.U.l2_norm(), energy_norm=None, z_norm=None,
        sup_n=state.n_tilde.sup_norm(),
        sup_gradpsi=_sup_gradient(state.psi),
        profile_drift=None, z_cauchy=None, flagged=True,
        reason=f"{type(exc).__name__}: {exc}",
    )


def integrate(config, seed=0):
    """
    Run a simulation, generating diagnostics records with their states.
    Guard violations produce a final flagged record (with the last good
    state) before being raised.

    Args:
        config: The SimConfig.
        seed:   The seed of the initial data.

    Returns:
        A generator of (DiagnosticsRecord, SimState) tuples.
    """
    assert isinstance(config, SimConfig)
    grid = Grid(config.grid, config.domain_length)
    state = initial_state(grid, config.initial_data, config.norm_params,
                          seed, config.elliptic, config.padding)
    reference = state
    try:
        yield diagnose(state, reference, config), state
        if config.t_end == 0:
            return
        dt = config.dt
        if dt == "auto":
            dt = stable_dt(state, min(DT_MAX, config.t_end))
        count, dt = config.steps(dt)
        LOGGER.info("Integrating %d steps of %r on %r", count, dt, grid)
        for index in range(1, count + 1):
            state = step(state, dt)
            if config.filter_order:
                state = filtered(state, config.filter_order)
            if index % config.diagnostics_every == 0 or index == count:
                record = diagnose(state, reference, config)
                LOGGER.debug("%r", record)
                yield record, state
    except GuardError as exc:
        LOGGER.error("Simulation aborted at t=%r: %s", state.t, exc)
        yield _flagged(state, exc), state
        raise


def run(config, seed=0):
    """
    Run a simulation, see integrate().

    Returns:
        A generator of DiagnosticsRecord.
    """
    for record, _ in integrate(config, seed):
        yield record


def experiment(parameters, seed, out):
    """
    Run a simulation and write its diagnostics.csv, the snapshots of U and
    the run-manifest.json into a directory.

    Args:
        parameters: The JSON SimConfig.
        seed:       The seed of the initial data.
        out:        The output directory.

    Returns:
        The list of DiagnosticsRecord.

    Raises:
        ConfigError if the configuration is invalid, GuardError if a guard
        was violated, OutputError if writing failed.
    """
    config = SimConfig.from_json(parameters)
    directory = os.path.abspath(output.output_path(out))
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise OutputError(directory) from exc
    manifest = output.manifest("simulate", parameters, seed)
    output.write_json(os.path.join(directory, "run-manifest.json"),
                      dict(config=config.to_json()), manifest)
    records = []
    with output.CsvWriter(os.path.join(directory, "diagnostics.csv"),
                          list(DiagnosticsRecord._fields),
                          manifest) as writer:
        for index, (record, state) in enumerate(integrate(config, seed)):
            writer.write(record)
            records.append(record)
            if config.snapshot_every and not record.flagged and \
               index % config.snapshot_every == 0:
                state.U.save(os.path.join(directory,
                                          SNAPSHOT_FORMAT.format(index)))
    return records


@main_function
def simulate_main():
    """Execute the epion-simulate command-line tool"""
    description = 'epion-simulate - Integrate the Euler-Poisson ion ' \
        'system and write diagnostics into a directory'
    parser = OutputArgumentParser(description=description,
                                  default_out="simulation")
    parser.add_argument('--config', metavar="PATH", required=True,
                        help='The JSON simulation configuration.')
    args = parser.parse_args()
    experiment(json_load(args.config), args.seed, args.out)
    return 0
