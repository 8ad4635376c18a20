"""epion.solver module tests"""

import json
import math
import numpy as np
import pytest
from pytest import raises
from epion import solver
from epion.solver import SimState, SimConfig, InitialData, rhs, step, \
    hamiltonian, mass, nonlinear_terms, quadratic_terms, stable_dt, \
    check_vacuum, integrate, run, VacuumError, StabilityError
from epion.elliptic import EllipticConfig, resolvent
from epion.field import Grid, SpectralField
from epion.misc import ConfigError, GuardError
from epion.output import read_csv
from epion.semigroup import propagate
from epion.unittest import assert_executes

# A grid where low-frequency trigonometric waves are periodic
GRID = Grid(16, 2 * math.pi)

# Potential solves accurate enough for finite differences
ELLIPTIC = EllipticConfig(tol=1e-13)


def make_state(amplitude, grid=GRID):
    """Create a smooth state of a given amplitude with resonant triads"""
    rho = SpectralField.from_function(
        grid, lambda x1, x2: amplitude * (np.cos(x1) + 0.5 * np.cos(x2) +
                                          0.3 * np.cos(x1 + x2))
    )
    psi = SpectralField.from_function(
        grid, lambda x1, x2: amplitude * (np.sin(x1) - 0.4 * np.sin(x2) +
                                          0.2 * np.cos(x1 - x2))
    )
    return SimState(rho, psi, 0.0, ELLIPTIC)


def shifted(state, d_rho, d_psi, factor):
    """Move a state along a direction"""
    return SimState(state.rho + d_rho.scale(factor),
                    state.psi + d_psi.scale(factor), state.t, ELLIPTIC)


def simulation(amplitude, **kwargs):
    """Create a small simulation configuration"""
    parameters = dict(grid=64, domain_length=32.0, t_end=2.0, dt=0.05,
                      diagnostics_every=10, z_k_range=None,
                      initial_data=InitialData(amplitude=amplitude))
    parameters.update(kwargs)
    return SimConfig(**parameters)


def test_zero_state():
    """Check the zero state is stationary with zero energy"""
    state = SimState(GRID.zeros(), GRID.zeros())
    d_rho, d_psi = rhs(state)
    assert d_rho.sup_norm() == 0
    assert d_psi.sup_norm() == 0
    assert hamiltonian(state) == 0
    assert mass(state) == 0


def test_round_trip():
    """Check the state is recovered from U"""
    state = make_state(0.1)
    restored = SimState.from_u(state.U, 0.0)
    assert (restored.rho - state.rho).sup_norm() < 1e-15
    assert (restored.psi - state.psi).sup_norm() < 1e-15


def test_mass():
    """Check the density perturbation has exactly zero mass"""
    state = make_state(0.1)
    assert mass(state) == 0
    d_rho, _ = rhs(state)
    assert d_rho.apply(GRID.abs_xi).integral() == 0


def test_nonlinearity_scaling():
    """Check the nonlinearity is quadratic with cubic remainder"""
    nonlinear, remainder = [], []
    for amplitude in (1e-2, 5e-3):
        state = make_state(amplitude)
        terms = nonlinear_terms(state)
        nonlinear.append(terms.l2_norm())
        remainder.append((terms - quadratic_terms(state)).l2_norm())
    assert nonlinear[0] / nonlinear[1] == pytest.approx(4, rel=0.05)
    assert remainder[0] / remainder[1] == pytest.approx(8, rel=0.1)


def test_linear_rhs():
    """Check the linearization of the right-hand side"""
    amplitude = 1e-3
    state = make_state(amplitude)
    d_rho, d_psi = rhs(state)
    linear_rho = state.psi.apply(GRID.abs_xi)
    linear_psi = -state.n_tilde.apply(1 + resolvent(GRID))
    assert (d_rho - linear_rho).l2_norm() < 100 * amplitude ** 2
    assert (d_psi - linear_psi).l2_norm() < 100 * amplitude ** 2
    assert (d_rho - linear_rho).l2_norm() > 0


def test_hamiltonian_quadratic_part():
    """Check the energy against its quadratic truncation"""
    errors = []
    for amplitude in (1e-2, 5e-3):
        state = make_state(amplitude)
        linear_phi = state.n_tilde.apply(resolvent(GRID))
        parts = [*state.psi.gradient(), state.n_tilde, linear_phi,
                 *linear_phi.gradient()]
        quadratic = sum(part.l2_norm() ** 2 for part in parts) / 2
        errors.append(abs(hamiltonian(state) - quadratic) / quadratic)
    assert errors[0] < 0.05
    assert errors[0] / errors[1] > 1.8


def test_hamiltonian_conserved_by_flow():
    """Check the energy is stationary along the semi-discrete flow"""
    state = make_state(0.1)
    d_rho, d_psi = rhs(state)
    step_size = 1e-4
    derivative = (hamiltonian(shifted(state, d_rho, d_psi, step_size)) -
                  hamiltonian(shifted(state, d_rho, d_psi, -step_size))) / \
        (2 * step_size)
    exchange = abs(float(np.sum(d_rho.apply(GRID.abs_xi).physical *
                                d_psi.physical)) * GRID.cell_area)
    assert exchange > 1e-3
    assert abs(derivative) < 1e-6 * exchange
    # A wrong sign in the potential term breaks conservation
    derivative = (hamiltonian(shifted(state, d_rho, -d_psi, step_size)) -
                  hamiltonian(shifted(state, d_rho, -d_psi, -step_size))) / \
        (2 * step_size)
    assert abs(derivative) > 1e-3 * exchange


def test_linear_step():
    """Check linear steps are the exact flow and reversible"""
    state = make_state(0.1)
    advanced = step(state, 0.7, linear=True)
    assert advanced.t == pytest.approx(0.7)
    assert (advanced.U - propagate(state.U, 0.7)).l2_norm() < 1e-12
    back = step(advanced, -0.7, linear=True)
    assert (back.U - state.U).l2_norm() < 1e-12


def test_self_convergence():
    """Check the fourth order of the time stepping"""
    state = make_state(0.1)
    finals = []
    for dt in (0.05, 0.025, 0.0125):
        current = state
        for _ in range(int(round(0.5 / dt))):
            current = step(current, dt)
        assert current.t == pytest.approx(0.5)
        finals.append(current.U)
    order = math.log2((finals[0] - finals[1]).l2_norm() /
                      (finals[1] - finals[2]).l2_norm())
    assert 3.7 < order < 4.3


def test_vacuum():
    """Check states near vacuum are rejected"""
    rho = SpectralField.from_function(GRID,
                                      lambda x1, x2: 0.6 * np.cos(x1))
    state = SimState(rho, GRID.zeros())
    with raises(VacuumError):
        check_vacuum(state)
    with raises(VacuumError):
        rhs(state)
    with raises(VacuumError):
        hamiltonian(state)
    check_vacuum(make_state(0.1))


def test_stable_dt():
    """Check time step selection"""
    state = make_state(0.1)
    dt = stable_dt(state, 0.25, steps=4, drift=1e-6)
    assert 0 < dt <= 0.25
    assert stable_dt(SimState(GRID.zeros(), GRID.zeros()), 0.25) == 0.25
    with raises(StabilityError):
        stable_dt(state, 0.25, steps=1, drift=0, max_halvings=1)


def test_initial_state():
    """Check initial data have the requested energy norm"""
    grid = Grid(64, 32.0)
    config = simulation(1e-2)
    for initial_data in (InitialData(amplitude=1e-2),
                         InitialData(amplitude=1e-2, profile="random"),
                         InitialData(amplitude=1e-2, profile="random",
                                     gamma0=True)):
        state = solver.initial_state(grid, initial_data, config.norm_params,
                                     seed=3)
        record = solver.diagnose(state, state, config)
        assert record.energy_norm == pytest.approx(1e-2, rel=1e-9)
        assert record.profile_drift == 0
    first, second = (
        solver.initial_state(grid, InitialData(profile="random"),
                             config.norm_params, seed=seed)
        for seed in (1, 1)
    )
    assert (first.U - second.U).sup_norm() == 0


def test_run_conservation():
    """Check mass and energy conservation over a run"""
    records = list(run(simulation(1e-2)))
    assert [record.t for record in records] == \
        pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
    reference = records[0]
    assert reference.hamiltonian > 0
    for record in records:
        assert not record.flagged
        assert abs(record.mass - reference.mass) < 1e-12
        assert abs(record.hamiltonian - reference.hamiltonian) < \
            1e-6 * reference.hamiltonian


def test_small_data_sweep():
    """Check the nonlinear deviation from the linear flow scales with size"""
    deviations, drifts, growths = [], [], []
    for amplitude in (1e-2, 5e-3):
        pairs = list(integrate(simulation(amplitude, z_k_range=(-1, 0))))
        initial, final = pairs[0][1], pairs[-1][1]
        linear = propagate(initial.U, final.t)
        deviations.append((final.U - linear).l2_norm() /
                          initial.U.l2_norm())
        drifts.append(pairs[-1][0].profile_drift)
        growths.append(max(record.energy_norm for record, _ in pairs) /
                       pairs[0][0].energy_norm)
        initial_z = pairs[0][0].z_norm
        assert initial_z > 0
        assert pairs[0][0].z_cauchy == 0
        for record, _ in pairs:
            assert record.z_norm <= 2 * initial_z
            assert 0 <= record.z_cauchy < initial_z
    assert deviations[0] / deviations[1] == pytest.approx(2, rel=0.2)
    assert drifts[0] / drifts[1] == pytest.approx(4, rel=0.2)
    for growth in growths:
        assert 1 <= growth < 1.2
    assert abs(growths[0] - growths[1]) < 0.2


def test_zero_run():
    """Check zero data stay zero"""
    config = simulation(0.0, t_end=0.2, diagnostics_every=2,
                        z_k_range=[-1, 1])
    records = list(run(config))
    assert len(records) == 3
    for record in records:
        assert record.hamiltonian == 0
        assert record.energy_norm == 0
        assert record.z_norm == 0
        assert record.profile_drift == 0


def test_flagged_run():
    """Check guard violations end runs with a flagged record"""
    records = []
    with raises(GuardError):
        for record in run(simulation(100.0, grid=32)):
            records.append(record)
    assert len(records) == 1
    assert records[0].flagged
    assert records[0].reason
    assert records[0].hamiltonian is None


def test_config():
    """Check simulation configuration validation"""
    config = SimConfig(grid=16, domain_length=1.0, t_end=1.0)
    assert SimConfig.from_json(config.to_json()).to_json() == \
        config.to_json()
    assert config.steps(0.3) == (4, 0.25)
    assert config.steps(0.5) == (2, 0.5)
    for bad in (dict(grid=48), dict(grid=4), dict(dt=0),
                dict(dealias=dict(padding=0.5)),
                dict(dealias=dict(filter_order=-1)),
                dict(diagnostics_every=0), dict(z_k_range=(2, 1))):
        parameters = dict(grid=16, domain_length=1.0, t_end=1.0)
        parameters.update(bad)
        with raises(ConfigError):
            SimConfig(**parameters)
    with raises(ConfigError):
        SimConfig.from_json(dict(grid=16, domain_length=1.0))
    with raises(ConfigError):
        SimConfig.from_json(dict(grid=16, domain_length=1.0, t_end=1.0,
                                 initial_data=dict(amplitude=-1)))
    with raises(ConfigError):
        InitialData(profile="square")


def test_filter():
    """Check the filter leaves low modes and damps the highest"""
    state = make_state(0.1)
    result = solver.filtered(state, 16)
    assert (result.U - state.U).l2_norm() < 1e-12
    noise = SpectralField(GRID, spectral=np.where(GRID.abs_xi > 6, 1.0, 0.0),
                          real=True)
    damped = solver.filtered(SimState(GRID.zeros(), noise), 4)
    assert damped.U.l2_norm() < 0.5 * noise.l2_norm()


def write_config(path, **kwargs):
    """Write a simulation configuration file"""
    parameters = dict(grid=32, domain_length=32.0, t_end=0.2, dt=0.05,
                      diagnostics_every=2, snapshot_every=1,
                      z_k_range=[-1, 1])
    parameters.update(kwargs)
    path.write_text(json.dumps(parameters), encoding="utf8")
    return str(path)


def test_main(tmp_path):
    """Check the epion-simulate command-line tool"""
    out = tmp_path / "run"
    assert_executes("epion.solver.simulate_main",
                    "--config", write_config(tmp_path / "run.json"),
                    "-o", str(out))
    header, rows = read_csv(str(out / "diagnostics.csv"))
    assert header == list(solver.DiagnosticsRecord._fields)
    assert len(rows) == 3
    assert [row[header.index("flagged")] for row in rows] == ["false"] * 3
    with open(out / "run-manifest.json", "r", encoding="utf8") as file:
        manifest = json.load(file)
    assert manifest["config"]["grid"] == 32
    assert manifest["manifest"]["subcommand"] == "simulate"
    for index in range(3):
        snapshot = SpectralField.load(
            str(out / solver.SNAPSHOT_FORMAT.format(index))
        )
        assert snapshot.grid == Grid(32, 32.0)

    bad = tmp_path / "bad"
    assert_executes("epion.solver.simulate_main",
                    "--config", write_config(tmp_path / "bad.json", grid=48),
                    "-o", str(bad), stderr_re=".*ConfigError.*", status=2)
    assert not bad.exists()

    vacuum = tmp_path / "vacuum"
    assert_executes("epion.solver.simulate_main",
                    "--config",
                    write_config(tmp_path / "vacuum.json",
                                 initial_data=dict(amplitude=100.0)),
                    "-o", str(vacuum), stderr_re=".*Error.*", status=3)
    header, rows = read_csv(str(vacuum / "diagnostics.csv"))
    assert rows[-1][header.index("flagged")] == "true"
