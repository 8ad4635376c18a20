"""epion.semigroup module tests"""

import math
import numpy as np
import pytest
from pytest import raises
from epion import semigroup
from epion.semigroup import propagate, stationary_points, fit_decay, \
    DecayProbeSpec, RadialProfile, decay_exponent_probe, radial_supnorm, \
    radial_values, profile_bump, supnorm_series, group_velocity, \
    WrapAroundError, ResolutionError
from epion.dispersion import GAMMA0, lambda_eval
from epion.field import Grid, SpectralField
from epion.misc import ConfigError, random_streams
from epion.output import read_csv
from epion.unittest import assert_executes

# A grid where waves with integer wavenumbers are periodic
GRID = Grid(64, 8 * math.pi)


def random_field(seed=0):
    """Create a smooth random complex field on GRID"""
    rng, = random_streams(seed, 1)
    shape = GRID.abs_xi.shape
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return SpectralField(GRID, spectral=values * np.exp(-GRID.abs_xi ** 2))


def test_identity_and_plane_wave():
    """Check time zero and the phase of a plane wave"""
    field = random_field()
    assert (propagate(field, 0.0) - field).sup_norm() < 1e-14
    wave = SpectralField.from_function(
        GRID, lambda x1, x2: np.exp(1j * x1), real=False
    )
    expected = wave.scale(np.exp(2.5j * lambda_eval(1.0)))
    assert (propagate(wave, 2.5) - expected).sup_norm() < 1e-12


def test_unitarity_and_group_law():
    """Check the flow conserves L2 and composes additively in time"""
    field = random_field(1)
    norm = field.l2_norm()
    assert propagate(field, 7.3).l2_norm() == pytest.approx(norm, rel=1e-12)
    composed = propagate(propagate(field, 3.0), 4.0)
    assert (composed - propagate(field, 7.0)).l2_norm() < 1e-10 * norm
    backwards = propagate(propagate(field, 5.0), -5.0)
    assert (backwards - field).l2_norm() < 1e-10 * norm


def test_symmetries():
    """Check the flow commutes with transposition and reflection"""
    field = random_field(2)

    def transpose(values):
        return values.T

    def reflect(values):
        return np.roll(values[::-1], 1, axis=0)

    for symmetry in (transpose, reflect):
        moved = SpectralField(GRID, physical=symmetry(field.physical))
        left = symmetry(propagate(field, 4.0).physical)
        right = propagate(moved, 4.0).physical
        assert np.max(np.abs(left - right)) < 1e-12


def test_stationary_points():
    """Check the radii with a given group velocity"""
    minimum = lambda_eval(GAMMA0, 1)
    assert stationary_points(minimum) == [GAMMA0]
    assert not stationary_points(minimum - 1e-3)
    velocity = lambda_eval(1.5, 1)
    assert minimum < velocity < 1
    roots = stationary_points(velocity)
    assert len(roots) == 2
    assert roots[0] < GAMMA0 < roots[1]
    assert roots[0] == pytest.approx(1.5, abs=1e-8)
    for root in roots:
        assert lambda_eval(root, 1) == pytest.approx(velocity, abs=1e-10)
    roots = stationary_points(lambda_eval(1.0, 1))
    assert len(roots) == 1
    assert roots[0] == pytest.approx(1.0, abs=1e-8)
    assert not stationary_points(1.5)


def test_degenerate_onset_time():
    """Check the onset of the cubic-degenerate regime"""
    assert semigroup.degenerate_onset_time(0.05) == \
        pytest.approx(6.2e6, rel=0.02)
    assert semigroup.degenerate_onset_time(2.4) < 100


def test_fit_decay():
    """Check power-law fitting over the last decade"""
    times = np.geomspace(1, 1000, 10)
    fit = fit_decay(times, 3 * times ** (-5 / 6))
    assert fit.slope == pytest.approx(-5 / 6, abs=1e-12)
    assert fit.prefactor == pytest.approx(3, rel=1e-10)
    assert fit.interval[0] <= fit.slope <= fit.interval[1]
    assert fit.points == 4
    with raises(ConfigError):
        fit_decay([1.0, 10.0, 100.0], [1.0, 0.1, 0.01])


def test_spec_validation():
    """Check inconsistent probe parameters are rejected"""
    band = [0.4, 0.6]
    for bad in (dict(times=[1, 2]), dict(times=[1, 3, 2]),
                dict(times=[1, 2, 3], method="exact"),
                dict(times=[1, 2, 3], band=[0.6, 0.4]),
                dict(times=[1, 2, 3], band=band, method="grid",
                     domain_length=10.0),
                dict(times=[1, 2, 3], band=band, method="grid",
                     domain_length=400.0, grid=500),
                dict(times=[1, 2, 3], band=band, method="grid",
                     domain_length=400.0, grid=64),
                dict(times=[1, 2, 3], k=0, shell=3)):
        with raises(ConfigError):
            DecayProbeSpec(**bad)
    with raises(ConfigError):
        DecayProbeSpec.from_json(dict(times=[1, 2, 3], method=1))
    spec = DecayProbeSpec([10, 20, 30], band=band, method="grid")
    assert spec.domain_length == pytest.approx(4 * math.sqrt(2) * 30)
    assert Grid(spec.grid, spec.domain_length).nyquist > \
        2 * spec.profile.upper
    assert DecayProbeSpec([1, 2, 3], k=1, shell="aggregate").profile.upper \
        <= GAMMA0 + 0.75 / 64


def test_profile_normalization():
    """Check profiles have unit L2 norm on the plane and on grids"""
    profile = DecayProbeSpec([1, 2, 3], band=[0.4, 0.6]).profile
    assert profile(0.5) > 0
    assert profile(profile.upper + 0.01) == 0
    bump = profile_bump(Grid(256, 400.0), profile)
    assert bump.l2_norm() == pytest.approx(1, abs=1e-6)
    assert bump.sup_norm() == pytest.approx(
        abs(radial_values(profile, 0.0, [0.0])[0]), rel=1e-6
    )


def test_radial_oracle_matches_grid():
    """Check the radial quadrature against grid propagation"""
    spec = DecayProbeSpec([10.0, 20.0, 30.0], band=[0.4, 0.6],
                          method="grid", domain_length=400.0, grid=1024)
    rows = decay_exponent_probe(spec).rows
    for t, supnorm, l2norm in rows:
        assert l2norm == pytest.approx(1, abs=1e-6)
        assert supnorm == pytest.approx(radial_supnorm(spec.profile, t),
                                        rel=0.03)


def test_refinement(monkeypatch):
    """Check the grid refinement guard"""
    spec = DecayProbeSpec([10.0, 20.0, 30.0], band=[0.1, 0.3],
                          method="grid", domain_length=400.0, grid=512,
                          refine=True)
    decay_exponent_probe(spec)
    monkeypatch.setattr(semigroup, "REFINEMENT_TOLERANCE", -1.0)
    with raises(ResolutionError):
        decay_exponent_probe(spec)


def test_wrap_around():
    """Check propagation past the domain boundary is detected"""
    profile = DecayProbeSpec([1, 2, 3], band=[0.5, 1.5]).profile
    bump = profile_bump(Grid(128, 64.0), profile)
    assert supnorm_series(bump, [1.0])[0][0] == 1.0
    with raises(WrapAroundError):
        supnorm_series(bump, [40.0])


def test_group_velocity():
    """Check a wave packet moves with lambda'"""
    grid = Grid(512, 512.0)
    packet = SpectralField.from_function(
        grid,
        lambda x1, x2: np.exp(1j * x1 - (x1 ** 2 + x2 ** 2) / 200),
        real=False,
    )
    velocity = group_velocity(packet, np.linspace(10, 100, 4))
    assert velocity[0] == pytest.approx(lambda_eval(1.0, 1), rel=0.02)
    assert abs(velocity[1]) < 1e-6


def test_generic_decay():
    """Check generic frequency bands decay like 1/t"""
    spec = DecayProbeSpec(np.geomspace(1e3, 1e4, 6), band=[0.3, 0.9])
    fit = decay_exponent_probe(spec).fit
    assert fit.slope == pytest.approx(-1, abs=0.1)


def test_degenerate_decay():
    """Check bands at gamma0 decay slower than generic ones"""
    times = np.geomspace(1e3, 1e4, 6)
    narrow = decay_exponent_probe(DecayProbeSpec(
        times, band=[GAMMA0 - 0.025, GAMMA0 + 0.025]
    )).fit
    assert narrow.slope == pytest.approx(-0.5, abs=0.1)
    wide = decay_exponent_probe(DecayProbeSpec(
        times, band=[GAMMA0 - 1.2, GAMMA0 + 1.2]
    )).fit
    assert wide.slope == pytest.approx(-5 / 6, abs=0.15)
    generic = decay_exponent_probe(DecayProbeSpec(
        times, band=[0.3, 0.9]
    )).fit
    assert generic.slope < narrow.slope - 0.1


def test_radial_profile_validation():
    """Check empty radial profiles are rejected"""
    with raises(ConfigError):
        RadialProfile(lambda rho: np.zeros_like(rho), 0.0, 1.0)


def test_main(output_dir):
    """Check the epion-decay command-line tool"""
    assert_executes("epion.semigroup.decay_main",
                    "--band", "0.3", "0.9", "--tmax", "100",
                    "--times", "5", "-o", "decay.csv",
                    stdout_re=r'.*"slope".*')
    header, rows = read_csv(str(output_dir / "decay.csv"))
    assert header == ["t", "supnorm", "l2norm"]
    assert len(rows) == 5
    assert_executes("epion.semigroup.decay_main",
                    "--band", "0.3", "0.9", "--tmax", "100",
                    "--method", "grid", "--domain-length", "10",
                    stderr_re=".*ConfigError.*", status=2)
