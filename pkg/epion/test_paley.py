"""epion.paley module tests"""

import json
import math
import logging
import numpy as np
import pytest
from pytest import raises
from scipy.integrate import trapezoid
from epion import paley
from epion.dispersion import GAMMA0
from epion.field import Grid, SpectralField
from epion.misc import ConfigError, random_streams
from epion.output import MANIFEST_SUFFIX
from epion.paley import CUTOFFS, DyadicIndex, NormParams, cutoff_eval, \
    project, rotate, z_norm, energy_norm, InvalidIndexError, \
    UnresolvableShell
from epion.unittest import assert_executes


def test_smooth_step():
    """Check the smooth transition"""
    assert paley.smooth_step(0.0) == 0
    assert paley.smooth_step(-1.0) == 0
    assert paley.smooth_step(1.0) == 1
    assert paley.smooth_step(2.0) == 1
    assert paley.smooth_step(0.5) == pytest.approx(0.5, abs=1e-15)
    values = paley.smooth_step(np.linspace(0, 1, 101))
    assert np.all(np.diff(values) >= 0)


def test_phi():
    """Check the bump plateau and support"""
    assert cutoff_eval(CUTOFFS, "phi", None, 1.0) == 1
    assert cutoff_eval(CUTOFFS, "phi", None, 1.25) == 1
    assert cutoff_eval(CUTOFFS, "phi", None, 1.5) == 0
    assert cutoff_eval(CUTOFFS, "phi", None, 1.6) == 0
    assert 0 < cutoff_eval(CUTOFFS, "phi", None, 1.4) < 1
    assert cutoff_eval(CUTOFFS, "phi", None, -1.0) == 1


def test_partition_of_unity():
    """Check the frequency shells add up to one"""
    t = np.logspace(-5, 5, 1001)
    total = sum(CUTOFFS.psi(t, k) for k in range(-20, 21))
    assert np.max(np.abs(total - 1)) < 1e-12


def test_varphi_partitions():
    """Check both cutoff families telescope into one"""
    t = np.linspace(0, 30, 301)
    total = sum(CUTOFFS.varphi(t, k, -2) for k in range(-2, 6))
    assert np.max(np.abs(total - 1)) < 1e-12
    t = np.linspace(0.01, 30, 301)
    total = sum(CUTOFFS.tilde_varphi(t, k, 3) for k in range(-10, 4))
    assert np.max(np.abs(total - 1)) < 1e-12


def test_invalid_index():
    """Check inconsistent cutoff indices are rejected"""
    with raises(InvalidIndexError):
        cutoff_eval(CUTOFFS, "varphi", (-1, 0), 1.0)
    with raises(InvalidIndexError):
        cutoff_eval(CUTOFFS, "tilde_varphi", (1, 0), 1.0)
    with raises(InvalidIndexError):
        cutoff_eval(CUTOFFS, "sigma", 0, 1.0)
    assert cutoff_eval(CUTOFFS, "varphi", (0, 0), 1.0) == 1
    assert cutoff_eval(CUTOFFS, "psi_k", 0, 1.0) == 1


def test_a_symbol():
    """Check the gamma0-distance shells add up to one"""
    params = NormParams()
    radius = np.array([0.5, GAMMA0 - 0.01, GAMMA0 + 1e-4, GAMMA0 + 0.1, 4.0])
    total = sum(paley.a_symbol(radius, n, params) for n in range(40))
    assert np.max(np.abs(total - 1)) < 1e-12
    assert np.max(np.abs(paley.a_symbol(radius, 0, params) +
                         paley.a_symbol(radius, "aggregate", params) -
                         1)) < 1e-15
    assert paley.a_symbol(GAMMA0, "aggregate", params) == 1


def test_norm_params():
    """Check norm parameter validation"""
    params = NormParams()
    assert params.to_json() == dict(delta=1e-5, N0=6, N1=4, N2=3, N3=2,
                                    gamma_scale=64)
    assert NormParams.from_json(params.to_json()).to_json() == \
        params.to_json()
    for bad in (dict(delta=0), dict(N1=7), dict(gamma_scale=0.5)):
        with raises(ConfigError):
            NormParams(**bad)
    with raises(ConfigError):
        NormParams.from_json(dict(epsilon=1))
    assert params.z_weight(0, 0) == 1
    assert params.z_weight(2, 1) == \
        pytest.approx(2.0 ** (10 + 1e-5 + 3 * (1 - 2e-4)))


def test_wide_gamma_scale_warning(caplog):
    """Check gamma scales beyond any grid's resolution are reported"""
    with caplog.at_level(logging.WARNING, logger="epion.paley"):
        NormParams(gamma_scale=paley.GAMMA_SCALE_WARNING)
    assert not caplog.records
    with caplog.at_level(logging.WARNING, logger="epion.paley"):
        params = NormParams(gamma_scale=2 * paley.GAMMA_SCALE_WARNING)
    assert params.gamma_scale == 2 ** 21
    assert len(caplog.records) == 1
    assert "narrower" in caplog.records[0].getMessage()


def plane_wave(grid, xi1, xi2):
    """Create a complex plane wave"""
    return SpectralField.from_function(
        grid, lambda x1, x2: np.exp(1j * (xi1 * x1 + xi2 * x2)), real=False
    )


def test_frequency_projection_of_plane_wave():
    """Check plane waves are eigenfunctions of P_k"""
    grid = Grid(64, 8 * math.pi)
    wave = plane_wave(grid, 1.0, 0.0)
    assert (project(wave, DyadicIndex(0, 0), "P") - wave).sup_norm() < 1e-12
    assert project(wave, DyadicIndex(0, 1), "P").sup_norm() < 1e-12
    assert project(wave, DyadicIndex(0, -1), "P").sup_norm() < 1e-12
    wave = plane_wave(grid, 0.0, 2.0)
    assert (project(wave, DyadicIndex(0, 1), "P") - wave).sup_norm() < 1e-12


def test_almost_orthogonality():
    """Check frequency shells two apart don't interact"""
    grid = Grid(64, 8 * math.pi)
    rng = random_streams(0, 1)[0]
    field = SpectralField(grid, physical=rng.standard_normal((64, 64)),
                          real=True)
    for k in (-1, 0, 1):
        once = project(field, DyadicIndex(0, k), "P")
        assert project(once, DyadicIndex(0, k + 2), "P").sup_norm() < 1e-12
        twice = project(once, DyadicIndex(0, k), "P")
        assert twice.l2_norm() <= once.l2_norm()


@pytest.mark.parametrize("k", [-1, 0, 1])
def test_spatial_partition(grid, gaussian, k):
    """Check the spatial shells of a frequency shell add up to it"""
    shell = project(gaussian, DyadicIndex(0, k), "P")
    total = shell.scale(0)
    for j in range(max(-k, 0), paley.max_resolved_j(grid) + 1):
        total = total + project(gaussian, DyadicIndex(j, k), "Q")
    assert (total - shell).sup_norm() < 1e-12
    if k < 0:
        with raises(InvalidIndexError):
            project(gaussian, DyadicIndex(-k - 1, k), "Q")


def test_admissible_pieces_recover_low_shell():
    """Check the admissible pieces of a low-frequency shell cover it"""
    grid = Grid(256, 256.0)
    field = SpectralField.from_function(
        grid, lambda x1, x2: np.exp(-(x1 ** 2 + x2 ** 2) / 32)
    )
    k = -2
    shell = project(field, DyadicIndex(0, k), "P")
    pairs = paley.admissible_pairs(grid, [k],
                                   range(paley.max_resolved_j(grid) + 1))
    assert [index.j for index in pairs] == \
        list(range(2, paley.max_resolved_j(grid) + 1))
    pieces = [project(field, index, "Q") for index in pairs]
    total = shell.scale(0)
    for piece in pieces:
        total = total + piece
    assert (total - shell).sup_norm() < 1e-12
    ratio = sum(piece.l2_norm() ** 2 for piece in pieces) / \
        shell.l2_norm() ** 2
    assert 0.95 < ratio <= 1 + 1e-12
    # The Z-norm measures the central piece
    _, index = z_norm(field, NormParams(), [k], [2])
    assert index == DyadicIndex(2, k)


def test_unresolvable(grid, gaussian):
    """Check shells the grid doesn't resolve are rejected"""
    with raises(UnresolvableShell):
        project(gaussian, DyadicIndex(0, 5), "P")
    with raises(UnresolvableShell):
        project(gaussian, DyadicIndex(0, -6), "P")
    with raises(UnresolvableShell):
        project(gaussian, DyadicIndex(10, 0), "Q")
    assert paley.admissible_pairs(grid, range(4, 7), range(0, 3)) == []
    assert DyadicIndex(1, -1) in \
        paley.admissible_pairs(grid, range(-1, 1), range(0, 3))
    assert DyadicIndex(0, -1) not in \
        paley.admissible_pairs(grid, range(-1, 1), range(0, 3))


def test_enlarged_projections(gaussian):
    """Check Q* and A_n Q* only shrink Q_jk"""
    index = DyadicIndex(1, 0, 2)
    plain = project(gaussian, index, "Q").l2_norm()
    starred = project(gaussian, index, "Qstar").l2_norm()
    assert 0 < starred <= plain + 1e-15
    params = NormParams()
    localized = project(gaussian, index, "AQstar", params).l2_norm()
    assert localized <= starred + 1e-15
    with raises(InvalidIndexError):
        project(gaussian, DyadicIndex(1, 0), "AQstar", params)


def test_rotation(grid, gaussian):
    """Check rotations annihilate radial fields and rotate angular ones"""
    assert rotate(gaussian, 2).l2_norm() < 1e-10
    assert rotate(gaussian, 0) is gaussian
    # Omega (x1 g) = -x2 g for radial g
    field = SpectralField(grid, physical=grid.x[0] * gaussian.physical,
                          real=True)
    expected = -grid.x[1] * gaussian.physical
    assert np.max(np.abs(rotate(field).physical - expected)) < 1e-10


def test_rotation_aliasing():
    """Check unresolved rotations are detected"""
    grid = Grid(32, 16.0)
    field = plane_wave(grid, 2 * math.pi * 12 / 16, 0.0)
    with raises(paley.AliasingError):
        rotate(field)
    assert rotate(field, strict=False).l2_norm() > 0


def test_z_norm(gaussian):
    """Check the Z-norm basic properties"""
    params = NormParams()
    assert z_norm(gaussian.scale(0), params, range(-2, 2), range(0, 4)) == \
        (0.0, None)
    assert z_norm(gaussian, params, [], range(0, 4)) == (0.0, None)
    # No j >= 3 in the range
    assert z_norm(gaussian, params, [-3], range(0, 3)) == (0.0, None)
    value, index = z_norm(gaussian, params, [0], [0])
    assert index == DyadicIndex(0, 0)
    assert value == pytest.approx(
        project(gaussian, DyadicIndex(0, 0), "Q").l2_norm(), rel=1e-12
    )
    value, index = z_norm(gaussian, params, range(-2, 2), range(0, 4))
    scaled, scaled_index = z_norm(gaussian.scale(-3.0), params,
                                  range(-2, 2), range(0, 4))
    assert scaled == pytest.approx(3 * value, rel=1e-12)
    assert scaled_index == index
    with_rotations, _ = z_norm(gaussian, params, range(-2, 2), range(0, 4),
                               rotations=2)
    assert with_rotations == pytest.approx(value, rel=1e-9)


def test_energy_norm_basics(gaussian):
    """Check the energy norm vanishes, scales, and ignores rotations of
    radial fields"""
    params = NormParams(N0=2, N1=1.5, N2=1.2, N3=1)
    assert energy_norm(gaussian.scale(0), params) == 0
    value = energy_norm(gaussian, params)
    assert energy_norm(gaussian.scale(2.5), params) == \
        pytest.approx(2.5 * value, rel=1e-12)
    radius = gaussian.grid.abs_xi
    assert value == pytest.approx(
        gaussian.apply(radius ** params.delta + radius ** 2).l2_norm(),
        abs=1e-10
    )


def test_energy_norm_quadrature(grid):
    """Check the energy norm of an enveloped plane wave against direct
    quadrature of its transform"""
    params = NormParams(N0=2, N1=1.5, N2=1.2, N3=1)
    center = 5.0
    field = SpectralField.from_function(
        grid,
        lambda x1, x2: np.exp(1j * center * x1 - (x1 ** 2 + x2 ** 2) / 2),
        real=False
    )
    xi1 = np.linspace(center - 12, center + 12, 1201)
    xi2 = np.linspace(-12, 12, 1201)
    mesh1, mesh2 = np.meshgrid(xi1, xi2, indexing="ij")
    radius = np.hypot(mesh1, mesh2)
    transform = 2 * np.pi * np.exp(-((mesh1 - center) ** 2 + mesh2 ** 2) / 2)

    def norm(weight):
        integrand = (weight * transform) ** 2
        return math.sqrt(trapezoid(trapezoid(integrand, xi2), xi1)) / \
            (2 * np.pi)

    expected = norm(radius ** params.delta + radius ** 2) + \
        norm(radius ** params.delta)
    assert energy_norm(field, params, n_rot=0) == \
        pytest.approx(expected, rel=1e-8)


def test_main(tmp_path, gaussian):
    """Check the command-line tool writes norms with their manifest"""
    field_path = str(tmp_path / "gaussian.fld")
    gaussian.save(field_path)
    out_path = str(tmp_path / "norms.json")
    assert_executes("epion.paley.norms_main", "--in", field_path,
                    "--k-range", "-2", "1", "-o", out_path)
    with open(out_path, "r", encoding="utf8") as file:
        result = json.load(file)
    assert result["z_norm"] > 0
    assert result["energy_norm"] > 0
    assert result["l2_norm"] == pytest.approx(math.sqrt(math.pi), rel=1e-9)
    assert result["manifest"]["subcommand"] == "norms"
    assert not (tmp_path / ("norms.json" + MANIFEST_SUFFIX)).exists()
    (tmp_path / "bad.fld").write_bytes(b"EPIONFLD")
    assert_executes("epion.paley.norms_main", "--in",
                    str(tmp_path / "bad.fld"), "-o", out_path,
                    stderr_re=".*ConfigError.*", status=2)
