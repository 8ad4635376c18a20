"""epion.elliptic module tests"""

import math
import numpy as np
import pytest
from pytest import raises
from epion import elliptic
from epion.elliptic import EllipticConfig, solve, solve_phi, residual, \
    phi_expansion_terms, SmallnessError, ConvergenceError, BlowUpError
from epion.field import Grid, SpectralField
from epion.misc import ConfigError

# A grid where cos(x1) is periodic
GRID = Grid(32, 8 * math.pi)


def cosine(amplitude, frequency=1):
    """Create a real cosine wave along x1"""
    return SpectralField.from_function(
        GRID, lambda x1, x2: amplitude * np.cos(frequency * x1)
    )


def constant(value):
    """Create a real constant field"""
    return SpectralField.from_function(
        GRID, lambda x1, x2: np.full_like(x1, value)
    )


def test_config():
    """Check configuration validation"""
    cfg = EllipticConfig()
    assert EllipticConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()
    for bad in (dict(tol=0), dict(max_iter=0), dict(scheme="multigrid"),
                dict(smallness=-1.0)):
        with raises(ConfigError):
            EllipticConfig(**bad)
    with raises(ConfigError):
        EllipticConfig.from_json(dict(tolerance=1e-3))


@pytest.mark.parametrize("scheme", elliptic.SCHEMES)
def test_zero(scheme):
    """Check zero density gives zero potential at once"""
    solution = solve(GRID.zeros(), EllipticConfig(scheme=scheme))
    assert solution.iterations == 1
    assert solution.residual == 0
    assert solution.phi.sup_norm() == 0


@pytest.mark.parametrize("scheme", elliptic.SCHEMES)
def test_constant(scheme):
    """Check constant densities give the exact logarithm"""
    cfg = EllipticConfig(tol=1e-13, scheme=scheme)
    phi = solve_phi(constant(0.1), cfg)
    assert np.max(np.abs(phi.physical - math.log(1.1))) < 1e-12
    assert residual(phi, constant(0.1)) < 1e-12


def test_second_order():
    """Check the potential of a small cosine against its expansion"""
    epsilon = 1e-2
    phi = solve_phi(cosine(epsilon), EllipticConfig(tol=1e-13))
    x1 = GRID.x[0]
    expected = epsilon / 2 * np.cos(x1) - \
        epsilon ** 2 / 16 * (1 + np.cos(2 * x1) / 5)
    assert np.max(np.abs(phi.physical - expected)) < 1e-6
    assert np.max(np.abs(phi.physical - epsilon / 2 * np.cos(x1))) > 5e-6


def test_contraction():
    """Check the fixed-point iteration contracts for admissible data"""
    solution = solve(cosine(0.4), EllipticConfig(tol=1e-11))
    assert solution.contraction is not None
    assert 0 < solution.contraction < 1
    assert solution.residual <= 1e-11
    assert residual(solution.phi, cosine(0.4)) == \
        pytest.approx(solution.residual, rel=1e-6)


def test_schemes_agree():
    """Check Newton and fixed-point solutions agree to the tolerance"""
    tol = 1e-10
    n_tilde = cosine(0.3) + cosine(0.1, 3)
    fixed = solve(n_tilde, EllipticConfig(tol=tol))
    newton = solve(n_tilde, EllipticConfig(tol=tol, scheme="newton"))
    assert (fixed.phi - newton.phi).l2_norm() <= 10 * tol
    assert newton.iterations < fixed.iterations
    assert newton.contraction is None


def test_linear_bound():
    """Check the potential is bounded by the density uniformly in size"""
    ratios = [
        solve_phi(cosine(amplitude)).l2_norm() / cosine(amplitude).l2_norm()
        for amplitude in (0.2, 0.1, 0.05)
    ]
    assert ratios[0] == pytest.approx(ratios[2], rel=0.05)
    assert ratios[2] == pytest.approx(0.5, rel=0.05)


def test_guards():
    """Check smallness, convergence and overflow guards"""
    with raises(SmallnessError):
        solve(cosine(0.6))
    with raises(ConvergenceError):
        solve(cosine(0.4), EllipticConfig(max_iter=2))
    with raises(BlowUpError):
        solve(constant(800.0), EllipticConfig(smallness=1000.0))


def test_expansion_terms():
    """Check the expansion remainders"""
    for order in (2, 3, 4):
        assert phi_expansion_terms(GRID.zeros(), order).sup_norm() == 0
    phi = cosine(0.1) + cosine(0.05, 2)
    halved = phi.scale(0.5)
    ratio = phi_expansion_terms(halved, 2).l2_norm() / \
        phi_expansion_terms(phi, 2).l2_norm()
    assert ratio == pytest.approx(0.25, rel=0.05)
    difference = phi_expansion_terms(phi, 2) - phi_expansion_terms(phi, 3)
    square = phi.map(lambda values: values ** 2 / 2). \
        apply(-elliptic.resolvent(GRID))
    assert (difference - square).sup_norm() < 1e-12


def test_exp_remainder():
    """Check pointwise exponential remainders"""
    values = np.array([-0.5, 0.0, 0.5])
    assert np.allclose(elliptic.exp_remainder(values, 1), np.expm1(values))
    assert np.allclose(elliptic.exp_remainder(values, 3),
                       np.exp(values) - 1 - values - values ** 2 / 2,
                       atol=1e-15)
