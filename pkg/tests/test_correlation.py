import math

import numpy as np
import pytest
from scipy.special import j0

from kronmac.correlation import (TWO_USER_SPREADS, AngularSpread, AntennaArray,
                                 Side, grid_array, jakes_correlation,
                                 scenario_two_user)


def _pair(d, wavelength=1.0):
    return AntennaArray(np.array([[0.0, 0, 0], [d, 0, 0]]), wavelength)


def _check_correlation(mat, dim):
    assert mat.shape == (dim, dim)
    assert np.max(np.abs(mat - mat.conj().T)) == 0
    assert np.max(np.abs(mat.diagonal() - 1)) <= 1e-12
    assert abs(np.trace(mat).real - dim) <= 1e-10
    w = np.linalg.eigvalsh(mat)
    assert w.min() >= -1e-10 * dim
    assert abs(np.clip(w, 0, None).sum() - dim) <= 1e-9


def test_zero_distance_entry_is_one():
    arr = AntennaArray(np.zeros((2, 3)), 1.0)
    c = jakes_correlation(arr, AngularSpread(0.3, 1.1))
    assert c.matrix[0, 1] == 1


@pytest.mark.parametrize('d', [0.1, 0.5, 1.3, 7.25])
def test_full_circle_is_bessel_j0(d):
    c = jakes_correlation(_pair(d), AngularSpread(0.0, 2 * math.pi))
    assert c.matrix[0, 1] == pytest.approx(j0(2 * math.pi * d), abs=1e-10)


def test_half_circle_oracle_by_trapezoid():
    # independent check against a fine periodic-trapezoid sum on an asymmetric arc
    d, a, b = 0.8, math.pi / 3, 4 * math.pi / 3
    t = np.linspace(a, b, 200001)
    f = np.exp(2j * math.pi * d * np.cos(t))
    oracle = np.trapezoid(f, t) / (b - a)
    c = jakes_correlation(_pair(d), AngularSpread(a, b))
    assert c.matrix[0, 1] == pytest.approx(oracle, abs=1e-9)


def test_far_antennas_decorrelate():
    c = jakes_correlation(_pair(100.0), TWO_USER_SPREADS['T1'])
    assert abs(c.matrix[0, 1]) < 0.05


def test_wraparound_spread():
    r1 = TWO_USER_SPREADS['R1']
    assert r1.length == pytest.approx(2 * math.pi / 3)
    assert r1.end == pytest.approx(4 * math.pi / 3)
    assert TWO_USER_SPREADS['R2'].length == pytest.approx(math.pi)
    # the wrapped arc equals the same arc written without wrap-around
    arr = grid_array((3, 1, 1), 0.3, 1.0)
    wrapped = jakes_correlation(arr, r1).matrix
    plain = jakes_correlation(arr, AngularSpread(2 * math.pi / 3, 4 * math.pi / 3)).matrix
    assert np.allclose(wrapped, plain, atol=1e-10)


@pytest.mark.parametrize('lo, hi', [(1.0, 1.0), (0.0, 7.0)])
def test_invalid_spread(lo, hi):
    with pytest.raises(ValueError):
        AngularSpread(lo, hi)


def test_array_validation():
    with pytest.raises(ValueError):
        AntennaArray(np.zeros((0, 3)), 1.0)
    with pytest.raises(ValueError):
        AntennaArray(np.array([[0.0, np.inf, 0.0]]), 1.0)
    with pytest.raises(ValueError):
        AntennaArray(np.zeros((1, 3)), 0.0)


def test_grid_array_construction():
    pair = grid_array((2, 1, 1), 0.5, 1.0)
    assert np.linalg.norm(pair.positions[1] - pair.positions[0]) == pytest.approx(0.5)
    cube = grid_array((2, 2, 2), 0.3, 1.0)
    assert len(cube) == 8
    dists = [np.linalg.norm(a - b) for i, a in enumerate(cube.positions)
             for b in cube.positions[i + 1:]]
    assert min(dists) == pytest.approx(0.3)
    assert len(grid_array((5, 5, 5), 0.5, 1.0)) == 125


def test_linear_array_matches_literal_distance_formula():
    # on a line, entry (a, b) is the arc average of exp(i k |x_a - x_b| cos t)
    arr = grid_array((4, 1, 1), 0.25, 1.0)
    sp = TWO_USER_SPREADS['T2']
    mat = jakes_correlation(arr, sp).matrix
    t = np.linspace(sp.theta_min, sp.end, 400001)
    for a in range(4):
        for b in range(a + 1, 4):
            d = 0.25 * (b - a)
            lit = np.trapezoid(np.exp(2j * math.pi * d * np.cos(t)), t) / sp.length
            assert mat[a, b] == pytest.approx(lit, abs=1e-9)


@pytest.mark.parametrize('dims, spacing', [((8, 1, 1), 0.1), ((6, 1, 1), 0.5),
                                           ((2, 2, 2), 0.5), ((3, 3, 3), 0.5)])
@pytest.mark.parametrize('name', sorted(TWO_USER_SPREADS))
def test_output_is_a_correlation_matrix(dims, spacing, name):
    arr = grid_array(dims, spacing, 1.0)
    _check_correlation(jakes_correlation(arr, TWO_USER_SPREADS[name]).matrix, len(arr))


def test_translation_invariance():
    arr = grid_array((2, 2, 2), 0.4, 1.0)
    moved = AntennaArray(arr.positions + np.array([3.7, -1.2, 0.9]), 1.0)
    sp = TWO_USER_SPREADS['T2']
    assert np.allclose(jakes_correlation(arr, sp).matrix,
                       jakes_correlation(moved, sp).matrix, atol=1e-12)


@pytest.mark.parametrize('spacing', [0.1, 0.25])
def test_narrower_spread_raises_largest_eigenvalue(spacing):
    # nested sectors around the array axis; not true for every family of
    # sectors (broadside sectors at half-wavelength spacing are a counterexample)
    arr = grid_array((4, 1, 1), spacing, 1.0)
    widths = np.linspace(2 * math.pi, 0.2, 24)
    top = [np.linalg.eigvalsh(jakes_correlation(
        arr, AngularSpread(-w / 2, w / 2)).matrix)[-1] for w in widths]
    assert np.all(np.diff(top) >= -1e-12)


@pytest.mark.parametrize('centre', [0.0, math.pi / 2, 2.0])
def test_vanishing_spread_is_rank_one(centre):
    arr = grid_array((4, 1, 1), 0.5, 1.0)
    w = np.linalg.eigvalsh(jakes_correlation(
        arr, AngularSpread(centre - 1e-4, centre + 1e-4)).matrix)
    assert w[-1] == pytest.approx(4.0, abs=1e-6)


def test_side_is_recorded():
    c = jakes_correlation(_pair(0.2), TWO_USER_SPREADS['R1'], Side.RECEIVE)
    assert c.side is Side.RECEIVE
    assert c.dim == 2


@pytest.mark.parametrize('n', [1, 2, 8])
def test_two_user_scenario(n):
    cfg = scenario_two_user(n, 0.1)
    assert cfg.K == 2 and cfg.N == n and cfg.n == (n, n)
    assert cfg.sigma2 == pytest.approx(0.01)
    assert cfg.budgets == (1.0, 1.0)
    for mat in cfg.R + cfg.T:
        _check_correlation(mat, n)


def test_two_user_cubic_requires_cube():
    assert scenario_two_user(8, 0.5, geometry='cubic').N == 8
    with pytest.raises(ValueError):
        scenario_two_user(9, 0.5, geometry='cubic')
