import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.fft import dst

from semiflow.spectral import (
    SpectralBasis,
    SpectralField,
    analyze,
    nemytskii_apply,
    phi_functions,
    semigroup_apply,
    sobolev_norm,
    synthesize,
)


def naive_synthesis(coeffs, xi):
    n = np.arange(1, len(coeffs) + 1)
    return np.array([np.sum(coeffs * np.sqrt(2) * np.sin(n * np.pi * x)) for x in xi])


def test_grid_default_and_validation():
    b = SpectralBasis(8)
    assert b.n_grid == 17
    assert np.allclose(b.grid, np.arange(1, 18) / 18)
    with pytest.raises(ValueError):
        SpectralBasis(8, n_grid=16)
    with pytest.raises(ValueError):
        SpectralBasis(0)
    with pytest.raises(ValueError):
        SpectralBasis(4, viscosity=0.0)


def test_eigenvalues(basis):
    assert basis.eigenvalues[0] == pytest.approx(np.pi**2)
    assert np.allclose(basis.eigenvalues, (np.arange(1, 17) * np.pi) ** 2)
    assert np.allclose(SpectralBasis(4, 0.5).eigenvalues, 0.5 * (np.arange(1, 5) * np.pi) ** 2)


def test_synthesis_matches_naive_sum(basis, rng):
    c = rng.standard_normal(16)
    assert np.allclose(basis.synthesize_array(c), naive_synthesis(c, basis.grid), atol=1e-12)


def test_analysis_matches_scipy_dst(basis, rng):
    vals = rng.standard_normal(basis.n_grid)
    # DST-I: y_k = 2 sum_j x_j sin(pi (j+1)(k+1) / (P+1))
    ref = dst(vals, type=1)[: basis.n_modes] / (2 * (basis.n_grid + 1)) * np.sqrt(2)
    assert np.allclose(basis.analyze_array(vals), ref, atol=1e-13)


def test_round_trip_and_batches(basis, rng):
    c = rng.standard_normal((3, 5, 16))
    back = basis.analyze_array(basis.synthesize_array(c))
    assert back.shape == c.shape
    assert np.allclose(back, c, atol=1e-13)


def test_single_mode_values(basis):
    vals = basis.mode(3).values()
    assert np.allclose(vals, np.sqrt(2) * np.sin(3 * np.pi * basis.grid))


def test_shape_errors(basis):
    with pytest.raises(ValueError, match="grid length"):
        basis.analyze_array(np.zeros(10))
    with pytest.raises(ValueError, match="coefficient length"):
        basis.synthesize_array(np.zeros(10))
    with pytest.raises(ValueError):
        SpectralField(basis, np.zeros(3))


def test_derivatives(basis, rng):
    c = rng.standard_normal(16)
    n = np.arange(1, 17) * np.pi
    xi = basis.grid
    d1 = np.array([np.sum(c * np.sqrt(2) * n * np.cos(n * x)) for x in xi])
    d2 = np.array([np.sum(-c * np.sqrt(2) * n**2 * np.sin(n * x)) for x in xi])
    assert np.allclose(basis.derivative_values(c), d1, atol=1e-10)
    assert np.allclose(basis.second_derivative_values(c), d2, atol=1e-8)


def test_conservative_derivative_of_square():
    b = SpectralBasis(8)
    e1 = b.mode(1).values()
    # d/dxi (2 sin^2(pi xi)) = 2 pi sin(2 pi xi) = sqrt(2) pi e_2
    expect = np.zeros(8)
    expect[1] = np.sqrt(2) * np.pi
    assert np.allclose(b.conservative_derivative(e1 * e1), expect, atol=1e-12)


def test_conservative_derivative_exact_for_products(rng):
    b = SpectralBasis(8)
    a, c = rng.standard_normal(8), rng.standard_normal(8)
    prod = b.synthesize_array(a) * b.synthesize_array(c)
    fine = SpectralBasis(64, n_grid=1023)
    ref_vals = fine.synthesize_array(np.pad(a, (0, 56))) * fine.synthesize_array(np.pad(c, (0, 56)))
    ref = fine.conservative_derivative(ref_vals)[:8]
    assert np.allclose(b.conservative_derivative(prod), ref, atol=1e-10)


def test_heat_semigroup(basis):
    f = basis.mode(2)
    g = semigroup_apply(f, 0.1)
    assert g.coeffs[1] == pytest.approx(np.exp(-4 * np.pi**2 * 0.1))
    assert semigroup_apply(f, 0.0).coeffs[1] == 1.0
    with pytest.raises(ValueError):
        basis.heat_factors(-1.0)


def test_field_arithmetic(basis):
    a, b = basis.mode(1), basis.mode(2)
    s = 2.0 * (a + b) - b
    assert np.allclose(s.coeffs[:2], [2.0, 1.0])
    assert (-a).coeffs[0] == -1.0
    assert s.l2_norm() == pytest.approx(np.sqrt(5))
    with pytest.raises(ValueError):
        s.coeffs[0] = 3.0


def test_nemytskii(basis):
    f = basis.mode(1)
    assert np.allclose(nemytskii_apply(lambda s: 2 * s, f).coeffs, 2 * f.coeffs)
    # constant map: projection of 1 onto the sine modes
    one = nemytskii_apply(lambda s: 1.0, f)
    n = np.arange(1, 17)
    exact = np.where(n % 2 == 1, 2 * np.sqrt(2) / (n * np.pi), 0.0)
    assert np.allclose(one.coeffs, exact, atol=2e-2)
    with np.errstate(invalid="ignore"), pytest.raises(FloatingPointError, match="grid point"):
        nemytskii_apply(lambda s: np.log(s), f * -1.0)


def test_analyze_synthesize_wrappers(basis):
    vals = np.sin(np.pi * basis.grid) * np.sqrt(2)
    assert np.allclose(synthesize(analyze(basis, vals)), vals)


def test_sobolev_norm(basis):
    f = basis.mode(2)
    assert sobolev_norm(f, 0) == pytest.approx(1.0)
    assert sobolev_norm(f, 1) == pytest.approx(np.sqrt(1 + 4 * np.pi**2))
    with pytest.raises(ValueError):
        sobolev_norm(f, -1)


def test_trace_partial_sum():
    b = SpectralBasis(100)
    # sum n^-2 / pi^2 -> 1/6
    assert b.trace_partial_sum(1.0) == pytest.approx(1 / 6, rel=1e-2)


def test_phi_functions_small_and_large():
    z = np.array([-50.0, -1.0, -1e-4, 0.0, 1e-5])
    e, p1, p2 = phi_functions(z)
    big = z[:2]
    assert np.allclose(p1[:2], np.expm1(big) / big)
    assert np.allclose(p2[:2], (np.expm1(big) - big) / big**2)
    assert p1[3] == 1.0 and p2[3] == 0.5
    assert p1[2] == pytest.approx(np.expm1(-1e-4) / -1e-4, rel=1e-12)
    assert np.allclose(e, np.exp(z))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 12, elements=st.floats(-10, 10)))
def test_round_trip_property(c):
    b = SpectralBasis(12, n_grid=40)
    assert np.allclose(b.analyze_array(b.synthesize_array(c)), c, atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 10, elements=st.floats(-5, 5)), st.floats(0.0, 2.0))
def test_semigroup_contracts(c, t):
    b = SpectralBasis(10)
    f = SpectralField(b, c)
    assert semigroup_apply(f, t).l2_norm() <= np.exp(-np.pi**2 * t) * f.l2_norm() + 1e-12
