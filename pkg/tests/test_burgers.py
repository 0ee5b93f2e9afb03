import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from semiflow.burgers import (
    BurgersConfig,
    burgers_cocycle_defect,
    burgers_linearized,
    burgers_solve,
    cole_hopf_reference,
    wp_trajectory,
)
from semiflow.integrators import StepRejected
from semiflow.noise import sample_path
from semiflow.spectral import SpectralBasis


@pytest.fixture
def hbasis():
    return SpectralBasis(16, 0.5, 64)


def test_config_validation(hbasis):
    with pytest.raises(ValueError):
        BurgersConfig(lambdas=(1.0, -0.1))
    amp = BurgersConfig().amplitudes(hbasis)
    assert amp.shape == (16,) and amp[4:].sum() == 0 and amp[1] == 0.25


def test_wp_needs_enough_noise_rows(hbasis):
    p = sample_path(2, 1e-2, 10, 0)
    with pytest.raises(ValueError, match="noise rows"):
        wp_trajectory(hbasis, p, BurgersConfig().amplitudes(hbasis))


def test_wp_variance():
    b = SpectralBasis(4, 0.5, 16)
    lam = np.array([1.0, 0.25, 0.0, 0.0])
    t, n = 0.2, 2000
    finals = np.array([wp_trajectory(b, sample_path(2, 1e-2, 20, s), lam)[-1] for s in range(n)])
    mu = b.eigenvalues[:2]
    var = lam[:2] * (1 - np.exp(-2 * mu * t)) / (2 * mu)
    assert np.allclose(finals[:, :2].var(axis=0), var, rtol=0.1)
    assert np.all(finals[:, 2:] == 0)


def test_zero_stays_zero_without_noise(hbasis):
    p = sample_path(4, 1e-2, 30, 1)
    tr = burgers_solve(hbasis, p, np.zeros(16), config=BurgersConfig(lambdas=()))
    assert np.all(tr.extra["u"] == 0)


def test_u_is_v_plus_wp(hbasis):
    p = sample_path(4, 1e-3, 100, 2)
    psi = np.ones(16) / np.arange(1, 17) ** 2
    tr = burgers_solve(hbasis, p, psi)
    assert np.array_equal(tr.extra["u"], tr.fields + tr.extra["wp"])
    assert np.array_equal(tr.extra["u"][0], psi)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 16, elements=st.floats(-3, 3)))
def test_nonlinearity_is_energy_neutral(c):
    # <(u^2)_xi, u> = 0 on the Dirichlet interval, exactly for the projection
    b = SpectralBasis(16, 0.5, 64)
    n = -0.5 * b.conservative_derivative(b.synthesize_array(c) ** 2)
    assert abs(n @ c) <= 1e-10 * (1 + np.sum(c**2)) ** 1.5


@pytest.mark.parametrize("t1,t2", [(100, 150), (37, 250)])
def test_discrete_cocycle(hbasis, t1, t2):
    p = sample_path(4, 1e-3, t1 + t2, 5)
    psi = np.ones(16) / np.arange(1, 17)
    assert burgers_cocycle_defect(hbasis, p, psi, t1, t2) < 1e-12
    assert burgers_cocycle_defect(hbasis, p, psi, t1, 0) == 0.0


def test_cole_hopf_agreement():
    b = SpectralBasis(32, 0.5, 128)

    def psi(xi):
        return 2.0 * np.sin(np.pi * xi)

    p = sample_path(1, 1e-3, 500, 0)
    tr = burgers_solve(b, p, b.analyze_array(psi(b.grid)), config=BurgersConfig(lambdas=()))
    u = b.synthesize_array(tr.extra["u"][-1])
    ref = cole_hopf_reference(psi, 0.5, 0.5, b.grid)
    assert np.max(np.abs(u - ref)) < 1e-4 * np.max(np.abs(ref)) + 1e-6


def test_cole_hopf_reference_heat_limit():
    # small data: Burgers is close to the heat equation
    eps = 1e-4
    xi = np.linspace(0.1, 0.9, 9)
    ref = cole_hopf_reference(lambda x: eps * np.sin(np.pi * x), 0.5, 0.3, xi)
    heat = eps * np.exp(-0.5 * np.pi**2 * 0.3) * np.sin(np.pi * xi)
    assert np.allclose(ref, heat, atol=1e-3 * eps)


def test_tangent_matches_finite_differences(hbasis):
    p = sample_path(4, 1e-3, 250, 3)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(16) / np.arange(1, 17) ** 2
    g = rng.standard_normal(16) / np.arange(1, 17)
    v, G = burgers_linearized(hbasis, p, psi, g)
    hs = np.array([1e-2, 1e-3, 1e-4])
    rem = [np.linalg.norm(burgers_solve(hbasis, p, psi + h * g).final() - v.final() - h * G.final()) / h for h in hs]
    slope = np.polyfit(np.log(hs), np.log(rem), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_linearized_zero_direction(hbasis):
    p = sample_path(4, 1e-3, 50, 3)
    _, G = burgers_linearized(hbasis, p, np.ones(16), np.zeros(16))
    assert np.all(G.fields == 0)


def test_huge_data_is_rejected(hbasis):
    p = sample_path(4, 0.05, 10, seed=12)
    with pytest.raises(StepRejected, match="seed 12"):
        burgers_solve(hbasis, p, 1e4 * np.ones(16))
