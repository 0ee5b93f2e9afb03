import numpy as np
import pytest

from semiflow.linear import MultiplierB, fundamental_solve, multiplication_operators
from semiflow.noise import sample_path, sigma_grid
from semiflow.semilinear import (
    Nonlinearity,
    PicardDivergence,
    cocycle_defect,
    compactness_probe,
    frechet_flow,
    jacobian,
    make_nonlinearity,
    mild_residual,
    picard_solve,
    second_derivative_flow,
)
from semiflow.spectral import SpectralBasis

from conftest import SIGMA


@pytest.fixture
def problem():
    b = SpectralBasis(8, 0.2, 32)
    B = multiplication_operators(b, sigma_grid(b, SIGMA))
    p = sample_path(2, 1e-3, 400, 31)
    x = np.random.default_rng(0).standard_normal(8) / np.arange(1, 9)
    return b, B, p, x


def test_registry():
    assert make_nonlinearity("sin").check_growth(np.linspace(-50, 50, 1001))
    lin = make_nonlinearity("linear", rate=-2.0)
    assert lin.lipschitz == 2.0
    with pytest.raises(ValueError):
        make_nonlinearity("tanh")


def test_zero_nonlinearity_is_linear_flow(problem):
    b, B, p, x = problem
    sol = picard_solve(b, B, make_nonlinearity("zero"), x, p)
    flow = fundamental_solve(b, B, p).matrices
    assert np.allclose(sol.states, flow @ x, atol=1e-14)
    assert sol.iterations <= 2


def test_linear_reaction_without_noise(problem):
    b, _, p, x = problem
    B0 = MultiplierB.zero(1, 8)
    sol = picard_solve(b, B0, make_nonlinearity("linear", rate=1.5), x, p, tol=1e-14)
    exact = np.exp((1.5 - b.eigenvalues) * 0.4) * x
    assert np.allclose(sol.final(), exact, atol=1e-5)


def test_cocycle_exact_to_tolerance(problem):
    b, B, p, x = problem
    d = cocycle_defect(b, B, make_nonlinearity("sin"), x, p, 150, 250, tol=1e-15)
    assert d < 1e-12
    assert cocycle_defect(b, B, make_nonlinearity("sin"), x, p, 150, 0) == 0.0


def test_frechet_matches_finite_differences(problem):
    b, B, p, x = problem
    nl = make_nonlinearity("sin")
    y = np.random.default_rng(1).standard_normal(8)
    sol = picard_solve(b, B, nl, x, p, tol=1e-15)
    d = frechet_flow(sol, nl, y)[-1]
    rem = []
    for h in (1e-2, 1e-3, 1e-4):
        uh = picard_solve(b, B, nl, x + h * y, p, propagators=sol.propagators, tol=1e-15).final()
        rem.append(np.linalg.norm(uh - sol.final() - h * d) / h)
    slope = np.polyfit(np.log([1e-2, 1e-3, 1e-4]), np.log(rem), 1)[0]
    assert 0.9 < slope < 1.1


def test_frechet_of_linear_problem_is_the_flow(problem):
    b, B, p, x = problem
    nl = make_nonlinearity("linear", rate=0.7)
    sol = picard_solve(b, B, nl, x, p, tol=1e-15)
    y = np.eye(8)[2]
    d = frechet_flow(sol, nl, y)
    ref = picard_solve(b, B, nl, y, p, propagators=sol.propagators, tol=1e-15).states
    assert np.allclose(d, ref, atol=1e-12)


def test_jacobian_columns(problem):
    b, B, p, x = problem
    nl = make_nonlinearity("sin")
    sol = picard_solve(b, B, nl, x, p, tol=1e-15)
    J = jacobian(sol, nl)
    y = np.arange(1.0, 9.0)
    assert np.allclose(J @ y, frechet_flow(sol, nl, y)[-1], atol=1e-11)
    sv, tail = compactness_probe(J, 4)
    assert sv.shape == (4,) and np.all(np.diff(sv) <= 0) and tail >= 0
    with pytest.raises(ValueError):
        compactness_probe(J, 0)


def test_second_derivative_symmetric_and_fd(problem):
    b, B, p, x = problem
    nl = make_nonlinearity("sin")
    sol = picard_solve(b, B, nl, x, p, 200, tol=1e-15)
    rng = np.random.default_rng(4)
    y, z = rng.standard_normal(8), rng.standard_normal(8)
    dyz = second_derivative_flow(sol, nl, y, z)[-1]
    dzy = second_derivative_flow(sol, nl, z, y)[-1]
    assert np.allclose(dyz, dzy, atol=1e-12)
    h = 1e-5
    sol_h = picard_solve(b, B, nl, x + h * z, p, 200, propagators=sol.propagators, tol=1e-15)
    fd = (frechet_flow(sol_h, nl, y)[-1] - frechet_flow(sol, nl, y)[-1]) / h
    assert np.allclose(dyz, fd, atol=1e-4 * (1 + np.abs(dyz).max()))


def test_picard_divergence(problem):
    b, B, p, x = problem
    with pytest.raises(PicardDivergence):
        picard_solve(b, B, make_nonlinearity("sin"), x, p, max_iter=1, tol=1e-15)


def test_missing_derivatives(problem):
    b, B, p, x = problem
    nl = Nonlinearity(np.sin)
    sol = picard_solve(b, B, nl, x, p, 10)
    with pytest.raises(ValueError):
        frechet_flow(sol, nl, x)
    with pytest.raises(ValueError):
        second_derivative_flow(sol, nl, x, x)


def test_mild_residual_shrinks_with_dt():
    b = SpectralBasis(8, 0.2, 32)
    B = multiplication_operators(b, sigma_grid(b, SIGMA))
    nl = make_nonlinearity("sin")
    x = np.ones(8) / np.arange(1, 9)
    fine = sample_path(2, 2.5e-4, 1600, 5)
    res = []
    from semiflow.noise import coarsen

    for f in (4, 2, 1):
        p = coarsen(fine, f)
        res.append(mild_residual(picard_solve(b, B, nl, x, p, tol=1e-14), B, nl, p))
    assert res[0] > res[1] > res[2]


def test_batched_initial_data(problem):
    b, B, p, x = problem
    nl = make_nonlinearity("sin")
    xs = np.stack([x, 2 * x])
    batch = picard_solve(b, B, nl, xs, p, 100, tol=1e-15).final()
    single = picard_solve(b, B, nl, 2 * x, p, 100, tol=1e-15).final()
    assert np.allclose(batch[1], single, atol=1e-13)
