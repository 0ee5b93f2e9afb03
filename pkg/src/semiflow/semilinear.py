"""Semilinear cocycle ``U(t, x, w)`` through the random integral equation

    U(t) = phi(t, w) x + int_0^t phi(t - s, theta(s) w) F(U(s)) ds,

solved by successive approximations with the trapezoidal rule in ``s``.

``phi(t_j - t_m, theta(t_m) w)`` is the product ``M_{j-1} ... M_m`` of one-step
maps of the linear flow (see :func:`semiflow.linear.step_propagators`), so the
time integral obeys the recursion ``I_{j+1} = M_j (I_j + c_j dt F_j)`` with
``c_0 = 1/2`` and ``c_j = 1`` otherwise; the endpoint adds ``dt/2 F_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linear import MultiplierB, step_propagators
from .noise import BrownianGridPath, shift
from .spectral import SpectralBasis

__all__ = [
    "Nonlinearity",
    "make_nonlinearity",
    "SemiflowSolution",
    "PicardDivergence",
    "picard_solve",
    "frechet_flow",
    "jacobian",
    "second_derivative_flow",
    "cocycle_defect",
    "compactness_probe",
    "mild_residual",
]

Pointwise = Callable[[np.ndarray], np.ndarray]


class PicardDivergence(RuntimeError):
    """Successive approximations did not reach the tolerance."""


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Pointwise ``f`` with derivatives and the growth constants of the hypotheses.

    ``|f(s)| <= growth (1 + |s|)`` and ``|f(s) - f(r)| <= lipschitz |s - r|``.
    """

    f: Pointwise
    df: Pointwise | None = None
    d2f: Pointwise | None = None
    growth: float = np.inf
    lipschitz: float = np.inf
    name: str = "custom"

    def check_growth(self, samples: np.ndarray) -> bool:
        s = np.asarray(samples, dtype=float)
        return bool(np.all(np.abs(self.f(s)) <= self.growth * (1.0 + np.abs(s)) + 1e-12))


def _zero(s):
    return np.zeros_like(s)


NONLINEARITIES: dict[str, Callable[..., Nonlinearity]] = {
    "zero": lambda: Nonlinearity(_zero, _zero, _zero, 0.0, 0.0, "zero"),
    "sin": lambda: Nonlinearity(np.sin, np.cos, lambda s: -np.sin(s), 1.0, 1.0, "sin"),
    "linear": lambda rate=1.0: Nonlinearity(
        lambda s: rate * s, lambda s: rate * np.ones_like(s), _zero, abs(rate), abs(rate), "linear"
    ),
}


def make_nonlinearity(name: str, **params) -> Nonlinearity:
    try:
        return NONLINEARITIES[name](**params)
    except KeyError:
        raise ValueError(f"unknown semilinear nonlinearity {name!r}") from None


@dataclass(frozen=True, eq=False)
class SemiflowSolution:
    """Trajectory ``U(t_j)`` (shape (..., S+1, N)) with Picard diagnostics."""

    basis: SpectralBasis
    dt: float
    states: np.ndarray
    propagators: np.ndarray = field(repr=False)
    iterations: int = 0
    increment: float = 0.0

    @property
    def n_steps(self) -> int:
        return self.states.shape[-2] - 1

    def final(self) -> np.ndarray:
        return self.states[..., -1, :]


def _nemytskii(basis: SpectralBasis, f: Pointwise, coeffs: np.ndarray) -> np.ndarray:
    vals = f(basis.synthesize_array(coeffs))
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite value in the nonlinearity")
    return basis.analyze_array(vals)


def _integral_sweep(props: np.ndarray, x: np.ndarray, forcing: np.ndarray, dt: float) -> np.ndarray:
    """``phi(t_j) x + trapezoid of phi(t_j - s, theta(s)) forcing(s)`` for all j.

    ``forcing`` has shape (..., S+1, N); returns the same shape.
    """
    s = props.shape[0]
    out = np.empty_like(forcing)
    out[..., 0, :] = x
    v = x + 0.5 * dt * forcing[..., 0, :]
    for j in range(s):
        v = v @ props[j].T
        out[..., j + 1, :] = v + 0.5 * dt * forcing[..., j + 1, :]
        v = v + dt * forcing[..., j + 1, :]
    return out


def _picard(sweep, initial: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int, float]:
    cur = initial
    inc = np.inf
    for it in range(1, max_iter + 1):
        nxt = sweep(cur)
        inc = float(np.max(np.sqrt(np.sum((nxt - cur) ** 2, axis=-1))))
        cur = nxt
        if inc < tol:
            return cur, it, inc
    raise PicardDivergence(
        f"Picard increment {inc:.3g} above tolerance {tol:.3g} after {max_iter} iterations"
    )


def picard_solve(
    basis: SpectralBasis,
    B: MultiplierB,
    nonlinearity: Nonlinearity,
    x: np.ndarray,
    path: BrownianGridPath,
    n_steps: int | None = None,
    *,
    scheme: str = "euler",
    tol: float | None = None,
    max_iter: int = 200,
    propagators: np.ndarray | None = None,
    **scheme_kw,
) -> SemiflowSolution:
    """Fixed point of the discretized random integral equation.

    ``x`` may carry leading batch axes.  The default tolerance is
    ``1e-10 (1 + ||x||)`` on the sup-over-grid increment.
    """
    x = np.asarray(x, dtype=float)
    if propagators is None:
        propagators = step_propagators(scheme, basis, B, path, n_steps, **scheme_kw)
    s = propagators.shape[0]
    if tol is None:
        tol = 1e-10 * (1.0 + float(np.max(np.linalg.norm(x, axis=-1))))
    dt = path.dt
    zero = np.zeros(x.shape[:-1] + (s + 1, basis.n_modes))
    initial = _integral_sweep(propagators, x, zero, dt)

    def sweep(u):
        return _integral_sweep(propagators, x, _nemytskii(basis, nonlinearity.f, u), dt)

    states, it, inc = _picard(sweep, initial, tol, max_iter)
    return SemiflowSolution(basis, dt, states, propagators, it, inc)


def frechet_flow(
    solution: SemiflowSolution,
    nonlinearity: Nonlinearity,
    y: np.ndarray,
    *,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> np.ndarray:
    """Directional derivative ``DU(t_j, x) y`` for all j (shape (..., S+1, N)).

    Solves the linearized integral equation with the same quadrature, i.e. the
    exact derivative of the discrete map ``x -> U``.
    """
    if nonlinearity.df is None:
        raise ValueError("nonlinearity has no derivative")
    basis = solution.basis
    u = solution.states
    y = np.asarray(y, dtype=float)
    dfu = nonlinearity.df(basis.synthesize_array(u))
    # broadcast the base trajectory against extra direction axes
    extra = y.ndim - 1 - (u.ndim - 2)
    dfu = dfu.reshape(dfu.shape[:-2] + (1,) * extra + dfu.shape[-2:]) if extra > 0 else dfu
    props = solution.propagators
    zero = np.zeros(np.broadcast_shapes(y.shape[:-1], dfu.shape[:-2]) + (props.shape[0] + 1, basis.n_modes))
    initial = _integral_sweep(props, y, zero, solution.dt)

    def sweep(g):
        return _integral_sweep(props, y, basis.analyze_array(dfu * basis.synthesize_array(g)), solution.dt)

    out, _, _ = _picard(sweep, initial, tol * (1.0 + float(np.max(np.abs(y)))), max_iter)
    return out


def jacobian(solution: SemiflowSolution, nonlinearity: Nonlinearity, t_index: int | None = None) -> np.ndarray:
    """``DU(t, x)`` as an N x N matrix (single trajectory)."""
    n = solution.basis.n_modes
    d = frechet_flow(solution, nonlinearity, np.eye(n))  # (N dirs, S+1, N)
    j = solution.n_steps if t_index is None else t_index
    return d[:, j, :].T


def second_derivative_flow(
    solution: SemiflowSolution,
    nonlinearity: Nonlinearity,
    y: np.ndarray,
    z: np.ndarray,
    *,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> np.ndarray:
    """``D^2 U(t_j, x)[y, z]`` for all j from the differentiated linear equation."""
    if nonlinearity.d2f is None:
        raise ValueError("nonlinearity has no second derivative")
    basis = solution.basis
    dy = frechet_flow(solution, nonlinearity, y, tol=tol)
    dz = frechet_flow(solution, nonlinearity, z, tol=tol)
    grid_u = basis.synthesize_array(solution.states)
    dfu = nonlinearity.df(grid_u)
    src = basis.analyze_array(nonlinearity.d2f(grid_u) * basis.synthesize_array(dy) * basis.synthesize_array(dz))
    props = solution.propagators
    zero_x = np.zeros(src.shape[:-2] + (basis.n_modes,))

    def sweep(g):
        return _integral_sweep(props, zero_x, basis.analyze_array(dfu * basis.synthesize_array(g)) + src, solution.dt)

    out, _, _ = _picard(sweep, sweep(np.zeros_like(src)), tol, max_iter)
    return out


def cocycle_defect(
    basis: SpectralBasis,
    B: MultiplierB,
    nonlinearity: Nonlinearity,
    x: np.ndarray,
    path: BrownianGridPath,
    t1_index: int,
    t2_index: int,
    **solve_kw,
) -> float:
    """Relative L2 gap between ``U(t1+t2, x, w)`` and ``U(t2, U(t1, x, w), theta(t1) w)``."""
    if t2_index == 0:
        return 0.0
    full = picard_solve(basis, B, nonlinearity, x, path, t1_index + t2_index, **solve_kw)
    mid = full.states[..., t1_index, :]
    restarted = picard_solve(basis, B, nonlinearity, mid, shift(path, t1_index), t2_index, **solve_kw)
    lhs = full.states[..., t1_index + t2_index, :]
    rhs = restarted.states[..., t2_index, :]
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


def compactness_probe(jacobian_matrix: np.ndarray, m: int) -> tuple[np.ndarray, float]:
    """Top ``m`` singular values and the Hilbert-Schmidt tail ``sum_{n>m} s_n^2``."""
    jac = np.asarray(jacobian_matrix, dtype=float)
    if not 0 < m <= jac.shape[0]:
        raise ValueError("m must be in 1..N")
    sv = np.linalg.svd(jac, compute_uv=False)
    return sv[:m], float(np.sum(sv[m:] ** 2))


def mild_residual(
    solution: SemiflowSolution,
    B: MultiplierB,
    nonlinearity: Nonlinearity,
    path: BrownianGridPath,
) -> float:
    """Sup-over-grid gap between U and the left-point mild Ito equation it should solve.

    The reference is ``S_{j+1} = T_dt (S_j + dt F(U_j) + sum_k B_k U_j dW^k_j)``,
    ``S_0 = x``, evaluated along the computed U.
    """
    basis = solution.basis
    u = solution.states
    s = solution.n_steps
    decay = basis.heat_factors(path.dt)
    f = _nemytskii(basis, nonlinearity.f, u)
    dw = path.forward_increments()[: B.n_noise, :s].T
    bdw = B.contract(dw)
    ref = u[..., 0, :].copy()
    worst = 0.0
    for j in range(s):
        ref = decay * (ref + path.dt * f[..., j, :] + u[..., j, :] @ bdw[j].T)
        worst = max(worst, float(np.max(np.linalg.norm(u[..., j + 1, :] - ref, axis=-1))))
    return worst
