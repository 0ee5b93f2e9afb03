"""Reaction-diffusion with linear multiplicative noise through the Q-transformation.

The field ``v = Q^{-1} u`` solves the random PDE

    dv/dt = nu Q^{-1} Delta(Q v) + Q^{-1} f(Q v),

with ``Q^{-1} Delta(Q v) = Delta v + 2 (log Q)' v' + ((log Q)'' + (log Q)'^2) v``.
The diagonal part ``nu Delta`` is integrated exactly (exponential Runge-Kutta,
ETD2RK); everything else is evaluated on the collocation grid and projected
back onto the N retained modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .noise import BrownianGridPath, QFieldSample, q_field, shift
from .integrators import StepRejected, Trajectory, etd2rk_march
from .spectral import SpectralBasis

__all__ = [
    "DissipativeNonlinearity",
    "make_dissipative",
    "ReactionTerm",
    "REFERENCE_TERMS",
    "reaction_term",
    "power_nonlinearity",
    "TransformedConstants",
    "Trajectory",
    "StepRejected",
    "tilde_f",
    "transformed_constants",
    "check_transformed_inequality",
    "rd_solve",
    "rd_linearized",
    "rd_cocycle_defect",
    "contraction_exponent",
    "v_contraction_exponent",
    "contraction_bound",
    "lipschitz_bound",
    "transformed_lambda1",
    "linf_smoothing_fit",
]

Pointwise = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class DissipativeNonlinearity:
    """``f`` with the constants of the dissipativity conditions.

    ``-c2 - c3 s^{2p} <= f(s) s <= c2 - c1 s^{2p}`` and ``f'(s) <= c4``.  c4 may be
    negative (strictly decreasing f).
    """

    f: Pointwise
    df: Pointwise
    c1: float
    c2: float
    c3: float
    c4: float
    p: int
    name: str = "custom"

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3) <= 0:
            raise ValueError("c1, c2, c3 must be positive")
        if self.p < 1:
            raise ValueError("p must be a positive integer")

    def violations(self, samples: np.ndarray) -> int:
        s = np.asarray(samples, dtype=float)
        fs = self.f(s) * s
        s2p = s ** (2 * self.p)
        bad = (fs < -self.c2 - self.c3 * s2p) | (fs > self.c2 - self.c1 * s2p) | (self.df(s) > self.c4)
        return int(np.count_nonzero(bad))


def _cubic():
    return DissipativeNonlinearity(
        lambda s: s - s**3, lambda s: 1.0 - 3.0 * s**2, 0.5, 0.5, 1.0, 1.0, 2, "cubic"
    )


def _contraction(slope: float = -1.0, wiggle: float = 0.1):
    # f(s) = slope s + wiggle sin s, slope + |wiggle| < 0
    c4 = slope + abs(wiggle)
    return DissipativeNonlinearity(
        lambda s: slope * s + wiggle * np.sin(s),
        lambda s: slope + wiggle * np.cos(s),
        -(slope + abs(wiggle)),
        0.1,
        -slope + abs(wiggle),
        c4,
        1,
        "contraction",
    )


def _negative_cube():
    return DissipativeNonlinearity(
        lambda s: -(s**3), lambda s: -3.0 * s**2, 1.0, 1.0, 1.0, 0.0, 2, "negative_cube"
    )


DISSIPATIVE = {
    "cubic": _cubic,
    "contraction": _contraction,
    "negative_cube": _negative_cube,
}


@dataclass(frozen=True, eq=False)
class ReactionTerm:
    """A reaction term without dissipativity constants (reference cases only)."""

    f: Pointwise
    df: Pointwise
    name: str = "custom"


# f = 0 and f = rate*s violate the upper bound f(s) s <= c2 - c1 s^{2p}, so they
# carry no constants; they serve as exactly solvable oracles.
REFERENCE_TERMS = {
    "zero": lambda: ReactionTerm(np.zeros_like, np.zeros_like, "zero"),
    "linear": lambda rate=1.0: ReactionTerm(lambda s: rate * s, lambda s: rate * np.ones_like(s), "linear"),
}


def make_dissipative(name: str, **params) -> DissipativeNonlinearity:
    if name in REFERENCE_TERMS:
        raise ValueError(f"reaction term {name!r} is not dissipative")
    try:
        return DISSIPATIVE[name](**params)
    except KeyError:
        raise ValueError(f"unknown reaction term {name!r}") from None


def reaction_term(name: str, **params) -> DissipativeNonlinearity | ReactionTerm:
    """Any registered reaction term, dissipative or reference."""
    if name in REFERENCE_TERMS:
        return REFERENCE_TERMS[name](**params)
    return make_dissipative(name, **params)


def power_nonlinearity(alpha: float) -> tuple[Pointwise, Pointwise]:
    """``f(u) = (1 - |u|^alpha) u`` and ``f'(u) = 1 - (alpha + 1)|u|^alpha`` (``|0|^alpha = 0``)."""
    if not 0 < alpha:
        raise ValueError("alpha must be positive")

    def f(s):
        return (1.0 - np.abs(s) ** alpha) * s

    def df(s):
        return 1.0 - (alpha + 1.0) * np.abs(s) ** alpha

    return f, df


@dataclass(frozen=True)
class TransformedConstants:
    c1: float
    c2: float
    c3: float


def tilde_f(t_index: int, xi_index: int, s, q: QFieldSample, f: Pointwise):
    """``Q^{-1} f(Q s)`` at one time/grid node."""
    qv = q.values[t_index, xi_index]
    return f(qv * np.asarray(s, dtype=float)) / qv


def transformed_constants(q: QFieldSample, D: DissipativeNonlinearity, a_index: int | None = None) -> TransformedConstants:
    """Constants of the transformed reaction term over ``t_j <= t_a`` and the grid."""
    a = q.n_times - 1 if a_index is None else a_index
    logq = q.log_values[: a + 1]
    e = 2 * D.p - 2
    return TransformedConstants(
        D.c1 * float(np.exp(e * logq.min())) if e else D.c1,
        D.c2 * float(np.exp(-2.0 * logq.min())),
        D.c3 * float(np.exp(e * logq.max())) if e else D.c3,
    )


def check_transformed_inequality(
    q: QFieldSample,
    D: DissipativeNonlinearity,
    consts: TransformedConstants,
    n_samples: int,
    rng: np.random.Generator,
    s_scale: float = 3.0,
) -> int:
    """Count violations of the transformed dissipativity bounds at random (t, xi, s)."""
    j = rng.integers(0, q.n_times, n_samples)
    ell = rng.integers(0, q.basis.n_grid, n_samples)
    s = s_scale * rng.standard_normal(n_samples)
    qv = q.values[j, ell]
    ft = D.f(qv * s) / qv
    s2p = s ** (2 * D.p)
    lower = -consts.c2 - consts.c3 * s2p
    upper = consts.c2 - consts.c1 * s2p
    slope = D.df(qv * s)
    bad = (ft * s < lower) | (ft * s > upper) | (slope > D.c4)
    return int(np.count_nonzero(bad))


class _RDOperator:
    """Explicit part of the transformed equation at grid times."""

    def __init__(self, basis: SpectralBasis, q: QFieldSample, f: Pointwise, df: Pointwise | None):
        self.basis = basis
        self.q = q
        self.f = f
        self.df = df
        nu = basis.viscosity
        self.drift1 = 2.0 * nu * q.dlog
        self.drift0 = nu * (q.d2log + q.dlog**2)

    def __call__(self, j: int, v: np.ndarray) -> np.ndarray:
        b = self.basis
        vg = b.synthesize_array(v)
        qj = self.q.values[j]
        rhs = self.drift1[j] * b.derivative_values(v) + self.drift0[j] * vg + self.f(qj * vg) / qj
        return b.analyze_array(rhs)

    def tangent(self, j: int, v: np.ndarray, g: np.ndarray) -> np.ndarray:
        b = self.basis
        gg = b.synthesize_array(g)
        qj = self.q.values[j]
        rhs = (
            self.drift1[j] * b.derivative_values(g)
            + self.drift0[j] * gg
            + self.df(qj * b.synthesize_array(v)) * gg
        )
        return b.analyze_array(rhs)


def _recover_u(basis: SpectralBasis, q: QFieldSample, v: np.ndarray) -> np.ndarray:
    n = v.shape[-2]
    return basis.analyze_array(q.values[:n] * basis.synthesize_array(v))


def rd_solve(
    basis: SpectralBasis,
    path: BrownianGridPath,
    sigma_coeffs,
    f: Pointwise,
    psi: np.ndarray,
    n_steps: int | None = None,
    *,
    q: QFieldSample | None = None,
    reject_fraction: float = 0.5,
) -> Trajectory:
    """Solve the transformed equation; ``fields`` is v and ``extra['u']`` is ``Q v``."""
    s = path.n_steps if n_steps is None else n_steps
    if q is None:
        q = q_field(path, basis, sigma_coeffs, s)
    op = _RDOperator(basis, q, f, None)
    v, _ = etd2rk_march(op, psi, s, path.dt, reject_fraction=reject_fraction, seed=path.seed)
    u = _recover_u(basis, q, v)
    prov = {"seed": path.seed, "scheme": "etd2rk", "n_modes": basis.n_modes, "n_grid": basis.n_grid, "dt": path.dt}
    return Trajectory(path.dt, v, prov, {"u": u, "energy_growth": _max_log_growth(v, path.dt)})


def _max_log_growth(v: np.ndarray, dt: float) -> float:
    nrm = np.linalg.norm(v, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.diff(np.log(np.maximum(nrm, 1e-300)), axis=-1) / dt
    return float(np.max(rate)) if rate.size else 0.0


def rd_linearized(
    basis: SpectralBasis,
    path: BrownianGridPath,
    sigma_coeffs,
    alpha: float,
    psi: np.ndarray,
    g: np.ndarray,
    n_steps: int | None = None,
    *,
    reject_fraction: float = 0.5,
) -> tuple[Trajectory, Trajectory]:
    """v and the tangent ``G_t(psi) g`` for ``f(u) = (1 - |u|^alpha) u``.

    The tangent is the exact derivative of the discrete stepping map.
    """
    if not 0 < alpha < 4:
        raise ValueError("alpha must lie in (0, 4) on a one-dimensional domain")
    f, df = power_nonlinearity(alpha)
    s = path.n_steps if n_steps is None else n_steps
    q = q_field(path, basis, sigma_coeffs, s)
    op = _RDOperator(basis, q, f, df)
    v, gt = etd2rk_march(op, psi, s, path.dt, g=g, reject_fraction=reject_fraction, seed=path.seed)
    prov = {"seed": path.seed, "scheme": "etd2rk-tangent", "alpha": alpha}
    return Trajectory(path.dt, v, prov), Trajectory(path.dt, gt, prov)


def rd_cocycle_defect(
    basis: SpectralBasis,
    path: BrownianGridPath,
    sigma_coeffs,
    f: Pointwise,
    psi: np.ndarray,
    t1_index: int,
    t2_index: int,
) -> float:
    """Relative defect of ``v(t+t1) = Q(t1)^{-1} v(t, Q(t1) v(t1), theta(t1) w)``."""
    if t2_index == 0:
        return 0.0
    full = rd_solve(basis, path, sigma_coeffs, f, psi, t1_index + t2_index)
    q1 = q_field(path, basis, sigma_coeffs, t1_index).values[t1_index]
    v1 = full.fields[..., t1_index, :]
    start = basis.analyze_array(q1 * basis.synthesize_array(v1))
    restarted = rd_solve(basis, shift(path, t1_index), sigma_coeffs, f, start, t2_index)
    z = basis.analyze_array(basis.synthesize_array(restarted.final()) / q1)
    y = full.final()
    return float(np.linalg.norm(y - z) / np.linalg.norm(y))


def contraction_bound(D: DissipativeNonlinearity, basis: SpectralBasis, q: QFieldSample) -> float:
    """``(c4 - nu lambda_1 - sigma^2) / 2`` with ``lambda_1 = pi^2``."""
    return 0.5 * (D.c4 - basis.viscosity * np.pi**2 - q.sigma_sq_inf())


def contraction_exponent(
    basis: SpectralBasis,
    path: BrownianGridPath,
    sigma_coeffs,
    f: Pointwise,
    psi1: np.ndarray,
    psi2: np.ndarray,
    a_index: int | None = None,
) -> float:
    """``(1/a) log(||u(a, psi1) - u(a, psi2)|| / ||psi1 - psi2||)``."""
    u_exp, _ = _exponents(basis, path, sigma_coeffs, f, psi1, psi2, a_index)
    return u_exp


def v_contraction_exponent(basis, path, sigma_coeffs, f, psi1, psi2, a_index=None) -> float:
    """Same as :func:`contraction_exponent` for the transformed field v."""
    _, v_exp = _exponents(basis, path, sigma_coeffs, f, psi1, psi2, a_index)
    return v_exp


def _exponents(basis, path, sigma_coeffs, f, psi1, psi2, a_index):
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    d0 = np.linalg.norm(psi1 - psi2)
    if d0 == 0:
        raise ValueError("initial data must differ")
    a = path.n_steps if a_index is None else a_index
    traj = rd_solve(basis, path, sigma_coeffs, f, np.stack([psi1, psi2]), a)
    t = a * path.dt
    du = np.linalg.norm(traj.extra["u"][0, -1] - traj.extra["u"][1, -1])
    dv = np.linalg.norm(traj.fields[0, -1] - traj.fields[1, -1])
    return float(np.log(du / d0) / t), float(np.log(dv / d0) / t)


def lipschitz_bound(D: DissipativeNonlinearity, basis: SpectralBasis, q: QFieldSample, a_index: int | None = None) -> float:
    """``sup_{t<=a} exp((c4 - nu lambda_1) t / 2) sup_xi Q(t, xi)``."""
    a = q.n_times - 1 if a_index is None else a_index
    t = np.arange(a + 1) * q.dt
    rate = 0.5 * (D.c4 - basis.viscosity * np.pi**2)
    return float(np.max(np.exp(rate * t + q.log_values[: a + 1].max(axis=1))))


def transformed_lambda1(q: QFieldSample, j: int, iterations: int = 200) -> float:
    """Smallest eigenvalue of ``-Q^{-1} Delta(Q .)`` on the truncation, by inverse power iteration."""
    b = q.basis
    eye = np.eye(b.n_modes)
    lap = -np.diag((b.wavenumbers * np.pi) ** 2)
    d1 = 2.0 * q.dlog[j]
    d0 = q.d2log[j] + q.dlog[j] ** 2
    rest = b.analyze_array(d1 * b.derivative_values(eye) + d0 * b.synthesize_array(eye)).T
    op = -(lap + rest)
    x = np.ones(b.n_modes)
    lam = 0.0
    for _ in range(iterations):
        y = np.linalg.solve(op, x)
        x = y / np.linalg.norm(y)
        lam = float(x @ op @ x)
    return lam


def linf_smoothing_fit(traj: Trajectory, basis: SpectralBasis, psi_norm: float) -> float:
    """Slope of ``log ||v(t)||_inf - log ||psi||`` against ``log t`` (diagnostic only)."""
    t = traj.times()[1:]
    vinf = np.max(np.abs(basis.synthesize_array(traj.fields[..., 1:, :])), axis=-1)
    y = np.log(vinf) - np.log(psi_norm)
    return float(np.polyfit(np.log(t), y, 1)[0])
