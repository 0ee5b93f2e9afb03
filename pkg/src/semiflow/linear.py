"""Fundamental flow of ``du = -A u dt + sum_k B_k u dW^k`` on the truncated basis.

Three constructions are provided and cross-checked:

* ``chaos_flow``: partial sums of the iterated-integral (chaos) expansion,
* ``fundamental_solve``: mild Euler recursion of the Ito integral equation,
* ``wong_zakai_flow``: the random ODE driven by the smoothed path ``W_n`` with
  the correction ``-1/2 sum_k B_k^2``.

Stochastic integrals are left-point sums.  Because ``T_{t_j - t_m} = T_dt^{j-m}``
the left-point convolution ``sum_{m<j} T_{t_j-t_m} X_m dW_m`` is evaluated by the
one-step recursion ``Y_{j+1} = T_dt (Y_j + X_j dW_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .noise import BrownianGridPath, shift, smooth_derivative_at, _window_steps
from .spectral import SpectralBasis

__all__ = [
    "MultiplierB",
    "FlowOperator",
    "FlowHistory",
    "multiplication_operators",
    "chaos_terms",
    "chaos_term",
    "chaos_flow",
    "chaos_history",
    "wong_zakai_frozen_oracle",
    "hs_distance",
    "fundamental_solve",
    "wong_zakai_flow",
    "step_propagators",
    "flow_history",
    "verify_linear_cocycle",
]

SCHEMES = ("chaos", "euler", "wong_zakai")


@dataclass(frozen=True, eq=False)
class MultiplierB:
    """Noise operators ``B_k`` (shape (K, N, N)) with optional affine parts ``b_k``.

    With offsets the noise term is ``sum_k (B_k u + b_k) dW^k``.
    """

    matrices: np.ndarray
    offsets: np.ndarray | None = None

    def __post_init__(self):
        m = np.array(self.matrices, dtype=float)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError("B must have shape (K, N, N)")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)
        if self.offsets is not None:
            b = np.array(self.offsets, dtype=float)
            if b.shape != m.shape[:2]:
                raise ValueError("offsets must have shape (K, N)")
            b.setflags(write=False)
            object.__setattr__(self, "offsets", b)

    @property
    def n_noise(self) -> int:
        return self.matrices.shape[0]

    @property
    def n_modes(self) -> int:
        return self.matrices.shape[1]

    @property
    def affine(self) -> bool:
        return self.offsets is not None

    def squares_sum(self) -> np.ndarray:
        """sum_k B_k^2."""
        return np.einsum("kij,kjl->il", self.matrices, self.matrices)

    def condition_b_sum(self) -> float:
        """Partial sum of ``||B_k^2||_op`` over the represented k."""
        sq = np.einsum("kij,kjl->kil", self.matrices, self.matrices)
        return float(sum(np.linalg.norm(s, 2) for s in sq))

    def hs_weighted_sum(self, basis: SpectralBasis) -> float:
        """Partial sum of ``mu_n^-1 ||B(e_n)||^2``."""
        col = np.sum(self.matrices**2, axis=(0, 1))
        return float(np.sum(col / basis.eigenvalues))

    def contract(self, dw: np.ndarray) -> np.ndarray:
        """``sum_k dW^k B_k`` for increments of shape (..., K)."""
        return np.tensordot(dw, self.matrices, axes=([-1], [0]))

    @classmethod
    def zero(cls, n_noise: int, n_modes: int) -> "MultiplierB":
        return cls(np.zeros((n_noise, n_modes, n_modes)))


def multiplication_operators(basis: SpectralBasis, sigma_values: np.ndarray) -> MultiplierB:
    """``B_k = analyze o (sigma_k .) o synthesize`` for grid values of shape (K, P)."""
    sig = np.atleast_2d(np.asarray(sigma_values, dtype=float))
    e = basis._sine  # (P, N)
    mats = np.einsum("kp,pn,pm->kmn", sig, e, basis._analysis)
    return MultiplierB(mats)


@dataclass(frozen=True, eq=False)
class FlowOperator:
    """Flow matrix at one time, optionally with an affine offset."""

    matrix: np.ndarray
    t: float
    scheme: str
    offset: np.ndarray | None = None

    def hs_norm(self) -> float:
        return float(np.sqrt(np.sum(self.matrix**2)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = np.asarray(x) @ self.matrix.T
        if self.offset is not None:
            y = y + self.offset
        return y


@dataclass(frozen=True, eq=False)
class FlowHistory:
    """Flow matrices on the time grid, ``matrices[j] = phi(t_j)`` (shape (S+1, N, N))."""

    matrices: np.ndarray
    dt: float
    scheme: str
    offsets: np.ndarray | None = None
    indicator: np.ndarray | None = None

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def at(self, j: int) -> FlowOperator:
        off = None if self.offsets is None else self.offsets[j]
        return FlowOperator(self.matrices[j], j * self.dt, self.scheme, off)

    def hs_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.matrices**2, axis=(1, 2)))


def _check_shapes(basis: SpectralBasis, B: MultiplierB, path: BrownianGridPath):
    if B.n_modes != basis.n_modes:
        raise ValueError("B and basis disagree on the number of modes")
    if B.n_noise > path.n_noise:
        raise ValueError("B has more noise operators than the path has rows")


def _bdw(B: MultiplierB, path: BrownianGridPath, n_steps: int) -> np.ndarray:
    dw = path.forward_increments()[: B.n_noise, :n_steps].T  # (S, K)
    return B.contract(dw)  # (S, N, N)


def _steps(path: BrownianGridPath, n_steps: int | None) -> int:
    n = path.n_steps if n_steps is None else n_steps
    if not 0 <= n <= path.n_steps:
        raise IndexError(f"n_steps={n} outside [0, {path.n_steps}]")
    return n


def chaos_terms(
    basis: SpectralBasis, B: MultiplierB, path: BrownianGridPath, n_max: int, n_steps: int | None = None
) -> np.ndarray:
    """All chaos terms ``Phi^n(t_j)``, ``n = 0..n_max``, ``j = 0..S`` (shape (n_max+1, S+1, N, N)).

    ``Phi^0 = T_t``; ``Phi^n(t_j) = sum_{m<j} T_{t_j-t_m} sum_k B_k Phi^{n-1}(t_m) dW^k_m``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    _check_shapes(basis, B, path)
    s = _steps(path, n_steps)
    n = basis.n_modes
    decay = basis.heat_factors(path.dt)
    bdw = _bdw(B, path, s)
    out = np.zeros((n_max + 1, s + 1, n, n))
    out[0] = np.exp(-np.outer(np.arange(s + 1) * path.dt, basis.eigenvalues))[:, :, None] * np.eye(n)
    for order in range(1, n_max + 1):
        # Y_{j+1} = T_dt (Y_j + BdW_j Phi^{order-1}_j)
        src = np.matmul(bdw, out[order - 1, :s])
        cur = out[order]
        for j in range(s):
            cur[j + 1] = decay[:, None] * (cur[j] + src[j])
    return out


def chaos_term(
    basis: SpectralBasis, B: MultiplierB, path: BrownianGridPath, n: int, t_index: int
) -> FlowOperator:
    if n < 1:
        raise ValueError("chaos order must be >= 1")
    terms = chaos_terms(basis, B, path, n, _steps(path, t_index))
    return FlowOperator(terms[n, t_index], t_index * path.dt, "chaos")


def chaos_flow(
    basis: SpectralBasis, B: MultiplierB, path: BrownianGridPath, t_index: int, n_max: int
) -> tuple[FlowOperator, float]:
    """Partial chaos sum ``T_t + sum_{n<=n_max} Phi^n(t)`` and the HS norm of the last term."""
    terms = chaos_terms(basis, B, path, n_max, _steps(path, t_index))
    total = terms[:, t_index].sum(axis=0)
    last = float(np.sqrt(np.sum(terms[n_max, t_index] ** 2))) if n_max > 0 else 0.0
    return FlowOperator(total, t_index * path.dt, "chaos"), last


def chaos_history(
    basis: SpectralBasis, B: MultiplierB, path: BrownianGridPath, n_max: int, n_steps: int | None = None
) -> FlowHistory:
    terms = chaos_terms(basis, B, path, n_max, n_steps)
    ind = np.sqrt(np.sum(terms[n_max] ** 2, axis=(1, 2))) if n_max > 0 else np.zeros(terms.shape[1])
    return FlowHistory(terms.sum(axis=0), path.dt, "chaos", indicator=ind)


def fundamental_solve(
    basis: SpectralBasis, B: MultiplierB, path: BrownianGridPath, n_steps: int | None = None
) -> FlowHistory:
    """Mild Euler recursion ``v_{j+1} = T_dt (v_j + sum_k (B_k v_j + b_k) dW^k_j)``, ``v_0 = I``."""
    _check_shapes(basis, B, path)
    s = _steps(path, n_steps)
    n = basis.n_modes
    decay = basis.heat_factors(path.dt)[:, None]
    bdw = _bdw(B, path, s)
    out = np.empty((s + 1, n, n))
    out[0] = np.eye(n)
    for j in range(s):
        out[j + 1] = decay * (out[j] + bdw[j] @ out[j])
    offsets = None
    if B.affine:
        dw = path.forward_increments()[: B.n_noise, :s].T
        bvec = dw @ B.offsets  # (S, N)
        offsets = np.zeros((s + 1, n))
        for j in range(s):
            offsets[j + 1] = decay[:, 0] * (offsets[j] + bdw[j] @ offsets[j] + bvec[j])
    return FlowHistory(out, path.dt, "euler", offsets=offsets)


def _wz_generators(B: MultiplierB, path: BrownianGridPath, n: int, j: int, fracs: np.ndarray, corr: np.ndarray):
    wdot = smooth_derivative_at(path, n, j, fracs)[:, : B.n_noise]  # (F, K)
    return B.contract(wdot) - 0.5 * corr[None, :, :]


def wong_zakai_flow(
    basis: SpectralBasis,
    B: MultiplierB,
    path: BrownianGridPath,
    n: int,
    n_steps: int | None = None,
    substeps: int = 4,
) -> FlowHistory:
    """Random-ODE flow ``u' = -A u + sum_k B_k u W_n'^k - 1/2 sum_k B_k^2 u``, ``u(0) = I``.

    Explicit midpoint in integrating-factor form on ``substeps`` sub-intervals
    per grid cell: ``u+ = T_h u + h T_{h/2} G(t + h/2) T_{h/2} (u + h/2 G(t) u)``.
    """
    if substeps < 4:
        raise ValueError("the midpoint sub-step must be at most dt/4")
    _check_shapes(basis, B, path)
    _window_steps(path, n)
    s = _steps(path, n_steps)
    m = basis.n_modes
    h = path.dt / substeps
    e_full = basis.heat_factors(h)[:, None]
    e_half = basis.heat_factors(h / 2)[:, None]
    corr = B.squares_sum()
    fr_left = np.arange(substeps) / substeps
    fr_mid = (np.arange(substeps) + 0.5) / substeps
    out = np.empty((s + 1, m, m))
    out[0] = np.eye(m)
    for j in range(s):
        g_left = _wz_generators(B, path, n, j, fr_left, corr)
        g_mid = _wz_generators(B, path, n, j, fr_mid, corr)
        u = out[j]
        for q in range(substeps):
            half = e_half * (u + 0.5 * h * (g_left[q] @ u))
            u = e_full * u + h * e_half * (g_mid[q] @ half)
        out[j + 1] = u
    return FlowHistory(out, path.dt, "wong_zakai")


def wong_zakai_frozen_oracle(basis: SpectralBasis, B: MultiplierB, t: float) -> np.ndarray:
    """``exp(t (-A - 1/2 sum_k B_k^2))``: the smoothed flow along the zero path."""
    gen = -np.diag(basis.eigenvalues) - 0.5 * B.squares_sum()
    return expm(t * gen)


def flow_history(
    scheme: str,
    basis: SpectralBasis,
    B: MultiplierB,
    path: BrownianGridPath,
    n_steps: int | None = None,
    *,
    n_max: int = 12,
    smoothing: int = 16,
) -> FlowHistory:
    if scheme == "euler":
        return fundamental_solve(basis, B, path, n_steps)
    if scheme == "chaos":
        return chaos_history(basis, B, path, n_max, n_steps)
    if scheme == "wong_zakai":
        return wong_zakai_flow(basis, B, path, smoothing, n_steps)
    raise ValueError(f"unknown linear scheme {scheme!r}; expected one of {SCHEMES}")


def step_propagators(
    scheme: str,
    basis: SpectralBasis,
    B: MultiplierB,
    path: BrownianGridPath,
    n_steps: int | None = None,
    *,
    n_max: int = 12,
    smoothing: int = 16,
    max_defect: float = 1e-8,
) -> np.ndarray:
    """One-step maps ``M_j`` with ``phi(t_j - t_m, theta(t_m) w) = M_{j-1} ... M_m``.

    Euler and Wong-Zakai maps are built directly from the path cell, which
    is exactly what the flow on the shifted path uses.  For the chaos flow the
    maps come from ``phi(t_{j+1}) phi(t_j)^{-1}``, accepted only if the chaos
    cocycle defect over the horizon is below ``max_defect``.
    """
    s = _steps(path, n_steps)
    if scheme == "euler":
        bdw = _bdw(B, path, s)
        decay = basis.heat_factors(path.dt)[:, None]
        return decay[None] * (np.eye(basis.n_modes)[None] + bdw)
    if scheme == "wong_zakai":
        out = np.empty((s, basis.n_modes, basis.n_modes))
        for j in range(s):
            cell = shift(path, j)
            out[j] = wong_zakai_flow(basis, B, cell, smoothing, 1).matrices[1]
        return out
    if scheme == "chaos":
        hist = chaos_history(basis, B, path, n_max, s)
        half = s // 2
        defect = verify_linear_cocycle("chaos", basis, B, path, half, s - half, n_max=n_max)
        if defect > max_defect:
            raise ValueError(
                f"chaos flow cocycle defect {defect:.3g} exceeds {max_defect:g}; "
                "use a step-structured scheme or raise n_max"
            )
        mats = hist.matrices
        return np.stack([np.linalg.solve(mats[j].T, mats[j + 1].T).T for j in range(s)])
    raise ValueError(f"unknown linear scheme {scheme!r}")


def verify_linear_cocycle(
    scheme: str,
    basis: SpectralBasis,
    B: MultiplierB,
    path: BrownianGridPath,
    t1_index: int,
    t2_index: int,
    **kwargs,
) -> float:
    """``||u(t1+t2, w) - u(t2, theta(t1) w) u(t1, w)||_HS / ||u(t1+t2, w)||_HS``.

    Affine flows compare the augmented matrices ``[[Phi, c], [0, 1]]``.
    """
    if t1_index < 0 or t2_index < 0 or t1_index + t2_index > path.n_steps:
        raise IndexError("t1 + t2 outside the stored horizon")
    if t2_index == 0:
        return 0.0
    full = flow_history(scheme, basis, B, path, t1_index + t2_index, **kwargs)
    shifted = flow_history(scheme, basis, B, shift(path, t1_index), t2_index, **kwargs)

    def aug(h: FlowHistory, j: int) -> np.ndarray:
        if h.offsets is None:
            return h.matrices[j]
        n = h.matrices.shape[1]
        a = np.eye(n + 1)
        a[:n, :n] = h.matrices[j]
        a[:n, n] = h.offsets[j]
        return a

    lhs = aug(full, t1_index + t2_index)
    rhs = aug(shifted, t2_index) @ aug(full, t1_index)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


def hs_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.sum((np.asarray(a) - np.asarray(b)) ** 2)))


def apply_linear(matrices: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Flow matrices applied to a state vector (matrix action, one per time)."""
    return np.einsum("tij,...j->...ti", np.asarray(matrices), np.asarray(x))
