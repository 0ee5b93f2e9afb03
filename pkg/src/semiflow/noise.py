"""Brownian grid paths, the Wiener shift, smoothed paths, the Q field and OU modes.

Increments are rounded to the dyadic lattice ``2**-40``.  Every partial sum of
such numbers (below ``2**13`` in magnitude) is exact in binary64, so
``W(t + t1) - W(t1)`` computed any way round equals the shifted path bit for
bit.  The rounding perturbs each increment by less than ``1e-12``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .spectral import SpectralBasis

__all__ = [
    "BrownianGridPath",
    "sample_path",
    "shift",
    "coarsen",
    "smooth_approx",
    "smooth_derivative_at",
    "QFieldSample",
    "QOverflowError",
    "q_evaluate",
    "q_field",
    "sigma_grid",
    "OUConvolutionState",
    "ou_step",
    "export_path",
]

_QUANTUM = 2.0**-40


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.round(x / _QUANTUM) * _QUANTUM


@dataclass(frozen=True, eq=False)
class BrownianGridPath:
    """K scalar Brownian paths on a two-sided uniform grid.

    ``increments[k, i]`` is the increment over grid cell ``i``; cell ``origin``
    starts at time 0, so cells ``0..origin-1`` hold the presampled past.
    """

    dt: float
    increments: np.ndarray
    origin: int
    seed: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim != 2:
            raise ValueError("increments must have shape (K, cells)")
        if not 0 <= self.origin <= inc.shape[1]:
            raise ValueError("origin outside stored cells")
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    @property
    def n_noise(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1] - self.origin

    @property
    def past_steps(self) -> int:
        return self.origin

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @cached_property
    def raw_cumulative(self) -> np.ndarray:
        """Partial sums from the left end of the stored past (shape (K, cells+1))."""
        out = np.zeros((self.n_noise, self.increments.shape[1] + 1))
        np.cumsum(self.increments, axis=1, out=out[:, 1:])
        out.setflags(write=False)
        return out

    @cached_property
    def _raw_area(self) -> np.ndarray:
        # integral of the piecewise-linear raw path from the left end to each node
        w = self.raw_cumulative
        out = np.zeros_like(w)
        np.cumsum(0.5 * self.dt * (w[:, 1:] + w[:, :-1]), axis=1, out=out[:, 1:])
        out.setflags(write=False)
        return out

    def forward_increments(self) -> np.ndarray:
        """Increments ``Delta W_j``, ``j = 0..S-1`` (shape (K, S))."""
        return self.increments[:, self.origin:]

    def values(self) -> np.ndarray:
        """W(t_j) for ``j = 0..S`` (shape (K, S+1)); W(0) = 0."""
        w = self.raw_cumulative
        return w[:, self.origin:] - w[:, self.origin : self.origin + 1]

    def value(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.n_steps:
            raise IndexError(f"time index {j} outside [0, {self.n_steps}]")
        w = self.raw_cumulative
        return w[:, self.origin + j] - w[:, self.origin]

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def sample_path(
    n_noise: int, dt: float, n_steps: int, seed: int, past_steps: int = 0
) -> BrownianGridPath:
    """Sample K independent Brownian paths with ``N(0, dt)`` increments.

    Each row, and the past segment of each row, is drawn from its own child
    stream of ``SeedSequence(seed)``, so the forward increments do not depend
    on ``past_steps``.
    """
    if n_noise < 1 or n_steps < 1 or not dt > 0 or past_steps < 0:
        raise ValueError("need n_noise >= 1, n_steps >= 1, dt > 0, past_steps >= 0")
    children = np.random.SeedSequence(seed).spawn(2 * n_noise)
    sd = np.sqrt(dt)
    rows = []
    for k in range(n_noise):
        fwd = np.random.default_rng(children[k]).standard_normal(n_steps)
        past = np.random.default_rng(children[n_noise + k]).standard_normal(past_steps)
        rows.append(np.concatenate([past[::-1], fwd]))
    inc = _quantize(sd * np.array(rows))
    return BrownianGridPath(dt, inc, past_steps, seed)


def shift(path: BrownianGridPath, m: int) -> BrownianGridPath:
    """Wiener shift by ``m`` grid steps: a view with the origin moved forward."""
    if not 0 <= m <= path.n_steps:
        raise ValueError(f"shift {m} outside stored horizon [0, {path.n_steps}]")
    out = BrownianGridPath(path.dt, path.increments, path.origin + m, path.seed)
    return out


def coarsen(path: BrownianGridPath, factor: int) -> BrownianGridPath:
    """Same Brownian path observed on a grid ``factor`` times coarser."""
    if factor < 1:
        raise ValueError("factor must be positive")
    if factor == 1:
        return path
    if path.origin % factor or path.n_steps % factor:
        raise ValueError("past and forward lengths must be divisible by factor")
    k, cells = path.increments.shape
    inc = path.increments.reshape(k, cells // factor, factor).sum(axis=2)
    return BrownianGridPath(path.dt * factor, inc, path.origin // factor, path.seed)


def _window_steps(path: BrownianGridPath, n: int) -> int:
    r = 1.0 / (n * path.dt)
    r_int = int(round(r))
    if r_int < 1 or abs(r - r_int) > 1e-9 * max(1.0, r):
        raise ValueError(f"1/n = {1.0 / n:g} is not an integer multiple of dt = {path.dt:g}")
    if r_int > path.past_steps:
        raise ValueError(
            f"smoothing window needs {r_int} past steps, path has {path.past_steps}"
        )
    return r_int


def _raw_position(path: BrownianGridPath, t: float) -> tuple[int, float]:
    s = t / path.dt
    i = int(np.floor(s + 1e-12))
    frac = s - i
    if abs(frac) < 1e-12:
        frac = 0.0
    return path.origin + i, frac


def _raw_value(path: BrownianGridPath, idx: int, frac: float) -> np.ndarray:
    w = path.raw_cumulative
    if frac == 0.0:
        return w[:, idx]
    return w[:, idx] + frac * path.increments[:, idx]


def _raw_integral(path: BrownianGridPath, idx: int, frac: float) -> np.ndarray:
    a = path._raw_area[:, idx]
    if frac == 0.0:
        return a
    w = path.raw_cumulative
    return a + path.dt * (frac * w[:, idx] + 0.5 * frac**2 * path.increments[:, idx])


def smooth_approx(path: BrownianGridPath, n: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Moving-average path ``W_n(t)`` and its derivative.

    ``W_n(t) = n int_{t-1/n}^t W - n int_{-1/n}^0 W`` with W linear between
    nodes; ``W_n'(t) = n (W(t) - W(t - 1/n))``.  Both depend on the raw
    stored path only through differences, which keeps them shift covariant.
    """
    r = _window_steps(path, n)
    if not 0 <= t <= path.horizon + 1e-12:
        raise ValueError(f"t={t} outside [0, {path.horizon}]")
    idx, frac = _raw_position(path, t)
    value = n * (
        _raw_integral(path, idx, frac)
        - _raw_integral(path, idx - r, frac)
        - path._raw_area[:, path.origin]
        + path._raw_area[:, path.origin - r]
    )
    deriv = n * (_raw_value(path, idx, frac) - _raw_value(path, idx - r, frac))
    return value, deriv


def smooth_derivative_at(path: BrownianGridPath, n: int, j: int, fracs: np.ndarray) -> np.ndarray:
    """``W_n'`` at times ``(j + frac) dt`` for an array of fractions in [0, 1].

    Returns shape (len(fracs), K).  Linear interpolation inside cell ``j``.
    """
    r = _window_steps(path, n)
    i = path.origin + j
    w = path.raw_cumulative
    lo = w[:, i] - w[:, i - r]
    hi = w[:, i + 1] - w[:, i + 1 - r]
    fr = np.asarray(fracs, dtype=float)[:, None]
    return n * ((1.0 - fr) * lo[None, :] + fr * hi[None, :])


# -- multiplicative field Q ---------------------------------------------------


class QOverflowError(FloatingPointError):
    """Q left the representable range at a given (time index, grid index)."""

    def __init__(self, j: int, ell: int, log_value: float):
        super().__init__(f"Q overflow at time index {j}, grid index {ell} (log Q = {log_value:.4g})")
        self.j = j
        self.ell = ell


def sigma_grid(basis: SpectralBasis, sigmas: np.ndarray) -> np.ndarray:
    """Sine-coefficient sigmas (shape (K, N_sigma)) sampled on the basis grid."""
    sig = np.atleast_2d(np.asarray(sigmas, dtype=float))
    n_sig = sig.shape[1]
    k = np.arange(1, n_sig + 1)
    e = np.sqrt(2.0) * np.sin(np.pi * np.outer(basis.grid, k))
    return sig @ e.T


_LOG_MAX = np.log(np.finfo(float).max) - 1.0


def _log_q(w: np.ndarray, t: np.ndarray, sig: np.ndarray) -> np.ndarray:
    # w: (T, K), t: (T,), sig: (K, P) -> (T, P)
    return w @ sig - 0.5 * t[:, None] * np.sum(sig**2, axis=0)[None, :]


def _checked_exp(logq: np.ndarray, j0: int = 0) -> np.ndarray:
    bad = np.abs(logq) > _LOG_MAX
    if bad.any():
        jj, ll = np.argwhere(bad)[0]
        raise QOverflowError(int(jj) + j0, int(ll), float(logq[jj, ll]))
    return np.exp(logq)


def q_evaluate(path: BrownianGridPath, sigma_values: np.ndarray, j: int) -> np.ndarray:
    """``Q(t_j, xi_l) = exp(sum_i sigma_i W_i(t_j) - t_j/2 sum_i sigma_i^2)`` on the grid.

    ``sigma_values`` has shape (K, P); rows beyond the path's noise count are
    not allowed.
    """
    sig = np.atleast_2d(np.asarray(sigma_values, dtype=float))
    if sig.shape[0] > path.n_noise:
        raise ValueError("more sigma fields than noise rows")
    w = path.value(j)[: sig.shape[0]]
    logq = _log_q(w[None, :], np.array([j * path.dt]), sig)
    return _checked_exp(logq, j)[0]


@dataclass(frozen=True, eq=False)
class QFieldSample:
    """Q and the derivatives of log Q on the time x collocation grid.

    ``values[j, l] = Q(t_j, xi_l)``.  ``dlog`` and ``d2log`` hold the first and
    second xi-derivatives of log Q, from which ``Q^{-1} Delta(Q v)`` follows.
    """

    basis: SpectralBasis
    dt: float
    sigma_coeffs: np.ndarray
    log_values: np.ndarray
    dlog: np.ndarray
    d2log: np.ndarray

    @cached_property
    def values(self) -> np.ndarray:
        return _checked_exp(self.log_values)

    @cached_property
    def inverse(self) -> np.ndarray:
        return _checked_exp(-self.log_values)

    @property
    def n_times(self) -> int:
        return self.log_values.shape[0]

    @cached_property
    def sigma_values(self) -> np.ndarray:
        return sigma_grid(self.basis, self.sigma_coeffs)

    def sigma_sq_inf(self) -> float:
        """inf over the closed interval of ``sum_i sigma_i^2``.

        Sine-series sigmas vanish at the boundary, so this is 0; the interior
        grid minimum is available from :meth:`sigma_sq_grid_min`.
        """
        return 0.0

    def sigma_sq_grid_min(self) -> float:
        return float(np.sum(self.sigma_values**2, axis=0).min())


def q_field(
    path: BrownianGridPath, basis: SpectralBasis, sigma_coeffs, n_steps: int | None = None
) -> QFieldSample:
    """Tabulate Q for ``t_j``, ``j = 0..n_steps`` from sine-coefficient sigmas.

    ``sigma_coeffs`` has shape (K', N_sigma) with K' <= K; an empty array
    gives Q = 1.
    """
    n_steps = path.n_steps if n_steps is None else n_steps
    sig_c = np.asarray(sigma_coeffs, dtype=float)
    if sig_c.size == 0:
        shape = (n_steps + 1, basis.n_grid)
        zero = np.zeros(shape)
        return QFieldSample(basis, path.dt, np.zeros((0, 1)), zero, zero, zero.copy())
    sig_c = np.atleast_2d(sig_c)
    kq = sig_c.shape[0]
    if kq > path.n_noise:
        raise ValueError("more sigma fields than noise rows")
    k = np.arange(1, sig_c.shape[1] + 1) * np.pi
    xi = basis.grid
    s = np.sqrt(2.0) * np.sin(np.outer(xi, k))
    c = np.sqrt(2.0) * np.cos(np.outer(xi, k))
    sig = sig_c @ s.T
    dsig = (sig_c * k) @ c.T
    d2sig = -(sig_c * k**2) @ s.T
    w = path.values()[:kq, : n_steps + 1].T  # (T, K)
    t = np.arange(n_steps + 1) * path.dt
    logq = _log_q(w, t, sig)
    dlog = w @ dsig - t[:, None] * np.sum(sig * dsig, axis=0)[None, :]
    d2log = w @ d2sig - t[:, None] * np.sum(dsig**2 + sig * d2sig, axis=0)[None, :]
    for arr in (logq, dlog, d2log):
        arr.setflags(write=False)
    return QFieldSample(basis, path.dt, sig_c, logq, dlog, d2log)


# -- Ornstein-Uhlenbeck modes ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class OUConvolutionState:
    """Mode coefficients ``z_k`` of ``W_p(t) = int_0^t T_{t-s} dW(s)``."""

    z: np.ndarray
    alphas: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        for name in ("z", "alphas", "lambdas"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(self.alphas <= 0):
            raise ValueError("OU rates alpha_k must be positive")
        if np.any(self.lambdas < 0):
            raise ValueError("noise amplitudes lambda_k must be non-negative")

    def condition_partial_sum(self) -> float:
        """sum_k lambda_k / alpha_k over the represented modes."""
        return float(np.sum(self.lambdas / self.alphas))


def ou_transition(alphas: np.ndarray, lambdas: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    if np.any(np.asarray(alphas) <= 0):
        raise ValueError("OU rates alpha_k must be positive")
    decay = np.exp(-alphas * dt)
    scale = np.sqrt(lambdas * (-np.expm1(-2.0 * alphas * dt)) / (2.0 * alphas))
    return decay, scale


def ou_step(state: OUConvolutionState, dt: float, increments: np.ndarray) -> OUConvolutionState:
    """Exact OU transition driven by the standardized increments ``dW / sqrt(dt)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    decay, scale = ou_transition(state.alphas, state.lambdas, dt)
    eta = np.asarray(increments, dtype=float) / np.sqrt(dt)
    return OUConvolutionState(decay * state.z + scale * eta, state.alphas, state.lambdas)


def export_path(path: BrownianGridPath, dest: str | Path, fmt: str = "csv") -> Path:
    """Write ``(t, k, W^k(t))`` rows for the forward grid (k is 1-based).

    ``fmt="bin"`` writes the same triples as little-endian float64.
    """
    dest = Path(dest)
    w = path.values()
    t = path.times()
    k_idx, j_idx = np.meshgrid(np.arange(path.n_noise), np.arange(path.n_steps + 1), indexing="ij")
    rows = np.stack([t[j_idx].ravel(), (k_idx + 1).ravel().astype(float), w.ravel()], axis=1)
    if fmt == "csv":
        with dest.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "k", "W"])
            for tt, kk, ww in rows:
                writer.writerow([f"{tt:.17g}", int(kk), f"{ww:.17g}"])
    elif fmt == "bin":
        rows.astype("<f8").tofile(dest)
    else:
        raise ValueError(f"unknown path export format {fmt!r}")
    return dest


def sample_paths(
    n_noise: int, dt: float, n_steps: int, seeds: Sequence[int], past_steps: int = 0
) -> list[BrownianGridPath]:
    return [sample_path(n_noise, dt, n_steps, s, past_steps) for s in seeds]
