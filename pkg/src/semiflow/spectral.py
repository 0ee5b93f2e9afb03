"""Truncated Dirichlet eigenbasis on [0, 1].

Fields are stored as coefficients ``a_n`` against ``e_n(xi) = sqrt(2) sin(n pi xi)``,
``n = 1..N``.  Pointwise work happens on the interior collocation grid
``xi_j = j / (P + 1)``, ``j = 1..P``, where the sine pair below is exact
(discrete orthogonality of the DST-I).

All low-level routines accept arrays with arbitrary leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "SpectralBasis",
    "SpectralField",
    "semigroup_apply",
    "analyze",
    "synthesize",
    "nemytskii_apply",
    "sobolev_norm",
    "phi_functions",
]


@dataclass(frozen=True)
class SpectralBasis:
    """Dirichlet-Laplacian eigendata truncated to ``n_modes`` modes.

    Parameters
    ----------
    n_modes : int
        Number of retained modes N.
    viscosity : float
        nu > 0; the generator is ``A e_n = nu n^2 pi^2 e_n``.
    n_grid : int, optional
        Collocation size P.  Defaults to ``2 N + 1``, the smallest size for
        which quadratic products are captured without aliasing.
    """

    n_modes: int
    viscosity: float = 1.0
    n_grid: int | None = None

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")
        if not self.viscosity > 0:
            raise ValueError("viscosity must be positive")
        if self.n_grid is None:
            object.__setattr__(self, "n_grid", 2 * self.n_modes + 1)
        if self.n_grid < 2 * self.n_modes + 1:
            raise ValueError(
                f"n_grid={self.n_grid} < 2*n_modes+1={2 * self.n_modes + 1}"
            )

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1, dtype=float)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """mu_n = nu n^2 pi^2."""
        return self.viscosity * (self.wavenumbers * np.pi) ** 2

    @cached_property
    def grid(self) -> np.ndarray:
        return np.arange(1, self.n_grid + 1) / (self.n_grid + 1)

    @cached_property
    def _sine(self) -> np.ndarray:
        # (P, N): e_n(xi_j)
        m = np.sqrt(2.0) * np.sin(np.pi * np.outer(self.grid, self.wavenumbers))
        m.setflags(write=False)
        return m

    @cached_property
    def _analysis(self) -> np.ndarray:
        m = self._sine / (self.n_grid + 1)
        m.setflags(write=False)
        return m

    @cached_property
    def _cosine_d1(self) -> np.ndarray:
        # (P, N): e_n'(xi_j)
        k = self.wavenumbers * np.pi
        m = np.sqrt(2.0) * k * np.cos(np.pi * np.outer(self.grid, self.wavenumbers))
        m.setflags(write=False)
        return m

    @cached_property
    def _sine_d2(self) -> np.ndarray:
        m = -self._sine * (self.wavenumbers * np.pi) ** 2
        m.setflags(write=False)
        return m

    @cached_property
    def _cosine_analysis(self) -> np.ndarray:
        # DCT-I on the closed grid j = 0..P+1, as a dense matrix acting on the
        # interior values (boundary values are zero for our products).
        p1 = self.n_grid + 1
        j = np.arange(1, self.n_grid + 1)
        m_idx = np.arange(1, self.n_modes + 1)
        c = 2.0 * np.cos(np.pi * np.outer(j, m_idx) / p1) / p1
        # sine coefficient of -d/dxi of sum c_m cos(m pi xi) in the e_m basis
        d = -c * (m_idx * np.pi) / np.sqrt(2.0)
        d.setflags(write=False)
        return d

    # -- array-level transforms -------------------------------------------
    def analyze_array(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.n_grid:
            raise ValueError(
                f"grid length {values.shape[-1]} does not match basis ({self.n_grid})"
            )
        return values @ self._analysis

    def synthesize_array(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.n_modes:
            raise ValueError(
                f"coefficient length {coeffs.shape[-1]} does not match basis ({self.n_modes})"
            )
        return coeffs @ self._sine.T

    def derivative_values(self, coeffs: np.ndarray) -> np.ndarray:
        """d/dxi of the sine series, sampled on the grid (a cosine series)."""
        return np.asarray(coeffs, dtype=float) @ self._cosine_d1.T

    def second_derivative_values(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self._sine_d2.T

    def conservative_derivative(self, values: np.ndarray) -> np.ndarray:
        """Coefficients of ``P_N d/dxi g`` for grid values of ``g`` with g(0)=g(1)=0.

        ``g`` is read as a cosine polynomial through a DCT-I on the closed grid,
        differentiated term by term, and truncated to N sine modes.  Exact
        whenever ``g`` is a product of two N-mode sine series (degree <= 2N <= P).
        """
        return np.asarray(values, dtype=float) @ self._cosine_analysis

    def heat_factors(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("semigroup time must be non-negative")
        return np.exp(-self.eigenvalues * t)

    def mode(self, n: int) -> "SpectralField":
        c = np.zeros(self.n_modes)
        c[n - 1] = 1.0
        return SpectralField(self, c)

    def zero(self) -> "SpectralField":
        return SpectralField(self, np.zeros(self.n_modes))

    def trace_partial_sum(self, alpha: float) -> float:
        """Finite-truncation value of sum_n mu_n^(-alpha)."""
        return float(np.sum(self.eigenvalues ** (-alpha)))

    def with_modes(self, n_modes: int, n_grid: int | None = None) -> "SpectralBasis":
        return SpectralBasis(n_modes, self.viscosity, n_grid)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of a function in a :class:`SpectralBasis`."""

    basis: SpectralBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.basis.n_modes,):
            raise ValueError(
                f"expected {self.basis.n_modes} coefficients, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def values(self) -> np.ndarray:
        return self.basis.synthesize_array(self.coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.basis, -self.coeffs)


def semigroup_apply(field: SpectralField, t: float) -> SpectralField:
    """Heat semigroup: coefficient n is multiplied by ``exp(-mu_n t)``."""
    return SpectralField(field.basis, field.coeffs * field.basis.heat_factors(t))


def analyze(basis: SpectralBasis, grid_values) -> SpectralField:
    return SpectralField(basis, basis.analyze_array(grid_values))


def synthesize(field: SpectralField) -> np.ndarray:
    return field.values()


def nemytskii_apply(f: Callable[[np.ndarray], np.ndarray], field: SpectralField) -> SpectralField:
    """Pointwise composition ``xi -> f(u(xi))`` followed by truncation to N modes."""
    vals = np.asarray(f(field.values()), dtype=float)
    if vals.shape == ():
        vals = np.full(field.basis.n_grid, float(vals))
    bad = ~np.isfinite(vals)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise FloatingPointError(
            f"nonlinearity returned a non-finite value at grid point {j} (xi={field.basis.grid[j]:.6g})"
        )
    return analyze(field.basis, vals)


def sobolev_norm(field: SpectralField, k: int) -> float:
    """``(sum_n (1 + mu_n/nu)^k a_n^2)^(1/2)``; k = 0 is the L2 norm."""
    if k < 0:
        raise ValueError("Sobolev order must be non-negative")
    w = (1.0 + (field.basis.wavenumbers * np.pi) ** 2) ** k
    return float(np.sqrt(np.sum(w * field.coeffs**2)))


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``exp(z)``, ``phi1(z) = (e^z - 1)/z`` and ``phi2(z) = (e^z - 1 - z)/z^2``.

    Small |z| uses the Taylor series to avoid cancellation.
    """
    z = np.asarray(z, dtype=float)
    ez = np.exp(z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, np.expm1(zs) / zs)
    phi2 = np.where(
        small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120, (np.expm1(zs) - zs) / zs**2
    )
    return ez, phi1, phi2
