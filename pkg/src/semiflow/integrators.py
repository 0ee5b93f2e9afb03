"""Exponential time differencing shared by the transformed random PDEs.

Both the reaction-diffusion and the Burgers solvers write their field as
``dv/dt = -A v + N(t, v)`` with ``A`` diagonal in the sine basis.  ETD2RK
(Cox-Matthews) integrates ``A`` exactly:

    a      = e^{-A h} v + h phi1(-A h) N(t_j, v)
    v_next = a + h phi2(-A h) (N(t_{j+1}, a) - N(t_j, v)).

The tangent stepper is the exact derivative of this map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .spectral import SpectralBasis, phi_functions

__all__ = ["Trajectory", "StepRejected", "ExplicitPart", "etd2rk_march"]


class StepRejected(FloatingPointError):
    """Explicit increment exceeded the configured fraction of the state norm."""

    def __init__(self, step: int, ratio: float, seed: int | None = None):
        where = "" if seed is None else f" (seed {seed})"
        super().__init__(f"step {step} rejected: explicit increment ratio {ratio:.3g}{where}")
        self.step = step
        self.seed = seed


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-indexed spectral states with provenance.

    ``fields`` has shape (..., S+1, N).  ``extra`` holds companion series,
    e.g. ``u`` for the v-formulation or ``wp`` for Burgers.
    """

    dt: float
    fields: np.ndarray
    provenance: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.fields.shape[-2] - 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def final(self) -> np.ndarray:
        return self.fields[..., -1, :]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.fields, axis=-1)


class ExplicitPart(Protocol):
    basis: SpectralBasis

    def __call__(self, j: int, v: np.ndarray) -> np.ndarray: ...

    def tangent(self, j: int, v: np.ndarray, g: np.ndarray) -> np.ndarray: ...


def etd2rk_march(
    op: ExplicitPart,
    psi: np.ndarray,
    n_steps: int,
    dt: float,
    *,
    g: np.ndarray | None = None,
    reject_fraction: float = 0.5,
    seed: int | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """March v (and the tangent if ``g`` is given); returns arrays of shape (..., S+1, N).

    A step is rejected when ``||h phi1 N|| > reject_fraction * max(||v||, 1)``.
    """
    e, p1, p2 = phi_functions(-op.basis.eigenvalues * dt)
    hp1, hp2 = dt * p1, dt * p2
    v = np.array(psi, dtype=float)
    out = np.empty(v.shape[:-1] + (n_steps + 1, v.shape[-1]))
    out[..., 0, :] = v
    gout = None
    if g is not None:
        g = np.array(np.broadcast_to(np.asarray(g, dtype=float), np.broadcast_shapes(np.shape(g), v.shape)))
        gout = np.empty(g.shape[:-1] + (n_steps + 1, g.shape[-1]))
        gout[..., 0, :] = g
    for j in range(n_steps):
        n0 = op(j, v)
        inc = hp1 * n0
        ratio = float(np.max(np.linalg.norm(inc, axis=-1) / np.maximum(np.linalg.norm(v, axis=-1), 1.0)))
        if ratio > reject_fraction:
            raise StepRejected(j, ratio, seed)
        a = e * v + inc
        if g is not None:
            t0 = op.tangent(j, v, g)
            ga = e * g + hp1 * t0
            g = ga + hp2 * (op.tangent(j + 1, a, ga) - t0)
            gout[..., j + 1, :] = g
        v = a + hp2 * (op(j + 1, a) - n0)
        out[..., j + 1, :] = v
    return out, gout
