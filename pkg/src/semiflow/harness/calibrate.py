"""One-off calibration of the cross-scheme tolerance constants.

``C_grid`` bounds the Euler grid error ``||Phi_euler(dt) - Phi_ref||_HS / sqrt(dt)``
and ``C_wz`` the smoothing error ``||Phi_wz - Phi_ref||_HS sqrt(n)``, where the
reference is Euler on the same path refined ``refine`` times.  Both are taken
as an upper quantile over calibration seeds, which must be disjoint from the
seeds the check later runs on; the results are then frozen in the config.
"""

from __future__ import annotations

import math

import numpy as np

from ..linear import fundamental_solve, wong_zakai_flow
from ..noise import coarsen, sample_path
from .checks import _basis, _multiplier, _steps
from .config import ExperimentConfig

__all__ = ["calibrate_cross_scheme"]


def calibrate_cross_scheme(
    cfg: ExperimentConfig, seeds: list[int], *, t: float = 0.5, refine: int = 16, quantile: float = 0.99
) -> dict[str, float]:
    basis = _basis(cfg)
    B = _multiplier(cfg, basis)
    dt = cfg.noise.dt
    n = cfg.scheme.smoothing
    j = _steps(t, dt)
    grid, wz = [], []
    for seed in seeds:
        fine = sample_path(cfg.noise.n_noise, dt / refine, j * refine, seed, cfg.noise.past_steps * refine)
        path = coarsen(fine, refine)
        ref = fundamental_solve(basis, B, fine).matrices[-1]
        eu = fundamental_solve(basis, B, path, j).matrices[j]
        w = wong_zakai_flow(basis, B, path, n, j).matrices[j]
        grid.append(np.linalg.norm(eu - ref) / math.sqrt(dt))
        wz.append(np.linalg.norm(w - ref) * math.sqrt(n))
    return {
        "c_grid": float(np.quantile(grid, quantile)),
        "c_wz": float(np.quantile(wz, quantile)),
    }
