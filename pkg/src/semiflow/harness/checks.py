"""Registered property checks.

A check maps ``(config, seed, params)`` to a flat dict of scalar columns and
aggregates the per-seed rows into summary statistics and a verdict.  Every
per-seed computation is a pure function of its inputs, so seeds can run in
any order or process.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..burgers import BurgersConfig, burgers_cocycle_defect, burgers_linearized, burgers_solve, cole_hopf_reference
from ..linear import (
    MultiplierB,
    chaos_flow,
    chaos_terms,
    fundamental_solve,
    multiplication_operators,
    verify_linear_cocycle,
    wong_zakai_flow,
)
from ..noise import coarsen, q_field, sample_path, shift, sigma_grid
from ..reaction_diffusion import (
    check_transformed_inequality,
    contraction_bound,
    lipschitz_bound,
    make_dissipative,
    power_nonlinearity,
    reaction_term,
    rd_cocycle_defect,
    rd_linearized,
    rd_solve,
    transformed_constants,
)
from ..semilinear import cocycle_defect, frechet_flow, make_nonlinearity, picard_solve
from ..spectral import SpectralBasis

__all__ = ["Check", "Aggregate", "CHECKS", "register", "fit_order"]

Row = dict[str, float]


@dataclass(frozen=True)
class Aggregate:
    stats: dict[str, float]
    passed: bool
    tolerance: str


@dataclass(frozen=True)
class Check:
    name: str
    description: str
    per_seed: Callable[[Any, int, dict], Row]
    aggregate: Callable[[list[Row], dict], Aggregate]
    equations: tuple[str, ...] = ()
    once: bool = False
    defaults: dict = field(default_factory=dict)


CHECKS: dict[str, Check] = {}


def register(name, description, equations=(), once=False, **defaults):
    def deco(fns):
        per_seed, aggregate = fns
        CHECKS[name] = Check(name, description, per_seed, aggregate, tuple(equations), once, defaults)
        return fns

    return deco


# -- helpers ------------------------------------------------------------------


def check_rng(seed: int, name: str) -> np.random.Generator:
    """Auxiliary stream for a (seed, check) pair, independent of the Brownian rows."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


def fit_order(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def _basis(cfg, scale: int = 1) -> SpectralBasis:
    b = cfg.basis
    grid = None if b.n_grid is None else b.n_grid * scale
    return SpectralBasis(b.n_modes * scale, b.viscosity, grid)


def _steps(t: float, dt: float) -> int:
    s = t / dt
    r = int(round(s))
    if r < 1 or abs(s - r) > 1e-9 * max(1.0, s):
        raise ValueError(f"time {t:g} is not a positive multiple of dt={dt:g}")
    return r


def _factor(coarse: float, fine: float) -> int:
    return _steps(coarse, fine)


def _path(cfg, seed: int, dt: float | None = None, horizon: float | None = None, past_steps: int | None = None):
    dt = cfg.noise.dt if dt is None else dt
    horizon = cfg.noise.horizon if horizon is None else horizon
    past = cfg.noise.past_steps if past_steps is None else past_steps
    return sample_path(cfg.noise.n_noise, dt, _steps(horizon, dt), seed, past)


def _level_paths(cfg, seed: int, dt_levels, past_coarse: int = 0):
    """The same Brownian path observed at each dt level (coarsest first)."""
    fine = min(dt_levels)
    factors = [_factor(d, fine) for d in dt_levels]
    fmax = max(factors)
    base = _path(cfg, seed, fine, past_steps=past_coarse * fmax)
    return [coarsen(base, f) for f in factors]


def _multiplier(cfg, basis: SpectralBasis) -> MultiplierB:
    sig = cfg.noise.sigma_array()
    if not cfg.noise.sigma:
        return MultiplierB.zero(1, basis.n_modes)
    return multiplication_operators(basis, sigma_grid(basis, sig))


def _initial(rng: np.random.Generator, n_modes: int, radius: float = 1.0, count: int | None = None) -> np.ndarray:
    """Random data with ``1/n`` coefficient decay, scaled to L2 norm ``radius``."""
    shape = (n_modes,) if count is None else (count, n_modes)
    x = rng.standard_normal(shape) / np.arange(1, n_modes + 1)
    return radius * x / np.linalg.norm(x, axis=-1, keepdims=True)


def _pad(x: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(x.shape[:-1] + (n,))
    out[..., : x.shape[-1]] = x
    return out


def _semilinear_kw(cfg, params) -> dict:
    return {
        "scheme": cfg.scheme.linear,
        "tol": params.get("picard_tol", cfg.scheme.picard_tol),
        "n_max": cfg.scheme.n_max,
        "smoothing": cfg.scheme.smoothing,
    }


def _burgers_config(cfg, zero_noise: bool = False) -> BurgersConfig:
    lam = () if zero_noise else tuple(cfg.noise.lambdas)
    return BurgersConfig(lambdas=lam, reject_fraction=cfg.scheme.reject_fraction)


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def _column(rows: list[Row], key: str) -> np.ndarray:
    return np.array([r[key] for r in rows], dtype=float)


def _all_pass(rows: list[Row]) -> bool:
    return all(bool(r.get("pass", 1.0)) for r in rows)


# -- 1. scalar strong error ---------------------------------------------------


def _scalar_seed(cfg, seed, p):
    dts = p["dt_levels"]
    r = p["window_steps"]
    sigma = p["sigma"]
    basis = SpectralBasis(1, p["viscosity"], 3)
    B = MultiplierB(np.array([[[sigma]]]))
    paths = _level_paths(cfg, seed, dts, past_coarse=r)
    row: Row = {}
    for i, cp in enumerate(paths):
        s = cp.n_steps
        t = s * cp.dt
        w = float(cp.value(s)[0])
        exact = math.exp(-(basis.eigenvalues[0] + 0.5 * sigma**2) * t + sigma * w)
        approx = {
            "euler": fundamental_solve(basis, B, cp).matrices[-1, 0, 0],
            "chaos": chaos_flow(basis, B, cp, s, p["n_max"])[0].matrix[0, 0],
            "wong_zakai": wong_zakai_flow(basis, B, cp, _steps(1.0, r * cp.dt)).matrices[-1, 0, 0],
        }
        for name in p["schemes"]:
            row[f"{name}_sqerr_{i}"] = float((approx[name] - exact) ** 2)
    return row


def _scalar_agg(rows, p):
    stats = {}
    ok = True
    for name in p["schemes"]:
        errs = [math.sqrt(_column(rows, f"{name}_sqerr_{i}").mean()) for i in range(len(p["dt_levels"]))]
        order = fit_order(p["dt_levels"], errs)
        for i, e in enumerate(errs):
            stats[f"{name}_rms_{i}"] = e
        stats[f"{name}_order"] = order
        decreasing = all(a > b for a, b in zip(errs, errs[1:]))
        ok &= decreasing and abs(order - p["target_order"]) <= p["order_tol"]
    return Aggregate(stats, ok, f"order {p['target_order']} +- {p['order_tol']}, RMS error decreasing")


register(
    "scalar_strong_error",
    "N = K = 1 linear flow vs exp(-(mu + sigma^2/2) t + sigma W(t)): strong L2 order",
    equations=("linear",),
    dt_levels=[1e-2, 5e-3, 2.5e-3],
    schemes=["euler", "chaos", "wong_zakai"],
    sigma=0.5,
    viscosity=0.1,
    n_max=12,
    window_steps=4,
    target_order=0.5,
    order_tol=0.2,
)((_scalar_seed, _scalar_agg))


# -- 2. chaos decay -----------------------------------------------------------


def _chaos_seed(cfg, seed, p):
    basis = _basis(cfg)
    B = _multiplier(cfg, basis)
    path = _path(cfg, seed)
    terms = chaos_terms(basis, B, path, p["n_terms"])
    hs2 = np.sum(terms[1:] ** 2, axis=(2, 3)).max(axis=1)
    return {f"sup_hs2_{n}": float(v) for n, v in enumerate(hs2, start=1)}


def _chaos_agg(rows, p):
    n_terms = p["n_terms"]
    n = np.arange(1, n_terms + 1)
    cols = [_column(rows, f"sup_hs2_{k}") for k in n]
    means = np.array([c.mean() for c in cols])
    ses = np.array([_mean_se(c)[1] for c in cols])
    # model: term_n = K1 (K2 t)^(n-1) / (n-1)!
    lg = np.array([math.lgamma(k) for k in n])
    y = np.log(means)
    slope, icpt = np.polyfit(n - 1, y + lg, 1)
    pred = icpt + slope * (n - 1) - lg
    r2 = 1.0 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)
    k2t = math.exp(slope)
    ratios = means[1:] / means[:-1]
    rel = ses / means
    ratio_se = ratios * np.sqrt(rel[1:] ** 2 + rel[:-1] ** 2)
    within = bool(np.all(ratios <= k2t / n[:-1] + 3 * ratio_se))
    decreasing = bool(np.all(np.diff(means) < 0))
    ratio_mono = bool(np.all(np.diff(ratios) <= 3 * np.hypot(ratio_se[1:], ratio_se[:-1])))
    stats = {f"mean_{k}": float(m) for k, m in zip(n, means)}
    stats.update({f"se_{k}": float(s) for k, s in zip(n, ses)})
    stats.update({f"ratio_{k}": float(r) for k, r in zip(n[:-1], ratios)})
    stats.update({"K1": float(math.exp(icpt)), "K2t": k2t, "r2": float(r2)})
    ok = decreasing and ratio_mono and within and r2 >= p["min_r2"]
    return Aggregate(stats, ok, f"decreasing, ratios non-increasing, ratio_n <= K2 t / n, R^2 >= {p['min_r2']}")


register(
    "chaos_decay",
    "E sup_t ||Phi^n(t)||_HS^2 for n = 1..n_terms against factorial decay",
    equations=("linear",),
    n_terms=8,
    min_r2=0.95,
)((_chaos_seed, _chaos_agg))


# -- 3. cross-scheme ----------------------------------------------------------


def _cross_seed(cfg, seed, p):
    basis = _basis(cfg)
    B = _multiplier(cfg, basis)
    path = _path(cfg, seed)
    j = _steps(p["t"], path.dt)
    n = cfg.scheme.smoothing
    chaos, indicator = chaos_flow(basis, B, path, j, cfg.scheme.n_max)
    euler = fundamental_solve(basis, B, path, j).matrices[j]
    wz = wong_zakai_flow(basis, B, path, n, j).matrices[j]
    d = {
        "chaos_euler": float(np.linalg.norm(chaos.matrix - euler)),
        "chaos_wz": float(np.linalg.norm(chaos.matrix - wz)),
        "euler_wz": float(np.linalg.norm(euler - wz)),
    }
    tol = indicator + p["c_grid"] * math.sqrt(path.dt) + p["c_wz"] / math.sqrt(n)
    return {**d, "indicator": indicator, "tolerance": tol, "pass": float(max(d.values()) <= tol)}


def _cross_agg(rows, p):
    frac = float(_column(rows, "pass").mean())
    stats = {"pass_fraction": frac}
    for k in ("chaos_euler", "chaos_wz", "euler_wz", "tolerance"):
        stats[f"mean_{k}"] = float(_column(rows, k).mean())
    return Aggregate(stats, frac >= p["min_fraction"], f"pass fraction >= {p['min_fraction']}")


register(
    "cross_scheme",
    "pairwise HS distance of chaos, Euler and Wong-Zakai flows below the combined tolerance",
    equations=("linear",),
    t=0.5,
    c_grid=1.0,
    c_wz=1.0,
    min_fraction=0.95,
)((_cross_seed, _cross_agg))


# -- 4. cocycle defect --------------------------------------------------------


def _defect(cfg, basis, cp, rng_state, t1, t2, zero_noise=False, p=None):
    eq = cfg.equation
    x = rng_state
    if eq == "linear":
        B = MultiplierB.zero(1, basis.n_modes) if zero_noise else _multiplier(cfg, basis)
        return verify_linear_cocycle(cfg.scheme.linear, basis, B, cp, t1, t2, n_max=cfg.scheme.n_max, smoothing=cfg.scheme.smoothing)
    if eq == "semilinear":
        B = MultiplierB.zero(1, basis.n_modes) if zero_noise else _multiplier(cfg, basis)
        nl = make_nonlinearity(cfg.nonlinearity.name, **cfg.nonlinearity.params)
        return cocycle_defect(basis, B, nl, x, cp, t1, t2, **_semilinear_kw(cfg, p or {}))
    if eq == "reaction_diffusion":
        sig = np.zeros((0, 1)) if zero_noise else cfg.noise.sigma_array()
        D = reaction_term(cfg.nonlinearity.name, **cfg.nonlinearity.params)
        return rd_cocycle_defect(basis, cp, sig, D.f, x, t1, t2)
    if eq == "burgers":
        return burgers_cocycle_defect(basis, cp, x, t1, t2, _burgers_config(cfg, zero_noise))
    raise ValueError(eq)


def _cocycle_seed(cfg, seed, p):
    basis = _basis(cfg)
    past = cfg.noise.past_steps
    paths = _level_paths(cfg, seed, p["dt_levels"], past_coarse=past)
    x = _initial(check_rng(seed, "cocycle_defect"), basis.n_modes, p["radius"])
    row: Row = {}
    for i, cp in enumerate(paths):
        t1 = _steps(p["t1"], cp.dt)
        t2 = _steps(p["t2"], cp.dt)
        row[f"defect_{i}"] = _defect(cfg, basis, cp, x, t1, t2, p=p)
    fine = paths[-1]
    t1 = _steps(p["t1"], fine.dt)
    row["defect_t2_zero"] = _defect(cfg, basis, fine, x, t1, 0, p=p)
    row["defect_zero_noise"] = _defect(cfg, basis, fine, x, t1, _steps(p["t2"], fine.dt), zero_noise=True, p=p)
    return row


def _cocycle_agg(rows, p):
    levels = len(p["dt_levels"])
    means = [float(_column(rows, f"defect_{i}").mean()) for i in range(levels)]
    order = fit_order(p["dt_levels"], means)
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    at_floor = max(means) <= p["floor"]
    exact = max(float(_column(rows, "defect_t2_zero").max()), float(_column(rows, "defect_zero_noise").max()))
    stats = {f"mean_defect_{i}": m for i, m in enumerate(means)}
    stats.update({"order": order, "at_floor": float(at_floor), "max_exact_case": exact})
    ok = ((decreasing and order >= p["min_order"]) or at_floor) and exact <= p["exact_tol"]
    return Aggregate(
        stats,
        ok,
        f"order >= {p['min_order']} (or all levels <= {p['floor']:g}); exact cases <= {p['exact_tol']:g}",
    )


register(
    "cocycle_defect",
    "relative cocycle defect under dt refinement, plus the exact cases t2 = 0 and zero noise",
    dt_levels=[1e-2, 5e-3, 2.5e-3],
    t1=0.5,
    t2=0.5,
    radius=1.0,
    min_order=0.5,
    floor=1e-10,
    exact_tol=1e-12,
)((_cocycle_seed, _cocycle_agg))


# -- 5. Q-cocycle and helix ---------------------------------------------------


def _shift_indices(seed, name, s):
    rng = check_rng(seed, name)
    t1 = int(rng.integers(1, s))
    t2 = int(rng.integers(1, s - t1 + 1))
    return t1, t2


def _q_seed(cfg, seed, p):
    basis = _basis(cfg)
    path = _path(cfg, seed)
    t1, t2 = _shift_indices(seed, "q_cocycle", path.n_steps)
    sig = cfg.noise.sigma_array()
    q = q_field(path, basis, sig).values
    qs = q_field(shift(path, t1), basis, sig, t2).values
    lhs = q[t1 + t2]
    rhs = q[t1] * qs[t2]
    err = float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))
    return {"t1": float(t1), "t2": float(t2), "rel_error": err, "pass": float(err <= p["tol"])}


def _helix_seed(cfg, seed, p):
    path = _path(cfg, seed)
    t1, t2 = _shift_indices(seed, "helix", path.n_steps)
    lhs = path.value(t1 + t2) - path.value(t1)
    rhs = shift(path, t1).value(t2)
    scale = max(float(np.max(np.abs(lhs))), 1e-300)
    err = float(np.max(np.abs(lhs - rhs)) / scale)
    return {"t1": float(t1), "t2": float(t2), "rel_error": err, "pass": float(err <= p["tol"])}


def _max_error_agg(rows, p):
    worst = float(_column(rows, "rel_error").max())
    return Aggregate({"max_rel_error": worst}, _all_pass(rows), f"relative error <= {p['tol']:g}")


register(
    "q_cocycle",
    "Q(t1+t2, w) = Q(t1, w) Q(t2, theta(t1) w) on the grid",
    equations=("linear", "semilinear", "reaction_diffusion"),
    tol=1e-10,
)((_q_seed, _max_error_agg))
register("helix", "W(t1+t2) - W(t1) = W(t2, theta(t1) w)", tol=1e-10)((_helix_seed, _max_error_agg))


# -- 6. Frechet derivative ----------------------------------------------------


def _frechet_seed(cfg, seed, p):
    basis = _basis(cfg)
    path = _path(cfg, seed)
    s = _steps(p["t"], path.dt)
    rng = check_rng(seed, "frechet")
    x = _initial(rng, basis.n_modes, p["radius"])
    y = _initial(rng, basis.n_modes, 1.0)
    hs = p["h_levels"]
    eq = cfg.equation
    if eq == "semilinear":
        B = _multiplier(cfg, basis)
        nl = make_nonlinearity(cfg.nonlinearity.name, **cfg.nonlinearity.params)
        kw = _semilinear_kw(cfg, p)
        base = picard_solve(basis, B, nl, x, path, s, **kw)
        deriv = frechet_flow(base, nl, y)[-1]

        def solve(z):
            return picard_solve(basis, B, nl, z, path, s, propagators=base.propagators, tol=kw["tol"]).final()

        u0 = base.final()
    elif eq == "reaction_diffusion":
        alpha = p["alpha"]
        f, _ = power_nonlinearity(alpha)
        sig = cfg.noise.sigma_array()
        v, g = rd_linearized(basis, path, sig, alpha, x, y, s)
        deriv = g.final()
        u0 = v.final()

        def solve(z):
            return rd_solve(basis, path, sig, f, z, s).final()

    elif eq == "burgers":
        bc = _burgers_config(cfg)
        v, g = burgers_linearized(basis, path, x, y, s, bc)
        deriv = g.final()
        u0 = v.final()

        def solve(z):
            return burgers_solve(basis, path, z, s, bc).final()

    else:
        raise ValueError(eq)
    row: Row = {}
    for i, h in enumerate(hs):
        row[f"remainder_over_h_{i}"] = float(np.linalg.norm(solve(x + h * y) - u0 - h * deriv) / h)
    row["slope"] = fit_order(hs, [row[f"remainder_over_h_{i}"] for i in range(len(hs))])
    lo, hi = p["slope_range"]
    row["pass"] = float(lo <= row["slope"] <= hi)
    return row


def _frechet_agg(rows, p):
    hs = p["h_levels"]
    means = [float(_column(rows, f"remainder_over_h_{i}").mean()) for i in range(len(hs))]
    slope = fit_order(hs, means)
    lo, hi = p["slope_range"]
    stats = {f"mean_remainder_over_h_{i}": m for i, m in enumerate(means)}
    slopes = _column(rows, "slope")
    stats.update({"slope": slope, "min_seed_slope": float(slopes.min()), "max_seed_slope": float(slopes.max())})
    return Aggregate(stats, lo <= slope <= hi and _all_pass(rows), f"log-log slope of remainder/h in [{lo}, {hi}]")


register(
    "frechet",
    "directional derivative of the flow vs finite differences",
    equations=("semilinear", "reaction_diffusion", "burgers"),
    h_levels=[1e-2, 1e-3, 1e-4],
    slope_range=[0.8, 1.2],
    t=0.25,
    radius=1.0,
    alpha=2.0,
)((_frechet_seed, _frechet_agg))


# -- 7. contraction -----------------------------------------------------------


def _contraction_seed(cfg, seed, p):
    basis = _basis(cfg)
    path = _path(cfg, seed)
    sig = cfg.noise.sigma_array()
    D = make_dissipative(cfg.nonlinearity.name, **cfg.nonlinearity.params)
    rng = check_rng(seed, "contraction_exponent")
    m = p["n_pairs"]
    pts = _initial(rng, basis.n_modes, p["radius"], 2 * m + 2)
    traj = rd_solve(basis, path, sig, D.f, pts, reject_fraction=cfg.scheme.reject_fraction)
    u = traj.extra["u"][:, -1]
    v = traj.fields[:, -1]
    t = path.n_steps * path.dt
    d0 = np.linalg.norm(pts[0] - pts[1])
    exponent = float(np.log(np.linalg.norm(u[0] - u[1]) / d0) / t)
    v_exponent = float(np.log(np.linalg.norm(v[0] - v[1]) / d0) / t)
    q = q_field(path, basis, sig)
    bound = contraction_bound(D, basis, q)
    v_bound = 0.5 * (D.c4 - basis.viscosity * np.pi**2)
    c5 = lipschitz_bound(D, basis, q)
    a, b = pts[2::2], pts[3::2]
    ratios = np.linalg.norm(u[2::2] - u[3::2], axis=1) / np.linalg.norm(a - b, axis=1)
    lip = float(ratios.max())
    ok = v_exponent <= v_bound and lip <= c5
    return {
        "exponent": exponent,
        "bound": bound,
        "v_exponent": v_exponent,
        "v_bound": v_bound,
        "lipschitz_ratio": lip,
        "c5": c5,
        "pass": float(ok),
    }


def _contraction_agg(rows, p):
    mean, se = _mean_se(_column(rows, "exponent"))
    bound = float(rows[0]["bound"])
    limit = bound + p["slack"] * abs(bound)
    stats = {
        "mean_exponent": mean,
        "se_exponent": se,
        "bound": bound,
        "limit": limit,
        "max_v_exponent": float(_column(rows, "v_exponent").max()),
        "v_bound": float(rows[0]["v_bound"]),
    }
    return Aggregate(
        stats,
        mean <= limit and _all_pass(rows),
        f"mean exponent <= bound + {p['slack']}|bound|; pathwise v-level and Lipschitz bounds",
    )


register(
    "contraction_exponent",
    "Monte Carlo contraction exponent against (c4 - nu lambda_1 - sigma^2)/2",
    equations=("reaction_diffusion",),
    n_pairs=20,
    radius=1.0,
    slack=0.1,
)((_contraction_seed, _contraction_agg))


# -- 8. compactness -----------------------------------------------------------


def _image(cfg, basis, path, pts, s, p):
    eq = cfg.equation
    if eq == "semilinear":
        B = _multiplier(cfg, basis)
        nl = make_nonlinearity(cfg.nonlinearity.name, **cfg.nonlinearity.params)
        return picard_solve(basis, B, nl, pts, path, s, **_semilinear_kw(cfg, p)).final()
    if eq == "reaction_diffusion":
        D = reaction_term(cfg.nonlinearity.name, **cfg.nonlinearity.params)
        return rd_solve(basis, path, cfg.noise.sigma_array(), D.f, pts, s).extra["u"][:, -1]
    if eq == "burgers":
        return burgers_solve(basis, path, pts, s, _burgers_config(cfg)).extra["u"][:, -1]
    raise ValueError(eq)


def _compact_seed(cfg, seed, p):
    path = _path(cfg, seed)
    s = _steps(p["t"], path.dt)
    rng = check_rng(seed, "compactness")
    coarse = _basis(cfg)
    n = coarse.n_modes
    dirs = rng.standard_normal((p["n_points"], n))
    radii = rng.uniform(0.0, 1.0, p["n_points"])
    pts = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * radii[:, None]
    img_n = _image(cfg, coarse, path, pts, s, p)
    img_2n = _image(cfg, _basis(cfg, 2), path, _pad(pts, 2 * n), s, p)
    tail_n = float(np.mean(np.sum(img_n[:, n // 2 :] ** 2, axis=1)))
    tail_2n = float(np.mean(np.sum(img_2n[:, n:] ** 2, axis=1)))
    return {"tail_N": tail_n, "tail_2N": tail_2n, "pass": float(tail_2n < tail_n)}


def _compact_agg(rows, p):
    stats = {"mean_tail_N": float(_column(rows, "tail_N").mean()), "mean_tail_2N": float(_column(rows, "tail_2N").mean())}
    return Aggregate(stats, _all_pass(rows), "tail beyond N/2 decreases when N doubles, every path")


register(
    "compactness",
    "spectral tail of the image of unit-ball points at N and 2N modes",
    equations=("semilinear", "reaction_diffusion", "burgers"),
    n_points=10,
    t=0.25,
)((_compact_seed, _compact_agg))


# -- 9. dissipativity transfer ------------------------------------------------


def _dissip_seed(cfg, seed, p):
    basis = _basis(cfg)
    path = _path(cfg, seed)
    D = make_dissipative(cfg.nonlinearity.name, **cfg.nonlinearity.params)
    q = q_field(path, basis, cfg.noise.sigma_array())
    consts = transformed_constants(q, D)
    rng = check_rng(seed, "dissipativity_transfer")
    bad = check_transformed_inequality(q, D, consts, p["n_triples"], rng, p["s_scale"])
    base = D.violations(p["s_scale"] * rng.standard_normal(p["n_triples"]))
    return {
        "c1": consts.c1,
        "c2": consts.c2,
        "c3": consts.c3,
        "violations": float(bad),
        "base_violations": float(base),
        "pass": float(bad == 0 and base == 0),
    }


def _dissip_agg(rows, p):
    total = float(_column(rows, "violations").sum())
    return Aggregate({"total_violations": total}, _all_pass(rows), "zero violations")


register(
    "dissipativity_transfer",
    "transformed dissipativity inequality at random (t, xi, s) triples",
    equations=("reaction_diffusion",),
    n_triples=10_000,
    s_scale=3.0,
)((_dissip_seed, _dissip_agg))


# -- 10. Cole-Hopf ------------------------------------------------------------


def _cole_hopf_seed(cfg, seed, p):
    basis = _basis(cfg)
    amp = p["amplitude"]

    def psi(xi):
        return amp * np.sin(np.pi * xi)

    s = _steps(p["t"], cfg.noise.dt)
    path = sample_path(1, cfg.noise.dt, s, seed)
    u0 = basis.analyze_array(psi(basis.grid))
    traj = burgers_solve(basis, path, u0, s, BurgersConfig(lambdas=(), reject_fraction=cfg.scheme.reject_fraction))
    u = basis.synthesize_array(traj.extra["u"][-1])
    lo, hi = p["interior"]
    mask = (basis.grid > lo) & (basis.grid < hi)
    ref = cole_hopf_reference(psi, basis.viscosity, s * cfg.noise.dt, basis.grid)
    err = float(np.linalg.norm(u[mask] - ref[mask]) / np.linalg.norm(ref[mask]))
    return {"rel_l2_error": err, "pass": float(err < p["tol"])}


def _cole_hopf_agg(rows, p):
    return Aggregate({"rel_l2_error": float(rows[0]["rel_l2_error"])}, _all_pass(rows), f"interior relative L2 < {p['tol']:g}")


register(
    "cole_hopf",
    "noise-free Burgers vs the Cole-Hopf solution",
    equations=("burgers",),
    once=True,
    amplitude=2.0,
    t=0.5,
    interior=[0.05, 0.95],
    tol=1e-3,
)((_cole_hopf_seed, _cole_hopf_agg))
