"""End-to-end acceptance: run every shipped config once and report per criterion.

Each test prints one PASS/FAIL line.  Tolerances are pinned here against the
parameters recorded in the report, so a config edit that loosens one fails.
"""

from pathlib import Path

import pytest

from semiflow.harness.config import load_config
from semiflow.harness.report import export
from semiflow.harness.runner import run

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
BUDGET_SECONDS = 300.0
_cache = {}


def suite(name):
    if name not in _cache:
        cfg = load_config(CONFIGS / f"{name}.yaml")
        rep = run(cfg)
        assert rep.timings["wall"] < BUDGET_SECONDS, f"{name} took {rep.timings['wall']:.0f}s"
        _cache[name] = (cfg, rep)
    return _cache[name]


def check(name, check_name):
    _, rep = suite(name)
    (c,) = [c for c in rep.checks if c.name == check_name]
    return c


@pytest.fixture
def say(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail

    return emit


def desk_scale(cfg, seeds=200):
    assert cfg.basis.n_modes == 16 and cfg.basis.n_grid == 64
    assert cfg.noise.dt == 1e-3
    assert len(cfg.seed_list()) == seeds


def test_01_scalar_strong_order(say):
    cfg, _ = suite("linear")
    desk_scale(cfg)
    c = check("linear", "scalar_strong_error")
    assert c.params["target_order"] == 0.5 and c.params["order_tol"] == 0.2
    orders = {s: c.stats[f"{s}_order"] for s in ("euler", "chaos", "wong_zakai")}
    ok = c.passed and all(abs(o - 0.5) <= 0.2 for o in orders.values())
    say(1, ok, "strong orders " + ", ".join(f"{k} {v:.3f}" for k, v in orders.items()) + " (target 0.5 +- 0.2)")


def test_02_chaos_decay(say):
    c = check("linear", "chaos_decay")
    assert c.params["min_r2"] == 0.95
    say(2, c.passed and c.stats["r2"] >= 0.95, f"factorial fit R^2 = {c.stats['r2']:.4f} (>= 0.95), monotone ratios")


def test_03_cross_scheme(say):
    cfg, _ = suite("cross_scheme")
    assert len(cfg.seed_list()) == 200
    c = check("cross_scheme", "cross_scheme")
    assert c.params["min_fraction"] == 0.95
    frac = c.stats["pass_fraction"]
    say(3, c.passed and frac >= 0.95, f"scheme agreement on {frac:.1%} of 200 paths (>= 95%)")


@pytest.mark.parametrize("name", ["linear", "semilinear", "reaction_diffusion", "burgers"])
def test_04_cocycle_defect(say, name):
    cfg, _ = suite(name)
    desk_scale(cfg)
    c = check(name, "cocycle_defect")
    assert c.params["min_order"] == 0.5 and c.params["exact_tol"] == 1e-12
    ok = c.passed and c.stats["max_exact_case"] <= 1e-12
    ok &= c.stats["order"] >= 0.5 or bool(c.stats["at_floor"])
    finest = c.stats[f"mean_defect_{len(c.params['dt_levels']) - 1}"]
    say(
        4,
        ok,
        f"{name}: defect order {c.stats['order']:.3f} (>= 0.5 or at floor {c.params['floor']:g}), "
        f"mean finest {finest:.2e}, "
        f"exact cases {c.stats['max_exact_case']:.1e} (<= 1e-12)",
    )


@pytest.mark.parametrize("name,check_name", [("reaction_diffusion", "q_cocycle"), ("linear", "helix")])
def test_05_exact_identities(say, name, check_name):
    c = check(name, check_name)
    assert c.params["tol"] == 1e-10
    assert len(c.rows) == 200
    say(5, c.passed and c.stats["max_rel_error"] <= 1e-10, f"{check_name}: max relative error {c.stats['max_rel_error']:.1e} (<= 1e-10)")


@pytest.mark.parametrize("name", ["semilinear", "reaction_diffusion", "burgers"])
def test_06_frechet(say, name):
    c = check(name, "frechet")
    assert list(c.params["slope_range"]) == [0.8, 1.2]
    s = c.stats["slope"]
    say(6, c.passed and 0.8 <= s <= 1.2, f"{name}: finite-difference remainder slope {s:.3f} in [0.8, 1.2]")


def test_07_contraction(say):
    cfg, _ = suite("contraction")
    desk_scale(cfg, seeds=100)
    c = check("contraction", "contraction_exponent")
    assert c.params["slack"] == 0.1
    st = c.stats
    ok = c.passed and st["mean_exponent"] <= st["bound"] + 0.1 * abs(st["bound"])
    ok &= st["max_v_exponent"] <= st["v_bound"]
    say(
        7,
        ok,
        f"mean exponent {st['mean_exponent']:.3f} <= {st['bound']:.3f} + 0.1|bound|; "
        f"max v-exponent {st['max_v_exponent']:.3f} <= {st['v_bound']:.3f} on every path",
    )


@pytest.mark.parametrize("name", ["semilinear", "reaction_diffusion", "burgers"])
def test_08_compactness(say, name):
    c = check(name, "compactness")
    st = c.stats
    say(8, c.passed and st["mean_tail_2N"] < st["mean_tail_N"], f"{name}: tail {st['mean_tail_N']:.2e} -> {st['mean_tail_2N']:.2e} when N doubles")


def test_09_dissipativity(say):
    c = check("reaction_diffusion", "dissipativity_transfer")
    assert c.params["n_triples"] == 10_000 and len(c.rows) == 20
    v = c.stats["total_violations"]
    say(9, c.passed and v == 0, f"{int(v)} violations over 10^4 triples x 20 paths")


def test_10_cole_hopf(say):
    c = check("cole_hopf", "cole_hopf")
    assert c.params["tol"] == 1e-3
    e = c.stats["rel_l2_error"]
    say(10, c.passed and e < 1e-3, f"Cole-Hopf interior relative L2 error {e:.2e} (< 1e-3)")


def test_11_byte_identical_rerun(say, tmp_path):
    cfg, first = suite("cross_scheme")
    again = run(cfg, workers=2)
    export(first, tmp_path / "a")
    export(again, tmp_path / "b")
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in csvs)
    same &= first.scalar_view() == again.scalar_view()
    say(11, same, f"rerun with 2 workers: {len(csvs)} CSV files byte-identical, JSON scalars equal")
