"""Deterministic multi-seed execution of the configured checks."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor

from .. import __version__
from .checks import CHECKS
from .config import ExperimentConfig
from .report import CheckResult, RunReport, SeedResult

__all__ = ["run", "SeedFailure", "code_version"]

log = logging.getLogger(__name__)


class SeedFailure(RuntimeError):
    """A solver error raised while processing one (check, seed) pair."""

    def __init__(self, check: str, seed: int, cause: BaseException):
        super().__init__(f"check {check!r}, seed {seed}: {type(cause).__name__}: {cause}")
        self.check = check
        self.seed = seed


def code_version() -> str:
    return __version__


def _params(name: str, given: dict) -> dict:
    check = CHECKS[name]
    unknown = set(given) - set(check.defaults) - {"n_seeds"}
    if unknown:
        raise ValueError(f"check {name!r}: unknown parameter(s) {sorted(unknown)}")
    return {**check.defaults, **given}


def _one(task):
    cfg, name, seed, params = task
    t0 = time.perf_counter()
    try:
        row = CHECKS[name].per_seed(cfg, seed, params)
    except Exception as exc:  # noqa: BLE001 - re-raised with the seed attached
        raise SeedFailure(name, seed, exc) from exc
    return row, time.perf_counter() - t0


def run(config: ExperimentConfig, *, workers: int = 1, seeds: list[int] | None = None) -> RunReport:
    """Execute every configured check over the seeds.

    Per-seed work is single-threaded and pure, so the scalar results do not
    depend on ``workers``.  Aggregation sees rows in seed-list order.
    """
    seeds = config.seed_list() if seeds is None else list(seeds)
    if not seeds:
        raise ValueError("seed list must be non-empty")
    provenance = {
        "config_sha256": config.digest(),
        "code_version": code_version(),
        "schema_version": config.schema_version,
        "seeds": seeds,
    }
    report = RunReport(config.name, config.equation, provenance)
    tasks = []
    plan = []
    for spec in config.checks:
        params = _params(spec.name, spec.params)
        check = CHECKS[spec.name]
        chosen = seeds[:1] if check.once else seeds[: params.get("n_seeds", len(seeds))]
        plan.append((spec.name, params, chosen))
        tasks.extend((config, spec.name, s, params) for s in chosen)
    t0 = time.perf_counter()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_one(t) for t in tasks]
    pos = 0
    for name, params, chosen in plan:
        rows = []
        elapsed = 0.0
        for s in chosen:
            values, dt = results[pos]
            pos += 1
            elapsed += dt
            values = dict(values)
            flag = values.pop("pass", None)
            rows.append(SeedResult(s, values, None if flag is None else bool(flag)))
        agg = CHECKS[name].aggregate([{**r.values, **({} if r.passed is None else {"pass": float(r.passed)})} for r in rows], params)
        report.checks.append(CheckResult(name, params, agg.tolerance, bool(agg.passed), rows, agg.stats))
        report.timings[name] = elapsed
        log.info("%s: %s", name, "pass" if agg.passed else "FAIL")
    report.timings["wall"] = time.perf_counter() - t0
    return report
