import copy
import json
import re
from pathlib import Path

import pytest
import yaml

from semiflow.harness import cli
from semiflow.harness.checks import CHECKS, check_rng, fit_order
from semiflow.harness.config import ConfigError, load_config, parse_config
from semiflow.harness.report import export, fmt17, report_from_json
from semiflow.harness.runner import SeedFailure, run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "schema_version": 1,
    "name": "small",
    "equation": "burgers",
    "basis": {"n_modes": 8, "n_grid": 32, "viscosity": 0.5},
    "noise": {"n_noise": 2, "dt": 1e-2, "horizon": 0.5, "lambdas": [1.0, 0.25]},
    "seeds": {"values": [3, 1, 2]},
    "checks": [
        {"name": "cocycle_defect", "params": {"dt_levels": [1e-2, 5e-3], "t1": 0.2, "t2": 0.2}},
        {"name": "compactness", "params": {"t": 0.1, "n_points": 3}},
    ],
}


def small(**changes):
    d = copy.deepcopy(SMALL)
    d.update(changes)
    return d


def write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.checks and cfg.seed_list()


@pytest.mark.parametrize(
    "change,where",
    [
        ({"basis": {"n_modes": 0}}, "basis.n_modes"),
        ({"basis": {"n_modes": 8, "n_grid": 10}}, "basis"),
        ({"noise": {"dt": 0.3, "horizon": 1.0}}, "noise"),
        ({"noise": {"dt": -1.0}}, "noise.dt"),
        ({"seeds": {"values": []}}, "seeds"),
        ({"seeds": {"master": 1}}, "seeds"),
        ({"schema_version": 2}, "schema_version"),
        ({"equation": "navier_stokes"}, "equation"),
        ({"checks": [{"name": "nope"}]}, "checks.0.name"),
        ({"checks": [{"name": "q_cocycle"}]}, "checks.0.name"),
        ({"color": "blue"}, "color"),
    ],
)
def test_config_errors_name_the_field(change, where):
    with pytest.raises(ConfigError) as err:
        parse_config(small(**change))
    assert where in str(err.value)


def test_dt_must_divide_horizon():
    with pytest.raises(ConfigError, match="does not divide"):
        parse_config(small(noise={"dt": 0.3, "horizon": 1.0}))


def test_seed_resolution_is_deterministic():
    a = parse_config(small(seeds={"master": 7, "count": 5})).seed_list()
    b = parse_config(small(seeds={"master": 7, "count": 5})).seed_list()
    assert a == b and len(set(a)) == 5


def test_digest_tracks_content():
    assert parse_config(small()).digest() == parse_config(small()).digest()
    assert parse_config(small()).digest() != parse_config(small(name="other")).digest()


def test_unknown_check_param_is_rejected():
    cfg = parse_config(small(checks=[{"name": "compactness", "params": {"bogus": 1}}]))
    with pytest.raises(ValueError, match="bogus"):
        run(cfg)


def test_registry_and_helpers():
    assert {"cocycle_defect", "frechet", "cole_hopf", "helix", "q_cocycle"} <= set(CHECKS)
    assert fit_order([1e-2, 1e-3], [1e-1, 1e-2]) == pytest.approx(1.0)
    assert check_rng(5, "a").random() == check_rng(5, "a").random()
    assert check_rng(5, "a").random() != check_rng(5, "b").random()


def test_fmt17_round_trips():
    for x in [0.1, 1 / 3, 2.0**-40, 1e300, -7.25]:
        assert float(fmt17(x)) == x
        assert len(re.sub(r"[-.]|e.*", "", fmt17(x)).lstrip("0")) <= 17
    assert fmt17(True) == "1" and fmt17(3) == "3" and fmt17(float("nan")) == "nan"


def test_empty_checks_give_provenance_only(tmp_path):
    rep = run(parse_config(small(checks=[])))
    assert rep.passed and rep.checks == []
    export(rep, tmp_path)
    assert (tmp_path / "report.csv").read_text() == "seed\n"
    d = json.loads((tmp_path / "report.json").read_text())
    assert d["checks"] == [] and d["provenance"]["seeds"] == [3, 1, 2]
    assert set(d["provenance"]) >= {"config_sha256", "code_version", "schema_version"}


@pytest.fixture(scope="module")
def small_report():
    return run(parse_config(small()))


def test_rows_follow_seed_order(small_report):
    for c in small_report.checks:
        assert [r.seed for r in c.rows] == [3, 1, 2]


def test_export_layout_and_digits(small_report, tmp_path):
    written = export(small_report, tmp_path, "both")
    names = sorted(p.name for p in written)
    assert "report.csv" in names and "report.json" in names and "cocycle_defect.csv" in names
    lines = (tmp_path / "cocycle_defect.csv").read_text().splitlines()
    assert lines[0].startswith("seed,") and lines[0].endswith(",pass")
    assert lines[-2].startswith("mean,") and lines[-1].startswith("stderr,")
    x = lines[1].split(",")[1]
    assert float(x) == small_report.checks[0].rows[0].values[lines[0].split(",")[1]]
    text = (tmp_path / "report.json").read_text()
    assert report_from_json(text).scalar_view() == small_report.scalar_view()
    assert "timings" in json.loads(text)
    assert "time" not in (tmp_path / "report.csv").read_text()


def test_format_selection(small_report, tmp_path):
    assert [p.name for p in export(small_report, tmp_path / "j", "json")] == ["report.json"]
    assert all(p.suffix == ".csv" for p in export(small_report, tmp_path / "c", "csv"))


def test_workers_do_not_change_results(small_report, tmp_path):
    par = run(parse_config(small()), workers=2)
    assert par.scalar_view() == small_report.scalar_view()
    export(small_report, tmp_path / "a", "csv")
    export(par, tmp_path / "b", "csv")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_seed_failure_names_seed():
    cfg = parse_config(small(checks=[{"name": "frechet", "params": {"t": 0.1, "radius": 1e6}}]))
    with pytest.raises(SeedFailure, match="seed 3"):
        run(cfg)


def test_cli_list_checks(capsys):
    assert cli.main(["list-checks"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in CHECKS)


def test_cli_validate(tmp_path, capsys):
    assert cli.main(["validate", str(write(tmp_path, small()))]) == 0
    assert cli.main(["validate", str(write(tmp_path, small(noise={"dt": 0.3}), "bad.yaml"))]) == 2
    assert "noise" in capsys.readouterr().err
    assert cli.main(["validate", str(tmp_path / "missing.yaml")]) == 2


def test_cli_run_pass_and_fail(tmp_path, capsys):
    cfg = load_config(CONFIGS / "cole_hopf.yaml").model_dump(mode="json")
    assert cli.main(["run", str(write(tmp_path, cfg)), "--out-dir", str(tmp_path / "ok")]) == 0
    assert "PASS" in capsys.readouterr().out
    cfg["checks"][0]["params"]["tol"] = 1e-14
    bad = write(tmp_path, cfg, "strict.yaml")
    assert cli.main(["run", str(bad), "--out-dir", str(tmp_path / "bad"), "--format", "csv"]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert not (tmp_path / "bad" / "report.json").exists()


def test_cli_seed_override(tmp_path):
    p = write(tmp_path, small(checks=[{"name": "compactness", "params": {"t": 0.1, "n_points": 2}}]))
    assert cli.main(["run", str(p), "--seeds", "10:12", "--out-dir", str(tmp_path / "o"), "--format", "json"]) == 0
    d = json.loads((tmp_path / "o" / "report.json").read_text())
    assert d["provenance"]["seeds"] == [10, 11]
