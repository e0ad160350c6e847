from pathlib import Path

import numpy as np
import pytest
import yaml

from mgaps import cli, emit, runner, scenario
from mgaps.scenario import ScenarioError

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

SMALL = {
    "name": "small",
    "platform": "quad",
    "duration": 1.0,
    "seed": 3,
    "trajectory": {"kind": "figure8", "ramp": 2.0},
    "roster": [
        {"name": "Expert", "method": "fixed", "theta0": "expert"},
        {"name": "Detune", "method": "fixed", "theta0": "detune"},
        {"name": "M-GAPS", "method": "mgaps", "eta": 1e5},
        {"name": "DiffTune", "method": "difftune", "eta": 3e6, "horizon": 100},
        {"name": "OPRF", "method": "oprf", "eta": 300, "horizon": 100},
    ],
}


def small(**kw):
    return scenario.from_dict({**SMALL, **kw})


@pytest.fixture(scope="module")
def small_result():
    return runner.run_scenario(small())


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.yaml")), ids=lambda p: p.stem)
def test_packaged_scenarios_load(path):
    s = scenario.load(path)
    assert s.roster and s.duration == 60.0
    echoed = scenario.echo(s)
    assert scenario.from_dict(echoed).n_steps == s.n_steps
    yaml.safe_dump(echoed)


@pytest.mark.parametrize("bad, msg", [
    ({"platform": "boat"}, "platform"),
    ({"duration": 0}, "duration"),
    ({"roster": []}, "roster"),
    ({"roster": [{"name": "A", "method": "sgd"}]}, "method"),
    ({"roster": [{"name": "A", "method": "fixed"}, {"name": "A", "method": "fixed"}]}, "duplicate"),
    ({"roster": [{"name": "A", "method": "difftune", "horizon": 0}]}, "horizon"),
    ({"roster": [{"name": "A", "method": "oprf", "horizon": "median"}]}, "horizon"),
    ({"trajectory": {"kind": "spiral"}}, "trajectory"),
])
def test_invalid_scenarios_rejected(bad, msg):
    with pytest.raises(ScenarioError, match=msg):
        small(**bad)


def test_missing_key_rejected():
    doc = dict(SMALL)
    del doc["trajectory"]
    with pytest.raises(ScenarioError, match="trajectory"):
        scenario.from_dict(doc)


def test_unreadable_scenario(tmp_path):
    with pytest.raises(ScenarioError):
        scenario.load(tmp_path / "nope.yaml")
    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError):
        scenario.load(tmp_path / "list.yaml")


def test_theta_resolution():
    e = scenario.resolve_theta("expert", "quad")
    np.testing.assert_allclose(scenario.resolve_theta("detune", "quad"), e - np.log(2))
    np.testing.assert_allclose(scenario.resolve_theta({"base": "expert", "shift": 1.0}, "quad"), e + 1)
    with pytest.raises(ScenarioError):
        scenario.resolve_theta("expert", "car")
    with pytest.raises(ScenarioError):
        scenario.resolve_theta([0.0] * 3, "quad")
    with pytest.raises(ScenarioError):
        scenario.resolve_theta({"gains": {"k1": 1.0}}, "car")


def test_record_count_and_time(small_result):
    s = small_result.scenario
    for log in small_result.logs.values():
        assert len(log) == s.n_steps == 500
        assert np.all(np.diff(log.t) > 0)
        assert log.diverged is None


def test_expert_twice_bitwise_identical():
    s = small()
    a = runner.run_member(s, s.member("Expert"))
    b = runner.run_member(s, s.member("Expert"))
    assert emit.csv_text(a) == emit.csv_text(b)


def test_seed_determinism_end_to_end(small_result, tmp_path):
    again = runner.run_scenario(small(), jobs=2)
    for name, log in small_result.logs.items():
        assert emit.csv_text(log) == emit.csv_text(again.logs[name])


def test_oprf_seed_changes_queries():
    s = small()
    a = runner.run_member(s, s.member("OPRF"))
    b = runner.run_member(s.with_seed(4), s.member("OPRF"))
    assert not np.array_equal(a.theta, b.theta)


def test_roster_isolation(small_result):
    only = runner.run_scenario(small(), only=["M-GAPS", "Expert"])
    assert set(only.logs) == {"M-GAPS", "Expert"}
    for name in only.logs:
        assert emit.csv_text(only.logs[name]) == emit.csv_text(small_result.logs[name])


def test_sweep_order_independent():
    s = small()
    a = runner.episode_sweep(s, [100, 250, 400])
    b = runner.episode_sweep(s, [400, 100, 250])
    assert dict(zip(a.lengths, a.totals)) == dict(zip(b.lengths, b.totals))


def test_sweep_resolves_hindsight_members():
    s = small(roster=[
        {"name": "Expert", "method": "fixed", "theta0": "expert"},
        {"name": "DiffTune*", "method": "difftune", "eta": 3e6, "horizon": "best"},
        {"name": "DiffTune", "method": "difftune", "eta": 3e6, "horizon": "worst"},
    ], sweep={"lengths": [100, 250], "eta": 3e6})
    res = runner.run_scenario(s)
    best, worst = res.sweep.best(), res.sweep.worst()
    assert best != worst
    roster = {m.name: m.horizon for m in res.roster}
    assert roster == {"Expert": 2000, "DiffTune*": best, "DiffTune": worst}


def test_sweep_rejects_bad_lengths():
    with pytest.raises(ScenarioError):
        runner.episode_sweep(small(), [0])
    with pytest.raises(ScenarioError):
        runner.episode_sweep(small(roster=[{"name": "E", "method": "fixed"}]))


def test_divergence_is_a_marker_not_a_crash():
    s = small(roster=[
        {"name": "Expert", "method": "fixed", "theta0": "expert"},
        {"name": "Wild", "method": "mgaps", "eta": 1e12},
    ])
    res = runner.run_scenario(s)
    assert res.diverged == ["Wild"]
    wild = res.logs["Wild"]
    assert 0 < len(wild) < s.n_steps and "step" in wild.diverged
    assert res.quasi_regret("Wild") is None
    assert emit.summary(res)["members"]["Wild"]["diverged"]


def test_wind_flag_toggles_every_12_s():
    s = scenario.load(SCENARIOS / "wind_line.yaml")
    plant = runner.build_plant(s)
    flags = plant.wind_flags
    edges = np.flatnonzero(np.diff(flags.astype(int))) + 1
    np.testing.assert_allclose(edges * s.dt, [12.0, 24.0, 36.0, 48.0], atol=1e-9)
    assert not flags[0] and flags[edges[0]]


def test_quasi_regret_against_baseline(small_result):
    qr = small_result.quasi_regret("Detune")
    lg, base = small_result.logs["Detune"], small_result.logs["Expert"]
    np.testing.assert_allclose(qr, np.cumsum(lg.cost - base.cost))
    np.testing.assert_array_equal(small_result.quasi_regret("Expert"), 0.0)


# --- emit ----------------------------------------------------------------------


def test_quad_column_count():
    cols = emit.columns("quad")
    # t + 15 states + 4 actions + 10 log-gains + cost, |y|, wind flag
    assert len(cols) == 1 + 15 + 4 + 10 + 3 == 33
    assert all("[" in c and c.endswith("]") for c in cols)
    assert len(emit.columns("car")) == 1 + 7 + 2 + 5 + 3


def test_empty_log_is_header_only():
    s = small(duration=0.002)
    log = runner.run_member(s, s.member("Expert"))
    empty = runner.RunLog(**{**log.__dict__, "t": log.t[:0], "x": log.x[:0], "u": log.u[:0],
                             "theta": log.theta[:0], "cost": log.cost[:0], "y_norm": log.y_norm[:0],
                             "wind": log.wind[:0], "tracking": log.tracking[:0]})
    text = emit.csv_text(empty)
    assert text.count("\n") == 1 and text.startswith("t[s],")


def test_csv_round_trip(small_result, tmp_path):
    for name, log in small_result.logs.items():
        path = emit.write_csv(log, tmp_path / f"{emit.safe_name(name)}.csv")
        raw = path.read_bytes()
        assert b"\r" not in raw
        header, data = emit.read_csv(path)
        assert header == emit.columns("quad")
        total = data[:, header.index("cost[m^2*s]")].sum()
        assert abs(total - log.total_cost) <= 1e-12 * max(1.0, abs(log.total_cost))
        np.testing.assert_array_equal(data[:, 1:16], log.x)


def test_write_result_and_summary(small_result, tmp_path):
    paths = emit.write_result(small_result, tmp_path, "csv", stride=50)
    root = tmp_path / "small"
    assert (root / "summary.yaml") in paths and (root / "M-GAPS.csv").exists()
    assert (root / "DiffTune_series.csv").exists()
    doc = yaml.safe_load((root / "summary.yaml").read_text())
    assert doc["schema_version"] == emit.SCHEMA_VERSION
    assert doc["scenario"]["seed"] == 3 and doc["scenario"]["env"]["dt"] == 0.002
    m = doc["members"]["M-GAPS"]
    assert m["total_cost"] == pytest.approx(small_result.logs["M-GAPS"].total_cost)
    assert m["quasi_regret_final"] is not None and "kp_xy" in m["final_gains"]
    header, data = emit.read_csv(root / "Expert_series.csv")
    assert len(data) == 10 and header[0] == "t[s]"


def test_summary_only_format(small_result, tmp_path):
    paths = emit.write_result(small_result, tmp_path, "summary")
    assert [p.name for p in paths] == ["summary.yaml"]


def test_io_failure_has_path_context(small_result, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(emit.EmitError, match="file"):
        emit.write_result(small_result, blocker / "sub")


# --- CLI -------------------------------------------------------------------------


def _write(tmp_path, doc):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def test_cli_run_ok(tmp_path, capsys):
    path = _write(tmp_path, {**SMALL, "duration": 0.2})
    code = cli.main(["run", path, "--out-dir", str(tmp_path / "out"), "--seed", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "M-GAPS" in out and (tmp_path / "out" / "small" / "OPRF.csv").exists()
    doc = yaml.safe_load((tmp_path / "out" / "small" / "summary.yaml").read_text())
    assert doc["scenario"]["seed"] == 1


def test_cli_run_diverged_exit_code(tmp_path):
    doc = {**SMALL, "duration": 0.5, "roster": [{"name": "Wild", "method": "mgaps", "eta": 1e12}],
           "baseline": None}
    assert cli.main(["run", _write(tmp_path, doc), "--out-dir", str(tmp_path), "--format", "summary"]) == 1


def test_cli_bad_scenario_exit_code(tmp_path, capsys):
    path = _write(tmp_path, {**SMALL, "platform": "boat"})
    assert cli.main(["run", path, "--out-dir", str(tmp_path)]) == 2
    assert "platform" in capsys.readouterr().err


def test_cli_sweep(tmp_path, capsys):
    path = _write(tmp_path, {**SMALL, "duration": 0.4})
    code = cli.main(["sweep", path, "--lengths", "50", "100", "--out-dir", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "small" / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("horizon[steps]") and len(lines) == 3


def test_cli_check(capsys):
    code = cli.main(["check", "--points", "3"])
    out = capsys.readouterr().out
    assert code == 0 and "FAIL" not in out and "sensitivity" in out
