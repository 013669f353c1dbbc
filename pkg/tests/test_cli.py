import csv
import dataclasses
import json
import math

import pytest

from cpsclp import cli, runner
from cpsclp.instance import Mode, RobustConfig, generate
from cpsclp.runner import MetricsRow

GEN = "seed=1,nf=4,nc=10,radius=30,covfrac=0.5"


def row(**kw):
    base = dict(id="a", seed=1, R=30.0, gamma=2, mode="both", method="misocp", objval=12.345678,
                nfac=2, opencost=10.0, congcost=2.345678, load=1.23456, cov=50.0, time_s=0.123,
                gap_pct=0.0, nodes=3.0, bcuts=0, frbcuts=0, status="Optimal")
    base.update(kw)
    return MetricsRow(**base)


def test_csv_roundtrip(tmp_path):
    rows = [row(), row(method="st-ben", time_s=1.005, status="TimeLimit", gap_pct=math.nan)]
    runner.write_csv(rows, tmp_path / "m.csv")
    back = runner.read_csv(tmp_path / "m.csv")
    for a, b in zip(rows, back):
        assert b.csv_fields() == a.csv_fields()
        r = a.rounded()
        for name in runner.CSV_HEADER:
            x, y = getattr(r, name), getattr(b, name)
            assert (isinstance(x, float) and math.isnan(x) and math.isnan(y)) or x == y
    assert back[0].objval == 12.35


def test_read_csv_rejects_header(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        runner.read_csv(tmp_path / "bad.csv")


def test_gamma_parsing():
    assert runner.parse_gamma("7", 20) == 7
    assert runner.parse_gamma("50%", 20) == 10
    assert runner.parse_gamma("2.5%", 20) == 1
    assert runner.parse_gamma("2.5%", 10) == 0
    for bad in ("21", "-1", "120%"):
        with pytest.raises(ValueError):
            runner.parse_gamma(bad, 20)
    grid = runner.gamma_grid(40)
    assert grid[0] == 0 and grid[-1] == 40 and grid == sorted(set(grid))


def test_profile_examples():
    rows = [row(id=str(k), time_s=t, status=s)
            for k, (t, s) in enumerate([(1, "Optimal"), (2, "Optimal"), (3, "Optimal"), (900, "TimeLimit")])]
    assert runner.profile(rows)["misocp"] == [(1.0, 0.25), (2.0, 0.5), (3.0, 0.75)]
    none = [row(method="mt-ben", status="TimeLimit")] * 3
    assert runner.profile(none)["mt-ben"] == [(0.0, 0.0)]
    twin = rows + [dataclasses.replace(r, method="miqp") for r in rows]
    series = runner.profile(twin)
    assert series["miqp"] == series["misocp"]


def test_gamma_star():
    rows = [row(gamma=g, objval=v) for g, v in [(0, 1.0), (2, 2.0), (5, 3.0), (8, 3.0), (10, 3.0)]]
    assert runner.gamma_star(rows, {"a": 10}) == {("a", "both", "misocp"): 5}


def run_cli(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def parse_out(out):
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(runner.CSV_HEADER)
    return MetricsRow.from_fields(next(csv.reader([lines[1]])))


def test_solve_writes_reports(tmp_path, capsys):
    code, cap = run_cli(["solve", "--generate", GEN, "--method", "mteps-ben", "--gamma", "50%",
                         "--out", str(tmp_path)], capsys)
    assert code == 0
    r = parse_out(cap.out)
    assert r.gap_pct == 0.0 and r.status == "Optimal" and r.gamma == 5
    stem = f"{r.id}_mteps-ben_both_g5"
    data = json.loads((tmp_path / f"{stem}.json").read_text())
    assert data["metrics"]["objval"] == pytest.approx(r.objval, abs=0.005)
    assert runner.read_csv(tmp_path / f"{stem}.csv")[0] == r


def test_miqp_and_misocp_agree(tmp_path, capsys):
    vals = []
    for m in ("miqp", "misocp"):
        code, cap = run_cli(["solve", "--generate", GEN, "--method", m, "--gamma", "3",
                             "--out", str(tmp_path)], capsys)
        assert code == 0
        vals.append(json.loads((tmp_path / f"s1-R30-4x10_{m}_both_g3.json").read_text())["metrics"]["objval"])
    assert vals[0] == pytest.approx(vals[1], rel=1e-5)


def test_zero_budget_equals_deterministic():
    inst = generate(1, 4, 10, 30.0, 0.5)
    det = runner.run_method(inst, RobustConfig(0, Mode.DETERMINISTIC), "misocp").row
    for mode in (Mode.BOTH, Mode.LOAD_ONLY, Mode.COVERAGE_ONLY):
        r = runner.run_method(inst, RobustConfig(0, mode), "misocp").row
        assert r.objval == pytest.approx(det.objval, rel=1e-9)
        assert r.load * inst.n_facilities == pytest.approx(r.cov, abs=1e-6)


def test_metric_identities_across_methods():
    inst = generate(2, 4, 12, 30.0, 0.5)
    for method in runner.METHODS:
        r = runner.run_method(inst, RobustConfig(3), method).row
        assert abs(r.objval - (r.opencost + r.congcost)) <= 1e-6
        assert r.cov >= inst.target_demand - 1e-6
        if method.endswith("ben"):
            assert r.bcuts >= 0 and r.nodes > 0


def test_exit_codes(tmp_path, capsys, monkeypatch):
    with pytest.raises(SystemExit) as e:
        cli.main(["solve", "--generate", GEN, "--method", "bogus"])
    assert e.value.code == 64
    with pytest.raises(SystemExit) as e:
        cli.main(["solve", "--generate", GEN, "--mode", "worst"])
    assert e.value.code == 64
    assert run_cli(["solve", "--generate", "seed=1,nf=4", "--out", str(tmp_path)], capsys)[0] == 64
    assert run_cli(["solve", "--generate", GEN, "--gamma", "11", "--out", str(tmp_path)], capsys)[0] == 64
    code, cap = run_cli(["solve", "--instance", str(tmp_path / "missing.json"), "--out", str(tmp_path)], capsys)
    assert code == 1 and "error" in cap.err
    code, cap = run_cli(["solve", "--generate", "seed=3,nf=12,nc=60,radius=30", "--gamma", "30%",
                         "--method", "miqp", "--time-limit", "0.2", "--out", str(tmp_path)], capsys)
    assert code == 2
    assert parse_out(cap.out).status == "TimeLimit"
    monkeypatch.setenv("CPSCLP_LOG", "loud")
    assert run_cli(["solve", "--generate", GEN, "--out", str(tmp_path)], capsys)[0] == 64


def test_sweep_and_profile(tmp_path, capsys):
    code, cap = run_cli(["sweep", "--generate", GEN, "--mode", "load", "--mode", "both",
                         "--grid", "0,50,100", "--out", str(tmp_path)], capsys)
    assert code == 0
    rows = runner.read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 6
    assert all(r.status == "Optimal" for r in rows)
    D = generate(1, 4, 10, 30.0, 0.5).target_demand
    for r in rows:
        if r.mode == "load":
            assert r.cov == pytest.approx(D, abs=0.005)
    stars = list(csv.DictReader(open(tmp_path / "gamma_star.csv")))
    assert {s["mode"] for s in stars} == {"load", "both"}
    assert all(s["gamma_star"] != "" for s in stars)
    assert len(json.loads((tmp_path / "sweep.json").read_text())) == 6

    out = tmp_path / "prof.csv"
    assert run_cli(["profile", str(tmp_path / "sweep.csv"), "--out", str(out)], capsys)[0] == 0
    prof = list(csv.DictReader(open(out)))
    assert float(prof[-1]["fraction_solved"]) == 1.0
    assert run_cli(["profile"], capsys)[0] == 64


def test_sweep_records_failures():
    sweep = runner.SweepSpec([generate(1, 4, 10, 30.0, 0.5)], modes=[Mode.BOTH], grid_pct=(0,))
    rows = runner.run_sweep(sweep, jobs=1)
    assert len(rows) == 1 and rows[0].status == "Optimal"
    bad = runner.failed_row(sweep.instances[0], RobustConfig(0), "misocp", RuntimeError("x"))
    assert bad.status == "Error:RuntimeError" and math.isnan(bad.objval)
    with pytest.raises(ValueError):
        runner.SweepSpec(sweep.instances, methods=["nope"])
