import csv
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm_lab import cli
from renorm_lab.annulus_modulus import round_annulus


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    report, code = cli.run([*argv, "--out", str(out)])
    assert json.loads(out.read_text()) == json.loads(json.dumps(report))
    return report, code


def test_superstable(tmp_path):
    rep, code = run(tmp_path, "superstable", "--q", "2")
    assert code == 0 and rep["schema"] == "renorm-lab/1"
    assert rep["hashed"]["outputs"]["c"] == pytest.approx(-1.0, abs=1e-12)
    rep, _ = run(tmp_path, "superstable", "--q", "4")
    assert rep["hashed"]["outputs"]["c"] == pytest.approx(-1.3107026413368329, abs=1e-12)
    rep, code = run(tmp_path, "superstable", "--q", "3", "--bracket", "-1.8,-1.7")
    assert code == 0
    assert rep["hashed"]["outputs"]["c"] == pytest.approx(-1.7548776662466927, abs=1e-12)


def test_superstable_input_errors_exit_2(tmp_path):
    _, code = run(tmp_path, "superstable", "--q", "2", "--bracket", "-0.5,-0.1")
    assert code == 2
    _, code = run(tmp_path, "superstable")
    assert code == 2


def test_cascade_rows_and_csv(tmp_path):
    path = tmp_path / "levels.csv"
    rep, code = run(tmp_path, "cascade", "--N", "2", "--depth", "6", "--csv", str(path))
    assert code == 0
    rows = list(csv.DictReader(path.open(newline="")))
    assert len(rows) == 6 and [int(r["q"]) for r in rows] == [2, 4, 8, 16, 32, 64]
    assert all(r["N"] == "2" and r["L"] == "1.05" for r in rows)
    assert path.read_bytes().count(b"\r\n") == 7
    ratios = [float(r["ratio"]) for r in rows[1:-1]]
    assert max(abs(b - a) / b for a, b in zip(ratios, ratios[1:])) < 0.01
    assert rep["hashed"]["checks"]["real_bounds"]


def test_cascade_nothing_found_exit_3(tmp_path):
    _, code = run(tmp_path, "cascade", "--c", "0")
    assert code == 3


def test_feigenbaum_and_tower(tmp_path):
    rep, _ = run(tmp_path, "feigenbaum", "--depth", "6")
    assert len(rep["hashed"]["outputs"]["ratios"]) == 5
    rep, code = run(tmp_path, "tower", "--m", "4")
    assert code == 0 and rep["hashed"]["checks"]["tower_ok"]
    assert [lv["p"] for lv in rep["hashed"]["outputs"]["levels"]] == [1, 2, 4, 8, 16]


def test_geometry(tmp_path):
    curves = tmp_path / "curves"
    rep, code = run(tmp_path, "geometry", "--K", "2", "--theta", f"0.2,0.1,0.05,{math.pi / 2}",
                    "--curves", str(curves))
    assert code == 0
    rows = rep["hashed"]["outputs"]["rows"]
    d = [r["dist_to_K2"] for r in rows[:3]]
    assert d[0] > d[1] > d[2]
    # after Q^-1 the crossing tends to K instead of K**2
    ds = [r["dist_sqrt_to_K"] for r in rows[:3]]
    assert ds[0] > ds[1] > ds[2]
    assert ds[2] == pytest.approx(d[2] / 4, rel=0.01)
    # the closed form and the measured distance disagree; the flag says so
    assert rows[3]["k_formula"] == pytest.approx(0.0, abs=1e-15)
    assert rows[3]["k_measured"] == pytest.approx(math.log(1 + math.sqrt(2)), abs=1e-9)
    assert all(r["discrepancy"] for r in rows)
    curve = json.loads(next(curves.glob("poincare_*.json")).read_text())
    assert curve["closed"] is True and len(curve["points"][0]) == 2


def test_geometry_empty_and_bad_angle(tmp_path):
    rep, code = run(tmp_path, "geometry", "--theta", "")
    assert code == 0 and rep["hashed"]["outputs"]["rows"] == []
    _, code = run(tmp_path, "geometry", "--theta", "4.0")
    assert code == 2


def test_complex_bounds_not_renormalizable_exit_4(tmp_path):
    rep, code = run(tmp_path, "complex-bounds", "--c", "0.2", "--n-range", "2..3")
    assert code == 4 and not rep["hashed"]["checks"]["all_levels_ok"]


def test_modulus_from_curve_files(tmp_path):
    outer, inner = round_annulus(1.0, math.e, 1024)
    (tmp_path / "o.json").write_text(json.dumps(outer.to_json()))
    (tmp_path / "i.json").write_text(json.dumps(inner.to_json()))
    rep, code = run(tmp_path, "modulus", "--outer", str(tmp_path / "o.json"),
                    "--inner", str(tmp_path / "i.json"), "--grid", "64", "--m", "0.1")
    assert code == 0 and rep["hashed"]["checks"]["lower_bound"]
    assert rep["hashed"]["outputs"]["richardson"] == pytest.approx(1 / (2 * math.pi), rel=0.02)


def test_invalid_grid_exit_2(tmp_path):
    _, code = run(tmp_path, "modulus", "--round", "1,2", "--grid", "8")
    assert code == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q": 4}))
    rep, _ = run(tmp_path, "superstable", "--config", str(cfg))
    assert rep["hashed"]["inputs"]["q"] == 4
    rep, _ = run(tmp_path, "superstable", "--config", str(cfg), "--q", "2")
    assert rep["hashed"]["inputs"]["q"] == 2
    cfg.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(SystemExit):
        cli.run(["superstable", "--q", "2", "--config", str(cfg)])


def test_hash_excludes_timings(tmp_path):
    a, _ = run(tmp_path, "cascade", "--depth", "4")
    b, _ = run(tmp_path, "cascade", "--depth", "4")
    assert a["sha256"] == b["sha256"] and a["hashed"] == b["hashed"]
    c, _ = run(tmp_path, "cascade", "--depth", "3")
    assert c["sha256"] != a["sha256"]


def test_main_returns_exit_code(tmp_path):
    assert cli.main(["cascade", "--c", "0", "--out", str(tmp_path / "r.json")]) == 3


def test_csv_quoting(tmp_path):
    path = tmp_path / "t.csv"
    cli.write_csv(str(path), ["a", "b"], [{"a": 'x,"y"', "b": 1.5}])
    assert path.read_bytes() == b'a,b\r\n"x,""y""",1.5\r\n'


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["cascade", "tower", "modulus"]),
       st.dictionaries(st.sampled_from(["depth", "grid", "L", "seed", "tol"]),
                       st.one_of(st.integers(1, 16), st.floats(1e-9, 10.0)), max_size=5))
def test_run_config_round_trip(command, params):
    cfg = cli.RunConfig(command, params)
    assert cli.RunConfig.from_json(cfg.to_json()) == cfg


def test_run_config_validation():
    with pytest.raises(ValueError):
        cli.RunConfig("x", {"tol": 0.0}).validate()
    with pytest.raises(ValueError):
        cli.RunConfig("x", {"depth": 40}).validate()
    cli.RunConfig("x", {"depth": 12, "grid": 256, "tol": 1e-7}).validate()
