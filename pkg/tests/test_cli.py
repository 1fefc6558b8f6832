import csv
import io
import json
import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from multisum import ValidationError
from multisum.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VALIDATION,
    RunConfig,
    dumps_problem,
    load_config,
    load_problem,
    loads_problem,
    main,
    problem_to_dict,
    run_command,
)
from multisum.series_core import dumps_series, load_series

from oracles import EULER_SOLUTION


def problem_doc(**overrides):
    doc = {
        "m": 1,
        "n_space": 1,
        "initial": [{"0": 0.0}],
        "terms": [{"i": 0, "alpha": [0], "A": [[0]], "t_coeffs": [{}, {"0": 1.0}]}],
        "levels": {"ks": [1.0], "thetas": [0.0]},
    }
    doc.update(overrides)
    return doc


def write(tmp_path, doc, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_load_euler_fixture(problems_dir):
    p, ml = load_problem(problems_dir / "euler.json")
    assert (p.m, p.n_space) == (1, 1)
    assert ml.ks == (1.0,) and ml.thetas == (0.0,)
    assert p.order == 40


def test_problem_files_roundtrip(problems_dir, tmp_path):
    for path in sorted(problems_dir.glob("*.json")):
        p, ml = load_problem(path)
        text = dumps_problem(p, ml)
        assert text == path.read_text()
        q, ml2 = loads_problem(text)
        assert ml2 == ml
        for a, b in zip(p.terms, q.terms):
            assert a.keys() == b.keys()
            assert all(np.array_equal(a[k].data, b[k].data) for k in a)
        assert all(x == y for x, y in zip(p.initial, q.initial))


coeff = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: v != 0)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2), coeff, coeff), min_size=1, max_size=6))
def test_random_problem_roundtrip(entries):
    terms = {}
    for n, e, re, im in entries:
        terms.setdefault(n, {})[str(e)] = [re, im]
    t_coeffs = [terms.get(n, {}) for n in range(4)]
    doc = problem_doc(terms=[{"i": 0, "alpha": [1], "A": [[0]], "t_coeffs": t_coeffs}], max_degree=2, order=5)
    p, ml = loads_problem(json.dumps(doc))
    again, _ = loads_problem(dumps_problem(p, ml))
    assert dumps_problem(again, ml) == dumps_problem(p, ml)
    key = next(iter(p.terms[0]))
    assert np.array_equal(again.terms[0][key].data, p.terms[0][key].data)


def test_rejects_decreasing_levels(tmp_path):
    path = write(tmp_path, problem_doc(levels={"ks": [2.0, 1.0], "thetas": [0.0, 0.0]}))
    with pytest.raises(ValidationError, match="increasing"):
        load_problem(path)


def test_rejects_multidirection_violation(tmp_path):
    path = write(tmp_path, problem_doc(levels={"ks": [1.0, 2.0], "thetas": [0.0, 1.0]}))
    with pytest.raises(ValidationError, match=r"kappa_1 = 2"):
        load_problem(path)


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "m": 1,\n "n_space": }\n')
    with pytest.raises(ValidationError, match="line 3"):
        load_problem(path)


@pytest.mark.parametrize(
    "change,field",
    [
        ({"initial": []}, "initial"),
        ({"terms": [{"i": 0, "alpha": [0], "A": [[0]]}]}, "t_coeffs"),
        ({"terms": [{"i": 3, "alpha": [0], "A": [[0]], "t_coeffs": []}]}, "terms\\[0\\]"),
        ({"initial": [{"0": "one"}]}, "initial\\[0\\]"),
    ],
)
def test_validation_names_field(tmp_path, change, field):
    path = write(tmp_path, problem_doc(**change))
    with pytest.raises(ValidationError, match=field):
        load_problem(path)


def test_missing_top_level_field(tmp_path):
    doc = problem_doc()
    del doc["m"]
    with pytest.raises(ValidationError, match="'m'"):
        load_problem(write(tmp_path, doc))


def test_config_validation_and_env(tmp_path):
    assert load_config(env={"MULTISUM_ORDER": "24"}).order == 24
    assert load_config(env={"MULTISUM_TOL": "1e-9"}, overrides={"order": 30}).order == 30
    with pytest.raises(ValidationError):
        load_config(env={"MULTISUM_TOL": "0"})
    with pytest.raises(ValidationError):
        load_config(env={"MULTISUM_ORDER": "3"})
    with pytest.raises(ValidationError, match="MULTISUM_ORDER"):
        load_config(env={"MULTISUM_ORDER": "many"})
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"workers": 2, "bogus": 1}))
    with pytest.raises(ValidationError, match="bogus"):
        load_config(cfg, env={})


def test_resum_csv_matches_oracle(problems_dir, tmp_path):
    cfg = RunConfig(out_dir=str(tmp_path / "a"))
    code, paths = run_command("resum", cfg, problems_dir / "euler.json")
    assert code == EXIT_OK
    rows = read_csv(paths[0])
    assert list(rows[0]) == ["t_re", "t_im", "x_1_re", "u_1_re", "u_1_im", "err_est", "stage_flags", "config_hash"]
    for row in rows:
        t = float(row["t_re"])
        assert abs(float(row["u_1_re"]) - EULER_SOLUTION[t]) < 1e-10
    assert len({row["config_hash"] for row in rows}) == 1
    # equal config: bitwise identical output
    code, again = run_command("resum", RunConfig(out_dir=str(tmp_path / "b")), problems_dir / "euler.json")
    assert again[0].read_bytes() == paths[0].read_bytes()


def test_config_hash_tracks_config(problems_dir, tmp_path):
    _, a = run_command("resum", RunConfig(out_dir=str(tmp_path / "a")), problems_dir / "exp.json")
    _, b = run_command("resum", RunConfig(out_dir=str(tmp_path / "b"), tol=1e-11), problems_dir / "exp.json")
    assert read_csv(a[0])[0]["config_hash"] != read_csv(b[0])[0]["config_hash"]


def test_direction_through_pole_exits_2(problems_dir, tmp_path):
    err = io.StringIO()
    cfg = RunConfig(out_dir=str(tmp_path), theta_deg=180.0)
    code, paths = run_command("resum", cfg, problems_dir / "euler.json", stderr=err)
    assert code == EXIT_VALIDATION and paths == []
    record = json.loads(err.getvalue())
    assert record["error"] == "DirectionRejected"
    assert abs(complex(record["pole"]) + 1) < 0.05


def test_numeric_failure_exits_3(problems_dir, tmp_path):
    err = io.StringIO()
    cfg = RunConfig(out_dir=str(tmp_path), tol=1e-30)
    code, _ = run_command("resum", cfg, problems_dir / "euler.json", stderr=err)
    assert code == EXIT_NUMERIC
    assert json.loads(err.getvalue())["error"] == "NumericFailure"


def test_gevrey_reports(problems_dir, tmp_path, capsys):
    code, paths = run_command("gevrey", RunConfig(out_dir=str(tmp_path)), problems_dir / "exp.json")
    assert code == EXIT_OK
    assert "convergent" in paths[0].read_text()
    code, paths = run_command("gevrey", RunConfig(out_dir=str(tmp_path)), problems_dir / "euler.json")
    line = paths[0].read_text()
    k = float(line.split("k=")[1].split()[0])
    assert k == pytest.approx(1.0, rel=0.1)


def test_series_artifacts_roundtrip(problems_dir, tmp_path):
    for cmd in ("formal-solve", "borel"):
        code, paths = run_command(cmd, RunConfig(out_dir=str(tmp_path)), problems_dir / "system.json")
        assert code == EXIT_OK and len(paths) == 2
        for path in paths:
            assert dumps_series(load_series(path)) == path.read_text()


def test_majorant_audit_command(problems_dir, tmp_path):
    code, paths = run_command("majorant-audit", RunConfig(out_dir=str(tmp_path)), problems_dir / "burgers.json")
    assert code == EXIT_OK
    rows = read_csv(paths[0])
    assert len(rows) == 10
    assert all(float(r["M"]) == pytest.approx(float(r["C_witness"]), rel=1e-9) for r in rows)
    assert "failures=0" in paths[1].read_text()


def test_plot_data_command(problems_dir, tmp_path):
    code, paths = run_command("plot-data", RunConfig(out_dir=str(tmp_path)), problems_dir / "euler.json")
    assert code == EXIT_OK
    poles = read_csv(paths[0])
    assert min(abs(complex(float(r["pole_re"]), float(r["pole_im"])) + 1) for r in poles) < 0.05
    profile = read_csv(paths[1])
    assert len(profile) == RunConfig().profile_radii


def test_main_entry_point(problems_dir, tmp_path, capsys):
    points = tmp_path / "pts.json"
    points.write_text(json.dumps({"t": [0.1, [0.1, 0.01]]}))
    code = main(
        ["resum", "--problem", str(problems_dir / "exp.json"), "--out", str(tmp_path), "--points", str(points), "--order", "20"]
    )
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "solution.csv")
    t = complex(float(rows[1]["t_re"]), float(rows[1]["t_im"]))
    assert complex(float(rows[1]["u_1_re"]), float(rows[1]["u_1_im"])) == pytest.approx(np.exp(t), rel=1e-12)


def test_main_rejects_bad_config(problems_dir, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MULTISUM_TOL", "-1")
    code = main(["resum", "--problem", str(problems_dir / "exp.json"), "--out", str(tmp_path)])
    assert code == EXIT_VALIDATION
    assert json.loads(capsys.readouterr().err)["error"] == "ValidationError"


def test_theta_flag_rotates_default_points(problems_dir, tmp_path):
    cfg = RunConfig(out_dir=str(tmp_path), theta_deg=30.0)
    code, paths = run_command("resum", cfg, problems_dir / "exp.json")
    assert code == EXIT_OK
    row = read_csv(paths[0])[0]
    assert math.degrees(math.atan2(float(row["t_im"]), float(row["t_re"]))) == pytest.approx(30.0)


def test_problem_dict_keeps_levels(problems_dir):
    p, ml = load_problem(problems_dir / "two_level.json")
    assert problem_to_dict(p, ml)["levels"] == {"ks": [1.0, 2.0], "thetas": [0.0, 0.0]}
