import csv
import json

import pytest

from kirchhoff_gs.cli import main
from kirchhoff_gs.curve import UNRELIABLE

GS = ["ground-state", "--dim", "3", "--a", "1", "--q", "4", "--p", "4", "--lambda", "1"]


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_ground_state_json(tmp_path, capsys):
    out = tmp_path / "gs.json"
    code, stdout, _ = run(capsys, GS + ["--b", "1", "--out", str(out)])
    assert code == 0 and stdout.strip() == str(out)
    report = json.loads(out.read_text())
    assert report["varpi"] == pytest.approx(1 + report["norms"]["A"], rel=1e-12)
    assert report["controls"]["ode_tol"] == 1e-10
    assert report["residuals"]["nehari"] < 1e-6
    assert report["scaling"]["tag"] == "exact-pq"
    rows = list(csv.reader((tmp_path / "gs.profile.csv").open()))
    assert rows[0] == ["r", "W", "Wprime"]
    assert float(rows[1][0]) == 0.0 and float(rows[1][2]) == 0.0


def test_ground_state_csv_b0(tmp_path, capsys):
    out = tmp_path / "gs.csv"
    code, _, _ = run(capsys, GS + ["--b", "0", "--out", str(out), "--format", "csv"])
    assert code == 0
    assert out.read_text().startswith("r,W,Wprime\n")
    assert json.loads((tmp_path / "gs.report.json").read_text())["varpi"] == 1.0


def test_json_round_trip_bit_exact(tmp_path, capsys):
    out = tmp_path / "gs.json"
    run(capsys, ["ground-state", "--dim", "3", "--a", "1.3", "--b", "0.7", "--q", "3",
                 "--p", "4.2", "--lambda", "0.37", "--out", str(out)])
    text = out.read_text()
    report = json.loads(text)
    assert json.dumps(report, indent=2) == text
    from kirchhoff_gs.core import validate_params
    from kirchhoff_gs.kirchhoff import ground_state

    sol = ground_state(validate_params(3, 1.3, 0.7, 3, 4.2, 0.37))
    assert report["norms"]["B"] == sol.norms.B
    assert report["varpi"] == sol.varpi


def test_invalid_dimension(tmp_path, capsys):
    code, stdout, err = run(capsys, ["ground-state", "--dim", "5", "--a", "1", "--b", "1",
                                     "--q", "4", "--p", "4", "--lambda", "1",
                                     "--out", str(tmp_path / "x.json")])
    assert code == 2 and stdout == ""
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["constraint"] == "dimension" and payload["exit_code"] == 2


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["ground-state", "--dim", "three"])
    assert info.value.code == 2


def test_solver_failure_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, ["ground-state", "--dim", "4", "--a", "1", "--b", "0.01",
                                "--q", "2.5", "--p", "3.5", "--lambda", "3",
                                "--out", str(tmp_path / "x.json")])
    assert code == 3
    assert json.loads(err.strip().splitlines()[-1])["kind"] == "varpi"


def test_controls_file(tmp_path, capsys):
    ctl = tmp_path / "controls.txt"
    ctl.write_text("# tighter quadrature\nrefine = 6\nguard_high=3\n")
    out = tmp_path / "gs.json"
    code, _, _ = run(capsys, GS + ["--b", "1", "--out", str(out), "--controls", str(ctl)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["controls"]["refine"] == 6 and report["controls"]["guard_high"] == 3.0
    ctl.write_text("bogus=1\n")
    assert run(capsys, GS + ["--b", "1", "--out", str(out), "--controls", str(ctl)])[0] == 2
    ctl.write_text("no equals sign\n")
    assert run(capsys, GS + ["--b", "1", "--out", str(out), "--controls", str(ctl)])[0] == 2


MC = ["mass-curve", "--dim", "3", "--a", "1", "--b", "1", "--q", "3", "--p", "4"]


def test_mass_curve_fits(tmp_path, capsys):
    out = tmp_path / "mc.csv"
    code, stdout, _ = run(capsys, MC + ["--points", "41", "--out", str(out), "--format", "csv"])
    assert code == 0 and stdout.strip() == str(out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["lambda", "M", "gradA", "Lq", "Lp", "energy", "varpi", "peak"]
    assert len(rows) == 42
    summary = json.loads((tmp_path / "mc.summary.json").read_text())
    ends = summary["ends"]
    assert ends["lambda->0"]["mass"]["fit"]["exponent"] == pytest.approx(0.5, abs=0.02)
    assert ends["lambda->inf"]["mass"]["fit"]["exponent"] == pytest.approx(1.0, abs=0.02)
    assert ends["lambda->0"]["mass"]["constant_ratio"] == pytest.approx(1, abs=0.05)
    assert all(c["match"] for c in summary["sign_checks"].values())


def test_mass_curve_single_point(tmp_path, capsys):
    out = tmp_path / "one.csv"
    code, _, _ = run(capsys, MC + ["--points", "1", "--out", str(out), "--format", "csv"])
    assert code == 0
    assert len(out.read_text().splitlines()) == 2
    summary = json.loads((tmp_path / "one.summary.json").read_text())
    assert "omitted" in summary["ends"]["lambda->0"]["mass"]["fit"]
    assert summary["sign_checks"]["lambda->0"]["match"] is None


def test_mass_curve_pq_b0_closed_form(tmp_path, capsys):
    out = tmp_path / "pq.json"
    code, _, _ = run(capsys, ["mass-curve", "--dim", "3", "--a", "1", "--b", "0", "--q", "4",
                              "--p", "4", "--points", "9", "--out", str(out)])
    assert code == 0
    summary = json.loads(out.read_text())
    assert summary["pq_closed_form_max_deviation"] < 1e-6
    assert len(summary["samples"]) == 9


NM = ["normalized", "--dim", "3", "--a", "1", "--b", "1", "--q", "3", "--p", "5"]


def test_normalized_two_roots(tmp_path, capsys):
    out = tmp_path / "n.json"
    code, stdout, _ = run(capsys, NM + ["--c", "0.01", "--out", str(out)])
    assert code == 0 and stdout.strip() == str(out)
    report = json.loads(out.read_text())
    assert report["count"] == 2 and report["predicted_count"] == 2
    assert all(r["relative_mass_error"] < 1e-6 for r in report["roots"])
    assert report["count_row"] == "q<10/3,p>14/3"


def test_normalized_guard_band(tmp_path, capsys):
    out = tmp_path / "n.json"
    run(capsys, NM + ["--c", "0.01", "--out", str(out)])
    turning = json.loads(out.read_text())["turning_values"][0]
    code, _, _ = run(capsys, NM + ["--c", repr(turning ** 0.5), "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["label"] == UNRELIABLE


def test_normalized_rejects_nonpositive_c(tmp_path, capsys):
    assert run(capsys, NM + ["--c", "0", "--out", str(tmp_path / "n.json")])[0] == 2


def test_validate_quick(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, stdout, err = run(capsys, ["validate", "--suite", "quick", "--out", str(out)])
    assert code == 0 and stdout.strip() == str(out)
    report = json.loads(out.read_text())
    assert report["passed"] and "FAIL" not in err
    names = " ".join(c["name"] for c in report["checks"])
    for part in ("soliton", "dilation", "Nehari", "Talenti", "p=q", "independence", "coverage"):
        assert part in names


def test_validate_failure_exit_4(tmp_path, capsys, monkeypatch):
    import kirchhoff_gs.validation as v

    monkeypatch.setattr(v, "coverage_mismatch", lambda: 3.0)
    code, _, err = run(capsys, ["validate", "--out", str(tmp_path / "v.json")])
    assert code == 4 and "FAIL law table coverage" in err
