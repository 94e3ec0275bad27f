import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qdistill.cli import main
from qdistill.maps import named_map, save_map
from qdistill.states import is_density, load_state, max_entangled, save_state

from conftest import random_matrix


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(out):
    return json.loads(out)


def test_gen_werner(tmp_path, capsys):
    path = tmp_path / "w.qstate.json"
    code, _, _ = run(capsys, "gen", "werner", "--d", 3, "--alpha", -0.9, "--out", path)
    assert code == 0
    assert is_density(load_state(path))


def test_gen_maxent_is_p_plus(tmp_path, capsys):
    path = tmp_path / "p.qstate.json"
    run(capsys, "gen", "maxent", "--d", 2, "-o", path)
    assert np.allclose(load_state(path).matrix, max_entangled(2).matrix)


def test_gen_bad_parameter(capsys):
    code, _, err = run(capsys, "gen", "werner", "--d", 3, "--alpha", 2)
    assert code == 2
    assert "alpha" in err


def test_gen_io_error(tmp_path, capsys):
    code, _, _ = run(capsys, "gen", "maxent", "--d", 2, "--out", tmp_path / "missing" / "x.json")
    assert code == 3


def test_gen_random_to_stdout(capsys):
    code, out, _ = run(capsys, "gen", "random", "--d", 2, "--d-b", 3, "--rank", 2, "--seed", 4)
    assert code == 0
    assert json.loads(out)["dims"] == [2, 3]


def _gen(tmp_path, capsys, name, *args):
    path = tmp_path / f"{name}.qstate.json"
    assert run(capsys, "gen", *args, "--out", path)[0] == 0
    return path


def test_distill_isotropic_via_reduction(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "iso", "isotropic", "--d", 3, "--fidelity", 0.5)
    code, out, _ = run(capsys, "distill", path, "--restarts", 16)
    rep = report(out)
    assert code == 0
    red = [r for r in rep["prepass"] if r["map"] == "Lambda1" and r["side"] == "right"][0]
    assert red["witness_value"] == pytest.approx(-0.5, abs=1e-12)
    assert rep["verdicts"][0]["kind"] == "ViolationFound"
    assert len(rep["certificate_schmidt"]["coefficients"]) == 2
    assert rep["schema"] == 1
    assert rep["inputs"]["dims"] == [3, 3]


def test_distill_maximally_mixed(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "mm", "maxmixed", "--d", 3)
    code, out, _ = run(capsys, "distill", path, "--restarts", 8)
    assert code == 1
    assert report(out)["verdicts"][0]["kind"] == "NoViolationFound"


def test_distill_two_copies(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "w", "werner", "--d", 2, "--alpha", -0.8)
    code, out, _ = run(capsys, "distill", path, "--copies", 2, "--restarts", 8)
    v = report(out)["verdicts"][0]
    assert code == 0
    assert v["copies"] == 2
    assert v["certificate"]["dims"] == [4, 4]


def test_distill_cap_exceeded(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "mm", "maxmixed", "--d", 3)
    code, _, err = run(capsys, "distill", path, "--copies", 4)
    assert code == 2
    assert "cap" in err


def test_distill_rejects_non_state(tmp_path, capsys):
    from qdistill.operators import BipartiteOperator

    path = tmp_path / "bad.json"
    save_state(path, BipartiteOperator(np.diag([2.0, 0, 0, 0]), 2, 2))
    assert run(capsys, "distill", path)[0] == 2


def test_distill_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"dims": 4}')
    code, _, err = run(capsys, "distill", path)
    assert code == 2
    assert "dims" in err


def test_report_file(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "p", "maxent", "--d", 2)
    rpath = tmp_path / "report.json"
    run(capsys, "distill", path, "--restarts", 4, "--report", rpath)
    assert json.loads(rpath.read_text())["command"] == "distill"


def test_kpos_named(capsys):
    code, out, _ = run(capsys, "kpos", "--map", "lambda1", "--d", 3, "--k", 2, "--restarts", 16)
    assert code == 0
    assert report(out)["verdicts"][0]["value"] == pytest.approx(-1, abs=1e-9)
    code, out, _ = run(capsys, "kpos", "--map", "lambda1", "--d", 3, "--k", 1, "--restarts", 16)
    assert code == 1
    assert report(out)["verdicts"][0]["value"] >= -1e-9


def test_kpos_from_state(tmp_path, capsys):
    mm = _gen(tmp_path, capsys, "mm", "maxmixed", "--d", 3)
    assert run(capsys, "kpos", "--from-state", mm, "--k", 2, "--restarts", 8)[0] == 1
    p = _gen(tmp_path, capsys, "p", "maxent", "--d", 3)
    code, out, _ = run(capsys, "kpos", "--from-state", p, "--k", 2, "--restarts", 8)
    assert code == 0
    # Jamiolkowski operator of T o S is d rho^{T_B}: value d * (-1/3)
    assert report(out)["verdicts"][0]["value"] == pytest.approx(-1, abs=1e-9)


def test_kpos_operator_file(tmp_path, capsys):
    lam4, _ = named_map("Lambda4", 3)
    path = tmp_path / "l4.json"
    save_map(path, lam4)
    code, out, _ = run(capsys, "kpos", "--operator", path, "--k", 1, "--restarts", 16)
    assert code == 1
    assert report(out)["map"]["d"] == 3


def test_kpos_requires_one_source(capsys):
    assert run(capsys, "kpos", "--k", 2)[0] == 2
    assert run(capsys, "kpos", "--map", "lambda1", "--k", 2)[0] == 2


def _read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_sweep_werner_d2(tmp_path, capsys):
    out_csv = tmp_path / "s.csv"
    code, out, _ = run(capsys, "sweep", "werner", "--d", 2, "--start", -1, "--stop", 0, "--steps", 11, "--out", out_csv, "--restarts", 8)
    header, rows = _read_csv(out_csv.read_text())
    assert header == ["param", "min_pt_eig", "reduction_value", "rank2_min_value", "verdict"]
    assert len(rows) == 11
    for r in rows:
        assert (r[4] == "ViolationFound") == (float(r[1]) < -1e-9)
        assert all(np.isfinite(float(x)) for x in r[:4])
    assert code == 0
    assert report(out)["rows"] == 11


def test_sweep_isotropic_reduction_column(capsys):
    code, out, _ = run(capsys, "sweep", "isotropic", "--d", 3, "--start", 0, "--stop", 1, "--steps", 6, "--restarts", 8)
    _, rows = _read_csv(out)
    for r in rows:
        assert float(r[2]) == pytest.approx(1 - 3 * float(r[0]), abs=1e-12)


def test_sweep_werner_d3_monotone(capsys):
    _, out, _ = run(capsys, "sweep", "werner", "--d", 3, "--start", -1, "--stop", -1 / 3, "--steps", 9, "--restarts", 16)
    _, rows = _read_csv(out)
    vals = [float(r[3]) for r in rows]
    # as -alpha decreases (alpha increases) the value must not decrease
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))


def test_check_p_plus(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "p", "maxent", "--d", 3)
    code, out, _ = run(capsys, "check", path)
    rep = report(out)
    assert rep["witness_values"]["Lambda1"] == pytest.approx(-2)
    assert rep["valid"] and rep["checks"]["hermitian"]
    assert code == 0


def test_check_maximally_mixed(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "mm", "maxmixed", "--d", 3)
    code, out, _ = run(capsys, "check", path)
    assert all(v >= 0 for v in report(out)["witness_values"].values())
    assert code == 1


def test_check_non_hermitian(tmp_path, capsys):
    from qdistill.operators import BipartiteOperator

    path = tmp_path / "nh.json"
    save_state(path, BipartiteOperator(random_matrix(np.random.default_rng(0), 4), 2, 2))
    code, out, _ = run(capsys, "check", path)
    assert code == 2
    assert report(out)["checks"]["hermitian"] is False


def test_seed_reproducibility(tmp_path, capsys):
    path = _gen(tmp_path, capsys, "r", "random", "--d", 3, "--rank", 3, "--seed", 5)
    _, a, _ = run(capsys, "distill", path, "--seed", 9, "--restarts", 16)
    _, b, _ = run(capsys, "distill", path, "--seed", 9, "--restarts", 16)
    ra, rb = report(a), report(b)
    ra.pop("timing"), rb.pop("timing")
    assert ra == rb


def test_module_entry_point(tmp_path):
    path = tmp_path / "p.json"
    save_state(path, max_entangled(2))
    proc = subprocess.run(
        [sys.executable, "-m", "qdistill", "distill", str(path), "--restarts", "4"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdicts"][0]["kind"] == "ViolationFound"
