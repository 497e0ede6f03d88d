from __future__ import annotations

import json
import subprocess
import sys

import pytest

from lattice_voa.cli import main
from lattice_voa.qseries import QSeries


def run(capsys, *argv: str) -> tuple[int, str, str]:
    try:
        status = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        status = exc.code
    out, err = capsys.readouterr()
    return status, out, err


def report(capsys, *argv: str) -> dict:
    status, out, err = run(capsys, *argv)
    assert status == 0, err
    doc = json.loads(out)
    assert doc["schema"] == "lattice_voa.report/1" and doc["command"] == argv[0]
    return doc


def test_theta_example(capsys):
    doc = report(capsys, "theta", "--lattice", "E8", "--order", "3")
    assert doc["result"]["series"]["coeffs"] == ["1", "240", "2160", "6720"]
    assert doc["config"]["order"] == 3 and doc["caps"]["max_vectors"] == 10**7
    assert set(doc["versions"]) >= {"lattice_voa", "python", "numpy", "scipy"}


def test_slope_example(capsys):
    assert report(capsys, "slope", "--charge", "16", "--order", "2")["result"]["bound"] == "4"


def test_schottky_diff_genus2_empty(capsys):
    doc = report(capsys, "schottky-diff", "--a", "E8xE8", "--b", "D16plus", "--genus", "2", "--max-diag", "4")
    assert doc["result"]["differences"] == [] and doc["result"]["count"] == 0


def test_char_and_repnum(capsys):
    doc = report(capsys, "char", "--lattice", "E8xE8", "--order", "2")
    assert doc["result"]["series"]["coeffs"] == ["1", "496", "69752"]
    doc = report(capsys, "repnum", "--lattice", "E8", "--gram", "2,1;1,2")
    assert doc["result"]["count"] == 240 * 56


def test_reptable_tsv(capsys):
    status, out, _ = run(capsys, "reptable", "--lattice", "E8", "--genus", "1", "--max-diag", "4", "--format", "tsv")
    assert status == 0
    assert out.splitlines() == ["t11\tcount", "0\t1", "2\t240", "4\t2160"]


def test_phi_genus0_window(capsys):
    doc = report(capsys, "phi", "--lattice", "E8", "--n", "0", "--k", "1", "--window=-7:-2,0:5")
    coeffs = {tuple(e["exps"]): int(e["num"]) for e in doc["result"]["window"]["coeffs"]}
    assert coeffs == {(-2 - b, b): 248 * (b + 1) for b in range(6)}


def test_casimir(capsys):
    assert report(capsys, "casimir", "--lattice", "E8", "--n", "1")["result"]["trace"] == "14880"


def test_sturm_equal(capsys):
    doc = report(capsys, "sturm", "--a", "E8xE8", "--b", "D16plus", "--weight", "8")
    result = doc["result"]
    assert result["verdict"] == "equal" and result["full_expansion"]["verdict"] == "equal"


def write_series(path, coeffs):
    path.write_text(json.dumps(QSeries(tuple(coeffs)).to_json()))
    return str(path)


def test_compare_files(capsys, tmp_path):
    base = [1, 496, 69752, 2115008, 34670620, 394460000, 3499148224]
    a = write_series(tmp_path / "a.json", base)
    same = write_series(tmp_path / "same.json", base)
    bumped = base.copy()
    bumped[5] += 1
    b = write_series(tmp_path / "b.json", bumped)
    assert report(capsys, "compare", "--a", a, "--b", same)["result"]["verdict"] == "equal"
    result = report(capsys, "compare", "--a", a, "--b", b)["result"]
    assert result["verdict"] == "unequal" and result["unequal_at"] == 5


def test_compare_rejects_prefactor_mismatch(capsys, tmp_path):
    a = tmp_path / "a.json"
    a.write_text(json.dumps(QSeries((1, 2, 3)).to_json()))
    b = tmp_path / "b.json"
    b.write_text(json.dumps(QSeries((1, 2, 3), prefactor=-1).to_json()))
    status, _, err = run(capsys, "compare", "--a", str(a), "--b", str(b))
    assert status == 2 and "prefactor" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["theta", "--lattice", "NOPE", "--order", "3"],
        ["theta", "--lattice", "E8", "--order", "-1"],
        ["repnum", "--lattice", "E8", "--gram", "2,1;2"],
        ["phi", "--lattice", "E8", "--n", "0", "--k", "1,1", "--window=-1:1"],
        ["phi", "--lattice", "D4", "--n", "1", "--k", "1", "--window=-3:1,-3:1", "--trunc", "1"],
        ["schottky-diff", "--a", "E8", "--b", "D16plus", "--genus", "1", "--max-diag", "2"],
        ["frobnicate"],
    ],
)
def test_validation_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


@pytest.mark.parametrize(
    "argv, cap",
    [
        (["repnum", "--lattice", "E8", "--gram", "2,1;1,2", "--max-vectors", "5"], "max_vectors=5"),
        (["phi", "--lattice", "D4", "--n", "1", "--k", "1", "--max-terms", "10"], "max_terms=10"),
    ],
)
def test_cap_exit_3(capsys, argv, cap):
    status, out, err = run(capsys, *argv)
    assert status == 3 and out == "" and cap in err


def test_cap_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("LATTICE_VOA_MAX_TERMS", "10")
    assert run(capsys, "casimir", "--lattice", "D4", "--n", "1")[0] == 3


def test_replay_is_byte_identical(capsys, tmp_path):
    cases = [
        ["phi", "--lattice", "D4", "--n", "1", "--k", "1", "--window=-3:1,-3:1", "--pairing", "form"],
        ["repnum", "--lattice", "D4", "--gram", "2,1;1,2"],
        ["char", "--lattice", "D4", "--order", "4", "--eta"],
    ]
    for i, argv in enumerate(cases):
        path = tmp_path / f"r{i}.json"
        assert run(capsys, *argv, "--output", str(path))[0] == 0
        assert run(capsys, "replay", str(path))[1] == path.read_text()
        # determinism: a second run gives the same bytes
        assert run(capsys, *argv)[1] == path.read_text()


def test_timing_goes_to_stderr():
    proc = subprocess.run(
        [sys.executable, "-m", "lattice_voa", "slope", "--charge", "24", "--order", "1", "--timing"],
        capture_output=True, text=True, check=True,
    )
    assert "finished in" in proc.stderr and "finished" not in proc.stdout


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lattice_voa", "slope", "--charge", "8", "--order", "3"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["result"]["bound"] == "4/3"
