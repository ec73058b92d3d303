import csv
import json

import pytest

from fracmix.cli import build_parser, main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_roots_a3(tmp_path):
    assert run(tmp_path, "roots", "--family", "A", "--rank", "3") == 0
    rep = json.loads((tmp_path / "roots.json").read_text())
    assert rep["sos"]["formal_sum_coeffs"] == [1, 2, 1]
    assert rep["zeta"] == pytest.approx(5.2) and rep["p"] == pytest.approx(0.8)
    rows = read_csv(tmp_path / "roots_eta.csv")
    assert list(rows[0]) == ["direction", "t", "log_eta", "eta"]
    assert float(rows[0]["eta"]) == 1.0


def test_decay_geodesic(tmp_path):
    assert run(tmp_path, "decay", "--mu", "0.64") == 0
    rep = json.loads((tmp_path / "decay_fit.json").read_text())
    assert rep["fit"]["exponent"] == pytest.approx(0.2, rel=0.05)
    assert len(read_csv(tmp_path / "decay_curve.csv")) == 121


def test_json_format_embeds_tables(tmp_path):
    assert run(tmp_path, "tauberian", "--format", "json") == 0
    assert not (tmp_path / "tauberian.csv").exists()
    rep = json.loads((tmp_path / "tauberian.json").read_text())
    assert isinstance(rep, dict) and "tauberian" in json.dumps(rep)


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["mixbound", "--samples", "50", "--out", str(d)]) == 0
        assert main(["solve", "--out", str(d)]) == 0
    for name in ("mixbound.json", "mixbound.csv", "solve.json", "solve_scan.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACMIX_OUT", str(tmp_path))
    assert main(["tauberian", "--r", "0.2"]) == 0
    assert (tmp_path / "tauberian.json").exists()


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "roots", "--family", "Q", "--rank", "2") == 1
    assert run(tmp_path, "solve", "--mu", "5") == 1
    assert run(tmp_path, "typeii", "--mode", "sharpness", "--witness-r", "0.2") == 1
    assert run(tmp_path, "decay", "--t-max", "30") == 2
    err = capsys.readouterr().err
    assert "invalid input" in err and "numerical budget exceeded" in err


def test_help_lists_columns(capsys):
    parser = build_parser()
    for cmd, column in (("decay", "magnitude"), ("roots", "log_eta"), ("mixbound", "verified")):
        with pytest.raises(SystemExit):
            parser.parse_args([cmd, "--help"])
        assert column in capsys.readouterr().out


def test_selftest_single_suite(tmp_path):
    assert run(tmp_path, "selftest", "--suite", "root_systems") == 0
    rows = read_csv(tmp_path / "selftest.csv")
    assert [r["suite"] for r in rows] == ["root_systems"] and rows[0]["passed"] == "True"
