import csv
import io
import json

import pytest

from algact import __version__
from algact.cli import UsageError, parse_num_list, run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- list syntax -----------------------------------------------------------------


def test_parse_num_list():
    assert parse_num_list("1,2,3,...,8") == [1, 2, 3, 4, 5, 6, 7, 8]
    # two head terms: geometric when the ratio lands on the end value, else arithmetic
    assert parse_num_list("1,2,...,8") == [1, 2, 4, 8]
    assert parse_num_list("1,2,...,7") == [1, 2, 3, 4, 5, 6, 7]
    assert parse_num_list("1,2,4,...,256") == [1, 2, 4, 8, 16, 32, 64, 128, 256]
    assert parse_num_list("2,4,...,16") == [2, 4, 8, 16]
    assert parse_num_list("0,1,2,4,8,...,64") == [0, 1, 2, 4, 8, 16, 32, 64]
    assert parse_num_list("0.2,0.1,...,0.0125") == pytest.approx([0.2, 0.1, 0.05, 0.025, 0.0125])
    assert parse_num_list("0.2,0.1") == [0.2, 0.1]
    assert all(isinstance(x, int) for x in parse_num_list("1,3,...,9"))
    for bad in ["", "1,,2", "a,b", "1,...", "1,2,...,x"]:
        with pytest.raises(UsageError):
            parse_num_list(bad)


# -- exit codes --------------------------------------------------------------------


def test_exit_pass_and_json_stdout(capsys):
    code, out, _ = call(capsys, "haar-join", "--group", "S3", "--y1", "(12)", "--y2", "(13)")
    assert code == 0
    rep = json.loads(out)
    assert rep["tool"] == "algact" and rep["version"] == __version__
    assert rep["command"] == "haar-join" and rep["seed"] == 0
    assert rep["config"]["group"] == "S3" and "provenance" in rep
    assert rep["status"] == "pass" and len(rep["join"]) == 6


def test_exit_usage_on_parse_error(capsys):
    code, _, err = call(capsys, "approx-inverse", "--f", "2 -- u1")
    assert code == 1
    assert "^" in err and "error:" in err
    with pytest.raises(SystemExit) as e:
        run(["approx-inverse"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run(["haar-join", "--y1", "0", "--y2", "0", "--threads", "0"])
    assert e.value.code == 1
    capsys.readouterr()


def test_exit_fail(capsys):
    code, out, _ = call(capsys, "annihilator", "--xi", "1/2", "--alphas", "1;2", "--expect", "member")
    assert code == 2
    rep = json.loads(out)
    assert [r["is_member"] for r in rep["table"]] == [False, True]


def test_exit_inconclusive(capsys):
    code, out, _ = call(capsys, "ideal-test", "--f", "1 - u1", "--alphas", "1 - u1;1", "--grid", "2048")
    assert code == 3
    rep = json.loads(out)
    assert rep["status"] == "inconclusive"
    assert {r["classification"] for r in rep["table"]} >= {"inconclusive"}


def test_no_witness_exit(capsys):
    code, _, err = call(capsys, "nonextend", "--nu", "delta0", "--p", "3")
    assert code == 1 and err.startswith("algact nonextend:")


# -- formats and files -------------------------------------------------------------


def test_csv_output(capsys):
    code, out, _ = call(capsys, "nonextend", "--nu", "uniformint(1)", "--p", "3", "--N", "6",
                        "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 6 and float(rows[0]["divergent_term"]) >= 1 - 1e-12


def test_out_file_and_item_file(tmp_path, capsys):
    items = tmp_path / "alphas.txt"
    items.write_text("2 - u1\n0\n")
    dest = tmp_path / "r.json"
    code = run(["witness", "--f", "2 - u1", "--alphas", f"@{items}", "--k", "2,4,8",
                "--delta", "0.1", "--out", str(dest)])
    assert code == 0 and capsys.readouterr().out == ""
    rep = json.loads(dest.read_text())
    assert [a["alpha"] for a in rep["alphas"]] == ["2 - u1", "0"]


def test_fourier_check_single(capsys):
    code, out, _ = call(capsys, "fourier-check", "--xi", "1/2", "--nu", "uniformint(1)",
                        "--alpha", "1", "--samples", "20000", "--seed", "3")
    rep = json.loads(out)
    assert code == 0 and rep["analytic"] == pytest.approx([-1 / 3, 0])  # complex as [re, im]
    assert abs(complex(*rep["empirical"]) - complex(*rep["analytic"])) <= rep["allowed"]


def test_maxmin_cli(capsys):
    code, out, _ = call(capsys, "maxmin", "--group", "(Z/2)^3",
                        "--predicate", "supportin:[010],[001]&invariant:shift", "--probes", "20")
    assert code == 0 and json.loads(out)["Y"] == ["000"]


def test_support_recovery_cli(capsys):
    code, out, _ = call(capsys, "support-recovery", "--group", "Z/6", "--measure", "1:1/2,3:1/2", "--exact")
    rep = json.loads(out)
    assert code == 0 and rep["table"][0]["subgroup"] == ["0", "2", "4"]


# -- determinism ---------------------------------------------------------------------


@pytest.mark.parametrize("argv", [
    ["fourier-check", "--inverse-of", "2 - u1", "--xi-window", "30", "--nu", "geom2^1",
     "--alpha", "1;u1 - 1", "--samples", "30000", "--seed", "5"],
    ["support-recovery", "--group", "S4", "--random", "30", "--seed", "2"],
    ["maxmin", "--group", "(Z/2)^3", "--predicate", "invariant:shift", "--probes", "30", "--seed", "9"],
])
def test_threads_do_not_change_output(argv, tmp_path, monkeypatch):
    texts = []
    for i, threads in enumerate(["1", "8"]):
        monkeypatch.setenv("ALGACT_THREADS", threads)
        dest = tmp_path / f"{i}.json"
        run(argv + ["--out", str(dest)])
        texts.append(dest.read_bytes())
    dest = tmp_path / "explicit.json"
    run(argv + ["--threads", "3", "--out", str(dest)])
    texts.append(dest.read_bytes())
    assert texts[0] == texts[1] == texts[2]
