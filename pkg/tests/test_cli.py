"""Command-line behavior: argument plumbing, output layout, exit codes."""

import json

import pytest

from carbongame import TRAJECTORY_COLUMNS
from carbongame.cli import main

from reference_values import CASES

FAST = ["--horizon", "2.0", "--step", "0.1"]


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _printed(lines, name):
    hits = [line for line in lines if line.startswith(f"{name} = ")]
    assert len(hits) == 1, f"{name}: {hits}"
    return float(hits[0].split(" = ", 1)[1])


def test_solve_prints_coefficients_and_policies(capsys):
    code, out, _ = _run(capsys, ["solve", "--mode", "gd"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "[gd]"
    assert lines[1] == "backend = residual"
    gd = CASES["baseline"]["gd"]
    for name in ("A", "M", "alpha", "H_d"):
        assert _printed(lines, name) == pytest.approx(gd[name], rel=1e-9)
    assert any(line.startswith("E_f = ") and " * H + " in line for line in lines)
    assert any(line.startswith("max_hjb_residual = ") for line in lines)
    assert not any(line.startswith("x_f") for line in lines)


def test_solve_all_modes_in_order(capsys):
    code, out, _ = _run(capsys, ["solve", "--mode", "all"])
    assert code == 0
    blocks = out.strip().split("\n\n")
    assert [b.splitlines()[0] for b in blocks] == ["[gd]", "[gs]", "[gc]"]
    assert any(line.startswith("x_f = (") and ") / (" in line
               for line in blocks[1].splitlines())
    assert "F = " in blocks[1]
    gc_lines = blocks[2].splitlines()
    assert not any(line.startswith(("M = ", "N = ")) for line in gc_lines)
    assert _printed(gc_lines, "A") == pytest.approx(
        CASES["baseline"]["gc"]["A"], rel=1e-9)


def test_solve_honors_config_file(capsys, tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"lambda_f": 350.0, "p_c": 1.2}))
    code, out, _ = _run(capsys, ["solve", "--config", str(path),
                                 "--mode", "gd"])
    assert code == 0
    gd = CASES["cheap_abatement_pricey_sink"]["gd"]
    assert _printed(out.splitlines(), "A") == pytest.approx(gd["A"], rel=1e-9)


def test_solve_backend_flag(capsys):
    code, out, _ = _run(capsys, ["solve", "--mode", "gc",
                                 "--backend", "paper"])
    assert code == 0
    assert "backend = paper-closed-form" in out.splitlines()


def test_no_sink_trading_matches_a_zero_price(capsys, tmp_path):
    code, toggled, _ = _run(capsys, ["solve", "--mode", "gd",
                                     "--no-sink-trading"])
    assert code == 0
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({"p_c": 0.0}))
    code, zeroed, _ = _run(capsys, ["solve", "--mode", "gd",
                                    "--config", str(path)])
    assert code == 0
    assert toggled == zeroed


def test_simulate_prints_one_trajectory(capsys):
    code, out, _ = _run(capsys, ["simulate", "--mode", "gs", *FAST])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 22          # header plus T/h + 1 samples
    assert out.endswith("\n")
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == 0.1


def test_simulate_refuses_multiple_modes_on_stdout(capsys):
    code, _, err = _run(capsys, ["simulate", *FAST])
    assert code == 1
    assert err.strip() == ("error: simulate prints a single mode to standard "
                           "output; pass --mode gd|gs|gc or --out DIR")


def test_simulate_writes_one_file_per_mode(capsys, tmp_path):
    out_dir = tmp_path / "runs"
    code, out, err = _run(capsys, ["simulate", "--mode", "all", *FAST,
                                   "--out", str(out_dir)])
    assert code == 0
    assert out == ""
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["run_report.json", "trajectory_gc.csv",
                     "trajectory_gd.csv", "trajectory_gs.csv"]
    assert err.count("wrote ") == 4
    table = (out_dir / "trajectory_gd.csv").read_text()
    assert table.splitlines()[0] == ",".join(TRAJECTORY_COLUMNS)


def test_compare_prints_the_summary_table(capsys):
    code, out, _ = _run(capsys, ["compare", "--mode", "gd", *FAST])
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("mode,sink_trading,A,B,C,M,N,F,alpha,H_d,")
    assert len(lines) == 3           # with and without sink trading
    assert lines[1].startswith("gd,on,")
    assert lines[2].startswith("gd,off,")


def test_compare_out_directory_is_reproducible(capsys, tmp_path):
    args = ["compare", "--mode", "gd", *FAST]
    code, _, _ = _run(capsys, [*args, "--out", str(tmp_path / "a")])
    assert code == 0
    code, _, _ = _run(capsys, [*args, "--out", str(tmp_path / "b")])
    assert code == 0
    read = lambda d, n: (tmp_path / d / n).read_text()
    assert read("a", "summary.csv") == read("b", "summary.csv")
    assert read("a", "trajectory_gd_sink_on.csv") == \
        read("b", "trajectory_gd_sink_on.csv")
    reports = [json.loads(read(d, "run_report.json")) for d in ("a", "b")]
    for report in reports:
        report.pop("timestamp")
        report["config"].pop("out")
    assert reports[0] == reports[1]


def test_sweep_uses_the_config_section(capsys, tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({
        "sim": {"T": 2.0, "h": 0.1},
        "sweep": {"parameter": "mu_f", "values": [1.0, 1.5],
                  "modes": ["gd"], "responses": ["H_d", "E_f_at_H_d"]},
    }))
    code, out, _ = _run(capsys, ["sweep", "--config", str(path)])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "mode,parameter,value,H_d,E_f_at_H_d,status"
    assert len(lines) == 3
    row = dict(zip(lines[0].split(","), lines[2].split(",")))
    assert row["mode"] == "gd" and row["value"] == "1.5"
    assert float(row["H_d"]) == pytest.approx(CASES["baseline"]["gd"]["H_d"],
                                              rel=1e-9)
    assert row["status"] == "ok"


def test_sweep_without_a_section_fails_cleanly(capsys):
    code, _, err = _run(capsys, ["sweep"])
    assert code == 1
    assert err.startswith("error: no sweep specified")


def test_verify_single_mode_passes(capsys):
    code, out, _ = _run(capsys, ["verify", "--mode", "gd"])
    assert code == 0
    lines = out.splitlines()
    assert any(line.startswith("PASS hjb-residual-scan-gd metric=")
               for line in lines)
    assert any(line.startswith("PASS value-consistency-gd-farmer")
               for line in lines)
    assert any(line.startswith("PASS equilibrium-certification-gd")
               for line in lines)
    assert lines[-1] == "overall: PASS (4 checks)"
    assert not any(line.startswith("FAIL") for line in lines)


def test_verify_flags_the_closed_form_backend(capsys):
    code, out, _ = _run(capsys, ["verify", "--mode", "gd",
                                 "--backend", "paper"])
    assert code == 1
    lines = out.splitlines()
    assert any(line.startswith("FAIL hjb-residual-scan-gd") for line in lines)
    assert lines[-1].startswith("overall: FAIL")


def test_verify_writes_the_report(capsys, tmp_path):
    out_dir = tmp_path / "verify"
    code, _, _ = _run(capsys, ["verify", "--mode", "gd",
                               "--out", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "run_report.json").read_text())
    assert report["command"] == "verify"
    assert report["passed"] is True


def test_errors_reach_stderr_with_exit_one(capsys, tmp_path):
    code, _, err = _run(capsys, ["solve", "--config",
                                 str(tmp_path / "missing.json")])
    assert code == 1
    assert err.startswith("error: ")

    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"lambda_f": -1}))
    code, _, err = _run(capsys, ["solve", "--config", str(path)])
    assert code == 1
    assert "lambda_f > 0 violated" in err


def test_unknown_subcommand_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
