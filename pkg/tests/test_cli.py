"""Command-line interface tests: exit codes, flag surfaces, determinism, and
end-to-end subcommand behavior on small instances."""

import json
import os

import pytest

from deliverysim.cli import build_parser, main

TINY_GRID = "0:200:2,0:2000:2,0:300:2,0:1:2"


def run_cli(argv, capsys=None):
    code = main(argv)
    return code


def test_run_smoke(tmp_path):
    out = tmp_path / "x"
    code = main([
        "run", "--config", "default", "--strategy", "SW",
        "--runs", "1", "--periods", "1", "--seed", "42", "--out", str(out),
    ])
    assert code == 0
    for name in ("timeseries.csv", "summary.csv", "boxplot.csv", "correlation.csv",
                 "runs.json", "manifest.json"):
        assert (out / name).exists()


def test_bad_strategy_names_valid_set(capsys):
    code = main(["run", "--strategy", "BOGUS", "--out", "/tmp/nope"])
    assert code == 1
    err = capsys.readouterr().err
    for name in ("GMV", "SW", "HYBRID"):
        assert name in err


def test_unknown_flag_is_usage_error(capsys):
    code = main(["run", "--frobnicate", "1", "--out", "/tmp/nope"])
    assert code == 1


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 1


def test_help_lists_flags_with_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--config", "--profile", "--strategy", "--runs", "--periods",
                 "--seed", "--out", "--format", "--jobs"):
        assert flag in text
    assert "HYBRID" in text  # default strategy surfaced


def test_dp_help_lists_solver_flags(capsys):
    with pytest.raises(SystemExit):
        main(["dp", "--help"])
    text = capsys.readouterr().out
    for flag in ("--tol", "--max-iter", "--grid", "--objective", "--check-theorems"):
        assert flag in text


def test_static_subcommand_record(tmp_path, capsys):
    out = tmp_path / "static.json"
    code = main(["static", "--objective", "GMV,SW", "--out", str(out)])
    assert code == 0
    record = json.loads(out.read_text())
    assert record["params"]["theta"] == 100.0
    assert record["optima"]["GMV"]["controls"]["delivery_fee"] == pytest.approx(2.0)
    assert record["lemma_orderings"]["sw_dominance"] is True


def test_dp_subcommand_with_theorems(tmp_path):
    out = tmp_path / "dp.json"
    code = main([
        "dp", "--grid", TINY_GRID, "--objective", "GMV,SW",
        "--check-theorems", "--tol", "1e-6", "--out", str(out),
    ])
    assert code == 0
    record = json.loads(out.read_text())
    assert record["theorem_a1"]["dominance_holds"] is True
    assert record["theorem_a2"]["classification"] in (
        "PARETO_IMPROVEMENT", "KALDOR_HICKS"
    )
    assert record["objectives"]["SW"]["final_residual"] <= 1e-6


def test_dp_bad_grid_spec(capsys):
    assert main(["dp", "--grid", "1:2"]) == 1
    assert main(["dp", "--grid", "a:b:c,0:1:2,0:1:2,0:1:2"]) == 1


def test_dp_nonconvergence_exit_code(tmp_path, capsys):
    code = main([
        "dp", "--grid", TINY_GRID, "--objective", "GMV", "--max-iter", "2",
        "--out", str(tmp_path / "never.json"),
    ])
    assert code == 2
    assert "dynamic_program" in capsys.readouterr().err


def test_dp_value_dump(tmp_path):
    code = main([
        "dp", "--grid", TINY_GRID, "--objective", "GMV", "--dump-values",
        "--out", str(tmp_path / "dp.json"), "--out-dir", str(tmp_path),
    ])
    assert code == 0
    dump = (tmp_path / "dp_values_gmv.csv").read_text().splitlines()
    assert dump[0] == "R,C,W,Phi,value,alpha,D,p"
    assert len(dump) == 1 + 16


def test_seed_determines_output_bytes(tmp_path):
    args = ["run", "--strategy", "GMV,SW", "--runs", "2", "--periods", "10",
            "--seed", "7", "--format", "csv"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("timeseries.csv", "summary.csv", "boxplot.csv", "correlation.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_env_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("PLATFORM_SIM_SEED", "1234")
    main(["run", "--strategy", "SW", "--runs", "1", "--periods", "5",
          "--out", str(tmp_path / "env")])
    manifest = json.loads((tmp_path / "env" / "manifest.json").read_text())
    assert manifest["seed"] == 1234
    # explicit flag wins over the environment
    main(["run", "--strategy", "SW", "--runs", "1", "--periods", "5",
          "--seed", "9", "--out", str(tmp_path / "flag")])
    manifest = json.loads((tmp_path / "flag" / "manifest.json").read_text())
    assert manifest["seed"] == 9


def test_env_seed_must_be_integer(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PLATFORM_SIM_SEED", "twelve")
    code = main(["run", "--strategy", "SW", "--runs", "1", "--periods", "1",
                 "--out", str(tmp_path / "bad")])
    assert code == 1


def test_report_subcommand_round_trip(tmp_path):
    out = tmp_path / "first"
    main(["run", "--strategy", "SW", "--runs", "2", "--periods", "8",
          "--seed", "3", "--out", str(out)])
    redo = tmp_path / "second"
    code = main(["report", str(out / "runs.json"), "--out", str(redo)])
    assert code == 0
    assert (redo / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()
    assert (redo / "timeseries.csv").read_bytes() == (out / "timeseries.csv").read_bytes()


def test_bad_config_file_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    bad2 = tmp_path / "bad2.json"
    bad2.write_text(json.dumps({"MIN_COMMISSION": 0.9}))
    assert main(["run", "--config", str(bad2), "--out", str(tmp_path / "o2")]) == 1


def test_profile_flag(tmp_path):
    out = tmp_path / "prof"
    code = main(["run", "--strategy", "SW", "--runs", "1", "--periods", "3",
                 "--profile", "paper-experiment", "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    # the profile sets scale defaults; explicit --periods still wins
    assert manifest["periods"] == 3
    assert manifest["config"]["DEFAULT_RUNS"] == 50


def test_parser_is_buildable():
    parser = build_parser()
    assert parser.prog == "deliverysim"
