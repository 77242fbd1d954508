import json

import pytest

from qep.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_sample_prior_verb(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "sample-prior", "--experiment", "ts_step", "--prior", "besov",
        "--n", "32", "--l-trunc", "16", "--n-prior-draws", "2",
        "--output-dir", str(tmp_path))
    assert code == 0, err
    body = json.loads(out)
    assert body["n_draws"] == 2


def test_fit_map_verb_and_exit_code(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "fit-map", "--experiment", "ts_step", "--prior", "gp",
        "--n", "40", "--map-max-iter", "120", "--output-dir", str(tmp_path))
    assert code == 0, err
    body = json.loads(out)
    assert body["metrics"]["map_relative_error"] < 0.5


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("experiment=ts_step\nprior=gp\nn=40\nmap_max_iter=120\n"
                   f"output_dir={tmp_path}\nseed=1\n")
    code, out, _ = run_cli(capsys, "fit-map", "--config", str(cfg), "--seed", "5")
    assert code == 0
    assert json.loads(out)["metrics"]["seed"] == 5


def test_invalid_config_fails_with_structured_stderr(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "fit-map", "--experiment", "bogus", "--output-dir", str(tmp_path))
    assert code == 1
    assert out == ""
    diag = json.loads(err)
    assert diag["error"] == "request_failed"
    assert diag["status"] == 400


def test_missing_config_file_fails(tmp_path, capsys):
    code, _, err = run_cli(capsys, "fit-map", "--config", str(tmp_path / "none.cfg"))
    assert code == 2
    assert json.loads(err)["error"] == "FileNotFoundError"


def test_cli_rerun_is_byte_identical(tmp_path, capsys):
    out_dir = tmp_path / "runs"
    args = ("fit-map", "--experiment", "ts_step", "--prior", "qep", "--n", "48",
            "--map-max-iter", "150", "--seed", "9", "--output-dir", str(out_dir))
    code, first_out, _ = run_cli(capsys, *args)
    assert code == 0
    artifacts = {p.name: p.read_bytes() for p in out_dir.iterdir()}
    code, second_out, _ = run_cli(capsys, *args)
    assert code == 0
    assert first_out == second_out
    for p in out_dir.iterdir():
        assert p.read_bytes() == artifacts[p.name]


def test_output_dir_env_default(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QEP_OUTPUT_DIR", str(tmp_path / "envout"))
    code, out, _ = run_cli(capsys, "sample-prior", "--experiment", "ts_step",
                           "--prior", "qep", "--n", "16", "--n-prior-draws", "1")
    assert code == 0
    assert str(tmp_path / "envout") in json.loads(out)["path"]


def test_report_verb(tmp_path, capsys):
    run_cli(capsys, "fit-map", "--experiment", "ts_step", "--prior", "gp",
            "--n", "40", "--map-max-iter", "100", "--output-dir", str(tmp_path))
    code, out, _ = run_cli(capsys, "report", "--experiment", "ts_step",
                           "--output-dir", str(tmp_path))
    assert code == 0
    assert "REM" in json.loads(out)["table"]


def test_serve_is_registered():
    from qep.cli import build_parser
    parser = build_parser()
    # all six workflow verbs plus serve
    text = parser.format_help()
    for verb in ("sample-prior", "fit-map", "run-mcmc", "predict", "deblur",
                 "report", "serve"):
        assert verb in text
