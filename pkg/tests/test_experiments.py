import json
from pathlib import Path

import numpy as np
import pytest

from qep.errors import InvalidInputError
from qep import fileio
from qep.experiments import (
    ExperimentConfig,
    blocks_image,
    config_from_mapping,
    edge_mask,
    gen_step_series,
    gen_turning_series,
    holdout_split,
    parse_config_file,
    relative_error,
    run_experiment,
    run_report,
    run_sample_prior,
)


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------


def test_step_series_values():
    t, u = gen_step_series(201)  # includes t = 0.5, 1.25, 1.75 exactly
    lookup = dict(zip(np.round(t, 6), u))
    assert lookup[0.5] == 1.0
    assert lookup[1.25] == 0.5
    assert lookup[1.75] == 2.0
    # boundary convention: t = 1 belongs to the first (closed) piece
    assert lookup[1.0] == 1.0


def test_turning_series_values():
    t, u = gen_turning_series(201)
    lookup = dict(zip(np.round(t, 6), u))
    assert lookup[1.0] == pytest.approx(1.5)
    assert lookup[1.5] == pytest.approx(0.5)
    assert lookup[2.0] == pytest.approx(2.0)
    # continuity at the turning points
    assert abs(lookup[1.0] - (3.5 - 2 * 1.0)) <= 1e-12
    assert abs(lookup[1.5] - (3 * 1.5 - 4)) <= 1e-12


def test_blocks_image_levels():
    img = blocks_image(32, 32)
    assert img.shape == (32, 32)
    assert set(np.unique(img)) == {0.2, 0.5, 0.8, 1.0}
    edges = edge_mask(img)
    assert edges.any()
    assert not edges.all()


# ---------------------------------------------------------------------------
# holdout split
# ---------------------------------------------------------------------------


def test_holdout_split_paper_size():
    train, test = holdout_split(200)
    assert train.size == 138
    assert test.size == 62


def test_holdout_split_partition():
    for n in (16, 200, 97):
        train, test = holdout_split(n)
        joined = np.sort(np.concatenate([train, test]))
        assert np.array_equal(joined, np.arange(n))
        assert np.intersect1d(train, test).size == 0


def test_holdout_split_small_n_rule():
    # documented rounding rule: last floor(n/8) points plus every other
    # point (odd offsets) of the preceding floor(3n/8)-point block
    train, test = holdout_split(16)
    assert test.tolist() == [9, 11, 13, 14, 15]
    assert train.size == 11


def test_holdout_structure_at_200():
    train, test = holdout_split(200)
    # the final eighth is entirely held out
    assert np.all(np.isin(np.arange(175, 200), test))
    # the preceding 3/8 block alternates between train and test
    block = np.arange(100, 175)
    held = np.isin(block, test)
    assert held.sum() == 37
    assert not held[0] and held[1]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def test_relative_error_basics(rng):
    truth = rng.standard_normal(10)
    assert relative_error(truth, truth) == 0.0
    assert relative_error(np.zeros(10), truth) == pytest.approx(1.0)
    assert relative_error(2 * truth, truth) == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        relative_error(truth, np.zeros(10))


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def test_config_defaults_match_stated_values():
    cfg = ExperimentConfig()
    assert cfg.n == 200
    assert cfg.q == 1.0
    assert cfg.variance == 1.0 and cfg.lengthscale == 0.5
    assert cfg.nu == 0.5 and cfg.exponent == 1.0
    assert cfg.l_trunc == 2000
    assert cfg.n_samples == 10000 and cfg.n_burnin == 5000


def test_config_gp_forces_q2():
    cfg = ExperimentConfig(prior="gp", q=1.0)
    assert cfg.q == 2.0


def test_resolved_noise_defaults():
    assert ExperimentConfig(experiment="ts_step").resolved_noise_ratio() == 0.015
    assert ExperimentConfig(experiment="image_deblur").resolved_noise_ratio() == 0.05
    assert ExperimentConfig(experiment="image_deblur").resolved_noise_norm() == "rms"
    assert ExperimentConfig(experiment="ts_step",
                            noise_norm="l2").resolved_noise_norm() == "l2"


def test_config_file_parsing_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nexperiment=ts_turning\nn=64\nq=1.5\n\nseed=3\n")
    values = parse_config_file(path)
    values.update({"seed": "7"})  # flag-style override
    cfg = config_from_mapping(values)
    assert cfg.experiment == "ts_turning"
    assert cfg.n == 64
    assert cfg.q == 1.5
    assert cfg.seed == 7


def test_config_rejects_unknown_keys():
    with pytest.raises(InvalidInputError):
        config_from_mapping({"frobnicate": "1"})


def test_config_file_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("this is not a key value line\n")
    with pytest.raises(InvalidInputError):
        parse_config_file(path)


def test_canonical_serialization_roundtrip():
    cfg = ExperimentConfig(experiment="image_deblur", prior="besov", seed=11)
    rebuilt = config_from_mapping(
        dict(line.split("=", 1) for line in cfg.canonical().strip().splitlines()))
    assert rebuilt == cfg


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def test_pgm_roundtrip(tmp_path, rng):
    img = rng.uniform(0, 1, (9, 7))
    path = tmp_path / "img.pgm"
    fileio.write_pgm(path, img)
    back = fileio.read_pgm(path)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 1.0 / 65535 * (img.max() - img.min()) + 1e-12


def test_read_binary_pgm(tmp_path):
    img = (np.arange(12).reshape(3, 4) * 20).astype(np.uint8)
    raw = b"P5\n4 3\n255\n" + img.tobytes()
    path = tmp_path / "img5.pgm"
    path.write_bytes(raw)
    back = fileio.read_pgm(path)
    assert np.array_equal(back, img)


def test_series_csv_roundtrip(tmp_path, rng):
    cols = {"t": np.linspace(0, 1, 5), "y": rng.standard_normal(5)}
    path = tmp_path / "series.csv"
    fileio.write_series_csv(path, cols)
    back = fileio.read_series_csv(path)
    assert list(back) == ["t", "y"]
    assert np.array_equal(back["y"], cols["y"])


# ---------------------------------------------------------------------------
# experiment drivers (desk scale)
# ---------------------------------------------------------------------------


def tiny_ts_config(tmp_path, **kw):
    base = dict(experiment="ts_step", prior="qep", n=48, map_max_iter=200,
                seed=1, output_dir=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


def test_ts_map_run_writes_artifacts(tmp_path):
    cfg = tiny_ts_config(tmp_path)
    metrics = run_experiment(cfg)
    assert metrics["map_relative_error"] < 0.5
    stem = cfg.stem()
    for kind in ("truth.csv", "data.csv", "map.csv", "map_trace.csv", "metrics.json"):
        assert (tmp_path / f"{stem}.{kind}").exists()
    trace = fileio.read_columns(tmp_path / f"{stem}.map_trace.csv")
    assert (np.diff(trace["neg_log_posterior"]) <= 1e-12).all()
    assert np.array_equal(trace["iteration"], np.arange(trace["iteration"].size))


def test_ts_run_deterministic(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        run_experiment(tiny_ts_config(out))
    for name in ("ts_step_qep_1_1.map.csv", "ts_step_qep_1_1.metrics.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_gp_and_qep_q2_paths_identical(tmp_path):
    out_gp = tmp_path / "gp"
    out_q2 = tmp_path / "q2"
    run_experiment(tiny_ts_config(out_gp, prior="gp"))
    run_experiment(tiny_ts_config(out_q2, prior="qep", q=2.0))
    a = (out_gp / "ts_step_gp_2_1.map.csv").read_bytes()
    b = (out_q2 / "ts_step_qep_2_1.map.csv").read_bytes()
    assert a == b


def test_besov_ts_map_runs(tmp_path):
    cfg = tiny_ts_config(tmp_path, prior="besov", l_trunc=24, map_max_iter=400)
    metrics = run_experiment(cfg)
    assert metrics["map_relative_error"] < 0.5


def test_ts_mcmc_branch_writes_chain(tmp_path):
    cfg = tiny_ts_config(tmp_path, n=24, run_mcmc="yes", run_map="no",
                         n_samples=40, n_burnin=10)
    metrics = run_experiment(cfg)
    assert "rem" in metrics and metrics["rem"] < 1.5
    chain_file = tmp_path / f"{cfg.stem()}.chain.txt"
    assert chain_file.exists()
    header = chain_file.read_text().splitlines()[0]
    assert "seed=1" in header and "config_hash=" in header


def test_predict_experiment(tmp_path):
    cfg = ExperimentConfig(experiment="ts_predict", prior="qep", n=64,
                           seed=2, output_dir=str(tmp_path))
    metrics = run_experiment(cfg)
    assert metrics["n_train"] + metrics["n_test"] == 64
    assert metrics["test_relative_error"] < 1.0
    pred = fileio.read_series_csv(tmp_path / f"{cfg.stem()}.prediction.csv")
    assert (pred["lower"] <= pred["mean"]).all()
    assert (pred["mean"] <= pred["upper"]).all()


def test_predict_rejects_besov(tmp_path):
    cfg = ExperimentConfig(experiment="ts_predict", prior="besov", n=64,
                           output_dir=str(tmp_path))
    with pytest.raises(InvalidInputError):
        run_experiment(cfg)


def test_image_experiment_desk_scale(tmp_path):
    cfg = ExperimentConfig(experiment="image_deblur", prior="qep", rows=16,
                           cols=16, l_trunc=32, n_samples=60, n_burnin=20,
                           map_max_iter=60, seed=3, output_dir=str(tmp_path))
    metrics = run_experiment(cfg)
    assert metrics["rem"] < 1.0  # beats the zero reconstruction
    assert metrics["posterior_std_min_on_edges"] > 0.0
    stem = cfg.stem()
    for kind in ("truth.pgm", "observation.pgm", "map.pgm", "posterior_mean.pgm",
                 "posterior_std.csv", "chain.txt", "metrics.json"):
        assert (tmp_path / f"{stem}.{kind}").exists()


def test_failed_run_removes_partial_outputs(tmp_path):
    # force a failure after artifacts start to be written: blur_length too
    # large for the image triggers a validation error in the forward model
    cfg = ExperimentConfig(experiment="image_deblur", prior="qep", rows=16,
                           cols=16, blur_length=17, output_dir=str(tmp_path))
    with pytest.raises(InvalidInputError):
        run_experiment(cfg)
    assert list(tmp_path.glob("image_deblur_*")) == []


def test_repeats_aggregate_rem(tmp_path):
    cfg = tiny_ts_config(tmp_path, n=24, repeats=3, run_mcmc="yes", run_map="no",
                         n_samples=30, n_burnin=10)
    summary = run_experiment(cfg)
    assert "rem_mean" in summary and "rem_std" in summary
    assert summary["repeat_seeds"] == [1, 2, 3]
    for s in (1, 2, 3):
        assert (tmp_path / f"ts_step_qep_1_{s}.metrics.json").exists()


def test_parallel_repeats_match_sequential(tmp_path):
    seq = run_experiment(tiny_ts_config(tmp_path / "seq", repeats=2))
    par = run_experiment(tiny_ts_config(tmp_path / "par", repeats=2, jobs=2))
    assert seq["rem_mean"] == par["rem_mean"]
    a = (tmp_path / "seq" / "ts_step_qep_1_2.map.csv").read_bytes()
    b = (tmp_path / "par" / "ts_step_qep_1_2.map.csv").read_bytes()
    assert a == b


def test_sample_prior_and_report(tmp_path):
    cfg = tiny_ts_config(tmp_path, n_prior_draws=3)
    out = run_sample_prior(cfg)
    draws = fileio.read_columns(out["path"])
    assert len(draws) == 3

    run_experiment(tiny_ts_config(tmp_path, prior="gp"))
    run_experiment(tiny_ts_config(tmp_path, prior="qep"))
    report = run_report(tiny_ts_config(tmp_path))
    assert "REM" in report["table"]
    assert set(report["stats"]) <= {"gp", "besov", "qep"}
    assert (tmp_path / "ts_step_report.txt").exists()


def test_metrics_json_is_sorted_and_finite(tmp_path):
    cfg = tiny_ts_config(tmp_path)
    run_experiment(cfg)
    payload = json.loads((tmp_path / f"{cfg.stem()}.metrics.json").read_text())
    assert list(payload) == sorted(payload)
    assert np.isfinite(payload["map_relative_error"])
