"""Experiment drivers: configuration, data generation, MAP/MCMC runs,
prediction, metrics and artifact files.

Reproduces the time-series and image-deblurring studies at desk scale.
Every run is deterministic given (config, seed); repeat runs derive seeds
``seed + i`` and aggregate the relative error of the posterior mean (REM).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import fileio
from .errors import InvalidInputError, QepError
from .inference import (
    CoefficientLatent,
    DirectLatent,
    InferenceProblem,
    WhitenedBesovLatent,
    besov_unwhiten,
    config_hash,
    map_estimate,
    run_mcmc,
    save_chain,
)
from .kernels import KernelSpec, gram
from .models import (
    gaussian_loglik,
    gaussian_loglik_grad,
    linear_loglik,
    linear_loglik_grad,
    motion_blur_operator,
    synthesize_linear_observation,
    synthesize_regression,
)
from .processes import (
    BesovPrior,
    QepPrior,
    cosine_design_matrix,
    kl_coefficient_prior,
    prior_draw,
    prior_field_distribution,
    qep_predict,
)

EXPERIMENTS = ("ts_step", "ts_turning", "ts_predict", "image_deblur")
PRIORS = ("gp", "qep", "besov")
OUTPUT_DIR_ENV = "QEP_OUTPUT_DIR"

# Paper-stated turning-series noise ratios on [0,1] and (1,2].
TURNING_RATIO_HEAD = 0.01
TURNING_RATIO_TAIL = 0.07


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; every field maps to a CLI flag and a
    ``key=value`` line of the config-file format."""

    experiment: str = "ts_step"
    prior: str = "qep"
    q: float = 1.0
    # kernel (GP / Q-EP)
    kernel_family: str = "matern"
    variance: float = 1.0
    lengthscale: float = 0.5
    nu: float = 0.5
    exponent: float = 1.0
    # Besov series
    kappa: float = 1.0
    besov_smoothness: float = 2.0
    # grids
    n: int = 200
    rows: int = 32
    cols: int = 32
    l_trunc: int = 2000
    kl_independent: bool = False
    # forward model / noise
    blur_length: int = 5
    blur_angle: float = 0.0
    noise_ratio: float = -1.0      # <0 means per-experiment default
    noise_norm: str = "auto"       # rms | l2 | max | auto (per experiment)
    # inference
    n_samples: int = 10000
    n_burnin: int = 5000
    map_max_iter: int = 5000
    map_tol: float = 1e-5
    run_map: str = "auto"          # yes | no | auto
    run_mcmc: str = "auto"
    bands_level: float = 0.95
    bands_draws: int = 2000
    # bookkeeping
    seed: int = 0
    repeats: int = 1
    jobs: int = 1
    n_prior_draws: int = 5
    output_dir: str = ""

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {self.experiment!r}")
        if self.prior not in PRIORS:
            raise InvalidInputError(f"unknown prior {self.prior!r}")
        if self.prior == "gp" and self.q != 2.0:
            object.__setattr__(self, "q", 2.0)
        if self.q <= 0:
            raise InvalidInputError("q must be positive")
        if self.repeats < 1 or self.jobs < 1:
            raise InvalidInputError("repeats and jobs must be >= 1")
        if self.noise_norm not in ("auto", "rms", "l2", "max"):
            raise InvalidInputError(f"unknown noise_norm {self.noise_norm!r}")
        if self.run_map not in ("auto", "yes", "no") or self.run_mcmc not in ("auto", "yes", "no"):
            raise InvalidInputError("run_map / run_mcmc must be auto, yes or no")
        if not self.output_dir:
            object.__setattr__(
                self, "output_dir", os.environ.get(OUTPUT_DIR_ENV, "qep-output"))

    # -- resolved (per-experiment) settings -------------------------------

    @property
    def is_image(self) -> bool:
        return self.experiment == "image_deblur"

    def resolved_noise_norm(self) -> str:
        if self.noise_norm != "auto":
            return self.noise_norm
        # The relative-noise norm is a free convention.  For the time
        # series, rms noise is so small that all priors reduce to near
        # interpolation; scaling by the signal amplitude (max) keeps the
        # regularizers active, which is where the priors actually differ.
        return "rms" if self.is_image else "max"

    def resolved_noise_ratio(self) -> float:
        if self.noise_ratio >= 0:
            return self.noise_ratio
        return 0.05 if self.is_image else 0.015

    def do_map(self) -> bool:
        if self.run_map != "auto":
            return self.run_map == "yes"
        return True

    def do_mcmc(self) -> bool:
        if self.run_mcmc != "auto":
            return self.run_mcmc == "yes"
        return self.is_image

    def kernel(self) -> KernelSpec:
        return KernelSpec(family=self.kernel_family, variance=self.variance,
                          lengthscale=self.lengthscale, nu=self.nu,
                          exponent=self.exponent)

    def field_dim(self) -> int:
        return self.rows * self.cols if self.is_image else self.n

    def truncation(self) -> int:
        return min(self.l_trunc, self.field_dim())

    def make_prior(self):
        if self.prior == "besov":
            return BesovPrior(q=self.q, kappa=self.kappa,
                              smoothness=self.besov_smoothness,
                              domain_dim=2 if self.is_image else 1,
                              truncation=self.truncation())
        return QepPrior(kernel=self.kernel(), q=self.q)

    def stem(self, seed: int | None = None) -> str:
        s = self.seed if seed is None else seed
        return f"{self.experiment}_{self.prior}_{self.q:g}_{s}"

    def canonical(self) -> str:
        """Stable key=value serialization (also the config-file format).

        Omits ``output_dir`` and ``jobs``: where artifacts land and how many
        workers run them never changes the numbers, so they stay out of the
        config hash.
        """
        skip = {"output_dir", "jobs"}
        return "\n".join(f"{f.name}={getattr(self, f.name)}"
                         for f in fields(self) if f.name not in skip) + "\n"


def parse_config_file(path) -> dict:
    """Flat ``key=value`` text; blank lines and # comments ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build a config from string-valued mappings (file or CLI flags)."""
    kwargs = {}
    by_name = {f.name: f for f in fields(ExperimentConfig)}
    for key, raw in values.items():
        if key not in by_name:
            raise InvalidInputError(f"unknown config key {key!r}")
        if raw is None:
            continue
        target = by_name[key].type
        if isinstance(raw, str):
            if target == "int":
                kwargs[key] = int(raw)
            elif target == "float":
                kwargs[key] = float(raw)
            elif target == "bool":
                kwargs[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                kwargs[key] = raw
        else:
            kwargs[key] = raw
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# ground truth generators
# ---------------------------------------------------------------------------


def gen_step_series(n: int):
    """Evenly spaced grid on [0, 2] and the piecewise-constant trajectory
    {1 on [0,1], 0.5 on (1,1.5], 2 on (1.5,2]}."""
    if n < 2:
        raise InvalidInputError("need at least two grid points")
    t = np.linspace(0.0, 2.0, n)
    u = np.where(t <= 1.0, 1.0, np.where(t <= 1.5, 0.5, 2.0))
    return t, u


def gen_turning_series(n: int):
    """Evenly spaced grid on [0, 2] and the piecewise-linear trajectory
    {1.5t, 3.5 - 2t, 3t - 4} with sharp turnings at t = 1 and t = 1.5."""
    if n < 2:
        raise InvalidInputError("need at least two grid points")
    t = np.linspace(0.0, 2.0, n)
    u = np.where(t <= 1.0, 1.5 * t, np.where(t <= 1.5, 3.5 - 2.0 * t, 3.0 * t - 4.0))
    return t, u


def blocks_image(rows: int, cols: int) -> np.ndarray:
    """Piecewise-constant rectangles of distinct gray levels on a flat
    background; the synthetic stand-in for a natural test image."""
    if rows < 8 or cols < 8:
        raise InvalidInputError("blocks image needs at least 8x8 pixels")
    img = np.full((rows, cols), 0.2)

    def r(frac, size):
        return int(round(frac * size))

    img[r(0.125, rows):r(0.4375, rows), r(0.15625, cols):r(0.46875, cols)] = 0.8
    img[r(0.5625, rows):r(0.875, rows), r(0.09375, cols):r(0.375, cols)] = 0.5
    img[r(0.25, rows):r(0.75, rows), r(0.625, cols):r(0.90625, cols)] = 1.0
    return img


def edge_mask(image: np.ndarray) -> np.ndarray:
    """Pixels adjacent to a value discontinuity (for uncertainty checks)."""
    img = np.asarray(image, dtype=float)
    mask = np.zeros_like(img, dtype=bool)
    dr = np.abs(np.diff(img, axis=0)) > 1e-12
    dc = np.abs(np.diff(img, axis=1)) > 1e-12
    mask[:-1][dr] = True
    mask[1:][dr] = True
    mask[:, :-1][dc] = True
    mask[:, 1:][dc] = True
    return mask


def holdout_split(n: int):
    """Train/test split for prediction: hold out the final eighth of the
    grid plus every other point of the preceding three-eighths block.

    At n = 200 this leaves 138 training points.  For n not divisible by 8
    the block sizes round down.
    """
    if n < 8:
        raise InvalidInputError("need at least 8 points to split")
    n_last = n // 8
    n_block = (3 * n) // 8
    block_end = n - n_last
    block = np.arange(block_end - n_block, block_end)
    test = np.concatenate([block[1::2], np.arange(block_end, n)])
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return np.nonzero(mask)[0], np.sort(test)


def relative_error(estimate, truth) -> float:
    """||estimate - truth|| / ||truth|| in the Euclidean norm."""
    est = np.asarray(estimate, dtype=float).ravel()
    tru = np.asarray(truth, dtype=float).ravel()
    if est.size != tru.size:
        raise InvalidInputError("length mismatch")
    denom = np.linalg.norm(tru)
    if denom == 0:
        raise InvalidInputError("zero-norm truth")
    return float(np.linalg.norm(est - tru) / denom)


# ---------------------------------------------------------------------------
# problem assembly
# ---------------------------------------------------------------------------


def _ts_grid01(t: np.ndarray) -> np.ndarray:
    # Besov basis lives on the unit interval; map the [0,2] grid onto it
    return t / t.max() if t.max() > 0 else t


def _image_grid(rows: int, cols: int) -> np.ndarray:
    xs = (np.arange(rows) + 0.5) / rows
    ys = (np.arange(cols) + 0.5) / cols
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _besov_latent(config: ExperimentConfig, grid01) -> WhitenedBesovLatent:
    prior = config.make_prior()
    basis = cosine_design_matrix(prior, grid01)
    return WhitenedBesovLatent(basis=basis, gamma=prior.weights(), q=config.q)


def _besov_projection_init(latent: WhitenedBesovLatent, target: np.ndarray) -> np.ndarray:
    """Deterministic warm start: project the data onto the series basis and
    pull it back through the whitening transform."""
    coef, *_ = np.linalg.lstsq(latent.basis, target, rcond=None)
    x = np.clip(coef / latent.gamma, -30.0, 30.0)
    return besov_unwhiten(x * latent.gamma, latent.q, latent.gamma)


def _map_init(config: ExperimentConfig, latent, seed: int) -> np.ndarray:
    # small random prior draw, never exactly zero (the q<2 log-density is
    # singular at the prior mean)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA11CE]))
    return 0.1 * latent.prior_sample(rng)


@dataclass
class TsSetup:
    grid: np.ndarray
    truth: np.ndarray
    data: object
    problem: InferenceProblem
    map_init: np.ndarray


def build_ts_problem(config: ExperimentConfig, seed: int) -> TsSetup:
    gen = gen_turning_series if config.experiment == "ts_turning" else gen_step_series
    t, truth = gen(config.n)
    rng = np.random.default_rng(seed)
    if config.experiment == "ts_turning":
        ratio = np.where(t <= 1.0, TURNING_RATIO_HEAD, TURNING_RATIO_TAIL)
    else:
        ratio = config.resolved_noise_ratio()
    data = synthesize_regression(t, truth, ratio, rng,
                                 noise_norm=config.resolved_noise_norm())

    def loglik(u):
        return gaussian_loglik(data, u)

    def loglik_grad(u):
        return gaussian_loglik_grad(data, u)

    if config.prior == "besov":
        latent = _besov_latent(config, _ts_grid01(t))
        init = _besov_projection_init(latent, data.observations)
    else:
        latent = DirectLatent(prior_field_distribution(config.make_prior(), t))
        init = _map_init(config, latent, seed)
    problem = InferenceProblem(latent=latent, log_likelihood=loglik,
                               log_likelihood_grad=loglik_grad)
    return TsSetup(grid=t, truth=truth, data=data, problem=problem, map_init=init)


@dataclass
class ImageSetup:
    truth: np.ndarray            # (rows, cols)
    data: object
    problem: InferenceProblem
    map_init: np.ndarray
    mcmc_init: np.ndarray
    latent: object


def build_image_problem(config: ExperimentConfig, seed: int) -> ImageSetup:
    truth_img = blocks_image(config.rows, config.cols)
    truth = truth_img.ravel()
    operator = motion_blur_operator(config.rows, config.cols,
                                    config.blur_length, config.blur_angle)
    rng = np.random.default_rng(seed)
    data = synthesize_linear_observation(operator, truth,
                                         config.resolved_noise_ratio(), rng,
                                         noise_norm=config.resolved_noise_norm())

    def loglik(u):
        return linear_loglik(data, u)

    def loglik_grad(u):
        return linear_loglik_grad(data, u)

    if config.prior == "besov":
        latent = _besov_latent(config, _image_grid(config.rows, config.cols))
        init = _besov_projection_init(latent, data.observation)
        mcmc_init = init
    else:
        cov = gram(config.kernel(), _image_grid(config.rows, config.cols))
        lam, phi = cov.truncated_eig(config.truncation())
        latent = CoefficientLatent(
            basis=phi, prior=kl_coefficient_prior(lam, config.q,
                                                  independent=config.kl_independent))
        init = _map_init(config, latent, seed)
        # deterministic ridge start in coefficient space: skips the long
        # burn-in transient that a prior draw would need
        ap = data.operator @ phi
        m = (ap.T @ ap) / data.noise_std ** 2 + np.diag(1.0 / lam)
        mcmc_init = np.linalg.solve(m, ap.T @ data.observation / data.noise_std ** 2)
    problem = InferenceProblem(latent=latent, log_likelihood=loglik,
                               log_likelihood_grad=loglik_grad)
    return ImageSetup(truth=truth_img, data=data, problem=problem,
                      map_init=init, mcmc_init=mcmc_init, latent=latent)


# ---------------------------------------------------------------------------
# single-run drivers
# ---------------------------------------------------------------------------


class _OutputTracker:
    """Collects written artifact paths; removes them all on failure."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def discard_all(self):
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _metrics_skeleton(config: ExperimentConfig, seed: int) -> dict:
    return {
        "experiment": config.experiment,
        "prior": config.prior,
        "q": config.q,
        "seed": seed,
        "config_hash": config_hash(config.canonical()),
    }


def _check_metrics(metrics: dict) -> dict:
    for key, value in metrics.items():
        if isinstance(value, float) and not np.isfinite(value):
            raise QepError(f"non-finite metric {key}={value}")
    return metrics


def _run_ts(config: ExperimentConfig, seed: int, out: _OutputTracker) -> dict:
    setup = build_ts_problem(config, seed)
    stem = config.stem(seed)
    metrics = _metrics_skeleton(config, seed)
    fileio.write_series_csv(out.path(f"{stem}.truth.csv"),
                            {"t": setup.grid, "truth": setup.truth})
    fileio.write_series_csv(
        out.path(f"{stem}.data.csv"),
        {"t": setup.grid, "y": setup.data.observations, "sigma": setup.data.noise_std})

    if config.do_map():
        result = map_estimate(
            setup.problem, setup.map_init, max_iter=config.map_max_iter,
            tol=config.map_tol,
            trace_fn=lambda z: relative_error(setup.problem.latent.field(z), setup.truth))
        estimate = setup.problem.latent.field(result.latent)
        metrics["map_relative_error"] = relative_error(estimate, setup.truth)
        metrics["map_iterations"] = result.iterations
        metrics["map_converged"] = bool(result.converged)
        if result.warning:
            metrics["map_warning"] = result.warning
        fileio.write_series_csv(out.path(f"{stem}.map.csv"),
                                {"t": setup.grid, "estimate": estimate})
        fileio.write_columns(
            out.path(f"{stem}.map_trace.csv"),
            {"iteration": np.arange(result.objective_trace.size),
             "neg_log_posterior": result.objective_trace,
             "relative_error": result.extra_trace})

    if config.do_mcmc():
        chain = run_mcmc(setup.problem, config.n_samples, config.n_burnin, seed)
        save_chain(out.path(f"{stem}.chain.txt"), chain, config.canonical())
        if len(chain):
            fields_mat = np.array([setup.problem.latent.field(z) for z in chain.samples])
            pmean = fields_mat.mean(axis=0)
            pstd = fields_mat.std(axis=0)
            metrics["rem"] = relative_error(pmean, setup.truth)
            fileio.write_series_csv(out.path(f"{stem}.posterior_mean.csv"),
                                    {"t": setup.grid, "mean": pmean})
            fileio.write_series_csv(out.path(f"{stem}.posterior_std.csv"),
                                    {"t": setup.grid, "std": pstd})
            fileio.write_columns(
                out.path(f"{stem}.nlp_trace.csv"),
                {"iteration": np.arange(len(chain)),
                 "neg_log_posterior": chain.neg_log_posterior})
    return metrics


def _run_predict(config: ExperimentConfig, seed: int, out: _OutputTracker) -> dict:
    if config.prior == "besov":
        raise InvalidInputError(
            "the Besov series prior has no conditional prediction; use gp or qep")
    t, truth = gen_step_series(config.n)
    rng = np.random.default_rng(seed)
    data = synthesize_regression(t, truth, config.resolved_noise_ratio(), rng,
                                 noise_norm=config.resolved_noise_norm())
    train_idx, test_idx = holdout_split(config.n)
    noise_var = float(np.mean(data.noise_std[train_idx] ** 2))
    prediction = qep_predict(config.make_prior(), t[train_idx],
                             data.observations[train_idx], t[test_idx], noise_var)
    lo, hi = prediction.bands(np.random.default_rng(seed + 1),
                              n_draws=config.bands_draws, level=config.bands_level)
    stem = config.stem(seed)
    metrics = _metrics_skeleton(config, seed)
    metrics["test_relative_error"] = relative_error(prediction.mean, truth[test_idx])
    metrics["n_train"] = int(train_idx.size)
    metrics["n_test"] = int(test_idx.size)
    fileio.write_series_csv(
        out.path(f"{stem}.prediction.csv"),
        {"t": t[test_idx], "mean": prediction.mean, "lower": lo, "upper": hi,
         "truth": truth[test_idx]})
    fileio.write_series_csv(
        out.path(f"{stem}.train.csv"),
        {"t": t[train_idx], "y": data.observations[train_idx]})
    return metrics


def _run_image(config: ExperimentConfig, seed: int, out: _OutputTracker) -> dict:
    setup = build_image_problem(config, seed)
    stem = config.stem(seed)
    metrics = _metrics_skeleton(config, seed)
    rows, cols = config.rows, config.cols
    truth = setup.truth.ravel()
    fileio.write_pgm(out.path(f"{stem}.truth.pgm"), setup.truth, lo=0.0, hi=1.2)
    fileio.write_pgm(out.path(f"{stem}.observation.pgm"),
                     setup.data.observation.reshape(rows, cols), lo=0.0, hi=1.2)
    metrics["observation_rem"] = relative_error(setup.data.observation, truth)

    if config.do_map():
        result = map_estimate(
            setup.problem, setup.map_init, max_iter=config.map_max_iter,
            tol=config.map_tol,
            trace_fn=lambda z: relative_error(setup.problem.latent.field(z), truth))
        estimate = setup.problem.latent.field(result.latent)
        metrics["map_relative_error"] = relative_error(estimate, truth)
        metrics["map_iterations"] = result.iterations
        if result.warning:
            metrics["map_warning"] = result.warning
        fileio.write_pgm(out.path(f"{stem}.map.pgm"),
                         estimate.reshape(rows, cols), lo=0.0, hi=1.2)
        fileio.write_columns(
            out.path(f"{stem}.map_trace.csv"),
            {"iteration": np.arange(result.objective_trace.size),
             "neg_log_posterior": result.objective_trace,
             "relative_error": result.extra_trace})

    if config.do_mcmc():
        chain = run_mcmc(setup.problem, config.n_samples, config.n_burnin, seed,
                         initial=setup.mcmc_init)
        save_chain(out.path(f"{stem}.chain.txt"), chain, config.canonical())
        if len(chain):
            fsum = np.zeros(truth.size)
            fsq = np.zeros(truth.size)
            for z in chain.samples:
                u = setup.problem.latent.field(z)
                fsum += u
                fsq += u * u
            pmean = fsum / len(chain)
            pstd = np.sqrt(np.maximum(fsq / len(chain) - pmean ** 2, 0.0))
            metrics["rem"] = relative_error(pmean, truth)
            edges = edge_mask(setup.truth)
            metrics["posterior_std_min_on_edges"] = float(
                pstd.reshape(rows, cols)[edges].min())
            metrics["posterior_std_mean"] = float(pstd.mean())
            fileio.write_pgm(out.path(f"{stem}.posterior_mean.pgm"),
                             pmean.reshape(rows, cols), lo=0.0, hi=1.2)
            fileio.write_columns(out.path(f"{stem}.posterior_std.csv"),
                                 {"std": pstd})
            fileio.write_columns(
                out.path(f"{stem}.nlp_trace.csv"),
                {"iteration": np.arange(len(chain)),
                 "neg_log_posterior": chain.neg_log_posterior})
    return metrics


def _run_single(config: ExperimentConfig, seed: int) -> dict:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = _OutputTracker(out_dir)
    try:
        if config.experiment == "ts_predict":
            metrics = _run_predict(config, seed, tracker)
        elif config.is_image:
            metrics = _run_image(config, seed, tracker)
        else:
            metrics = _run_ts(config, seed, tracker)
        metrics = _check_metrics(metrics)
        path = tracker.path(f"{config.stem(seed)}.metrics.json")
        fileio.write_metrics(path, metrics)
        return metrics
    except Exception:
        tracker.discard_all()
        raise


def _run_single_star(args):
    return _run_single(*args)


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the configured experiment; with repeats > 1, aggregate REM stats.

    Returns the metrics mapping of the primary seed, augmented with
    ``rem_mean`` / ``rem_std`` over repeats when several are requested.
    """
    seeds = [config.seed + i for i in range(config.repeats)]
    if config.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            all_metrics = list(pool.map(_run_single_star,
                                        [(config, s) for s in seeds]))
    else:
        all_metrics = [_run_single(config, s) for s in seeds]
    summary = dict(all_metrics[0])
    if len(seeds) > 1:
        key = "rem" if "rem" in all_metrics[0] else "map_relative_error"
        vals = np.array([m[key] for m in all_metrics if key in m])
        summary["rem_mean"] = float(vals.mean())
        summary["rem_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        summary["repeat_seeds"] = seeds
        path = Path(config.output_dir) / f"{config.stem()}.repeats.metrics.json"
        fileio.write_metrics(path, _check_metrics(summary))
    return summary


def run_sample_prior(config: ExperimentConfig) -> dict:
    """Draw seeded prior samples on the experiment grid and save them."""
    rng = np.random.default_rng(config.seed)
    if config.is_image:
        grid = _image_grid(config.rows, config.cols)
    else:
        grid = gen_step_series(config.n)[0]
    prior = config.make_prior()
    draw_grid = _ts_grid01(grid) if (config.prior == "besov" and not config.is_image) else grid
    draws = prior_draw(prior, draw_grid, rng, size=config.n_prior_draws)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{config.stem()}.prior_draws.csv"
    fileio.write_columns(str(path), {f"draw{i}": draws[i] for i in range(len(draws))})
    return {"path": str(path), "n_draws": int(draws.shape[0]),
            "grid_size": int(draws.shape[1])}


REPORT_PRIOR_ORDER = ("gp", "besov", "qep")


def run_report(config: ExperimentConfig) -> dict:
    """Aggregate per-seed metrics files into a Table-style REM report."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rems: dict[str, list[float]] = {p: [] for p in REPORT_PRIOR_ORDER}
    for path in sorted(out_dir.glob(f"{config.experiment}_*.metrics.json")):
        if path.name.endswith(".repeats.metrics.json"):
            continue
        m = fileio.read_metrics(path)
        key = "rem" if "rem" in m else "map_relative_error"
        if key in m and m.get("prior") in rems:
            rems[m["prior"]].append(float(m[key]))
    header = f"{'':10s}" + "".join(f"{p.upper():>12s}" for p in REPORT_PRIOR_ORDER)
    rem_row = f"{'REM':10s}"
    std_row = f"{'Std(REM)':10s}"
    stats = {}
    for p in REPORT_PRIOR_ORDER:
        vals = np.array(rems[p])
        if vals.size:
            mean = float(vals.mean())
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            rem_row += f"{mean:>12.4f}"
            std_row += f"{std:>12.2e}"
            stats[p] = {"rem": mean, "std_rem": std, "n_runs": int(vals.size)}
        else:
            rem_row += f"{'-':>12s}"
            std_row += f"{'-':>12s}"
    text = "\n".join([header, rem_row, std_row]) + "\n"
    path = out_dir / f"{config.experiment}_report.txt"
    path.write_text(text)
    return {"path": str(path), "table": text, "stats": stats}


def config_to_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
