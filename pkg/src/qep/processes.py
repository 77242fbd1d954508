"""Function-space priors: Q-EP, GP (the q = 2 case) and the Besov series.

A process prior provides finite-grid draws and, for the kernel-based
priors, a truncated eigenexpansion (coefficient) representation and
conditional prediction.  The Besov prior is an expanded series with iid
q-exponential coefficients and power-law weights; it exposes no
prediction operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .errors import InvalidInputError
from .kernels import CovarianceMatrix, KernelSpec, gram
from .qed import QED, cov_constant, radial_sample, scale_factor

# ---------------------------------------------------------------------------
# scalar q-exponential law pi_q(u) proportional to exp(-|u|^q / 2)
# ---------------------------------------------------------------------------

_CDF_EPS = 1e-16  # saturation guard for the Gaussian-to-pi_q transport


def piq_norm_const(q: float) -> float:
    """Normalizing constant c_q = q / (2^(1 + 1/q) Gamma(1/q))."""
    return q / (2.0 ** (1.0 + 1.0 / q) * special.gamma(1.0 / q))


def piq_sample(q: float, rng: np.random.Generator, size: int | None = None):
    """Draws from pi_q: |u|^q ~ Gamma(1/q, rate 1/2), sign uniform."""
    if q <= 0:
        raise InvalidInputError("q must be positive")
    v = rng.gamma(1.0 / q, 2.0, size=size)
    sign = rng.integers(0, 2, size=size) * 2 - 1
    return sign * v ** (1.0 / q)

def piq_logpdf(x, q: float):
    return np.log(piq_norm_const(q)) - 0.5 * np.abs(x) ** q


def piq_cdf(x, q: float):
    """Distribution function of pi_q via the regularized lower gamma."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.sign(x) * special.gammainc(1.0 / q, 0.5 * np.abs(x) ** q))


def piq_ppf(p, q: float):
    """Quantile function of pi_q (inverse of :func:`piq_cdf`).

    Uses the incomplete-gamma inverse; the argument is kept strictly
    inside (0, 1) so saturated inputs map to large finite quantiles.
    """
    p = np.asarray(p, dtype=float)
    a = np.clip(np.abs(2.0 * p - 1.0), 0.0, 1.0 - _CDF_EPS)
    v = 2.0 * special.gammaincinv(1.0 / q, a)
    return np.sign(p - 0.5) * v ** (1.0 / q)


# ---------------------------------------------------------------------------
# prior definitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QepPrior:
    """Kernel-based q-exponential process prior; q = 2 gives the GP."""

    kernel: KernelSpec
    q: float = 1.0
    jitter: float | None = None

    def __post_init__(self):
        if self.q <= 0:
            raise InvalidInputError("q must be positive")

    @property
    def tag(self) -> str:
        return "gp" if self.q == 2.0 else "qep"


def gp_prior(kernel: KernelSpec, jitter: float | None = None) -> QepPrior:
    """Gaussian process prior as the exact q = 2 member of the family."""
    return QepPrior(kernel=kernel, q=2.0, jitter=jitter)


@dataclass(frozen=True)
class BesovPrior:
    """Series prior sum_l gamma_l u_l phi_l with u_l iid pi_q.

    Weights gamma_l = kappa^(-1/q) l^(-(smoothness/domain_dim + 1/2 - 1/q)).
    The basis is the Fourier cosine family phi_0 = sqrt(2),
    phi_l(x) = cos(pi l x) on the unit interval (tensorized and ordered by
    total frequency for domain_dim = 2); grids must be supplied in
    coordinates normalized to [0, 1]^domain_dim.
    """

    q: float = 1.0
    kappa: float = 1.0
    smoothness: float = 2.0
    domain_dim: int = 1
    truncation: int = 2000
    basis: str = "fourier_cosine"

    def __post_init__(self):
        if self.q <= 0 or self.kappa <= 0 or self.smoothness <= 0:
            raise InvalidInputError("q, kappa and smoothness must be positive")
        if self.domain_dim not in (1, 2):
            raise InvalidInputError("domain_dim must be 1 or 2")
        if self.truncation < 1:
            raise InvalidInputError("truncation must be >= 1")
        if self.basis != "fourier_cosine":
            raise InvalidInputError(f"unknown basis {self.basis!r}")
        if self.decay_exponent <= 0:
            raise InvalidInputError(
                "weights must decay: need smoothness/domain_dim + 1/2 - 1/q > 0")

    @property
    def decay_exponent(self) -> float:
        return self.smoothness / self.domain_dim + 0.5 - 1.0 / self.q

    @property
    def tag(self) -> str:
        return "besov"

    def weights(self, count: int | None = None) -> np.ndarray:
        """gamma_l for l = 1..count (decreasing, positive)."""
        count = count or self.truncation
        ell = np.arange(1, count + 1, dtype=float)
        return self.kappa ** (-1.0 / self.q) * ell ** (-self.decay_exponent)


ProcessPrior = Union[QepPrior, BesovPrior]


# ---------------------------------------------------------------------------
# cosine bases on the unit interval / square
# ---------------------------------------------------------------------------


def _cos_1d(k: int, x: np.ndarray) -> np.ndarray:
    if k == 0:
        return np.full_like(x, np.sqrt(2.0))
    return np.cos(np.pi * k * x)


def frequency_pairs(count: int) -> list[tuple[int, int]]:
    """First ``count`` 2-d frequencies ordered by total frequency, then by
    the first index."""
    pairs = []
    total = 0
    while len(pairs) < count:
        for i in range(total + 1):
            pairs.append((i, total - i))
            if len(pairs) == count:
                break
        total += 1
    return pairs


def cosine_design_matrix(prior: BesovPrior, grid) -> np.ndarray:
    """Basis functions evaluated on the grid, one column per series term.

    1-d grids are shape (n,) or (n, 1); 2-d grids are (n, 2).  Coordinates
    are expected in [0, 1]^domain_dim.
    """
    pts = np.asarray(grid, dtype=float)
    if prior.domain_dim == 1:
        x = pts.ravel()
        return np.column_stack([_cos_1d(k, x) for k in range(prior.truncation)])
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError("2-d Besov prior needs an (n, 2) grid")
    cols = [
        _cos_1d(i, pts[:, 0]) * _cos_1d(j, pts[:, 1])
        for i, j in frequency_pairs(prior.truncation)
    ]
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# draws
# ---------------------------------------------------------------------------


def _canonical_order(pts: np.ndarray) -> np.ndarray:
    # sort points lexicographically so draws are exchangeable under
    # permutations of the input grid (same seed, permuted output)
    return np.lexsort(tuple(pts[:, k] for k in reversed(range(pts.shape[1]))))


def prior_field_distribution(prior: QepPrior, grid) -> QED:
    """Finite-grid law of a kernel prior: scaled q-ED(0, Gram(grid))."""
    cov = gram(prior.kernel, grid, jitter=prior.jitter)
    return QED(np.zeros(cov.dim), cov, q=prior.q, scaled=True)


def prior_draw(prior: ProcessPrior, grid, rng: np.random.Generator,
               size: int | None = None) -> np.ndarray:
    """Sample field values on a grid from any of the three priors."""
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise InvalidInputError("empty grid")
    if isinstance(prior, BesovPrior):
        design = cosine_design_matrix(prior, grid)
        coef = piq_sample(prior.q, rng, size=(size or 1, prior.truncation))
        out = (prior.weights() * coef) @ design.T
        return out[0] if size is None else out
    order = _canonical_order(pts)
    dist = prior_field_distribution(prior, pts[order])
    draws = np.atleast_2d(dist.sample(rng, size=size or 1))
    out = np.empty_like(draws)
    out[:, order] = draws
    return out[0] if size is None else out


# ---------------------------------------------------------------------------
# truncated coefficient (Karhunen-Loeve style) representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndependentCoefficientPrior:
    """Coefficients z_l independent with z_l / sqrt(lambda_l) ~ 1-d q-ED(0, 1).

    The comparison variant of the expansion: fully independent coordinates
    rather than the jointly elliptical vector (which is uncorrelated but
    not independent).
    """

    variances: np.ndarray
    q: float

    @property
    def dim(self) -> int:
        return self.variances.size

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = size or 1
        r = radial_sample(1, self.q, rng, size=(n, self.dim))
        sign = rng.integers(0, 2, size=(n, self.dim)) * 2 - 1
        out = np.sqrt(self.variances) * r * sign
        return out[0] if size is None else out

    def logpdf(self, z) -> float:
        x = np.abs(np.asarray(z, dtype=float)) / np.sqrt(self.variances)
        # 1-d member of the family: log p = log(q/2) - log(2 pi)/2
        #   + (q/2 - 1) log|x| - |x|^q / 2, plus the scale Jacobian
        terms = (np.log(self.q / 2.0) - 0.5 * np.log(2.0 * np.pi)
                 + (self.q / 2.0 - 1.0) * np.log(np.maximum(x, 1e-300))
                 - 0.5 * x ** self.q - 0.5 * np.log(self.variances))
        return float(terms.sum())


def kl_coefficient_prior(eigenvalues, q: float, independent: bool = False):
    """Prior on truncated-expansion coefficients with Var ~ eigenvalues.

    Default is the jointly elliptical scaled q-ED(0, diag(lambda)) that the
    process restriction implies; ``independent=True`` returns the fully
    independent variant for comparison.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise InvalidInputError("eigenvalues must be a nonempty vector")
    if (lam <= 0).any():
        raise InvalidInputError("eigenvalues must be strictly positive")
    if independent:
        return IndependentCoefficientPrior(lam, q)
    return QED(np.zeros(lam.size), CovarianceMatrix(np.diag(lam), jitter=0.0),
               q=q, scaled=True)


def reconstruct_field(eigenvectors: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """Field values sum_l z_l phi_l on the grid underlying the eigenvectors."""
    return eigenvectors @ coefficients


# ---------------------------------------------------------------------------
# prediction (kernel priors only)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionResult:
    """Predictive law at test points.

    ``mean`` is the conditional mean (identical for every q); ``cov`` is
    the covariance-constant-adjusted conditional covariance.  ``bands``
    draws from the conditional distribution and returns pointwise
    empirical quantile bands.
    """

    mean: np.ndarray
    cov: np.ndarray
    conditional: QED
    scale: float

    def __iter__(self):
        return iter((self.mean, self.cov))

    def bands(self, rng: np.random.Generator, n_draws: int = 2000,
              level: float = 0.95):
        draws = self.scale * self.conditional.sample(rng, size=n_draws)
        alpha = 0.5 * (1.0 - level)
        return (np.quantile(draws, alpha, axis=0),
                np.quantile(draws, 1.0 - alpha, axis=0))


def qep_predict(prior: QepPrior, train_points, train_values, test_points,
                noise_var: float = 0.0) -> PredictionResult:
    """Condition the process on noisy training values at held-out points.

    Builds the joint Gram over test + train points, adds ``noise_var`` to
    the train block diagonal and applies the conditional-distribution
    formulas.  The predictive mean coincides with the GP formula for every
    q; the predictive covariance carries the q-dependent covariance
    constant of the conditional law.
    """
    if not isinstance(prior, QepPrior):
        raise InvalidInputError(
            "conditional prediction needs a kernel prior; the Besov series "
            "prior has no natural prediction rule")
    if noise_var < 0:
        raise InvalidInputError("noise_var must be nonnegative")
    test = np.asarray(test_points, dtype=float)
    train = np.asarray(train_points, dtype=float)
    if test.ndim == 1:
        test = test[:, None]
    if train.ndim == 1:
        train = train[:, None]
    if test.shape[0] == 0:
        raise InvalidInputError("no test points to predict at")
    if train.shape[0] == 0:
        raise InvalidInputError("no training points to condition on")
    y = np.asarray(train_values, dtype=float)
    if y.size != train.shape[0]:
        raise InvalidInputError("train_values length mismatch")

    m, k = test.shape[0], train.shape[0]
    joint = gram(prior.kernel, np.vstack([test, train]), jitter=prior.jitter)
    base = joint.base.copy()
    base[m:, m:] += noise_var * np.eye(k)
    dist = QED(np.zeros(m + k), CovarianceMatrix(base, jitter=joint.jitter),
               q=prior.q, scaled=True)
    cond = dist.conditional(np.arange(m, m + k), y)
    a = dist.scale
    const = cov_constant(m, prior.q, scaled=False)
    return PredictionResult(mean=a * cond.mean,
                            cov=a * a * const * cond.cov.entries,
                            conditional=cond, scale=a)


def process_scale(d: int, q: float) -> float:
    """Scale factor applied by the process restriction at dimension d."""
    return scale_factor(d, q)
