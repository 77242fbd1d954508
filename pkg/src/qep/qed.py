"""The consistent multivariate q-exponential distribution.

Density, exact sampling via the radial-spherical stochastic representation,
moments, the scaled variant used by the process definition, and the
conditional distribution used for prediction.  Setting q = 2 recovers the
multivariate normal exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidInputError, NumericalError
from .kernels import CovarianceMatrix

# For q < 2 the log-density term (q/2 - 1)(d/2) log r diverges to +inf as
# r -> 0.  r is floored at R_FLOOR_REL * d when evaluating the density and
# its gradient; inside the floored region the log term is constant and its
# gradient is taken to be zero.
R_FLOOR_REL = 1e-12


def scale_factor(d: int, q: float) -> float:
    """d**(1/2 - 1/q), the scaling that gives the process a finite
    asymptotic covariance.  Equals 1 when q = 2 or d = 1."""
    return float(d) ** (0.5 - 1.0 / q)


def moment_radial(d: int, q: float, k: float) -> float:
    """k-th moment of the radial variable R: 2^(k/q) Gamma(d/2 + k/q) / Gamma(d/2).

    Computed in log space.  For k = q this is exactly d (the chi-square mean).
    """
    if d < 1 or q <= 0 or k < 0:
        raise InvalidInputError("need d >= 1, q > 0, k >= 0")
    with np.errstate(over="ignore"):
        out = np.exp((k / q) * np.log(2.0) + gammaln(d / 2 + k / q) - gammaln(d / 2))
    if not np.isfinite(out):
        raise NumericalError(f"moment overflowed for d={d}, q={q}, k={k}")
    return float(out)


def cov_constant(d: int, q: float, scaled: bool = False) -> float:
    """Factor c with Cov(u) = c * C for a q-exponential vector.

    Unscaled: 2^(2/q) Gamma(d/2 + 2/q) / (d Gamma(d/2)); the scaled variant
    multiplies by d^(1 - 2/q) and tends to 1 as d grows.  Exactly 1 for q = 2.
    """
    c = moment_radial(d, q, 2.0) / d
    if scaled:
        c *= float(d) ** (1.0 - 2.0 / q)
    return c


def sphere_sample(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draws from the unit sphere in R^d (normalized Gaussians)."""
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    z = rng.standard_normal((size or 1, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z[0] if size is None else z


def radial_sample(d: int, q: float, rng: np.random.Generator,
                  size: int | None = None) -> np.ndarray | float:
    """Radial variable R with R^q ~ chi-square(d), via a Gamma(d/2, scale=2)
    generator and a log-space power."""
    g = rng.gamma(d / 2.0, 2.0, size=size)
    r = np.exp(np.log(g) / q)
    return r


@dataclass(frozen=True)
class QED:
    """Multivariate q-exponential distribution q-ED(mean, cov) with shape q.

    ``scaled`` applies the d^(1/2 - 1/q) change of scale (around the mean)
    used by the process definition; process code always sets it.
    """

    mean: np.ndarray
    cov: CovarianceMatrix
    q: float = 2.0
    scaled: bool = False

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "mean", mean)
        if self.q <= 0:
            raise InvalidInputError("q must be positive")
        if mean.ndim != 1 or mean.size != self.cov.dim:
            raise InvalidInputError(
                f"mean length {mean.size} does not match covariance dim {self.cov.dim}")

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def scale(self) -> float:
        return scale_factor(self.dim, self.q) if self.scaled else 1.0

    # -- density ---------------------------------------------------------

    def _radius(self, u: np.ndarray) -> np.ndarray:
        """Mahalanobis-type quadratic form r(u), batched over rows."""
        dev = np.atleast_2d(u) - self.mean
        half = np.linalg.solve(self.cov.cholesky(), dev.T)
        return (half * half).sum(axis=0)

    def logpdf(self, u) -> float | np.ndarray:
        """Log density at ``u`` (one vector or a stack of row vectors).

        The scaled variant evaluates the unscaled density at the unscaled
        coordinates and adds the Jacobian term d (1/q - 1/2) log d.
        """
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        if u.shape[-1] != self.dim:
            raise InvalidInputError(f"expected vectors of length {self.dim}")
        d, q = self.dim, self.q
        w = self.mean + (np.atleast_2d(u) - self.mean) / self.scale
        r = self._radius(w)
        r_num = np.maximum(r, R_FLOOR_REL * d)
        out = (np.log(q / 2.0) - 0.5 * d * np.log(2.0 * np.pi) - 0.5 * self.cov.log_det()
               + (q / 2.0 - 1.0) * (d / 2.0) * np.log(r_num) - 0.5 * r ** (q / 2.0))
        if self.scaled:
            out = out + d * (1.0 / q - 0.5) * np.log(d)
        return float(out[0]) if single else out

    def logpdf_grad(self, u) -> np.ndarray:
        """Gradient of :meth:`logpdf` with the same r-floor convention.

        Inside the floored region the log-r term contributes no gradient
        (its floored value is constant there).
        """
        u = np.asarray(u, dtype=float)
        d, q = self.dim, self.q
        w = self.mean + (u - self.mean) / self.scale
        ci_dev = self.cov.solve(w - self.mean)
        r = float((w - self.mean) @ ci_dev)
        floor = R_FLOOR_REL * d
        r_num = max(r, floor)
        log_term = (q / 2.0 - 1.0) * (d / 2.0) / r_num if r > floor else 0.0
        coef = log_term - 0.25 * q * r_num ** (q / 2.0 - 1.0)
        return coef * 2.0 * ci_dev / self.scale

    # -- sampling --------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Exact draws mean + scale * R * L * S with R^q ~ chi-square(d)."""
        n = size or 1
        s = sphere_sample(self.dim, rng, n)
        r = np.asarray(radial_sample(self.dim, self.q, rng, n))
        u = self.mean + self.scale * r[:, None] * (s @ self.cov.cholesky().T)
        return u[0] if size is None else u

    # -- conditioning ----------------------------------------------------

    def conditional(self, observed_indices, observed_values) -> "QED":
        """Distribution of the free block given observed coordinates.

        The conditional mean and covariance follow the usual Schur
        complement formulas with the same q.  Observed values are taken in
        this distribution's own coordinates (unscaled internally if the
        distribution is scaled); the result is returned with
        ``scaled=False`` semantics and callers re-apply scaling explicitly.
        """
        idx2 = np.atleast_1d(np.asarray(observed_indices, dtype=int))
        v2 = np.atleast_1d(np.asarray(observed_values, dtype=float))
        if idx2.size == 0:
            raise InvalidInputError("no observed coordinates")
        if idx2.size != v2.size:
            raise InvalidInputError("indices and values differ in length")
        if np.unique(idx2).size != idx2.size:
            raise InvalidInputError("duplicate observed indices")
        if idx2.min() < 0 or idx2.max() >= self.dim:
            raise InvalidInputError("observed index out of range")
        mask = np.ones(self.dim, dtype=bool)
        mask[idx2] = False
        idx1 = np.nonzero(mask)[0]
        if idx1.size == 0:
            raise InvalidInputError("no free coordinates left to condition")

        c = self.cov.entries
        c11 = c[np.ix_(idx1, idx1)]
        c12 = c[np.ix_(idx1, idx2)]
        c22 = CovarianceMatrix(c[np.ix_(idx2, idx2)], jitter=0.0)
        w2 = self.mean[idx2] + (v2 - self.mean[idx2]) / self.scale
        gain = c22.solve(c12.T).T          # C12 C22^{-1}
        mu = self.mean[idx1] + gain @ (w2 - self.mean[idx2])
        cc = c11 - gain @ c12.T
        return QED(mu, CovarianceMatrix(cc, jitter=0.0), q=self.q, scaled=False)


def gomez_ep_logpdf(mean, cov: CovarianceMatrix, q: float, u) -> float:
    """Log density of the exponential-power construction of Gomez et al.

    Reference implementation only: this family shares the elliptic contour
    r(u) but lacks the radial correction term, is not closed under
    marginalization, and is never sampled here.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    d = mean.size
    dev = u - mean
    half = np.linalg.solve(cov.cholesky(), dev)
    r = float(half @ half)
    const = (np.log(q) + gammaln(d / 2.0) - np.log(2.0) - gammaln(d / q)
             - (d / q) * np.log(2.0) - 0.5 * d * np.log(np.pi) - 0.5 * cov.log_det())
    return const - 0.5 * r ** (q / 2.0)
