"""Covariance kernels, Gram matrices and their factorizations.

Provides the Matern (half-integer smoothness) and powered-exponential
families with an optional distance exponent, plus a `CovarianceMatrix`
wrapper that caches a Cholesky factor (with a jitter-escalation policy)
and a truncated eigendecomposition for Karhunen-Loeve style expansions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import InvalidInputError, NotPositiveDefiniteError, NumericalError

_HALF_INTEGER_NU = (0.5, 1.5, 2.5)

# Escalation policy: on Cholesky failure the diagonal jitter is multiplied
# by 10, at most this many times, before giving up.
MAX_JITTER_ESCALATIONS = 3

# Eigenvalues below EIG_CLAMP_REL * lambda_max are clamped up to that floor
# so they remain usable as variances.
EIG_CLAMP_REL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """Parametric description of a stationary covariance function.

    ``family`` is ``"matern"`` or ``"powered_exponential"``.  ``variance``
    is the marginal variance sigma^2, ``lengthscale`` the correlation
    length, ``exponent`` the power applied to the scaled distance, and
    ``nu`` the Matern smoothness (half-integers 1/2, 3/2, 5/2 only;
    ignored by the powered-exponential family).
    """

    family: str = "matern"
    variance: float = 1.0
    lengthscale: float = 0.5
    nu: float = 0.5
    exponent: float = 1.0

    def __post_init__(self):
        if self.family not in ("matern", "powered_exponential"):
            raise InvalidInputError(f"unknown kernel family {self.family!r}")
        if not (self.variance > 0 and self.lengthscale > 0 and self.exponent > 0):
            raise InvalidInputError("variance, lengthscale and exponent must be positive")
        if self.family == "matern" and self.nu not in _HALF_INTEGER_NU:
            raise InvalidInputError(
                f"matern smoothness must be one of {_HALF_INTEGER_NU}, got {self.nu}")


def _scaled_distance(spec: KernelSpec, dist):
    """(d / lengthscale) ** exponent, elementwise."""
    return (dist / spec.lengthscale) ** spec.exponent


def _kernel_of_distance(spec: KernelSpec, dist):
    tau = _scaled_distance(spec, dist)
    if spec.family == "powered_exponential" or spec.nu == 0.5:
        # Matern-1/2 coincides with the exponential of the scaled distance.
        return spec.variance * np.exp(-tau)
    if spec.nu == 1.5:
        z = np.sqrt(3.0) * tau
        return spec.variance * (1.0 + z) * np.exp(-z)
    z = np.sqrt(5.0) * tau  # nu == 2.5
    return spec.variance * (1.0 + z + z * z / 3.0) * np.exp(-z)


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate the covariance C(x, y) between two points.

    Points may be scalars or 1-d coordinate arrays; they must share a
    coordinate space and be finite.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise InvalidInputError(f"point shapes differ: {x.shape} vs {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InvalidInputError("non-finite coordinates")
    dist = np.sqrt(((x - y) ** 2).sum())
    return float(_kernel_of_distance(spec, dist))


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError("points must be a nonempty 1-d or 2-d array")
    if not np.isfinite(pts).all():
        raise InvalidInputError("non-finite coordinates in points")
    return pts


@dataclass
class CovarianceMatrix:
    """Symmetric positive-semidefinite matrix with cached factorizations.

    ``entries`` includes ``jitter`` on the diagonal.  The Cholesky factor
    is computed lazily; if factorization fails the jitter is escalated
    (x10, at most ``MAX_JITTER_ESCALATIONS`` times) and ``entries``
    reflects the escalated value.
    """

    base: np.ndarray          # kernel matrix without jitter
    jitter: float = 0.0
    _chol: np.ndarray | None = field(default=None, repr=False)
    _eig: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        if self.base.ndim != 2 or self.base.shape[0] != self.base.shape[1]:
            raise InvalidInputError("covariance must be square")
        if self.jitter < 0:
            raise InvalidInputError("jitter must be nonnegative")
        # symmetrize exactly; callers may pass matrices with roundoff skew
        self.base = 0.5 * (self.base + self.base.T)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self.base + self.jitter * np.eye(self.dim)

    def cholesky(self) -> np.ndarray:
        """Lower-triangular L with entries = L L^T, escalating jitter on failure."""
        if self._chol is None:
            jit = self.jitter
            for attempt in range(MAX_JITTER_ESCALATIONS + 1):
                try:
                    self._chol = np.linalg.cholesky(self.base + jit * np.eye(self.dim))
                    self.jitter = jit
                    break
                except np.linalg.LinAlgError:
                    if attempt == MAX_JITTER_ESCALATIONS:
                        raise NotPositiveDefiniteError(
                            f"Cholesky failed after escalating jitter to {jit:g}")
                    jit *= 10.0
        return self._chol

    def solve(self, b: np.ndarray) -> np.ndarray:
        """entries^{-1} b via triangular solves (never an explicit inverse)."""
        low = self.cholesky()
        return sla.cho_solve((low, True), b)

    def log_det(self) -> float:
        return 2.0 * float(np.log(np.diag(self.cholesky())).sum())

    def truncated_eig(self, count: int):
        """Top ``count`` eigenpairs, eigenvalues descending and clamped.

        Eigenvalues below ``EIG_CLAMP_REL * lambda_max`` are raised to that
        floor so downstream code can use them as variances.  Eigenvectors
        are orthonormal.
        """
        if not 1 <= count <= self.dim:
            raise InvalidInputError(f"truncation {count} outside 1..{self.dim}")
        if self._eig is None or self._eig[0].size < count:
            try:
                vals, vecs = sla.eigh(
                    self.entries, subset_by_index=[self.dim - count, self.dim - 1])
            except sla.LinAlgError as exc:  # pragma: no cover - solver failure
                raise NumericalError(f"eigendecomposition failed: {exc}") from exc
            vals = vals[::-1]
            vecs = vecs[:, ::-1]
            floor = EIG_CLAMP_REL * max(vals[0], 0.0)
            self._eig = (np.maximum(vals, floor), np.ascontiguousarray(vecs))
        vals, vecs = self._eig
        return vals[:count].copy(), vecs[:, :count].copy()


def gram(spec: KernelSpec, points, jitter: float | None = None) -> CovarianceMatrix:
    """Assemble the Gram matrix of a kernel over a point set.

    ``entries[i, j] = eval_kernel(points[i], points[j]) + jitter * 1{i=j}``.
    ``jitter`` defaults to ``1e-8 * variance``; pass 0 to disable (then no
    escalation can rescue a singular matrix).
    """
    pts = _as_points(points)
    if jitter is None:
        jitter = 1e-8 * spec.variance
    if jitter < 0:
        raise InvalidInputError("jitter must be nonnegative")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    return CovarianceMatrix(_kernel_of_distance(spec, dist), jitter=jitter)


def cross_gram(spec: KernelSpec, points_a, points_b) -> np.ndarray:
    """Rectangular kernel matrix C[i, j] = C(a_i, b_j) (no jitter)."""
    pa = _as_points(points_a)
    pb = _as_points(points_b)
    if pa.shape[1] != pb.shape[1]:
        raise InvalidInputError("point sets live in different coordinate spaces")
    diff = pa[:, None, :] - pb[None, :, :]
    return _kernel_of_distance(spec, np.sqrt((diff ** 2).sum(-1)))


def truncated_eig(cov: CovarianceMatrix, count: int):
    """Functional alias for :meth:`CovarianceMatrix.truncated_eig`."""
    return cov.truncated_eig(count)
