"""Forward models and likelihoods.

Heteroscedastic Gaussian regression for the time-series experiments and a
linear inverse (motion blur) model for images.  Log-likelihoods are pure
misfit terms (normalizing constants dropped) with analytic gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import InvalidInputError

NOISE_NORMS = ("rms", "l2", "max")


def field_norm(values, convention: str = "rms") -> float:
    """Norm used by relative-noise rules: rms (default), l2 or max."""
    v = np.asarray(values, dtype=float).ravel()
    if convention == "rms":
        return float(np.linalg.norm(v) / np.sqrt(v.size))
    if convention == "l2":
        return float(np.linalg.norm(v))
    if convention == "max":
        return float(np.abs(v).max())
    raise InvalidInputError(f"unknown noise norm {convention!r}")


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegressionData:
    """Observations y_i at inputs t_i with per-point noise std sigma_i."""

    inputs: np.ndarray
    observations: np.ndarray
    noise_std: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.observations, dtype=float)
        s = np.asarray(self.noise_std, dtype=float)
        if not (len(t) == len(y) == len(s)):
            raise InvalidInputError("inputs, observations and noise_std lengths differ")
        if (s <= 0).any():
            raise InvalidInputError("noise standard deviations must be positive")
        object.__setattr__(self, "inputs", t)
        object.__setattr__(self, "observations", y)
        object.__setattr__(self, "noise_std", s)

    def __len__(self):
        return self.observations.size


def gaussian_loglik(data: RegressionData, field_values) -> float:
    """-0.5 sum((y_i - u_i)^2 / sigma_i^2), constants dropped."""
    u = np.asarray(field_values, dtype=float)
    if u.size != len(data):
        raise InvalidInputError("field length does not match data")
    res = (data.observations - u) / data.noise_std
    return -0.5 * float(res @ res)


def gaussian_loglik_grad(data: RegressionData, field_values) -> np.ndarray:
    u = np.asarray(field_values, dtype=float)
    if u.size != len(data):
        raise InvalidInputError("field length does not match data")
    return (data.observations - u) / data.noise_std ** 2


def synthesize_regression(inputs, truth, noise_ratio, rng: np.random.Generator,
                          noise_norm: str = "rms") -> RegressionData:
    """y = truth + eps with sigma_i = ratio_i * ||truth||.

    ``noise_ratio`` may be a scalar or a per-point vector (heteroscedastic
    rules); a zero ratio returns the noise-free observations.
    """
    t = np.asarray(inputs, dtype=float)
    u = np.asarray(truth, dtype=float)
    ratio = np.broadcast_to(np.asarray(noise_ratio, dtype=float), u.shape)
    if (ratio < 0).any():
        raise InvalidInputError("noise ratios must be nonnegative")
    sigma = ratio * field_norm(u, noise_norm)
    y = u + np.where(sigma > 0, sigma * rng.standard_normal(u.size), 0.0)
    # zero sigma is only a synthesis rule; store a tiny positive std so the
    # likelihood stays well defined
    return RegressionData(t, y, np.maximum(sigma, 1e-12))


# ---------------------------------------------------------------------------
# linear inverse model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearInverseData:
    """Observation y = A u + eps with known noise std sigma."""

    operator: sparse.spmatrix
    observation: np.ndarray
    noise_std: float

    def __post_init__(self):
        y = np.asarray(self.observation, dtype=float)
        if y.size != self.operator.shape[0]:
            raise InvalidInputError("observation length does not match operator rows")
        if self.noise_std <= 0:
            raise InvalidInputError("noise std must be positive")
        object.__setattr__(self, "observation", y)


def linear_loglik(data: LinearInverseData, field_values) -> float:
    """-||y - A u||^2 / (2 sigma^2)."""
    u = np.asarray(field_values, dtype=float)
    if u.size != data.operator.shape[1]:
        raise InvalidInputError("field length does not match operator columns")
    res = data.observation - data.operator @ u
    return -0.5 * float(res @ res) / data.noise_std ** 2


def linear_loglik_grad(data: LinearInverseData, field_values) -> np.ndarray:
    u = np.asarray(field_values, dtype=float)
    if u.size != data.operator.shape[1]:
        raise InvalidInputError("field length does not match operator columns")
    res = data.observation - data.operator @ u
    return (data.operator.T @ res) / data.noise_std ** 2


def motion_blur_operator(rows: int, cols: int, blur_length: int = 5,
                         angle: float = 0.0) -> sparse.csr_matrix:
    """Sparse 2-d convolution with a normalized line-segment PSF.

    The point spread function places ``blur_length`` equal weights along a
    line at ``angle`` (radians, 0 = horizontal motion) through the kernel
    center; the boundary is zero padded, so interior constant regions are
    preserved exactly.  Acts on row-major flattened (rows x cols) images;
    the transpose of the returned matrix is the exact adjoint.
    """
    if rows < 1 or cols < 1:
        raise InvalidInputError("invalid image dimensions")
    if not 1 <= blur_length <= min(rows, cols):
        raise InvalidInputError("blur_length must be in 1..min(rows, cols)")
    offsets = np.arange(blur_length, dtype=float) - (blur_length - 1) / 2.0
    di = np.rint(offsets * np.sin(angle)).astype(int)
    dj = np.rint(offsets * np.cos(angle)).astype(int)
    weight = 1.0 / blur_length
    r_idx, c_idx, vals = [], [], []
    for i in range(rows):
        for j in range(cols):
            out = i * cols + j
            for k in range(blur_length):
                si, sj = i - di[k], j - dj[k]
                if 0 <= si < rows and 0 <= sj < cols:
                    r_idx.append(out)
                    c_idx.append(si * cols + sj)
                    vals.append(weight)
    n = rows * cols
    return sparse.csr_matrix((vals, (r_idx, c_idx)), shape=(n, n))


def subsample_rows(operator: sparse.spmatrix, row_indices) -> sparse.csr_matrix:
    """Restrict an operator to a subset of observation rows (J <= d mode)."""
    idx = np.atleast_1d(np.asarray(row_indices, dtype=int))
    if idx.size == 0:
        raise InvalidInputError("row subset is empty")
    if idx.min() < 0 or idx.max() >= operator.shape[0]:
        raise InvalidInputError("row index out of range")
    return sparse.csr_matrix(operator)[idx]


def synthesize_linear_observation(operator, truth, noise_ratio: float,
                                  rng: np.random.Generator,
                                  noise_norm: str = "rms") -> LinearInverseData:
    """y = A truth + eps with sigma = noise_ratio * ||A truth||."""
    u = np.asarray(truth, dtype=float)
    clean = operator @ u
    if noise_ratio < 0:
        raise InvalidInputError("noise ratio must be nonnegative")
    sigma = noise_ratio * field_norm(clean, noise_norm)
    noise = sigma * rng.standard_normal(clean.size) if sigma > 0 else 0.0
    return LinearInverseData(operator, clean + noise, max(sigma, 1e-12))


def adjoint_mismatch(operator, u, v) -> float:
    """|<A u, v> - <u, A^T v>|, the quantity bounded by the adjoint test."""
    return abs(float((operator @ u) @ v) - float(u @ (operator.T @ v)))
