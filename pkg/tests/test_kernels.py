import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from qep.errors import InvalidInputError, NotPositiveDefiniteError
from qep.kernels import CovarianceMatrix, KernelSpec, eval_kernel, gram, truncated_eig

MATERN = KernelSpec(family="matern", variance=1.0, lengthscale=0.5, nu=0.5, exponent=1.0)


def bessel_matern(spec, dist):
    """Direct evaluation of the Matern form via modified Bessel functions."""
    if dist == 0:
        return spec.variance
    z = np.sqrt(2 * spec.nu) * (dist / spec.lengthscale) ** spec.exponent
    return (spec.variance * 2.0 ** (1 - spec.nu) / gamma_fn(spec.nu)
            * z ** spec.nu * kv(spec.nu, z))


def test_matern_at_zero_is_variance():
    assert eval_kernel(MATERN, 0.3, 0.3) == pytest.approx(1.0, abs=0)
    spec = KernelSpec(variance=2.5)
    assert eval_kernel(spec, 1.0, 1.0) == pytest.approx(2.5, abs=0)


def test_matern_half_closed_form():
    # Matern-1/2 reduces to exp(-(|x-y|/l)^s)
    assert eval_kernel(MATERN, 0.0, 0.5) == pytest.approx(np.exp(-1.0), abs=1e-12)
    for d in np.linspace(0.01, 3.0, 25):
        expect = np.exp(-((d / 0.5) ** 1.0))
        assert eval_kernel(MATERN, 0.0, d) == pytest.approx(expect, abs=1e-12)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
def test_matern_matches_bessel_evaluation(nu):
    spec = KernelSpec(nu=nu, lengthscale=0.7, variance=1.3, exponent=1.0)
    for d in (0.05, 0.3, 0.9, 2.0):
        assert eval_kernel(spec, 0.0, d) == pytest.approx(
            bessel_matern(spec, d), rel=1e-10)


def test_powered_exponential_decays_to_zero():
    spec = KernelSpec(family="powered_exponential", variance=2.0,
                      lengthscale=1.0, exponent=2.0)
    vals = [eval_kernel(spec, 0.0, d) for d in (0.5, 1.0, 2.0, 5.0, 10.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-20


def test_eval_kernel_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        eval_kernel(MATERN, np.nan, 1.0)
    with pytest.raises(InvalidInputError):
        eval_kernel(MATERN, 0.0, np.inf)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-5, 5), y=st.floats(-5, 5),
       nu=st.sampled_from([0.5, 1.5, 2.5]))
def test_kernel_symmetry(x, y, nu):
    spec = KernelSpec(nu=nu)
    assert eval_kernel(spec, x, y) == eval_kernel(spec, y, x)


def test_gram_single_point():
    cov = gram(KernelSpec(variance=2.0), [1.0], jitter=1e-3)
    assert cov.entries.shape == (1, 1)
    assert cov.entries[0, 0] == pytest.approx(2.0 + 1e-3, abs=0)


def test_gram_duplicate_points_need_jitter():
    pts = [0.5, 0.5]
    with pytest.raises(NotPositiveDefiniteError):
        gram(MATERN, pts, jitter=0.0).cholesky()
    cov = gram(MATERN, pts, jitter=1e-6)
    cov.cholesky()  # should not raise


def test_gram_matches_double_loop(rng):
    pts = rng.uniform(0, 2, size=5)
    cov = gram(MATERN, pts, jitter=0.0)
    brute = np.array([[eval_kernel(MATERN, a, b) for b in pts] for a in pts])
    assert np.abs(cov.entries - brute).max() <= 1e-12


def test_cholesky_roundtrip(rng):
    pts = rng.uniform(0, 2, size=20)
    cov = gram(MATERN, pts)
    low = cov.cholesky()
    err = np.abs(low @ low.T - cov.entries).max()
    assert err <= 1e-8 * np.abs(cov.entries).max()


def test_jitter_escalation_updates_entries():
    # an indefinite base succeeds only after escalation; entries must agree
    # with the escalated jitter
    base = np.diag([1.0, 1.0, -1e-6])
    cov = CovarianceMatrix(base, jitter=1e-7)
    low = cov.cholesky()
    assert cov.jitter == pytest.approx(1e-5, rel=1e-12)
    assert np.abs(low @ low.T - cov.entries).max() <= 1e-8 * np.abs(cov.entries).max()


def test_truncated_eig_identity():
    cov = CovarianceMatrix(np.eye(4), jitter=0.0)
    vals, vecs = truncated_eig(cov, 4)
    assert np.allclose(vals, 1.0)
    assert np.abs(vecs.T @ vecs - np.eye(4)).max() <= 1e-8


def test_truncated_eig_diagonal_top():
    cov = CovarianceMatrix(np.diag([4.0, 1.0]), jitter=0.0)
    vals, vecs = truncated_eig(cov, 1)
    assert vals[0] == pytest.approx(4.0, rel=1e-12)
    assert abs(abs(vecs[0, 0]) - 1.0) <= 1e-12


def test_eig_reconstruction_improves_with_truncation(rng):
    pts = np.linspace(0, 2, 20)
    cov = gram(MATERN, pts, jitter=0.0)
    c = cov.entries
    errs = []
    for count in (2, 5, 10, 20):
        vals, vecs = cov.truncated_eig(count)
        approx = (vecs * vals) @ vecs.T
        errs.append(np.linalg.norm(approx - c) / np.linalg.norm(c))
    assert all(a >= b for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-8


def test_eigenvalues_sorted_and_clamped(rng):
    pts = np.linspace(0, 2, 30)
    cov = gram(MATERN, pts, jitter=0.0)
    vals, vecs = cov.truncated_eig(30)
    assert (np.diff(vals) <= 0).all()
    assert (vals > 0).all()
    assert np.abs(vecs.T @ vecs - np.eye(30)).max() <= 1e-8


def test_truncation_bounds():
    cov = CovarianceMatrix(np.eye(3), jitter=0.0)
    with pytest.raises(InvalidInputError):
        cov.truncated_eig(4)
    with pytest.raises(InvalidInputError):
        cov.truncated_eig(0)
