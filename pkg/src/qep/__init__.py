"""Q-exponential process (Q-EP) priors with GP and Besov baselines.

The q-exponential family generalizes the multivariate normal by a shape
parameter q: density generator r^((q/2-1) d/2) exp(-r^(q/2)/2) over the
usual elliptic contours.  q = 2 recovers the Gaussian case exactly; q < 2
gives sharper, edge-preserving regularization.  This package provides the
distribution (density, exact sampling, moments, conditionals), the process
view on grids (draws, truncated expansions, prediction), elliptical slice
sampling and MAP estimation, forward models for regression and image
deblurring, and an experiment harness behind an HTTP service and CLI.

Mathematical caveats, measured and documented in the test suite: for
q != 2 the family is not closed under marginalization, and elliptical
slice sampling with a q-ED prior is not exactly prior-invariant (the
whitened parameterizations are exact).  See README notes.
"""

__version__ = "0.1.0"

from .errors import (
    InvalidInputError,
    NotPositiveDefiniteError,
    NumericalError,
    QepError,
)
from .kernels import CovarianceMatrix, KernelSpec, eval_kernel, gram, truncated_eig
from .processes import (
    BesovPrior,
    QepPrior,
    gp_prior,
    kl_coefficient_prior,
    piq_sample,
    prior_draw,
    qep_predict,
)
from .qed import QED, cov_constant, moment_radial, sphere_sample

__all__ = [
    "QED",
    "BesovPrior",
    "CovarianceMatrix",
    "InvalidInputError",
    "KernelSpec",
    "NotPositiveDefiniteError",
    "NumericalError",
    "QepError",
    "QepPrior",
    "cov_constant",
    "eval_kernel",
    "gp_prior",
    "gram",
    "kl_coefficient_prior",
    "moment_radial",
    "piq_sample",
    "prior_draw",
    "qep_predict",
    "sphere_sample",
    "truncated_eig",
]
