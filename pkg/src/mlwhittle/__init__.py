"""Local Whittle estimation of fractionally cointegrated bivariate series.

The estimator jointly fits the cointegrating coefficient ``beta``, the
long-run phase ``gamma`` and the memory parameters ``delta1 < delta2`` from
the lowest ``m`` Fourier frequencies of ``z_t = (y_t, x_t)``.
"""

from .inference import (
    HYPOTHESES,
    SigmaMatrix,
    WaldResult,
    confidence_intervals,
    estimate_covariance,
    named_hypothesis,
    sigma_matrix,
    standard_errors,
    wald_test,
)
from .model import OmegaMatrix, ThetaSpace, ThetaVector
from .simulate import FarimaSpec, assemble_system, paper_farima, read_csv, simulate_u, write_csv
from .spectra import FourierGrid, periodogram
from .whittle import (
    EstimateOptions,
    EstimationError,
    EstimationResult,
    ObjectiveContext,
    PsiKind,
    estimate,
    estimate_known_beta,
    objective_R,
    profile_beta,
)

__version__ = "0.1.0"
