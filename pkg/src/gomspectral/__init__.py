"""Spectral estimation for the Grade of Membership model.

Fits mixed-membership scores ``Pi`` and item parameters ``Theta`` to an
``N x J`` matrix of categorical responses coded ``0..M``, and picks the
number of latent classes by fuzzy modularity.

>>> from gomspectral import sample_gom, fit, FitConfig, hamming_error
>>> inst = sample_gom(400, 100, 3, 4, 1.0, seed=0)
>>> res = fit(inst.responses(), "CRSC", FitConfig(3))
>>> round(hamming_error(res.pi_hat, inst.pi).value, 2) < 0.5
True
"""

from .data import (
    EstimationResult,
    ItemParams,
    MembershipMatrix,
    RealMatrix,
    ResponseMatrix,
    read_matrix,
    read_result,
    validate_response_matrix,
    write_matrix,
    write_result,
)
from .errors import DataError, GomError, NumericalError
from .estimators import FitConfig, fit, fit_gom_crsc, fit_gom_srm, fit_gom_srsc, fit_gom_ssc
from .linalg import default_tau, regularized_laplacian, truncated_svd
from .metrics import accuracy_rate, hamming_error, purity_proportions, relative_error
from .selection import fuzzy_modularity, modularity, select_k
from .simulation import ExperimentConfig, run_experiment, sample_gom
from .vertex import successive_projection, svm_cone

__version__ = "0.1.0"

__all__ = [
    "EstimationResult",
    "ItemParams",
    "MembershipMatrix",
    "RealMatrix",
    "ResponseMatrix",
    "read_matrix",
    "read_result",
    "validate_response_matrix",
    "write_matrix",
    "write_result",
    "DataError",
    "GomError",
    "NumericalError",
    "FitConfig",
    "fit",
    "fit_gom_crsc",
    "fit_gom_srm",
    "fit_gom_srsc",
    "fit_gom_ssc",
    "default_tau",
    "regularized_laplacian",
    "truncated_svd",
    "accuracy_rate",
    "hamming_error",
    "purity_proportions",
    "relative_error",
    "fuzzy_modularity",
    "modularity",
    "select_k",
    "ExperimentConfig",
    "run_experiment",
    "sample_gom",
    "successive_projection",
    "svm_cone",
]
