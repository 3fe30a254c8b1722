"""Sign recovery for sparse linear regression.

LASSO / basis pursuit / BPDN solvers with KKT checks, irrepresentability and
identifiability certificates, a Monte Carlo upper bound on LASSO sign
recovery with lambda calibration, AMP-based lambda tuning, knockoff and
full-null thresholds, and a replicate engine comparing thresholded
estimators.
"""
from .core_model import (
    DesignMatrix,
    RegressionInstance,
    RngStream,
    SignalSpec,
    SignVector,
    gen_design,
    gen_instance,
    reference_design,
    sample_sign_vector,
)
from .errors import SignrecError
from .solvers import LassoConfig, SolverSolution, adaptive_lasso, basis_pursuit, bpdn, kkt_check, lasso

__version__ = "0.1.0"
