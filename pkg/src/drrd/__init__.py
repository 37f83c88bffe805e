"""Doubly robust estimation for sharp regression-discontinuity designs."""

from .core import Dataset, RdConfig, assign_treatment, validate_for_estimation
from .errors import RDError
from .estimator import (
    DrEstimate,
    PsiComponents,
    bootstrap_ci,
    compute_psi,
    estimate_dr,
    estimate_local_linear_baseline,
    estimate_with_bootstrap,
)
from .kernels import Fixed, KernelFamily, RuleOfThumb, Shrinking, kernel_eval, select_bandwidth
from .outcome_models import (
    ConstantMean,
    ConstantZero,
    LocalLinear,
    NadarayaWatson,
    PolynomialSieve,
    fit,
)
from .simulation import DgpSpec, McReport, generate, run_scenario, true_tau

__all__ = [
    "Dataset", "RdConfig", "assign_treatment", "validate_for_estimation", "RDError",
    "DrEstimate", "PsiComponents", "bootstrap_ci", "compute_psi", "estimate_dr",
    "estimate_local_linear_baseline", "estimate_with_bootstrap",
    "Fixed", "KernelFamily", "RuleOfThumb", "Shrinking", "kernel_eval", "select_bandwidth",
    "ConstantMean", "ConstantZero", "LocalLinear", "NadarayaWatson", "PolynomialSieve", "fit",
    "DgpSpec", "McReport", "generate", "run_scenario", "true_tau",
]

__version__ = "0.1.0"
