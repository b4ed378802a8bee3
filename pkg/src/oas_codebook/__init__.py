"""Oversampled adaptive sensing with a predefined codebook."""

from .baselines import lasso_oracle_mse, lasso_solve, mmse_exact_small, one_shot_instance
from .engine import BeliefState, OASConfig, OASResult, mse_db, run_oas, worst_case_select
from .errors import BudgetExceededError, InvalidArgumentError, NumericalError, SingularMatrixError
from .estimators import (
    PosteriorMoments,
    SparseGaussianPrior,
    generic_posterior_moments,
    sparse_gaussian_moments,
)
from .harness import ExperimentSpec, Settings, emit_results, generate_signal, run_sweep
from .linalg import Codebook, generate_codebook, pseudo_inverse, sel
from .selection import select_exhaustive, select_random, select_stepwise

__version__ = "0.1.0"
