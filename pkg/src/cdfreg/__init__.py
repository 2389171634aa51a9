"""Functional linear regression of contextual CDFs.

Estimate simplex mixture weights over context-dependent CDF bases from
(context, outcome) samples, evaluate high-probability error bounds for the
estimates, and run replicated synthetic and tabular-data experiments.
"""

__version__ = "0.1.0"

from .basis import (BasisFamily, BernoulliBasis, CustomBasis,
                    GaussianLaplaceBasis, LogisticProbitBasis, MixtureCdf,
                    PolynomialBasis, basis_from_spec, check_simplex,
                    inverse_cdf_sample, mixture_cdf_eval)
from .bounds import (epsilon_lambda, epsilon_unreg, fit_loglog_slope,
                     hilbert_bound, ks_distance, ks_grid, l2_error_crps,
                     min_eigenvalue, mismatch_bound, penalized_bound,
                     weighted_norm)
from .errors import BracketError, CdfRegError, ConvergenceError, SingularGram
from .estimators import (EmpiricalCdf, SigmaSequence, delta_nU_default, ecdf,
                         fit_mle_simplex, hilbert_estimate, penalized_estimate,
                         project_simplex, project_simplex_weighted,
                         ridge_estimate, unregularized_estimate)
from .gram import (GramState, PopulationGram, accumulate,
                   gram_matrix_of_context, population_gram_mc,
                   regularized_gram, response_vector_of_sample)
from .measure import (QuadMeasure, integrate, integrate_with_jump, jump_panel,
                      make_counting_measure, make_gaussian_measure,
                      make_uniform_measure, measure_from_spec, tail_mass)
from .synth import (Dataset, ExperimentRecord, hard_instance_matrix,
                    hard_instance_params, run_coverage_experiment,
                    run_scaling_experiment, sample_mismatched, sample_scheme1,
                    sample_scheme2)
