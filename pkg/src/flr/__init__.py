"""Distributed spectral-regularization estimators for functional linear
regression on unanchored Sobolev kernels, with a synthetic experiment harness."""

from .errors import *  # noqa: F401,F403
from .grid import Grid, SamplingScheme, equispaced, make_grid, riemann_sum, quadrature_rate_test
from .kernelcore import BernoulliTable, SobolevKernelSpec, bernoulli_poly, sobolev_kernel_eval, kernel_matrix
from .operators import (DiscretizedOperator, SpectralDecomposition, discretize, eigendecompose,
                        fractional_apply, sqrt_kernel_eval, compose_T_alpha, effective_dimension,
                        effective_dimension_curve, sobolev_norm)
from .filters import FilterSpec, filter_eval, filter_apply, verify_filter_properties
from .estimator import (Dataset, SlopeEstimate, assemble, fit_local, predict, estimation_error_W,
                        prediction_risk)
from .distributed import Partition, partition, fit_distributed, export_local_model, import_local_model
from .synth import GroundTruth, NoiseSpec, build_ground_truth, sample_X, gen_dataset, kurtosis_probe
from .minimax import PackingSet, varshamov_gilbert, build_packing_slopes, kl_divergence_pair, fano_budget
from .harness import (ExperimentConfig, RateReport, run_filter_audit, run_partition_sweep, run_rate_experiment,
                      run_rate_experiments)

__version__ = "0.1.0"
