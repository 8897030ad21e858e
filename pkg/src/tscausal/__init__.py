"""Constraint-based causal discovery for stationary multivariate time series."""

from .citests import (CiOutcome, Dataset, InsufficientDataError, OracleCI,
                      ParCorrCI, build_lagged_samples, oracle_ci, parcorr_test)
from .graphs import (Mark, SepSetStore, TimeSeriesGraph, VarLag,
                     contemporaneous_adjacencies, enumerate_triples,
                     new_full_graph)
from .scm import (F2, LINEAR, GenConfig, Link, ScmModel, analytic_covariance,
                  draw_model, f2, oracle_lagged_sets, population_parcorr,
                  simulate, spectral_radius, true_graph)
from .cpdag import reference_cpdag

__version__ = "0.1.0"
