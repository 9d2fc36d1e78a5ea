"""Deviation bounds and estimators for dependent, heavy-tailed random matrices."""

import json

from ._core import (
    BoundReport,
    ConfigError,
    CoverageReport,
    DomainError,
    NumericalError,
    VacuousBoundError,
    bound_bounded,
    bound_heavy,
    coverage_csv,
    covariance_estimator,
    effective_rank,
    excess_risk,
    gamma_geometric,
    hmm_estimate,
    lagged_covariance,
    min_norm_regression,
    operator_norm,
    population_moments as _population_moments,
    pseudo_inverse,
    select_tau,
    sym_eig,
    truncate_eigenvalues,
    truncated_mean,
)
from . import _core


def _as_json(config):
    return config if isinstance(config, str) else json.dumps(config)


def simulate(config, n, seed):
    """Simulate n observations (rows) of the configured process."""
    return _core.simulate(_as_json(config), n, seed)


def oracle_bound(config, n=None):
    return _core.oracle_bound(_as_json(config), n)


def run_coverage(config):
    return _core.run_coverage(_as_json(config))


def run_rate_sweep(config):
    return _core.run_rate_sweep(_as_json(config))


def run_dimension_sweep(config):
    return _core.run_dimension_sweep(_as_json(config))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]


def population_moments(config):
    return _population_moments(_as_json(config))
