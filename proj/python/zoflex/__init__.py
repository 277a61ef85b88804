"""Zeroth-order feedback optimization for distributed demand response."""

import json

from ._core import (
    BallSet,
    BoxSet,
    ConfigurationError,
    FeasibleSet,
    OracleError,
    ParameterError,
    ParseError,
    PowerFlowDivergence,
    PreconditionError,
    Problem,
    RandomStream,
    coordinate_estimate,
    gaussian,
    make_convex_case,
    make_feeder_case,
    perturbation_project,
    projected_gaussian_perturbation,
    reference_optimum,
    run_2zfgd as _run_2zfgd,
    run_rzfcd as _run_rzfcd,
    solve_power_flow,
    stationarity,
    two_point_estimate,
)
from . import _core

__all__ = [
    "BallSet",
    "BoxSet",
    "ConfigurationError",
    "FeasibleSet",
    "OracleError",
    "ParameterError",
    "ParseError",
    "PowerFlowDivergence",
    "PreconditionError",
    "Problem",
    "RandomStream",
    "coordinate_estimate",
    "gaussian",
    "make_convex_case",
    "make_feeder_case",
    "perturbation_project",
    "projected_gaussian_perturbation",
    "recipe",
    "reference_optimum",
    "run_2zfgd",
    "run_experiment",
    "run_rzfcd",
    "solve_power_flow",
    "stationarity",
    "two_point_estimate",
    "verify",
]


def run_2zfgd(problem, config, seed=0, stream_id=0, M=1.0, F_star=None, record_every=0):
    """Runs 2-ZFGD; `config` is a dict in the CLI config format."""
    return _run_2zfgd(problem, json.dumps(config), seed, stream_id, M, F_star, record_every)


def run_rzfcd(problem, config, seed=0, stream_id=0, M=1.0, F_star=None, record_every=0):
    """Runs RZFCD; `config` is a dict in the CLI config format."""
    return _run_rzfcd(problem, json.dumps(config), seed, stream_id, M, F_star, record_every)


def recipe(name):
    return json.loads(_core.recipe_json(name))


def run_experiment(config, jobs=0, out=None, write_files=True):
    """Runs a full experiment and returns the summary table as a dict."""
    return json.loads(_core.run_experiment_json(json.dumps(config), jobs, out, write_files))


def verify(seed=0):
    return json.loads(_core.verify_json(seed))
