"""Population-based training dynamics: particle, mean-field and CartPole runs."""

import json as _json

from ._core import (  # noqa: F401
    Error,
    __version__,
    bl_distance,
    cartpole_step,
    effective_fitness,
    experiment_ids,
    fbar_monte_carlo,
    gibbs_fitness,
    meanfield_step,
    run_cartpole,
    run_pbt,
    run_reduced,
    selection_weights,
    w1_1d,
)
from . import _core


def resolve_config(config):
    """Fill defaults into a config dict and validate it."""
    return _json.loads(_core.resolve_config(_json.dumps(config)))


def run_experiment(config, out_dir):
    """Run a config dict; returns (passed, checks, results)."""
    passed, checks, results = _core.run_experiment(_json.dumps(config), str(out_dir))
    return passed, checks, _json.loads(results)
