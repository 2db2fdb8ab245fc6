"""Propagation-of-chaos experiments for a mollified Yukawa particle system."""

import json as _json

from ._chaoslab import (
    __version__,
    beta_bound,
    certificate,
    deposit,
    eta_interval,
    gamma_bound,
    helmholtz_solve,
    interaction_exact,
    interaction_fast,
    kde,
    kernel_norms,
    kernel_table,
    l1_distance,
    plan,
    relative_entropy,
    silverman_bandwidth,
    yukawa_eval,
)
from ._chaoslab import report as _report
from ._chaoslab import run_experiment as _run_experiment


def run_experiment(config):
    """Run one experiment. `config` is a dict or a JSON string; returns the manifest."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _json.loads(_run_experiment(config))


def report(run_dir):
    """Log-log regressions for a finished run directory, one dict per statistic."""
    return _report(str(run_dir))


__all__ = [
    "__version__",
    "beta_bound",
    "certificate",
    "deposit",
    "eta_interval",
    "gamma_bound",
    "helmholtz_solve",
    "interaction_exact",
    "interaction_fast",
    "kde",
    "kernel_norms",
    "kernel_table",
    "l1_distance",
    "plan",
    "relative_entropy",
    "report",
    "run_experiment",
    "silverman_bandwidth",
    "yukawa_eval",
]
