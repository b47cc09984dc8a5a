"""Genetic policy optimization: populations of Gaussian policies improved by
policy-gradient mutation, state-space crossover and fitness selection.

Configuration is a dict of the same ``key: value`` strings the command line
accepts; values may be any type whose ``str()`` parses.
"""

from . import _core
from ._core import (
    NumericalError,
    ShapeError,
    config_keys,
    discounted_returns,
    gauss_entropy,
    gauss_kl,
    gauss_log_prob,
    relative_score,
    select_couples,
)


def _strings(config):
    return {str(k): str(v) for k, v in (config or {}).items()}


def budget(config=None):
    return _core.budget(_strings(config))


def config_echo(config=None):
    return _core.config_echo(_strings(config))


def gpo_run(config=None):
    return _core.gpo_run(_strings(config))


def single_run(config=None):
    return _core.single_run(_strings(config))


def joint_run(config=None):
    return _core.joint_run(_strings(config))


def main(args):
    """Runs the command line in-process; returns (exit code, stdout, stderr)."""
    return _core.main([str(a) for a in args])


__all__ = [
    "NumericalError",
    "ShapeError",
    "budget",
    "config_echo",
    "config_keys",
    "discounted_returns",
    "gauss_entropy",
    "gauss_kl",
    "gauss_log_prob",
    "gpo_run",
    "joint_run",
    "main",
    "relative_score",
    "select_couples",
    "single_run",
]
