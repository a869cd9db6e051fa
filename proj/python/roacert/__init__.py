"""Neural Lyapunov functions with certified regions of attraction.

Thin wrapper over the compiled ``_roacert`` extension.
"""

from ._roacert import (
    LinalgError,
    Model,
    ModelError,
    ParseError,
    SystemConfigError,
    __version__,
    cli,
    differentiate,
    eig_extrema,
    eval_expr,
    eval_expr_interval,
    membership_hard,
    solve_lyapunov,
    system_config,
    systems,
    train,
    train_baseline,
)


def load_model(path):
    """Load a model file written by ``roacert train`` or ``roacert baseline``."""
    with open(path, encoding="utf-8") as fh:
        return Model.from_json(fh.read())


__all__ = [
    "LinalgError",
    "Model",
    "ModelError",
    "ParseError",
    "SystemConfigError",
    "__version__",
    "cli",
    "differentiate",
    "eig_extrema",
    "eval_expr",
    "eval_expr_interval",
    "load_model",
    "membership_hard",
    "solve_lyapunov",
    "system_config",
    "systems",
    "train",
    "train_baseline",
]
