"""Light-field layer separation with joint disparity refinement."""

import json

from ._lfsep import (
    DivergenceError,
    InputError,
    evaluate,
    gradient,
    initial_disparity,
    load_lightfield,
    project_nonneg,
    refocus,
    render,
    run_cli,
    save_lightfield,
    soft_threshold,
    svt,
    warp_view,
    weighted_soft_threshold,
)
from ._lfsep import default_config as _default_config
from ._lfsep import separate as _separate

__all__ = [
    "DivergenceError",
    "InputError",
    "default_config",
    "evaluate",
    "gradient",
    "initial_disparity",
    "load_lightfield",
    "project_nonneg",
    "refocus",
    "render",
    "run_cli",
    "save_lightfield",
    "separate",
    "soft_threshold",
    "svt",
    "warp_view",
    "weighted_soft_threshold",
]


def default_config():
    return json.loads(_default_config())


def separate(views, d0, config=None):
    """Separates an (N, N, h, w[, c]) light field starting from disparity d0.

    `config` is a dict of solver settings; missing keys take their defaults.
    """
    return _separate(views, d0, json.dumps(config) if config else "")
