"""Kernel backend selection.

The compiled extension is preferred when it built; GRASPSIM_PURE_PYTHON=1
forces the numpy fallback. Both expose the same five functions with
identical semantics (floating-point results may differ in the last bits
because summation order differs).
"""

import os

from . import _fallback

if os.environ.get("GRASPSIM_PURE_PYTHON", "") not in ("", "0"):
    backend = _fallback
else:
    try:
        from . import _core as backend  # type: ignore[no-redef]
    except ImportError:
        backend = _fallback

BACKEND_NAME = backend.NAME

render_scene = backend.render_scene
downscale_mean = backend.downscale_mean
mlp_forward = backend.mlp_forward
mlp_backward = backend.mlp_backward
adam_step = backend.adam_step
