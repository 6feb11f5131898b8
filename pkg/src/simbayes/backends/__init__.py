"""Kernel backend selection.

The compiled extension (``simbayes.backends._native``) is preferred when
importable; otherwise the pure NumPy fallback is used. Set the
environment variable ``SIMBAYES_BACKEND`` to ``python`` or ``native`` to
force a choice (forcing ``native`` raises if the extension is missing).
"""

import os
import warnings

from . import pure

_requested = os.environ.get("SIMBAYES_BACKEND", "auto").lower()

if _requested not in ("auto", "native", "python"):
    raise RuntimeError(
        f"SIMBAYES_BACKEND must be auto, native or python, got {_requested!r}"
    )

if _requested == "python":
    _impl = pure
else:
    try:
        from . import _native as _impl
    except ImportError:
        if _requested == "native":
            raise
        warnings.warn(
            "compiled backend unavailable, falling back to pure NumPy kernels",
            RuntimeWarning,
            stacklevel=2,
        )
        _impl = pure

BACKEND_NAME = _impl.NAME

bh_path = _impl.bh_path
fw_path = _impl.fw_path
mdn_forward = _impl.mdn_forward
mixture_log_density = _impl.mixture_log_density
mdn_loss_and_grads = _impl.mdn_loss_and_grads
adam_update = _impl.adam_update
kde_log_density = _impl.kde_log_density


def backend_name():
    """Name of the active kernel backend ('native' or 'python')."""
    return BACKEND_NAME
