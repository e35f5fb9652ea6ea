"""Hot numeric kernels with a compiled core and a pure numpy fallback.

The compiled extension (``crosstraj.kernels._core``, built from Cython) is
preferred when importable; otherwise the numpy fallback is used. Set
``CROSSTRAJ_PURE=1`` to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import logging
import os

from . import _fallback

logger = logging.getLogger(__name__)

_impl = _fallback
if os.environ.get("CROSSTRAJ_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        logger.debug("compiled kernels unavailable, using numpy fallback")

kde_grid = _impl.kde_grid
min_dist_means = _impl.min_dist_means


def backend() -> str:
    """Name of the active kernel backend ('compiled' or 'fallback')."""
    return "compiled" if _impl.__name__.endswith("_core") else "fallback"


def implementations():
    """Both kernel implementations, for equivalence tests and benchmarks."""
    impls = {"fallback": _fallback}
    try:
        from . import _core

        impls["compiled"] = _core
    except ImportError:
        pass
    return impls
