"""Backend selection for the hot kernels.

The compiled extension ``kglp._kernels`` is used when it imports; otherwise
(or when ``KGLP_PURE_PYTHON=1``) the numpy fallback takes over. Both expose
the same four functions and produce bit-identical results.
"""

import logging
import os

from kglp import _fallback

logger = logging.getLogger(__name__)

_compiled = None
if os.environ.get("KGLP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from kglp import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        logger.debug("compiled kernels unavailable, using numpy fallback")

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

backend = _compiled if _compiled is not None else _fallback
BACKEND_NAME = "compiled" if _compiled is not None else "python"

score_candidates = backend.score_candidates
rank_counts = backend.rank_counts
paths_between = backend.paths_between
walks_from = backend.walks_from
