"""Backend selection for the hot kernels.

Set ``SMALLSCAT_DISABLE_NUMBA=1`` before import to force the pure-numpy
path. The numba path is also skipped when numba cannot be imported.
"""
import logging
import os

logger = logging.getLogger(__name__)

_FLAG = "SMALLSCAT_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

if HAVE_NUMBA and "NUMBA_THREADING_LAYER" not in os.environ and "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # probing an old TBB first only produces a warning; the layer does not affect results
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

USE_NUMBA = HAVE_NUMBA and not _flag_set()

if HAVE_NUMBA and not USE_NUMBA:
    logger.info("%s set: using numpy kernels", _FLAG)


def set_threads(n):
    """Set the worker count for parallel numba kernels; 0 means all cores.

    Returns the count actually in effect. Results do not depend on it: every
    parallel loop writes disjoint output rows and reductions run serially.
    """
    if not HAVE_NUMBA:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if n <= 0 else min(int(n), limit)
    if n != numba.get_num_threads():
        numba.set_num_threads(n)
    return n
