"""Dense LU solve with a condition estimate, shared by all solvers."""
import logging

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError, RegimeError

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


def dense_solve(mat, rhs, what, max_condition=MAX_CONDITION):
    """Solve ``mat @ x = rhs``; return ``(x, cond)`` with the 1-norm condition estimate.

    Raises
    ------
    RegimeError
        If the estimate exceeds ``max_condition``.
    NumericalError
        If the factorization itself fails.
    """
    anorm = np.linalg.norm(mat, 1)
    try:
        lu, piv = sla.lu_factor(mat, check_finite=False)
    except (ValueError, sla.LinAlgError) as exc:
        raise NumericalError(f"{what}: factorization failed ({exc})") from exc
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    logger.debug("%s: 1-norm condition estimate %.3e", what, cond)
    if not np.isfinite(cond) or cond > max_condition:
        raise RegimeError(f"{what}: condition estimate {cond:.3e} exceeds {max_condition:.0e}")
    return sla.lu_solve((lu, piv), rhs, check_finite=False), cond
