"""Pairwise O(n^2) kernels behind a backend switch.

``BACKEND`` is ``"numba"`` unless ``SMALLSCAT_DISABLE_NUMBA`` is set or numba
is missing, in which case the numpy module below is used. Both modules expose
the same functions with the same signatures:

coupling_matrix(points, pol, k, self_blocks)
    Dense ``I + K`` with ``K[j, m] = D(x_j, x_m) @ pol[m]`` off the diagonal
    and ``self_blocks[j]`` added to the identity on the diagonal.
coupling_apply(points, w, k)
    ``sum_{m != j} D(x_j, x_m) w_m`` without forming the matrix.
dipole_sum(targets, sources, moments, k, skip)
    ``sum_m grad g(x_i, x_m) x Q_m``, omitting ``m == skip[i]``.
bie_matrix(cent, nrm, area, k)
    Centroid collocation of ``J/2 + TJ`` on a triangulated surface.
half_identity(cent, nrm, area, k)
    ``-sum_{s != t} |S_s| dg(s, t)/dN_s`` for every centroid ``t``.
gamma_rows(cent, nrm, area, k, J)
    Per-face contributions to ``X = int int grad_s g(s, t) N_s . J(t)``.
max_pair_distance(pts)
"""
import numpy as np

from .. import _accel
from . import _numpy as numpy_impl

if _accel.USE_NUMBA:
    from . import _jit as impl

    BACKEND = "numba"
else:
    impl = numpy_impl
    BACKEND = "numpy"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def coupling_matrix(points, pol, k, self_blocks=None):
    points = _f64(points)
    n = points.shape[0]
    if self_blocks is None:
        self_blocks = np.zeros((n, 3, 3), dtype=np.complex128)
    return impl.coupling_matrix(points, _c128(pol), complex(k), _c128(self_blocks))


def coupling_apply(points, w, k):
    return impl.coupling_apply(_f64(points), _c128(w), complex(k))


def dipole_sum(targets, sources, moments, k, skip=None):
    targets = _f64(targets)
    if skip is None:
        skip = np.full(targets.shape[0], -1, dtype=np.int64)
    skip = np.ascontiguousarray(skip, dtype=np.int64)
    return impl.dipole_sum(targets, _f64(sources), _c128(moments), complex(k), skip)


def bie_matrix(cent, nrm, area, k):
    return impl.bie_matrix(_f64(cent), _f64(nrm), _f64(area), complex(k))


def half_identity(cent, nrm, area, k):
    return impl.half_identity(_f64(cent), _f64(nrm), _f64(area), complex(k))


def gamma_rows(cent, nrm, area, k, J):
    return impl.gamma_rows(_f64(cent), _f64(nrm), _f64(area), complex(k), _c128(J))


def max_pair_distance(pts):
    return float(impl.max_pair_distance(_f64(pts)))
