"""Boundary integral solver for one small perfectly conducting particle.

Solves ``J/2 + TJ = -[N, E0]`` on a triangulated surface by centroid
collocation with three Cartesian unknowns per face, then projects each
``J_f`` onto the tangent plane of its face. On a flat face both parts of the
kernel of ``T`` vanish identically for tangential ``J``, so the self-face
blocks are set to zero.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .emcore import plane_wave
from ._linalg import MAX_CONDITION, dense_solve
from .errors import NumericalError
from .shape import ShapeConstants


@dataclass(frozen=True)
class SurfaceCurrent:
    """Solved current ``J`` at face centroids, shape ``(F, 3)``."""

    mesh: object
    k: complex
    J: np.ndarray
    condition: float

    @property
    def tangential_residual(self):
        nj = np.abs(np.einsum("fi,fi->f", self.mesh.normals, self.J))
        return float(np.max(nj / np.maximum(np.linalg.norm(self.J, axis=1), 1e-300)))


@dataclass(frozen=True)
class GammaData:
    X: np.ndarray
    Q: np.ndarray
    gamma: complex
    c_gamma: complex


def assemble_T(mesh, k):
    """Collocation matrix of ``T`` alone, shape ``(3F, 3F)``."""
    mat = kernels.bie_matrix(mesh.centroids, mesh.normals, mesh.areas, k)
    mat[np.diag_indices_from(mat)] -= 0.5
    return mat


def solve_current(mesh, ctx):
    """Solve the boundary equation for the incident plane wave in ``ctx``."""
    k = ctx.k
    mat = kernels.bie_matrix(mesh.centroids, mesh.normals, mesh.areas, k)
    e0 = plane_wave(ctx, mesh.centroids)
    rhs = -np.cross(mesh.normals, e0).reshape(-1)
    sol, cond = dense_solve(mat, rhs, "boundary system")
    J = sol.reshape(-1, 3)
    J = J - mesh.normals * np.einsum("fi,fi->f", mesh.normals, J)[:, None]
    return SurfaceCurrent(mesh=mesh, k=k, J=J, condition=cond)


def moment_Q(current):
    """``Q = int_S J``."""
    return current.mesh.areas @ current.J


def gamma_from_current(current):
    """Diagonal correction ``gamma = conj(Q).X / |Q|^2`` and ``c_gamma = 1/(1+gamma)``."""
    mesh = current.mesh
    Q = moment_Q(current)
    qq = float(np.vdot(Q, Q).real)
    scale = mesh.areas @ np.linalg.norm(current.J, axis=1)
    if qq == 0.0 or np.sqrt(qq) <= 1e-14 * max(scale, 1e-300):
        raise NumericalError("moment Q vanishes; gamma is undefined")
    rows = kernels.gamma_rows(mesh.centroids, mesh.normals, mesh.areas, current.k, current.J)
    X = rows.sum(axis=0)
    gamma = complex(np.vdot(Q, X) / qq)
    if abs(1.0 + gamma) < 1e-12:
        raise NumericalError("1 + gamma vanishes; correction is singular")
    return GammaData(X=X, Q=Q, gamma=gamma, c_gamma=1.0 / (1.0 + gamma))


def q_asymptotic_pec(c_D, a, c_gamma, curlE0):
    """Small-particle moment ``Q = -c_D a^3 c_gamma curl E0``."""
    if not a > 0:
        raise ValueError("a must be positive")
    return -c_D * a**3 * c_gamma * np.asarray(curlE0, dtype=np.complex128)


@dataclass(frozen=True)
class PECValidation:
    ka: float
    refinement: int
    Q_bie: np.ndarray
    Q_asym: np.ndarray
    gamma: complex
    c_gamma: complex
    consistency: float

    @property
    def rel_error(self):
        return float(np.linalg.norm(self.Q_bie - self.Q_asym) / np.linalg.norm(self.Q_asym))


def validate_pec(mesh, ctx, refinement=-1):
    """Solve, extract ``gamma`` and compare ``Q`` with the asymptotic formula.

    The particle is assumed centered at the origin, where ``curl E0`` is
    evaluated. ``consistency`` is ``|Q + X + c_D a^3 curl E0| / |c_D a^3 curl E0|``.
    """
    from .emcore import plane_wave_curl

    shp = ShapeConstants.from_mesh(mesh)
    cur = solve_current(mesh, ctx)
    gd = gamma_from_current(cur)
    curl0 = plane_wave_curl(ctx, np.zeros(3))
    q_asym = q_asymptotic_pec(shp.c_D, shp.a, gd.c_gamma, curl0)
    target = -shp.c_D * shp.a**3 * curl0
    consistency = float(np.linalg.norm(gd.Q + gd.X - target) / np.linalg.norm(target))
    return PECValidation(
        ka=float(abs(ctx.k) * shp.a),
        refinement=refinement,
        Q_bie=gd.Q,
        Q_asym=q_asym,
        gamma=gd.gamma,
        c_gamma=gd.c_gamma,
        consistency=consistency,
    )
