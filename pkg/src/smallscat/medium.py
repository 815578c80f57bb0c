"""Homogenized medium: the limiting integral equation, n(x), mu(x) and h(x) design.

With ``beta = 2 c0 / (3 i omega mu)`` the limiting medium of impedance
particles has

    n = 1 / sqrt(1 + beta h N),        mu_eff = mu / (1 + beta h N),

where the square root uses ``arg z in [0, 2 pi)``. For perfectly conducting
particles ``beta h`` is replaced by ``C_D = c_D c_gamma``.
"""
import logging
from dataclasses import dataclass
import numpy as np

from . import kernels
from .emcore import plane_wave
from .errors import ConfigError, FeasibilityError, RegimeError
from .manybody import (
    CloudSolution,
    CubePartition,
    as_field,
    solve_system,
    _system,
    weighted_polarizability,
)
from .shape import ShapeConstants

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
# Re n < 0 with a small loss; arg lies in (-pi, -pi/2) so it is reachable with Re h >= 0
NEGATIVE_REFRACTION_PRESET = -1.5 - 1e-4j


@dataclass
class MediumGrid:
    """Cell-centered samples of ``N`` and ``h`` on a cube partition of the box."""

    partition: CubePartition
    N: np.ndarray
    h: np.ndarray

    @classmethod
    def from_box(cls, corner, extents, b, N_func, h_func):
        part = CubePartition.from_box(corner, extents, b)
        x = part.centers()
        N = as_field(N_func)(x)
        h = as_field(h_func, np.complex128)(x)
        if np.any(N < 0) or not np.all(np.isfinite(N)):
            raise ConfigError("N must be finite and non-negative on the grid")
        if np.any(h.real < 0):
            raise ConfigError("Re h must be non-negative on the grid")
        return cls(partition=part, N=N, h=h)

    @property
    def centers(self):
        return self.partition.centers()

    @property
    def volumes(self):
        return np.full(self.partition.n_cubes, self.partition.volume)

    @property
    def weights(self):
        return self.N * self.volumes


def self_term_blocks(pol, volumes):
    """Depolarization blocks ``-(1/3) P_q / |Delta_q|``."""
    return -pol / (3.0 * np.asarray(volumes)[:, None, None])


def assemble_limit_ie(grid, ctx, kind="impedance", shape=None, c_gamma=1.0,
                      tau1_override=None, self_term=False, dense=True):
    """Collocation system of the limiting equation at the cell centers.

    The unknowns are ``A_p = curl E(x_p)``; cell ``q`` enters through the
    weight ``N(x_q) |Delta_q|``. The self-cell integral is left out unless
    ``self_term`` is set.
    """
    shape = shape or ShapeConstants.sphere()
    tau_prime = None if tau1_override is None else np.asarray(tau1_override, dtype=np.complex128)
    pol = weighted_polarizability(kind, grid.h, grid.weights, shape, ctx, c_gamma, tau_prime)
    blocks = self_term_blocks(pol, grid.volumes) if self_term else None
    return _system(grid.centers, pol, ctx, "limit", dense, self_blocks=blocks)


@dataclass
class LimitSolution:
    grid: MediumGrid
    solution: CloudSolution

    @property
    def A(self):
        return self.solution.A

    @property
    def W(self):
        """``W(x_p) = P_p A_p / |Delta_p|``, the source density at cell centers."""
        return -self.solution.moments / self.grid.volumes[:, None]

    def field_at_centers(self):
        """``E(x_p)``; the self cell contributes nothing at its own center by symmetry."""
        sol = self.solution
        x = sol.points
        skip = np.arange(x.shape[0], dtype=np.int64)
        return plane_wave(sol.ctx, x) + kernels.dipole_sum(x, x, sol.moments, sol.ctx.k, skip)


def solve_limit_ie(grid, ctx, kind="impedance", shape=None, c_gamma=1.0,
                   tau1_override=None, self_term=False, method="auto"):
    """Solve the limiting equation; ``method`` as in :func:`manybody.solve_system`."""
    n = grid.partition.n_cubes
    dense = method == "direct" or (method == "auto" and n <= 2000)
    sys = assemble_limit_ie(grid, ctx, kind, shape, c_gamma, tau1_override, self_term, dense)
    sol = solve_system(sys, method=method)
    sol.ctx = ctx
    return LimitSolution(grid=grid, solution=sol)


def sqrt_branch(z):
    """``|z|^(1/2) exp(i phi / 2)`` with ``phi = arg z`` taken in ``[0, 2 pi)``.

    The result has argument in ``[0, pi)``. Use for n(x) only.
    """
    z = np.asarray(z, dtype=np.complex128)
    phi = np.angle(z)
    phi = np.where(phi < 0, phi + TWO_PI, phi)
    out = np.sqrt(np.abs(z)) * np.exp(0.5j * phi)
    return out if out.ndim else complex(out)


def contrast_coefficient(N, ctx, c0):
    """``c1 = 2 c0 N / (3 omega mu)``; real when ``mu`` is real."""
    N = np.asarray(N, dtype=np.float64)
    mu = ctx.mu.real if ctx.mu.imag == 0 else ctx.mu
    return 2.0 * c0 * N / (3.0 * ctx.omega * mu)


def _check_inputs(h, N):
    h = np.asarray(h, dtype=np.complex128)
    N = np.asarray(N, dtype=np.float64)
    if np.any(h.real < 0):
        raise ConfigError("Re h must be non-negative")
    if np.any(N < 0):
        raise ConfigError("N must be non-negative")
    return h, N


def medium_factor(h, N, ctx, c0):
    """``z = 1 + (2 c0 / (3 i omega mu)) h N``, evaluated as ``1 + c1 (-i h)`` so no rounding mixes parts."""
    h, N = _check_inputs(h, N)
    z = 1.0 + contrast_coefficient(N, ctx, c0) * (-1j * h)
    if np.any(z == 0):
        raise RegimeError("1 + (2 c0 / 3 i omega mu) h N vanishes: pole of n and mu")
    return z


def refraction_coefficient(h, N, ctx, c0):
    z = medium_factor(h, N, ctx, c0)
    return 1.0 / sqrt_branch(z)


def permeability(h, N, ctx, c0):
    return ctx.mu / medium_factor(h, N, ctx, c0)


def pec_factor(N, c_D, c_gamma=1.0):
    N = np.asarray(N, dtype=np.float64)
    if np.any(N < 0):
        raise ConfigError("N must be non-negative")
    z = 1.0 + c_D * complex(c_gamma) * N
    if np.any(z == 0):
        raise RegimeError("1 + C_D N vanishes")
    return z


def refraction_coefficient_pec(N, c_D, c_gamma=1.0):
    return 1.0 / sqrt_branch(pec_factor(N, c_D, c_gamma))


def permeability_pec(N, ctx, c_D, c_gamma=1.0):
    """``mu / (1 + C_D N)``."""
    return ctx.mu / pec_factor(N, c_D, c_gamma)


@dataclass(frozen=True)
class DesignResult:
    h: np.ndarray
    feasible: np.ndarray

    @property
    def infeasible_cells(self):
        return np.flatnonzero(~self.feasible)

    @property
    def all_feasible(self):
        return bool(np.all(self.feasible))


def _design_from_factor(z, N, ctx, c0):
    """``h = i (z - 1) / c1``, feasible iff ``Re h >= 0``."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    N = np.broadcast_to(np.asarray(N, dtype=np.float64), z.shape)
    if np.any(N < 0):
        raise ConfigError("N must be non-negative")
    trivial = z == 1.0
    h = np.zeros(z.shape, dtype=np.complex128)
    ok = N > 0
    c1 = np.broadcast_to(contrast_coefficient(N, ctx, c0), z.shape)
    dz = z - 1.0
    if np.isrealobj(c1) or np.all(np.imag(c1) == 0):
        c1r = np.real(c1)
        # h1 = -Im z / c1, h2 = (Re z - 1) / c1
        h[ok] = (-dz.imag[ok] + 1j * dz.real[ok]) / c1r[ok]
    else:
        h[ok] = 1j * dz[ok] / c1[ok]
    feasible = np.where(ok, h.real >= 0, trivial)
    h[~ok] = 0.0
    return DesignResult(h=h, feasible=feasible)


def design_report_for_n(n_target, N, ctx, c0):
    """Pointwise inversion of ``n(h)``; never raises on infeasible cells."""
    n_target = np.atleast_1d(np.asarray(n_target, dtype=np.complex128))
    if np.any(n_target == 0):
        raise ConfigError("n_target must be nonzero")
    return _design_from_factor(1.0 / (n_target * n_target), N, ctx, c0)


def design_report_for_mu(mu_target, N, ctx, c0):
    mu_target = np.atleast_1d(np.asarray(mu_target, dtype=np.complex128))
    if np.any(mu_target == 0):
        raise ConfigError("mu_target must be nonzero")
    return _design_from_factor(ctx.mu / mu_target, N, ctx, c0)


def _strict(report, what):
    if not report.all_feasible:
        bad = report.infeasible_cells
        raise FeasibilityError(
            f"{what}: {bad.size} of {report.h.size} target cells need Re h < 0 or N = 0",
            infeasible=bad,
        )
    return report.h


def design_h_for_n(n_target, N, ctx, c0):
    """``h`` with ``refraction_coefficient(h, N) = n_target`` and ``Re h >= 0``.

    Raises
    ------
    FeasibilityError
        If some target has ``Im(1 / n_target^2) > 0`` or needs ``N = 0``.
    """
    return _strict(design_report_for_n(n_target, N, ctx, c0), "refraction design")


def design_h_for_mu(mu_target, N, ctx, c0):
    return _strict(design_report_for_mu(mu_target, N, ctx, c0), "permeability design")


@dataclass(frozen=True)
class EffectiveMedium:
    n: np.ndarray
    mu_eff: np.ndarray
    c1: np.ndarray

    @classmethod
    def impedance(cls, h, N, ctx, c0):
        return cls(
            n=np.atleast_1d(refraction_coefficient(h, N, ctx, c0)),
            mu_eff=np.atleast_1d(permeability(h, N, ctx, c0)),
            c1=np.atleast_1d(contrast_coefficient(N, ctx, c0)),
        )

    @classmethod
    def pec(cls, N, ctx, c_D, c_gamma=1.0):
        return cls(
            n=np.atleast_1d(refraction_coefficient_pec(N, c_D, c_gamma)),
            mu_eff=np.atleast_1d(permeability_pec(N, ctx, c_D, c_gamma)),
            c1=np.atleast_1d(np.asarray(c_D * complex(c_gamma) * np.asarray(N))),
        )


def _d1(f, axis, h):
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)


def _d2(f, axis, h):
    return (np.roll(f, -1, axis) - 2.0 * f + np.roll(f, 1, axis)) / (h * h)


def curl_fd(E, spacing):
    """Central-difference curl on a periodic-indexed grid; only interior values are meaningful."""
    hx, hy, hz = spacing
    Ex, Ey, Ez = E[..., 0], E[..., 1], E[..., 2]
    return np.stack(
        [
            _d1(Ez, 1, hy) - _d1(Ey, 2, hz),
            _d1(Ex, 2, hz) - _d1(Ez, 0, hx),
            _d1(Ey, 0, hx) - _d1(Ex, 1, hy),
        ],
        axis=-1,
    )


def curlcurl_fd(E, spacing):
    """``grad div E - lap E`` with second-order stencils, including mixed derivatives."""
    h = spacing
    out = np.empty_like(E)
    for i in range(3):
        acc = 0.0
        for j in range(3):
            if j == i:
                continue
            # d_i d_j E_j - d_j d_j E_i
            acc = acc + _d1(_d1(E[..., j], j, h[j]), i, h[i]) - _d2(E[..., i], j, h[j])
        out[..., i] = acc
    return out


def curlcurl_residual(E, spacing, ctx, hN, c0, grad_hN=None):
    """Residual of ``curl curl E = (k^2 E - beta [grad(hN), curl E]) / (1 + beta hN)``.

    Parameters
    ----------
    E : ndarray, shape (nx, ny, nz, 3)
        Field on a regular grid.
    spacing : float or sequence of 3 floats
    hN : ndarray, shape (nx, ny, nz)
        Product ``h N`` sampled on the grid.
    grad_hN : ndarray, optional
        Analytic gradient of ``hN``; central differences otherwise.

    Returns
    -------
    float
        Max over interior points of ``|LHS - RHS|``, divided by ``|k|^2 max |E|``.
    """
    E = np.asarray(E, dtype=np.complex128)
    if E.ndim != 4 or E.shape[-1] != 3:
        raise ConfigError("E must have shape (nx, ny, nz, 3)")
    if min(E.shape[:3]) < 5:
        raise ConfigError("curl-curl residual needs at least 5 grid points per direction")
    spacing = np.broadcast_to(np.asarray(spacing, dtype=np.float64), (3,))
    hN = np.asarray(hN, dtype=np.complex128)
    beta = 2.0 * c0 / (3j * ctx.omega * ctx.mu)
    if grad_hN is None:
        grad_hN = np.stack([_d1(hN, i, spacing[i]) for i in range(3)], axis=-1)
    lhs = curlcurl_fd(E, spacing)
    denom = (1.0 + beta * hN)[..., None]
    rhs = (ctx.k**2 * E - beta * np.cross(grad_hN, curl_fd(E, spacing))) / denom
    inner = (slice(1, -1),) * 3
    err = np.linalg.norm((lhs - rhs)[inner], axis=-1).max()
    return float(err / (abs(ctx.k) ** 2 * np.linalg.norm(E, axis=-1).max()))


__all__ = [
    "MediumGrid",
    "LimitSolution",
    "assemble_limit_ie",
    "solve_limit_ie",
    "sqrt_branch",
    "refraction_coefficient",
    "permeability",
    "refraction_coefficient_pec",
    "permeability_pec",
    "design_h_for_n",
    "design_h_for_mu",
    "design_report_for_n",
    "design_report_for_mu",
    "DesignResult",
    "EffectiveMedium",
    "curlcurl_residual",
]
