"""Clouds of many small particles: placement, the coupled system and field evaluation.

Each particle responds through ``Q_m = -P_m A_m`` with ``A_m = curl E_e(x_m)``.
Taking the curl of ``E = E0 + sum_m [grad g(x, x_m), Q_m]`` at ``x_j`` gives

    A_j + sum_{m != j} D(x_j, x_m) P_m A_m = curl E0(x_j),

where ``D`` is the double-curl dyad. The cube-reduced system has the same form
with one unknown per cube and ``P_p`` built from the weight ``N(x_p) |Delta_p|``.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres
from scipy.spatial import cKDTree

from . import kernels
from ._linalg import dense_solve
from .emcore import INV_FOUR_PI, plane_wave, plane_wave_curl
from .errors import ConfigError, NumericalError, RegimeError, SingularPointError
from .particle import PEC, Impedance, SmallParticle, impedance_polarizability, validity_report

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
LATTICE_MIN = 5
NEAR_FIELD_FACTOR = 2.0
DENSE_LIMIT = 2000


def as_field(f, dtype=np.float64):
    """Wrap a constant or a callable into a vectorized ``(n, 3) -> (n,)`` map."""
    if callable(f):
        def fn(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            return np.broadcast_to(np.asarray(f(x), dtype=dtype), x.shape[:1]).copy()
        return fn
    value = np.asarray(f, dtype=dtype)
    if value.ndim != 0:
        raise ConfigError("field must be a scalar or a callable")

    def const(x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.full(x.shape[0], value, dtype=dtype)
    return const


@dataclass(frozen=True)
class CubePartition:
    """Regular partition of an axis-aligned box into cubes of side ``b``."""

    corner: np.ndarray
    counts: tuple
    b: float

    @classmethod
    def from_box(cls, corner, extents, b):
        corner = np.asarray(corner, dtype=np.float64).reshape(3)
        extents = np.asarray(extents, dtype=np.float64).reshape(3)
        if not b > 0 or np.any(extents <= 0):
            raise ConfigError("cube side and box extents must be positive")
        n = np.rint(extents / b)
        if np.any(n < 1) or np.any(np.abs(n * b - extents) > 1e-9 * extents):
            raise ConfigError(f"cube side {b} does not divide box extents {extents.tolist()}")
        return cls(corner=corner, counts=tuple(int(c) for c in n), b=float(b))

    @property
    def n_cubes(self):
        return int(np.prod(self.counts))

    @property
    def volume(self):
        return self.b**3

    @property
    def extents(self):
        return np.asarray(self.counts, dtype=np.float64) * self.b

    def centers(self):
        """Cube centers in C order over ``(ix, iy, iz)``."""
        axes = [self.corner[i] + (np.arange(self.counts[i]) + 0.5) * self.b for i in range(3)]
        g = np.meshgrid(*axes, indexing="ij")
        return np.stack([c.reshape(-1) for c in g], axis=1)


@dataclass(frozen=True)
class CloudConfig:
    """Inputs of the distribution law.

    Parameters
    ----------
    corner, extents : array_like, shape (3,)
        The box ``Omega``.
    N_func, h_func : callable or scalar
        ``N(x) >= 0`` and ``h(x)`` with ``Re h >= 0``; callables take ``(n, 3)``.
    a, kappa : float
        Particle size and impedance exponent.
    kind : {"impedance", "pec"}
    shape : ShapeConstants
        Shared by every particle.
    c_gamma : complex
        Perfectly conducting correction factor from the boundary solver.
    tau1_override : array_like, optional
        Replaces ``tau`` in the impedance polarizability.
    """

    corner: np.ndarray
    extents: np.ndarray
    N_func: Callable
    h_func: Callable
    a: float
    kappa: float
    kind: str
    shape: object
    c_gamma: complex = 1.0
    tau1_override: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "corner", np.asarray(self.corner, dtype=np.float64).reshape(3))
        object.__setattr__(self, "extents", np.asarray(self.extents, dtype=np.float64).reshape(3))
        object.__setattr__(self, "N_func", as_field(self.N_func))
        object.__setattr__(self, "h_func", as_field(self.h_func, np.complex128))
        if self.kind not in ("impedance", "pec"):
            raise ConfigError(f"kind must be 'impedance' or 'pec', got {self.kind!r}")
        if not self.a > 0:
            raise ConfigError("a must be positive")
        if not 0.0 <= self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in [0, 1), got {self.kappa}")

    @property
    def count_exponent(self):
        """``2 - kappa`` for impedance particles, 3 for perfectly conducting ones."""
        return 3.0 if self.kind == "pec" else 2.0 - self.kappa

    @property
    def tau_prime(self):
        if self.tau1_override is not None:
            return np.asarray(self.tau1_override, dtype=np.complex128).reshape(3, 3)
        return np.asarray(self.shape.tau, dtype=np.complex128)

    def sample(self, x):
        """``(N, h)`` at points ``x`` with the physical constraints checked."""
        N = self.N_func(x)
        h = self.h_func(x)
        if np.any(N < 0) or not np.all(np.isfinite(N)):
            raise ConfigError("N(x) must be finite and non-negative")
        if self.kind == "impedance" and np.any(h.real < 0):
            raise ConfigError("Re h(x) must be non-negative")
        return N, h


def weighted_polarizability(kind, h, weight, shape, ctx, c_gamma=1.0, tau_prime=None):
    """``(n, 3, 3)`` polarizabilities of point scatterers carrying a law weight.

    For a particle ``weight = a^(2-kappa)`` (impedance) or ``a^3`` (PEC); for a
    cube or a grid cell ``weight = N |Delta|``. Cube reduction and the limiting
    equation both call this so their matrices coincide exactly.
    """
    weight = np.asarray(weight, dtype=np.float64)
    if kind == "pec":
        coef = shape.c_D * complex(c_gamma) * weight
        return coef.astype(np.complex128)[:, None, None] * np.eye(3)
    tau = shape.tau if tau_prime is None else tau_prime
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), weight.shape)
    return impedance_polarizability(h * weight, 0.0, 1.0, shape.c_S, tau, ctx)


@dataclass
class ParticleCloud:
    centers: np.ndarray
    h: np.ndarray
    cube_index: np.ndarray
    partition: CubePartition
    config: CloudConfig
    d_min: float

    @property
    def M(self):
        return self.centers.shape[0]

    @property
    def a(self):
        return self.config.a

    @property
    def particles(self):
        cfg = self.config
        out = []
        for x, h in zip(self.centers, self.h):
            if cfg.kind == "pec":
                kind = PEC(c_D=cfg.shape.c_D, c_gamma=cfg.c_gamma)
            else:
                kind = Impedance(h=h, kappa=cfg.kappa, c_S=cfg.shape.c_S, tau=cfg.shape.tau,
                                 tau1_override=cfg.tau1_override)
            out.append(SmallParticle(center=x, a=cfg.a, kind=kind))
        return out

    def polarizabilities(self, ctx):
        cfg = self.config
        w = np.full(self.M, cfg.a**cfg.count_exponent)
        return weighted_polarizability(cfg.kind, self.h, w, cfg.shape, ctx, cfg.c_gamma, cfg.tau_prime)

    def validity(self, ctx, threshold=0.1):
        if self.M < 2:
            return None
        return validity_report(self.a, ctx.k, self.d_min, threshold)

    def permuted(self, perm):
        perm = np.asarray(perm)
        return ParticleCloud(self.centers[perm], self.h[perm], self.cube_index[perm],
                             self.partition, self.config, self.d_min)


def _largest_remainder(quota):
    """Integer counts with ``sum = round(sum quota)``; ties go to the lower index."""
    base = np.floor(quota).astype(np.int64)
    extra = int(round(float(quota.sum()))) - int(base.sum())
    if extra > 0:
        frac = quota - base
        order = np.lexsort((np.arange(quota.size), -frac))
        base[order[:extra]] += 1
    return base


def _cube_sites(center, b, n, lattice_min):
    c = int(np.ceil(round(n ** (1.0 / 3.0), 12)))
    while c**3 < n:
        c += 1
    c = max(c, lattice_min)
    s = b / c
    offs = (np.arange(c) - 0.5 * (c - 1)) * s
    g = np.meshgrid(offs, offs, offs, indexing="ij")
    sites = np.stack([q.reshape(-1) for q in g], axis=1)
    pick = np.floor((np.arange(n) + 0.5) * (c**3) / n).astype(np.int64)
    return center + sites[pick], s


def min_distance(points):
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 2:
        return np.inf
    d, _ = cKDTree(points).query(points, k=2)
    return float(d[:, 1].min())


def place_particles(cfg, b, lattice_min=LATTICE_MIN):
    """Deterministic lattice placement following the distribution law.

    Cube ``p`` receives ``n_p = N(x_p) b^3 / a^e`` particles after
    largest-remainder rounding, with ``e = 2 - kappa`` or ``3``. The cube holds
    a cell-centered lattice of ``c = max(ceil(n_p^(1/3)), lattice_min)`` sites
    per side and the particles take ``n_p`` of the ``c^3`` sites at evenly
    spaced flat indices, so that ``b / d >= lattice_min``.
    """
    part = CubePartition.from_box(cfg.corner, cfg.extents, b)
    xc = part.centers()
    N, _ = cfg.sample(xc)
    quota = N * part.volume / cfg.a**cfg.count_exponent
    counts = _largest_remainder(quota)
    chunks, owner = [], []
    for p, n in enumerate(counts):
        if n == 0:
            continue
        pts, s = _cube_sites(xc[p], part.b, int(n), lattice_min)
        if n > 1 and s <= 2.0 * cfg.a:
            raise RegimeError(
                f"cube {p}: {n} particles need spacing {s:.3e} <= 2a = {2 * cfg.a:.3e}"
            )
        chunks.append(pts)
        owner.append(np.full(int(n), p, dtype=np.int64))
    if chunks:
        centers = np.vstack(chunks)
        cube_index = np.concatenate(owner)
        _, h = cfg.sample(centers)
    else:
        centers = np.zeros((0, 3))
        cube_index = np.zeros(0, dtype=np.int64)
        h = np.zeros(0, dtype=np.complex128)
    d = min_distance(centers)
    logger.info("placed %d particles in %d cubes, d_min = %.4g", centers.shape[0], part.n_cubes, d)
    return ParticleCloud(centers=centers, h=h, cube_index=cube_index, partition=part,
                         config=cfg, d_min=d)


@dataclass
class LinearSystem:
    """``(I + K) A = rhs`` with ``K[j, m] = D(x_j, x_m) P_m``."""

    points: np.ndarray
    pol: np.ndarray
    rhs: np.ndarray
    k: complex
    level: str
    matrix: Optional[np.ndarray] = None
    self_blocks: Optional[np.ndarray] = None

    @property
    def size(self):
        return 3 * self.points.shape[0]

    def dense(self):
        if self.matrix is None:
            self.matrix = kernels.coupling_matrix(self.points, self.pol, self.k, self.self_blocks)
        return self.matrix

    def apply(self, A):
        A = np.asarray(A, dtype=np.complex128).reshape(-1, 3)
        w = np.einsum("mij,mj->mi", self.pol, A)
        out = A + kernels.coupling_apply(self.points, w, self.k)
        if self.self_blocks is not None:
            out += np.einsum("mij,mj->mi", self.self_blocks, A)
        return out.reshape(-1)


def _system(points, pol, ctx, level, dense, self_blocks=None):
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.shape[0] > 1 and min_distance(points) == 0.0:
        raise SingularPointError("coincident centers in the coupled system")
    rhs = plane_wave_curl(ctx, points).reshape(-1)
    sys = LinearSystem(points=points, pol=np.ascontiguousarray(pol), rhs=rhs, k=ctx.k,
                       level=level, self_blocks=self_blocks)
    if dense:
        sys.dense()
    return sys


def assemble_full(cloud, ctx, dense=True):
    """Full system with one unknown ``A_m`` per particle."""
    return _system(cloud.centers, cloud.polarizabilities(ctx), ctx, "full", dense)


def reduced_system(cfg, partition, ctx, dense=True):
    """Cube system for ``cfg`` on ``partition``; needs no particle positions."""
    xc = partition.centers()
    N, h = cfg.sample(xc)
    w = N * partition.volume
    pol = weighted_polarizability(cfg.kind, h, w, cfg.shape, ctx, cfg.c_gamma, cfg.tau_prime)
    return _system(xc, pol, ctx, "reduced", dense)


def reduce_to_cubes(cloud, ctx, min_ratio=5.0, dense=True):
    """Cube-reduced system with one unknown per cube center.

    Requires ``b / d_min >= min_ratio``.
    """
    b = cloud.partition.b
    if cloud.M > 1 and b / cloud.d_min < min_ratio * (1 - 1e-12):
        raise RegimeError(f"b/d = {b / cloud.d_min:.3g} is below the reduction threshold {min_ratio}")
    return reduced_system(cloud.config, cloud.partition, ctx, dense)


@dataclass
class CloudSolution:
    A: np.ndarray
    points: np.ndarray
    pol: np.ndarray
    ctx: object
    level: str
    residual: float
    condition: float = np.nan
    iterations: int = 0
    exclusion: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def moments(self):
        """``Q_m = -P_m A_m``."""
        return -np.einsum("mij,mj->mi", self.pol, self.A)


def solve_system(system, method="auto", exclusion=0.0, tol=RESIDUAL_TOL):
    """Solve an assembled system.

    Parameters
    ----------
    method : {"auto", "direct", "gmres"}
        ``auto`` picks the dense LU solve up to ``DENSE_LIMIT`` unknown points
        and restarted GMRES on the matrix-free operator beyond.
    exclusion : float
        Probe exclusion radius stored with the solution.
    """
    n = system.points.shape[0]
    if method == "auto":
        method = "direct" if n <= DENSE_LIMIT else "gmres"
    rhs = system.rhs
    rnorm = np.linalg.norm(rhs)
    cond, iters = np.nan, 0
    if n == 0:
        x = np.zeros(0, dtype=np.complex128)
    elif method == "direct":
        x, cond = dense_solve(system.dense(), rhs, f"{system.level} system")
    elif method == "gmres":
        op = LinearOperator((system.size, system.size), matvec=system.apply, dtype=np.complex128)
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        x, info = gmres(op, rhs, rtol=0.1 * tol, atol=0.0, restart=min(system.size, 200),
                        maxiter=50, callback=cb, callback_type="pr_norm")
        iters = counter["n"]
        if info != 0:
            raise NumericalError(f"GMRES did not converge (info={info})")
    else:
        raise ConfigError(f"unknown solve method {method!r}")
    if n and system.matrix is not None:
        res_vec = system.matrix @ x - rhs
    elif n:
        res_vec = system.apply(x) - rhs
    else:
        res_vec = np.zeros(0)
    residual = float(np.linalg.norm(res_vec) / rnorm) if rnorm > 0 else float(np.linalg.norm(res_vec))
    logger.info("%s system: %d unknowns, %s, residual %.2e", system.level, 3 * n, method, residual)
    if residual > tol:
        raise NumericalError(f"relative residual {residual:.3e} exceeds {tol:.0e}")
    return CloudSolution(A=x.reshape(-1, 3), points=system.points, pol=system.pol, ctx=None,
                         level=system.level, residual=residual, condition=cond,
                         iterations=iters, exclusion=exclusion)


def solve_cloud(cloud, ctx, method="auto"):
    sol = solve_system(assemble_full(cloud, ctx, dense=method != "gmres" and cloud.M <= DENSE_LIMIT),
                       method=method, exclusion=NEAR_FIELD_FACTOR * cloud.a)
    sol.ctx = ctx
    return sol


def solve_reduced(cloud, ctx, min_ratio=5.0):
    sol = solve_system(reduce_to_cubes(cloud, ctx, min_ratio), method="direct")
    sol.ctx = ctx
    return sol


def _check_probes(sol, x):
    if sol.points.shape[0] == 0:
        return
    d, _ = cKDTree(sol.points).query(x, k=1)
    bad = d <= sol.exclusion if sol.exclusion > 0 else d == 0.0
    if np.any(bad):
        raise RegimeError(
            f"{int(bad.sum())} probe(s) within the near-field radius {sol.exclusion:.3g} of a source"
        )


def evaluate_field(sol, x, ctx=None):
    """``E0(x) + sum_m [grad g(x, x_m), Q_m]`` at points ``x`` of shape ``(..., 3)``."""
    ctx = ctx or sol.ctx
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1, 3)
    _check_probes(sol, flat)
    E = plane_wave(ctx, flat)
    if sol.points.shape[0]:
        E = E + kernels.dipole_sum(flat, sol.points, sol.moments, ctx.k)
    return E.reshape(x.shape)


def effective_field_at_particle(sol, j, ctx=None):
    """Field at ``x_j`` with the ``j``-th source term left out."""
    ctx = ctx or sol.ctx
    if not 0 <= j < sol.points.shape[0]:
        raise IndexError(f"particle index {j} out of range")
    xj = sol.points[j : j + 1]
    E = plane_wave(ctx, xj)
    E = E + kernels.dipole_sum(xj, sol.points, sol.moments, ctx.k, np.array([j]))
    return E[0]


def far_field(sol, beta, ctx=None):
    """Amplitude ``(ik/4pi) sum_m [beta, Q_m] exp(-ik beta.x_m)`` for unit ``beta`` of shape ``(B, 3)``."""
    ctx = ctx or sol.ctx
    beta = np.atleast_2d(np.asarray(beta, dtype=np.float64))
    if np.any(np.abs(np.linalg.norm(beta, axis=1) - 1.0) > 1e-12):
        raise ConfigError("beta must be unit vectors")
    if sol.points.shape[0] == 0:
        return np.zeros(beta.shape, dtype=np.complex128)
    phase = np.exp(-1j * ctx.k * (beta @ sol.points.T))
    S = phase @ sol.moments
    return 1j * ctx.k * INV_FOUR_PI * np.cross(beta, S)


def sphere_directions(n_theta, n_phi):
    """Deterministic ``(theta, phi)`` product sampling of the unit sphere."""
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    ph = np.arange(n_phi) * 2.0 * np.pi / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    return np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
