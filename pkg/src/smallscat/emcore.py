"""Plane waves, the scalar Helmholtz Green function and its derivatives.

All point arguments broadcast over leading dimensions: ``x`` of shape
``(..., 3)`` gives results of shape ``(...)`` or ``(..., 3)``. The Green
function is ``g(x, y) = exp(ik|x-y|) / (4 pi |x-y|)``; ``k`` may be complex.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularPointError

INV_FOUR_PI = 1.0 / (4.0 * np.pi)
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class WaveContext:
    """Background medium and incident plane wave ``E0 = calE exp(ik alpha.x)``.

    Parameters
    ----------
    omega : float
        Angular frequency, in whatever unit system the caller uses.
    eps : float
        Dielectric constant of the background.
    mu : complex
        Magnetic permeability of the background, ``Re mu >= 0``.
    alpha : array_like, shape (3,)
        Unit propagation direction.
    calE : array_like, shape (3,)
        Polarization, orthogonal to ``alpha``.
    """

    omega: float
    eps: float
    mu: complex
    alpha: np.ndarray
    calE: np.ndarray
    k: complex = field(init=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64).reshape(3)
        calE = np.asarray(self.calE, dtype=np.complex128).reshape(3)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "calE", calE)
        object.__setattr__(self, "mu", complex(self.mu))
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.mu.real < 0 or self.mu == 0:
            raise ConfigError(f"mu must be nonzero with Re mu >= 0, got {self.mu}")
        if abs(np.linalg.norm(alpha) - 1.0) > _UNIT_TOL:
            raise ConfigError(f"alpha must be a unit vector, |alpha| = {np.linalg.norm(alpha)!r}")
        scale = max(np.linalg.norm(calE), 1.0)
        if abs(np.dot(alpha, calE)) > _UNIT_TOL * scale:
            raise ConfigError("polarization must be orthogonal to alpha")
        object.__setattr__(self, "k", complex(self.omega * np.sqrt(complex(self.eps) * self.mu)))

    @classmethod
    def from_wavenumber(cls, k, alpha=(0.0, 0.0, 1.0), calE=(1.0, 0.0, 0.0)):
        """Context with ``eps = mu = 1`` so that ``k = omega``."""
        return cls(omega=float(k), eps=1.0, mu=1.0, alpha=alpha, calE=calE)

    def with_polarization(self, calE):
        return WaveContext(self.omega, self.eps, self.mu, self.alpha, calE)


def _points(x):
    return np.asarray(x, dtype=np.float64)


def plane_wave(ctx, x):
    """Incident field ``calE exp(ik alpha.x)``."""
    x = _points(x)
    phase = np.exp(1j * ctx.k * (x @ ctx.alpha))
    return phase[..., None] * ctx.calE


def plane_wave_curl(ctx, x):
    """``curl E0 = ik (alpha x calE) exp(ik alpha.x)``."""
    x = _points(x)
    phase = np.exp(1j * ctx.k * (x @ ctx.alpha))
    return (1j * ctx.k * phase)[..., None] * np.cross(ctx.alpha, ctx.calE)


def _separation(x, y):
    d = _points(x) - _points(y)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0.0):
        raise SingularPointError("kernel evaluated at x == y")
    return d, r


def green(k, x, y):
    _, r = _separation(x, y)
    return np.exp(1j * k * r) * INV_FOUR_PI / r


def grad_green(k, x, y):
    """Gradient of ``g`` with respect to its first argument."""
    d, r = _separation(x, y)
    g = np.exp(1j * k * r) * INV_FOUR_PI / r
    return (g * (1j * k - 1.0 / r) / r)[..., None] * d


def hessian_green(k, x, y):
    """Analytic Hessian of ``g`` in ``x``, shape ``(..., 3, 3)``."""
    d, r = _separation(x, y)
    g = np.exp(1j * k * r) * INV_FOUR_PI / r
    rh = d / r[..., None]
    iso = g * (1j * k / r - 1.0 / r**2)
    rad = g * (-k * k - 3j * k / r + 3.0 / r**2)
    return iso[..., None, None] * np.eye(3) + rad[..., None, None] * rh[..., :, None] * rh[..., None, :]


def double_curl_dyad(k, x, y):
    """Matrix ``D`` with ``D A = curl_x curl_x (g A) = k^2 g A + Hess(g) A``."""
    return k * k * green(k, x, y)[..., None, None] * np.eye(3) + hessian_green(k, x, y)


def double_curl_kernel(k, x, y, A):
    """``curl_x [grad_x g(x, y), A]`` for a constant vector ``A``."""
    return np.einsum("...ij,...j->...i", double_curl_dyad(k, x, y), np.asarray(A, dtype=np.complex128))


def far_field_amplitude(k, Q, beta):
    """Scattering amplitude ``(ik / 4 pi) beta x Q`` of a dipole at the origin."""
    beta = _points(beta)
    norm = np.linalg.norm(beta, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise ConfigError("beta must be a unit vector")
    return 1j * k * INV_FOUR_PI * np.cross(beta, np.asarray(Q, dtype=np.complex128))
