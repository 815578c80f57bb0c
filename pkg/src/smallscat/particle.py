"""Closed-form responses of one small particle.

A particle is summarized by a 3x3 polarizability ``P`` with ``Q = -P curl E``
where ``curl E`` is evaluated at the particle center:

* impedance: ``P = zeta c_S a^2 / (i omega mu) * tau'`` with ``zeta = h / a^kappa``
* perfectly conducting: ``P = c_D a^3 c_gamma * I``
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import kernels
from .emcore import INV_FOUR_PI
from .errors import ConfigError, SingularPointError


@dataclass(frozen=True)
class PEC:
    c_D: float
    c_gamma: complex = 1.0


@dataclass(frozen=True)
class Impedance:
    h: complex
    kappa: float
    c_S: float
    tau: np.ndarray
    tau1_override: Optional[np.ndarray] = None

    def __post_init__(self):
        h = complex(self.h)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=np.float64).reshape(3, 3))
        if self.tau1_override is not None:
            object.__setattr__(
                self, "tau1_override", np.asarray(self.tau1_override, dtype=np.complex128).reshape(3, 3)
            )
        if h.real < 0:
            raise ConfigError(f"Re h must be non-negative, got {h}")
        if not 0.0 <= self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in [0, 1), got {self.kappa}")

    @property
    def effective_tau(self):
        return self.tau if self.tau1_override is None else self.tau1_override


@dataclass(frozen=True)
class SmallParticle:
    center: np.ndarray
    a: float
    kind: Union[PEC, Impedance]

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        if not self.a > 0:
            raise ConfigError(f"particle size must be positive, got {self.a}")

    @property
    def zeta(self):
        if not isinstance(self.kind, Impedance):
            raise AttributeError("zeta is defined for impedance particles only")
        return self.kind.h / self.a**self.kind.kappa


def impedance_polarizability(h, kappa, a, c_S, tau, ctx):
    """``zeta c_S a^2 / (i omega mu) * tau``; ``h`` may be an array."""
    h = np.asarray(h, dtype=np.complex128)
    coef = h * c_S * a ** (2.0 - kappa) / (1j * ctx.omega * ctx.mu)
    return coef[..., None, None] * np.asarray(tau, dtype=np.complex128)


def polarizability(p, ctx):
    kind = p.kind
    if isinstance(kind, Impedance):
        return impedance_polarizability(kind.h, kind.kappa, p.a, kind.c_S, kind.effective_tau, ctx)
    return kind.c_D * p.a**3 * complex(kind.c_gamma) * np.eye(3, dtype=np.complex128)


def impedance_moment(p, ctx, curlE):
    """``Q = -(zeta |S| / i omega mu) tau' curl E``."""
    if not isinstance(p.kind, Impedance):
        raise ConfigError("impedance_moment needs an impedance particle")
    return -polarizability(p, ctx) @ np.asarray(curlE, dtype=np.complex128)


def pec_moment(p, curlE):
    """``Q = -c_D a^3 c_gamma curl E``."""
    if not isinstance(p.kind, PEC):
        raise ConfigError("pec_moment needs a perfectly conducting particle")
    return -p.kind.c_D * p.a**3 * complex(p.kind.c_gamma) * np.asarray(curlE, dtype=np.complex128)


def dipole_field(Q, center, k, x):
    """Scattered field ``[grad g(x, center), Q]`` at points ``x``."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1, 3)
    center = np.asarray(center, dtype=np.float64).reshape(1, 3)
    if np.any(np.all(flat == center, axis=1)):
        raise SingularPointError("dipole field evaluated at its center")
    out = kernels.dipole_sum(flat, center, np.asarray(Q, dtype=np.complex128).reshape(1, 3), k)
    return out.reshape(x.shape)


@dataclass(frozen=True)
class ValidityReport:
    ka: float
    a_over_d: float
    kd: float
    threshold: float
    small_size_ok: bool
    subwavelength_ok: bool

    @property
    def valid(self):
        return self.small_size_ok and self.subwavelength_ok

    @property
    def warnings(self):
        out = []
        if not self.small_size_ok:
            out.append(f"ka + a/d = {self.ka + self.a_over_d:.3g} >= {self.threshold}")
        if not self.subwavelength_ok:
            out.append(f"kd = {self.kd:.3g} > 1")
        return out


def validity_report(a, k, d_min, threshold=0.1):
    """Check ``a << d << lambda`` through ``ka + a/d`` and ``kd``.

    The small-size flag fails once ``ka + a/d`` reaches ``threshold``.
    """
    if not d_min > 0:
        raise ConfigError("d_min must be positive")
    ka = float(abs(k) * a)
    ad = float(a / d_min)
    kd = float(abs(k) * d_min)
    return ValidityReport(
        ka=ka,
        a_over_d=ad,
        kd=kd,
        threshold=threshold,
        small_size_ok=ka + ad < threshold,
        subwavelength_ok=kd <= 1.0,
    )


__all__ = [
    "PEC",
    "Impedance",
    "SmallParticle",
    "polarizability",
    "impedance_polarizability",
    "impedance_moment",
    "pec_moment",
    "dipole_field",
    "validity_report",
    "ValidityReport",
    "INV_FOUR_PI",
]
