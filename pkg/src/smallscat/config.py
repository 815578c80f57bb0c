"""YAML run configuration: parsing, defaults and physical validation.

Complex numbers may be written as ``[re, im]``, as a plain number or as a
Python literal string such as ``"0.2+0.1j"``. Scalar fields ``N`` and ``h``
are given as named profiles, see :func:`profile`.
"""
import logging

import numpy as np
import yaml

from .emcore import WaveContext
from .errors import ConfigError
from .shape import ShapeConstants, make_ellipsoid, make_icosphere

logger = logging.getLogger(__name__)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def section(cfg, key, required=True):
    val = cfg.get(key)
    if val is None:
        if required:
            raise ConfigError(f"missing section '{key}'")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"section '{key}' must be a mapping")
    return val


def as_complex(v, what="value"):
    try:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValueError
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: cannot read {v!r} as a complex number") from exc


def as_float(v, what="value"):
    try:
        out = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: expected a number, got {v!r}") from exc
    if not np.isfinite(out):
        raise ConfigError(f"{what}: must be finite")
    return out


def as_vec3(v, what, complex_ok=False):
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ConfigError(f"{what}: expected a list of 3 entries")
    if complex_ok:
        return np.array([as_complex(c, what) for c in v])
    return np.array([as_float(c, what) for c in v])


def wave(cfg):
    """``wave: {omega, eps, mu, alpha, calE}``; all optional, defaults give ``k = 1``."""
    w = section(cfg, "wave", required=False)
    return WaveContext(
        omega=as_float(w.get("omega", 1.0), "wave.omega"),
        eps=as_float(w.get("eps", 1.0), "wave.eps"),
        mu=as_complex(w.get("mu", 1.0), "wave.mu"),
        alpha=as_vec3(w.get("alpha", [0.0, 0.0, 1.0]), "wave.alpha"),
        calE=as_vec3(w.get("calE", [1.0, 0.0, 0.0]), "wave.calE", complex_ok=True),
    )


def profile(sec, what, complex_valued=False):
    """Named scalar profile.

    ``{profile: constant, value: v}`` or
    ``{profile: gaussian, peak: p, center: [..], width: w, base: b}`` giving
    ``b + p exp(-|x - center|^2 / w^2)``. A bare number means constant.
    """
    conv = (lambda v, w: as_complex(v, w)) if complex_valued else as_float
    if not isinstance(sec, dict):
        value = conv(sec, what)
        return value
    kind = sec.get("profile", "constant")
    if kind == "constant":
        return conv(sec.get("value", 0.0), f"{what}.value")
    if kind == "gaussian":
        peak = conv(sec.get("peak", 1.0), f"{what}.peak")
        base = conv(sec.get("base", 0.0), f"{what}.base")
        center = as_vec3(sec.get("center", [0.0, 0.0, 0.0]), f"{what}.center")
        width = as_float(sec.get("width", 1.0), f"{what}.width")
        if width <= 0:
            raise ConfigError(f"{what}.width must be positive")

        def fn(x):
            r2 = np.sum((np.asarray(x) - center) ** 2, axis=-1)
            return base + peak * np.exp(-r2 / width**2)
        return fn
    raise ConfigError(f"{what}: unknown profile {kind!r}")


def box(sec, what="box"):
    corner = as_vec3(sec.get("corner", [-0.5, -0.5, -0.5]), f"{what}.corner")
    extents = as_vec3(sec.get("extents", [1.0, 1.0, 1.0]), f"{what}.extents")
    if np.any(extents <= 0):
        raise ConfigError(f"{what}.extents must be positive")
    return corner, extents


def mesh_from(sec, what="mesh", a=1.0, refinement=None):
    kind = sec.get("type", "sphere")
    ref = int(sec.get("refinement", 3) if refinement is None else refinement)
    if kind == "sphere":
        return make_icosphere(a, ref)
    if kind == "ellipsoid":
        axes = as_vec3(sec.get("semi_axes", [1.0, 1.0, 1.0]), f"{what}.semi_axes")
        return make_ellipsoid(axes * a / axes.max(), ref)
    raise ConfigError(f"{what}.type must be 'sphere' or 'ellipsoid', got {kind!r}")


def shape_constants(sec):
    """``{type: sphere, exact: true}`` uses the ball values; otherwise a mesh is built."""
    if sec.get("type", "sphere") == "sphere" and sec.get("exact", True):
        return ShapeConstants.sphere()
    return ShapeConstants.from_mesh(mesh_from(sec, "shape"))


def points(sec, what="probes"):
    """``{points: [[x,y,z], ...]}`` or ``{grid: {corner, extents, counts}}`` or ``{sphere: {radius, count}}``."""
    if "points" in sec:
        pts = np.asarray([as_vec3(p, what) for p in sec["points"]])
        return pts.reshape(-1, 3)
    if "grid" in sec:
        g = sec["grid"]
        corner, extents = box(g, f"{what}.grid")
        counts = [int(c) for c in g.get("counts", [5, 5, 5])]
        if len(counts) != 3 or min(counts) < 1:
            raise ConfigError(f"{what}.grid.counts must be 3 positive integers")
        axes = [corner[i] + extents[i] * (np.arange(counts[i]) / max(counts[i] - 1, 1)) for i in range(3)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)
    if "sphere" in sec:
        s = sec["sphere"]
        return fibonacci_sphere(int(s.get("count", 10)), as_float(s.get("radius", 1.5), f"{what}.sphere.radius"),
                                as_vec3(s.get("center", [0.0, 0.0, 0.0]), f"{what}.sphere.center"))
    raise ConfigError(f"{what}: give 'points', 'grid' or 'sphere'")


def fibonacci_sphere(n, radius, center=(0.0, 0.0, 0.0)):
    """Deterministic, nearly uniform points on a sphere."""
    if n < 1:
        raise ConfigError("probe count must be positive")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    r = np.sqrt(1.0 - z * z)
    return np.asarray(center) + radius * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def floats(v, what):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{what}: expected a non-empty list")
    return [as_float(x, what) for x in v]
