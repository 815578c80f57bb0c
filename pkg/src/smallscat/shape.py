"""Triangulated particle surfaces and the shape constants derived from them.

Surface integrals use the one-point centroid rule on flat triangles;
refinement, not rule order, controls accuracy.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ConfigError

MAX_REFINEMENT = 8


class SurfaceMesh:
    """Closed, outward-oriented triangulated surface.

    Parameters
    ----------
    vertices : array_like, shape (V, 3)
    faces : array_like of int, shape (F, 3)
        Counter-clockwise when seen from outside.
    validate : bool
        Check closedness, consistent orientation and positive volume.
    """

    def __init__(self, vertices, faces, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ConfigError("vertices must have shape (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ConfigError("faces must have shape (F, 3)")
        v0, v1, v2 = (self.vertices[self.faces[:, i]] for i in range(3))
        cross = np.cross(v1 - v0, v2 - v0)
        twice_area = np.linalg.norm(cross, axis=1)
        if np.any(twice_area <= 0):
            raise ConfigError("degenerate triangle in mesh")
        self.areas = 0.5 * twice_area
        self.normals = cross / twice_area[:, None]
        self.centroids = (v0 + v1 + v2) / 3.0
        self.volume = float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)
        if validate:
            self.validate()

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def surface_area(self):
        return float(self.areas.sum())

    @cached_property
    def a(self):
        """Half the maximal pairwise vertex distance."""
        return 0.5 * kernels.max_pair_distance(self.vertices)

    def validate(self):
        f = self.faces
        edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        n_vert = self.vertices.shape[0]
        directed = edges[:, 0] * n_vert + edges[:, 1]
        if np.unique(directed).size != directed.size:
            raise ConfigError("mesh is not consistently oriented (repeated directed edge)")
        reverse = edges[:, 1] * n_vert + edges[:, 0]
        if not np.array_equal(np.sort(directed), np.sort(reverse)):
            raise ConfigError("mesh is not closed: some edge lacks an opposite twin")
        if self.volume <= 0:
            raise ConfigError("mesh encloses non-positive volume; faces must be outward-oriented")
        closure = np.linalg.norm(self.areas @ self.normals)
        if closure > 1e-10 * self.surface_area:
            raise ConfigError(f"area-weighted normals do not sum to zero ({closure:.3e})")

    def scaled(self, factor):
        return SurfaceMesh(self.vertices * float(factor), self.faces, validate=False)

    def to_off(self, path):
        """Write the mesh in OFF format."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("OFF\n")
            fh.write(f"{self.vertices.shape[0]} {self.n_faces} 0\n")
            for v in self.vertices:
                fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for tri in self.faces:
                fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")

    @classmethod
    def from_off(cls, path):
        with open(path, encoding="utf-8") as fh:
            tokens = [ln.split("#")[0].split() for ln in fh]
        tokens = [t for t in tokens if t]
        if not tokens or tokens[0][0] != "OFF":
            raise ConfigError(f"{path}: missing OFF header")
        nv, nf = int(tokens[1][0]), int(tokens[1][1])
        verts = np.array([[float(c) for c in t[:3]] for t in tokens[2 : 2 + nv]])
        faces = []
        for t in tokens[2 + nv : 2 + nv + nf]:
            if int(t[0]) != 3:
                raise ConfigError("only triangular faces are supported")
            faces.append([int(c) for c in t[1:4]])
        return cls(verts, np.array(faces))


def _icosahedron():
    p = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts / np.linalg.norm(verts, axis=1, keepdims=True), faces


def _subdivide(verts, faces):
    n = verts.shape[0]
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inverse = np.unique(key[:, 0] * n + key[:, 1], return_inverse=True)
    mid = 0.5 * (verts[uniq // n] + verts[uniq % n])
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    nf = faces.shape[0]
    m01, m12, m20 = (n + inverse[i * nf : (i + 1) * nf] for i in range(3))
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate(
        [
            np.stack([a, m01, m20], axis=1),
            np.stack([b, m12, m01], axis=1),
            np.stack([c, m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return np.vstack([verts, mid]), new_faces


def _unit_icosphere(refinement):
    if int(refinement) != refinement or refinement < 0:
        raise ConfigError(f"refinement must be a non-negative integer, got {refinement}")
    if refinement > MAX_REFINEMENT:
        raise ConfigError(f"refinement {refinement} exceeds the limit {MAX_REFINEMENT}")
    verts, faces = _icosahedron()
    for _ in range(int(refinement)):
        verts, faces = _subdivide(verts, faces)
    return verts, faces


def make_icosphere(a, refinement):
    """Geodesic sphere of radius ``a`` with ``20 * 4**refinement`` faces."""
    if not a > 0:
        raise ConfigError(f"radius must be positive, got {a}")
    verts, faces = _unit_icosphere(refinement)
    return SurfaceMesh(verts * float(a), faces)


def make_ellipsoid(semi_axes, refinement):
    """Icosphere mapped onto the ellipsoid with the given semi-axes."""
    axes = np.asarray(semi_axes, dtype=np.float64).reshape(3)
    if np.any(axes <= 0):
        raise ConfigError(f"semi-axes must be positive, got {axes}")
    verts, faces = _unit_icosphere(refinement)
    return SurfaceMesh(verts * axes, faces)


def tau_tensor(mesh):
    """``tau = I - b`` with ``b = (1/|S|) int_S N N^T``."""
    b = np.einsum("f,fi,fj->ij", mesh.areas, mesh.normals, mesh.normals) / mesh.surface_area
    b = 0.5 * (b + b.T)
    return np.eye(3) - b


@dataclass(frozen=True)
class ShapeConstants:
    """Size-independent description of one particle shape.

    ``c_D = |D| / a^3`` and ``c_S = |S| / a^2``; ``tau`` is the shape tensor.
    """

    surface_area: float
    volume: float
    a: float
    c_D: float
    c_S: float
    tau: np.ndarray

    @classmethod
    def from_mesh(cls, mesh):
        a = mesh.a
        return cls(
            surface_area=mesh.surface_area,
            volume=mesh.volume,
            a=a,
            c_D=mesh.volume / a**3,
            c_S=mesh.surface_area / a**2,
            tau=tau_tensor(mesh),
        )

    @classmethod
    def sphere(cls, a=1.0):
        """Exact values for a ball of radius ``a``."""
        return cls(
            surface_area=4.0 * np.pi * a**2,
            volume=4.0 * np.pi * a**3 / 3.0,
            a=a,
            c_D=4.0 * np.pi / 3.0,
            c_S=4.0 * np.pi,
            tau=2.0 / 3.0 * np.eye(3),
        )


def half_identity_values(mesh, k):
    """Per-centroid quadrature of ``-int_S dg(s, t)/dN_s ds`` (self-face excluded)."""
    return kernels.half_identity(mesh.centroids, mesh.normals, mesh.areas, k)


def half_identity_check(mesh, k):
    """Average of :func:`half_identity_values` over all centroids; tends to 1/2."""
    return complex(half_identity_values(mesh, k).mean())
