import numpy as np
import pytest

from conftest import unit_sphere
from smallscat.errors import ConfigError
from smallscat.shape import (
    ShapeConstants,
    SurfaceMesh,
    half_identity_check,
    half_identity_values,
    make_ellipsoid,
    make_icosphere,
    tau_tensor,
)


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_icosphere_face_count_and_closure(r):
    m = unit_sphere(r)
    assert m.n_faces == 20 * 4**r
    assert np.linalg.norm(m.areas @ m.normals) <= 1e-10 * m.surface_area
    assert m.volume > 0
    assert m.a == pytest.approx(1.0, abs=1e-12)


def test_icosphere_area_within_half_percent_at_refinement_3():
    m = make_icosphere(0.7, 3)
    assert abs(m.surface_area / (4 * np.pi * 0.49) - 1) < 5e-3


@pytest.mark.xfail(strict=True, reason="inscribed flat mesh misses the ball volume by 0.86% at refinement 3")
def test_icosphere_volume_within_half_percent_at_refinement_3():
    m = make_icosphere(1.0, 3)
    assert abs(m.volume / (4 * np.pi / 3) - 1) < 5e-3


def test_icosphere_volume_within_half_percent_at_refinement_4():
    m = unit_sphere(4)
    shp = ShapeConstants.from_mesh(m)
    assert abs(shp.c_D / (4 * np.pi / 3) - 1) < 5e-3


def test_icosphere_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        make_icosphere(1.0, 9)
    with pytest.raises(ConfigError):
        make_icosphere(-1.0, 1)
    with pytest.raises(ConfigError):
        make_icosphere(1.0, 1.5)
    with pytest.raises(ConfigError):
        make_ellipsoid((1.0, 0.0, 1.0), 1)


def test_ellipsoid_volume_and_equal_axes():
    m = make_ellipsoid((2.0, 1.0, 0.5), 3)
    assert abs(m.volume / (4 * np.pi / 3 * 1.0) - 1) < 1e-2
    assert m.a == pytest.approx(2.0, rel=1e-12)
    e = make_ellipsoid((1.0, 1.0, 1.0), 2)
    s = unit_sphere(2)
    assert np.array_equal(e.vertices, s.vertices)
    assert np.array_equal(e.faces, s.faces)


def test_tau_sphere_and_trace():
    tau = tau_tensor(unit_sphere(3))
    assert np.abs(tau - 2 / 3 * np.eye(3)).max() < 1e-3
    assert np.array_equal(tau, tau.T)
    for m in [unit_sphere(0), make_ellipsoid((3, 1, 2), 2), make_ellipsoid((1, 1, 0.2), 3)]:
        t = tau_tensor(m)
        assert np.trace(t) == pytest.approx(2.0, abs=1e-6)
        ev = np.linalg.eigvalsh(t)
        assert ev.min() >= 0 and ev.max() <= 1


def test_tau_prolate_ellipsoid_against_refined_reference():
    ref = tau_tensor(make_ellipsoid((2, 1, 1), 6))
    t3 = tau_tensor(make_ellipsoid((2, 1, 1), 3))
    assert np.abs(t3 - ref).max() < 1e-2
    off = t3 - np.diag(np.diag(t3))
    assert np.abs(off).max() < 1e-10
    d = np.diag(t3)
    assert abs(d[0] - d[1]) > 0.1
    assert np.all((d > 0) & (d < 1))


def test_tau_cauchy_differences_shrink_fourfold():
    taus = [tau_tensor(make_ellipsoid((2, 1, 1), r)) for r in range(6)]
    diffs = [np.abs(taus[r + 1] - taus[r]).max() for r in range(5)]
    for d0, d1 in zip(diffs, diffs[1:]):
        assert d0 / d1 >= 4.0


def test_constants_are_scale_invariant():
    m = make_ellipsoid((1.5, 1.0, 0.8), 2)
    a = ShapeConstants.from_mesh(m)
    b = ShapeConstants.from_mesh(m.scaled(1e-3))
    assert b.c_D == pytest.approx(a.c_D, rel=1e-12)
    assert b.c_S == pytest.approx(a.c_S, rel=1e-12)


def test_exact_sphere_constants():
    s = ShapeConstants.sphere()
    assert s.c_D == pytest.approx(4 * np.pi / 3)
    assert s.c_S == pytest.approx(4 * np.pi)


def test_half_identity_small_ka_and_static():
    m = unit_sphere(4)
    assert abs(half_identity_check(m, 0.01) - 0.5) < 0.02
    assert abs(half_identity_check(m, 0.0) - 0.5) < 0.02
    v = half_identity_values(m, 0.0)
    assert v.shape == (m.n_faces,)


def test_half_identity_drifts_as_ka_grows():
    m = unit_sphere(3)
    dev = [abs(half_identity_check(m, ka) - 0.5) for ka in (0.01, 0.3, 1.0)]
    assert dev[0] < dev[1] < dev[2]


def test_off_round_trip(tmp_path):
    m = make_ellipsoid((1.2, 1.0, 0.9), 1)
    p = tmp_path / "m.off"
    m.to_off(p)
    back = SurfaceMesh.from_off(p)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.faces, m.faces)


def test_mesh_validation_rejects_open_and_flipped():
    m = unit_sphere(1)
    with pytest.raises(ConfigError):
        SurfaceMesh(m.vertices, m.faces[:-1])
    flipped = m.faces.copy()
    flipped[0] = flipped[0, ::-1]
    with pytest.raises(ConfigError):
        SurfaceMesh(m.vertices, flipped)
    with pytest.raises(ConfigError):
        SurfaceMesh(m.vertices, m.faces[:, ::-1])
