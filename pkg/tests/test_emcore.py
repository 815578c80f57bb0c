import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_curl, fd_div, fd_grad, fd_jacobian
from smallscat.emcore import (
    WaveContext,
    double_curl_dyad,
    double_curl_kernel,
    far_field_amplitude,
    grad_green,
    green,
    hessian_green,
    plane_wave,
    plane_wave_curl,
)
from smallscat.errors import ConfigError, SingularPointError

finite = st.floats(-2.0, 2.0, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_wave_context_derives_k():
    ctx = WaveContext(omega=2.0, eps=3.0, mu=0.5 + 0.25j, alpha=(0, 0, 1), calE=(1, 0, 0))
    assert ctx.k**2 == pytest.approx(4.0 * 3.0 * (0.5 + 0.25j), rel=1e-15)


@pytest.mark.parametrize(
    "kw",
    [
        dict(omega=0.0),
        dict(eps=-1.0),
        dict(mu=-1.0),
        dict(mu=0.0),
        dict(alpha=(0, 0, 1.001)),
        dict(calE=(0, 0, 1)),
    ],
)
def test_wave_context_rejects_bad_parameters(kw):
    base = dict(omega=1.0, eps=1.0, mu=1.0, alpha=(0, 0, 1), calE=(1, 0, 0))
    base.update(kw)
    with pytest.raises(ConfigError):
        WaveContext(**base)


def test_plane_wave_examples(ctx):
    assert np.allclose(plane_wave(ctx, np.zeros(3)), ctx.calE)
    x = np.array([0.0, 0.0, np.pi / ctx.k.real])
    assert np.allclose(plane_wave(ctx, x), -ctx.calE, atol=1e-15)
    assert np.allclose(plane_wave_curl(ctx, np.zeros(3)), 1j * ctx.k * np.cross(ctx.alpha, ctx.calE))


def test_plane_wave_divergence_and_curl_by_finite_differences(rng):
    ctx = WaveContext(omega=1.3, eps=1.0, mu=1.0, alpha=np.array([1, 2, 2]) / 3.0,
                      calE=np.array([2, -1, 0]) / np.sqrt(5))
    k = ctx.k.real
    h = 1e-5 / k
    for x in rng.normal(size=(5, 3)) * 1e-6:
        F = lambda y: plane_wave(ctx, y)
        assert abs(fd_div(F, x, h)) < 1e-6 * k
        curl = plane_wave_curl(ctx, x)
        assert np.linalg.norm(fd_curl(F, x, h) - curl) < 1e-6 * np.linalg.norm(curl)


def test_plane_wave_solves_helmholtz(rng):
    ctx = WaveContext.from_wavenumber(2.0, alpha=(0, 1, 0), calE=(0, 0, 1))
    h = 1e-3
    x = rng.normal(size=3)
    lap = sum(
        (plane_wave(ctx, x + h * e) - 2 * plane_wave(ctx, x) + plane_wave(ctx, x - h * e)) / h**2
        for e in np.eye(3)
    )
    resid = lap + ctx.k**2 * plane_wave(ctx, x)
    assert np.linalg.norm(resid) < 1e-4 * abs(ctx.k) ** 2


def test_green_trivial_values():
    assert green(0.0, np.array([1.0, 0, 0]), np.zeros(3)) == pytest.approx(1 / (4 * np.pi))
    r = 2.5
    assert abs(green(3.0, np.array([0, r, 0]), np.zeros(3))) == pytest.approx(1 / (4 * np.pi * r))


def test_green_solves_helmholtz_off_diagonal():
    k, y = 1.0, np.zeros(3)
    x = np.array([0.6, -0.3, 0.7])
    h = 1e-3
    g0 = green(k, x, y)
    lap = sum((green(k, x + h * e, y) - 2 * g0 + green(k, x - h * e, y)) / h**2 for e in np.eye(3))
    assert abs(lap + k**2 * g0) < 1e-4 * abs(g0) * k**2


@pytest.mark.parametrize("k", [1.0, 0.7 + 0.2j])
def test_grad_green_matches_finite_differences(k):
    y = np.array([0.1, -0.2, 0.3])
    x = y + np.array([0.6, 0.0, 0.8])
    fd = fd_grad(lambda p: green(k, p, y), x, 1e-5)
    an = grad_green(k, x, y)
    assert np.linalg.norm(fd - an) < 1e-7 * np.linalg.norm(an)


def test_grad_green_static_and_bound(rng):
    x, y = np.array([1.0, 2.0, 2.0]), np.zeros(3)
    assert np.allclose(grad_green(0.0, x, y), -x / (4 * np.pi * 27.0))
    for _ in range(20):
        d = rng.normal(size=3)
        r = np.linalg.norm(d)
        k = rng.uniform(0.1, 5.0)
        bound = (k + 1 / r) / (4 * np.pi * r) * (1 + 1e-12)
        assert np.linalg.norm(grad_green(k, d, np.zeros(3))) <= bound


def test_hessian_matches_finite_differences():
    k, y = 1.0 + 0.1j, np.zeros(3)
    x = np.array([0.3, 0.5, -0.6])
    fd = fd_jacobian(lambda p: grad_green(k, p, y), x, 1e-5)
    H = hessian_green(k, x, y)
    assert np.linalg.norm(fd - H) < 1e-7 * np.linalg.norm(H)
    assert np.allclose(H, H.T)
    # trace of the Hessian is the Laplacian, -k^2 g
    assert np.trace(H) == pytest.approx(-(k**2) * green(k, x, y), rel=1e-12)


def test_double_curl_kernel_matches_nested_finite_differences():
    k, y = 1.0, np.zeros(3)
    x = np.array([0.48, 0.6, 0.64])  # |x| = 1
    A = np.array([1.0, 0.0, 0.0])
    F = lambda p: np.cross(grad_green(k, p, y), A)
    fd = fd_curl(F, x, 1e-4)
    an = double_curl_kernel(k, x, y, A)
    assert np.linalg.norm(fd - an) < 1e-5 * np.linalg.norm(an)
    div = fd_div(lambda p: double_curl_kernel(k, p, y, A), x, 1e-4)
    assert abs(div) < 1e-5 * np.linalg.norm(an)


def test_double_curl_static_dipole():
    x, y = np.array([0.0, 0.0, 2.0]), np.zeros(3)
    r = 2.0
    rh = x / r
    A = rh * 1.5
    got = double_curl_kernel(0.0, x, y, A)
    static = -(A - 3 * np.dot(A, rh) * rh) / (4 * np.pi * r**3)
    assert np.allclose(got, static, rtol=1e-14)


def test_dyad_is_kernel_matrix():
    k = 0.9
    x, y = np.array([0.2, 0.4, 0.1]), np.array([-0.3, 0.0, 0.5])
    D = double_curl_dyad(k, x, y)
    for A in np.eye(3):
        assert np.allclose(D @ A, double_curl_kernel(k, x, y, A), rtol=1e-14)


@pytest.mark.parametrize("fn", [green, grad_green, hessian_green, double_curl_dyad])
def test_kernels_reject_singular_point(fn):
    with pytest.raises(SingularPointError):
        fn(1.0, np.ones(3), np.ones(3))


def test_far_field_examples():
    beta = np.array([1.0, 0.0, 0.0])
    assert np.allclose(far_field_amplitude(1.0, beta * 2.0, beta), 0)
    got = far_field_amplitude(1.0, np.array([0.0, 0.0, 1.0]), beta)
    assert np.allclose(got, -(1j / (4 * np.pi)) * np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ConfigError):
        far_field_amplitude(1.0, np.ones(3), np.ones(3))


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_far_field_is_transverse(q, b):
    if np.linalg.norm(b) < 1e-3:
        return
    beta = b / np.linalg.norm(b)
    A = far_field_amplitude(1.3, q + 0.5j * q[::-1], beta)
    assert abs(np.dot(beta, A)) <= 1e-12 * max(1.0, np.linalg.norm(A))
