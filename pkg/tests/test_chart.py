import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from kklab import catalog as cat
from kklab.chart import (
    ChartedMetric,
    FDScheme,
    SignConvention,
    christoffel,
    curvature_pack,
    laplace_beltrami,
    scalar_curvature,
)
from kklab.errors import OutOfDomain, SingularMetric


def euclid(n):
    return ChartedMetric(n, lambda p: np.broadcast_to(np.eye(n), np.shape(p)[:-1] + (n, n)).copy(),
                         np.full(n, -10.0), np.full(n, 10.0))


def test_euclidean_christoffels_vanish():
    gam = christoffel(euclid(3), np.array([0.3, -1.2, 2.0]))
    assert np.all(np.abs(gam) < 1e-14)


def test_polar_christoffels():
    gam = christoffel(cat.polar_plane(), np.array([2.0, 0.0]))
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -2.0
    expected[1, 0, 1] = expected[1, 1, 0] = 0.5
    assert np.allclose(gam, expected, atol=1e-9)


def test_sphere_christoffels():
    th = np.pi / 3
    gam = christoffel(cat.round_s2(1.0), np.array([th, 0.0]))
    assert gam[0, 1, 1] == pytest.approx(-np.sin(th) * np.cos(th), abs=1e-9)
    assert gam[1, 0, 1] == pytest.approx(1 / np.tan(th), abs=1e-9)
    assert gam[1, 1, 0] == gam[1, 0, 1]
    assert abs(gam[0, 0, 0]) < 1e-10 and abs(gam[1, 1, 1]) < 1e-10


def test_flat_torus_curvature_zero():
    pack = curvature_pack(cat.flat_torus(3), np.array([0.1, 3.0, 6.2]))
    assert abs(pack.scalar) < 1e-8
    assert np.max(np.abs(pack.riemann)) < 1e-8


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_sphere_scalar(r):
    assert scalar_curvature(cat.round_s2(r), np.array([1.1, 0.4])) == pytest.approx(2 / r**2, abs=1e-6)


def test_s3_scalar():
    assert scalar_curvature(cat.round_s3(1.0), np.array([1.2, 0.9, 2.0])) == pytest.approx(6.0, abs=1e-5)


def test_convention_flips_sign():
    p = np.array([1.0, 0.5])
    pos = curvature_pack(cat.round_s2(0.5), p, convention=SignConvention.POSITIVE)
    neg = curvature_pack(cat.round_s2(0.5), p, convention=SignConvention.NEGATIVE)
    assert pos.scalar == pytest.approx(8.0, abs=1e-6)
    assert neg.scalar == pytest.approx(-8.0, abs=1e-6)
    assert np.array_equal(pos.riemann, -neg.riemann)


def test_laplacian_of_constant_and_quadratic():
    torus = cat.flat_torus(2)
    assert abs(laplace_beltrami(torus, lambda q: np.full(q.shape[:-1], 3.0), np.array([1.0, 2.0]))) < 1e-12
    plane = euclid(2)
    val = laplace_beltrami(plane, lambda q: q[..., 0] ** 2 + q[..., 1] ** 2, np.array([0.7, -0.4]))
    assert val == pytest.approx(4.0, abs=1e-8)


def test_laplacian_of_l1_harmonic_on_sphere():
    pts = np.array([[0.5, 0.1], [1.3, 2.0], [2.4, 5.0]])
    vals = laplace_beltrami(cat.round_s2(1.0), lambda q: np.cos(q[..., 0]), pts)
    assert np.allclose(vals, -2 * np.cos(pts[:, 0]), atol=1e-8)


@pytest.mark.parametrize("name", ["s2(0.7)", "s3(1.5)", "polar-plane"])
def test_exact_symmetries_and_ricci_symmetry(name):
    _, m = cat.lookup(name)
    for p in cat.random_points(m, 5, seed=3, margin=0.2):
        pack = curvature_pack(m, p)
        assert np.array_equal(pack.christoffel, np.swapaxes(pack.christoffel, 1, 2))
        assert np.array_equal(pack.riemann, -np.swapaxes(pack.riemann, 2, 3))
        assert np.max(np.abs(pack.ricci - pack.ricci.T)) < 1e-6


def test_order2_convergence_exponent():
    m = cat.round_s2(1.0)
    p = np.array([1.0, 0.3])
    errs = [abs(scalar_curvature(m, p, FDScheme(h, order=2)) - 2.0) for h in (0.02, 0.01)]
    exponent = np.log2(errs[0] / errs[1])
    assert 1.7 <= exponent <= 2.3


def test_richardson_improves_order2():
    m = cat.round_s2(1.0)
    p = np.array([1.0, 0.3])
    plain = abs(scalar_curvature(m, p, FDScheme(0.01, order=2)) - 2)
    extrap = abs(scalar_curvature(m, p, FDScheme(0.01, order=2, richardson=True)) - 2)
    assert extrap < plain / 20


def test_product_metric_scalar_adds():
    s2 = cat.round_s2(0.8)
    s3 = cat.round_s3(1.3)

    def metric(q):
        out = np.zeros(q.shape[:-1] + (5, 5))
        out[..., :2, :2] = s2(q[..., :2])
        out[..., 2:, 2:] = s3(q[..., 2:])
        return out

    prod = ChartedMetric(5, metric, np.concatenate([s2.lower, s3.lower]), np.concatenate([s2.upper, s3.upper]),
                         s2.periodic + s3.periodic)
    p = np.array([1.0, 0.2, 1.1, 1.7, 0.5])
    total = scalar_curvature(prod, p)
    assert total == pytest.approx(scalar_curvature(s2, p[:2]) + scalar_curvature(s3, p[2:]), abs=1e-6)
    assert total == pytest.approx(2 / 0.64 + 6 / 1.69, abs=1e-5)


def test_boundary_points_rejected():
    with pytest.raises(OutOfDomain):
        christoffel(cat.round_s2(1.0), np.array([0.0005, 1.0]))


def test_periodic_axis_wraps():
    m = cat.round_s2(1.0)
    a = curvature_pack(m, np.array([1.0, 0.0])).scalar
    b = curvature_pack(m, np.array([1.0, 2 * np.pi - 1e-9])).scalar
    assert a == pytest.approx(b, abs=1e-9)


def test_ill_conditioned_metric_raises():
    m = ChartedMetric(2, lambda q: np.broadcast_to(np.diag([1.0, 1e-13]), q.shape[:-1] + (2, 2)).copy(),
                      [-1, -1], [1, 1])
    with pytest.raises(SingularMetric):
        christoffel(m, np.zeros(2))


def test_fd_scheme_validation():
    with pytest.raises(ValueError):
        FDScheme(order=3)
    with pytest.raises(ValueError):
        FDScheme(step=-1e-3)
    with pytest.raises(ValueError):
        christoffel(cat.flat_torus(2), np.ones(2), FDScheme(step=1.0))


@settings(max_examples=25, deadline=None)
@given(th=hst.floats(0.2, np.pi - 0.2), ph=hst.floats(0, 2 * np.pi - 1e-6), r=hst.floats(0.3, 3.0))
def test_sphere_scalar_property(th, ph, r):
    assert scalar_curvature(cat.round_s2(r), np.array([th, ph])) == pytest.approx(2 / r**2, rel=1e-6)
