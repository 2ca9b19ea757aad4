import math

import numpy as np
import pytest

from billiardlab.errors import PointInside
from billiardlab.geometry import (AffineOval, Circle, cross, Ellipse, OrientedLine, PolygonTable,
                                  Polyline, Stadium, SupportFourierOval, curve_from_config,
                                  random_support_oval, wrap_angle)
from billiardlab.roots import periodic_roots, safeguarded_newton

# perimeter of x^2/4 + y^2 = 1 by 40-digit adaptive quadrature of the speed
ELLIPSE_2_1_PERIMETER = 9.6884482205476761984

OVALS = [
    Circle(1.0),
    Circle(0.7, (0.3, -0.2)),
    Ellipse(2.0, 1.0),
    Stadium(0.5, 1.0),
    SupportFourierOval([1.0, 0.0, 0.05, -0.02], [0.0, 0.03, 0.01]),
]


def test_ellipse_perimeter_matches_quadrature():
    assert Ellipse(2, 1).total_length == pytest.approx(ELLIPSE_2_1_PERIMETER, abs=1e-13)


def test_stadium_and_support_perimeters():
    assert Stadium(0.5, 1).total_length == pytest.approx(2 + 2 * math.pi, abs=1e-14)
    # Cauchy: perimeter of a support-function oval is 2 pi times the mean support value
    oval = SupportFourierOval([1.3, 0.0, 0.04], [0.0, 0.02])
    assert oval.total_length == pytest.approx(2 * math.pi * 1.3, rel=1e-12)


@pytest.mark.parametrize("oval", OVALS, ids=lambda o: type(o).__name__)
def test_arclength_round_trip(oval):
    s = np.linspace(0, oval.total_length, 37, endpoint=False)
    back = oval.arclength(oval.param_of_arclength(s))
    assert np.max(np.abs(back - s)) < 1e-11


@pytest.mark.parametrize("oval", OVALS, ids=lambda o: type(o).__name__)
def test_derivative_matches_finite_difference(oval):
    t = np.linspace(0.1, 6.1, 13)
    h = 1e-6
    fd = (oval.position(t + h) - oval.position(t - h)) / (2 * h)
    assert np.max(np.abs(fd - oval.derivative(t))) < 1e-7


@pytest.mark.parametrize("oval", OVALS, ids=lambda o: type(o).__name__)
def test_jet_agrees_with_vector_methods(oval):
    for t in (0.0, 0.4, 2.9, 5.5):
        x, y, dx, dy, ddx, ddy = oval.jet(t)
        p = oval.position(np.array([t]))[0]
        d = oval.derivative(np.array([t]))[0]
        dd = oval.second_derivative(np.array([t]))[0]
        assert np.allclose([x, y, dx, dy, ddx, ddy], [*p, *d, *dd], atol=1e-12)


@pytest.mark.parametrize("oval", OVALS, ids=lambda o: type(o).__name__)
def test_second_intersection_lands_on_the_line(oval):
    rng = np.random.default_rng(5)
    for t in rng.uniform(0, 2 * math.pi, 20):
        tan = oval.tangent_angle(t)
        direction = tan + rng.uniform(0.1, math.pi - 0.1)
        t2 = oval.second_intersection(t, direction)
        line = OrientedLine.through(oval.position(t), direction)
        assert abs(line.signed_distance(oval.position(np.array([t2])))[0]) < 1e-10
        # and it lies ahead along the chord direction
        step = oval.position(np.array([t2]))[0] - oval.position(np.array([t]))[0]
        assert step @ line.direction > 0


def test_circle_curvature_and_ellipse_vertices():
    assert Circle(0.5).curvature(np.array([1.0]))[0] == pytest.approx(2.0)
    e = Ellipse(2, 1)
    # curvature a/b^2 at the ends of the major axis, b/a^2 at the ends of the minor axis
    assert e.curvature(np.array([0.0]))[0] == pytest.approx(2.0, rel=1e-12)
    assert e.curvature(np.array([math.pi / 2]))[0] == pytest.approx(0.25, rel=1e-12)


def test_tangent_points_from_external_circle():
    c = Circle(1.0)
    t_fwd, t_back = c.tangent_points_from_external((2.0, 0.0))
    # tangency points of x = 2 at angles +-60 degrees; forward keeps the disc on the left
    pts = c.position(np.array([t_fwd, t_back]))
    assert np.allclose(sorted(pts[:, 1]), [-math.sqrt(3) / 2, math.sqrt(3) / 2])
    a = np.array([2.0, 0.0])
    fwd = c.position(np.array([t_fwd]))[0]
    assert cross(fwd - a, -a) > 0
    with pytest.raises(PointInside):
        c.tangent_points_from_external((0.2, 0.1))


def test_oriented_line_reflection_is_an_involution():
    line = OrientedLine.through((0.3, -1.0), 0.7)
    pts = np.random.default_rng(1).normal(size=(10, 2))
    assert np.allclose(line.reflect(line.reflect(pts)), pts, atol=1e-14)
    assert np.allclose(line.reversed().signed_distance(pts), -line.signed_distance(pts))


def test_wrap_angle_range():
    for a in (-7.0, -math.pi, 0.0, 3 * math.pi, 100.0):
        w = wrap_angle(a)
        assert 0.0 <= w < 2 * math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)


def test_polygon_table_basics():
    sq = PolygonTable([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert sq.n == 4 and sq.is_convex()
    assert np.allclose(sq.point(1.5), [1.0, 0.5])
    assert sq.diameter == pytest.approx(math.sqrt(2))
    quad = PolygonTable([(-2, -2), (3, -2), (2, 3), (-3, 1)])
    hub = quad.diagonal_intersection()
    # the hub lies on both diagonals
    for i, j in ((0, 2), (1, 3)):
        a, b = quad.vertices[i], quad.vertices[j]
        assert abs(cross(b - a, hub - a)) < 1e-12


def test_config_round_trip():
    for curve in [Circle(2.0, (1, 0)), Ellipse(3, 1), Stadium(1, 0.5),
                  SupportFourierOval([1.0, 0.0, 0.1], [0.0, 0.05]),
                  PolygonTable([(0, 0), (2, 0), (1, 1)]), Polyline([(0, 0), (1, 1)])]:
        again = curve_from_config(curve.to_config())
        assert again.to_config() == curve.to_config()


def test_random_oval_is_convex():
    oval = random_support_oval(np.random.default_rng(3), 6, 0.2)
    t = np.linspace(0, 2 * math.pi, 2000, endpoint=False)
    assert np.all(oval.curvature(t) > 0)


def test_affine_oval_of_circle_is_ellipse():
    a = AffineOval(Circle(1.0), np.diag([2.0, 1.0]), np.zeros(2))
    assert a.total_length == pytest.approx(ELLIPSE_2_1_PERIMETER, rel=1e-10)


def test_safeguarded_newton_and_periodic_roots():
    r = safeguarded_newton(math.cos, lambda x: -math.sin(x), 0.0, 3.0)
    assert r == pytest.approx(math.pi / 2, abs=1e-15)
    roots = periodic_roots(lambda t: np.sin(3 * t), lambda t: 3 * np.cos(3 * t))
    assert np.allclose(np.sort(roots), np.pi * np.arange(6) / 3, atol=1e-12)
