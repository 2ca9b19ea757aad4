import json
import math

import numpy as np
import pytest

from billiardlab.clicks import (ClickTrain, click_events, click_histogram, click_spectrum,
                                rotated, rotation_trains)
from billiardlab.errors import ParallelDegenerate
from billiardlab.geometry import AffineOval, Circle, Ellipse, PolygonTable, Polyline, \
    random_support_oval


def _train(lams, eps=1.0):
    lams = np.asarray(lams, dtype=float)
    return ClickTrain(eps, (1.0, 0.0), lams, np.ones(len(lams), dtype=int), (0.0, eps))


def test_segment_row_clicks_once_with_multiplicity_three():
    tr = click_events(Polyline([(-1, 0), (1, 0)]), 1.0, (0, 1), (0, 1))
    assert tr.lambdas.tolist() == [0.0]
    assert tr.multiplicity.tolist() == [3]


def test_straight_pieces_click_where_the_point_meets_them():
    # p - lam v lies on x = 0.3 when lam = p_x - 0.3
    tr = click_events(Polyline([(0.3, -1), (0.3, 1)]), 1.0, (1, 0), (0, 1))
    assert np.allclose(tr.lambdas, [0.7], atol=1e-15)
    box = PolygonTable([(0.3, -0.5), (0.8, -0.5), (0.8, 0.5), (0.3, 0.5)])
    assert np.allclose(click_events(box, 1.0, (1, 0), (0, 1)).lambdas, [0.2, 0.7], atol=1e-15)


def test_polygon_translation_equivariance():
    tri = PolygonTable([(0, -0.4), (0.9, 0.3), (-0.5, 0.6)])
    v = np.array([0.6, 0.8])
    delta = 0.21
    base = click_events(tri, 0.25, v, (-1, 1))
    moved = click_events(PolygonTable(np.asarray(tri.vertices) + delta * v), 0.25, v,
                         (-1 - delta, 1 - delta))
    assert np.allclose(moved.lambdas, base.lambdas - delta, atol=1e-12)


def test_circle_unit_lattice():
    tr = click_events(Circle(), 1.0, (1, 0), (0, 1))
    # lambda = 0 is reached from (0, +-1) and from (+-1, 0): four lattice points at once
    assert tr.lambdas.tolist() == [0.0]
    assert tr.multiplicity.tolist() == [4]


def test_circle_clicks_solve_the_circle_equation():
    eps = 0.3
    tr = click_events(Circle(), eps, (1, 0), (0, 2 * eps))
    want = []
    for i in range(-10, 12):
        for j in range(-5, 6):
            x, y = i * eps, j * eps
            if abs(y) <= 1:
                for sgn in (-1, 1):
                    lam = x - sgn * math.sqrt(1 - y * y)
                    if 0 <= lam < 2 * eps:
                        want.append(lam)
    got = tr.expanded()
    assert len(got) == len(want)
    assert np.allclose(np.sort(got), np.sort(want), atol=1e-12)


def test_period_epsilon_on_random_oval():
    oval = random_support_oval(np.random.default_rng(5), n_harmonics=4, roughness=0.08)
    eps = 0.01
    a = click_events(oval, eps, (1, 0), (0, eps))
    b = click_events(oval, eps, (1, 0), (eps, 2 * eps))
    assert np.array_equal(a.multiplicity, b.multiplicity)
    assert np.max(np.abs(b.lambdas - eps - a.lambdas)) < 1e-10


def test_translation_equivariance():
    e = Ellipse(1.3, 0.7)
    v = np.array([0.6, 0.8])
    delta = 0.137
    base = click_events(e, 0.25, v, (-1, 1))
    moved = click_events(AffineOval(e, np.eye(2), delta * v), 0.25, v, (-1 - delta, 1 - delta))
    assert np.allclose(moved.lambdas, base.lambdas - delta, atol=1e-12)


def test_convex_curve_at_most_two_clicks_per_point():
    tr = click_events(Ellipse(1.3, 0.7), 0.2, (0.6, 0.8), (0, 0.2))
    assert tr.multiplicity.sum() <= 2 * 100


def test_parallel_segment_interval_event():
    seg = Polyline([(-0.5, 0), (1.5, 0)])
    tr = click_events(seg, 1.0, (1, 0), (0, 1))
    # lattice points 0, 1 and 2 of the row sweep [0, 0.5], [0, 1] and [0.5, 1]
    assert [iv[:2] for iv in tr.intervals] == [(0.0, 0.5), (0.0, 1.0), (0.5, 1.0)]
    assert all(lo < hi for lo, hi, _, _ in tr.intervals)
    with pytest.raises(ParallelDegenerate):
        click_events(seg, 1.0, (1, 0), (0, 1), on_parallel="raise")


def test_square_lattice_symmetry():
    sq = PolygonTable([(-0.7, -0.7), (0.7, -0.7), (0.7, 0.7), (-0.7, 0.7)])
    v = (0.6, 0.8)
    a = click_events(rotated(sq, 0.3), 0.5, v, (0, 1))
    b = click_events(rotated(rotated(sq, 0.3), math.pi / 2), 0.5, v, (0, 1))
    assert np.allclose(a.expanded(), b.expanded(), atol=1e-12)


def test_rotation_trains_one_per_angle():
    trains = rotation_trains(Circle(0.9), [0.0, 0.5, 1.0], 0.5, (1, 0), (0, 0.5))
    assert len(trains) == 3
    for t in trains[1:]:
        assert np.allclose(t.lambdas, trains[0].lambdas, atol=1e-12)


def test_preconditions():
    with pytest.raises(ValueError):
        click_events(Circle(), 0.0, (1, 0), (0, 1))
    with pytest.raises(ValueError):
        click_events(Circle(), 1.0, (1, 1), (0, 1))
    with pytest.raises(ValueError):
        click_events(Circle(), 1.0, (1, 0), (0, math.inf))


def test_histogram_totals_and_segment_delta():
    tr = click_events(Circle(), 0.05, (1, 0), (0, 0.05))
    _, counts = click_histogram(tr, 32)
    assert counts.sum() == tr.multiplicity.sum()
    # slope one: every lattice point clicks at the same phase, -0.013 mod 0.1
    seg = click_events(Polyline([(-1, -0.987), (1, 1.013)]), 0.1, (0, 1), (0, 0.1))
    assert np.allclose(seg.lambdas, 0.087, atol=1e-12)
    _, counts = click_histogram(seg, 64)
    assert counts.sum() == seg.multiplicity.sum() and np.count_nonzero(counts) == 1
    flat = _train(np.arange(6400) / 6400)
    _, counts = click_histogram(flat, 64)
    assert np.all(counts == 100)
    with pytest.raises(ValueError):
        click_histogram(flat, 8)


def test_spectrum_examples():
    assert np.allclose(click_spectrum(_train([0.0]), 5), 1.0)
    c = click_spectrum(_train([0.0, 0.5]), 2)
    assert abs(c[0]) < 1e-15 and c[1] == pytest.approx(2.0)


def test_serialization():
    tr = click_events(Circle(), 1.0, (1, 0), (0, 1))
    assert tr.to_csv() == "lambda,multiplicity\r\n0.0,4\r\n"
    head = json.loads(tr.header_json())
    assert head["epsilon"] == 1.0 and head["curve"]["kind"] == "circle"
