import math

import numpy as np
import pytest

from billiardlab.errors import TangentialRay, VertexHit
from billiardlab.geometry import Circle, Ellipse, PolygonTable, cross, unit
from billiardlab.maps import (ChordState, Parallel, ParabolaTrap, Pencil, PhasePoint,
                              ProjectiveTable, Ray, birkhoff_map, birkhoff_phase_map,
                              circle_map_f, cross_ratio, gutkin_defect, outer_map,
                              projective_map, projective_reflect, puck_map,
                              symplectic_map_oval, symplectic_map_polygon,
                              symplectic_polygon_phase_map, trap_digits, trap_trace)
from billiardlab.orbit import OrbitRecord, run_orbit

# one bounce in x^2/4 + y^2 = 1 from s=0 at alpha=pi/3: 40-digit ray/ellipse solve
# plus quadrature of the arclength
ELLIPSE_STEP = (2.1361519872131179618, 0.45155489488680266121)


def test_birkhoff_step_matches_independent_solve():
    p = birkhoff_map(Ellipse(2, 1), PhasePoint(0.0, math.pi / 3))
    assert p.s == pytest.approx(ELLIPSE_STEP[0], abs=1e-13)
    assert p.alpha == pytest.approx(ELLIPSE_STEP[1], abs=1e-13)


def test_birkhoff_on_circle_advances_by_twice_alpha():
    c = Circle(1.5)
    p = birkhoff_map(c, PhasePoint(0.2, 0.9))
    assert p.alpha == pytest.approx(0.9, abs=1e-14)
    assert p.s == pytest.approx(0.2 + 1.5 * 1.8, abs=1e-13)


def test_birkhoff_winding_is_reported():
    c = Circle(1.0)
    p = birkhoff_map(c, PhasePoint(6.0, 1.0))
    assert p.winding == 1
    assert p.s == pytest.approx(8.0 - 2 * math.pi, abs=1e-13)


def test_phase_point_rejects_bad_angle():
    with pytest.raises(ValueError):
        PhasePoint(0.0, 0.0)
    with pytest.raises(ValueError):
        PhasePoint(0.0, math.pi)


def test_puck_shift_on_circle():
    d = 0.7
    p = puck_map(Circle(1.0), d, PhasePoint(0.1, 1.1))
    assert p.alpha == pytest.approx(1.1, abs=1e-14)
    assert p.s == pytest.approx(0.1 + 2.2 + d / math.tan(1.1), abs=1e-13)


def test_puck_refuses_grazing():
    with pytest.raises(TangentialRay):
        puck_map(Circle(1.0), 1.0, PhasePoint(0.0, 1e-12))


def test_symplectic_circle_closed_form():
    # chord xz parallel to the tangent at y: the bisector of x and z is y, so z = 2y - x
    c = Circle(1.0)
    for x, y in [(0.1, 1.3), (2.0, 4.5), (5.0, 0.4)]:
        z = symplectic_map_oval(c, ChordState(x, y)).y
        assert math.remainder(z - (2 * y - x), 2 * math.pi) == pytest.approx(0, abs=1e-12)


def test_symplectic_ellipse_is_affine_image_of_circle():
    e = Ellipse(2.0, 0.6)
    for x, y in [(0.1, 1.3), (2.0, 4.5)]:
        z = symplectic_map_oval(e, ChordState(x, y)).y
        assert math.remainder(z - (2 * y - x), 2 * math.pi) == pytest.approx(0, abs=1e-11)


def test_outer_map_about_circle_rotates():
    c = Circle(1.0)
    r, theta = 2.5, 0.3
    b = outer_map(c, r * unit(theta))
    assert np.linalg.norm(b) == pytest.approx(r, rel=1e-13)
    assert math.atan2(b[1], b[0]) == pytest.approx(theta + 2 * math.acos(1 / r), abs=1e-12)


def test_outer_tangency_point_is_midpoint():
    e = Ellipse(2, 1)
    a = np.array([3.0, 2.0])
    b = outer_map(e, a)
    mid = 0.5 * (a + b)
    assert e.implicit(mid) == pytest.approx(1.0, abs=1e-12)


def test_projective_reflect_cross_ratio_is_harmonic():
    tangent, transverse, incoming = 0.2, 1.4, 2.3
    out = projective_reflect(tangent, transverse, incoming)
    assert cross_ratio(tangent, transverse, incoming, out) == pytest.approx(-1.0, abs=1e-12)
    # orthogonal transverse line: the usual optical law
    out = projective_reflect(0.0, math.pi / 2, 0.4)
    assert math.remainder(out - (-0.4), math.pi) == pytest.approx(0, abs=1e-14)


def test_orthogonal_field_on_circle_equals_birkhoff():
    c = Circle(1.0)
    table = ProjectiveTable(c, "orthogonal")
    alpha = 0.8
    ray = Ray(c.position(np.array([0.0]))[0], c.tangent_angle(0.0) + alpha, 0.0)
    orbit = run_orbit(birkhoff_phase_map(c), [0.0, alpha], 20)
    for k in range(1, 21):
        ray = projective_map(table, ray)
        t = c.param_of_arclength(orbit.states[k, 0])
        assert np.allclose(ray.origin, c.position(np.array([t]))[0], atol=1e-9)


def test_triangle_field_closes_after_three():
    tri = ProjectiveTable(PolygonTable([(0, -2), (2, 1), (-3, 3)]), "toward_opposite_vertex")
    start = Ray(tri.boundary.point(0.37), 1.9, 0.37)
    ray = start
    for _ in range(3):
        ray = projective_map(tri, ray)
    assert np.allclose(ray.origin, start.origin, atol=1e-12)
    assert math.remainder(ray.direction - start.direction, 2 * math.pi) == pytest.approx(0, abs=1e-12)


def test_polygon_vertex_hit_is_reported():
    sq = PolygonTable([(0, 0), (1, 0), (1, 1), (0, 1)])
    with pytest.raises(VertexHit):
        projective_map(ProjectiveTable(sq), Ray((0.5, 0.0), math.atan2(1, 0.5), 0.5))


def test_circle_map_parallel_is_rotation():
    c = Circle(1.0)
    psi1, psi2 = 0.3, 1.1
    for theta in (0.2, 2.0, 4.0):
        y = circle_map_f(c, Parallel(psi1, psi2), theta)
        assert math.remainder(y - theta - 2 * (psi2 - psi1), 2 * math.pi) == pytest.approx(0, abs=1e-12)
    y = circle_map_f(c, Parallel(math.pi / 2, 0.0), 0.4)
    assert math.remainder(y - 0.4 - math.pi, 2 * math.pi) == pytest.approx(0, abs=1e-12)


def test_circle_map_pencil_fixes_chord_ends_on_line_pq():
    e = Ellipse(2, 1)
    # the x axis joins P and Q; its ends are fixed by both involutions
    for t in (0.0, math.pi):
        y = circle_map_f(e, Pencil((0.0, 0.0), (3.0, 0.0)), t)
        assert math.remainder(y - t, 2 * math.pi) == pytest.approx(0, abs=1e-10)


def test_symplectic_polygon_stays_on_boundary():
    table = PolygonTable([(0, 0), (4, 0), (3, 1), (1, 1)])
    c = ChordState(0.3, 1.6)
    for _ in range(10):
        c = symplectic_map_polygon(table, c)
        assert 0 <= c.y < 4


def test_symplectic_polygon_state_dump_round_trip(tmp_path):
    pm = symplectic_polygon_phase_map(PolygonTable([(0, 0), (4, 0), (3, 1), (1, 1)]))
    rec = run_orbit(pm, [0.3, 1.6], 30, seed=7)
    path = tmp_path / "o.jsonl"
    rec.write_jsonl(path)
    back = OrbitRecord.read_jsonl(path)
    assert np.array_equal(back.states, rec.states)
    assert back.seed == 7 and back.params == rec.params


def test_trap_first_bounces_pass_through_focus():
    trap = ParabolaTrap(1.0, 1.1, 3.0)
    rec = trap_trace(trap, trap.entry_ray(0.5), n_max=4, digits=16)
    s = rec.states
    # a vertical ray reflects through the focus, and the next reflection makes it vertical
    assert abs(cross(s[2] - s[1], -s[1])) < 1e-12 * np.linalg.norm(s[2] - s[1])
    assert abs(s[3, 0] - s[2, 0]) < 1e-12
    assert rec.diagnostics["mirrors_alternate"]


def test_trap_precision_rule_and_preconditions():
    trap = ParabolaTrap(1.0, 1.1, 3.0)
    assert trap_digits(trap, 10_000) == 20 + math.ceil(10_000 * math.log10(1.1))
    with pytest.raises(ValueError):
        trap_trace(trap, Ray((0.0, 3.0), -math.pi / 2))
    with pytest.raises(ValueError):
        trap_trace(trap, Ray((trap.aperture[0] + 0.01, 3.0), 0.3))


def test_trap_stays_trapped_short_run():
    trap = ParabolaTrap(1.0, 1.1, 3.0)
    rec = trap_trace(trap, trap.entry_ray(0.25), n_max=500)
    assert rec.diagnostics["reflections"] == 500
    assert not rec.diagnostics["crossed_axis"] and not rec.diagnostics["escaped"]


def test_gutkin_circle_and_ellipse():
    assert gutkin_defect(Circle(1.0), 0.5) < 1e-12
    # an ellipse is not Gutkin: frozen value of the direct evaluation (256 starts)
    assert gutkin_defect(Ellipse(2, 1), math.pi / 4) == pytest.approx(1.2490070840931131, abs=1e-9)
    with pytest.raises(ValueError):
        gutkin_defect(Circle(1.0), math.pi / 2)
