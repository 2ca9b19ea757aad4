import math

import numpy as np
import pytest

from billiardlab.errors import FixedPointCountMismatch, InsufficientData
from billiardlab.geometry import Circle, Ellipse, PolygonTable, Stadium
from billiardlab.maps import (ProjectiveTable, birkhoff_phase_map, outer_phase_map,
                              puck_phase_map, symplectic_phase_map,
                              symplectic_polygon_phase_map)
from billiardlab.analysis import (circumscribed_polygon, confocal_parameter,
                                  confocal_tangency_defect, birkhoff_impact_points,
                                  first_return, homothety_invariant,
                                  invariant_curve_diagnostic, lyapunov_exponent,
                                  midpoint_residuals, mobius_fixed_point_check,
                                  numeric_jacobian, periodic_orbit_search,
                                  random_polygon_chords, reflection_residuals,
                                  reflectivity_test, rotation_number, sample_cylinder,
                                  spectrum_to_csv, spectrum_to_json, symplecticity_defect,
                                  variational_area_orbits, variational_length_orbits)
from billiardlab.orbit import PhaseMap, run_orbit

# max-perimeter triangle in x^2/4 + y^2 = 1, from a 40-digit symmetric search
ELLIPSE_TRIANGLE = 8.5308416456490054714


def test_rotation_number_circle():
    rho = rotation_number(run_orbit(birkhoff_phase_map(Circle()), [0.0, math.pi / 5], 20_000))
    assert rho.value == pytest.approx(0.2, abs=1e-12)
    assert rho.error < 1e-9


def test_rotation_number_needs_100_steps():
    with pytest.raises(InsufficientData):
        rotation_number(run_orbit(birkhoff_phase_map(Circle()), [0.0, 1.0], 50))


def test_rotation_number_ellipse_self_consistent():
    pm = birkhoff_phase_map(Ellipse(2, 1))
    short = rotation_number(run_orbit(pm, [0.0, 0.3], 20_000))
    long = rotation_number(run_orbit(pm, [0.0, 0.3], 80_000))
    assert abs(short.value - long.value) < 1e-6


def test_numeric_jacobian_of_linear_map():
    a = np.array([[2.0, 1.0], [0.5, -3.0]])
    assert np.allclose(numeric_jacobian(lambda x: a @ x, np.array([0.3, 7.0])), a, atol=1e-9)


def test_symplecticity_circle_and_broken_control():
    rng = np.random.default_rng(0)
    c = Circle()
    pm = birkhoff_phase_map(c)
    assert symplecticity_defect(pm, sample_cylinder(c.total_length, 200, rng)).max_defect < 5e-6
    broken = PhaseMap("broken", lambda x: pm.step(x) + np.array([0.0, 0.1 * x[0]]), pm.periods,
                      to_canonical=pm.to_canonical, from_canonical=pm.from_canonical)
    res = symplecticity_defect(broken, sample_cylinder(c.total_length, 50, rng, 0.3))
    assert res.max_defect > 0.05


def test_puck_symplectic_on_random_oval_points():
    e = Ellipse(2, 1)
    res = symplecticity_defect(puck_phase_map(e, 1.0),
                               sample_cylinder(e.total_length, 200, np.random.default_rng(9)))
    assert res.max_defect < 5e-6


def test_lyapunov_integrable_cases_vanish():
    r = lyapunov_exponent(birkhoff_phase_map(Circle()), [0.0, 1.0], 100_000)
    assert abs(r.value) < 1e-3
    r = lyapunov_exponent(symplectic_phase_map(Ellipse(2, 1)), [0.3, 2.0], 100_000)
    assert abs(r.value) < 1e-3


def test_lyapunov_stadium_positive_short():
    r = lyapunov_exponent(symplectic_phase_map(Stadium(0.5, 1.0)), [0.3, 2.0], 100_000,
                          checkpoints=(50_000, 100_000))
    assert r.value > 0.01
    assert set(r.checkpoints) == {50_000, 100_000}


def test_analytic_and_numeric_symplectic_jacobians_agree():
    pm = symplectic_phase_map(Stadium(0.5, 1.0))
    for x in ([0.3, 2.0], [1.0, 4.0], [5.0, 6.5]):
        x = np.array(x)
        assert np.allclose(pm.jacobian(x), numeric_jacobian(pm.step, x), atol=1e-6)


def test_periodic_search_circle_diameters():
    orbits, failures = periodic_orbit_search(birkhoff_phase_map(Circle()), 2,
                                             [[0.3, 1.4], [2.0, 1.7]])
    assert orbits
    for o in orbits:
        assert o.states[0, 1] == pytest.approx(math.pi / 2, abs=1e-9)


def test_periodic_search_cross_checks_variational_length():
    e = Ellipse(2, 1)
    pm = birkhoff_phase_map(e)
    orbits, _ = periodic_orbit_search(pm, 3, [[0.0, 1.0], [1.0, 1.1]])
    assert orbits
    for o in orbits:
        back = run_orbit(pm, o.states[0], 3)
        assert np.max(np.abs(pm.wrap_difference(back.states[-1] - back.states[0]))) < 1e-8
        pts = birkhoff_impact_points(e, run_orbit(pm, o.states[0], 3))[:3]
        per = sum(np.linalg.norm(pts[i] - pts[i - 1]) for i in range(3))
        assert per == pytest.approx(ELLIPSE_TRIANGLE, abs=1e-8)


def test_length_spectrum_closed_forms():
    c = Circle()
    for n in (2, 3, 6):
        vals = [e.value for e in variational_length_orbits(c, n, 1)]
        assert max(vals) == pytest.approx(2 * n * math.sin(math.pi / n), abs=1e-9)
    star = variational_length_orbits(c, 5, 2)
    assert max(e.value for e in star) == pytest.approx(10 * math.sin(2 * math.pi / 5), abs=1e-9)
    tri = variational_length_orbits(Ellipse(2, 1), 3, 1)
    assert max(e.value for e in tri) == pytest.approx(ELLIPSE_TRIANGLE, abs=1e-8)
    for e in tri:
        assert np.max(np.abs(reflection_residuals(Ellipse(2, 1), e.params))) < 1e-9


def test_area_spectrum_closed_forms():
    c = Circle()
    assert min(e.value for e in variational_area_orbits(c, 4, 1)) == pytest.approx(4.0, abs=1e-9)
    ell = variational_area_orbits(Ellipse(2, 1), 3, 1)
    # affine image of the circumscribed equilateral triangle (area 3 sqrt 3) scaled by ab = 2
    assert min(e.value for e in ell) == pytest.approx(6 * math.sqrt(3), abs=1e-8)
    for e in ell:
        assert np.max(np.abs(midpoint_residuals(Ellipse(2, 1), e.params))) < 1e-9
        assert len(circumscribed_polygon(Ellipse(2, 1), e.params)) == 3


def test_spectrum_class_preconditions():
    with pytest.raises(ValueError):
        variational_length_orbits(Circle(), 4, 4)
    with pytest.raises(ValueError):
        variational_area_orbits(Circle(), 2, 1)


def test_spectrum_serialization():
    entries = variational_length_orbits(Circle(), 3, 1)
    text = spectrum_to_csv(entries)
    assert text.splitlines()[0] == "period,class,value,residual"
    assert "\r\n" in text
    assert spectrum_to_json(entries).startswith("[")


def test_reflectivity_triangle_quad_and_circle():
    rng = np.random.default_rng(4)
    tri = ProjectiveTable(PolygonTable([(0, -2), (2, 1), (-3, 3)]), "toward_opposite_vertex")
    res = reflectivity_test(tri, 3, 40, rng)
    assert res.fraction == 1.0 and res.max_closure_error < 1e-8
    quad = ProjectiveTable(PolygonTable([(-2, -2), (3, -2), (2, 3), (-3, 1)]),
                           "toward_diagonal_intersection")
    assert reflectivity_test(quad, 4, 40, rng).fraction == 1.0
    assert reflectivity_test(ProjectiveTable(Circle()), 3, 40, rng).fraction == 0.0


def test_invariant_curve_diagnostic():
    out = invariant_curve_diagnostic(run_orbit(birkhoff_phase_map(Circle()), [0.0, 0.9], 10_000))
    assert out["graph_thickness"] < 1e-10 and out["verdict"] == "invariant-curve-like"
    out = invariant_curve_diagnostic(run_orbit(puck_phase_map(Circle(), 1.0), [0.0, 0.9], 10_000))
    assert out["verdict"] == "invariant-curve-like"
    with pytest.raises(InsufficientData):
        invariant_curve_diagnostic(run_orbit(birkhoff_phase_map(Circle()), [0.0, 0.9], 500))


def test_mobius_fixed_points():
    res = mobius_fixed_point_check(Ellipse(2, 1), (0, 0), (3, 0))
    assert res["product_defect"] < 1e-6
    ends = sorted(math.remainder(t, 2 * math.pi) for t in res["fixed_points"])
    assert ends == pytest.approx([0.0, math.pi], abs=1e-9) or \
        ends == pytest.approx([-math.pi, 0.0], abs=1e-9)
    assert mobius_fixed_point_check(Circle(), (-0.3, 0.1), (0.3, -0.1))["product_defect"] < 1e-6
    # the line PQ misses the table, so the map has no fixed points
    with pytest.raises(FixedPointCountMismatch):
        mobius_fixed_point_check(Circle(), (2.0, 2.0), (3.0, 2.0))


def test_confocal_and_homothety_invariants():
    e = Ellipse(2, 1)
    # chord from (2, 0) at alpha = pi/3 touches the confocal conic with lambda = 3/4 exactly
    rec = run_orbit(birkhoff_phase_map(e), [0.0, math.pi / 3], 2000)
    pts = birkhoff_impact_points(e, rec)
    lam = confocal_parameter(e, pts[0], pts[1])
    assert lam == pytest.approx(0.75, abs=1e-12)
    assert confocal_tangency_defect(e, pts, lam) < 1e-8
    rec = run_orbit(outer_phase_map(e), [3.0, 1.0], 2000)
    q = np.array([homothety_invariant(e, p) for p in rec.states])
    assert np.ptp(q) / q[0] < 1e-8


def test_trapezoid_recurrence():
    table = PolygonTable([(0, 0), (4, 0), (3, 1), (1, 1)])
    pm = symplectic_polygon_phase_map(table)
    for c in random_polygon_chords(table, 5, np.random.default_rng(2)):
        rec = first_return(pm, c, 5000)
        assert rec.period is not None and rec.period <= 5000 and rec.error < 1e-9
