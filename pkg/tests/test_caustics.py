import math

import numpy as np
import pytest

from billiardlab.caustics import (LineFamily, caustic_by_reflection, caustic_from_invariant_curve,
                                  cusp_count, envelope, periodic_derivative,
                                  reflected_family, string_defect,
                                  string_lengths, symmetry_defect)
from billiardlab.errors import DegenerateFamily, NotInvariant, NotNested, UnresolvedCusp
from billiardlab.geometry import TWO_PI, Circle, Ellipse, OrientedLine, Stadium, cross
from billiardlab.maps import birkhoff_phase_map
from billiardlab.orbit import run_orbit

# first caustic of x^2/4 + y^2 = 1 from the source (0.4, 0.2) at ray angles 2 pi j / 1024,
# from a 40-digit envelope computation with numerically differentiated rays
ELLIPSE_CAUSTIC = {
    0: (1.7218041423578749, -0.03298336568511938),
    250: (0.66697691934391553, 2.2740731140336175),
    512: (-1.7378515203309382, -0.017260210587686046),
    900: (1.1210443885727234, 2.739059734835595),
}

# cusps of the first caustic of the unit circle with the source at (0.4, 0)
CIRCLE_CUSPS = [(-2.0, 0.0), (-2.0 / 9.0, 0.0), (-0.272, 0.29328484447717376),
                (-0.272, -0.29328484447717376)]


def test_periodic_derivative_methods():
    t = TWO_PI * np.arange(256) / 256
    f = np.sin(3 * t)
    assert np.allclose(periodic_derivative(f, TWO_PI), 3 * np.cos(3 * t), atol=1e-11)
    assert np.allclose(periodic_derivative(f, TWO_PI, 2), -9 * f, atol=1e-9)
    assert np.allclose(periodic_derivative(f, TWO_PI, method="fd6"), 3 * np.cos(3 * t), atol=1e-6)
    with pytest.raises(ValueError):
        periodic_derivative(f, TWO_PI, method="euler")


def test_tangent_family_returns_the_curve():
    e = Ellipse(2, 1)
    fam = LineFamily.tangents_of(e, 512)
    env = envelope(fam)
    assert np.max(np.linalg.norm(env.points - fam.points, axis=1)) < 1e-8
    assert not env.cusps.any()


def test_envelope_matches_high_precision_oracle():
    env = caustic_by_reflection(Ellipse(2, 1), (0.4, 0.2), 1, 1024)
    for j, xy in ELLIPSE_CAUSTIC.items():
        assert np.allclose(env.points[j], xy, rtol=1e-8, atol=1e-8)


def test_envelope_near_consecutive_line_intersections():
    env = caustic_by_reflection(Circle(), (0.3, 0.1), 2, 16384)
    fam = reflected_family(Circle(), (0.3, 0.1), 2, 16384)
    p, u = fam.points, fam.directions
    q, v = np.roll(p, -1, 0), np.roll(u, -1, 0)
    s = cross(q - p, v) / cross(u, v)
    x = p + s[:, None] * u
    mid = 0.5 * (env.points + np.roll(env.points, -1, 0))
    near = np.linalg.norm(mid, axis=1) < 2
    assert near.sum() > 1000
    # both sides are second-order approximations of the envelope at half steps
    assert np.median(np.linalg.norm(x - mid, axis=1)[near]) < 1e-6


def test_circle_cusps_at_mirror_equation_positions():
    env = caustic_by_reflection(Circle(), (0.4, 0.0), 1, 1024)
    assert cusp_count(env) == 4
    found = env.points[env.cusps]
    for c in CIRCLE_CUSPS:
        assert np.min(np.linalg.norm(found - c, axis=1)) < 1e-6


def test_cusp_count_stable_under_refinement():
    for n in (1, 2):
        coarse = cusp_count(caustic_by_reflection(Ellipse(2, 1), (0.3, 0.2), n, 1024))
        fine = cusp_count(caustic_by_reflection(Ellipse(2, 1), (0.3, 0.2), n, 2048))
        assert coarse == fine >= 4


def test_under_resolved_family_refuses_to_count():
    env = caustic_by_reflection(Ellipse(2, 1), (0.3, 0.2), 3, 1024)
    assert env.meta["under_resolved"]
    with pytest.raises(UnresolvedCusp):
        cusp_count(env)


def test_center_source_collapses_to_a_point():
    env = caustic_by_reflection(Circle(), (0.0, 0.0), 1, 256)
    assert env.is_point
    with pytest.raises(DegenerateFamily):
        cusp_count(env)


def test_parallel_family_is_degenerate():
    t = TWO_PI * np.arange(128) / 128
    pts = np.column_stack([np.cos(t), np.sin(t)])
    with pytest.raises(DegenerateFamily):
        envelope(LineFamily(t, pts, np.tile([1.0, 0.0], (128, 1))))


def test_source_outside_is_rejected():
    with pytest.raises(ValueError):
        caustic_by_reflection(Circle(), (1.5, 0.0), 1, 128)


def test_string_construction():
    ell = string_lengths(Circle(2.0), Circle(1.0), 64)
    # two tangents of length sqrt 3 and the far arc of angle 2 pi - 2 pi/3
    assert np.allclose(ell, 2 * math.sqrt(3) + 4 * math.pi / 3, atol=1e-10)
    e = Ellipse(2, 1)
    confocal = Ellipse(math.sqrt(4 - 0.5), math.sqrt(1 - 0.5))
    assert string_defect(e, confocal, 128) < 1e-8
    assert string_defect(e, Circle(0.4, (0.5, 0.2)), 128) > 1e-3
    with pytest.raises(NotNested):
        string_lengths(Circle(1.0), Circle(1.5), 16)


def test_caustic_of_circle_orbit_is_concentric_circle():
    alpha = 0.7
    orbit = run_orbit(birkhoff_phase_map(Circle()), [0.0, alpha], 10_000)
    env = caustic_from_invariant_curve(Circle(), orbit)
    r = np.linalg.norm(env.points[env.defined], axis=1)
    assert np.allclose(r, math.cos(alpha), atol=1e-8)


def test_caustic_refuses_chaotic_orbit():
    st = Stadium(0.5, 1.0)
    orbit = run_orbit(birkhoff_phase_map(st), [0.3, 1.0], 10_000)
    with pytest.raises(NotInvariant):
        caustic_from_invariant_curve(st, orbit)


def test_symmetry_defect():
    axis = OrientedLine(0.0, 0.0)
    sym = caustic_by_reflection(Ellipse(2, 1), (0.5, 0.0), 2, 1024)
    assert symmetry_defect(sym, axis) < 1e-6
    skew = caustic_by_reflection(Ellipse(2, 1), (0.5, 0.3), 2, 1024)
    assert symmetry_defect(skew, axis) > 1e-3
    with pytest.raises(TypeError):
        symmetry_defect(sym, (0.0, 0.0))


def test_envelope_csv():
    env = caustic_by_reflection(Circle(), (0.4, 0.0), 1, 128)
    rows = env.to_csv().split("\r\n")
    assert rows[0] == "t,x,y,cusp_flag"
    assert sum(r.endswith(",1") for r in rows[1:]) == 4

