"""Billiard-type maps, each a pure step function on its phase space.

Cylinder maps use Birkhoff coordinates ``(s, alpha)``: ``s`` is arclength
of the impact point and ``alpha`` in ``(0, pi)`` is measured from the
positive tangent to the outgoing chord.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import mpmath
import numpy as np

from .errors import (DegenerateChord, NotTransverse, TangentialRay, VertexHit)
from .geometry import (GRAZING_TOL, TWO_PI, PolygonTable, angle_of, cross, unit,
                       wrap_angle)
from .orbit import OrbitRecord, PhaseMap

#: vertex proximity, as a fraction of the polygon diameter, that ends an orbit
VERTEX_TOL = 1e-12


@dataclass(frozen=True)
class PhasePoint:
    s: float
    alpha: float
    winding: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi:
            raise ValueError(f"incidence angle {self.alpha!r} outside (0, pi)")


@dataclass(frozen=True)
class ChordState:
    """Oriented chord from boundary parameter ``x`` to ``y``.

    For ovals ``x`` and ``y`` are curve parameters; for polygons they are
    perimeter coordinates ``edge + fraction``.
    """

    x: float
    y: float

    def __post_init__(self):
        if self.x == self.y:
            raise ValueError("chord endpoints coincide")


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: float
    param: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "direction", wrap_angle(float(self.direction)))


# -- Birkhoff and puck maps ------------------------------------------------

def _birkhoff_step(oval, s, alpha):
    """Forward arclength advance in ``(0, L)`` and the new incidence angle."""
    t = oval.param_of_arclength(s)
    outgoing = oval.tangent_angle(t) + alpha
    t1 = oval.second_intersection(t, outgoing)
    s1 = oval.arclength(t1)
    alpha1 = wrap_angle(oval.tangent_angle(t1) - outgoing)
    ds = math.fmod(s1 - s, oval.total_length)
    if ds < 0.0:
        ds += oval.total_length
    return ds, alpha1


def birkhoff_map(oval, p):
    """The usual billiard map ``(s, alpha) -> (s1, alpha1)``."""
    ds, alpha1 = _birkhoff_step(oval, p.s, p.alpha)
    return _advance(oval, p, ds, alpha1)


def puck_map(oval, d, p):
    """Billiard map followed by the shift ``s -> s + d cot(alpha1)``."""
    if d < 0:
        raise ValueError("height d must be non-negative")
    ds, alpha1 = _birkhoff_step(oval, p.s, p.alpha)
    if d:
        if math.sin(alpha1) < GRAZING_TOL:
            raise TangentialRay("cot(alpha) overflow at grazing incidence")
        ds += d / math.tan(alpha1)
    return _advance(oval, p, ds, alpha1)


def _advance(oval, p, ds, alpha1):
    lifted = p.s + ds
    turns = math.floor(lifted / oval.total_length)
    s_new = lifted - turns * oval.total_length
    if s_new >= oval.total_length:
        s_new -= oval.total_length
        turns += 1
    return PhasePoint(s_new, alpha1, p.winding + turns)


def _cylinder_canonical():
    def to_canonical(x):
        return np.array([x[0], -math.cos(x[1])])

    def from_canonical(y):
        return np.array([y[0], math.acos(min(max(-y[1], -1.0), 1.0))])

    return to_canonical, from_canonical


def birkhoff_phase_map(oval):
    def step(x):
        ds, alpha1 = _birkhoff_step(oval, x[0], x[1])
        return np.array([x[0] + ds, alpha1])

    to_c, from_c = _cylinder_canonical()
    return PhaseMap("birkhoff", step, (oval.total_length, None), {"curve": _curve_meta(oval)},
                    to_canonical=to_c, from_canonical=from_c,
                    reversal=lambda x: np.array([x[0], math.pi - x[1]]))


def puck_phase_map(oval, d):
    def step(x):
        ds, alpha1 = _birkhoff_step(oval, x[0], x[1])
        if d:
            if math.sin(alpha1) < GRAZING_TOL:
                raise TangentialRay("cot(alpha) overflow at grazing incidence")
            ds += d / math.tan(alpha1)
        return np.array([x[0] + ds, alpha1])

    to_c, from_c = _cylinder_canonical()
    return PhaseMap("puck", step, (oval.total_length, None),
                    {"curve": _curve_meta(oval), "d": d},
                    to_canonical=to_c, from_canonical=from_c)


# -- outer billiard ---------------------------------------------------------

def outer_map(oval, point):
    """Reflect an exterior point through its forward tangency point."""
    a = np.asarray(point, dtype=float)
    t_fwd, _ = oval.tangent_points_from_external(a)
    return 2.0 * oval.position(t_fwd) - a


def outer_phase_map(oval):
    return PhaseMap("outer", lambda x: outer_map(oval, x), (None, None),
                    {"curve": _curve_meta(oval)}, lift_index=None)


# -- symplectic billiards ---------------------------------------------------

def _symplectic_target(oval, x, y):
    tx = oval.tangent_angle(x)
    ty = oval.tangent_angle(y)
    direction = ty if math.sin(ty - tx) > 0.0 else ty + math.pi
    try:
        return oval.second_intersection(x, direction)
    except TangentialRay as exc:
        raise DegenerateChord(f"tangents at x={x!r} and y={y!r} are parallel") from exc


def symplectic_map_oval(oval, c):
    """``xy -> yz`` where ``xz`` is parallel to the tangent line at ``y``."""
    return ChordState(c.y, _symplectic_target(oval, c.x, c.y))


def symplectic_phase_map(oval):
    def step(v):
        z = _symplectic_target(oval, v[0], v[1])
        return np.array([v[1], v[1] + (z - v[1]) % TWO_PI])

    def step_jacobian(v):
        # differentiate det(gamma'(y), gamma(z) - gamma(x)) = 0 implicitly
        x, y = float(v[0]), float(v[1])
        z = _symplectic_target(oval, x, y)
        px, py, dxx, dxy, _, _ = oval.jet(x)
        _, _, dyx, dyy, ddyx, ddyy = oval.jet(y)
        pzx, pzy, dzx, dzy, _, _ = oval.jet(z)
        den = dyx * dzy - dyy * dzx
        zx = (dyx * dxy - dyy * dxx) / den
        zy = -(ddyx * (pzy - py) - ddyy * (pzx - px)) / den
        return np.array([y, y + (z - y) % TWO_PI]), np.array([[0.0, 1.0], [zx, zy]])

    return PhaseMap("symplectic", step, (TWO_PI, TWO_PI), {"curve": _curve_meta(oval)},
                    lift_index=1, jacobian=lambda v: step_jacobian(v)[1],
                    step_jacobian=step_jacobian)


def _polygon_target(table, x, y):
    n = table.n
    ex = int(math.floor(x)) % n
    ey = int(math.floor(y)) % n
    d = table.edge_vector(ey)
    tx = table.edge_vector(ex)
    side = float(cross(tx, d)) / (np.linalg.norm(tx) * np.linalg.norm(d))
    if abs(side) < GRAZING_TOL:
        raise DegenerateChord(f"edge of x={x!r} is parallel to the edge of y={y!r}")
    direction = angle_of(d if side > 0 else -d)
    edge, u, _ = table.ray_exit(table.point(x), direction, exclude_edge=ex)
    if table.vertex_distance(edge, u) < VERTEX_TOL * table.diameter:
        raise VertexHit(f"orbit reached vertex {(edge + (u > 0.5)) % n}")
    if u >= 1.0:
        edge, u = edge + 1, 0.0
    return (edge % n) + u


def symplectic_map_polygon(table, c):
    """Polygonal symplectic billiard on perimeter coordinates."""
    return ChordState(c.y, _polygon_target(table, c.x, c.y))


def symplectic_polygon_phase_map(table):
    n = table.n

    def step(v):
        z = _polygon_target(table, v[0] % n, v[1] % n)
        return np.array([v[1], v[1] + (z - v[1] % n) % n])

    return PhaseMap("symplectic_polygon", step, (float(n), float(n)),
                    {"table": table.to_config()}, lift_index=1)


# -- projective billiards ---------------------------------------------------

def projective_reflect(tangent_dir, transverse_dir, incoming_dir):
    """Harmonic reflection in the pencil spanned by the tangent and transverse lines.

    Writing the incoming direction as ``a t + b n`` in the (tangent,
    transverse) basis, the outgoing direction is ``a t - b n``.
    """
    t = unit(tangent_dir)
    n = unit(transverse_dir)
    v = unit(incoming_dir)
    det = float(cross(t, n))
    if abs(det) < GRAZING_TOL:
        raise NotTransverse("transverse line is parallel to the tangent")
    a = float(cross(v, n)) / det
    b = float(cross(t, v)) / det
    if abs(b) * abs(det) < GRAZING_TOL:
        raise TangentialRay("incoming line is tangent to the boundary")
    return angle_of(a * t - b * n)


def cross_ratio(d1, d2, d3, d4):
    """Cross-ratio of four concurrent lines given by direction angles."""
    u = [unit(d) for d in (d1, d2, d3, d4)]
    return (float(cross(u[0], u[2])) * float(cross(u[1], u[3]))) / (
        float(cross(u[1], u[2])) * float(cross(u[0], u[3])))


FieldSpec = Union[str, Sequence[float], Callable[[float], float]]


class ProjectiveTable:
    """A table whose boundary carries a transverse line field.

    ``field`` is ``"orthogonal"``, ``"toward_opposite_vertex"`` (triangles),
    ``"toward_diagonal_intersection"`` (quadrilaterals), a sequence of
    per-edge direction angles (polygons) or a callable ``t -> angle`` (ovals).
    """

    def __init__(self, boundary, field="orthogonal"):
        self.boundary = boundary
        self.field = field
        self.is_polygon = isinstance(boundary, PolygonTable)
        if field == "toward_opposite_vertex":
            if not (self.is_polygon and boundary.n == 3):
                raise ValueError("toward_opposite_vertex needs a triangle")
        elif field == "toward_diagonal_intersection":
            if not (self.is_polygon and boundary.n == 4):
                raise ValueError("toward_diagonal_intersection needs a quadrilateral")
            self._hub = boundary.diagonal_intersection()
        elif not isinstance(field, str) and not callable(field):
            if not self.is_polygon or len(field) != boundary.n:
                raise ValueError("explicit field needs one angle per polygon edge")
        elif isinstance(field, str) and field != "orthogonal":
            raise ValueError(f"unknown transverse field {field!r}")
        self._check_transverse()

    def _check_transverse(self):
        if self.is_polygon:
            for i in range(self.boundary.n):
                tan = angle_of(self.boundary.edge_vector(i))
                for u in np.linspace(0.05, 0.95, 7):
                    self._require_transverse(tan, self.transverse_angle(i + u))
        else:
            for t in np.linspace(0.0, TWO_PI, 64, endpoint=False):
                self._require_transverse(self.boundary.tangent_angle(t), self.transverse_angle(t))

    @staticmethod
    def _require_transverse(tangent, transverse):
        if abs(math.sin(transverse - tangent)) <= GRAZING_TOL:
            raise NotTransverse("transverse field is tangent to the boundary")

    def transverse_angle(self, param):
        """Direction of the transverse line at a boundary parameter."""
        b = self.boundary
        if self.is_polygon:
            edge = int(math.floor(param)) % b.n
            tan = angle_of(b.edge_vector(edge))
            if self.field == "orthogonal":
                return wrap_angle(tan + 0.5 * math.pi)
            p = b.point(param)
            if self.field == "toward_opposite_vertex":
                return angle_of(b.vertices[(edge + 2) % 3] - p)
            if self.field == "toward_diagonal_intersection":
                return angle_of(self._hub - p)
            return wrap_angle(self.field[edge])
        if self.field == "orthogonal":
            return wrap_angle(b.tangent_angle(param) + 0.5 * math.pi)
        return wrap_angle(self.field(param))

    def to_config(self):
        field = self.field if isinstance(self.field, str) else list(self.field)
        return {"boundary": self.boundary.to_config(), "field": field}


def projective_map(table, ray):
    """Next boundary hit of ``ray`` and its harmonic reflection."""
    b = table.boundary
    if table.is_polygon:
        exclude = None if ray.param is None else int(math.floor(ray.param)) % b.n
        edge, u, hit = b.ray_exit(ray.origin, ray.direction, exclude_edge=exclude)
        if b.vertex_distance(edge, u) < VERTEX_TOL * b.diameter:
            raise VertexHit(f"ray reached a vertex of edge {edge}")
        param = edge + u
        tangent = angle_of(b.edge_vector(edge))
    else:
        if ray.param is None:
            param = b.ray_exit(ray.origin, ray.direction)
        else:
            param = b.second_intersection(ray.param, ray.direction)
        hit = b.position(param)
        tangent = b.tangent_angle(param)
    out = projective_reflect(tangent, table.transverse_angle(param), ray.direction)
    return Ray(hit, out, param)


# -- maps of the circle defined by two chord involutions ----------------------

@dataclass(frozen=True)
class Parallel:
    psi1: float
    psi2: float

    def __post_init__(self):
        if abs(math.sin(self.psi1 - self.psi2)) < 1e-12:
            raise ValueError("the two directions must differ mod pi")


@dataclass(frozen=True)
class Pencil:
    P: tuple
    Q: tuple

    def __post_init__(self):
        if np.allclose(self.P, self.Q):
            raise ValueError("pencil centers must be distinct")


def _chord_along(oval, t, direction):
    tan = oval.tangent_angle(t)
    d = direction if math.sin(direction - tan) > 0.0 else direction + math.pi
    return oval.second_intersection(t, d)


def _chord_through(oval, t, point):
    v = np.asarray(point, dtype=float) - oval.position(t)
    if math.hypot(v[0], v[1]) < 1e-14 * oval.total_length:
        raise TangentialRay("pencil center lies on the curve")
    return _chord_along(oval, t, angle_of(v))


def circle_map_f(oval, mode, x):
    """Compose the two chord involutions given by ``mode``; returns ``F(x)``."""
    if isinstance(mode, Parallel):
        return _chord_along(oval, _chord_along(oval, x, mode.psi1), mode.psi2)
    return _chord_through(oval, _chord_through(oval, x, mode.P), mode.Q)


def circle_map_phase_map(oval, mode):
    def step(v):
        y = circle_map_f(oval, mode, v[0] % TWO_PI)
        return np.array([v[0] + (y - v[0]) % TWO_PI])

    if isinstance(mode, Parallel):
        params = {"mode": "parallel", "psi1": mode.psi1, "psi2": mode.psi2}
    else:
        params = {"mode": "pencil", "P": list(mode.P), "Q": list(mode.Q)}
    params["curve"] = _curve_meta(oval)
    return PhaseMap("circle_map", step, (TWO_PI,), params)


# -- parabola trap ----------------------------------------------------------

@dataclass(frozen=True)
class ParabolaTrap:
    """Two confocal coaxial parabolas ``y = x^2/(4p) - p`` with focus at the origin.

    The light-holding domain lies between the inner (narrow, ``p_inner``)
    and outer (wide, ``p_outer``) parabola. The aperture is the horizontal
    segment at ``height`` between the two right-hand arms.
    """

    p_inner: float = 1.0
    p_outer: float = 1.1
    height: float = 3.0

    def __post_init__(self):
        if not 0 < self.p_inner < self.p_outer:
            raise ValueError("need 0 < p_inner < p_outer")
        if self.height <= -self.p_inner:
            raise ValueError("aperture height must be above the inner vertex")

    def arm_x(self, p, y):
        return 2.0 * math.sqrt(p * (y + p))

    @property
    def aperture(self):
        return (self.arm_x(self.p_inner, self.height), self.arm_x(self.p_outer, self.height))

    def entry_ray(self, fraction):
        """Downward axis-parallel ray through the aperture at the given fraction of its width."""
        lo, hi = self.aperture
        return Ray((lo + fraction * (hi - lo), self.height), -0.5 * math.pi)


def trap_digits(trap, n_max):
    """Decimal digits needed to follow ``n_max`` reflections faithfully.

    Each round trip shrinks the distance to the axis by ``p_inner/p_outer``
    and, the map being area preserving, stretches direction errors by the
    inverse ratio, so relative errors grow like ``(p_outer/p_inner)**n_max``.
    """
    return 20 + math.ceil(n_max * math.log10(trap.p_outer / trap.p_inner))


def _parabola_hit(p, ox, oy, ux, uy, sqrt, tiny):
    """Smallest ray parameter above ``tiny`` where the ray meets ``y = x^2/(4p) - p``."""
    qa = ux * ux / (4 * p)
    qb = ox * ux / (2 * p) - uy
    qc = ox * ox / (4 * p) - p - oy
    roots = []
    if qa == 0:
        if qb != 0:
            roots.append(-qc / qb)
    else:
        disc = qb * qb - 4 * qa * qc
        if disc >= 0:
            sq = sqrt(disc)
            q = -(qb + sq) / 2 if qb >= 0 else -(qb - sq) / 2
            roots.append(q / qa)
            if q != 0:
                roots.append(qc / q)
    roots = [r for r in roots if r > tiny]
    return min(roots) if roots else None


def _trace(trap, x0, y0, n_max, num, sqrt, tiny):
    p_in, p_out, height = num(trap.p_inner), num(trap.p_outer), num(trap.height)
    side = 1 if x0 > 0 else -1
    px, py = num(x0), num(y0)
    ux, uy = num(0), num(-1)
    points, mirrors = [(px, py)], []
    crossed = escaped = False
    for _ in range(n_max):
        best = None
        for which, p in ((0, p_in), (1, p_out)):
            lam = _parabola_hit(p, px, py, ux, uy, sqrt, tiny)
            if lam is not None and (best is None or lam < best[0]):
                best = (lam, which, p)
        if best is None:
            escaped = True
            break
        lam, which, p = best
        nx, ny = px + lam * ux, py + lam * uy
        if ny > height:
            escaped = True
            break
        # reflect in the normal (x/(2p), -1)
        mx, my = nx / (2 * p), num(-1)
        k = 2 * (ux * mx + uy * my) / (mx * mx + my * my)
        ux, uy = ux - k * mx, uy - k * my
        norm = sqrt(ux * ux + uy * uy)
        ux, uy = ux / norm, uy / norm
        px, py = nx, ny
        points.append((px, py))
        mirrors.append(which)
        if px * side <= 0:
            crossed = True
            break
    return points, mirrors, crossed, escaped


def trap_trace(trap, ray, n_max=10_000, digits=None):
    """Trace an axis-parallel ray between the parabolas for up to ``n_max`` reflections.

    The record's states are reflection points ``(x, y)``; diagnostics say
    whether the ray crossed the axis or escaped through the aperture.
    The trapped beam is dynamically unstable, so the trace runs in
    multiprecision with ``digits`` decimal digits (default `trap_digits`);
    ``digits <= 16`` uses plain floats.
    """
    if abs(math.cos(ray.direction)) > 1e-12 or math.sin(ray.direction) > 0:
        raise ValueError("entry ray must point down, parallel to the axis")
    x0, y0 = (float(v) for v in ray.origin)
    lo, hi = trap.aperture
    if x0 == 0.0:
        raise ValueError("entry ray along the axis is degenerate")
    if not (lo < abs(x0) < hi) or abs(y0 - trap.height) > 1e-12 * max(1.0, abs(trap.height)):
        raise ValueError("entry ray must pass through the aperture")
    if digits is None:
        digits = trap_digits(trap, n_max)
    scale = max(1.0, abs(x0), abs(y0), trap.p_outer)
    if digits <= 16:
        points, mirrors, crossed, escaped = _trace(trap, x0, y0, n_max, float, math.sqrt,
                                                   1e-12 * scale)
    else:
        with mpmath.workdps(digits):
            tiny = mpmath.mpf(10) ** (-(digits - 4)) * scale
            points, mirrors, crossed, escaped = _trace(trap, x0, y0, n_max, mpmath.mpf,
                                                       mpmath.sqrt, tiny)
    states = np.array([[float(x), float(y)] for x, y in points])
    diagnostics = {
        "reflections": len(mirrors),
        "crossed_axis": crossed,
        "escaped": escaped,
        "min_abs_x": float(np.min(np.abs(states[:, 0]))),
        "aperture": [lo, hi],
        "aperture_height": trap.height,
        "digits": digits,
        "mirrors_alternate": all(a != b for a, b in zip(mirrors, mirrors[1:])),
    }
    params = {"p_inner": trap.p_inner, "p_outer": trap.p_outer, "height": trap.height,
              "entry_x": x0}
    return OrbitRecord("trap", params, np.array([x0, y0]), states,
                       np.zeros(len(states) - 1, dtype=np.int64), None, lift_index=None,
                       diagnostics=diagnostics)


# -- Gutkin property --------------------------------------------------------

def gutkin_defect(oval, delta, n_samples=256):
    """Max change of the incidence angle after one bounce, over chords launched at ``delta``."""
    if not 0.0 < delta < 0.5 * math.pi:
        raise ValueError("delta must lie in (0, pi/2)")
    worst = 0.0
    for s in oval.total_length * np.arange(n_samples) / n_samples:
        _, alpha1 = _birkhoff_step(oval, float(s), delta)
        worst = max(worst, abs(alpha1 - delta))
    return worst


def _curve_meta(oval):
    try:
        return oval.to_config()
    except NotImplementedError:
        return {"kind": oval.kind}
