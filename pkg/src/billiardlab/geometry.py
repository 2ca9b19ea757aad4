"""Convex curves, polygons and oriented lines.

Every oval is parametrized by ``t`` on ``[0, 2*pi)`` and traversed
counterclockwise, so the enclosed domain is on the left of the tangent.
Positions and derivatives accept scalars or numpy arrays; the solvers
(`ray_exit`, `second_intersection`, `tangent_points_from_external`) are
scalar.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ellipeinc, ellipe

from .errors import NoConvergence, PointInside, TangentialRay
from .roots import periodic_roots, safeguarded_newton

TWO_PI = 2.0 * math.pi

#: sine of the incidence angle below which a chord is treated as grazing
GRAZING_TOL = 1e-9

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def cross(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def unit(angle):
    return np.array([math.cos(angle), math.sin(angle)])


def wrap_angle(angle):
    """Reduce an angle to ``[0, 2*pi)``."""
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a = 0.0
    return a


def angle_of(vec):
    return wrap_angle(math.atan2(vec[1], vec[0]))


@dataclass(frozen=True)
class OrientedLine:
    """Oriented line ``{x : <x, n> = p}`` with direction ``(cos phi, sin phi)``.

    ``n = (-sin phi, cos phi)`` is the left normal, so ``(phi, p)`` and
    ``(phi + pi, -p)`` describe the same point set with opposite orientation.
    """

    phi: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def through(cls, point, direction):
        d = unit(direction)
        n = np.array([-d[1], d[0]])
        return cls(direction, float(np.dot(point, n)))

    @classmethod
    def from_points(cls, a, b):
        return cls.through(a, angle_of(np.asarray(b, float) - np.asarray(a, float)))

    @property
    def direction(self):
        return unit(self.phi)

    @property
    def normal(self):
        return np.array([-math.sin(self.phi), math.cos(self.phi)])

    def signed_distance(self, points):
        return np.asarray(points, float) @ self.normal - self.p

    def reflect(self, points):
        pts = np.asarray(points, dtype=float)
        dist = self.signed_distance(pts)
        return pts - 2.0 * dist[..., None] * self.normal

    def reversed(self):
        return OrientedLine(self.phi + math.pi, -self.p)


class Oval:
    """A closed convex curve; subclasses supply the parametrization.

    Subclasses must set ``total_length`` and implement ``position``,
    ``derivative`` and ``second_derivative``. Arclength defaults to a
    Gauss-Legendre table which subclasses with closed forms override.
    """

    kind = "oval"
    #: cells of the uniform bracketing grid used by the generic solvers
    grid_cells = 256

    # -- parametrization -------------------------------------------------
    def position(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def second_derivative(self, t):
        raise NotImplementedError

    def speed(self, t):
        return np.linalg.norm(self.derivative(t), axis=-1)

    def tangent_angle(self, t):
        d = self.derivative(t)
        if np.ndim(t) == 0:
            return angle_of(d)
        return np.mod(np.arctan2(d[..., 1], d[..., 0]), TWO_PI)

    def unit_tangent(self, t):
        d = self.derivative(t)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature(self, t):
        d1 = self.derivative(t)
        d2 = self.second_derivative(t)
        return cross(d1, d2) / np.linalg.norm(d1, axis=-1) ** 3

    def jet(self, t):
        """Scalar ``(x, y, x', y', x'', y'')`` at parameter ``t``."""
        p, d1, d2 = self.position(t), self.derivative(t), self.second_derivative(t)
        return (float(p[0]), float(p[1]), float(d1[0]), float(d1[1]),
                float(d2[0]), float(d2[1]))

    # -- arclength ---------------------------------------------------------
    def _build_arclength_table(self, n_cells=256):
        h = TWO_PI / n_cells
        left = np.arange(n_cells) * h
        nodes = left[:, None] + 0.5 * h * (_GL_NODES[None, :] + 1.0)
        pieces = 0.5 * h * (self.speed(nodes) @ _GL_WEIGHTS)
        self._cells = n_cells
        self._cell_width = h
        self._table = np.concatenate([[0.0], np.cumsum(pieces)])
        self.total_length = float(self._table[-1])

    def arclength(self, t):
        """Lifted arclength: ``arclength(t + 2*pi) = arclength(t) + total_length``."""
        t = np.asarray(t, dtype=float)
        turns = np.floor(t / TWO_PI)
        tm = t - turns * TWO_PI
        k = np.minimum((tm / self._cell_width).astype(int), self._cells - 1)
        left = k * self._cell_width
        half = 0.5 * (tm - left)
        nodes = left[..., None] + half[..., None] * (_GL_NODES + 1.0)
        partial = half * (self.speed(nodes) @ _GL_WEIGHTS)
        s = turns * self.total_length + self._table[k] + partial
        return float(s) if s.ndim == 0 else s

    def param_of_arclength(self, s):
        """Inverse of `arclength` (Newton from the tabulated guess)."""
        if np.ndim(s) != 0:
            return np.array([self.param_of_arclength(v) for v in np.ravel(s)]).reshape(np.shape(s))
        s = float(s)
        turns = math.floor(s / self.total_length)
        sm = s - turns * self.total_length
        t = self._initial_param_guess(sm)
        for _ in range(60):
            step = (self.arclength(t) - sm) / float(self.speed(t))
            t -= step
            if abs(step) <= 1e-14 * max(1.0, abs(t)):
                break
        else:
            raise NoConvergence("param_of_arclength")
        return t + turns * TWO_PI

    def _initial_param_guess(self, sm):
        k = int(np.searchsorted(self._table, sm, side="right")) - 1
        k = min(max(k, 0), self._cells - 1)
        frac = (sm - self._table[k]) / (self._table[k + 1] - self._table[k])
        return (k + frac) * self._cell_width

    # -- queries -----------------------------------------------------------
    def _transversal_sine(self, t, u):
        tan = self.unit_tangent(t)
        return float(tan[0] * u[1] - tan[1] * u[0])

    def second_intersection(self, t_from, direction):
        """Parameter where the chord leaving ``position(t_from)`` meets the curve again."""
        u = unit(direction)
        if self._transversal_sine(t_from, u) < GRAZING_TOL:
            raise TangentialRay(f"chord from t={t_from!r} is not entering the domain")
        t_hit = self._generic_second_intersection(t_from, u)
        return wrap_angle(t_hit)

    def _generic_second_intersection(self, t_from, u):
        p = self.position(t_from)

        def f(t):
            return cross(u, self.position(t) - p)

        def df(t):
            return cross(u, self.derivative(t))

        n = self.grid_cells
        for _ in range(12):
            h = TWO_PI / n
            grid = t_from + h * np.arange(1, n)
            vals = f(grid)
            nonneg = np.nonzero(vals >= 0.0)[0]
            if len(nonneg) == 0:
                lo, hi = grid[-1], t_from + TWO_PI
                hi = self._shrink_toward(f, lo, hi, want_positive=True)
            elif nonneg[0] == 0:
                lo, hi = t_from, grid[0]
                lo = self._shrink_toward(f, hi, lo, want_positive=False)
            else:
                k = nonneg[0]
                lo, hi = grid[k - 1], grid[k]
            if lo is not None and hi is not None:
                t_hit = safeguarded_newton(f, df, lo, hi)
                if abs(f(t_hit)) <= 1e-10 * self.total_length:
                    return t_hit
            n *= 2
        raise NoConvergence(f"second_intersection from t={t_from!r}")

    @staticmethod
    def _shrink_toward(f, good, edge, want_positive):
        """Move from ``edge`` (a root) toward ``good`` until ``f`` has the wanted sign."""
        gap = good - edge
        for j in range(1, 60):
            x = edge + gap * 2.0 ** (-j)
            v = f(x)
            if (v > 0.0) == want_positive and v != 0.0:
                return x
        return None

    def ray_exit(self, point, direction):
        """Parameter of the farthest forward intersection of a ray with the curve.

        ``point`` must lie inside or on the curve. For a boundary point use
        `second_intersection`, which handles short chords robustly.
        """
        u = unit(direction)
        p = np.asarray(point, dtype=float)

        def f(t):
            return cross(u, self.position(t) - p)

        def df(t):
            return cross(u, self.derivative(t))

        roots = periodic_roots(f, df, self.grid_cells, expected=2)
        if not roots:
            raise NoConvergence("ray does not meet the curve")
        lam = [float(np.dot(self.position(t) - p, u)) for t in roots]
        return wrap_angle(roots[int(np.argmax(lam))])

    def tangent_points_from_external(self, point):
        """Tangency parameters of the two lines through an exterior point.

        The first returned parameter is the forward tangency: walking from
        ``point`` to it, the curve lies on the left.
        """
        a = np.asarray(point, dtype=float)
        if self.contains(a, strict=False):
            raise PointInside(f"point {a.tolist()} is not outside the curve")
        roots = self._tangency_roots(a)
        if len(roots) != 2:
            raise NoConvergence(f"expected 2 tangency points, found {len(roots)}")
        return self._order_tangencies(a, roots)

    def _tangency_roots(self, a):
        def g(t):
            return cross(self.derivative(t), a - self.position(t))

        def dg(t):
            return cross(self.second_derivative(t), a - self.position(t))

        return periodic_roots(g, dg, self.grid_cells, expected=2)

    def _order_tangencies(self, a, roots):
        t0, t1 = (wrap_angle(r) for r in roots)
        if float(np.dot(self.position(t0) - a, self.derivative(t0))) > 0.0:
            return t0, t1
        return t1, t0

    def contains(self, point, strict=True):
        """Whether ``point`` is inside (``strict``) or inside-or-on the curve."""
        a = np.asarray(point, dtype=float)
        grid = TWO_PI * np.arange(4 * self.grid_cells) / (4 * self.grid_cells)
        side = cross(self.unit_tangent(grid), a - self.position(grid))
        tol = 1e-12 * self.total_length
        return bool(np.all(side > tol)) if strict else bool(np.all(side > -tol))

    # -- helpers -----------------------------------------------------------
    def sample(self, n=512):
        return self.position(TWO_PI * np.arange(n) / n)

    @property
    def diameter(self):
        pts = self.sample(1024)
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def to_config(self):
        raise NotImplementedError(f"{type(self).__name__} has no declarative form")


class Circle(Oval):
    kind = "circle"

    def __init__(self, radius=1.0, center=(0.0, 0.0)):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = np.array(center, dtype=float)
        self.total_length = TWO_PI * self.radius

    def position(self, t):
        if np.ndim(t) == 0:
            return np.array([self.center[0] + self.radius * math.cos(t),
                             self.center[1] + self.radius * math.sin(t)])
        t = np.asarray(t, dtype=float)
        return self.center + self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def derivative(self, t):
        if np.ndim(t) == 0:
            return np.array([-self.radius * math.sin(t), self.radius * math.cos(t)])
        t = np.asarray(t, dtype=float)
        return self.radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def second_derivative(self, t):
        if np.ndim(t) == 0:
            return np.array([-self.radius * math.cos(t), -self.radius * math.sin(t)])
        t = np.asarray(t, dtype=float)
        return -self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def tangent_angle(self, t):
        if np.ndim(t) == 0:
            return wrap_angle(t + 0.5 * math.pi)
        return np.mod(np.asarray(t) + 0.5 * math.pi, TWO_PI)

    def curvature(self, t):
        return np.full(np.shape(t), 1.0 / self.radius) if np.ndim(t) else 1.0 / self.radius

    def arclength(self, t):
        return self.radius * t

    def param_of_arclength(self, s):
        return s / self.radius

    def second_intersection(self, t_from, direction):
        incidence = wrap_angle(direction - t_from - 0.5 * math.pi)
        if math.sin(incidence) < GRAZING_TOL or incidence >= math.pi:
            raise TangentialRay(f"chord from t={t_from!r} is not entering the domain")
        return wrap_angle(t_from + 2.0 * incidence)

    def ray_exit(self, point, direction):
        u = unit(direction)
        q = np.asarray(point, dtype=float) - self.center
        b = float(q @ u)
        c = float(q @ q) - self.radius ** 2
        lam = -b + math.sqrt(max(b * b - c, 0.0))
        return angle_of(q + lam * u)

    def _tangency_roots(self, a):
        q = a - self.center
        dist = math.hypot(q[0], q[1])
        psi = math.atan2(q[1], q[0])
        half = math.acos(self.radius / dist)
        return [psi + half, psi - half]

    def contains(self, point, strict=True):
        q = np.asarray(point, dtype=float) - self.center
        d2 = float(q @ q)
        r2 = self.radius ** 2
        tol = 1e-12 * r2
        return d2 < r2 - tol if strict else d2 <= r2 + tol

    @property
    def diameter(self):
        return 2.0 * self.radius

    def to_config(self):
        cfg = {"kind": "circle", "radius": self.radius}
        if np.any(self.center):
            cfg["center"] = self.center.tolist()
        return cfg


class Ellipse(Oval):
    """Axis-aligned ellipse ``(a cos t, b sin t)`` about ``center``."""

    kind = "ellipse"

    def __init__(self, a, b, center=(0.0, 0.0)):
        if not (a > 0 and b > 0):
            raise ValueError("semi-axes must be positive")
        self.a = float(a)
        self.b = float(b)
        self.center = np.array(center, dtype=float)
        if self.a >= self.b:
            self._m = 1.0 - (self.b / self.a) ** 2
            self._quarter = ellipe(self._m)
            self.total_length = 4.0 * self.a * self._quarter
        else:
            self._m = 1.0 - (self.a / self.b) ** 2
            self.total_length = 4.0 * self.b * ellipe(self._m)

    def position(self, t):
        if np.ndim(t) == 0:
            return np.array([self.center[0] + self.a * math.cos(t),
                             self.center[1] + self.b * math.sin(t)])
        t = np.asarray(t, dtype=float)
        return self.center + np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)

    def derivative(self, t):
        if np.ndim(t) == 0:
            return np.array([-self.a * math.sin(t), self.b * math.cos(t)])
        t = np.asarray(t, dtype=float)
        return np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)

    def second_derivative(self, t):
        if np.ndim(t) == 0:
            return np.array([-self.a * math.cos(t), -self.b * math.sin(t)])
        t = np.asarray(t, dtype=float)
        return -np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)

    def speed(self, t):
        if np.ndim(t) == 0:
            return math.hypot(self.a * math.sin(t), self.b * math.cos(t))
        t = np.asarray(t, dtype=float)
        return np.hypot(self.a * np.sin(t), self.b * np.cos(t))

    def tangent_angle(self, t):
        if np.ndim(t) == 0:
            return wrap_angle(math.atan2(self.b * math.cos(t), -self.a * math.sin(t)))
        return super().tangent_angle(t)

    def arclength(self, t):
        if self.a >= self.b:
            s = self.a * (ellipeinc(np.asarray(t) - 0.5 * math.pi, self._m) + self._quarter)
        else:
            s = self.b * ellipeinc(np.asarray(t), self._m)
        return float(s) if np.ndim(s) == 0 else s

    def param_of_arclength(self, s):
        if np.ndim(s) != 0:
            return np.array([self.param_of_arclength(v) for v in np.ravel(s)]).reshape(np.shape(s))
        turns = math.floor(s / self.total_length)
        sm = s - turns * self.total_length
        t = TWO_PI * sm / self.total_length
        for _ in range(60):
            step = (self.arclength(t) - sm) / float(self.speed(t))
            t -= step
            if abs(step) <= 1e-14 * max(1.0, abs(t)):
                break
        else:
            raise NoConvergence("param_of_arclength")
        return t + turns * TWO_PI

    def second_intersection(self, t_from, direction):
        u = unit(direction)
        st, ct = math.sin(t_from), math.cos(t_from)
        tx, ty = -self.a * st, self.b * ct
        if (tx * u[1] - ty * u[0]) / math.hypot(tx, ty) < GRAZING_TOL:
            raise TangentialRay(f"chord from t={t_from!r} is not entering the domain")
        # in normalized coordinates the ellipse is the unit circle
        ux, uy = u[0] / self.a, u[1] / self.b
        lam = -2.0 * (ct * ux + st * uy) / (ux * ux + uy * uy)
        return wrap_angle(math.atan2(st + lam * uy, ct + lam * ux))

    def ray_exit(self, point, direction):
        u = unit(direction)
        q = (np.asarray(point, dtype=float) - self.center) / (self.a, self.b)
        v = u / (self.a, self.b)
        aa = float(v @ v)
        b = float(q @ v)
        c = float(q @ q) - 1.0
        lam = (-b + math.sqrt(max(b * b - aa * c, 0.0))) / aa
        w = q + lam * v
        return wrap_angle(math.atan2(w[1], w[0]))

    def _tangency_roots(self, a):
        qx, qy = a - self.center
        r = math.hypot(self.b * qx, self.a * qy)
        psi = math.atan2(self.a * qy, self.b * qx)
        half = math.acos(self.a * self.b / r)
        return [psi + half, psi - half]

    def contains(self, point, strict=True):
        q = (np.asarray(point, dtype=float) - self.center) / (self.a, self.b)
        v = float(q @ q)
        return v < 1.0 - 1e-12 if strict else v <= 1.0 + 1e-12

    def implicit(self, point):
        q = (np.asarray(point, dtype=float) - self.center) / (self.a, self.b)
        return (q ** 2).sum(-1)

    @property
    def diameter(self):
        return 2.0 * max(self.a, self.b)

    def to_config(self):
        cfg = {"kind": "ellipse", "a": self.a, "b": self.b}
        if np.any(self.center):
            cfg["center"] = self.center.tolist()
        return cfg


class Stadium(Oval):
    """Two half-discs of radius ``r`` joined by straight segments of length ``2*half_length``.

    The parameter is proportional to arclength, ``t = 2*pi*s/L``, with
    ``s = 0`` at the rightmost point. Straight pieces are horizontal.
    """

    kind = "stadium"

    def __init__(self, half_length=1.0, radius=1.0):
        if not (half_length > 0 and radius > 0):
            raise ValueError("stadium dimensions must be positive")
        self.half_length = ell = float(half_length)
        self.radius = r = float(radius)
        self.total_length = 4.0 * ell + TWO_PI * r
        # arclength breakpoints: right cap | top | left cap | bottom | right cap
        self._s1 = 0.5 * math.pi * r
        self._s2 = self._s1 + 2.0 * ell
        self._s3 = self._s2 + math.pi * r
        self._s4 = self._s3 + 2.0 * ell
        self._scale = self.total_length / TWO_PI

    # piece codes: 0 right cap, 1 top, 2 left cap, 3 bottom
    def _pieces(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.total_length)
        piece = np.select(
            [s <= self._s1, s < self._s2, s <= self._s3, s < self._s4],
            [0, 1, 2, 3], default=0)
        return s, piece

    def _frame(self, t):
        """Unit-speed position, tangent and curvature at parameter ``t``."""
        s, piece = self._pieces(np.asarray(t, dtype=float) * self._scale)
        ell, r = self.half_length, self.radius
        theta = np.where(piece == 0, np.where(s <= self._s1, s / r, 1.5 * math.pi + (s - self._s4) / r),
                         0.5 * math.pi + (s - self._s2) / r)
        cx = np.where(piece == 0, ell, -ell)
        cap = (piece == 0) | (piece == 2)
        x = np.where(cap, cx + r * np.cos(theta),
                     np.where(piece == 1, ell - (s - self._s1), -ell + (s - self._s3)))
        y = np.where(cap, r * np.sin(theta), np.where(piece == 1, r, -r))
        tx = np.where(cap, -np.sin(theta), np.where(piece == 1, -1.0, 1.0))
        ty = np.where(cap, np.cos(theta), 0.0)
        kappa = np.where(cap, 1.0 / r, 0.0)
        nx = np.where(cap, -np.cos(theta), 0.0)
        ny = np.where(cap, -np.sin(theta), np.where(piece == 1, -1.0, 1.0))
        return (np.stack([x, y], -1), np.stack([tx, ty], -1), kappa, np.stack([nx, ny], -1))

    def frame_scalar(self, t):
        """``(x, y, tx, ty, kappa)``: unit-speed point, tangent and curvature."""
        ell, r, L = self.half_length, self.radius, self.total_length
        s = math.fmod(t * self._scale, L)
        if s < 0.0:
            s += L
        if s <= self._s1 or s >= self._s4:
            theta = s / r if s <= self._s1 else 1.5 * math.pi + (s - self._s4) / r
            c, sn = math.cos(theta), math.sin(theta)
            return ell + r * c, r * sn, -sn, c, 1.0 / r
        if s < self._s2:
            return ell - (s - self._s1), r, -1.0, 0.0, 0.0
        if s <= self._s3:
            theta = 0.5 * math.pi + (s - self._s2) / r
            c, sn = math.cos(theta), math.sin(theta)
            return -ell + r * c, r * sn, -sn, c, 1.0 / r
        return -ell + (s - self._s3), -r, 1.0, 0.0, 0.0

    def jet(self, t):
        x, y, tx, ty, kappa = self.frame_scalar(t)
        c = self._scale
        k = c * c * kappa
        return x, y, c * tx, c * ty, -k * ty, k * tx

    def position(self, t):
        if np.ndim(t) == 0:
            return np.array(self.frame_scalar(t)[:2])
        return self._frame(t)[0]

    def derivative(self, t):
        if np.ndim(t) == 0:
            f = self.frame_scalar(t)
            return np.array([self._scale * f[2], self._scale * f[3]])
        return self._scale * self._frame(t)[1]

    def second_derivative(self, t):
        if np.ndim(t) == 0:
            _, _, tx, ty, kappa = self.frame_scalar(t)
            k = self._scale ** 2 * kappa
            return np.array([-k * ty, k * tx])
        _, _, kappa, normal = self._frame(t)
        return self._scale ** 2 * kappa[..., None] * normal

    def tangent_angle(self, t):
        if np.ndim(t) == 0:
            f = self.frame_scalar(t)
            return wrap_angle(math.atan2(f[3], f[2]))
        return super().tangent_angle(t)

    def speed(self, t):
        return np.full(np.shape(t), self._scale)

    def curvature(self, t):
        if np.ndim(t) == 0:
            return self.frame_scalar(t)[4]
        return self._frame(t)[2]

    def arclength(self, t):
        return self._scale * t

    def param_of_arclength(self, s):
        return s / self._scale

    def second_intersection(self, t_from, direction):
        ux, uy = math.cos(direction), math.sin(direction)
        px, py, tx, ty, _ = self.frame_scalar(t_from)
        if tx * uy - ty * ux < GRAZING_TOL:
            raise TangentialRay(f"chord from t={t_from!r} is not entering the domain")
        return self._exit(px, py, ux, uy)

    def ray_exit(self, point, direction):
        u = unit(direction)
        return self._exit(float(point[0]), float(point[1]), u[0], u[1])

    def _exit(self, px, py, ux, uy):
        ell, r = self.half_length, self.radius
        slack = 1e-12 * (ell + r)
        best_lam, best_s = -math.inf, None
        if uy != 0.0:
            for yline in (r, -r):
                lam = (yline - py) / uy
                x = px + lam * ux
                if abs(x) <= ell + slack and lam > best_lam:
                    s = self._s1 + (ell - x) if yline > 0 else self._s3 + (x + ell)
                    best_lam, best_s = lam, s
        for cx in (ell, -ell):
            qx = px - cx
            b = qx * ux + py * uy
            disc = b * b - (qx * qx + py * py - r * r)
            if disc < 0.0:
                continue
            lam = -b + math.sqrt(disc)
            x = px + lam * ux
            if (x - cx) * cx >= -slack * abs(cx) and lam > best_lam:
                theta = math.atan2(py + lam * uy, x - cx)
                if cx > 0:
                    s = r * theta if theta >= 0.0 else self._s4 + r * (theta + 0.5 * math.pi)
                else:
                    s = self._s2 + r * (wrap_angle(theta) - 0.5 * math.pi)
                best_lam, best_s = lam, s
        if best_s is None:
            raise NoConvergence("ray misses the stadium")
        return wrap_angle(best_s / self._scale)

    def contains(self, point, strict=True):
        x, y = (float(v) for v in point)
        ell, r = self.half_length, self.radius
        tol = 1e-12 * (ell + r)
        if abs(x) <= ell:
            return abs(y) < r - tol if strict else abs(y) <= r + tol
        d = math.hypot(abs(x) - ell, y)
        return d < r - tol if strict else d <= r + tol

    def to_config(self):
        return {"kind": "stadium", "half_length": self.half_length, "radius": self.radius}


class SupportFourierOval(Oval):
    """Oval given by its support function ``h(phi)`` as a truncated Fourier series.

    ``h(phi) = cos[0] + sum_k cos[k] cos(k phi) + sin[k-1] sin(k phi)``.
    The parameter is the outward normal angle ``phi``; the radius of
    curvature ``h + h''`` must be positive everywhere.
    """

    kind = "support_fourier"

    def __init__(self, cos_coeffs, sin_coeffs=()):
        a_in = np.asarray(cos_coeffs, dtype=float)
        b_in = np.asarray(sin_coeffs, dtype=float)
        size = max(len(a_in), len(b_in) + 1)
        a, b = np.zeros(size), np.zeros(size)
        a[:len(a_in)] = a_in
        b[1:1 + len(b_in)] = b_in
        if a[0] <= 0:
            raise ValueError("constant support coefficient must be positive")
        self.a = a
        self.b = b
        self.k = np.arange(len(a), dtype=float)
        self._coeffs = list(zip(a.tolist(), b.tolist()))
        self.total_length = TWO_PI * a[0]
        grid = TWO_PI * np.arange(4096) / 4096
        rho = self.radius_of_curvature(grid)
        if rho.min() <= 0:
            raise ValueError("support function does not define a strictly convex curve "
                             f"(min radius of curvature {rho.min():.3g})")

    def _series(self, phi, order):
        """``order``-th derivative of ``h`` (vectorized)."""
        if np.ndim(phi) == 0:
            return self._series_scalar(float(phi), order)
        phi = np.asarray(phi, dtype=float)
        kp = phi[..., None] * self.k
        c, s = np.cos(kp), np.sin(kp)
        kk = self.k ** order
        # d^n/dphi^n of (a cos + b sin) cycles through four forms
        forms = [(c, s), (-s, c), (-c, -s), (s, -c)]
        fc, fs = forms[order % 4]
        return (fc * (self.a * kk) + fs * (self.b * kk)).sum(-1)

    def _series_scalar(self, phi, order):
        total = 0.0
        sign_c, sign_s = [(1, 1), (-1, 1), (-1, -1), (1, -1)][order % 4]
        swap = order % 2 == 1
        for k, (a, b) in enumerate(self._coeffs):
            if a == 0.0 and b == 0.0:
                continue
            c, s = math.cos(k * phi), math.sin(k * phi)
            if swap:
                c, s = s, c
            total += k ** order * (sign_c * a * c + sign_s * b * s)
        return total

    def _hits(self, p, direction):
        """Boundary parameter where the line through ``p`` leaves along ``direction``.

        ``cross(u, gamma(t) - p)`` increases on the half-circle of normals
        facing ``u``, which brackets the exit point.
        """
        ux, uy = math.cos(direction), math.sin(direction)
        offset = ux * p[1] - uy * p[0]

        def f(t):
            return (self._series(t, 0) * np.sin(t - direction)
                    + self._series(t, 1) * np.cos(t - direction) - offset)

        def df(t):
            return self.radius_of_curvature(t) * np.cos(t - direction)

        lo, hi = direction - 0.5 * math.pi, direction + 0.5 * math.pi
        return wrap_angle(safeguarded_newton(f, df, lo, hi))

    def second_intersection(self, t_from, direction):
        if math.sin(direction - t_from - 0.5 * math.pi) < GRAZING_TOL:
            raise TangentialRay(f"chord from t={t_from!r} is not entering the domain")
        try:
            return self._hits(self.position(t_from), direction)
        except NoConvergence:
            return wrap_angle(self._generic_second_intersection(t_from, unit(direction)))

    def ray_exit(self, point, direction):
        return self._hits(np.asarray(point, dtype=float), direction)

    def support(self, phi):
        return self._series(phi, 0)

    def radius_of_curvature(self, phi):
        return self._series(phi, 0) + self._series(phi, 2)

    def position(self, t):
        if np.ndim(t) == 0:
            h, dh = self._series_scalar(t, 0), self._series_scalar(t, 1)
            c, s = math.cos(t), math.sin(t)
            return np.array([h * c - dh * s, h * s + dh * c])
        t = np.asarray(t, dtype=float)
        h, dh = self._series(t, 0), self._series(t, 1)
        c, s = np.cos(t), np.sin(t)
        return np.stack([h * c - dh * s, h * s + dh * c], axis=-1)

    def derivative(self, t):
        if np.ndim(t) == 0:
            rho = self.radius_of_curvature(t)
            return np.array([-rho * math.sin(t), rho * math.cos(t)])
        t = np.asarray(t, dtype=float)
        rho = self.radius_of_curvature(t)
        return rho[..., None] * np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        rho = self.radius_of_curvature(t)
        drho = self._series(t, 1) + self._series(t, 3)
        c, s = np.cos(t), np.sin(t)
        return np.stack([-drho * s - rho * c, drho * c - rho * s], axis=-1)

    def speed(self, t):
        return self.radius_of_curvature(t)

    def tangent_angle(self, t):
        if np.ndim(t) == 0:
            return wrap_angle(t + 0.5 * math.pi)
        return np.mod(np.asarray(t) + 0.5 * math.pi, TWO_PI)

    def curvature(self, t):
        return 1.0 / self.radius_of_curvature(t)

    def arclength(self, t):
        t = np.asarray(t, dtype=float)
        k = self.k[1:]
        w = 1.0 - k ** 2
        kt = t[..., None] * k
        osc = (w * (self.a[1:] * np.sin(kt) - self.b[1:] * (np.cos(kt) - 1.0)) / k).sum(-1)
        s = self.a[0] * t + osc
        return float(s) if s.ndim == 0 else s

    def _initial_param_guess(self, sm):
        return sm / self.a[0]

    def _tangency_roots(self, a):
        def g(phi):
            return a[0] * np.cos(phi) + a[1] * np.sin(phi) - self.support(phi)

        def dg(phi):
            return -a[0] * np.sin(phi) + a[1] * np.cos(phi) - self._series(phi, 1)

        return periodic_roots(g, dg, self.grid_cells, expected=2)

    def translated(self, offset):
        """The same curve moved by ``offset`` (a change of the first harmonic)."""
        a, b = self.a.copy(), self.b.copy()
        if len(a) < 2:
            a = np.concatenate([a, [0.0]])
            b = np.concatenate([b, [0.0]])
        a[1] += offset[0]
        b[1] += offset[1]
        return SupportFourierOval(a, b[1:])

    @property
    def center(self):
        if len(self.a) < 2:
            return np.zeros(2)
        return np.array([self.a[1], self.b[1]])

    def to_config(self):
        return {"kind": "support_fourier", "cos": self.a.tolist(), "sin": self.b[1:].tolist()}


def random_support_oval(rng, n_harmonics=4, roughness=0.08, min_radius=0.3):
    """A random smooth oval with support function close to 1.

    Harmonic ``k`` has amplitude of order ``roughness / k``; the first
    harmonic (a pure translation) is left at zero. The perturbation is
    shrunk until the radius of curvature stays above ``min_radius``.
    """
    k = np.arange(2, n_harmonics + 2)
    ca = rng.normal(0.0, 1.0, len(k)) * roughness / k
    sa = rng.normal(0.0, 1.0, len(k)) * roughness / k
    grid = TWO_PI * np.arange(4096) / 4096
    while True:
        rho = 1.0 + ((1 - k ** 2) * (ca * np.cos(np.outer(grid, k)) + sa * np.sin(np.outer(grid, k)))).sum(-1)
        if rho.min() >= min_radius:
            break
        ca *= 0.8
        sa *= 0.8
    return SupportFourierOval(np.concatenate([[1.0, 0.0], ca]), np.concatenate([[0.0], sa]))


class ParametricOval(Oval):
    """Oval given by callables ``xy(t)``, ``dxy(t)`` and ``ddxy(t)``.

    The callables take numpy arrays and return arrays of shape ``(..., 2)``.
    Arclength is tabulated by Gauss-Legendre quadrature at construction.
    """

    kind = "parametric"

    def __init__(self, xy, dxy, ddxy):
        self._xy, self._dxy, self._ddxy = xy, dxy, ddxy
        self._build_arclength_table()

    def position(self, t):
        return self._xy(np.asarray(t, dtype=float))

    def derivative(self, t):
        return self._dxy(np.asarray(t, dtype=float))

    def second_derivative(self, t):
        return self._ddxy(np.asarray(t, dtype=float))


class AffineOval(ParametricOval):
    """Image of ``base`` under ``x -> M x + offset`` with ``det M > 0``."""

    kind = "affine"

    def __init__(self, base, matrix, offset=(0.0, 0.0)):
        m = np.asarray(matrix, dtype=float)
        if np.linalg.det(m) <= 0:
            raise ValueError("affine map must preserve orientation")
        self.base = base
        self.matrix = m
        self.offset = np.asarray(offset, dtype=float)
        super().__init__(
            lambda t: base.position(t) @ m.T + self.offset,
            lambda t: base.derivative(t) @ m.T,
            lambda t: base.second_derivative(t) @ m.T,
        )


class PolygonTable:
    """Simple counterclockwise polygon.

    Boundary points are addressed by ``sigma = i + u``: edge ``i`` runs from
    vertex ``i`` to vertex ``i + 1`` and ``u`` in ``[0, 1)`` is the fraction
    along it.
    """

    kind = "polygon"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("a polygon needs at least 3 planar vertices")
        self.vertices = v
        self.n = len(v)
        if self.signed_area <= 0:
            raise ValueError("polygon vertices must be counterclockwise")
        if not self._is_simple():
            raise ValueError("polygon is self-intersecting")
        d = v[:, None, :] - v[None, :, :]
        self.diameter = float(np.sqrt((d ** 2).sum(-1)).max())

    @property
    def signed_area(self):
        v = self.vertices
        return 0.5 * float(cross(v, np.roll(v, -1, axis=0)).sum())

    def _is_simple(self):
        n = self.n
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(*self.edge(i), *self.edge(j)):
                    return False
        return True

    def edge(self, i):
        i %= self.n
        return self.vertices[i], self.vertices[(i + 1) % self.n]

    def edge_vector(self, i):
        a, b = self.edge(i)
        return b - a

    def point(self, sigma):
        i = int(math.floor(sigma)) % self.n
        u = sigma - math.floor(sigma)
        a, b = self.edge(i)
        return a + u * (b - a)

    def is_convex(self):
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return bool(np.all(cross(e, np.roll(e, -1, axis=0)) > 0))

    def diagonal_intersection(self):
        if self.n != 4:
            raise ValueError("diagonals are defined here for quadrilaterals only")
        p0, p1, p2, p3 = self.vertices
        return line_intersection(p0, p2 - p0, p1, p3 - p1)

    def ray_exit(self, origin, direction, exclude_edge=None):
        """First boundary hit of a ray: ``(edge, u, point)``."""
        o = np.asarray(origin, dtype=float)
        d = unit(direction)
        best = None
        tol = 1e-12 * self.diameter
        for i in range(self.n):
            if i == exclude_edge:
                continue
            a, b = self.edge(i)
            e = b - a
            den = cross(d, e)
            if abs(den) < 1e-15:
                continue
            w = a - o
            lam = float(cross(w, e) / den)
            u = float(cross(w, d) / den)
            if lam > tol and -1e-12 <= u <= 1.0 + 1e-12 and (best is None or lam < best[0]):
                best = (lam, i, min(max(u, 0.0), 1.0))
        if best is None:
            raise NoConvergence("ray does not leave the polygon")
        lam, i, u = best
        return i, u, o + lam * d

    def vertex_distance(self, edge, u):
        return min(u, 1.0 - u) * float(np.linalg.norm(self.edge_vector(edge)))

    def contains(self, point):
        p = np.asarray(point, dtype=float)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        return bool(np.all(cross(e, p - v) > 0)) if self.is_convex() else _winding(v, p) != 0

    def sample(self, n=None):
        return np.vstack([self.vertices, self.vertices[:1]])

    def to_config(self):
        return {"kind": "polygon", "vertices": self.vertices.tolist()}


class Polyline:
    """Open or closed chain of straight segments (no convexity assumed)."""

    kind = "polyline"

    def __init__(self, points, closed=False):
        p = np.asarray(points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or len(p) < 2:
            raise ValueError("a polyline needs at least 2 planar points")
        self.points = p
        self.closed = bool(closed)

    def segments(self):
        pts = self.points
        ends = np.roll(pts, -1, axis=0) if self.closed else pts[1:]
        starts = pts if self.closed else pts[:-1]
        return list(zip(starts, ends))

    def to_config(self):
        return {"kind": "polyline", "points": self.points.tolist(), "closed": self.closed}


def line_intersection(p, d, q, e):
    """Intersection point of lines ``p + s d`` and ``q + t e``."""
    den = float(cross(d, e))
    if abs(den) < 1e-300:
        raise NoConvergence("parallel lines")
    s = float(cross(np.asarray(q) - p, e)) / den
    return np.asarray(p, dtype=float) + s * np.asarray(d, dtype=float)


def _segments_intersect(a, b, c, d):
    def orient(p, q, r):
        return float(cross(q - p, r - p))

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def _winding(v, p):
    wn = 0
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        if a[1] <= p[1] < b[1] and cross(b - a, p - a) > 0:
            wn += 1
        elif b[1] <= p[1] < a[1] and cross(b - a, p - a) < 0:
            wn -= 1
    return wn


def curve_from_config(cfg):
    """Build a curve or polygon from a declarative ``{"kind": ...}`` record."""
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind == "circle":
        return Circle(cfg["radius"], cfg.get("center", (0.0, 0.0)))
    if kind == "ellipse":
        return Ellipse(cfg["a"], cfg["b"], cfg.get("center", (0.0, 0.0)))
    if kind == "stadium":
        return Stadium(cfg["half_length"], cfg["radius"])
    if kind == "support_fourier":
        return SupportFourierOval(cfg["cos"], cfg.get("sin", ()))
    if kind == "polygon":
        return PolygonTable(cfg["vertices"])
    if kind == "polyline":
        return Polyline(cfg["points"], cfg.get("closed", False))
    raise ValueError(f"unknown curve kind {kind!r}")
