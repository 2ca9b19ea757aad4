"""Envelopes of line families: caustics by reflection, cusps, string test, symmetry."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import (DegenerateFamily, InsufficientData, NotInvariant, NotNested, PointInside,
                     UnresolvedCusp)
from .geometry import TWO_PI, OrientedLine, cross


def periodic_derivative(values, period, order=1, method="spectral"):
    """Derivative of samples on a uniform periodic grid along axis 0."""
    v = np.asarray(values, dtype=float)
    m = v.shape[0]
    h = period / m
    if method == "spectral":
        k = np.fft.fftfreq(m, d=h) * TWO_PI
        if m % 2 == 0 and order % 2 == 1:
            k[m // 2] = 0.0
        mult = (1j * k) ** order
        shape = (m,) + (1,) * (v.ndim - 1)
        return np.real(np.fft.ifft(np.fft.fft(v, axis=0) * mult.reshape(shape), axis=0))
    if method == "fd6":
        out = v
        for _ in range(order):
            c = (45.0 * (np.roll(out, -1, 0) - np.roll(out, 1, 0))
                 - 9.0 * (np.roll(out, -2, 0) - np.roll(out, 2, 0))
                 + (np.roll(out, -3, 0) - np.roll(out, 3, 0))) / (60.0 * h)
            out = c
        return out
    raise ValueError(f"unknown derivative method {method!r}")


@dataclass
class LineFamily:
    """Lines through ``points[i]`` with unit ``directions[i]`` on a uniform periodic grid."""

    t: np.ndarray
    points: np.ndarray
    directions: np.ndarray
    period: float = TWO_PI
    method: str = "spectral"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        d = np.asarray(self.directions, dtype=float)
        if len(self.t) < 64:
            raise InsufficientData("a line family needs at least 64 samples")
        self.directions = d / np.linalg.norm(d, axis=1, keepdims=True)

    @classmethod
    def tangents_of(cls, oval, m=512):
        t = TWO_PI * np.arange(m) / m
        return cls(t, oval.position(t), oval.unit_tangent(t))


@dataclass
class EnvelopeCurve:
    t: np.ndarray
    points: np.ndarray
    defined: np.ndarray
    speed: np.ndarray
    cusps: np.ndarray
    period: float = TWO_PI
    meta: dict = field(default_factory=dict)

    @property
    def diameter(self):
        return _diameter(self.points[self.defined])

    @property
    def is_point(self):
        return bool(self.meta.get("point_degenerate", False))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["t", "x", "y", "cusp_flag"])
        for t, (x, y), ok, c in zip(self.t, self.points, self.defined, self.cusps):
            if ok:
                w.writerow([repr(float(t)), repr(float(x)), repr(float(y)), int(c)])
        return buf.getvalue()


def _diameter(p, n_dirs=1024):
    """Largest width over ``n_dirs`` directions (relative error below 5e-6)."""
    if len(p) < 2:
        return 0.0
    try:
        p = p[ConvexHull(p).vertices]
    except (QhullError, ValueError):
        pass
    ang = np.pi * np.arange(n_dirs) / n_dirs
    dirs = np.stack([np.cos(ang), np.sin(ang)])
    lo = np.full(n_dirs, np.inf)
    hi = np.full(n_dirs, -np.inf)
    for start in range(0, len(p), 4096):
        proj = p[start:start + 4096] @ dirs
        lo = np.minimum(lo, proj.min(axis=0))
        hi = np.maximum(hi, proj.max(axis=0))
    return float(np.max(hi - lo))


SPECTRAL_TAIL_TOL = 1e-4


def _spectral_tail(family):
    """Largest relative Fourier magnitude in the middle eighth of the spectrum."""
    m = len(family.t)
    band = slice(m // 2 - m // 16, m // 2 + m // 16 + 1)
    worst = 0.0
    for arr in (family.points, family.directions):
        f = np.abs(np.fft.fft(arr, axis=0))
        worst = max(worst, float(np.max(f[band].max(axis=0) / np.maximum(f.max(axis=0), 1e-300))))
    return worst


def envelope(family, denominator_tol=1e-9):
    """Envelope ``E = p + tau u`` with ``tau = -det(u, p')/det(u, u')``.

    ``speed`` is the signed envelope speed ``sigma`` with ``E' = sigma u``.
    With spectral differentiation a family whose Fourier tail exceeds
    `SPECTRAL_TAIL_TOL` is marked unresolved and no cusps are flagged.
    """
    per, meth = family.period, family.method
    p, u = family.points, family.directions
    dp = periodic_derivative(p, per, 1, meth)
    ddp = periodic_derivative(p, per, 2, meth)
    du = periodic_derivative(u, per, 1, meth)
    ddu = periodic_derivative(u, per, 2, meth)
    num = cross(u, dp)
    den = cross(u, du)
    scale = max(float(np.max(np.abs(den))), np.finfo(float).tiny)
    defined = np.abs(den) > denominator_tol * scale
    if np.mean(~defined) > 0.1:
        raise DegenerateFamily("line directions are (nearly) constant along the family")
    safe = np.where(defined, den, 1.0)
    tau = -num / safe
    dnum = cross(du, dp) + cross(u, ddp)
    dden = cross(u, ddu)
    dtau = -(dnum * safe - num * dden) / safe ** 2
    sigma = np.sum(dp * u, axis=1) + dtau
    points = p + tau[:, None] * u
    points[~defined] = np.nan
    sigma[~defined] = np.nan
    base = np.ptp(p, axis=0).max() if len(p) else 0.0
    env = EnvelopeCurve(family.t, points, defined, sigma,
                        np.zeros(len(family.t), dtype=bool), per)
    spread = float(np.nanmax(np.ptp(points[defined], axis=0)))
    env.meta["point_degenerate"] = bool(spread <= 1e-9 * max(base, 1.0))
    if meth == "spectral":
        env.meta["spectral_tail"] = _spectral_tail(family)
        if env.meta["spectral_tail"] > SPECTRAL_TAIL_TOL:
            env.meta["under_resolved"] = True
    if not env.is_point and not env.meta.get("under_resolved"):
        try:
            env.cusps = _cusp_flags(env)
        except UnresolvedCusp:
            env.meta["unresolved_cusp"] = True
    return env


def _cusp_flags(env):
    """Mark sign changes of the envelope speed, ignoring sub-threshold flicker."""
    m = len(env.t)
    thr = 1e-8 * env.diameter / env.period
    sig = np.where(env.defined & (np.abs(np.nan_to_num(env.speed)) > thr),
                   np.sign(np.nan_to_num(env.speed)), 0.0)
    strong = np.nonzero(sig)[0]
    flags = np.zeros(m, dtype=bool)
    if len(strong) < 2:
        return flags
    for a, b in zip(strong, np.roll(strong, -1)):
        if sig[a] == sig[b]:
            continue
        gap = (b - a) % m
        between = [(a + j) % m for j in range(1, gap)]
        if any(not env.defined[i] for i in between):
            raise UnresolvedCusp(f"speed changes sign across a degenerate gap near t={env.t[a]:.6g}")
        flags[(a + gap // 2) % m] = True
    return flags


def cusp_count(env):
    """Number of sign changes of the envelope speed (with hysteresis)."""
    if env.is_point:
        raise DegenerateFamily("envelope collapses to a point")
    if np.mean(env.defined) < 0.9:
        raise DegenerateFamily("envelope undefined on more than 10% of the samples")
    if env.meta.get("under_resolved"):
        raise UnresolvedCusp(f"line family under-resolved on {len(env.t)} samples "
                             f"(spectral tail {env.meta['spectral_tail']:.2g}); "
                             "use more samples or fd6 differencing")
    return int(np.count_nonzero(_cusp_flags(env)))


def _reflect(direction, tangent):
    return 2.0 * tangent - direction


def reflected_family(oval, source, n, m=1024):
    """Rays from ``source`` after ``n`` reflections, parametrized by the initial direction."""
    src = np.asarray(source, dtype=float)
    if not oval.contains(src, strict=True):
        raise ValueError("source must lie strictly inside the mirror")
    if n < 1:
        raise ValueError("need at least one reflection")
    psi = TWO_PI * np.arange(m) / m
    pts = np.empty((m, 2))
    dirs = np.empty((m, 2))
    for i, a in enumerate(psi):
        t = oval.ray_exit(src, a)
        direction = _reflect(a, oval.tangent_angle(t))
        for _ in range(n - 1):
            t_next = oval.second_intersection(t, direction)
            direction = _reflect(direction, oval.tangent_angle(t_next))
            t = t_next
        pts[i] = oval.position(t)
        dirs[i] = (math.cos(direction), math.sin(direction))
    return LineFamily(psi, pts, dirs)


def caustic_by_reflection(oval, source, n, m=1024):
    """n-th caustic by reflection of a point source."""
    env = envelope(reflected_family(oval, source, n, m))
    env.meta.update({"source": [float(v) for v in source], "reflections": n, "samples": m})
    return env


# -- string construction --------------------------------------------------------

def string_lengths(outer, inner, n_samples=256):
    """``|PA| + |PB| + far arc(AB)`` for ``P`` on a uniform parameter grid of ``outer``."""
    out = np.empty(n_samples)
    for i, t in enumerate(TWO_PI * np.arange(n_samples) / n_samples):
        p = outer.position(t)
        try:
            t_fwd, t_other = inner.tangent_points_from_external(p)
        except PointInside as exc:
            raise NotNested(f"outer point at t={t:.6g} is not outside the inner curve") from exc
        a, b = inner.position(t_fwd), inner.position(t_other)
        arc = (inner.arclength(t_other) - inner.arclength(t_fwd)) % inner.total_length
        out[i] = np.linalg.norm(a - p) + np.linalg.norm(b - p) + arc
    return out


def string_defect(outer, inner, n_samples=256):
    """Max deviation of the string length from its mean; zero when ``inner`` is a caustic."""
    ell = string_lengths(outer, inner, n_samples)
    return float(np.max(np.abs(ell - ell.mean())))


# -- caustics of invariant curves -----------------------------------------------------

def _local_slopes(s, a, period, width=7):
    """Slope of a least-squares quadratic through ``width`` cyclic neighbours of each sample."""
    m = len(s)
    half = width // 2
    idx = (np.arange(m)[:, None] + np.arange(-half, half + 1)[None, :]) % m
    ds = s[idx] - s[:, None]
    ds -= period * np.round(ds / period)
    da = a[idx] - a[:, None]
    # solve the 3x3 normal equations for each window
    x0, x1, x2 = np.ones_like(ds), ds, ds * ds
    basis = np.stack([x0, x1, x2], axis=-1)
    gram = np.einsum("mwi,mwj->mij", basis, basis)
    rhs = np.einsum("mwi,mw->mi", basis, da)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return coef[:, 1]


def caustic_from_invariant_curve(oval, orbit, diagnostic=None):
    """Envelope of the chords of an orbit lying on an invariant curve.

    Chords are sorted by footpoint; ``alpha'(s)`` comes from local quadratic
    fits and each envelope point is ``gamma(s) + tau u`` with
    ``tau = sin(alpha) / (kappa + alpha')``.
    """
    from .analysis import invariant_curve_diagnostic
    diag = diagnostic or invariant_curve_diagnostic(orbit)
    if diag["verdict"] != "invariant-curve-like":
        raise NotInvariant(f"orbit is {diag['verdict']} (thickness {diag['graph_thickness']:.3g})")
    s, alpha = orbit.states[:, 0], orbit.states[:, 1]
    order = np.argsort(s, kind="stable")
    s, alpha = s[order], alpha[order]
    L = oval.total_length
    keep = np.concatenate([[True], np.diff(s) > 1e-12 * L])
    s, alpha = s[keep], alpha[keep]
    if len(s) < 3:
        raise InsufficientData("need at least 3 distinct chords")
    slope = _local_slopes(s, alpha, L, width=min(7, len(s) - (len(s) + 1) % 2))
    t = oval.param_of_arclength(s)
    gamma = oval.position(t)
    theta = oval.tangent_angle(t) + alpha
    u = np.column_stack([np.cos(theta), np.sin(theta)])
    den = oval.curvature(t) + slope
    defined = np.abs(den) > 1e-12
    tau = np.sin(alpha) / np.where(defined, den, 1.0)
    pts = gamma + tau[:, None] * u
    pts[~defined] = np.nan
    env = EnvelopeCurve(s, pts, defined, np.full(len(s), np.nan),
                        np.zeros(len(s), dtype=bool), L)
    env.meta.update({"from_orbit": orbit.map_id, "chords": len(s),
                     "graph_thickness": diag["graph_thickness"]})
    return env


# -- symmetry ---------------------------------------------------------------------------

def _local_interpolant(points, params, period, j, stencil=6):
    m = len(points)
    idx = (j + np.arange(-(stencil // 2 - 1), stencil // 2 + 1)) % m
    tt = params[idx] - params[j]
    tt -= period * np.round(tt / period)
    h = max(float(np.max(np.abs(tt))), 1e-300)
    vander = np.vander(tt / h, len(idx))
    coef = np.linalg.solve(vander, points[idx])
    left = tt[stencil // 2 - 2] / h
    right = tt[stencil // 2] / h
    return coef, left, right


def _distance_to_curve(points, params, period, q, j):
    """Distance from ``q`` to a local degree-5 interpolant of the curve near sample ``j``."""
    coef, lo, hi = _local_interpolant(points, params, period, j)
    cx, cy = coef[:, 0], coef[:, 1]
    dx, dy = np.polyder(cx), np.polyder(cy)
    ddx, ddy = np.polyder(dx), np.polyder(dy)
    grid = np.linspace(lo, hi, 33)
    d2 = (np.polyval(cx, grid) - q[0]) ** 2 + (np.polyval(cy, grid) - q[1]) ** 2
    x = float(grid[int(np.argmin(d2))])
    for _ in range(6):
        ex, ey = np.polyval(cx, x) - q[0], np.polyval(cy, x) - q[1]
        vx, vy = np.polyval(dx, x), np.polyval(dy, x)
        g = ex * vx + ey * vy
        dg = vx * vx + vy * vy + ex * np.polyval(ddx, x) + ey * np.polyval(ddy, x)
        if dg <= 0.0:
            break
        x = min(max(x - g / dg, lo), hi)
    best = (np.polyval(cx, x) - q[0]) ** 2 + (np.polyval(cy, x) - q[1]) ** 2
    return math.sqrt(min(float(best), float(d2.min())))


def symmetry_defect(env, axis, max_points=4096):
    """Hausdorff distance between the envelope and its mirror image, over the diameter.

    Distances are measured from mirrored samples to a local degree-5
    interpolant of the envelope; at most ``max_points`` evenly strided
    samples are mirrored.
    """
    if not isinstance(axis, OrientedLine):
        raise TypeError("axis must be an OrientedLine")
    ok = env.defined
    pts, params = env.points[ok], env.t[ok]
    if len(pts) < 6:
        raise InsufficientData("need at least 6 envelope points")
    stride = max(1, math.ceil(len(pts) / max_points))
    mirrored = axis.reflect(pts[::stride])
    nearest = cKDTree(pts).query(mirrored)[1]
    worst = max(_distance_to_curve(pts, params, env.period, q, int(j))
                for q, j in zip(mirrored, nearest))
    return worst / env.diameter
