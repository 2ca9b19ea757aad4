"""Orbit diagnostics and periodic-orbit searches."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import (BilliardError, DegenerateOrbit, FixedPointCountMismatch,
                     InsufficientData, NoConvergence, VertexHit)
from .geometry import TWO_PI, angle_of, cross
from .maps import Pencil, Ray, circle_map_f, projective_map

# -- rotation numbers ---------------------------------------------------------


@dataclass(frozen=True)
class RotationNumber:
    value: float
    error: float
    n: int

    def __float__(self):
        return self.value


def _bump_weights(n):
    # smooth bump on (0, 1); weighted Birkhoff averages converge super-polynomially
    # on quasi-periodic orbits and like plain averages otherwise
    t = (np.arange(n) + 0.5) / n
    w = np.exp(-1.0 / (t * (1.0 - t)))
    return w / w.sum()


def _weighted_mean(increments):
    return float(np.dot(_bump_weights(len(increments)), increments))


def rotation_number(orbit):
    """Mean advance per step of the lifted coordinate, in turns.

    The estimate is a bump-weighted average of the per-step increments;
    ``error`` is its difference from the same estimate on the first half.
    """
    if orbit.lift_index is None or not orbit.period:
        raise InsufficientData("orbit has no periodic coordinate to wind around")
    if orbit.n < 100:
        raise InsufficientData(f"need at least 100 steps, got {orbit.n}")
    inc = np.diff(orbit.lifted()) / orbit.period
    value = _weighted_mean(inc)
    half = _weighted_mean(inc[:len(inc) // 2])
    return RotationNumber(value, abs(value - half), orbit.n)


# -- Jacobians ------------------------------------------------------------------

def numeric_jacobian(f, x, h=1e-6):
    """Central differences with step ``h*max(1, |x_i|)``, Richardson-extrapolated once."""
    x = np.asarray(x, dtype=float)
    fx_dim = len(np.atleast_1d(f(x)))
    jac = np.empty((fx_dim, len(x)))
    for i in range(len(x)):
        hi = h * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = hi
        d1 = (f(x + e) - f(x - e)) / (2.0 * hi)
        d2 = (f(x + 0.5 * e) - f(x - 0.5 * e)) / hi
        jac[:, i] = (4.0 * d2 - d1) / 3.0
    return jac


def _step_and_jacobian(pmap, x):
    if pmap.step_jacobian is not None:
        return pmap.step_jacobian(x)
    y = pmap.step(x)
    if pmap.jacobian is not None:
        return y, pmap.jacobian(x)
    return y, numeric_jacobian(pmap.step, x)


# -- Lyapunov exponents ---------------------------------------------------------

@dataclass
class LyapunovResult:
    value: float
    steps: np.ndarray
    running: np.ndarray
    checkpoints: dict = field(default_factory=dict)

    def at(self, n):
        """Running estimate after ``n`` post-burn-in steps (nearest renormalization)."""
        k = int(np.searchsorted(self.steps, n, side="right")) - 1
        if k < 0:
            raise ValueError(f"no estimate available at step {n}")
        return float(self.running[k])


def lyapunov_exponent(pmap, x0, n, renorm_every=16, burn_in=1000, checkpoints=()):
    """Top Lyapunov exponent by tangent-vector iteration.

    The tangent vector is renormalized every ``renorm_every`` steps and the
    first ``burn_in`` steps are discarded; ``running`` holds the estimate
    after each renormalization.
    """
    x, _ = pmap.reduce(x0)
    # generic start vector: avoid eigenvectors of shears such as (1, 1)
    v = 0.5 ** np.arange(len(x))
    v /= math.sqrt(float(v @ v))
    total = burn_in + n
    log_sum = 0.0
    steps, running = [], []
    try:
        for k in range(1, total + 1):
            y, jac = _step_and_jacobian(pmap, x)
            v = jac @ v
            x = y
            if k % renorm_every == 0 or k == total:
                x, _ = pmap.reduce(x)
                norm = math.sqrt(float(v @ v))
                if not math.isfinite(norm) or norm == 0.0:
                    raise DegenerateOrbit(f"tangent vector degenerated at step {k}")
                v /= norm
                if k > burn_in:
                    log_sum += math.log(norm)
                    steps.append(k - burn_in)
                    running.append(log_sum / (k - burn_in))
    except BilliardError as exc:
        if isinstance(exc, DegenerateOrbit):
            raise
        raise DegenerateOrbit(f"orbit terminated at step {k}: {exc}") from exc
    steps = np.asarray(steps)
    running = np.asarray(running)
    result = LyapunovResult(float(running[-1]), steps, running)
    result.checkpoints = {int(c): result.at(c) for c in checkpoints}
    return result


# -- symplecticity --------------------------------------------------------------

@dataclass(frozen=True)
class SymplecticityDefect:
    max_defect: float
    location: tuple
    determinants: np.ndarray


def symplecticity_defect(pmap, samples, h=1e-6):
    """Max ``|det J - 1|`` of the map in its canonical coordinates over ``samples``."""
    to_c = pmap.to_canonical or (lambda x: np.asarray(x, dtype=float))
    from_c = pmap.from_canonical or (lambda y: np.asarray(y, dtype=float))

    def g(y):
        return to_c(pmap.step(from_c(y)))

    dets = np.array([np.linalg.det(numeric_jacobian(g, to_c(np.asarray(x, float)), h))
                     for x in samples])
    dev = np.abs(dets - 1.0)
    k = int(np.argmax(dev))
    return SymplecticityDefect(float(dev[k]), tuple(float(v) for v in samples[k]), dets)


def sample_cylinder(total_length, n, rng, alpha_margin=0.05):
    """Uniform phase points ``(s, alpha)`` with ``alpha`` kept away from grazing."""
    s = rng.uniform(0.0, total_length, n)
    alpha = rng.uniform(alpha_margin, math.pi - alpha_margin, n)
    return np.column_stack([s, alpha])


# -- periodic orbits ------------------------------------------------------------

@dataclass
class PeriodicOrbit:
    states: np.ndarray
    residual: float
    winding: int


def _iterate(pmap, x, n):
    for _ in range(n):
        x = pmap.step(x)
    return x


def _orbit_states(pmap, x, n):
    out = [pmap.reduce(x)[0]]
    for _ in range(n - 1):
        x = pmap.step(x)
        out.append(pmap.reduce(x)[0])
    return np.array(out)


def _same_orbit(pmap, a, b, tol):
    def close(p, q):
        return np.max(np.abs(pmap.wrap_difference(p - q))) < tol

    candidates = [b]
    if pmap.reversal is not None:
        candidates.append(np.array([pmap.reversal(s) for s in b[::-1]]))
    for c in candidates:
        for shift in range(len(c)):
            if close(a, np.roll(c, shift, axis=0)):
                return True
    return False


def periodic_orbit_search(pmap, n, seeds, tol=1e-9, max_iter=60, dedup_tol=1e-7):
    """Fixed points of the ``n``-th iterate found by damped least-squares Newton.

    Returns ``(orbits, failures)``: distinct orbits with residual below
    ``tol`` and a list of ``(seed, reason)`` for seeds that did not converge.
    """
    if n < 1:
        raise ValueError("period must be positive")

    def disp(x):
        return pmap.wrap_difference(_iterate(pmap, x, n) - x)

    orbits, failures = [], []
    for seed in seeds:
        x = np.array(seed, dtype=float)
        try:
            r = disp(x)
            for _ in range(max_iter):
                norm = float(np.max(np.abs(r)))
                if norm < 0.1 * tol:
                    break
                jac = numeric_jacobian(disp, x)
                dx = np.linalg.lstsq(jac, -r, rcond=1e-10)[0]
                lam = 1.0
                while lam > 1e-4:
                    trial = x + lam * dx
                    try:
                        rt = disp(trial)
                    except BilliardError:
                        rt = None
                    if rt is not None and np.max(np.abs(rt)) < norm:
                        break
                    lam *= 0.5
                else:
                    break
                x, r = trial, rt
            residual = float(np.max(np.abs(disp(x))))
        except BilliardError as exc:
            failures.append((list(map(float, seed)), f"{type(exc).__name__}: {exc}"))
            continue
        if residual >= tol:
            failures.append((list(map(float, seed)), f"residual {residual:.3g}"))
            continue
        states = _orbit_states(pmap, x, n)
        if any(_same_orbit(pmap, states, o.states, dedup_tol) for o in orbits):
            continue
        end = _iterate(pmap, pmap.reduce(x)[0], n)
        winding = 0
        if pmap.lift_index is not None:
            per = pmap.periods[pmap.lift_index]
            winding = int(round((end[pmap.lift_index] - states[0][pmap.lift_index]) / per))
        orbits.append(PeriodicOrbit(states, residual, winding))
    return orbits, failures


@dataclass(frozen=True)
class Recurrence:
    period: Optional[int]
    error: float
    termination: str = "completed"


def first_return(pmap, x0, max_steps, tol=1e-9):
    """Iterate until the reduced state comes back to ``x0`` within ``tol``.

    ``period`` is ``None`` when no return happens within ``max_steps``;
    ``error`` is then the closest approach seen.
    """
    start, _ = pmap.reduce(x0)
    x = start
    best = math.inf
    for k in range(1, max_steps + 1):
        try:
            x, _ = pmap.reduce(pmap.step(x))
        except BilliardError as exc:
            return Recurrence(None, best, type(exc).__name__)
        err = float(np.max(np.abs(pmap.wrap_difference(x - start))))
        if err < tol:
            return Recurrence(k, err)
        best = min(best, err)
    return Recurrence(None, best)


def random_polygon_chords(table, n, rng):
    """Random chords ``(x, y)`` in perimeter coordinates with endpoints on non-parallel sides."""
    out = []
    while len(out) < n:
        x, y = rng.uniform(0.0, table.n, 2)
        ex, ey = int(x), int(y)
        if ex == ey:
            continue
        a, b = table.edge_vector(ex), table.edge_vector(ey)
        if abs(float(cross(a, b))) < 1e-9 * np.linalg.norm(a) * np.linalg.norm(b):
            continue
        out.append((float(x), float(y)))
    return np.array(out)


def chord_perimeter(oval, params):
    pts = oval.position(np.asarray(params, dtype=float))
    return float(np.sum(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))


# -- variational spectra ----------------------------------------------------------

@dataclass
class SpectrumEntry:
    period: int
    rotation_class: int
    value: float
    params: list
    residual: float

    def to_dict(self):
        return asdict(self)


def spectrum_to_csv(entries):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["period", "class", "value", "residual"])
    for e in entries:
        writer.writerow([e.period, e.rotation_class, repr(e.value), repr(e.residual)])
    return buf.getvalue()


def spectrum_to_json(entries):
    return json.dumps([e.to_dict() for e in entries], indent=2, sort_keys=True)


def _check_class(n, k, n_min):
    if n < n_min:
        raise ValueError(f"period must be at least {n_min}")
    if not 1 <= k < n:
        raise ValueError("rotation class must satisfy 1 <= k < n")


def _newton_critical(grad, t, tol, max_iter=50):
    """Solve ``grad(t) = 0`` with a finite-difference Hessian and least squares."""
    g = grad(t)
    for _ in range(max_iter):
        if np.max(np.abs(g)) < 1e-3 * tol:
            break
        hess = numeric_jacobian(grad, t, h=1e-5)
        hess = 0.5 * (hess + hess.T)
        dt = np.linalg.lstsq(hess, -g, rcond=1e-10)[0]
        lam = 1.0
        while lam > 1e-6:
            trial = t + lam * dt
            gt = grad(trial)
            if np.max(np.abs(gt)) < np.max(np.abs(g)):
                break
            lam *= 0.5
        else:
            break
        t, g = trial, gt
    return t


def _seeds(n, k, n_seeds):
    base = TWO_PI * k * np.arange(n) / n
    return [base + TWO_PI * j / (n * n_seeds) for j in range(n_seeds)]


def _dedup_entries(entries, tol=1e-7):
    out = []
    for e in sorted(entries, key=lambda e: e.value):
        if not any(abs(e.value - o.value) < tol for o in out):
            out.append(e)
    return out


def reflection_residuals(oval, params):
    """Per-vertex ``|<T, u_in> - <T, u_out>|``: zero at billiard orbits."""
    t = np.asarray(params, dtype=float)
    pts = oval.position(t)
    tan = oval.unit_tangent(t)
    u_out = np.roll(pts, -1, axis=0) - pts
    u_out /= np.linalg.norm(u_out, axis=1, keepdims=True)
    u_in = np.roll(u_out, 1, axis=0)
    return np.abs(np.sum(tan * u_in, axis=1) - np.sum(tan * u_out, axis=1))


def variational_length_orbits(oval, n, k, n_seeds=4, tol=1e-9):
    """Critical inscribed ``n``-gons of rotation class ``k`` for the perimeter."""
    _check_class(n, k, 2)

    def grad(t):
        pts = oval.position(t)
        d = oval.derivative(t)
        u_out = np.roll(pts, -1, axis=0) - pts
        u_out /= np.linalg.norm(u_out, axis=1, keepdims=True)
        u_in = np.roll(u_out, 1, axis=0)
        return np.sum(d * (u_in - u_out), axis=1)

    entries = []
    for seed in _seeds(n, k, n_seeds):
        t = _newton_critical(grad, seed, tol)
        res = float(np.max(reflection_residuals(oval, t)))
        if res < tol:
            entries.append(SpectrumEntry(n, k, chord_perimeter(oval, t), t.tolist(), res))
    if not entries:
        raise NoConvergence(f"no critical {n}-gon of class {k} found")
    return _dedup_entries(entries)


def circumscribed_polygon(oval, params):
    """Vertices ``V_i`` where the tangent lines at ``t_i`` and ``t_{i+1}`` meet."""
    t = np.asarray(params, dtype=float)
    p, d = oval.position(t), oval.derivative(t)
    p2, d2 = np.roll(p, -1, axis=0), np.roll(d, -1, axis=0)
    den = cross(d, d2)
    lam = cross(p2 - p, d2) / den
    return p + lam[:, None] * d


def polygon_area(vertices):
    v = np.asarray(vertices)
    return 0.5 * float(np.sum(cross(v, np.roll(v, -1, axis=0))))


def midpoint_residuals(oval, params):
    """Distance of each tangency point from the midpoint of its side, over the diameter."""
    t = np.asarray(params, dtype=float)
    v = circumscribed_polygon(oval, t)
    mid = 0.5 * (v + np.roll(v, 1, axis=0))
    return np.linalg.norm(mid - oval.position(t), axis=1) / oval.diameter


def variational_area_orbits(oval, n, k, n_seeds=4, tol=1e-9):
    """Critical circumscribed ``n``-gons of class ``k`` for the (signed) area."""
    _check_class(n, k, 3)

    def grad(t):
        # turning the tangent line at t_i about its contact point changes the
        # area at rate (|P V_i|^2 - |P V_{i-1}|^2)/2 per unit normal angle
        v = circumscribed_polygon(oval, t)
        p = oval.position(t)
        a = np.sum((v - p) ** 2, axis=1)
        b = np.sum((np.roll(v, 1, axis=0) - p) ** 2, axis=1)
        return 0.5 * (a - b) * oval.speed(t) * oval.curvature(t)

    entries = []
    for seed in _seeds(n, k, n_seeds):
        t = _newton_critical(grad, seed, tol)
        res = float(np.max(midpoint_residuals(oval, t)))
        if res < tol:
            area = polygon_area(circumscribed_polygon(oval, t))
            entries.append(SpectrumEntry(n, k, area, t.tolist(), res))
    if not entries:
        raise NoConvergence(f"no critical circumscribed {n}-gon of class {k} found")
    return _dedup_entries(entries)


# -- projective reflectivity -----------------------------------------------------

@dataclass(frozen=True)
class ReflectivityResult:
    fraction: float
    max_closure_error: float
    n_admissible: int
    n_closed: int
    n_rejected: int


def _random_chord(table, rng):
    b = table.boundary
    if table.is_polygon:
        param = rng.uniform(0.0, b.n)
        tangent = angle_of(b.edge_vector(int(param)))
        origin = b.point(param)
    else:
        param = rng.uniform(0.0, TWO_PI)
        tangent = b.tangent_angle(param)
        origin = b.position(param)
    direction = tangent + rng.uniform(0.05, math.pi - 0.05)
    return Ray(origin, direction, param)


def _cyclic_itinerary(edges, n):
    steps = {(b - a) % n for a, b in zip(edges, edges[1:])}
    return steps in ({1}, {n - 1})


def reflectivity_test(table, k, n_samples, rng, tol=1e-8, max_draws=None):
    """Fraction of random admissible chords that close after ``k`` reflections.

    On a polygon with ``k`` sides a chord is admissible when its ``k``-step
    itinerary visits consecutive sides in one rotational direction; on other
    tables every chord that avoids vertices is admissible. Closure compares
    the ray origin (relative to the diameter) and direction after ``k`` steps.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    b = table.boundary
    diam = b.diameter
    cyclic_rule = table.is_polygon and b.n == k
    max_draws = max_draws or 50 * n_samples
    admissible = closed = rejected = draws = 0
    worst = 0.0
    while admissible < n_samples and draws < max_draws:
        draws += 1
        ray = _random_chord(table, rng)
        start, edges = ray, []
        try:
            for _ in range(k):
                ray = projective_map(table, ray)
                edges.append(ray.param)
        except (VertexHit, BilliardError):
            rejected += 1
            continue
        if cyclic_rule:
            itinerary = [int(math.floor(start.param)) % b.n] + [int(math.floor(p)) % b.n
                                                                 for p in edges]
            if not _cyclic_itinerary(itinerary, b.n):
                rejected += 1
                continue
        admissible += 1
        pos_err = float(np.linalg.norm(ray.origin - start.origin)) / diam
        dir_err = abs(math.remainder(ray.direction - start.direction, TWO_PI))
        err = max(pos_err, dir_err)
        if err < tol:
            closed += 1
            worst = max(worst, err)
    fraction = closed / admissible if admissible else 0.0
    return ReflectivityResult(fraction, worst, admissible, closed, rejected)


# -- invariant-curve diagnostic ------------------------------------------------------

def invariant_curve_diagnostic(orbit, bins=256, threshold=1e-3):
    """Classify a cylinder orbit as lying on a graph ``alpha = f(s)`` or not.

    Thickness is the largest within-bin spread of ``alpha`` after removing
    a linear trend in ``s``; the verdict compares it with ``threshold * pi``.
    """
    if orbit.n < 10_000:
        raise InsufficientData(f"need at least 10^4 steps, got {orbit.n}")
    s, alpha = orbit.states[:, 0], orbit.states[:, 1]
    idx = np.minimum((s / orbit.period * bins).astype(int), bins - 1)
    order = np.argsort(idx, kind="stable")
    bounds = np.searchsorted(idx[order], np.arange(bins + 1))
    thickness = 0.0
    for j in range(bins):
        sel = order[bounds[j]:bounds[j + 1]]
        if len(sel) < 2:
            continue
        sj, aj = s[sel], alpha[sel]
        if len(sel) >= 3 and np.ptp(sj) > 0:
            coef = np.polyfit(sj - sj.mean(), aj, 1)
            aj = aj - np.polyval(coef, sj - sj.mean())
        thickness = max(thickness, float(np.ptp(aj)))
    limit = threshold * math.pi
    verdict = "invariant-curve-like" if thickness < limit else "scattered"
    return {
        "graph_thickness": thickness,
        "rotation_estimate": rotation_number(orbit).value,
        "verdict": verdict,
        "bins": bins,
        "threshold": limit,
    }


# -- Mobius check for two-pencil maps --------------------------------------------------

def mobius_fixed_point_check(oval, P, Q, n_grid=2048, h=1e-6):
    """Fixed points of the two-pencil circle map and their multipliers."""
    mode = Pencil(tuple(P), tuple(Q))

    def g(t):
        return math.remainder(circle_map_f(oval, mode, t) - t, TWO_PI)

    grid = TWO_PI * np.arange(n_grid + 1) / n_grid
    vals = np.array([g(t) for t in grid])
    roots = []
    for j in range(n_grid):
        a, b = vals[j], vals[j + 1]
        if a == 0.0:
            roots.append(grid[j])
        elif a * b < 0.0 and abs(a) < 1.0 and abs(b) < 1.0:
            lo, hi = grid[j], grid[j + 1]
            glo = a
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                gm = g(mid)
                if gm == 0.0 or hi - lo < 4e-16 * TWO_PI:
                    break
                if (gm < 0.0) == (glo < 0.0):
                    lo, glo = mid, gm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    roots = [r for j, r in enumerate(roots)
             if j == 0 or abs(math.remainder(r - roots[j - 1], TWO_PI)) > 1e-9]
    if len(roots) != 2:
        raise FixedPointCountMismatch(f"found {len(roots)} fixed points, expected 2")

    def fl(t):
        y = circle_map_f(oval, mode, t)
        return t + math.remainder(y - t, TWO_PI)

    mult = [float(numeric_jacobian(lambda x: np.array([fl(float(x[0]))]),
                                   np.array([r]), h)[0, 0]) for r in roots]
    return {
        "fixed_points": [float(r) for r in roots],
        "multipliers": mult,
        "product_defect": abs(mult[0] * mult[1] - 1.0),
    }


# -- integrability invariants for ellipses -----------------------------------------------

def confocal_parameter(ellipse, p, q):
    """``lam`` such that the line through ``p, q`` touches ``x^2/(a^2-lam) + y^2/(b^2-lam) = 1``."""
    p = np.asarray(p, float) - ellipse.center
    q = np.asarray(q, float) - ellipse.center
    d = (q - p) / np.linalg.norm(q - p)
    nrm = np.array([-d[1], d[0]])
    c = float(p @ nrm)
    return ellipse.a ** 2 * nrm[0] ** 2 + ellipse.b ** 2 * nrm[1] ** 2 - c * c


def confocal_tangency_defect(ellipse, points, lam):
    """Max distance between each chord and the parallel tangent of the confocal conic ``lam``."""
    pts = np.asarray(points, float) - ellipse.center
    worst = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        d = (q - p) / np.linalg.norm(q - p)
        nrm = np.array([-d[1], d[0]])
        c = abs(float(p @ nrm))
        support = (ellipse.a ** 2 - lam) * nrm[0] ** 2 + (ellipse.b ** 2 - lam) * nrm[1] ** 2
        worst = max(worst, abs(c - math.sqrt(max(support, 0.0))))
    return worst


def homothety_invariant(ellipse, point):
    x, y = np.asarray(point, float) - ellipse.center
    return (x / ellipse.a) ** 2 + (y / ellipse.b) ** 2


def birkhoff_impact_points(oval, orbit):
    """Impact points of a Birkhoff-type orbit with states ``(s, alpha)``."""
    t = oval.param_of_arclength(orbit.states[:, 0])
    return oval.position(t)

