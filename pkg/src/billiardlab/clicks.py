"""Clicks of a curve translated across the square lattice of spacing epsilon.

A click happens at every ``lam`` for which some lattice point ``p``
satisfies ``p - lam * v`` on the curve.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParallelDegenerate
from .geometry import TWO_PI, AffineOval, Oval, PolygonTable, Polyline, cross
from .roots import periodic_roots

MERGE_TOL = 1e-12


@dataclass
class ClickTrain:
    epsilon: float
    direction: tuple
    lambdas: np.ndarray
    multiplicity: np.ndarray
    window: tuple
    intervals: list = field(default_factory=list)
    curve: dict = field(default_factory=dict)

    def header(self):
        return {"epsilon": self.epsilon, "direction": list(self.direction),
                "window": list(self.window), "curve": self.curve,
                "intervals": [list(iv) for iv in self.intervals],
                "clicks": int(len(self.lambdas)), "total_multiplicity": int(self.multiplicity.sum())}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["lambda", "multiplicity"])
        for lam, m in zip(self.lambdas, self.multiplicity):
            w.writerow([repr(float(lam)), int(m)])
        return buf.getvalue()

    def header_json(self):
        return json.dumps(self.header(), indent=2, sort_keys=True)

    def expanded(self):
        """Click values repeated by multiplicity."""
        return np.repeat(self.lambdas, self.multiplicity)


def _curve_box(curve):
    if isinstance(curve, Oval):
        pts = curve.position(TWO_PI * np.arange(2048) / 2048)
        pad = 0.01 * curve.total_length
    else:
        pts = np.asarray(curve.points if isinstance(curve, Polyline) else curve.vertices)
        pad = 0.0
    return pts.min(axis=0) - pad, pts.max(axis=0) + pad


def _lattice_points(curve, epsilon, v, window):
    lo, hi = _curve_box(curve)
    shifts = np.array([window[0] * v, window[1] * v])
    lo = lo + shifts.min(axis=0)
    hi = hi + shifts.max(axis=0)
    i = np.arange(math.floor(lo[0] / epsilon) - 1, math.ceil(hi[0] / epsilon) + 2)
    j = np.arange(math.floor(lo[1] / epsilon) - 1, math.ceil(hi[1] / epsilon) + 2)
    ii, jj = np.meshgrid(i, j, indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel()]).astype(float) * epsilon


def _branch_solve(oval, v, target, t_lo, t_hi, iters=64):
    """Vectorized bisection for ``cross(v, gamma(t)) = target`` on a monotone branch."""
    lo = np.full(len(target), t_lo)
    hi = np.full(len(target), t_hi)
    increasing = cross(v, oval.position(np.array([t_hi])))[0] > cross(
        v, oval.position(np.array([t_lo])))[0]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        val = cross(v, oval.position(mid))
        below = (val < target) == increasing
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    t = 0.5 * (lo + hi)
    # two Newton polish steps, kept inside the branch
    for _ in range(2):
        f = cross(v, oval.position(t)) - target
        df = cross(v, oval.derivative(t))
        step = np.where(np.abs(df) > 1e-300, f / np.where(df == 0, 1.0, df), 0.0)
        t = np.clip(t - step, min(t_lo, t_hi), max(t_lo, t_hi))
    return t


def _oval_hits(oval, lattice, v):
    # extremes of cross(v, gamma) sit where the tangent is parallel to v
    ends = periodic_roots(lambda t: cross(v, oval.derivative(t)),
                          lambda t: cross(v, oval.second_derivative(t)), expected=2)
    if len(ends) != 2:
        raise ValueError("curve is not strictly convex in the click direction")
    t_a, t_b = ends
    c = cross(v, lattice)
    ca, cb = cross(v, oval.position(np.array([t_a, t_b])))
    cmin, cmax = min(ca, cb), max(ca, cb)
    tol = 1e-13 * max(1.0, abs(cmin), abs(cmax))
    inside = (c >= cmin - tol) & (c <= cmax + tol)
    pts = lattice[inside]
    # lattice points sharing a value of cross(v, p) share the curve parameters
    levels, inverse = np.unique(c[inside], return_inverse=True)
    rows = []
    for lo, hi in ((t_a, t_b), (t_b, t_a + TWO_PI)):
        t = _branch_solve(oval, v, np.clip(levels, cmin, cmax), lo, hi)
        # the root is ill-conditioned at the tangency itself; snap to it
        t = np.where(np.abs(levels - ca) <= tol, t_a, t)
        t = np.where(np.abs(levels - cb) <= tol, t_b, t)
        foot = oval.position(t) @ v
        lam = pts @ v - foot[inverse]
        rows.append(np.column_stack([np.arange(len(pts)), lam]))
    return pts, np.vstack(rows)


def _segment_hits(segments, lattice, v, epsilon, window, on_parallel):
    hits, intervals = [], []
    for k, (a, b) in enumerate(segments):
        e = b - a
        det = float(cross(v, e))
        rel = lattice - a
        if abs(det) <= 1e-14 * np.linalg.norm(e):
            # translating along the segment: lattice points on its carrier line
            # produce a whole interval of clicks
            on_line = np.abs(cross(v, rel)) <= 1e-12 * max(epsilon, np.linalg.norm(e))
            for p in lattice[on_line]:
                ends = sorted((float((p - b) @ v), float((p - a) @ v)))
                lo, hi = max(ends[0], window[0]), min(ends[1], window[1])
                if lo < hi or (lo == hi and window[0] <= lo < window[1]):
                    intervals.append((lo, hi, [float(p[0]), float(p[1])], k))
            continue
        # p - lam v = a + s e  ->  lam = -cross(e, rel)/det, s = cross(v, rel)/det
        s = cross(v, rel) / det
        lam = -cross(e, rel) / det
        ok = (s >= -1e-14) & (s <= 1.0 + 1e-14)
        idx = np.nonzero(ok)[0]
        hits.append(np.column_stack([idx, lam[ok]]))
    if intervals and on_parallel == "raise":
        raise ParallelDegenerate(f"{len(intervals)} interval events: a straight piece is parallel "
                                 "to the translation and carries lattice points")
    rows = np.vstack(hits) if hits else np.empty((0, 2))
    return rows, intervals


def _merge(rows, window):
    """One click per (lattice point, lambda); equal lambdas merged into multiplicities."""
    if len(rows) == 0:
        return np.empty(0), np.empty(0, dtype=int)
    # values within MERGE_TOL of an end count as sitting exactly on it
    rows = rows[(rows[:, 1] >= window[0] - MERGE_TOL) & (rows[:, 1] < window[1] - MERGE_TOL)]
    rows[:, 1] = np.maximum(rows[:, 1], window[0])
    rows = rows[np.lexsort((rows[:, 1], rows[:, 0]))]
    keep = np.ones(len(rows), dtype=bool)
    same_point = rows[1:, 0] == rows[:-1, 0]
    keep[1:] = ~(same_point & (np.abs(np.diff(rows[:, 1])) <= MERGE_TOL))
    lam = np.sort(rows[keep, 1])
    if len(lam) == 0:
        return lam, np.empty(0, dtype=int)
    starts = np.concatenate([[True], np.diff(lam) > MERGE_TOL])
    group = np.cumsum(starts) - 1
    values = lam[starts] + 0.0
    counts = np.bincount(group)
    return values, counts


def click_events(curve, epsilon, v, window, on_parallel="record"):
    """All clicks with ``lam`` in ``[window[0], window[1])``.

    ``curve`` is an oval, a `Polyline` (a two-point open polyline is a
    segment) or a `PolygonTable`. Straight pieces parallel to ``v`` through
    lattice points give interval events; ``on_parallel="raise"`` turns them
    into `ParallelDegenerate`.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    window = (float(window[0]), float(window[1]))
    if not (math.isfinite(window[0]) and math.isfinite(window[1])) or window[1] <= window[0]:
        raise ValueError("window must be a finite interval with positive length")
    lattice = _lattice_points(curve, epsilon, v, window)
    intervals = []
    if isinstance(curve, Oval):
        _, rows = _oval_hits(curve, lattice, v)
        meta = _meta(curve)
    else:
        if isinstance(curve, PolygonTable):
            segments = [curve.edge(i) for i in range(curve.n)]
        else:
            segments = list(curve.segments())
        rows, intervals = _segment_hits(segments, lattice, v, epsilon, window, on_parallel)
        meta = curve.to_config()
    lambdas, mult = _merge(rows, window)
    return ClickTrain(float(epsilon), (float(v[0]), float(v[1])), lambdas, mult, window,
                      intervals, meta)


def _meta(curve):
    try:
        return curve.to_config()
    except NotImplementedError:
        return {"kind": curve.kind}


def rotated(curve, angle, center=(0.0, 0.0)):
    """The curve rotated by ``angle`` about ``center``."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    center = np.asarray(center, dtype=float)
    if isinstance(curve, Oval):
        return AffineOval(curve, rot, center - rot @ center)
    pts = (np.asarray(curve.points if isinstance(curve, Polyline) else curve.vertices)
           - center) @ rot.T + center
    if isinstance(curve, PolygonTable):
        return PolygonTable(pts)
    return Polyline(pts, closed=curve.closed)


def rotation_trains(curve, angles, epsilon, v, window):
    """One click train per rotation angle of the curve."""
    return [click_events(rotated(curve, a), epsilon, v, window) for a in angles]


def click_histogram(train, bins=64):
    """Multiplicity-weighted counts of ``lam mod epsilon`` over ``bins`` equal bins."""
    if bins < 16:
        raise ValueError("use at least 16 bins")
    phase = np.mod(train.lambdas, train.epsilon)
    counts, edges = np.histogram(phase, bins=bins, range=(0.0, train.epsilon),
                                 weights=train.multiplicity)
    return edges, counts.astype(np.int64)


def click_spectrum(train, max_harmonic=16):
    """``sum_j m_j exp(2 pi i k lam_j / epsilon)`` for ``k = 1..max_harmonic``."""
    k = np.arange(1, max_harmonic + 1)
    phase = np.exp(2j * np.pi * np.outer(k, train.lambdas) / train.epsilon)
    return phase @ train.multiplicity
