"""Deterministic SVG 1.1 output for figure records.

A figure record is plain JSON::

    {"kind": "figure", "title": str, "layers": [layer, ...]}

and each layer has ``type`` (``path``, ``segments`` or ``points``),
``points`` (a list of ``[x, y]``), an optional ``closed`` flag and a
``style`` name from `STYLES`.
"""

import json
import math
from xml.sax.saxutils import escape

import numpy as np

from .geometry import TWO_PI, curve_from_config
from .orbit import OrbitRecord

STYLES = {
    "table": 'fill="none" stroke="#000000" stroke-width="{w2}"',
    "inner": 'fill="none" stroke="#666666" stroke-width="{w1}" stroke-dasharray="{dash}"',
    "orbit": 'fill="none" stroke="#1f5fbf" stroke-width="{w1}" stroke-opacity="0.8"',
    "caustic": 'fill="none" stroke="#c0392b" stroke-width="{w2}"',
    "tangent": 'fill="none" stroke="#2e8b57" stroke-width="{w1}"',
    "cusp": 'fill="#c0392b" stroke="none"',
    "point": 'fill="#000000" stroke="none"',
}

SIZE = 640


class UnsupportedArtifact(ValueError):
    pass


def _fmt(v):
    s = f"{v:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def figure_to_svg(fig):
    if fig.get("kind") != "figure":
        raise UnsupportedArtifact(f"not a figure record (kind={fig.get('kind')!r})")
    layers = fig.get("layers", [])
    pts = [np.asarray(layer["points"], dtype=float).reshape(-1, 2) for layer in layers]
    allp = np.vstack([p for p in pts if len(p)]) if any(len(p) for p in pts) else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    scale = 0.9 * SIZE / span
    off = 0.5 * SIZE - scale * 0.5 * (lo + hi) * np.array([1.0, -1.0])
    width = {"w1": _fmt(0.75), "w2": _fmt(1.5), "dash": "4 3"}

    def xy(p):
        return _fmt(scale * p[0] + off[0]), _fmt(-scale * p[1] + off[1])

    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
           '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
           f"<title>{escape(str(fig.get('title', '')))}</title>",
           f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>']
    for layer, p in zip(layers, pts):
        style = STYLES.get(layer.get("style", "orbit"))
        if style is None:
            raise UnsupportedArtifact(f"unknown layer style {layer.get('style')!r}")
        style = style.format(**width)
        kind = layer.get("type")
        if kind == "path":
            if len(p) == 0:
                continue
            coords = " ".join(",".join(xy(q)) for q in p)
            tag = "polygon" if layer.get("closed") else "polyline"
            out.append(f'<{tag} points="{coords}" {style}/>')
        elif kind == "segments":
            segs = []
            for a, b in zip(p[0::2], p[1::2]):
                (x1, y1), (x2, y2) = xy(a), xy(b)
                segs.append(f"M{x1},{y1}L{x2},{y2}")
            if segs:
                out.append(f'<path d="{"".join(segs)}" {style}/>')
        elif kind == "points":
            r = _fmt(layer.get("radius", 3.0))
            for q in p:
                x, y = xy(q)
                out.append(f'<circle cx="{x}" cy="{y}" r="{r}" {style}/>')
        else:
            raise UnsupportedArtifact(f"unknown layer type {kind!r}")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curve_layer(curve_cfg, n=512, style="table"):
    curve = curve_from_config(curve_cfg)
    if hasattr(curve, "vertices"):
        pts = curve.vertices
    elif hasattr(curve, "points"):
        return {"type": "path", "points": curve.points.tolist(), "closed": curve.closed,
                "style": style}
    else:
        pts = curve.position(TWO_PI * np.arange(n) / n)
    return {"type": "path", "points": np.asarray(pts).tolist(), "closed": True, "style": style}


def parabola_layer(p, height, n=241):
    half = 2.0 * math.sqrt(p * (height + p))
    x = np.linspace(-half, half, n)
    return {"type": "path", "points": np.column_stack([x, x * x / (4 * p) - p]).tolist(),
            "closed": False, "style": "table"}


def orbit_figure(record, max_steps=400):
    """Figure for an orbit record whose parameters describe its table."""
    states = record.states[:max_steps + 1]
    name = record.map_id
    params = record.params
    title = f"{name} orbit"
    if name in ("birkhoff", "puck") and "kind" in params.get("curve", {}):
        curve = curve_from_config(params["curve"])
        pos = curve.position(curve.param_of_arclength(states[:, 0]))
        layers = [curve_layer(params["curve"]), {"type": "path", "points": pos.tolist(),
                                                 "style": "orbit"}]
    elif name == "symplectic" and "kind" in params.get("curve", {}):
        curve = curve_from_config(params["curve"])
        pos = curve.position(np.concatenate([states[:1, 0], states[:, 1]]))
        layers = [curve_layer(params["curve"]), {"type": "path", "points": pos.tolist(),
                                                 "style": "orbit"}]
    elif name == "symplectic_polygon":
        table = curve_from_config(params["table"])
        pos = [table.point(v) for v in np.concatenate([states[:1, 0], states[:, 1]])]
        layers = [curve_layer(params["table"]),
                  {"type": "path", "points": np.asarray(pos).tolist(), "style": "orbit"}]
    elif name == "outer" and "kind" in params.get("curve", {}):
        layers = [curve_layer(params["curve"]),
                  {"type": "segments",
                   "points": np.repeat(states, 2, axis=0)[1:-1].tolist(), "style": "tangent"},
                  {"type": "points", "points": states.tolist(), "style": "point",
                   "radius": 1.5}]
    elif name == "trap":
        h = params["height"]
        layers = [parabola_layer(params["p_inner"], h), parabola_layer(params["p_outer"], h),
                  {"type": "path", "points": states.tolist(), "style": "orbit"}]
        title = "parabola trap"
    else:
        raise UnsupportedArtifact(f"cannot draw orbits of map {name!r}")
    return {"kind": "figure", "title": title, "layers": layers}


def render_file(path, out=None):
    """Render a ``.figure.json`` or an orbit ``.jsonl`` file; returns the SVG path."""
    path = str(path)
    if path.endswith(".figure.json"):
        with open(path, encoding="utf-8") as fh:
            fig = json.load(fh)
        target = out or path[:-len(".figure.json")] + ".svg"
    elif path.endswith(".jsonl"):
        fig = orbit_figure(OrbitRecord.read_jsonl(path))
        target = out or path[:-len(".jsonl")] + ".svg"
    else:
        raise UnsupportedArtifact(f"{path}: expected a .figure.json or orbit .jsonl file")
    svg = figure_to_svg(fig)
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return target
