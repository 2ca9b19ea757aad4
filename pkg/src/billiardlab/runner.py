"""Execute validated scenarios and write their artifacts, results and manifest."""

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import analysis, caustics, clicks, config, maps
from .errors import BilliardError
from .geometry import Ellipse, Oval, PolygonTable, curve_from_config, random_support_oval, unit
from .orbit import PhaseMap, run_orbit
from .render import curve_layer, figure_to_svg, orbit_figure, parabola_layer

OUTPUT_ENV = "BILLIARDLAB_OUTPUT_DIR"
DEFAULT_OUTPUT = "billiardlab-out"

log = logging.getLogger(__name__)


class NumericalFailure(Exception):
    """A computation inside a scenario raised; the message names the operation."""


@dataclass
class Context:
    seed: int
    index: int
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def rng(self, sub=0):
        # one seed sequence per (experiment, sub-task): order of execution cannot matter
        return np.random.default_rng(np.random.SeedSequence(self.seed,
                                                            spawn_key=(self.index, sub)))

    def add(self, name, text):
        self.artifacts[name] = text.encode("utf-8") if isinstance(text, str) else text

    def add_json(self, name, obj):
        self.add(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def add_figure(self, stem, fig):
        self.add_json(stem + ".figure.json", fig)
        self.add(stem + ".svg", figure_to_svg(fig))


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _jsonl(record):
    return "".join(line + "\n" for line in record.iter_json_lines())


# -- building tables and maps -----------------------------------------------------

def build_curve(spec, ctx, sub=0):
    cfg = spec.model_dump()
    if spec.kind == "random_oval":
        return random_support_oval(ctx.rng(sub), spec.harmonics, spec.roughness)
    return curve_from_config(cfg)


def build_map(spec, curve):
    kind = spec.kind
    if kind == "birkhoff":
        return maps.birkhoff_phase_map(_need_oval(curve, kind))
    if kind == "puck":
        return maps.puck_phase_map(_need_oval(curve, kind), spec.d)
    if kind == "outer":
        return maps.outer_phase_map(_need_oval(curve, kind))
    if kind == "symplectic":
        if isinstance(curve, PolygonTable):
            return maps.symplectic_polygon_phase_map(curve)
        return maps.symplectic_phase_map(_need_oval(curve, kind))
    if kind == "parallel":
        return maps.circle_map_phase_map(_need_oval(curve, kind),
                                         maps.Parallel(spec.psi1, spec.psi2))
    if kind == "pencil":
        return maps.circle_map_phase_map(_need_oval(curve, kind),
                                         maps.Pencil(tuple(spec.P), tuple(spec.Q)))
    raise ValueError(f"unknown map kind {kind!r}")


def _need_oval(curve, kind):
    if not isinstance(curve, Oval):
        raise ValueError(f"map '{kind}' needs a smooth oval table")
    return curve


def _random_states(pmap, curve, n, rng):
    if pmap.name in ("birkhoff", "puck"):
        return analysis.sample_cylinder(curve.total_length, n, rng)
    if pmap.name == "symplectic_polygon":
        return analysis.random_polygon_chords(curve, n, rng)
    if pmap.name == "symplectic":
        x = rng.uniform(0.0, 2 * math.pi, n)
        return np.column_stack([x, x + rng.uniform(0.2, 2 * math.pi - 0.2, n)])
    if pmap.name == "outer":
        c = curve.position(2 * math.pi * np.arange(64) / 64).mean(axis=0)
        r = curve.diameter * rng.uniform(0.75, 1.5, n)
        phi = rng.uniform(0.0, 2 * math.pi, n)
        return c + r[:, None] * np.column_stack([np.cos(phi), np.sin(phi)])
    if pmap.name == "circle_map":
        return rng.uniform(0.0, 2 * math.pi, (n, 1))
    raise ValueError(f"no random sampler for map {pmap.name!r}")


# -- experiment kinds ------------------------------------------------------------------

def run_orbit_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    pmap = build_map(exp.map, curve)
    starts = [np.array(s, dtype=float) for s in exp.initial]
    if exp.random_initial:
        starts += list(_random_states(pmap, curve, exp.random_initial, ctx.rng(1)))
    metrics = {"orbits": len(starts)}
    records = []
    diags = set(exp.diagnostics)
    if "recurrence" in diags:
        periods, errors = [], []
        for x0 in starts:
            rec = analysis.first_return(pmap, x0, exp.steps, exp.tol)
            periods.append(rec.period)
            errors.append(rec.error if rec.period else None)
            records.append(run_orbit(pmap, x0, rec.period or exp.steps, seed=ctx.seed))
        found = [p for p in periods if p is not None]
        metrics["recurrence"] = {
            "periods": periods,
            "n_periodic": len(found),
            "all_periodic": len(found) == len(periods),
            "max_period": max(found) if found else None,
            "max_error": max(e for e in errors if e is not None) if found else None,
            "distinct_periods": sorted(set(found)),
        }
    else:
        records = [run_orbit(pmap, x0, exp.steps, seed=ctx.seed) for x0 in starts]
    terms = {}
    for r in records:
        terms[r.termination] = terms.get(r.termination, 0) + 1
    metrics["terminations"] = dict(sorted(terms.items()))
    if "confocal_tangency" in diags:
        if not (isinstance(curve, Ellipse) and pmap.name == "birkhoff"):
            raise ValueError("confocal_tangency needs the Birkhoff map on an ellipse")
        lams, defects = [], []
        for r in records:
            pts = analysis.birkhoff_impact_points(curve, r)
            lam = analysis.confocal_parameter(curve, pts[0], pts[1])
            lams.append(lam)
            defects.append(analysis.confocal_tangency_defect(curve, pts, lam))
        metrics["confocal_tangency"] = {"lambda": lams, "defect": defects,
                                        "max_defect": max(defects)}
    if "homothety_invariant" in diags:
        if not (isinstance(curve, Ellipse) and pmap.name == "outer"):
            raise ValueError("homothety_invariant needs the outer map about an ellipse")
        rel = []
        for r in records:
            q = np.array([analysis.homothety_invariant(curve, p) for p in r.states])
            rel.append(float(np.ptp(q) / q[0]))
        metrics["homothety_invariant"] = {"relative_variation": rel,
                                          "max_relative_variation": max(rel)}
    if "invariant_curve" in diags:
        out = [analysis.invariant_curve_diagnostic(r) for r in records]
        metrics["invariant_curve"] = {
            "graph_thickness": [d["graph_thickness"] for d in out],
            "verdict": [d["verdict"] for d in out],
            "threshold": out[0]["threshold"],
        }
    if exp.dump:
        for i, r in enumerate(records):
            ctx.add(f"orbit_{i:03d}.jsonl", _jsonl(r))
    try:
        ctx.add_figure("orbit", orbit_figure(records[0]))
    except (KeyError, ValueError):
        pass
    return metrics


def run_rotation_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    pmap = build_map(exp.map, curve)
    values, errors = [], []
    for i, x0 in enumerate(exp.initial):
        t0 = time.perf_counter()
        rho = analysis.rotation_number(run_orbit(pmap, x0, exp.steps, seed=ctx.seed))
        ctx.timings[f"orbit_{i}"] = time.perf_counter() - t0
        values.append(rho.value)
        errors.append(rho.error)
    ctx.add("rotation.csv", _csv(["initial", "rotation_number", "error"],
                                 [[json.dumps(list(x)), repr(v), repr(e)]
                                  for x, v, e in zip(exp.initial, values, errors)]))
    return {"rotation_number": values, "error_estimate": errors, "steps": exp.steps}


def run_lyapunov_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    pmap = build_map(exp.map, curve)
    res = analysis.lyapunov_exponent(pmap, exp.initial, exp.steps, exp.renorm_every,
                                     exp.burn_in, exp.checkpoints)
    cps = sorted(res.checkpoints)
    metrics = {"value": res.value, "checkpoints": {str(c): res.checkpoints[c] for c in cps}}
    if len(cps) >= 2:
        a, b = res.checkpoints[cps[-2]], res.checkpoints[cps[-1]]
        metrics["checkpoint_drift"] = abs(b - a) / abs(b) if b else None
    stride = max(1, len(res.steps) // 2000)
    ctx.add("running.csv", _csv(["step", "estimate"],
                                [[int(s), repr(float(v))] for s, v in
                                 zip(res.steps[::stride], res.running[::stride])]))
    return metrics


def run_symplecticity_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    pmap = build_map(exp.map, curve)
    if pmap.name not in ("birkhoff", "puck"):
        raise ValueError("symplecticity sampling is defined for cylinder maps")
    if exp.broken_shift:
        base, shift = pmap, exp.broken_shift
        pmap = PhaseMap(base.name + "_broken",
                        lambda x: base.step(x) + np.array([0.0, shift * x[0]]),
                        base.periods, base.params, to_canonical=base.to_canonical,
                        from_canonical=base.from_canonical)
    samples = analysis.sample_cylinder(curve.total_length, exp.samples, ctx.rng(1),
                                       exp.alpha_margin)
    res = analysis.symplecticity_defect(pmap, samples, exp.h)
    ctx.add("determinants.csv", _csv(["s", "alpha", "det"],
                                     [[repr(float(a)), repr(float(b)), repr(float(d))]
                                      for (a, b), d in zip(samples, res.determinants)]))
    return {"max_defect": res.max_defect, "location": list(res.location),
            "samples": exp.samples}


def run_periodic_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    pmap = build_map(exp.map, curve)
    orbits, failures = analysis.periodic_orbit_search(pmap, exp.period, exp.seeds, exp.tol)
    ctx.add_json("periodic_orbits.json", {
        "orbits": [{"states": o.states.tolist(), "residual": o.residual, "winding": o.winding}
                   for o in orbits],
        "failures": [{"seed": s, "reason": r} for s, r in failures]})
    return {"found": len(orbits), "failures": len(failures),
            "max_residual": max((o.residual for o in orbits), default=None)}


def run_spectrum_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    length = exp.kind == "length_spectrum"
    solver = analysis.variational_length_orbits if length else analysis.variational_area_orbits
    entries, values, extremal = [], {}, {}
    for n in exp.periods:
        found = solver(curve, n, exp.rotation_class, exp.n_seeds)
        entries.extend(found)
        vals = sorted(e.value for e in found)
        values[str(n)] = vals
        extremal[str(n)] = (max(vals) if length else min(vals)) if vals else None
    ctx.add("spectrum.csv", analysis.spectrum_to_csv(entries))
    ctx.add("spectrum.json", analysis.spectrum_to_json(entries) + "\n")
    return {"values": values, "extremal": extremal,
            "max_residual": max((e.residual for e in entries), default=None)}


def run_reflectivity_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    field_spec = exp.field if isinstance(exp.field, str) else list(exp.field)
    table = maps.ProjectiveTable(curve, field_spec)
    res = analysis.reflectivity_test(table, exp.k, exp.samples, ctx.rng(1), exp.tol)
    return {"fraction": res.fraction, "max_closure_error": res.max_closure_error,
            "admissible": res.n_admissible, "closed": res.n_closed, "rejected": res.n_rejected}


def run_caustic_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    source = tuple(exp.source)
    cusps, doubled, points = {}, {}, {}
    layers = [curve_layer(curve.to_config())]
    # caustics of full lines may run off to infinity; draw them near the table only
    center = curve.position(2 * math.pi * np.arange(64) / 64).mean(axis=0)
    radius = 1.5 * curve.diameter
    for n in exp.reflections:
        env = caustics.caustic_by_reflection(curve, source, n, exp.samples)
        points[str(n)] = env.is_point
        if env.is_point:
            cusps[str(n)] = None
        else:
            cusps[str(n)] = caustics.cusp_count(env)
            ctx.add(f"caustic_n{n}.csv", env.to_csv())
            layers.extend(_clipped_paths(env.points[env.defined], center, radius, "caustic"))
            cusp_pts = env.points[env.cusps]
            near = np.hypot(*(cusp_pts - center).T) <= radius
            layers.append({"type": "points", "points": cusp_pts[near].tolist(),
                           "style": "cusp"})
        if exp.check_doubling and not env.is_point:
            doubled[str(n)] = caustics.cusp_count(
                caustics.caustic_by_reflection(curve, source, n, 2 * exp.samples))
    layers.append({"type": "points", "points": [list(source)], "style": "point"})
    ctx.add_figure("caustics", {"kind": "figure", "title": "caustics by reflection",
                                "layers": layers})
    counted = [c for c in cusps.values() if c is not None]
    metrics = {"cusps": cusps, "point_envelope": points,
               "min_cusps": min(counted) if counted else None}
    if exp.check_doubling:
        metrics["cusps_doubled"] = doubled
        metrics["stable_under_doubling"] = all(doubled[k] == cusps[k] for k in doubled)
    return metrics


def _clipped_paths(points, center, radius, style):
    """Closed sampled curve cut into open runs that stay within ``radius`` of ``center``."""
    inside = np.hypot(*(points - center).T) <= radius
    if inside.all():
        return [{"type": "path", "points": points.tolist(), "closed": True, "style": style}]
    # start just after an outside sample so that runs do not wrap around the array end
    k = int(np.argmin(inside)) + 1
    pts, inside = np.roll(points, -k, axis=0), np.roll(inside, -k)
    runs, cur = [], []
    for p, ok in zip(pts, inside):
        if ok:
            cur.append(p.tolist())
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return [{"type": "path", "points": r, "closed": False, "style": style}
            for r in runs if len(r) > 1]


def run_string_exp(exp, ctx):
    outer = build_curve(exp.curve, ctx, 0)
    inner = build_curve(exp.inner, ctx, 1)
    lengths = caustics.string_lengths(outer, inner, exp.samples)
    ctx.add("string_lengths.csv", _csv(["index", "length"],
                                       [[i, repr(float(v))] for i, v in enumerate(lengths)]))
    ctx.add_figure("string", {"kind": "figure", "title": "string construction", "layers": [
        curve_layer(outer.to_config()), curve_layer(inner.to_config(), style="inner")]})
    return {"defect": caustics.string_defect(outer, inner, exp.samples)}


def run_clicks_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    v = unit(exp.direction)
    eps = exp.epsilon
    trains = []
    for i, window in enumerate(exp.windows):
        train = clicks.click_events(curve, eps, v, window)
        trains.append(train)
        ctx.add(f"clicks_{i}.csv", train.to_csv())
        ctx.add(f"clicks_{i}.json", train.header_json() + "\n")
    edges, counts = clicks.click_histogram(trains[0], exp.bins)
    ctx.add("histogram.csv", _csv(["bin_start", "bin_end", "count"],
                                  [[repr(float(a)), repr(float(b)), int(c)]
                                   for a, b, c in zip(edges[:-1], edges[1:], counts)]))
    spec = clicks.click_spectrum(trains[0], exp.max_harmonic)
    ctx.add_json("spectrum.json", {"harmonic": list(range(1, exp.max_harmonic + 1)),
                                   "real": spec.real.tolist(), "imag": spec.imag.tolist()})
    metrics = {"clicks": [len(t.lambdas) for t in trains],
               "total_multiplicity": [int(t.multiplicity.sum()) for t in trains],
               "interval_events": [len(t.intervals) for t in trains]}
    if exp.period_check:
        a = exp.windows[0][0]
        first = clicks.click_events(curve, eps, v, (a, a + eps)).expanded()
        second = clicks.click_events(curve, eps, v, (a + eps, a + 2 * eps)).expanded()
        match = len(first) == len(second)
        metrics["period_check"] = {
            "counts": [len(first), len(second)],
            "counts_match": match,
            "shift_error": float(np.max(np.abs(second - eps - first), initial=0.0))
            if match else None,
        }
    return metrics


def run_trap_exp(exp, ctx):
    trap = maps.ParabolaTrap(exp.p_inner, exp.p_outer, exp.height)
    rows, first = [], None
    crossed = escaped = 0
    alternate = True
    min_reflections = None
    for i in range(exp.rays):
        frac = (i + 0.5) / exp.rays
        rec = maps.trap_trace(trap, trap.entry_ray(frac), exp.n_max, exp.digits)
        d = rec.diagnostics
        crossed += d["crossed_axis"]
        escaped += d["escaped"]
        alternate &= d["mirrors_alternate"]
        refl = d["reflections"]
        min_reflections = refl if min_reflections is None else min(min_reflections, refl)
        rows.append([repr(frac), repr(rec.params["entry_x"]), refl, int(d["crossed_axis"]),
                     int(d["escaped"]), repr(d["min_abs_x"])])
        if first is None:
            first = rec
    ctx.add("trap_rays.csv", _csv(["fraction", "entry_x", "reflections", "crossed_axis",
                                   "escaped", "min_abs_x"], rows))
    ctx.add("trap_000.jsonl", _jsonl(first))
    pts = first.states[:exp.draw_reflections + 1].tolist()
    ctx.add_figure("trap", {"kind": "figure", "title": "parabola trap", "layers": [
        parabola_layer(trap.p_inner, trap.height), parabola_layer(trap.p_outer, trap.height),
        {"type": "path", "points": pts, "style": "orbit"}]})
    return {"rays": exp.rays, "crossed_axis": crossed, "escaped": escaped,
            "min_reflections": min_reflections, "mirrors_alternate": alternate,
            "aperture": list(trap.aperture), "digits": first.diagnostics["digits"]}


def run_gutkin_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    defects = [maps.gutkin_defect(curve, d, exp.samples) for d in exp.deltas]
    return {"defect": defects, "max_defect": max(defects), "min_defect": min(defects)}


def run_mobius_exp(exp, ctx):
    curve = build_curve(exp.curve, ctx)
    return analysis.mobius_fixed_point_check(curve, exp.P, exp.Q)


RUNNERS = {
    "orbit": run_orbit_exp,
    "rotation_number": run_rotation_exp,
    "lyapunov": run_lyapunov_exp,
    "symplecticity": run_symplecticity_exp,
    "periodic_search": run_periodic_exp,
    "length_spectrum": run_spectrum_exp,
    "area_spectrum": run_spectrum_exp,
    "reflectivity": run_reflectivity_exp,
    "caustic": run_caustic_exp,
    "string_test": run_string_exp,
    "clicks": run_clicks_exp,
    "trap": run_trap_exp,
    "gutkin": run_gutkin_exp,
    "mobius": run_mobius_exp,
}


# -- expectations -----------------------------------------------------------------------

def resolve(metrics, path):
    cur = metrics
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, dict) and part in cur:
            cur = cur[part]
        else:
            raise KeyError(path)
    return cur


def check(metrics, exp):
    try:
        got = resolve(metrics, exp.metric)
    except (KeyError, IndexError, ValueError):
        return {"metric": exp.metric, "passed": False, "got": None, "reason": "missing"}
    want = exp.value
    ok = False
    if got is not None:
        try:
            if exp.op == "approx":
                ok = abs(got - want) <= exp.tol
            elif exp.op == "==":
                ok = got == want
            else:
                ok = {"<": got < want, "<=": got <= want, ">": got > want,
                      ">=": got >= want}[exp.op]
        except TypeError:
            ok = False
    out = {"metric": exp.metric, "op": exp.op, "value": want, "got": got, "passed": bool(ok)}
    if exp.op == "approx":
        out["tol"] = exp.tol
    return out


# -- scenario execution ---------------------------------------------------------------------

def _raise_site(exc):
    tb = exc.__traceback__
    name = "?"
    while tb is not None:
        if tb.tb_frame.f_globals.get("__name__", "").startswith("billiardlab"):
            name = tb.tb_frame.f_code.co_name
        tb = tb.tb_next
    return name


def execute(scenario):
    """Run every experiment; returns ``(results, artifacts, timings)`` without touching disk."""
    results = {}
    artifacts = {}
    timings = {}
    for index, exp in enumerate(scenario.experiments):
        ctx = Context(scenario.seed, index)
        where = f"experiments[{index}] '{exp.id}' ({exp.kind})"
        t0 = time.perf_counter()
        try:
            metrics = RUNNERS[exp.kind](exp, ctx)
        except BilliardError as exc:
            raise NumericalFailure(f"{scenario.name}: {where}: {type(exc).__name__} in "
                                   f"{_raise_site(exc)}: {exc}") from exc
        except ValueError as exc:
            raise config.ConfigError(f"{scenario.name}: {where}: {exc}") from exc
        timings[exp.id] = {"total": time.perf_counter() - t0, **ctx.timings}
        log.info("%s/%s: %.2f s", scenario.name, exp.id, timings[exp.id]["total"])
        checks = [check(metrics, e) for e in exp.expect]
        results[exp.id] = {"kind": exp.kind, "metrics": metrics, "checks": checks,
                           "passed": all(c["passed"] for c in checks)}
        for name, data in ctx.artifacts.items():
            artifacts[f"{exp.id}/{name}"] = data
    doc = {"scenario": scenario.name, "seed": scenario.seed, "schema_version":
           config.SCHEMA_VERSION, "config": scenario.model_dump(mode="json"),
           "experiments": results, "passed": all(r["passed"] for r in results.values())}
    artifacts["results.json"] = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    return doc, artifacts, timings


def sha256(data):
    return hashlib.sha256(data).hexdigest()


def output_root(cli_value=None, scenario=None):
    if cli_value:
        return cli_value
    if os.environ.get(OUTPUT_ENV):
        return os.environ[OUTPUT_ENV]
    if scenario is not None and scenario.output_dir:
        return scenario.output_dir
    return DEFAULT_OUTPUT


def write_scenario(scenario, root):
    """Run a scenario and write it under ``root/<name>``; returns ``(results, manifest)``."""
    doc, artifacts, timings = execute(scenario)
    base = os.path.join(root, scenario.name)
    entries = []
    for rel in sorted(artifacts):
        path = os.path.join(base, *rel.split("/"))
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(artifacts[rel])
        entries.append({"path": rel, "sha256": sha256(artifacts[rel]),
                        "bytes": len(artifacts[rel])})
    manifest = {"scenario": scenario.name, "seed": scenario.seed,
                "schema_version": config.SCHEMA_VERSION,
                "config_sha256": sha256(json.dumps(scenario.model_dump(mode="json"),
                                                   sort_keys=True).encode()),
                "artifacts": entries}
    _write_json(os.path.join(base, "manifest.json"), manifest)
    # wall-clock data is kept out of the manifest so hashes stay reproducible
    _write_json(os.path.join(base, "timings.json"), timings)
    return doc, manifest


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_batch_manifest(root, manifests):
    doc = {"schema_version": config.SCHEMA_VERSION,
           "scenarios": [{"scenario": m["scenario"],
                          "manifest_sha256": sha256((json.dumps(m, indent=2, sort_keys=True)
                                                     + "\n").encode()),
                          "artifacts": m["artifacts"]} for m in manifests]}
    path = os.path.join(root, "manifest.json")
    _write_json(path, doc)
    return path


# -- bundled scenarios ----------------------------------------------------------------------

def bundled_scenarios():
    """Names and file paths of the bundled scenario corpus, sorted by name."""
    folder = resources.files("billiardlab") / "scenarios"
    out = []
    for entry in folder.iterdir():
        if entry.name.endswith(".yaml"):
            out.append((entry.name[:-len(".yaml")], str(entry)))
    return sorted(out)


def acceptance_scenarios():
    return [(n, p) for n, p in bundled_scenarios() if not n.startswith("explore-")]


def find_scenario(name_or_path):
    if os.path.exists(name_or_path):
        return name_or_path
    for name, path in bundled_scenarios():
        if name == name_or_path:
            return path
    raise config.ConfigError(f"{name_or_path}: no such file or bundled scenario")
