"""Orbit records and the lifted phase-map wrapper shared by maps and analysis."""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (BilliardError, DegenerateChord, NoConvergence, TangentialRay,
                     VertexHit)

TERMINATIONS = ("completed", "vertex_hit", "grazing", "diverged")


@dataclass(frozen=True)
class PhaseMap:
    """A map on a phase space with some periodic coordinates.

    ``step`` acts on lifted coordinates: periodic coordinates of the output
    are continuous in the input (no reduction is applied), so finite
    differences and winding counts need no unwrapping. ``periods[i]`` is
    the period of coordinate ``i`` or ``None``. ``lift_index`` names the
    coordinate whose windings define the rotation number.
    """

    name: str
    step: Callable[[np.ndarray], np.ndarray]
    periods: tuple
    params: dict = field(default_factory=dict)
    lift_index: Optional[int] = 0
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    #: optional fused ``x -> (step(x), jacobian(x))``
    step_jacobian: Optional[Callable] = None
    to_canonical: Optional[Callable[[np.ndarray], np.ndarray]] = None
    from_canonical: Optional[Callable[[np.ndarray], np.ndarray]] = None

    #: optional orbit-reversal involution on states, used to deduplicate orbits
    reversal: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        return self.step(np.asarray(x, dtype=float))

    def reduce(self, x):
        """Reduce periodic coordinates; returns ``(x_reduced, windings_of_lift_index)``."""
        x = np.array(x, dtype=float)
        winding = 0
        for i, per in enumerate(self.periods):
            if per:
                w = math.floor(x[i] / per)
                x[i] -= w * per
                if x[i] >= per:
                    x[i] -= per
                    w += 1
                if i == self.lift_index:
                    winding = w
        return x, winding

    def wrap_difference(self, dx):
        """Difference of two states with periodic coordinates folded into ``(-P/2, P/2]``."""
        dx = np.array(dx, dtype=float)
        for i, per in enumerate(self.periods):
            if per:
                dx[i] = dx[i] - per * np.round(dx[i] / per)
        return dx

    @property
    def lift_period(self):
        return None if self.lift_index is None else self.periods[self.lift_index]


@dataclass
class OrbitRecord:
    """A finite orbit with per-step states and winding increments.

    ``states`` has shape ``(n + 1, d)``; periodic coordinates are stored
    reduced and ``winding[k]`` is the integer number of turns made by the
    lifted coordinate during step ``k``.
    """

    map_id: str
    params: dict
    initial: np.ndarray
    states: np.ndarray
    winding: np.ndarray
    period: Optional[float]
    lift_index: Optional[int] = 0
    termination: str = "completed"
    diagnostics: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination {self.termination!r}")

    @property
    def n(self):
        return len(self.states) - 1

    def lifted(self):
        """Lifted values of the winding coordinate along the orbit."""
        base = self.states[:, self.lift_index]
        turns = np.concatenate([[0], np.cumsum(self.winding)])
        return base + self.period * turns

    def iter_json_lines(self):
        yield json.dumps({"map": self.map_id, "params": _jsonable(self.params),
                          "initial": _jsonable(self.initial), "period": self.period,
                          "termination": self.termination, "seed": self.seed,
                          "diagnostics": _jsonable(self.diagnostics)}, sort_keys=True)
        for k, state in enumerate(self.states):
            row = {"index": k, "state": [float(v) for v in state]}
            if k > 0:
                row["winding"] = int(self.winding[k - 1])
            yield json.dumps(row, sort_keys=True)

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.iter_json_lines():
                fh.write(line + "\n")

    @classmethod
    def read_jsonl(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            rows = [json.loads(line) for line in fh if line.strip()]
        states = np.array([r["state"] for r in rows])
        winding = np.array([r.get("winding", 0) for r in rows[1:]], dtype=int)
        return cls(header["map"], header["params"], np.asarray(header["initial"]), states,
                   winding, header["period"], termination=header["termination"],
                   diagnostics=header.get("diagnostics", {}), seed=header.get("seed"))


_TERMINATION_OF = {
    VertexHit: "vertex_hit",
    TangentialRay: "grazing",
    DegenerateChord: "diverged",
    NoConvergence: "diverged",
}


def termination_reason(exc):
    for cls, reason in _TERMINATION_OF.items():
        if isinstance(exc, cls):
            return reason
    return "diverged"


def run_orbit(pmap, x0, n, seed=None):
    """Iterate ``pmap`` ``n`` times from ``x0``, stopping early on a map failure."""
    x, _ = pmap.reduce(x0)
    states = np.empty((n + 1, len(x)))
    winding = np.zeros(n, dtype=np.int64)
    states[0] = x
    termination = "completed"
    diagnostics = {}
    k = 0
    for k in range(n):
        try:
            y = pmap.step(x)
        except BilliardError as exc:
            termination = termination_reason(exc)
            diagnostics["failure"] = f"{type(exc).__name__}: {exc}"
            break
        if not np.all(np.isfinite(y)):
            termination = "diverged"
            break
        x, w = pmap.reduce(y)
        states[k + 1] = x
        winding[k] = w
    else:
        k = n
    period = pmap.lift_period
    return OrbitRecord(pmap.name, dict(pmap.params), np.asarray(x0, dtype=float),
                       states[:k + 1], winding[:k], period, lift_index=pmap.lift_index,
                       termination=termination, diagnostics=diagnostics, seed=seed)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
