"""Scenario files: a strict YAML schema with small arithmetic expressions for numbers."""

import ast
import math
import operator
from typing import Annotated, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import (BaseModel, BeforeValidator, ConfigDict, Field, ValidationError,
                      model_validator)

SCHEMA_VERSION = 1

_NAMES = {"pi": math.pi, "e": math.e, "tau": 2.0 * math.pi}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "tan": math.tan,
          "atan": math.atan, "atan2": math.atan2, "log": math.log, "exp": math.exp}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def evaluate(text):
    """Evaluate an arithmetic expression such as ``"pi/7"`` or ``"sqrt(4 - 0.5)"``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and type(node.value) in (int, float):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and not node.keywords):
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}") from exc
    return float(ev(tree))


def _number(v):
    if isinstance(v, str):
        return evaluate(v)
    if isinstance(v, bool):
        raise ValueError("expected a number, got a boolean")
    return v


Num = Annotated[float, BeforeValidator(_number)]
PosNum = Annotated[float, BeforeValidator(_number), Field(gt=0)]
NonNegNum = Annotated[float, BeforeValidator(_number), Field(ge=0)]
Point = Tuple[Num, Num]
Count = Annotated[int, Field(ge=1)]


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- curves ------------------------------------------------------------------

class CircleSpec(Strict):
    kind: Literal["circle"]
    radius: PosNum = 1.0
    center: Point = (0.0, 0.0)


class EllipseSpec(Strict):
    kind: Literal["ellipse"]
    a: PosNum
    b: PosNum
    center: Point = (0.0, 0.0)


class StadiumSpec(Strict):
    kind: Literal["stadium"]
    half_length: NonNegNum
    radius: PosNum


class SupportFourierSpec(Strict):
    kind: Literal["support_fourier"]
    cos: List[Num] = Field(min_length=1)
    sin: List[Num] = []


class RandomOvalSpec(Strict):
    """A random support-function oval drawn from the scenario seed."""
    kind: Literal["random_oval"]
    harmonics: Count = 4
    roughness: PosNum = 0.08


class PolygonSpec(Strict):
    kind: Literal["polygon"]
    vertices: List[Point] = Field(min_length=3)


class PolylineSpec(Strict):
    kind: Literal["polyline"]
    points: List[Point] = Field(min_length=2)
    closed: bool = False


OvalSpec = Annotated[Union[CircleSpec, EllipseSpec, StadiumSpec, SupportFourierSpec,
                           RandomOvalSpec], Field(discriminator="kind")]
CurveSpec = Annotated[Union[CircleSpec, EllipseSpec, StadiumSpec, SupportFourierSpec,
                            RandomOvalSpec, PolygonSpec, PolylineSpec],
                      Field(discriminator="kind")]


# -- maps ----------------------------------------------------------------------

class BirkhoffSpec(Strict):
    kind: Literal["birkhoff"]


class PuckSpec(Strict):
    kind: Literal["puck"]
    d: Num


class OuterSpec(Strict):
    kind: Literal["outer"]


class SymplecticSpec(Strict):
    kind: Literal["symplectic"]


class ParallelSpec(Strict):
    kind: Literal["parallel"]
    psi1: Num
    psi2: Num


class PencilSpec(Strict):
    kind: Literal["pencil"]
    P: Point
    Q: Point


MapSpec = Annotated[Union[BirkhoffSpec, PuckSpec, OuterSpec, SymplecticSpec, ParallelSpec,
                          PencilSpec], Field(discriminator="kind")]


class Expect(Strict):
    metric: str
    op: Literal["<", "<=", ">", ">=", "==", "approx"]
    value: Union[bool, int, Num, str]
    tol: NonNegNum = 0.0

    @model_validator(mode="after")
    def _approx_needs_tol(self):
        if self.op == "approx" and self.tol == 0.0:
            raise ValueError("op 'approx' needs a positive tol")
        return self


class Experiment(Strict):
    id: Annotated[str, Field(pattern=r"^[A-Za-z0-9_.-]+$")]
    expect: List[Expect] = []


# -- experiment kinds ------------------------------------------------------------

Diagnostic = Literal["confocal_tangency", "homothety_invariant", "recurrence",
                     "invariant_curve"]


class OrbitExp(Experiment):
    kind: Literal["orbit"]
    curve: CurveSpec
    map: MapSpec
    initial: List[List[Num]] = []
    random_initial: Annotated[int, Field(ge=0)] = 0
    steps: Count
    diagnostics: List[Diagnostic] = []
    tol: PosNum = 1e-9
    dump: bool = True

    @model_validator(mode="after")
    def _has_starts(self):
        if not self.initial and not self.random_initial:
            raise ValueError("give initial states or random_initial > 0")
        return self


class RotationExp(Experiment):
    kind: Literal["rotation_number"]
    curve: OvalSpec
    map: MapSpec
    initial: List[List[Num]] = Field(min_length=1)
    steps: Annotated[int, Field(ge=100)]


class LyapunovExp(Experiment):
    kind: Literal["lyapunov"]
    curve: OvalSpec
    map: MapSpec
    initial: List[Num]
    steps: Count
    renorm_every: Count = 16
    burn_in: Annotated[int, Field(ge=0)] = 1000
    checkpoints: List[Count] = []


class SymplecticityExp(Experiment):
    kind: Literal["symplecticity"]
    curve: OvalSpec
    map: MapSpec
    samples: Count
    alpha_margin: PosNum = 0.05
    h: PosNum = 1e-6
    broken_shift: Num = 0.0


class PeriodicSearchExp(Experiment):
    kind: Literal["periodic_search"]
    curve: OvalSpec
    map: MapSpec
    period: Annotated[int, Field(ge=1)]
    seeds: List[List[Num]] = Field(min_length=1)
    tol: PosNum = 1e-9


class SpectrumExp(Experiment):
    kind: Literal["length_spectrum", "area_spectrum"]
    curve: OvalSpec
    periods: List[Annotated[int, Field(ge=2)]] = Field(min_length=1)
    rotation_class: Count = 1
    n_seeds: Count = 4


class ReflectivityExp(Experiment):
    kind: Literal["reflectivity"]
    curve: CurveSpec
    field: Union[Literal["orthogonal", "toward_opposite_vertex",
                         "toward_diagonal_intersection"], List[Num]] = "orthogonal"
    k: Annotated[int, Field(ge=2)]
    samples: Count
    tol: PosNum = 1e-8


class CausticExp(Experiment):
    kind: Literal["caustic"]
    curve: OvalSpec
    source: Point
    reflections: List[Count] = Field(min_length=1)
    samples: Annotated[int, Field(ge=64)] = 1024
    check_doubling: bool = True


class StringExp(Experiment):
    kind: Literal["string_test"]
    curve: OvalSpec
    inner: OvalSpec
    samples: Count = 256


class ClicksExp(Experiment):
    kind: Literal["clicks"]
    curve: CurveSpec
    epsilon: PosNum
    direction: Num = 0.0
    windows: List[Point] = Field(min_length=1)
    period_check: bool = False
    bins: Annotated[int, Field(ge=16)] = 64
    max_harmonic: Count = 16


class TrapExp(Experiment):
    kind: Literal["trap"]
    p_inner: PosNum = 1.0
    p_outer: PosNum = 1.1
    height: Num = 3.0
    rays: Count = 20
    n_max: Count = 10_000
    digits: Optional[Annotated[int, Field(ge=1)]] = None
    draw_reflections: Count = 200

    @model_validator(mode="after")
    def _nested(self):
        if self.p_outer <= self.p_inner:
            raise ValueError("p_outer must exceed p_inner")
        return self


class GutkinExp(Experiment):
    kind: Literal["gutkin"]
    curve: OvalSpec
    deltas: List[Annotated[float, BeforeValidator(_number), Field(gt=0, lt=math.pi / 2)]] = \
        Field(min_length=1)
    samples: Count = 256


class MobiusExp(Experiment):
    kind: Literal["mobius"]
    curve: OvalSpec
    P: Point
    Q: Point


ExperimentSpec = Annotated[Union[OrbitExp, RotationExp, LyapunovExp, SymplecticityExp,
                                 PeriodicSearchExp, SpectrumExp, ReflectivityExp, CausticExp,
                                 StringExp, ClicksExp, TrapExp, GutkinExp, MobiusExp],
                           Field(discriminator="kind")]


class Scenario(Strict):
    schema_version: Literal[1]
    name: Annotated[str, Field(pattern=r"^[A-Za-z0-9_.-]+$")]
    description: str = ""
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0
    output_dir: Optional[str] = None
    experiments: List[ExperimentSpec] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_ids(self):
        ids = [e.id for e in self.experiments]
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise ValueError(f"duplicate experiment ids: {', '.join(dup)}")
        return self


# -- loading with located diagnostics -------------------------------------------------

class ConfigError(Exception):
    """A scenario file failed to parse or validate; ``str()`` names file, line and field."""


def _locate(node, loc):
    """Line (1-based) of the YAML node addressed by a pydantic error location."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            if key >= len(node.value):
                break
            node = node.value[key]
            line = node.start_mark.line + 1
        # discriminator tags such as 'circle' do not appear in the document
    return line


def _field_path(loc):
    parts = []
    for key in loc:
        if isinstance(key, int):
            parts.append(f"[{key}]")
        else:
            parts.append(("." if parts else "") + str(key))
    return "".join(parts)


def parse_scenario(text, source="<string>"):
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = _clean_loc(data, err["loc"])
            line = _locate(node, loc)
            where = f"{source}:{line}" if line else source
            lines.append(f"{where}: field '{_field_path(loc) or '<root>'}': {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


def _clean_loc(data, loc):
    """Drop union tags and validator names that pydantic inserts into error locations."""
    out, cur = [], data
    for key in loc:
        if isinstance(cur, dict):
            if key in cur:
                out.append(key)
                cur = cur[key]
            elif cur.get("kind") == key or not str(key).isidentifier():
                continue
            else:
                out.append(key)
                cur = None
        elif isinstance(cur, list) and isinstance(key, int):
            out.append(key)
            cur = cur[key] if key < len(cur) else None
        elif isinstance(key, int) or str(key).isidentifier():
            out.append(key)
    return out


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from exc
    return parse_scenario(text, str(path))
