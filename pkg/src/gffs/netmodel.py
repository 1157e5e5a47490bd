"""Network cases: JSON ingestion, validation, Laplacian and coupling bounds.

Case file layout (UTF-8 JSON)::

    {
      "base_mva": 100.0,
      "nominal_hz": 50.0,
      "buses": [
        {"id": 0, "kind": "generator", "v": 1.0, "theta0": 0.0,
         "params": {"m": 3.0, "d": 1.0, "tau": 5.0, "rt": 0.05}},
        {"id": 1, "kind": "inverter", "v": 1.0, "theta0": 0.0, "params": {},
         "controller": {"type": "gffs", "m": 3.0, "d": 4.0, "rho": 3.0, "sigma": 5.0}},
        {"id": 2, "kind": "load", "v": 1.0, "theta0": 0.0, "params": {"d": 0.05}}
      ],
      "lines": [{"from": 0, "to": 1, "b": 20.0}, {"from": 1, "to": 2, "b": 10.0}]
    }

Inverter ``controller`` is optional. ``{"type": "gfvi", "m": ..., "d": ...}``
selects virtual inertia; ``gffs`` takes ``m``, ``d`` and optionally ``rho``
and ``sigma`` (both absent means a zero filter).
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from .busmodels import (
    FirstOrderG,
    GeneratorParams,
    GffsParams,
    GfviParams,
    InverterController,
    LoadParams,
)
from .errors import ParseError, ValidationError


class BusKind(str, Enum):
    GENERATOR = "generator"
    INVERTER = "inverter"
    LOAD = "load"


BusParams = Union[GeneratorParams, GffsParams, GfviParams, LoadParams, None]


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    voltage_mag: float
    angle0: float
    params: BusParams = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BusKind(self.kind))
        if not self.voltage_mag > 0:
            raise ValidationError(f"bus {self.id}: voltage magnitude must be positive")
        expected = {
            BusKind.GENERATOR: (GeneratorParams,),
            BusKind.LOAD: (LoadParams,),
            BusKind.INVERTER: (GffsParams, GfviParams, type(None)),
        }[self.kind]
        if not isinstance(self.params, expected):
            raise ValidationError(f"bus {self.id}: params {self.params!r} do not fit kind {self.kind.value}")


@dataclass(frozen=True)
class Line:
    i: int
    j: int
    b: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValidationError(f"line {self.i}-{self.j} is a self loop")
        if not self.b > 0:
            raise ValidationError(f"line {self.i}-{self.j}: susceptance must be positive")


@dataclass(frozen=True)
class Case:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_mva: float = 100.0
    nominal_hz: float = 50.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "_index", {b.id: k for k, b in enumerate(self.buses)})
        validate_case(self)

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    def index_of(self, bus_id: int) -> int:
        return self._index[bus_id]

    def bus(self, bus_id: int) -> Bus:
        return self.buses[self._index[bus_id]]

    def of_kind(self, kind: BusKind) -> tuple[Bus, ...]:
        return tuple(b for b in self.buses if b.kind == kind)

    @property
    def generators(self) -> tuple[Bus, ...]:
        return self.of_kind(BusKind.GENERATOR)

    @property
    def inverters(self) -> tuple[Bus, ...]:
        return self.of_kind(BusKind.INVERTER)

    @property
    def loads(self) -> tuple[Bus, ...]:
        return self.of_kind(BusKind.LOAD)

    def with_controllers(self, controllers: Mapping[int, Optional[InverterController]]) -> "Case":
        """Copy of the case with the given inverter buses' controllers replaced."""
        buses = []
        for b in self.buses:
            if b.id in controllers:
                if b.kind != BusKind.INVERTER:
                    raise ValidationError(f"bus {b.id} is not an inverter")
                b = replace(b, params=controllers[b.id])
            buses.append(b)
        return replace(self, buses=tuple(buses))


def check_connected(case: Case) -> bool:
    """Breadth-first search over the line graph."""
    if case.n == 0:
        return True
    adj = {b.id: [] for b in case.buses}
    for ln in case.lines:
        adj[ln.i].append(ln.j)
        adj[ln.j].append(ln.i)
    start = case.buses[0].id
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == case.n


def validate_case(case: Case) -> None:
    if not case.base_mva > 0 or not case.nominal_hz > 0:
        raise ValidationError("base_mva and nominal_hz must be positive")
    if not case.buses:
        raise ValidationError("case has no buses")
    ids = [b.id for b in case.buses]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(f"duplicate bus ids {dup}")
    if any((not isinstance(i, int)) or i < 0 for i in ids):
        raise ValidationError("bus ids must be non-negative integers")
    for b in case.buses:
        if isinstance(b.params, GeneratorParams) and not math.isfinite(b.params.rt):
            raise ValidationError(f"bus {b.id}: turbine droop must be finite")
    pairs = set()
    for ln in case.lines:
        for end in (ln.i, ln.j):
            if end not in case._index:
                raise ValidationError(f"line {ln.i}-{ln.j} references missing bus {end}")
        key = frozenset((ln.i, ln.j))
        if key in pairs:
            raise ValidationError(f"duplicate line between {ln.i} and {ln.j}")
        pairs.add(key)
    if not check_connected(case):
        raise ValidationError("network graph is not connected")


def build_laplacian(case: Case) -> np.ndarray:
    """Linearised power-flow Laplacian at the case's equilibrium angles."""
    n = case.n
    L = np.zeros((n, n))
    for ln in case.lines:
        i, j = case.index_of(ln.i), case.index_of(ln.j)
        bi, bj = case.buses[i], case.buses[j]
        w = bi.voltage_mag * bj.voltage_mag * ln.b * math.cos(bi.angle0 - bj.angle0)
        L[i, j] -= w
        L[j, i] -= w
        L[i, i] += w
        L[j, j] += w
    return L


def coupling_bounds(case: Case, v_max_factor: float = 1.1) -> np.ndarray:
    """Per-bus ``gamma_i = 2 sum_j Vmax_i Vmax_j b_ij`` with ``Vmax = factor * |V|``."""
    if v_max_factor < 1:
        raise ValueError("v_max_factor must be at least 1")
    gamma = np.zeros(case.n)
    for ln in case.lines:
        i, j = case.index_of(ln.i), case.index_of(ln.j)
        w = 2.0 * v_max_factor**2 * case.buses[i].voltage_mag * case.buses[j].voltage_mag * ln.b
        gamma[i] += w
        gamma[j] += w
    return gamma


def algebraic_connectivity(case: Case) -> float:
    """Second-smallest Laplacian eigenvalue; reported only, never gated on."""
    if case.n < 2:
        return 0.0
    return float(np.sort(np.linalg.eigvalsh(build_laplacian(case)))[1])


# --- JSON (de)serialisation -------------------------------------------------


def _num(obj, key, where):
    if key not in obj:
        raise ValidationError(f"{where}: missing field '{key}'")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{where}: field '{key}' must be a number")
    return float(val)


def _controller_from_json(obj, where) -> Optional[InverterController]:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: controller must be an object")
    kind = obj.get("type")
    if kind == "gfvi":
        return GfviParams(_num(obj, "m", where), _num(obj, "d", where))
    if kind == "gffs":
        g = None
        if "rho" in obj or "sigma" in obj:
            g = FirstOrderG(_num(obj, "rho", where), _num(obj, "sigma", where))
        return GffsParams(_num(obj, "m", where), _num(obj, "d", where), g)
    raise ValidationError(f"{where}: unknown controller type {kind!r}")


def _bus_from_json(obj, k) -> Bus:
    where = f"buses[{k}]"
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: must be an object")
    bus_id = obj.get("id")
    if isinstance(bus_id, bool) or not isinstance(bus_id, int):
        raise ValidationError(f"{where}: 'id' must be an integer")
    try:
        kind = BusKind(obj.get("kind"))
    except ValueError:
        raise ValidationError(f"{where}: unknown kind {obj.get('kind')!r}") from None
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError(f"{where}: 'params' must be an object")
    try:
        if kind == BusKind.GENERATOR:
            p = GeneratorParams(*(_num(params, f, where) for f in ("m", "d", "tau", "rt")))
        elif kind == BusKind.LOAD:
            p = LoadParams(_num(params, "d", where))
        else:
            p = _controller_from_json(obj.get("controller"), where)
        return Bus(bus_id, kind, _num(obj, "v", where), _num(obj, "theta0", where), p)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def case_from_dict(data) -> Case:
    if not isinstance(data, dict):
        raise ValidationError("case document must be a JSON object")
    for key in ("buses", "lines"):
        if not isinstance(data.get(key), list):
            raise ValidationError(f"'{key}' must be an array")
    buses = [_bus_from_json(obj, k) for k, obj in enumerate(data["buses"])]
    lines = []
    for k, obj in enumerate(data["lines"]):
        where = f"lines[{k}]"
        if not isinstance(obj, dict):
            raise ValidationError(f"{where}: must be an object")
        ends = [obj.get("from"), obj.get("to")]
        if any(isinstance(e, bool) or not isinstance(e, int) for e in ends):
            raise ValidationError(f"{where}: 'from' and 'to' must be integers")
        lines.append(Line(ends[0], ends[1], _num(obj, "b", where)))
    return Case(
        tuple(buses),
        tuple(lines),
        base_mva=_num(data, "base_mva", "case"),
        nominal_hz=_num(data, "nominal_hz", "case"),
    )


def parse_case(text: str) -> Case:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return case_from_dict(data)


def _controller_to_json(c):
    if isinstance(c, GfviParams):
        return {"type": "gfvi", "m": c.m_v, "d": c.d_v}
    out = {"type": "gffs", "m": c.m_inv, "d": c.d_inv}
    if c.g is not None:
        out["rho"] = c.g.rho
        out["sigma"] = c.g.sigma
    return out


def case_to_dict(case: Case) -> dict:
    buses = []
    for b in case.buses:
        obj = {"id": b.id, "kind": b.kind.value, "v": b.voltage_mag, "theta0": b.angle0}
        p = b.params
        if isinstance(p, GeneratorParams):
            obj["params"] = {"m": p.m, "d": p.d, "tau": p.tau, "rt": p.rt}
        elif isinstance(p, LoadParams):
            obj["params"] = {"d": p.d}
        else:
            obj["params"] = {}
            if p is not None:
                obj["controller"] = _controller_to_json(p)
        buses.append(obj)
    return {
        "base_mva": case.base_mva,
        "nominal_hz": case.nominal_hz,
        "buses": buses,
        "lines": [{"from": ln.i, "to": ln.j, "b": ln.b} for ln in case.lines],
    }


def serialize_case(case: Case) -> str:
    return json.dumps(case_to_dict(case), indent=2) + "\n"


def load_case(path) -> Case:
    return parse_case(Path(path).read_text(encoding="utf-8"))


def synthetic_case() -> Case:
    """The bundled 16-bus desk case: 6 generators, 6 inverters, 4 loads."""
    text = resources.files("gffs.data").joinpath("synthetic12.json").read_text(encoding="utf-8")
    return parse_case(text)
