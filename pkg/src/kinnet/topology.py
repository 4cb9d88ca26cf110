"""Network description, scenario loading and node-frame orientation maps.

Every node treats its attached edges as if they pointed away from it.  An
edge whose ``x = b`` end sits at the node is seen through the mirror map
``x -> b - x, v -> -v``.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

START = "start"
END = "end"

COLUMN_SUM_TOL = 1e-12


class ScenarioError(ValueError):
    """Raised when a scenario document is malformed or violates an invariant."""


class Condition(str, enum.Enum):
    KINETIC = "kinetic"
    EQUAL_DENSITY = "equal_density"
    FULL_MOMENT = "full_moment"
    MAXWELL = "maxwell"
    HALF_MOMENT = "half_moment"


class VelocityModel(str, enum.Enum):
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class CouplingKind:
    condition: Condition
    velocity_model: VelocityModel = VelocityModel.BOUNDED

    @classmethod
    def parse(cls, text: str, velocity_model: str | VelocityModel = VelocityModel.BOUNDED) -> "CouplingKind":
        key = text.strip().lower().replace("-", "_")
        aliases = {"equal": "equal_density", "full": "full_moment", "half": "half_moment", "halfmoment": "half_moment"}
        key = aliases.get(key, key)
        try:
            cond = Condition(key)
        except ValueError:
            raise ScenarioError(f"unknown coupling condition {text!r}") from None
        return cls(cond, VelocityModel(velocity_model))

    @property
    def macroscopic(self) -> bool:
        return self.condition is not Condition.KINETIC

    def __str__(self) -> str:
        if self.condition in (Condition.KINETIC, Condition.EQUAL_DENSITY):
            return self.condition.value
        return f"{self.condition.value}/{self.velocity_model.value}"


@dataclass(frozen=True)
class Edge:
    id: int
    length: float
    from_node: int | None
    to_node: int | None
    cells: int

    def __post_init__(self):
        if not self.length > 0:
            raise ScenarioError(f"edge {self.id}: length must be positive, got {self.length}")
        if self.cells < 2:
            raise ScenarioError(f"edge {self.id}: needs at least 2 cells, got {self.cells}")

    @property
    def dx(self) -> float:
        return self.length / self.cells

    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx


@dataclass(frozen=True)
class Node:
    id: int
    attached: tuple[tuple[int, str], ...]
    condition: CouplingKind
    matrix: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.attached)

    def position(self, edge_id: int, end: str | None = None) -> int:
        for k, (eid, e) in enumerate(self.attached):
            if eid == edge_id and (end is None or e == end):
                return k
        raise KeyError(f"edge {edge_id} is not attached to node {self.id}")


@dataclass(frozen=True)
class Inflow:
    """Prescribed kinetic inflow at an exterior edge end.

    ``value`` is a constant distribution on the incoming half range of the
    bounded velocity space.  Alternatively ``moments`` gives the incoming
    half-range moments ``(<k>, <v k>)`` in the local frame, where the
    incoming velocities are positive.
    """

    value: float | None = None
    moments: tuple[float, float] | None = None

    def __post_init__(self):
        if (self.value is None) == (self.moments is None):
            raise ScenarioError("inflow needs exactly one of 'value' or 'moments'")

    def half_moments(self) -> tuple[float, float]:
        if self.moments is not None:
            return self.moments
        return self.value, 0.5 * self.value

    def profile(self, v_pos: np.ndarray) -> np.ndarray:
        """Distribution values at the incoming (positive, local) velocities."""
        if self.value is not None:
            return np.full_like(v_pos, self.value, dtype=float)
        m0, m1 = self.moments
        return (4.0 * m0 - 6.0 * m1) + (12.0 * m1 - 6.0 * m0) * v_pos


@dataclass(frozen=True)
class Boundary:
    edge: int
    end: str
    inflow: Inflow | None = None

    @property
    def free(self) -> bool:
        return self.inflow is None


@dataclass(frozen=True)
class InitialState:
    rho: float = 0.0
    q: float = 0.0
    f: float | None = None

    def macroscopic(self) -> tuple[float, float]:
        if self.f is not None:
            return 2.0 * self.f, 0.0
        return self.rho, self.q


@dataclass
class Network:
    edges: dict[int, Edge]
    nodes: dict[int, Node]
    boundaries: dict[tuple[int, str], Boundary] = field(default_factory=dict)

    def edge_ids(self) -> list[int]:
        return list(self.edges)


@dataclass
class Scenario:
    model: str
    a: float
    epsilon: float
    cfl: float
    t_end: float
    cells_per_edge: int
    velocity_cells: int
    initial: dict[int, InitialState]
    name: str = ""

    def __post_init__(self):
        if self.model not in ("kinetic", "halfmoment", "wave"):
            raise ScenarioError(f"unknown model {self.model!r}")
        if not self.a > 0:
            raise ScenarioError("a must be positive")
        if not self.epsilon > 0:
            raise ScenarioError("epsilon must be positive")
        if not 0 < self.cfl <= 1:
            raise ScenarioError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end < 0:
            raise ScenarioError("t_end must be nonnegative")
        if self.velocity_cells <= 0 or self.velocity_cells % 2:
            raise ScenarioError("velocity_cells must be a positive even integer")
        if self.model in ("kinetic", "halfmoment") and abs(self.a ** 2 - 1.0 / 3.0) > 1e-12:
            raise ScenarioError("the bounded-velocity models require a^2 = 1/3")


def uniform_matrix(n: int) -> np.ndarray:
    if n < 2:
        raise ScenarioError("a uniform node needs degree >= 2")
    c = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(c, 0.0)
    return c


def check_coupling_matrix(c: np.ndarray, node_id: Any = "?") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ScenarioError(f"node {node_id}: coupling matrix must be square, got shape {c.shape}")
    if np.any(c < 0):
        raise ScenarioError(f"node {node_id}: coupling matrix has negative entries")
    sums = c.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1.0) > COLUMN_SUM_TOL)
    if bad.size:
        j = int(bad[0])
        raise ScenarioError(f"node {node_id}: column {j} of the coupling matrix sums to {sums[j]!r}, not 1")
    return c


# -- orientation --------------------------------------------------------------

def mirror_kinetic(f: np.ndarray) -> np.ndarray:
    """f(v) -> f(-v) on a symmetric velocity grid (last axis)."""
    return np.asarray(f)[..., ::-1].copy()


def mirror_halfmoment(u: np.ndarray) -> np.ndarray:
    """(rho+, q+, rho-, q-) -> (rho-, -q-, rho+, -q+) along the last axis."""
    u = np.asarray(u, dtype=float)
    return np.stack([u[..., 2], -u[..., 3], u[..., 0], -u[..., 1]], axis=-1)


def mirror_wave(u: np.ndarray) -> np.ndarray:
    """(rho, q) -> (rho, -q) along the last axis."""
    u = np.array(u, dtype=float)
    u[..., 1] = -u[..., 1]
    return u


MIRRORS = {"kinetic": mirror_kinetic, "halfmoment": mirror_halfmoment, "wave": mirror_wave}


def to_local(trace: np.ndarray, end: str, kind: str) -> np.ndarray:
    if end == START:
        return np.array(trace, dtype=float)
    if end == END:
        return MIRRORS[kind](trace)
    raise ValueError(f"bad edge end {end!r}")


# every mirror map is an involution
from_local = to_local


def node_local_view(node: Node, traces: Mapping[int, np.ndarray], kind: str) -> list[np.ndarray]:
    """Node-adjacent traces of all attached edges, in the node's frame and order.

    ``traces`` maps edge id to the trace taken at the end of that edge which
    touches the node.  Edges attached with both ends (loops) are not supported.
    """
    out = []
    for eid, end in node.attached:
        if eid not in traces:
            raise KeyError(f"missing trace for edge {eid} at node {node.id}")
        out.append(to_local(traces[eid], end, kind))
    return out


def node_edge_view(node: Node, local: Sequence[np.ndarray], kind: str) -> dict[int, np.ndarray]:
    """Inverse of :func:`node_local_view`."""
    return {eid: from_local(u, end, kind) for (eid, end), u in zip(node.attached, local)}


# -- loading ------------------------------------------------------------------

def _get(d: Mapping, key: str, ctx: str, default: Any = ...):
    if key in d:
        return d[key]
    if default is ...:
        raise ScenarioError(f"{ctx}: missing field {key!r}")
    return default


def _number(x: Any, ctx: str) -> float:
    if isinstance(x, str):
        x = x.strip()
        if x in ("1/sqrt(3)", "1/sqrt3"):
            return 1.0 / math.sqrt(3.0)
        try:
            return float(x)
        except ValueError:
            raise ScenarioError(f"{ctx}: not a number: {x!r}") from None
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{ctx}: not a number: {x!r}")
    return float(x)


def _parse_inflow(spec: Any, ctx: str) -> Inflow | None:
    if spec in (None, "free"):
        return None
    if isinstance(spec, Mapping):
        if "inflow" in spec:
            return Inflow(value=_number(spec["inflow"], ctx + ".inflow"))
        if "inflow_moments" in spec:
            m = spec["inflow_moments"]
            if not isinstance(m, Sequence) or len(m) != 2:
                raise ScenarioError(f"{ctx}: inflow_moments must be a pair")
            return Inflow(moments=(_number(m[0], ctx), _number(m[1], ctx)))
        if spec.get("condition", "free") == "free":
            return None
    raise ScenarioError(f"{ctx}: boundary must be 'free', {{'inflow': value}} or {{'inflow_moments': [m0, m1]}}")


def parse_scenario(doc: Mapping[str, Any], name: str = "") -> tuple[Scenario, Network]:
    """Build and validate a scenario from an already-decoded JSON document."""
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be a JSON object")
    cells = int(_get(doc, "cells_per_edge", "scenario", 400))
    a = _number(_get(doc, "a", "scenario", 1.0 / math.sqrt(3.0)), "a")

    edges: dict[int, Edge] = {}
    for k, e in enumerate(_get(doc, "edges", "scenario")):
        ctx = f"edges[{k}]"
        eid = int(_get(e, "id", ctx))
        if eid in edges:
            raise ScenarioError(f"{ctx}: duplicate edge id {eid}")
        fr, to = e.get("from"), e.get("to")
        edges[eid] = Edge(eid, _number(_get(e, "length", ctx, 1.0), ctx + ".length"),
                          None if fr is None else int(fr), None if to is None else int(to),
                          int(e.get("cells", cells)))

    incident: dict[int, list[tuple[int, str]]] = {}
    for e in edges.values():
        if e.from_node is not None:
            incident.setdefault(e.from_node, []).append((e.id, START))
        if e.to_node is not None:
            incident.setdefault(e.to_node, []).append((e.id, END))

    nodes: dict[int, Node] = {}
    for k, nd in enumerate(doc.get("nodes", [])):
        ctx = f"nodes[{k}]"
        nid = int(_get(nd, "id", ctx))
        if nid in nodes:
            raise ScenarioError(f"{ctx}: duplicate node id {nid}")
        attached = incident.get(nid, [])
        if "edges" in nd:
            order = [int(x) for x in nd["edges"]]
            lookup = {eid: (eid, end) for eid, end in attached}
            if sorted(order) != sorted(lookup) or len(order) != len(attached):
                raise ScenarioError(f"{ctx}: 'edges' {order} does not match the incident edges {sorted(lookup)}")
            attached = [lookup[eid] for eid in order]
        if len({eid for eid, _ in attached}) != len(attached):
            raise ScenarioError(f"{ctx}: self-loop edges are not supported")
        n = len(attached)
        if n < 2:
            raise ScenarioError(f"{ctx}: node {nid} has degree {n}; interior nodes need degree >= 2")
        kind = CouplingKind.parse(str(nd.get("condition", "kinetic")), nd.get("velocity_model", "bounded"))
        coup = nd.get("coupling", "uniform")
        if coup == "uniform":
            c = uniform_matrix(n)
        else:
            flat = [_number(x, ctx + ".coupling") for x in coup]
            if len(flat) != n * n:
                raise ScenarioError(f"{ctx}: coupling needs {n * n} entries for degree {n}, got {len(flat)}")
            c = np.array(flat).reshape(n, n)
        c = check_coupling_matrix(c, nid)
        nodes[nid] = Node(nid, tuple(attached), kind, c)

    for nid in incident:
        if nid not in nodes:
            raise ScenarioError(f"edges reference node {nid} which is not declared")

    boundaries: dict[tuple[int, str], Boundary] = {}
    for k, b in enumerate(doc.get("boundaries", [])):
        ctx = f"boundaries[{k}]"
        eid = int(_get(b, "edge", ctx))
        end = _get(b, "end", ctx)
        if eid not in edges:
            raise ScenarioError(f"{ctx}: unknown edge {eid}")
        if end not in (START, END):
            raise ScenarioError(f"{ctx}: end must be 'start' or 'end'")
        node_at = edges[eid].from_node if end == START else edges[eid].to_node
        if node_at is not None:
            raise ScenarioError(f"{ctx}: edge {eid} {end} is attached to node {node_at}, not exterior")
        boundaries[(eid, end)] = Boundary(eid, end, _parse_inflow(b, ctx))
    for e in edges.values():
        for end, nd in ((START, e.from_node), (END, e.to_node)):
            if nd is None and (e.id, end) not in boundaries:
                raise ScenarioError(f"edge {e.id} {end} is exterior but has no boundary declaration")

    initial: dict[int, InitialState] = {}
    init = doc.get("initial", [])
    items = init.items() if isinstance(init, Mapping) else ((x.get("edge"), x) for x in init)
    for key, st in items:
        ctx = f"initial[{key}]"
        eid = int(key)
        if eid not in edges:
            raise ScenarioError(f"{ctx}: unknown edge")
        if "f" in st:
            initial[eid] = InitialState(f=_number(st["f"], ctx + ".f"))
        else:
            initial[eid] = InitialState(rho=_number(st.get("rho", 0.0), ctx), q=_number(st.get("q", 0.0), ctx))
    for eid in edges:
        initial.setdefault(eid, InitialState())

    scenario = Scenario(
        model=str(doc.get("model", "wave")),
        a=a,
        epsilon=_number(doc.get("epsilon", 1e-3), "epsilon"),
        cfl=_number(doc.get("cfl", 1.0), "cfl"),
        t_end=_number(doc.get("t_end", 1.0), "t_end"),
        cells_per_edge=cells,
        velocity_cells=int(doc.get("velocity_cells", 400)),
        initial=initial,
        name=name or str(doc.get("name", "")),
    )
    return scenario, Network(edges, nodes, boundaries)


BUILTIN_DIR = Path(__file__).parent / "scenarios"


def resolve_scenario_path(path: str | Path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    builtin = BUILTIN_DIR / f"{path}.json"
    if builtin.exists():
        return builtin
    raise FileNotFoundError(f"scenario {path!s} not found (not a file, not a built-in name)")


def load_scenario(path: str | Path) -> tuple[Scenario, Network]:
    p = resolve_scenario_path(path)
    text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return parse_scenario(doc, name=p.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{p}: {exc}") from None


def with_overrides(scenario: Scenario, network: Network, *, model: str | None = None, epsilon: float | None = None,
                   cfl: float | None = None, t_end: float | None = None, cells: int | None = None,
                   velocity_cells: int | None = None, a: float | None = None,
                   condition: CouplingKind | None = None) -> tuple[Scenario, Network]:
    """Copy of a scenario with selected settings replaced.  ``cells`` applies to every edge."""
    sc = dataclasses.replace(
        scenario,
        model=scenario.model if model is None else model,
        epsilon=scenario.epsilon if epsilon is None else epsilon,
        cfl=scenario.cfl if cfl is None else cfl,
        t_end=scenario.t_end if t_end is None else t_end,
        cells_per_edge=scenario.cells_per_edge if cells is None else cells,
        velocity_cells=scenario.velocity_cells if velocity_cells is None else velocity_cells,
        a=scenario.a if a is None else a,
    )
    edges = network.edges
    if cells is not None:
        edges = {eid: dataclasses.replace(e, cells=int(cells)) for eid, e in edges.items()}
    nodes = network.nodes
    if condition is not None:
        nodes = {nid: dataclasses.replace(n, condition=condition) for nid, n in nodes.items()}
    return sc, Network(dict(edges), dict(nodes), dict(network.boundaries))
