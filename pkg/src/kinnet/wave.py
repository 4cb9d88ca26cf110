"""Upwind solver for the wave equation rho_t + q_x = 0, q_t + a^2 rho_x = 0.

Works on the Riemann invariants r1 = q - a rho (speed -a) and r2 = q + a rho
(speed +a).  At CFL number 1 the update is an exact shift by one cell.
"""
from __future__ import annotations

import numpy as np

from . import halfspace
from .coupling import node_response
from .solver import CFL_SLACK, CFLError, NetworkSolver
from .topology import (END, START, Condition, CouplingKind, Network, Scenario, ScenarioError, VelocityModel)

# relative distance to 1 below which the CFL number is treated as exactly 1
UNIT_CFL_TOL = 1e-9


def to_invariants(rho, q, a: float):
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    return q - a * rho, q + a * rho


def from_invariants(r1, r2, a: float):
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    return (r2 - r1) / (2.0 * a), 0.5 * (r1 + r2)


def shift_invariants(r1, r2, r2_left: float, r1_right: float, nu: float):
    """Upwind transport of r2 to the right and r1 to the left with CFL number ``nu``."""
    if nu > 1.0 + CFL_SLACK:
        raise CFLError(f"wave CFL number {nu:.6f} exceeds 1")
    if abs(nu - 1.0) <= UNIT_CFL_TOL:
        return np.append(r1[1:], r1_right), np.insert(r2[:-1], 0, r2_left)
    r2_up = np.insert(r2[:-1], 0, r2_left)
    r1_up = np.append(r1[1:], r1_right)
    return (1.0 - nu) * r1 + nu * r1_up, (1.0 - nu) * r2 + nu * r2_up


def step_wave(rho, q, r2_left: float, r1_right: float, dt: float, dx: float, a: float):
    """One step on an edge, given the ingoing invariants at both ends."""
    r1, r2 = to_invariants(rho, q, a)
    r1, r2 = shift_invariants(r1, r2, r2_left, r1_right, a * dt / dx)
    return from_invariants(r1, r2, a)


def _local_closure(kind: CouplingKind, m0: float, m1: float, r1: float, a: float):
    cond, vm = kind.condition, kind.velocity_model
    if cond is Condition.MAXWELL:
        s = halfspace.maxwell_halfspace(m1, r1, a, vm)
    elif cond is Condition.FULL_MOMENT:
        s = halfspace.fullmoment_halfspace(m0, r1, a, vm)
    elif cond is Condition.HALF_MOMENT:
        solver = (halfspace.halfmoment_halfspace_bounded if vm is VelocityModel.BOUNDED
                  else halfspace.halfmoment_halfspace_unbounded)
        s = solver(m0, m1, r1, a)
    elif cond is Condition.EQUAL_DENSITY:
        # transparent junction with a reservoir at rest holding the inflow half-range mass
        return m0, 0.0
    else:
        raise ValueError("kinetic coupling cannot close a wave boundary")
    return s.rho_inf, s.q_inf


def boundary_close(end: str, kind: CouplingKind, inflow: tuple[float, float], interior: float, a: float) -> float:
    """Ingoing invariant at an exterior end with prescribed kinetic inflow.

    ``inflow`` holds the half-range moments ``(<l>, <v l>)`` of the incoming
    distribution in the edge frame (v > 0 at a left end, v < 0 at a right end).
    ``interior`` is the outgoing invariant: r1 at a left end, r2 at a right end.
    Returns r2 for a left end and r1 for a right end.
    """
    m0, m1 = inflow
    if end in ("left", START):
        rho, q = _local_closure(kind, m0, m1, interior, a)
        return q + a * rho
    if end in ("right", END):
        # mirror x -> -x, v -> -v: local r1 = -r2, local <v k>_+ = -<v l>_-
        rho, q = _local_closure(kind, m0, -m1, -interior, a)
        return -(q + a * rho)
    raise ValueError(f"bad end {end!r}")


def _common_condition(network: Network) -> CouplingKind | None:
    kinds = {n.condition for n in network.nodes.values()}
    return kinds.pop() if len(kinds) == 1 else None


class WaveSolver(NetworkSolver):
    model = "wave"

    def __init__(self, scenario: Scenario, network: Network, coupling: CouplingKind | None = None,
                 boundary_closure: CouplingKind | None = None):
        super().__init__(scenario, network)
        self.coupling = coupling
        self.node_kind = {}
        for nid, node in network.nodes.items():
            kind = coupling or node.condition
            if not kind.macroscopic:
                raise ScenarioError(f"node {nid}: kinetic coupling needs the kinetic solver; choose a macroscopic "
                                    "coupling for the wave model")
            self.node_kind[nid] = kind
        self.closure = boundary_closure or coupling or _common_condition(network) or CouplingKind(Condition.HALF_MOMENT)
        self.response = {nid: node_response(self.node_kind[nid], node.matrix, self.a)
                         for nid, node in network.nodes.items()}
        self.last_node_flux = 0.0
        self.last_entropy_flux = 0.0

    def initial_state(self):
        state = {}
        for eid, e in self.network.edges.items():
            rho, q = self.scenario.initial[eid].macroscopic()
            state[eid] = (np.full(e.cells, rho), np.full(e.cells, q))
        return state

    def max_dt(self) -> float:
        return self.scenario.cfl * min(e.dx for e in self.network.edges.values()) / self.a

    def macroscopic(self, state):
        return state

    def ghosts(self, state):
        """Ingoing invariants (r2 at the start, r1 at the end) for every edge."""
        a = self.a
        inv = {eid: to_invariants(rho, q, a) for eid, (rho, q) in state.items()}
        g = {eid: [r2[0], r1[-1]] for eid, (r1, r2) in inv.items()}  # free: zero gradient
        node_flux = 0.0
        ent = 0.0
        for nid, node in self.network.nodes.items():
            # local r1 is r1 at a start and -r2 at an end
            r1_loc = np.array([inv[eid][0][0] if end == START else -inv[eid][1][-1] for eid, end in node.attached])
            R, Q = self.response[nid]
            rho, q = R @ r1_loc, Q @ r1_loc
            r2_loc = q + a * rho
            node_flux += float(rho @ q)
            for (eid, end), r2 in zip(node.attached, r2_loc):
                g[eid][0 if end == START else 1] = r2 if end == START else -r2
        for (eid, end), b in self.network.boundaries.items():
            r1, r2 = inv[eid]
            if b.inflow is not None:
                m0, m1 = b.inflow.half_moments()
                if end == START:
                    g[eid][0] = boundary_close(START, self.closure, (m0, m1), r1[0], a)
                else:
                    g[eid][1] = boundary_close(END, self.closure, (m0, -m1), r2[-1], a)
            # entropy flux rho q into the edge through this end
            if end == START:
                rb, qb = from_invariants(r1[0], g[eid][0], a)
                ent += float(rb * qb)
            else:
                rb, qb = from_invariants(g[eid][1], r2[-1], a)
                ent -= float(rb * qb)
        self.last_node_flux = node_flux
        self.last_entropy_flux = node_flux + ent
        return g

    def step(self, state, dt):
        g = self.ghosts(state)
        a = self.a
        new = {}
        for eid, (rho, q) in state.items():
            dx = self.network.edges[eid].dx
            r1, r2 = to_invariants(rho, q, a)
            self._boundary_flux[eid] = (0.5 * (g[eid][0] + r1[0]), 0.5 * (r2[-1] + g[eid][1]))
            nu = a * dt / dx
            r1, r2 = shift_invariants(r1, r2, g[eid][0], g[eid][1], nu)
            new[eid] = from_invariants(r1, r2, a)
        return new


def run_wave(scenario: Scenario, network: Network, coupling: CouplingKind | None = None, snapshots=(), **kw):
    return WaveSolver(scenario, network, coupling).run(snapshots=snapshots, **kw)
