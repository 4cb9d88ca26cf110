"""Time marching shared by the three network solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import START, Network, Scenario
from . import diagnostics


class CFLError(ValueError):
    pass


# relative slack when deciding that a remaining interval equals one full step
LANDING_TOL = 1e-9
# accepted CFL overshoot, covers steps stretched by LANDING_TOL
CFL_SLACK = 1e-8


@dataclass
class Snapshot:
    t: float
    fields: dict[int, dict[str, np.ndarray]]
    state: dict | None = None


@dataclass
class RunResult:
    model: str
    times: list[float] = field(default_factory=list)
    entropy: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    inflow: list[float] = field(default_factory=list)
    drho_dt: list[float] = field(default_factory=list)
    step_times: list[float] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)
    steps: int = 0
    final: Snapshot | None = None

    def snapshot(self, t: float) -> Snapshot:
        for s in self.snapshots:
            if abs(s.t - t) <= 1e-12 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")


class NetworkSolver:
    """Base class.  Subclasses provide the state, ghost filling and one step."""

    model = "base"

    def __init__(self, scenario: Scenario, network: Network):
        self.scenario = scenario
        self.network = network
        self.a = scenario.a
        self._boundary_flux: dict[int, tuple[float, float]] = {}

    # -- subclass interface ---------------------------------------------------
    def initial_state(self):
        raise NotImplementedError

    def max_dt(self) -> float:
        raise NotImplementedError

    def step(self, state, dt: float):
        raise NotImplementedError

    def macroscopic(self, state) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        raise NotImplementedError

    def snapshot_fields(self, state) -> dict[int, dict[str, np.ndarray]]:
        out = {}
        for eid, (rho, q) in self.macroscopic(state).items():
            out[eid] = {"x": self.network.edges[eid].centers(), "rho": np.array(rho), "q": np.array(q)}
        return out

    # -- driver ---------------------------------------------------------------
    def _exterior_inflow(self) -> float:
        total = 0.0
        for (eid, end) in self.network.boundaries:
            left, right = self._boundary_flux.get(eid, (0.0, 0.0))
            total += left if end == START else -right
        return total

    def run(self, t_end: float | None = None, snapshots=(), keep_state: bool = False,
            record_every: int = 1, state=None) -> RunResult:
        t_end = self.scenario.t_end if t_end is None else float(t_end)
        snaps = sorted({float(s) for s in snapshots})
        if any(s < 0 or s > t_end * (1 + 1e-12) for s in snaps):
            raise ValueError(f"snapshot times must lie in [0, t_end={t_end}]")
        stops = sorted(set(snaps) | {t_end})
        state = self.initial_state() if state is None else state
        dxs = {eid: e.dx for eid, e in self.network.edges.items()}
        res = RunResult(self.model)
        inflow = 0.0
        t = 0.0

        def record(t):
            macro = self.macroscopic(state)
            res.times.append(t)
            res.entropy.append(diagnostics.entropy(macro, dxs, self.a))
            res.mass.append(diagnostics.total_mass(macro, dxs))
            res.inflow.append(inflow)

        def snap(t):
            s = Snapshot(t, self.snapshot_fields(state), state if keep_state else None)
            res.snapshots.append(s)
            return s

        record(t)
        dt_max = self.max_dt()
        k = 0
        for stop in stops:
            while t < stop:
                remaining = stop - t
                dt = remaining if remaining <= dt_max * (1 + LANDING_TOL) else dt_max
                rho_old = {eid: r for eid, (r, _) in self.macroscopic(state).items()}
                state = self.step(state, dt)
                inflow += dt * self._exterior_inflow()
                t = stop if dt == remaining else t + dt
                k += 1
                rate = 0.0
                for eid, (rho, _) in self.macroscopic(state).items():
                    rate = max(rate, float(np.max(np.abs(rho - rho_old[eid]))) / dt)
                res.drho_dt.append(rate)
                res.step_times.append(t)
                if k % record_every == 0 or t == stop:
                    record(t)
            if stop in snaps:
                snap(stop)
        res.steps = k
        res.final = Snapshot(t, self.snapshot_fields(state), state)
        return res
