"""Finite-volume solver for the bounded-velocity linear BGK model.

    f_t + v f_x = -(f - E(rho, q, v)) / eps,    v in [-1, 1]

with first-order upwinding in x, implicit Euler relaxation and kinetic node
coupling ``f_i(0, v) = sum_j c_ij f_j(0, -v)`` for v > 0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .topology import START, Network, Scenario, to_local
from .solver import CFL_SLACK, CFLError, NetworkSolver


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform midpoint grid on [-1, 1] with an even number of cells."""

    n: int

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise ValueError(f"velocity cell count must be positive and even, got {self.n}")

    @property
    def dv(self) -> float:
        return 2.0 / self.n

    @property
    def v(self) -> np.ndarray:
        # (2k + 1 - n) / n is exactly antisymmetric under k -> n - 1 - k
        return (2.0 * np.arange(self.n) + 1.0 - self.n) / self.n

    @property
    def positive(self) -> slice:
        return slice(self.n // 2, None)

    @property
    def negative(self) -> slice:
        return slice(None, self.n // 2)

    @property
    def second_moment(self) -> float:
        """sum_k v_k^2 dv = 2/3 - dv^2/6 for the midpoint rule."""
        v = self.v
        return float(np.sum(v * v) * self.dv)


def moments(f: np.ndarray, grid: VelocityGrid) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint quadrature of rho = int f dv and q = int v f dv over the last axis."""
    f = np.asarray(f, dtype=float)
    return f.sum(axis=-1) * grid.dv, (f @ grid.v) * grid.dv


def equilibrium(rho, q, grid: VelocityGrid) -> np.ndarray:
    """Discrete equilibrium rho/2 + (3/2) v q.

    The factor 3/2 is replaced by 1/sum(v^2 dv) so that the discrete
    equilibrium reproduces q exactly on the grid.
    """
    rho = np.asarray(rho, dtype=float)[..., None]
    q = np.asarray(q, dtype=float)[..., None]
    return 0.5 * rho + (q / grid.second_moment) * grid.v


def upwind_fluxes(f: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Interface fluxes for ``f`` with one ghost layer on each side, shape (N+1, Nv)."""
    vp = np.maximum(v, 0.0)
    vm = np.minimum(v, 0.0)
    return f[:-1] * vp + f[1:] * vm


def advect_step(f: np.ndarray, dt: float, dx: float, grid: VelocityGrid) -> np.ndarray:
    """One upwind step.  ``f`` carries populated ghost rows 0 and -1."""
    v = grid.v
    nu = dt * float(np.abs(v).max()) / dx
    if nu > 1.0 + CFL_SLACK:
        raise CFLError(f"kinetic CFL number {nu:.6f} exceeds 1")
    flux = upwind_fluxes(f, v)
    return f[1:-1] - (dt / dx) * (flux[1:] - flux[:-1])


def collide_step(f: np.ndarray, dt: float, eps: float, grid: VelocityGrid) -> np.ndarray:
    """Implicit Euler relaxation, closed form because E depends only on conserved moments."""
    if not (dt > 0 and eps > 0):
        raise ValueError("dt and eps must be positive")
    rho, q = moments(f, grid)
    lam = dt / eps
    return (f + lam * equilibrium(rho, q, grid)) / (1.0 + lam)


def node_ghost_kinetic(C: np.ndarray, traces: list[np.ndarray], grid: VelocityGrid) -> list[np.ndarray]:
    """Ingoing ghost slices at a node, all in the node frame.

    ``traces[j]`` is the full velocity slice of edge j next to the node.  Only
    the positive half of each returned slice is meaningful; the negative half
    is copied from the trace.
    """
    C = np.asarray(C, dtype=float)
    if len(traces) != C.shape[0]:
        raise ValueError(f"node of degree {C.shape[0]} got {len(traces)} traces")
    T = np.stack([np.asarray(t, dtype=float) for t in traces])
    reflected = T[:, ::-1]  # f_j(-v)
    pos = grid.positive
    ghosts = T.copy()
    ghosts[:, pos] = C @ reflected[:, pos]
    return list(ghosts)


class KineticSolver(NetworkSolver):
    model = "kinetic"

    def __init__(self, scenario: Scenario, network: Network, epsilon: float | None = None):
        super().__init__(scenario, network)
        self.grid = VelocityGrid(scenario.velocity_cells)
        self.eps = scenario.epsilon if epsilon is None else epsilon
        self._warned = False

    def initial_state(self):
        state = {}
        for eid, e in self.network.edges.items():
            init = self.scenario.initial[eid]
            if init.f is not None:
                row = np.full(self.grid.n, init.f)
            else:
                row = equilibrium(init.rho, init.q, self.grid)
            state[eid] = np.tile(row, (e.cells, 1))
        return state

    def max_dt(self) -> float:
        return self.scenario.cfl * min(e.dx for e in self.network.edges.values()) / 1.0

    def macroscopic(self, state):
        return {eid: moments(f, self.grid) for eid, f in state.items()}

    def _trace(self, f: np.ndarray, end: str) -> np.ndarray:
        return f[0] if end == START else f[-1]

    def ghosts(self, state):
        g = {eid: [f[0].copy(), f[-1].copy()] for eid, f in state.items()}
        for node in self.network.nodes.values():
            traces = [to_local(self._trace(state[eid], end), end, "kinetic") for eid, end in node.attached]
            for (eid, end), gl in zip(node.attached, node_ghost_kinetic(node.matrix, traces, self.grid)):
                g[eid][0 if end == START else 1] = to_local(gl, end, "kinetic")
        v = self.grid.v
        for (eid, end), b in self.network.boundaries.items():
            if b.free:
                continue
            prof = b.inflow.profile(v[self.grid.positive])
            side = 0 if end == START else 1
            if end == START:
                g[eid][side][self.grid.positive] = prof
            else:
                g[eid][side][self.grid.negative] = prof[::-1]
        return g

    def step(self, state, dt):
        g = self.ghosts(state)
        new = {}
        v = self.grid.v
        for eid, f in state.items():
            dx = self.network.edges[eid].dx
            ext = np.vstack([g[eid][0], f, g[eid][1]])
            flux = upwind_fluxes(ext, v)
            self._boundary_flux[eid] = (float(flux[0].sum() * self.grid.dv), float(flux[-1].sum() * self.grid.dv))
            fa = advect_step(ext, dt, dx, self.grid)
            new[eid] = collide_step(fa, dt, self.eps, self.grid)
            if not self._warned:
                rho, q = moments(fa, self.grid)
                if np.any(np.abs(q) / self.grid.second_moment > 0.5 * rho + 1e-14):
                    warnings.warn("discrete equilibrium is negative somewhere; positivity is not guaranteed",
                                  RuntimeWarning, stacklevel=2)
                    self._warned = True
        return new


def run_kinetic(scenario: Scenario, network: Network, snapshots=(), epsilon: float | None = None, **kw):
    return KineticSolver(scenario, network, epsilon).run(snapshots=snapshots, **kw)
