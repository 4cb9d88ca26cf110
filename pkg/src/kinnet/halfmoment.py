"""Half-moment relaxation system for the bounded-velocity BGK model.

State per cell: ``(rho+, q+, rho-, q-)``, the zeroth and first moments of f
over v > 0 and v < 0.  The distribution is closed by an affine function of v
on each half range (bounded) or an affine function times the Maxwellian
(unbounded).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import SQRT2PI
from .solver import CFL_SLACK, CFLError, NetworkSolver
from .topology import START, Network, Scenario, VelocityModel, to_local

# flux Jacobian of the (rho+, q+) block; the (rho-, q-) block is its mirror
PLUS_JACOBIAN = np.array([[0.0, 1.0], [-1.0 / 6.0, 1.0]])
LAMBDA_MAX = (3.0 + math.sqrt(3.0)) / 6.0


@dataclass(frozen=True)
class ClosureCoefficients:
    """f = alpha + beta v on each half range (times M(v) when unbounded)."""

    alpha_plus: float
    beta_plus: float
    alpha_minus: float
    beta_minus: float
    second_plus: float
    second_minus: float


def close(rho_plus, q_plus, rho_minus, q_minus, velocity_model="bounded", a: float = 1.0) -> ClosureCoefficients:
    """Invert the half-moment map and return the closed second half-moments <v^2 f>_+-."""
    if VelocityModel(velocity_model) is VelocityModel.BOUNDED:
        ap, bp = 4.0 * rho_plus - 6.0 * q_plus, 12.0 * q_plus - 6.0 * rho_plus
        am, bm = 4.0 * rho_minus + 6.0 * q_minus, 12.0 * q_minus + 6.0 * rho_minus
        s_p = -rho_plus / 6.0 + q_plus
        s_m = -rho_minus / 6.0 - q_minus
    else:
        # rho+ = A/2 + c B,  q+ = c A + a^2 B / 2,  c = a / sqrt(2 pi)
        c = a / SQRT2PI
        det = a * a / 4.0 - c * c
        ap = (a * a / 2.0 * rho_plus - c * q_plus) / det
        bp = (0.5 * q_plus - c * rho_plus) / det
        am = (a * a / 2.0 * rho_minus + c * q_minus) / det
        bm = (0.5 * q_minus + c * rho_minus) / det
        s_p = ((math.pi - 4.0) * a * a * rho_plus + a * SQRT2PI * q_plus) / (math.pi - 2.0)
        s_m = ((math.pi - 4.0) * a * a * rho_minus - a * SQRT2PI * q_minus) / (math.pi - 2.0)
    return ClosureCoefficients(ap, bp, am, bm, s_p, s_m)


def even_odd(u: np.ndarray) -> np.ndarray:
    """(rho+, q+, rho-, q-) -> (rho, q, rho_hat, q_hat)."""
    u = np.asarray(u, dtype=float)
    rp, qp, rm, qm = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
    return np.stack([rp + rm, qp + qm, rp - rm, qp - qm], axis=-1)


def from_even_odd(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    rho, q, rh, qh = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    return np.stack([0.5 * (rho + rh), 0.5 * (q + qh), 0.5 * (rho - rh), 0.5 * (q - qh)], axis=-1)


def equilibrium_halfmoments(rho, q) -> np.ndarray:
    """Half-moments of rho/2 + (3/2) v q."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.stack([0.5 * rho + 0.75 * q, 0.25 * rho + 0.5 * q, 0.5 * rho - 0.75 * q, -0.25 * rho + 0.5 * q],
                    axis=-1)


def fluxes(u: np.ndarray) -> np.ndarray:
    """Physical fluxes (q+, <v^2 f>_+, q-, <v^2 f>_-) of the bounded closure."""
    rp, qp, rm, qm = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
    return np.stack([qp, -rp / 6.0 + qp, qm, -rm / 6.0 - qm], axis=-1)


def transport_step(u: np.ndarray, dt: float, dx: float) -> np.ndarray:
    """Upwind update of the interior; ``u`` has ghost rows 0 and -1 (shape (N+2, 4)).

    Both eigenvalues of the plus block are positive, so its interface flux is
    taken from the left cell; the minus block takes the right cell.
    """
    nu = LAMBDA_MAX * dt / dx
    if nu > 1.0 + CFL_SLACK:
        raise CFLError(f"half-moment CFL number {nu:.6f} exceeds 1")
    F = fluxes(u)
    face = np.empty((u.shape[0] - 1, 4))
    face[:, :2] = F[:-1, :2]
    face[:, 2:] = F[1:, 2:]
    return u[1:-1] - (dt / dx) * (face[1:] - face[:-1])


def relax_step(u: np.ndarray, dt: float, eps: float) -> np.ndarray:
    """Implicit Euler for the relaxation terms, exact in even-odd variables."""
    w = even_odd(u)
    lam = dt / eps
    rho, q = w[..., 0], w[..., 1]
    w[..., 2] = (w[..., 2] + lam * 1.5 * q) / (1.0 + lam)
    w[..., 3] = (w[..., 3] + lam * 0.5 * rho) / (1.0 + lam)
    return from_even_odd(w)


def step(u: np.ndarray, dt: float, dx: float, eps: float) -> np.ndarray:
    return relax_step(transport_step(u, dt, dx), dt, eps)


def node_ghost_halfmoment(C: np.ndarray, traces: list[np.ndarray]) -> list[np.ndarray]:
    """Ingoing (rho+, q+) per edge from rho+_i = sum c_ij rho-_j, q+_i = -sum c_ij q-_j (node frame).

    The returned 4-vectors carry the trace's own (rho-, q-).
    """
    C = np.asarray(C, dtype=float)
    if len(traces) != C.shape[0]:
        raise ValueError(f"node of degree {C.shape[0]} got {len(traces)} traces")
    T = np.stack([np.asarray(t, dtype=float) for t in traces])
    g = T.copy()
    g[:, 0] = C @ T[:, 2]
    g[:, 1] = -(C @ T[:, 3])
    return list(g)


class HalfMomentSolver(NetworkSolver):
    model = "halfmoment"

    def __init__(self, scenario: Scenario, network: Network, epsilon: float | None = None):
        super().__init__(scenario, network)
        self.eps = scenario.epsilon if epsilon is None else epsilon

    def initial_state(self):
        state = {}
        for eid, e in self.network.edges.items():
            init = self.scenario.initial[eid]
            if init.f is not None:
                row = np.array([init.f, 0.5 * init.f, init.f, -0.5 * init.f])
            else:
                row = equilibrium_halfmoments(init.rho, init.q)
            state[eid] = np.tile(row, (e.cells, 1))
        return state

    def max_dt(self) -> float:
        return self.scenario.cfl * min(e.dx for e in self.network.edges.values()) / LAMBDA_MAX

    def macroscopic(self, state):
        return {eid: (u[:, 0] + u[:, 2], u[:, 1] + u[:, 3]) for eid, u in state.items()}

    def snapshot_fields(self, state):
        out = super().snapshot_fields(state)
        for eid, u in state.items():
            out[eid]["rho_hat"] = u[:, 0] - u[:, 2]
            out[eid]["q_hat"] = u[:, 1] - u[:, 3]
        return out

    def ghosts(self, state):
        g = {eid: [u[0].copy(), u[-1].copy()] for eid, u in state.items()}
        for node in self.network.nodes.values():
            traces = [to_local(state[eid][0] if end == START else state[eid][-1], end, "halfmoment")
                      for eid, end in node.attached]
            for (eid, end), gl in zip(node.attached, node_ghost_halfmoment(node.matrix, traces)):
                g[eid][0 if end == START else 1] = to_local(gl, end, "halfmoment")
        for (eid, end), b in self.network.boundaries.items():
            if b.free:
                continue
            m0, m1 = b.inflow.half_moments()
            if end == START:
                g[eid][0][:2] = (m0, m1)
            else:
                g[eid][1][2:] = (m0, -m1)
        return g

    def step(self, state, dt):
        g = self.ghosts(state)
        new = {}
        for eid, u in state.items():
            dx = self.network.edges[eid].dx
            ext = np.vstack([g[eid][0], u, g[eid][1]])
            F = fluxes(ext)
            self._boundary_flux[eid] = (float(F[0, 0] + F[1, 2]), float(F[-2, 0] + F[-1, 2]))
            new[eid] = step(ext, dt, dx, self.eps)
        return new


def run_halfmoment(scenario: Scenario, network: Network, snapshots=(), epsilon: float | None = None, **kw):
    return HalfMomentSolver(scenario, network, epsilon).run(snapshots=snapshots, **kw)
