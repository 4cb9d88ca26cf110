"""Node algebra for the macroscopic wave equation.

At a node of degree n every attached edge (in the node frame) brings an
incoming Riemann invariant ``r1 = q - a rho``.  A coupling condition fixes the
asymptotic node states ``(rho_inf, q_inf)`` and hence the outgoing invariants
``r2 = q_inf + a rho_inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import Condition, CouplingKind, VelocityModel, uniform_matrix

SQRT2PI = math.sqrt(2.0 * math.pi)
RESIDUAL_TOL = 1e-10


class NodeSolveError(RuntimeError):
    pass


@dataclass
class NodeSolve:
    rho: np.ndarray
    q: np.ndarray
    r2: np.ndarray
    gamma: np.ndarray | None = None
    residual: float = 0.0

    @property
    def n(self) -> int:
        return len(self.rho)


def _vm(velocity_model) -> VelocityModel:
    return VelocityModel(velocity_model)


def invariant_coefficient(variant, velocity_model="bounded", n: int = 3, a: float = 1.0 / math.sqrt(3.0)) -> float:
    """K such that ``rho + K q`` is common to all edges at a uniform node."""
    if n < 2:
        raise ValueError("node degree must be >= 2")
    if not a > 0:
        raise ValueError("a must be positive")
    cond = Condition(variant) if not isinstance(variant, CouplingKind) else variant.condition
    vm = _vm(velocity_model)
    s = (n - 2) / n
    if cond is Condition.EQUAL_DENSITY:
        return 0.0
    if vm is VelocityModel.BOUNDED:
        if cond is Condition.FULL_MOMENT:
            return 1.5 * s
        if cond is Condition.MAXWELL:
            return 2.0 * s
        if cond is Condition.HALF_MOMENT:
            return s * (9.0 * a + 4.0 * s) / (4.0 * a + 2.0 * s)
    else:
        if cond is Condition.FULL_MOMENT:
            return math.sqrt(2.0) / (a * math.sqrt(math.pi)) * s
        if cond is Condition.MAXWELL:
            return math.sqrt(math.pi) / (a * math.sqrt(2.0)) * s
        if cond is Condition.HALF_MOMENT:
            return s / a * (4.0 + s * SQRT2PI) / (SQRT2PI + 2.0 * s)
    raise ValueError(f"no invariant coefficient for {cond.value}")


def solve_node_invariant(K: float, a: float, r1) -> NodeSolve:
    """Mass conservation plus a common value of ``rho + K q`` (closed form)."""
    r1 = np.asarray(r1, dtype=float)
    n = r1.size
    if abs(1.0 + K * a) < 1e-14:
        raise NodeSolveError("singular invariant system: 1 + K a = 0")
    m = -r1.sum() / (n * a)
    q = (m * a + r1) / (1.0 + K * a)
    rho = (q - r1) / a
    return NodeSolve(rho, q, q + a * rho)


def _finish(A: np.ndarray, b: np.ndarray, n: int, a: float, with_gamma: bool) -> NodeSolve:
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = float(np.linalg.norm(A @ x - b, ord=np.inf))
    if res > RESIDUAL_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        raise NodeSolveError(f"node system inconsistent: residual {res:.3e}")
    rho, q = x[:n], x[n:2 * n]
    gamma = x[2 * n:3 * n] if with_gamma else None
    return NodeSolve(rho, q, q + a * rho, gamma, res)


def _riemann_rows(n: int, width: int, a: float) -> np.ndarray:
    rows = np.zeros((n, width))
    rows[:, :n] = -a * np.eye(n)
    rows[:, n:2 * n] = np.eye(n)
    return rows


def _two_field_solve(C, a, r1, c_rho: float, c_q: float) -> NodeSolve:
    # c_rho rho_i + c_q q_i = sum_j C_ij (c_rho rho_j - c_q q_j),  q_i - a rho_i = r1_i
    C = np.asarray(C, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    n = r1.size
    eye = np.eye(n)
    top = np.hstack([c_rho * (eye - C), c_q * (eye + C)])
    A = np.vstack([top, _riemann_rows(n, 2 * n, a)])
    b = np.concatenate([np.zeros(n), r1])
    return _finish(A, b, n, a, with_gamma=False)


def solve_node_maxwell_general(C, a: float, r1, velocity_model="bounded") -> NodeSolve:
    alpha = 0.25 if _vm(velocity_model) is VelocityModel.BOUNDED else a / SQRT2PI
    return _two_field_solve(C, a, r1, alpha, 0.5)


def solve_node_fullmoment_general(C, a: float, r1, velocity_model="bounded") -> NodeSolve:
    k = 1.5 if _vm(velocity_model) is VelocityModel.BOUNDED else math.sqrt(2.0) / (a * math.sqrt(math.pi))
    return _two_field_solve(C, a, r1, 1.0, k)


def halfmoment_rows(a: float, velocity_model="bounded") -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Half-moment closure as linear forms in ``(rho_inf, q_inf, gamma)``.

    Returns ``(q_in, rho_in, q_out, rho_out)``: the ingoing half-moments
    ``q+(0), rho+(0)`` and the outgoing ``q-(0), rho-(0)`` of the bounded
    half-space layer solution.
    """
    if _vm(velocity_model) is VelocityModel.BOUNDED:
        q_in = np.array([0.25, 0.5, 0.25 * a])
        rho_in = np.array([0.5, 0.75, 0.5 * (3.0 * a + 1.0)])
        q_out = np.array([-0.25, 0.5, -0.25 * a])
        rho_out = np.array([0.5, -0.75, 0.5 * (3.0 * a - 1.0)])
    else:
        lam = (math.pi - 2.0) / (a * (math.pi - 4.0))
        mu = SQRT2PI / (a * (math.pi - 4.0))
        w = 2.0 / (SQRT2PI * a)
        s = 2.0 * a / SQRT2PI
        rho_in = 0.5 * np.array([1.0, w, lam + mu])
        q_in = 0.5 * np.array([s, 1.0, -1.0])
        rho_out = 0.5 * np.array([1.0, -w, -lam + mu])
        q_out = 0.5 * np.array([-s, 1.0, 1.0])
    return q_in, rho_in, q_out, rho_out


def solve_node_halfmoment_general(C, a: float, r1, velocity_model="bounded") -> NodeSolve:
    """3n system: q+ = -C q-, rho+ = C rho-, and the n Riemann conditions."""
    C = np.asarray(C, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    n = r1.size
    q_in, rho_in, q_out, rho_out = halfmoment_rows(a, velocity_model)
    eye = np.eye(n)
    blocks = []
    for cin, cout, sign in ((q_in, q_out, -1.0), (rho_in, rho_out, 1.0)):
        # unknown layout: [rho (n), q (n), gamma (n)]
        blocks.append(np.hstack([cin[k] * eye - sign * cout[k] * C for k in range(3)]))
    A = np.vstack(blocks + [_riemann_rows(n, 3 * n, a)])
    b = np.concatenate([np.zeros(2 * n), r1])
    return _finish(A, b, n, a, with_gamma=True)


def solve_node_equal_density(a: float, r1) -> NodeSolve:
    return solve_node_invariant(0.0, a, r1)


def solve_node(kind: CouplingKind, C, a: float, r1) -> NodeSolve:
    cond, vm = kind.condition, kind.velocity_model
    if cond is Condition.EQUAL_DENSITY:
        return solve_node_equal_density(a, r1)
    if cond is Condition.MAXWELL:
        return solve_node_maxwell_general(C, a, r1, vm)
    if cond is Condition.FULL_MOMENT:
        return solve_node_fullmoment_general(C, a, r1, vm)
    if cond is Condition.HALF_MOMENT:
        return solve_node_halfmoment_general(C, a, r1, vm)
    raise ValueError("kinetic coupling has no macroscopic node solve; use the kinetic solver")


def node_response(kind: CouplingKind, C, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Linear maps ``r1 -> rho_inf`` and ``r1 -> q_inf`` of a node solve."""
    n = np.asarray(C).shape[0]
    R = np.empty((n, n))
    Q = np.empty((n, n))
    for j in range(n):
        s = solve_node(kind, C, a, np.eye(n)[j])
        R[:, j] = s.rho
        Q[:, j] = s.q
    return R, Q


def fitted_invariant_coefficient(rho, q) -> float:
    """Least-squares K with ``rho_i + K q_i`` common over all edges."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    dr = rho - rho.mean()
    dq = q - q.mean()
    den = float(dq @ dq)
    if den == 0.0:
        raise ValueError("all q_inf equal; invariant coefficient is undetermined")
    return -float(dr @ dq) / den


__all__ = [
    "NodeSolve", "NodeSolveError", "invariant_coefficient", "solve_node_invariant",
    "solve_node_maxwell_general", "solve_node_fullmoment_general", "solve_node_halfmoment_general",
    "solve_node_equal_density", "solve_node", "node_response", "halfmoment_rows",
    "fitted_invariant_coefficient", "uniform_matrix",
]
