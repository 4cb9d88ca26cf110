"""Kinetic half-space (Milne) problems and their approximate solutions.

Closed-form layer solvers take the ingoing half-moments at ``x = 0`` and one
far-field condition, either a prescribed flux ``q_inf = value`` (``"flux"``)
or a prescribed left-going invariant ``q_inf - a rho_inf = value``
(``"riemann"``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.sparse.linalg import LinearOperator, gmres

from .coupling import SQRT2PI, fitted_invariant_coefficient, halfmoment_rows
from .kinetic import VelocityGrid, equilibrium, moments
from .topology import VelocityModel

A_BOUNDED = 1.0 / math.sqrt(3.0)


class HalfSpaceError(RuntimeError):
    pass


class HalfSpaceWarning(RuntimeWarning):
    pass


@dataclass
class HalfSpaceAsymptotics:
    rho_inf: float
    q_inf: float
    gamma: float | None = None
    rho_out: float = float("nan")
    q_out: float = float("nan")
    residual: float = 0.0


def _constraint_row(constraint: str, a: float, width: int) -> np.ndarray:
    # unknown layout (rho, q[, gamma])
    row = np.zeros(width)
    if constraint == "riemann":
        row[0], row[1] = -a, 1.0
    elif constraint == "flux":
        row[1] = 1.0
    else:
        raise ValueError(f"unknown far-field constraint {constraint!r}")
    return row


def _solve_small(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    if abs(np.linalg.det(A)) < 1e-14:
        raise HalfSpaceError("singular half-space system")
    x = np.linalg.solve(A, b)
    return x, float(np.abs(A @ x - b).max())


def maxwell_halfspace(q_plus_in: float, far: float, a: float, velocity_model="bounded",
                      constraint: str = "riemann") -> HalfSpaceAsymptotics:
    """Equality of ingoing half-fluxes with the far-field equilibrium."""
    bounded = VelocityModel(velocity_model) is VelocityModel.BOUNDED
    alpha = 0.25 if bounded else a / SQRT2PI
    A = np.array([[alpha, 0.5], _constraint_row(constraint, a, 2)])
    (rho, q), res = _solve_small(A, np.array([q_plus_in, far]))
    if bounded:
        rho_out, q_out = 0.5 * rho - 0.75 * q, -0.25 * rho + 0.5 * q
    else:
        rho_out, q_out = 0.5 * rho - q / (SQRT2PI * a), 0.5 * q - a * rho / SQRT2PI
    return HalfSpaceAsymptotics(rho, q, None, rho_out, q_out, res)


def fullmoment_halfspace(rho_plus_in: float, far: float, a: float, velocity_model="bounded",
                         constraint: str = "riemann") -> HalfSpaceAsymptotics:
    """Ingoing half-range mass of the far-field equilibrium equals the given one."""
    bounded = VelocityModel(velocity_model) is VelocityModel.BOUNDED
    kq = 0.75 if bounded else 1.0 / (SQRT2PI * a)
    A = np.array([[0.5, kq], _constraint_row(constraint, a, 2)])
    (rho, q), res = _solve_small(A, np.array([rho_plus_in, far]))
    return HalfSpaceAsymptotics(rho, q, None, 0.5 * rho - kq * q,
                                (-0.25 * rho + 0.5 * q) if bounded else (0.5 * q - a * rho / SQRT2PI), res)


def _halfmoment(rho_plus_in, q_plus_in, far, a, velocity_model, constraint) -> HalfSpaceAsymptotics:
    q_in, rho_in, q_out, rho_out = halfmoment_rows(a, velocity_model)
    A = np.array([q_in, rho_in, _constraint_row(constraint, a, 3)])
    x, res = _solve_small(A, np.array([q_plus_in, rho_plus_in, far]))
    return HalfSpaceAsymptotics(x[0], x[1], x[2], float(rho_out @ x), float(q_out @ x), res)


def halfmoment_halfspace_bounded(rho_plus_in: float, q_plus_in: float, far: float, a: float = A_BOUNDED,
                                 constraint: str = "riemann") -> HalfSpaceAsymptotics:
    """Layer solution of the bounded half-moment system; gamma multiplies exp(-2x/a)."""
    return _halfmoment(rho_plus_in, q_plus_in, far, a, "bounded", constraint)


def halfmoment_halfspace_unbounded(rho_plus_in: float, q_plus_in: float, far: float, a: float = 1.0,
                                   constraint: str = "riemann") -> HalfSpaceAsymptotics:
    """Layer solution of the Gaussian-weighted half-moment system; gamma multiplies exp(lambda x)."""
    return _halfmoment(rho_plus_in, q_plus_in, far, a, "unbounded", constraint)


def layer_decay_rate(a: float, velocity_model="bounded") -> float:
    """Exponent of the bounded layer mode, negative."""
    if VelocityModel(velocity_model) is VelocityModel.BOUNDED:
        return -2.0 / a
    return (math.pi - 2.0) / (a * (math.pi - 4.0))


# -- discrete-ordinates oracle ------------------------------------------------

@dataclass
class NumericHalfSpace:
    x: np.ndarray
    grid: VelocityGrid
    rho: np.ndarray
    q: np.ndarray
    outgoing: np.ndarray
    asymptotics: HalfSpaceAsymptotics
    iterations: int
    residual: float
    slope: float
    flux_spread: float
    state: np.ndarray = field(repr=False, default=None)
    face_flux: np.ndarray = field(repr=False, default=None)

    @property
    def extrapolation_length(self) -> float:
        return 0.5 * self.asymptotics.rho_inf


class _Sweeper:
    """Step-characteristic transport sweeps for v phi_x = E(rho, q, v) - phi on [0, L]."""

    def __init__(self, length: float, nx: int, grid: VelocityGrid):
        self.nx = nx
        self.dx = length / nx
        self.grid = grid
        v = grid.v
        self.vp = v[grid.positive]
        tau = self.dx / self.vp
        self.T = np.exp(-tau)
        self.G = -np.expm1(-tau) / tau
        self.tail = slice(nx - max(1, nx // 10), nx)

    def _sweep(self, S: np.ndarray, inflow: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One direction; columns of S are ordered like self.vp, rows along the sweep."""
        avg = np.empty_like(S)
        faces = np.empty((S.shape[0] + 1, S.shape[1]))
        faces[0] = inflow
        for k in range(S.shape[1]):
            T = self.T[k]
            faces[1:, k] = lfilter([1.0 - T], [1.0, -T], S[:, k], zi=[T * inflow[k]])[0]
            avg[:, k] = S[:, k] + (faces[:-1, k] - S[:, k]) * self.G[k]
        return avg, faces

    def transport(self, rho, q, k_in, far_inflow):
        """Cell averages (nx, nv), face values (nx + 1, nv) and the trace phi(0, v<0)."""
        g = self.grid
        S = equilibrium(rho, q, g)
        avg_p, faces_p = self._sweep(S[:, g.positive], k_in)
        # v<0 columns reversed so that |v| ascends, rows reversed to sweep from x = L
        Sn = S[::-1, g.negative][:, ::-1]
        avg_n, faces_n = self._sweep(Sn, far_inflow[::-1])
        phi = np.empty_like(S)
        phi[:, g.positive] = avg_p
        phi[:, g.negative] = avg_n[::-1, ::-1]
        faces = np.empty((rho.size + 1, g.n))
        faces[:, g.positive] = faces_p
        faces[:, g.negative] = faces_n[::-1, ::-1]
        return phi, faces


def _as_profile(k, grid: VelocityGrid) -> np.ndarray:
    vp = grid.v[grid.positive]
    if callable(k):
        return np.asarray(k(vp), dtype=float) * np.ones_like(vp)
    k = np.asarray(k, dtype=float)
    if k.shape != vp.shape:
        raise ValueError(f"ingoing profile needs {vp.size} values, got {k.shape}")
    return k


def kinetic_halfspace_numeric(k, constraint: str = "flux", value: float = 0.0, a: float = A_BOUNDED,
                              length: float = 20.0, nx: int = 2000, nv: int = 400, tol: float = 1e-11,
                              maxiter: int = 2000, method: str = "gmres", x0=None,
                              slope_tol: float = 1e-6) -> NumericHalfSpace:
    """Stationary bounded-velocity half-space problem by (Krylov-accelerated) source iteration.

    ``k`` is the ingoing distribution at x = 0 for v > 0 (callable or array on
    the positive velocity cells).  The far field is imposed through the
    equilibrium inflow at x = L built from the current far density and the
    requested constraint.  ``method="source"`` runs plain source iteration
    and stops when successive far-field densities differ by less than ``tol``.
    """
    grid = VelocityGrid(nv)
    sw = _Sweeper(length, nx, grid)
    kin = _as_profile(k, grid)
    neg = grid.negative

    def far_state(rho):
        rf = float(rho[sw.tail].mean())
        return rf, (value + a * rf if constraint == "riemann" else value)

    if constraint not in ("flux", "riemann"):
        raise ValueError(f"unknown far-field constraint {constraint!r}")

    def apply(u, k_in, affine=True):
        rho, q = u[:nx], u[nx:]
        rf = float(rho[sw.tail].mean())
        if affine:
            qf = value + a * rf if constraint == "riemann" else value
        else:
            qf = a * rf if constraint == "riemann" else 0.0
        far_in = equilibrium(rf, qf, grid)[neg]
        phi, faces = sw.transport(rho, q, k_in, far_in)
        r, qq = moments(phi, grid)
        return np.concatenate([r, qq]), phi, faces

    u = np.zeros(2 * nx) if x0 is None else np.array(x0, dtype=float)
    iterations = 0
    if method == "gmres":
        b = apply(np.zeros(2 * nx), kin)[0]
        op = LinearOperator((2 * nx, 2 * nx), matvec=lambda w: w - apply(w, np.zeros_like(kin), affine=False)[0],
                            dtype=float)
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        u, info = gmres(op, b, x0=u, rtol=tol, atol=0.0, restart=200, maxiter=maxiter, callback=cb,
                        callback_type="pr_norm")
        iterations = counter["n"]
        if info != 0:
            raise HalfSpaceError(f"GMRES did not converge (info={info})")
    elif method == "source":
        prev = None
        for iterations in range(1, maxiter + 1):
            u = apply(u, kin)[0]
            rf = float(u[:nx][sw.tail].mean())
            if prev is not None and abs(rf - prev) < tol:
                break
            prev = rf
        else:
            raise HalfSpaceError(f"source iteration did not converge in {maxiter} sweeps")
    else:
        raise ValueError(f"unknown method {method!r}")

    new, phi, faces = apply(u, kin)
    out = faces[0, neg]
    face_flux = moments(faces, grid)[1]
    residual = float(np.abs(new - u).max())
    rho, q = new[:nx], new[nx:]
    x = (np.arange(nx) + 0.5) * sw.dx
    tail = sw.tail
    slope = float(np.polyfit(x[tail], rho[tail], 1)[0]) if tail.stop - tail.start > 1 else 0.0
    if abs(slope) > slope_tol:
        warnings.warn(f"half-space domain may be too short: far-field density slope {slope:.2e}", HalfSpaceWarning,
                      stacklevel=2)
    vn = grid.v[neg]
    rho_inf, _ = far_state(rho)
    asym = HalfSpaceAsymptotics(
        rho_inf=rho_inf, q_inf=float(face_flux.mean()), gamma=None,
        rho_out=float(out.sum() * grid.dv), q_out=float((vn * out).sum() * grid.dv), residual=residual)
    return NumericHalfSpace(x, grid, rho, q, out, asym, iterations, residual, slope,
                            float(face_flux.max() - face_flux.min()), new, face_flux)


# -- node fixpoint ------------------------------------------------------------

@dataclass
class AlbedoFixpoint:
    edges: list[HalfSpaceAsymptotics]
    ingoing: np.ndarray
    iterations: int
    change: float
    fitted_K: float | None

    @property
    def rho_inf(self) -> np.ndarray:
        return np.array([e.rho_inf for e in self.edges])

    @property
    def q_inf(self) -> np.ndarray:
        return np.array([e.q_inf for e in self.edges])


def albedo_fixpoint_node(C, r1, a: float = A_BOUNDED, length: float = 20.0, nx: int = 1000, nv: int = 200,
                         tol: float = 1e-8, maxiter: int = 500, inner_tol: float = 1e-11) -> AlbedoFixpoint:
    """Coupled half-space problems at a node: k_i(v) = sum_j c_ij A_j[k_j](-v).

    Each Albedo application is one numeric half-space solve with far-field
    condition q_inf - a rho_inf = r1_i.  Stops when the ingoing profiles
    change by less than ``tol`` in L1(v).
    """
    C = np.asarray(C, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    n = r1.size
    if C.shape != (n, n):
        raise ValueError("coupling matrix and r1 sizes disagree")
    grid = VelocityGrid(nv)
    vp = grid.v[grid.positive]
    # start from the equilibrium half ranges of the q = 0 states carrying r1
    k = np.array([np.full(vp.size, -ri / (2.0 * a)) for ri in r1])
    warm = [None] * n
    change = np.inf
    sols = []
    for it in range(1, maxiter + 1):
        sols = []
        outs = []
        for i in range(n):
            s = kinetic_halfspace_numeric(k[i], "riemann", r1[i], a, length, nx, nv, tol=inner_tol, x0=warm[i])
            warm[i] = s.state
            sols.append(s)
            outs.append(s.outgoing[::-1])  # A_j[k_j](-v) on ascending positive v
        k_new = C @ np.array(outs)
        change = float(np.abs(k_new - k).sum(axis=1).max() * grid.dv)
        k = k_new
        if change < tol:
            break
    else:
        raise HalfSpaceError(f"Albedo fixpoint did not converge in {maxiter} iterations (last change {change:.2e})")
    edges = [s.asymptotics for s in sols]
    q = np.array([e.q_inf for e in edges])
    K = fitted_invariant_coefficient([e.rho_inf for e in edges], q) if np.ptp(q) > 1e-12 else None
    return AlbedoFixpoint(edges, k, it, change, K)


# -- extrapolation length ----------------------------------------------------

def extrapolation_length(method: str, velocity_model="bounded", a: float | None = None, **grid) -> float:
    """Far-field value for the ingoing profile k = v (bounded) or k = v M (unbounded) at zero net flux.

    Bounded returns rho_inf / 2, unbounded returns rho_inf.
    """
    vm = VelocityModel(velocity_model)
    if vm is VelocityModel.BOUNDED:
        a = A_BOUNDED if a is None else a
        rho_plus, q_plus = 0.5, 1.0 / 3.0
        if method == "maxwell":
            return 0.5 * maxwell_halfspace(q_plus, 0.0, a, vm, "flux").rho_inf
        if method == "halfmoment":
            return 0.5 * halfmoment_halfspace_bounded(rho_plus, q_plus, 0.0, a, "flux").rho_inf
        if method == "numeric":
            return kinetic_halfspace_numeric(lambda v: v, "flux", 0.0, a, **grid).extrapolation_length
    else:
        a = 1.0 if a is None else a
        # half moments of v M(v) over v > 0
        rho_plus, q_plus = a / SQRT2PI, 0.5 * a * a
        if method == "maxwell":
            return maxwell_halfspace(q_plus, 0.0, a, vm, "flux").rho_inf
        if method == "halfmoment":
            return halfmoment_halfspace_unbounded(rho_plus, q_plus, 0.0, a, "flux").rho_inf
        if method == "numeric":
            raise ValueError("the numeric half-space solver covers bounded velocities only")
    raise ValueError(f"unknown extrapolation method {method!r}")
