"""Entropy, mass, node entropy flux and distances between network fields.

Fields are mappings ``edge id -> (rho, q)`` of cell averages.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np


def entropy(fields: Mapping[int, tuple[np.ndarray, np.ndarray]], dx: Mapping[int, float], a: float) -> float:
    """Total quadratic entropy sum_i 1/2 int (rho^2 + q^2 / a^2) dx, midpoint rule."""
    total = 0.0
    for eid, (rho, q) in fields.items():
        rho = np.asarray(rho, dtype=float)
        q = np.asarray(q, dtype=float)
        total += 0.5 * float(np.sum(rho * rho + q * q / (a * a))) * dx[eid]
    return total


def total_mass(fields: Mapping[int, tuple[np.ndarray, np.ndarray]], dx: Mapping[int, float]) -> float:
    return sum(float(np.sum(rho)) * dx[eid] for eid, (rho, _) in fields.items())


def node_entropy_flux(solve) -> float:
    """sum_i rho_i q_i of a node state in the node frame (entropy flux into the edges)."""
    return float(np.dot(solve.rho, solve.q))


def l1_distance(A: Mapping[int, tuple[np.ndarray, np.ndarray]], B: Mapping[int, tuple[np.ndarray, np.ndarray]],
                dx: Mapping[int, float], components: str = "rho,q") -> float:
    """sum over edges and cells of (|rho_A - rho_B| + |q_A - q_B|) dx.

    ``components`` selects which of ``rho`` and ``q`` enter the sum.
    """
    if set(A) != set(B):
        raise ValueError("fields live on different edge sets")
    use = [c.strip() for c in components.split(",")]
    idx = [{"rho": 0, "q": 1}[c] for c in use]
    total = 0.0
    for eid in A:
        for k in idx:
            ua = np.asarray(A[eid][k], dtype=float)
            ub = np.asarray(B[eid][k], dtype=float)
            if ua.shape != ub.shape:
                raise ValueError(f"grid mismatch on edge {eid}: {ua.shape} vs {ub.shape}")
            total += float(np.sum(np.abs(ua - ub))) * dx[eid]
    return total
