"""Qubit rotation groups on U-processors: optimal angle grids and closed forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg as la
from .metrics import U1_GRID, epsilon_avg_u1, epsilon_worst_u1
from .probabilistic import u1_success_bounds
from .zoo import u1_grid_processor, u_processor

Z_AXIS = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class U1Report:
    N: int
    epsilon_worst: float
    epsilon_avg: float
    p_bound_worst: float
    p_bound_avg: float
    vmc_success: Optional[float] = None
    numeric_worst: Optional[float] = None
    numeric_avg: Optional[float] = None
    asymptotics: dict = field(default_factory=dict)


def optimal_angles(N: int) -> list[float]:
    """``phi_j = (j - 1) pi / N`` for ``j = 1..N``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return [j * np.pi / N for j in range(N)]


def u1_overlap(phi: float, phi_prime: float, axis=Z_AXIS) -> float:
    """``|Tr U_phi^dagger U_phi'|^2`` from the explicit 2x2 matrices."""
    u, v = la.rotation(phi, axis), la.rotation(phi_prime, axis)
    return float(abs(np.trace(u.conj().T @ v)) ** 2)


def worst_error_closed_form(N: int) -> float:
    return float(1 - np.cos(np.pi / (2 * N)) ** 2)


def average_error_closed_form(N: int) -> float:
    return float(0.5 * (1 - N / np.pi * np.sin(np.pi / N)))


def _is_power_of_two(N: int) -> bool:
    return N >= 2 and N & (N - 1) == 0


def u1_report(N: int, numeric: bool = True, grid: int = U1_GRID) -> U1Report:
    """Closed forms for the equally spaced grid, optionally with numeric cross-checks.

    ``vmc_success = 1 - 1/N`` is filled in for ``N = 2^n``; ``asymptotics``
    records the large-``N`` comparison ``(pi/2N)^2`` against ``1/N``.
    """
    bounds = u1_success_bounds(N)
    num_w = num_a = None
    if numeric:
        proc = u1_grid_processor(N)
        num_w = epsilon_worst_u1(proc, grid=grid)
        num_a = epsilon_avg_u1(proc, grid=grid)
    return U1Report(
        N=N,
        epsilon_worst=worst_error_closed_form(N),
        epsilon_avg=average_error_closed_form(N),
        p_bound_worst=bounds["worst"],
        p_bound_avg=bounds["average"],
        vmc_success=1 - 1 / N if _is_power_of_two(N) else None,
        numeric_worst=num_w,
        numeric_avg=num_a,
        asymptotics={"bound_gap": (np.pi / (2 * N)) ** 2, "vmc_gap": 1 / N},
    )


def angle_processor(angles, axis=Z_AXIS):
    return u_processor([la.rotation(phi, axis) for phi in angles], "u1-angles")


def grid_optimality_check(N: int, perturbations: int = 100, seed=0, grid: int = 1024) -> bool:
    """Random angle sets (``phi_1 = 0``) never beat the uniform grid's worst error."""
    if N < 2:
        raise ValueError("N must be at least 2")
    uniform = epsilon_worst_u1(angle_processor(optimal_angles(N)), grid=grid)
    g = la.rng((seed, N))
    for _ in range(perturbations):
        angles = np.concatenate([[0.0], np.sort(g.uniform(0, np.pi, N - 1))])
        if epsilon_worst_u1(angle_processor(angles), grid=grid) < uniform - 1e-9:
            return False
    return True
