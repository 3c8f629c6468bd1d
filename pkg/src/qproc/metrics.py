"""Process fidelity and approximation errors of processors.

For a unitary target ``U`` the fidelity of the channel induced by a program
density ``xi`` is linear in ``xi``: ``F = Tr(xi R_U)``.  The best program is
therefore the top eigenvector of ``R_U`` and ``eps(U) = 1 - lambda_max(R_U)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import linalg as la
from .channels import KrausChannel, Processor, choi, induced_channel

CLAMP_TOL = 1e-8
DEGENERACY_TOL = 1e-9
#: Default node count for U(1) quadrature and grid searches.
U1_GRID = 4096


def _clamp(x: float) -> float:
    if x < -CLAMP_TOL or x > 1 + CLAMP_TOL:
        raise ArithmeticError(f"value {x!r} is outside [0, 1] beyond the clamp tolerance")
    return min(max(float(x), 0.0), 1.0)


@dataclass(frozen=True)
class FidelityReport:
    value: float
    method: str  # "unitary-closed-form" or "choi-general"


@dataclass(frozen=True)
class EpsilonReport:
    epsilon: float
    optimal_program: np.ndarray
    multiplicity: int = 1
    witness_target: Optional[np.ndarray] = None

    @property
    def fidelity(self) -> float:
        return 1.0 - self.epsilon


@dataclass(frozen=True)
class HaarEstimate:
    """Worst and mean error over Haar samples plus an optional analytic witness."""

    value: float
    haar_max: float
    mean: float
    stderr: float
    samples: int
    witness_epsilon: Optional[float] = None
    witness_target: Optional[np.ndarray] = None


@dataclass(frozen=True)
class UniversalityReport:
    universal: bool
    operator_rank: int
    d: int


def process_fidelity_unitary(u, channel: KrausChannel) -> float:
    """``(1/d^2) sum_r |Tr U^dagger A_r|^2``."""
    u = la.as_matrix(u)
    if u.shape != (channel.d, channel.d):
        raise ValueError(f"target of shape {u.shape} does not match channel dimension {channel.d}")
    d = channel.d
    total = sum(abs(np.trace(u.conj().T @ a)) ** 2 for a in channel.operators)
    return _clamp(total / d**2)


def process_fidelity(c1: KrausChannel, c2: KrausChannel) -> float:
    """State fidelity of the two Choi matrices."""
    if c1.d != c2.d:
        raise ValueError(f"dimension mismatch: {c1.d} vs {c2.d}")
    return _clamp(la.state_fidelity(choi(c1), choi(c2)))


def fidelity_report(target, channel: KrausChannel) -> FidelityReport:
    """Fidelity against a unitary (closed form) or against another channel (Choi route)."""
    if isinstance(target, KrausChannel):
        if len(target.minimal()) == 1 and target.trace_preserving:
            u = target.minimal().operators[0]
            if la.is_unitary(u, 1e-9):
                return FidelityReport(process_fidelity_unitary(u, channel), "unitary-closed-form")
        return FidelityReport(process_fidelity(target, channel), "choi-general")
    return FidelityReport(process_fidelity_unitary(target, channel), "unitary-closed-form")


def _overlap_matrix(proc: Processor, targets: np.ndarray) -> np.ndarray:
    """``M[t, r, q] = Tr(U_t^dagger B[r, q])`` for a stack of targets."""
    return np.einsum("tab,rqab->trq", targets.conj(), proc.blocks())


def program_fidelity_operator(proc: Processor, u) -> np.ndarray:
    """PSD ``R_U`` on the program space with ``F(U, E_xi) = Tr(xi R_U)``."""
    u = la.as_matrix(u)
    if u.shape != (proc.d, proc.d):
        raise ValueError(f"target of shape {u.shape} does not match data dimension {proc.d}")
    m = _overlap_matrix(proc, u[None])[0]
    r = m.conj().T @ m / proc.d**2
    return (r + r.conj().T) / 2


def epsilon_of_target(proc: Processor, u) -> EpsilonReport:
    """Exact ``min_xi (1 - F(U, E_xi))`` and an optimal pure program.

    Degenerate top eigenvalues are reported through ``multiplicity``; the
    program returned is the eigensolver's last top eigenvector.
    """
    r = program_fidelity_operator(proc, u)
    w, v = np.linalg.eigh(r)
    top = w[-1]
    mult = int(np.sum(w >= top - DEGENERACY_TOL))
    return EpsilonReport(_clamp(1.0 - top), v[:, -1], mult)


def _diagonal_blocks(proc: Processor) -> Optional[np.ndarray]:
    """The ``U_j`` of a U-processor (all off-diagonal blocks vanish), else ``None``."""
    b = proc.blocks()
    idx = np.arange(proc.N)
    diag = b[idx, idx].copy()
    b = b.copy()
    b[idx, idx] = 0
    return diag if not b.any() else None


def epsilon_values(proc: Processor, targets, batch: Optional[int] = None) -> np.ndarray:
    """Vectorized ``eps(U)`` for a stack of targets of shape ``(T, d, d)``.

    U-processors use ``eps = 1 - max_j |Tr U^dagger U_j|^2 / d^2`` (``R_U``
    is diagonal); other processors are processed in batches that keep the
    overlap tensor near ``2**22`` entries.
    """
    targets = np.asarray(targets, dtype=complex)
    diag = _diagonal_blocks(proc)
    if diag is not None:
        m = np.einsum("tab,jab->tj", targets.conj(), diag)
        eps = 1.0 - np.max(np.abs(m) ** 2, axis=1) / proc.d**2
    else:
        step = batch or max(1, 2**22 // (proc.N**2 * proc.N))
        parts = []
        for i in range(0, len(targets), step):
            m = _overlap_matrix(proc, targets[i:i + step])
            r = np.einsum("trq,trp->tqp", m.conj(), m) / proc.d**2
            parts.append(1.0 - np.linalg.eigvalsh((r + np.swapaxes(r.conj(), 1, 2)) / 2)[:, -1])
        eps = np.concatenate(parts) if parts else np.zeros(0)
    if eps.size and (eps.min() < -CLAMP_TOL or eps.max() > 1 + CLAMP_TOL):
        raise ArithmeticError("epsilon outside [0, 1] beyond the clamp tolerance")
    return np.clip(eps, 0.0, 1.0)


def _rotations(phis: np.ndarray, axis) -> np.ndarray:
    a = la.axis_operator(axis)
    return np.cos(phis)[:, None, None] * la.PAULI_I + 1j * np.sin(phis)[:, None, None] * a


def epsilon_curve_u1(proc: Processor, phis, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """``eps(U_phi)`` for rotations ``cos(phi) I + i sin(phi) a.sigma``."""
    if proc.d != 2:
        raise ValueError("U(1) rotations are defined for a qubit data register")
    return epsilon_values(proc, _rotations(np.asarray(phis, dtype=float), axis))


def epsilon_worst_u1(proc: Processor, axis=(0.0, 0.0, 1.0), grid: int = U1_GRID,
                     refine: int = 12, zoom: int = 32) -> float:
    """Worst ``eps(U_phi)`` over ``phi`` in ``[0, pi)``.

    A uniform grid of ``grid`` nodes is followed by ``refine`` rounds of
    window zooming (factor ``2/zoom`` each) around the best few nodes, so the
    error of the located maximum shrinks geometrically even at kinks.
    """
    phis = np.arange(grid) * np.pi / grid
    eps = epsilon_curve_u1(proc, phis, axis)
    best = float(eps.max())
    h = np.pi / grid
    for phi0 in phis[np.argsort(eps)[-4:]]:
        centre, width = float(phi0), h
        for _ in range(refine):
            local = centre + np.linspace(-width, width, zoom + 1)
            vals = epsilon_curve_u1(proc, local, axis)
            i = int(np.argmax(vals))
            best = max(best, float(vals[i]))
            centre, width = float(local[i]), 2 * width / zoom
    return best


def epsilon_avg_u1(proc: Processor, axis=(0.0, 0.0, 1.0), grid: int = U1_GRID) -> float:
    """``(1/2pi) int eps(U_phi) dphi`` by the periodic trapezoid rule."""
    phis = np.arange(grid) * 2 * np.pi / grid
    return float(np.mean(epsilon_curve_u1(proc, phis, axis)))


def epsilon_worst_haar(proc: Processor, samples: int, seed, witness=None,
                       batch: int = 4096) -> HaarEstimate:
    """Haar-sample maximum of ``eps(U)`` (a lower bound on the true worst case).

    Samples are drawn in batches keyed by ``(seed, batch_index)`` and
    aggregated in index order, so a given ``(seed, batch)`` pair is reproducible.
    """
    vals = []
    for b, start in enumerate(range(0, samples, batch)):
        count = min(batch, samples - start)
        vals.append(epsilon_values(proc, la.haar_unitaries(proc.d, count, (seed, b))))
    eps = np.concatenate(vals)
    w_eps = None
    if witness is not None:
        w_eps = epsilon_of_target(proc, witness).epsilon
    haar_max = float(eps.max())
    value = haar_max if w_eps is None else max(haar_max, w_eps)
    stderr = float(eps.std(ddof=1) / np.sqrt(len(eps))) if len(eps) > 1 else 0.0
    return HaarEstimate(value, haar_max, float(eps.mean()), stderr, len(eps), w_eps,
                        None if witness is None else la.as_matrix(witness))


def _hermitian_basis(d: int) -> list[np.ndarray]:
    out = []
    for j in range(d):
        for k in range(d):
            h = np.zeros((d, d), dtype=complex)
            if j == k:
                h[j, j] = 1
            elif j < k:
                h[j, k] = h[k, j] = 1
            else:
                h[j, k], h[k, j] = 1j, -1j
            out.append(h)
    return out


def epsilon_worst_search(proc: Processor, restarts: int = 8, seed=0, samples: int = 2048) -> EpsilonReport:
    """Local maximization of ``eps(U)`` started from the best Haar samples.

    Returns the best target found as ``witness_target``; the value is a
    certified lower bound on the worst-case error (it is attained by that target).
    """
    d = proc.d
    starts = la.haar_unitaries(d, samples, (seed, 2**31))
    eps = epsilon_values(proc, starts)
    order = np.argsort(eps)[::-1][:restarts]
    basis = _hermitian_basis(d)

    def target(x, u0):
        return expm(1j * sum(c * h for c, h in zip(x, basis))) @ u0

    best_eps, best_u = -1.0, None
    for idx in order:
        u0 = starts[idx]
        res = minimize(lambda x: -epsilon_values(proc, target(x, u0)[None])[0],
                       np.zeros(len(basis)), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000 * len(basis)})
        u = target(res.x, u0)
        e = epsilon_of_target(proc, u).epsilon
        if e > best_eps:
            best_eps, best_u = e, u
    rep = epsilon_of_target(proc, best_u)
    return EpsilonReport(rep.epsilon, rep.optimal_program, rep.multiplicity, best_u)


def universality_check(proc: Processor, atol: float = 1e-9) -> UniversalityReport:
    """Rank of ``span{A_jk}`` with ``G = sum_jk A_jk (x) |j><k|``; universal iff the rank is ``d^2``."""
    blocks = proc.blocks().reshape(proc.N * proc.N, proc.d * proc.d)
    s = np.linalg.svd(blocks, compute_uv=False)
    rank = int(np.sum(s > atol * max(1.0, s[0])))
    return UniversalityReport(rank == proc.d**2, rank, proc.d)


def universal_lower_bound(d: int) -> float:
    """``1 - 1/d^2``: no universal processor that can contract to ``I/d`` does better."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return 1.0 - 1.0 / d**2


def induced_fidelity(proc: Processor, xi, u) -> float:
    """``F(U, E_xi)`` through the explicit channel (no ``R_U``)."""
    return process_fidelity_unitary(u, induced_channel(proc, xi))
