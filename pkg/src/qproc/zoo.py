"""Concrete processors: CNOT, QID, SWAP, U-processors, U(1) grids and the Toffoli cascade."""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

from . import linalg as la
from .channels import Processor, ProjectiveMeasurement


def generalized_pauli(d: int, a: int, b: int) -> np.ndarray:
    """Weyl operator ``U_ab = sum_r exp(2 pi i a r / d) |r - b><r|``.

    For ``d = 2``: ``(1, 0) -> Z``, ``(0, 1) -> X``, ``(1, 1) -> -iY``.
    """
    if not (0 <= a < d and 0 <= b < d):
        raise ValueError(f"Weyl index ({a}, {b}) out of range for d={d}")
    u = np.zeros((d, d), dtype=complex)
    for r in range(d):
        u[(r - b) % d, r] = np.exp(2j * np.pi * a * r / d)
    return u


def weyl_index(d: int, k: int) -> tuple[int, int]:
    """Flat index ``k = a + d*b`` to ``(a, b)``; for qubits ``k = 0..3`` gives I, Z, X, Y."""
    return k % d, k // d


def weyl_basis(d: int) -> list[np.ndarray]:
    return [generalized_pauli(d, *weyl_index(d, k)) for k in range(d * d)]


def u_processor(unitaries: Sequence, label: str = "uproc") -> Processor:
    """``G = sum_j U_j (x) |j><j|``."""
    mats = [la.as_matrix(u) for u in unitaries]
    if not mats:
        raise ValueError("a U-processor needs at least one unitary")
    d = mats[0].shape[0]
    for u in mats:
        if u.shape != (d, d) or not la.is_unitary(u):
            raise ValueError("U-processor entries must be unitaries of equal size")
    n = len(mats)
    g = sum(la.kron(u, la.projector(la.ket(j, n))) for j, u in enumerate(mats))
    return Processor(g, d, n, label)


def cnot_processor() -> Processor:
    """``I (x) |+><+| + Z (x) |-><-|``: a CNOT with the data qubit as control."""
    g = la.kron(la.PAULI_I, la.projector(la.KET_PLUS)) + la.kron(la.PAULI_Z, la.projector(la.KET_MINUS))
    return Processor(g, 2, 2, "cnot")


def qid_program_basis(d: int) -> np.ndarray:
    """Rows ``|theta_k> = (I (x) U_k)|theta_0>`` with ``|theta_0>`` maximally entangled.

    The Weyl operator acts on the second program qudit, which makes the
    uniform outcome of :func:`qid_measurement_basis` an equal-phase sum of
    the ``|theta_k>``.
    """
    theta0 = la.max_entangled(d)
    return np.array([la.kron(np.eye(d), u) @ theta0 for u in weyl_basis(d)])


def qid_processor(d: int) -> Processor:
    """``G = sum_k U_k (x) |theta_k><theta_k|`` with program dimension ``d**2``."""
    thetas = qid_program_basis(d)
    g = sum(la.kron(u, la.projector(t)) for u, t in zip(weyl_basis(d), thetas))
    return Processor(g, d, d * d, f"qid({d})")


def qid_program(unitary) -> np.ndarray:
    """Program ``sum_k alpha_k |theta_k>`` with ``A(Xi) = sum_k alpha_k U_k`` equal to ``unitary``."""
    u = la.as_matrix(unitary)
    d = u.shape[0]
    alphas = np.array([np.trace(w.conj().T @ u) / d for w in weyl_basis(d)])
    v = alphas @ qid_program_basis(d)
    return v / np.linalg.norm(v)


def qid_measurement_basis(d: int) -> ProjectiveMeasurement:
    """Outcomes ``|m_xy> = |-x> (x) (1/sqrt d) sum_r exp(2 pi i y r / d) |r - x>``, label ``(x, y)``.

    With a unitary program ``A`` every outcome has probability ``1/d**2`` and
    outcome ``(x, y)`` realizes ``W A W^dagger`` with ``W = U_{-y, -x}``
    (indices mod ``d``); ``(0, 0)`` realizes ``A`` itself.
    """
    vecs, labels = [], []
    for x in range(d):
        for y in range(d):
            second = np.zeros(d, dtype=complex)
            for r in range(d):
                second[(r - x) % d] += np.exp(2j * np.pi * y * r / d)
            vecs.append(la.kron(la.ket((-x) % d, d)[:, None], second[:, None] / np.sqrt(d)).reshape(-1))
            labels.append((x, y))
    return ProjectiveMeasurement(np.array(vecs), tuple(labels))


def swap_processor(d: int) -> Processor:
    g = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            g[k * d + j, j * d + k] = 1.0
    return Processor(g, d, d, f"swap({d})")


def u1_grid_processor(N: int, axis=(0.0, 0.0, 1.0)) -> Processor:
    """U-processor over rotations ``cos(phi_j) I + i sin(phi_j) a.sigma`` with ``phi_j = j pi / N``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    la.axis_operator(axis)
    angles = [j * np.pi / N for j in range(N)]
    return u_processor([la.rotation(phi, axis) for phi in angles], f"u1({N})")


def multi_controlled_x(n_qubits: int, controls: Sequence[int], target: int) -> np.ndarray:
    """Permutation matrix flipping ``target`` iff all ``controls`` are 1 (0-based, qubit 0 most significant)."""
    dim = 2 ** n_qubits
    g = np.zeros((dim, dim), dtype=complex)
    for s in range(dim):
        bits = [(s >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        if all(bits[c] for c in controls):
            bits[target] ^= 1
        out = int("".join(map(str, bits)), 2)
        g[out, s] = 1.0
    return g


def vmc_gates(n: int) -> list[np.ndarray]:
    """``[T_1, ..., T_n]`` embedded on ``n + 1`` qubits (data first)."""
    return [multi_controlled_x(n + 1, list(range(k)), k) for k in range(1, n + 1)]


def vmc_processor(n: int) -> Processor:
    """Toffoli cascade ``G = T_n ... T_2 T_1``; ``T_k`` controls qubits ``1..k`` and targets ``k + 1``."""
    if not 1 <= n <= 6:
        raise ValueError("vmc_processor supports 1 <= n <= 6")
    gates = vmc_gates(n)
    g = reduce(lambda acc, t: t @ acc, gates, np.eye(2 ** (n + 1), dtype=complex))
    return Processor(g, 2, 2 ** n, f"vmc({n})")


def flat_weyl_witness(d: int) -> np.ndarray:
    """A unitary with ``|Tr(U_k^dagger W)| = 1`` for every Weyl operator ``U_k``.

    Every program of a Weyl-basis U-processor then approximates ``W`` with
    fidelity exactly ``1/d**2``.  Qubits use ``exp(i pi/3 (X+Y+Z)/sqrt 3)``;
    otherwise chirped Fourier matrices ``diag(exp(i pi c s^2 / d)) F`` are
    searched over ``c``.
    """
    if d == 2:
        n = (la.PAULI_X + la.PAULI_Y + la.PAULI_Z) / np.sqrt(3)
        return np.cos(np.pi / 3) * la.PAULI_I + 1j * np.sin(np.pi / 3) * n
    basis = weyl_basis(d)
    f = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d) / np.sqrt(d)
    for c in range(2 * d):
        w = np.diag(np.exp(1j * np.pi * c * np.arange(d) ** 2 / d)) @ f
        if all(abs(abs(np.trace(u.conj().T @ w)) - 1) < 1e-9 for u in basis):
            return w
    raise ValueError(f"no chirped-Fourier witness found for d={d}")
