"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Joint data/program operators always use the ordering ``data (x) program``.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence, Union

import numpy as np

#: Shared tolerance for "equals" checks (max-norm).
TOL = 1e-10

#: Eigenvalues in ``[-PSD_SLACK, 0)`` are treated as numerical zeros.
PSD_SLACK = 1e-10


class DimensionPair(NamedTuple):
    """Register sizes: ``d`` for data, ``N`` for program."""

    d: int
    N: int


IntoDims = Union[DimensionPair, Sequence[int]]


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a 2-d ``complex128`` array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {a.shape}")
    return a


def max_norm(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_unitary(m, atol: float = TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_norm(m.conj().T @ m - np.eye(m.shape[0])) <= atol


def is_hermitian(m, atol: float = TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and max_norm(m - m.conj().T) <= atol


def is_density(m, atol: float = TOL) -> bool:
    """Hermitian, PSD (down to ``-atol``) and unit trace."""
    if not is_hermitian(m, atol):
        return False
    m = np.asarray(m, dtype=complex)
    if abs(np.trace(m) - 1) > atol:
        return False
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min()) >= -atol


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry ``(i*p + k, j*q + l)`` is ``a[i, j] * b[k, l]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def _dims(dims: IntoDims) -> DimensionPair:
    d, n = dims
    return DimensionPair(int(d), int(n))


def partial_trace(m, dims: IntoDims, keep: str = "data") -> np.ndarray:
    """Trace out one register of an operator on ``data (x) program``.

    ``keep`` is ``"data"`` or ``"program"`` (``0``/``1`` are accepted too).
    """
    d, n = _dims(dims)
    m = as_matrix(m)
    if m.shape != (d * n, d * n):
        raise ValueError(f"operator of shape {m.shape} does not act on {d}x{n} registers")
    t = m.reshape(d, n, d, n)
    if keep in ("data", 0):
        return np.einsum("ipjp->ij", t)
    if keep in ("program", 1):
        return np.einsum("pipj->ij", t)
    raise ValueError(f"keep must be 'data' or 'program', got {keep!r}")


def psd_sqrt(m, slack: float = PSD_SLACK) -> np.ndarray:
    """Square root of a Hermitian PSD matrix via eigendecomposition."""
    m = as_matrix(m)
    if not is_hermitian(m, max(slack, TOL)):
        raise ValueError("psd_sqrt requires a Hermitian matrix")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < -slack:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def state_fidelity(rho, sigma) -> float:
    """``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``, clamped to [0, 1].

    Evaluated as the squared trace norm of ``sqrt(rho) sqrt(sigma)``, which is
    symmetric in its arguments and avoids square roots of rounding noise for
    rank-deficient states.
    """
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    prod = _sqrt_denoised(rho) @ _sqrt_denoised(sigma)
    f = float(np.sum(np.linalg.svd(prod, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def _sqrt_denoised(m: np.ndarray, rel: float = 1e-14) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < -PSD_SLACK:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.where(w > rel * max(w.max(), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def max_entangled(d: int) -> np.ndarray:
    """``(1/sqrt(d)) sum_j |j>|j>`` as a vector of length ``d**2``."""
    if d < 2:
        raise ValueError("max_entangled needs d >= 2")
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; ``seed`` may be an int or a tuple of ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def haar_unitary(d: int, seed) -> np.ndarray:
    """Haar-distributed unitary from QR of a complex Ginibre matrix (phase-fixed)."""
    g = rng(seed)
    z = (g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))) / np.sqrt(2)
    return _haar_from_ginibre(z)


def haar_unitaries(d: int, count: int, seed) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape ``(count, d, d)``."""
    g = rng(seed)
    z = (g.standard_normal((count, d, d)) + 1j * g.standard_normal((count, d, d))) / np.sqrt(2)
    return _haar_from_ginibre(z)


def random_pure_state(dim: int, seed) -> np.ndarray:
    g = rng(seed)
    v = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, seed, rank: int | None = None) -> np.ndarray:
    """Random density matrix (Ginibre-induced); full rank unless ``rank`` is given."""
    g = rng(seed)
    k = dim if rank is None else rank
    z = g.standard_normal((dim, k)) + 1j * g.standard_normal((dim, k))
    m = z @ z.conj().T
    return m / np.trace(m).real


def equal_up_to_phase(a, b, atol: float = TOL) -> tuple[bool, complex]:
    """Whether ``b = c * a`` with ``|c| = 1``; returns the flag and ``c``."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        return False, 0j
    overlap = np.vdot(a, b)
    norm = np.vdot(a, a).real
    if norm == 0:
        return False, 0j
    c = overlap / norm
    if abs(abs(c) - 1) > atol:
        return False, c
    return max_norm(b - c * a) <= atol, c / abs(c)


def nearest_unitary(m) -> np.ndarray:
    """Unitary polar factor of ``m``."""
    u, _, vh = np.linalg.svd(as_matrix(m))
    return u @ vh


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def axis_operator(axis) -> np.ndarray:
    """``a . sigma`` for a real 3-vector ``a`` (normalized)."""
    a = np.asarray(axis, dtype=float).reshape(3)
    n = np.linalg.norm(a)
    if n == 0:
        raise ValueError("rotation axis must be non-zero")
    a = a / n
    return a[0] * PAULI_X + a[1] * PAULI_Y + a[2] * PAULI_Z


def rotation(phi: float, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """``cos(phi) I + i sin(phi) (a . sigma)``."""
    return np.cos(phi) * PAULI_I + 1j * np.sin(phi) * axis_operator(axis)
