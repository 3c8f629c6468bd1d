"""Processors, Kraus channels, Choi matrices and the compatibility criterion.

A processor is a unitary ``G`` on ``data (x) program``.  A pure program
``|Xi>`` together with a program basis ``{|j>}`` yields Kraus operators
``A_j = (I (x) <j|) G (I (x) |Xi>)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la

#: Program-density eigenvalues below this are dropped.
EIG_CUTOFF = 1e-12
#: Kraus operators with Frobenius norm below this are dropped from minimal sets.
ZERO_KRAUS = 1e-12
#: Tolerance for channel-level identities (completeness, compatibility).
CHANNEL_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Processor:
    """Unitary ``G`` acting on a ``d``-dimensional data and ``N``-dimensional program register."""

    G: np.ndarray
    d: int
    N: int
    label: str = ""

    def __post_init__(self):
        g = _frozen(self.G)
        if g.shape != (self.d * self.N, self.d * self.N):
            raise ValueError(f"G has shape {g.shape}, expected {(self.d * self.N,) * 2}")
        if self.d < 2 or self.N < 1:
            raise ValueError("need d >= 2 and N >= 1")
        if not la.is_unitary(g):
            raise ValueError(f"processor {self.label!r} is not unitary")
        object.__setattr__(self, "G", g)

    @property
    def dims(self) -> la.DimensionPair:
        return la.DimensionPair(self.d, self.N)

    def blocks(self) -> np.ndarray:
        """``B[j, k] = (I (x) <j|) G (I (x) |k>)``, shape ``(N, N, d, d)``."""
        t = self.G.reshape(self.d, self.N, self.d, self.N)
        return np.transpose(t, (1, 3, 0, 2))


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive map ``rho -> sum_r A_r rho A_r^dagger`` on the data register."""

    operators: tuple
    trace_preserving: bool = True
    d: int = field(init=False)

    def __post_init__(self):
        ops = tuple(_frozen(la.as_matrix(a)) for a in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(a.shape != (d, d) for a in ops):
            raise ValueError("Kraus operators must all be square of the same size")
        s = sum(a.conj().T @ a for a in ops)
        if self.trace_preserving:
            if la.max_norm(s - np.eye(d)) > CHANNEL_TOL:
                raise ValueError("Kraus operators are not trace preserving")
        elif np.linalg.eigvalsh(np.eye(d) - s).min() < -CHANNEL_TOL:
            raise ValueError("Kraus operators are not trace non-increasing")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "d", d)

    def __len__(self):
        return len(self.operators)

    def __call__(self, rho) -> np.ndarray:
        return apply_channel(self, rho)

    def minimal(self) -> "KrausChannel":
        """Equivalent channel with linearly independent (Hilbert-Schmidt orthogonal) operators."""
        stack = np.array([a.reshape(-1) for a in self.operators])
        u, s, vh = np.linalg.svd(stack, full_matrices=False)
        keep = s > ZERO_KRAUS
        if not keep.any():
            ops = [np.zeros((self.d, self.d), dtype=complex)]
        else:
            ops = [(s[i] * vh[i]).reshape(self.d, self.d) for i in np.flatnonzero(keep)]
        return KrausChannel(ops, self.trace_preserving)


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Orthonormal basis of the program space; ``vectors[m]`` is outcome ``labels[m]``."""

    vectors: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        v = _frozen(np.atleast_2d(np.asarray(self.vectors, dtype=complex)))
        gram = v.conj() @ v.T
        if v.shape[0] != v.shape[1] or la.max_norm(gram - np.eye(v.shape[0])) > la.TOL:
            raise ValueError("measurement vectors do not form an orthonormal basis")
        labels = tuple(self.labels) if self.labels else tuple(range(v.shape[0]))
        if len(labels) != v.shape[0]:
            raise ValueError("one label per measurement vector is required")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def computational(cls, dim: int) -> "ProjectiveMeasurement":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def from_unitary(cls, u, labels=()) -> "ProjectiveMeasurement":
        """Outcome vectors are the columns of ``u``."""
        return cls(la.as_matrix(u).T, labels)


def _basis_rows(basis, dim: int) -> np.ndarray:
    if basis is None:
        return np.eye(dim, dtype=complex)
    if isinstance(basis, ProjectiveMeasurement):
        return basis.vectors
    b = np.atleast_2d(np.asarray(basis, dtype=complex))
    if b.shape != (dim, dim) or la.max_norm(b.conj() @ b.T - np.eye(dim)) > la.TOL:
        raise ValueError("program basis is not orthonormal")
    return b


def _program_vector(xi, dim: int) -> np.ndarray:
    v = np.asarray(xi, dtype=complex).reshape(-1)
    if v.shape != (dim,):
        raise ValueError(f"program vector has length {v.size}, expected {dim}")
    if abs(np.linalg.norm(v) - 1) > la.TOL:
        raise ValueError("program vector is not normalized")
    return v


def branch_operators(proc: Processor, xi, basis=None) -> np.ndarray:
    """Stack of ``(I (x) <b_j|) G (I (x) |xi>)`` for each basis row ``b_j``; shape ``(len, d, d)``."""
    v = _program_vector(xi, proc.N)
    rows = _basis_rows(basis, proc.N)
    applied = np.einsum("jkab,k->jab", proc.blocks(), v)
    return np.einsum("mj,jab->mab", rows.conj(), applied)


def kraus_from_pure_program(proc: Processor, xi, basis=None) -> KrausChannel:
    """Aligned Kraus set of a pure program; zero operators are kept.

    ``basis`` holds the program basis as rows (default: computational).
    """
    return KrausChannel(list(branch_operators(proc, xi, basis)))


def induced_channel(proc: Processor, xi) -> KrausChannel:
    """Channel ``rho -> Tr_p G (rho (x) xi) G^dagger`` in minimal Kraus form.

    ``xi`` may be a density matrix or a pure program vector.
    """
    xi = np.asarray(xi, dtype=complex)
    if xi.ndim == 1:
        return kraus_from_pure_program(proc, xi).minimal()
    if xi.shape != (proc.N, proc.N) or not la.is_density(xi, 1e-9):
        raise ValueError("program state is not a valid density matrix")
    w, v = np.linalg.eigh((xi + xi.conj().T) / 2)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > EIG_CUTOFF:
            ops.extend(np.sqrt(lam) * branch_operators(proc, vec))
    return KrausChannel(ops).minimal()


def apply_channel(channel: KrausChannel, rho) -> np.ndarray:
    rho = la.as_matrix(rho)
    if rho.shape != (channel.d, channel.d):
        raise ValueError(f"state of shape {rho.shape} does not match channel dimension {channel.d}")
    return sum(a @ rho @ a.conj().T for a in channel.operators)


def apply_processor(proc: Processor, rho, xi) -> np.ndarray:
    """Direct route: ``Tr_p G (rho (x) xi) G^dagger``."""
    xi = np.asarray(xi, dtype=complex)
    if xi.ndim == 1:
        xi = la.projector(xi)
    joint = proc.G @ la.kron(rho, xi) @ proc.G.conj().T
    return la.partial_trace(joint, proc.dims, keep="data")


def choi(channel: KrausChannel) -> np.ndarray:
    """``(E (x) I)[|psi+><psi+|]``."""
    d = channel.d
    vecs = np.array([a.reshape(-1) for a in channel.operators]) / np.sqrt(d)
    return vecs.T @ vecs.conj()


def unitary_channel(u) -> KrausChannel:
    return KrausChannel([la.as_matrix(u)])


def compatibility_constant(e: KrausChannel | Sequence, f: KrausChannel | Sequence,
                           atol: float = CHANNEL_TOL) -> complex | None:
    """Constant ``c`` with ``sum_j E_j^dagger F_j = c I``, or ``None`` if no such ``c``.

    The two Kraus lists must be aligned on a common program basis; the shorter
    list is padded with zero operators.
    """
    e_ops = list(e.operators if isinstance(e, KrausChannel) else e)
    f_ops = list(f.operators if isinstance(f, KrausChannel) else f)
    d = la.as_matrix(e_ops[0]).shape[0]
    if any(la.as_matrix(a).shape != (d, d) for a in e_ops + f_ops):
        raise ValueError("Kraus operators of both channels must share one dimension")
    zero = np.zeros((d, d), dtype=complex)
    n = max(len(e_ops), len(f_ops))
    e_ops += [zero] * (n - len(e_ops))
    f_ops += [zero] * (n - len(f_ops))
    s = sum(la.as_matrix(a).conj().T @ la.as_matrix(b) for a, b in zip(e_ops, f_ops))
    c = complex(np.trace(s) / d)
    if la.max_norm(s - c * np.eye(d)) > atol:
        return None
    return c


def program_compatibility(proc: Processor, xi_e, xi_f, basis=None) -> tuple[complex | None, complex]:
    """Aligned check for two pure programs of one processor.

    Returns ``(c, overlap)`` where ``c`` comes from the Kraus sets and
    ``overlap = <xi_e|xi_f>``; for a valid processor they coincide.
    """
    e = kraus_from_pure_program(proc, xi_e, basis)
    f = kraus_from_pure_program(proc, xi_f, basis)
    overlap = complex(np.vdot(np.asarray(xi_e, dtype=complex), np.asarray(xi_f, dtype=complex)))
    return compatibility_constant(e, f), overlap


def unitary_program_dimension(unitaries: Sequence, atol: float = CHANNEL_TOL) -> int:
    """Number of classes of unitaries equal up to a global phase.

    Distinct classes need mutually orthogonal programs, so this is the
    smallest program dimension that hosts all of them deterministically.
    """
    mats = [la.as_matrix(u) for u in unitaries]
    if not mats:
        return 0
    d = mats[0].shape[0]
    for u in mats:
        if u.shape != (d, d) or not la.is_unitary(u, atol):
            raise ValueError("all inputs must be unitaries of one dimension")
    reps: list[np.ndarray] = []
    for u in mats:
        if not any(compatibility_constant([r], [u], atol) is not None for r in reps):
            reps.append(u)
    return len(reps)
