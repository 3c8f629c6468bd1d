"""Independent reference computations used by the tests.

Nothing here calls into ``qproc``: processors are plain numpy arrays on
data (x) program, and every quantity is rebuilt from first principles
(explicit reference systems, explicit state vectors, brute-force search).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def haar(d: int, gen: np.random.Generator) -> np.ndarray:
    z = (gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def choi_fidelity_map(g: np.ndarray, d: int, n: int, u: np.ndarray) -> np.ndarray:
    """Matrix ``L`` with ``F(U, E_xi) = ||L xi||^2`` via an explicit reference copy.

    The processor acts on data; a reference qudit is maximally entangled with
    the data; after G the data+reference pair is projected onto
    ``(U (x) I)|Phi+>``, leaving a vector on the program register.
    """
    phi = np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)  # |Phi+> on data, ref
    psi_u = (np.kron(u, np.eye(d)) @ phi).reshape(d, d)  # [data, ref]
    g4 = g.reshape(d, n, d, n)  # [data_out, prog_out, data_in, prog_in]
    phi_m = phi.reshape(d, d)
    # state after G: out[a, r, p] = sum_{b, q} G[a, p, b, q] phi[b, r] xi[q]
    # L[p, q] = sum_{a, r, b} conj(psi_u[a, r]) G[a, p, b, q] phi[b, r]
    return np.einsum("ar,apbq,br->pq", psi_u.conj(), g4, phi_m)


def fidelity(g, d, n, xi, u) -> float:
    v = choi_fidelity_map(g, d, n, u) @ xi
    return float(np.vdot(v, v).real / np.vdot(xi, xi).real)


def _pure_states(n: int, count: int, gen) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    if n == 2:
        side = int(round(np.sqrt(count)))
        th = np.linspace(0, np.pi, side)
        ph = np.linspace(0, 2 * np.pi, side, endpoint=False)
        t, p = np.meshgrid(th, ph, indexing="ij")
        return np.stack([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)], axis=-1).reshape(-1, 2)
    v = gen.normal(size=(count, n)) + 1j * gen.normal(size=(count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def brute_force_epsilon(g, d, n, u, points: int = 10**6, seed: int = 0, polish: int = 4) -> float:
    """``1 - max_xi F`` over a 10^6-point pure-program grid.

    ``n = 2`` uses a regular Bloch-sphere grid.  For ``n >= 3`` the points are
    uniformly random and the best few are polished by Nelder-Mead, since a
    regular grid in 2n - 2 real dimensions is too coarse at this budget.
    """
    gen = np.random.default_rng(seed)
    lmap = choi_fidelity_map(g, d, n, u)
    xs = _pure_states(n, points, gen)
    vals = np.sum(np.abs(xs @ lmap.T) ** 2, axis=1)
    best = float(vals.max())
    if n >= 3:
        def neg(x):
            v = x[:n] + 1j * x[n:]
            return -float(np.sum(np.abs(lmap @ v) ** 2) / np.vdot(v, v).real)

        for i in np.argsort(vals)[-polish:]:
            x0 = np.concatenate([xs[i].real, xs[i].imag])
            res = minimize(neg, x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000})
            best = max(best, -res.fun)
    return 1.0 - best


def branch(g, d, n, xi, m) -> np.ndarray:
    """``(I (x) <m|) G (I (x) |xi>)`` from the reshaped matrix."""
    return np.einsum("j,ajbq,q->ab", np.conj(m), g.reshape(d, n, d, n), xi)


def success(g, d, n, xi, basis_rows, u, tol=1e-8) -> float:
    """Probability of the branches proportional to ``u`` (and data independent)."""
    total = 0.0
    for m in basis_rows:
        k = branch(g, d, n, xi, m)
        p = np.trace(k.conj().T @ k).real / d
        if p < 1e-12 or np.abs(k.conj().T @ k - p * np.eye(d)).max() > 1e-9:
            continue
        c = np.trace(u.conj().T @ k) / d
        if np.abs(k - c * u).max() < tol and abs(abs(c) ** 2 - p) < tol:
            total += p
    return float(total)


def cnot_step(n_qubits: int, controls, target: int) -> np.ndarray:
    """Multi-controlled X written with bit strings (qubit 0 is the leftmost bit)."""
    dim = 2**n_qubits
    m = np.zeros((dim, dim))
    for s in range(dim):
        bits = list(format(s, f"0{n_qubits}b"))
        if all(bits[c] == "1" for c in controls):
            bits[target] = "0" if bits[target] == "1" else "1"
        m[int("".join(bits), 2), s] = 1
    return m


def vmc_tracker(n: int, phi: float):
    """Round-by-round statevector run of the Toffoli cascade.

    Data qubit plus a reference qubit (for the Choi state) plus ``n`` program
    qubits.  Returns the exact success as a Fraction, the numeric total
    and the worst conditional process fidelity against ``exp(-i phi Z)``.
    """
    target = np.diag([np.exp(-1j * phi), np.exp(1j * phi)])
    qubits = n + 1  # data + program (reference handled separately)
    state = np.zeros((2, 2) + (2,) * n, dtype=complex)  # [data, ref, progs...]
    prog = [np.array([np.exp(-1j * 2**k * phi), np.exp(1j * 2**k * phi)]) / np.sqrt(2) for k in range(n)]
    for a in range(2):
        amp = np.ones(1, dtype=complex)
        for p in prog:
            amp = np.kron(amp, p)
        state[a, a] = amp.reshape((2,) * n) / np.sqrt(2)
    for k in range(1, n + 1):
        gate = cnot_step(qubits, list(range(k)), k)
        # move ref aside: act on [data, progs...]
        flat = np.moveaxis(state, 1, -1).reshape(2**qubits, 2)
        flat = gate @ flat
        state = np.moveaxis(flat.reshape((2,) * qubits + (2,)), -1, 1)
    psi_target = np.kron(target, I2) @ (np.eye(2).reshape(4) / np.sqrt(2))
    wins, total, worst_fid = 0, 0.0, 1.0
    for s in range(2**n):
        bits = tuple(int(b) for b in format(s, f"0{n}b"))
        v = state[(slice(None), slice(None)) + bits].reshape(4)
        p = float(np.vdot(v, v).real)
        if all(bits):
            continue  # the uncorrected branch
        wins += 1
        total += p
        worst_fid = min(worst_fid, float(abs(np.vdot(psi_target, v)) ** 2 / p))
    return Fraction(wins, 2**n), total, worst_fid


def weyl(d: int, a: int, b: int) -> np.ndarray:
    u = np.zeros((d, d), dtype=complex)
    for r in range(d):
        u[(r - b) % d, r] = np.exp(2j * np.pi * a * r / d)
    return u
