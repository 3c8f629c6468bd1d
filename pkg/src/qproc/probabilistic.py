"""Measurement-assisted processors: post-selected branches and success probabilities.

Measuring the program register in an orthonormal basis ``{|m>}`` after the
processor splits the induced channel into branches with operators
``K_m = (I (x) <m|) G (I (x) |Xi>)``.  A branch is a quantum operation only
when ``K_m^dagger K_m = p_m I`` (its probability does not depend on the data);
it realizes a unitary ``U`` when ``K_m = e^{i alpha} sqrt(p_m) U``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm, null_space
from scipy.optimize import minimize

from . import linalg as la
from .channels import KrausChannel, Processor, ProjectiveMeasurement, branch_operators
from .metrics import _hermitian_basis, epsilon_of_target, process_fidelity_unitary
from .zoo import vmc_processor

BRANCH_TOL = 1e-9
MATCH_TOL = 1e-8
#: Probabilities below this are treated as impossible outcomes.
ZERO_PROB = 1e-12


@dataclass(frozen=True)
class BranchReport:
    outcome: object
    kraus: KrausChannel
    probability: Optional[float]  # None: depends on the data state
    realized: Optional[np.ndarray] = None
    matches_target: Optional[bool] = None
    phase: Optional[complex] = None

    @property
    def data_dependent(self) -> bool:
        return self.probability is None


@dataclass(frozen=True)
class InequalityReport:
    p_error: float
    epsilon: float
    holds: bool
    gap: float


@dataclass(frozen=True)
class CnotEtaResult:
    phi: float
    p_success: float
    degenerate: bool
    realized: Optional[np.ndarray]


@dataclass(frozen=True)
class VMCResult:
    n: int
    phi: float
    p_success: float
    p_success_exact: Fraction
    conditional_fidelity: float
    success_outcomes: int


@dataclass(frozen=True)
class SuccessSearchResult:
    """Best verified success probability found; a lower bound on the optimum."""

    p_success: float
    program: np.ndarray
    measurement: ProjectiveMeasurement


def _classify(k: np.ndarray, label, target) -> BranchReport:
    d = k.shape[0]
    ktk = k.conj().T @ k
    p = float(np.trace(ktk).real / d)
    kraus = KrausChannel([k], trace_preserving=False)
    if la.max_norm(ktk - p * np.eye(d)) > BRANCH_TOL:
        return BranchReport(label, kraus, None)
    if p <= ZERO_PROB:
        return BranchReport(label, kraus, p, None, False if target is not None else None)
    realized = k / np.sqrt(p)
    if target is None:
        return BranchReport(label, kraus, p, realized)
    ok, phase = la.equal_up_to_phase(la.as_matrix(target), realized, MATCH_TOL)
    return BranchReport(label, kraus, p, realized, ok, phase if ok else None)


def branches(proc: Processor, xi, measurement: ProjectiveMeasurement, target=None) -> list[BranchReport]:
    """One report per measurement outcome; ``target`` (optional) is checked on each branch."""
    if measurement.dim != proc.N:
        raise ValueError(f"measurement acts on dimension {measurement.dim}, program has {proc.N}")
    ops = branch_operators(proc, xi, measurement.vectors)
    return [_classify(k, label, target) for k, label in zip(ops, measurement.labels)]


def success_probability(proc: Processor, measurement: ProjectiveMeasurement, xi, u) -> float:
    """Total probability of the branches that realize ``u`` up to a global phase."""
    return float(sum(b.probability for b in branches(proc, xi, measurement, u) if b.matches_target))


def error_epsilon_inequality(proc: Processor, measurement: ProjectiveMeasurement, xi, u,
                             atol: float = MATCH_TOL) -> InequalityReport:
    """Compare ``P_error = 1 - P_success`` with the approximation error ``eps(U)``."""
    p_err = 1.0 - success_probability(proc, measurement, xi, u)
    eps = epsilon_of_target(proc, u).epsilon
    return InequalityReport(p_err, eps, p_err >= eps - atol, p_err - eps)


# -- CNOT processor with a rotated program measurement -------------------------------

def cnot_eta_measurement(eta: float) -> ProjectiveMeasurement:
    """Outcome 0: ``cos(eta)|+> + sin(eta)|->``; outcome 1 is its orthogonal partner."""
    m0 = np.cos(eta) * la.KET_PLUS + np.sin(eta) * la.KET_MINUS
    m1 = -np.sin(eta) * la.KET_PLUS + np.cos(eta) * la.KET_MINUS
    return ProjectiveMeasurement(np.array([m0, m1]))


def cnot_eta_program(xi_angle: float) -> np.ndarray:
    """``cos(xi)|+> + i sin(xi)|->``."""
    return np.cos(xi_angle) * la.KET_PLUS + 1j * np.sin(xi_angle) * la.KET_MINUS


def is_degenerate_eta(eta: float, atol: float = 1e-12) -> bool:
    k = eta / (np.pi / 2)
    return abs(k - round(k)) * (np.pi / 2) <= atol


def cnot_eta_analysis(eta: float, xi_angle: float) -> CnotEtaResult:
    """Rotation realized on outcome 0 and its probability.

    ``p = cos^2(xi) cos^2(eta) + sin^2(xi) sin^2(eta)`` and
    ``phi = arccos(cos(xi) cos(eta) / sqrt(p))``.  The realized operator is
    ``cos(phi') I + i sin(phi') Z`` with ``phi' = +-phi`` (sign of
    ``sin(eta) sin(xi)``).  For ``eta = k pi/2`` only ``I`` or ``Z`` occur and
    the result is flagged ``degenerate``.
    """
    c, s = np.cos(xi_angle) * np.cos(eta), np.sin(xi_angle) * np.sin(eta)
    p = float(c * c + s * s)
    degenerate = is_degenerate_eta(eta)
    if p <= ZERO_PROB:
        return CnotEtaResult(float("nan"), p, degenerate, None)
    phi = float(np.arccos(np.clip(c / np.sqrt(p), -1.0, 1.0)))
    signed = phi if s >= 0 else -phi
    return CnotEtaResult(phi, p, degenerate, la.rotation(signed))


def _designated_success(eta: float, xis: np.ndarray) -> np.ndarray:
    """Simulated probability of outcome 0 for each program angle; each branch must be a rotation."""
    from .zoo import cnot_processor

    proc, meas = cnot_processor(), cnot_eta_measurement(eta)
    out = np.empty(len(xis))
    for i, x in enumerate(xis):
        b = branches(proc, cnot_eta_program(x), meas)[0]
        if b.probability is None:
            raise ArithmeticError("outcome 0 of the CNOT processor became data dependent")
        out[i] = b.probability
    return out


def cnot_eta_worst_success(eta: float, grid: int = 4096) -> float:
    """Smallest outcome-0 success over the rotations ``U_phi``.

    Program angles ``xi`` in ``[0, pi)`` reach every rotation exactly once on
    the designated outcome, so the minimum over a ``xi`` grid that contains
    ``0`` and ``pi/2`` is the worst case over targets.
    """
    if grid % 2:
        raise ValueError("grid must be even so that xi = pi/2 is a node")
    return float(_designated_success(eta, np.arange(grid) * np.pi / grid).min())


def cnot_eta_average_success(eta: float, grid: int = 4096) -> float:
    """``(1/2pi) int p(xi) dxi`` over program angles (periodic trapezoid rule)."""
    return float(_designated_success(eta, np.arange(grid) * 2 * np.pi / grid).mean())


# -- Toffoli cascade (repeat until success) -------------------------------------------

def vmc_round_program(theta: float) -> np.ndarray:
    """``(e^{-i theta}|0> + e^{i theta}|1>)/sqrt 2``: a CNOT step then applies ``exp(-+ i theta Z)``."""
    return np.array([np.exp(-1j * theta), np.exp(1j * theta)]) / np.sqrt(2)


def vmc_program(n: int, phi: float) -> np.ndarray:
    """Product program whose ``k``-th qubit encodes ``2^(k-1) phi``."""
    v = np.ones(1, dtype=complex)
    for k in range(n):
        v = np.kron(v, vmc_round_program(2**k * phi))
    return v


def vmc_target(phi: float) -> np.ndarray:
    """``exp(-i phi Z)``."""
    return la.rotation(-phi)


def vmc_simulate(n: int, phi: float) -> VMCResult:
    """Exact branch tracking of the cascade with a computational program measurement.

    Outcome strings with a first ``0`` at position ``k`` mean success in round
    ``k``; only the all-ones string leaves the uncorrected error.
    """
    proc = vmc_processor(n)
    reports = branches(proc, vmc_program(n, phi), ProjectiveMeasurement.computational(proc.N),
                       vmc_target(phi))
    hits = [b for b in reports if b.matches_target]
    for b in hits:
        if abs(b.probability - 2.0**-n) > 1e-12:
            raise ArithmeticError(f"unexpected branch probability {b.probability}")
    exact = Fraction(len(hits), 2**n)
    p = float(sum(b.probability for b in hits))
    if not hits:
        return VMCResult(n, phi, p, exact, 0.0, 0)
    ops = [b.kraus.operators[0] / np.sqrt(p) for b in hits]
    fid = process_fidelity_unitary(vmc_target(phi), KrausChannel(ops))
    return VMCResult(n, phi, p, exact, fid, len(hits))


def u1_success_bounds(N: int) -> dict:
    """Upper bounds on U-processor success for qubit rotations with ``N`` programs."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return {
        "worst": float(np.cos(np.pi / (2 * N)) ** 2),
        "average": float(0.5 * (1 + N / np.pi * np.sin(np.pi / N))),
    }


# -- numerical search over measurements and programs ---------------------------------

def _best_program_for_measurement(proc: Processor, w: np.ndarray, u: np.ndarray,
                                  max_subset: int) -> tuple[float, Optional[np.ndarray]]:
    """Exact optimum over programs for a fixed measurement basis (rows of ``w``).

    For each set ``S`` of outcomes required to realize ``u``, the admissible
    programs form a linear subspace; the success on ``S`` is a Rayleigh
    quotient there.  Every candidate is re-verified with :func:`success_probability`.
    """
    d, n = proc.d, proc.N
    c = np.einsum("mj,jqab->mqab", w.conj(), proc.blocks())
    t = np.einsum("ab,mqab->mq", u.conj(), c)
    resid = c - (t / d)[:, :, None, None] * u[None, None]
    meas = ProjectiveMeasurement(w)
    best, best_xi = 0.0, None
    sizes = range(1, min(max_subset, n) + 1)
    for subset in itertools.chain.from_iterable(itertools.combinations(range(n), k) for k in sizes):
        lin = np.concatenate([resid[m].reshape(n, d * d).T for m in subset])
        z = null_space(lin, rcond=1e-10)
        if z.shape[1] == 0:
            continue
        q = sum(np.outer(t[m].conj(), t[m]) for m in subset) / d**2
        vals, vecs = np.linalg.eigh(z.conj().T @ q @ z)
        if vals[-1] <= best + 1e-12:
            continue
        xi = z @ vecs[:, -1]
        xi = xi / np.linalg.norm(xi)
        p = success_probability(proc, meas, xi, u)
        if p > best:
            best, best_xi = p, xi
    return best, best_xi


def optimize_success(proc: Processor, u, restarts: int = 4, seed=0, max_subset: int = 3,
                     candidates: Sequence[ProjectiveMeasurement] = ()) -> SuccessSearchResult:
    """Lower bound on ``max_{M, Xi} P_success(U)`` by searching measurement bases.

    The inner program optimization is exact; the outer search (Nelder-Mead
    over measurement bases from the computational basis, ``candidates`` and
    Haar-random starts) is local, so the result is only a lower bound.
    """
    u = la.as_matrix(u)
    starts = [ProjectiveMeasurement.computational(proc.N).vectors]
    starts += [c.vectors for c in candidates]
    starts += [la.haar_unitary(proc.N, (seed, i)).T for i in range(restarts)]
    basis = _hermitian_basis(proc.N)
    best = (0.0, None, starts[0])
    for w0 in starts:
        def value(x, w0=w0):
            w = (expm(1j * sum(ci * h for ci, h in zip(x, basis))) @ w0.T).T
            return _best_program_for_measurement(proc, w, u, max_subset)[0]

        res = minimize(lambda x: -value(x), np.zeros(len(basis)), method="Nelder-Mead",
                       options={"maxiter": 200 * len(basis), "xatol": 1e-8, "fatol": 1e-12})
        for x in (np.zeros(len(basis)), res.x):
            w = (expm(1j * sum(ci * h for ci, h in zip(x, basis))) @ w0.T).T
            p, xi = _best_program_for_measurement(proc, w, u, max_subset)
            if p > best[0]:
                best = (p, xi, w)
    p, xi, w = best
    if xi is None:
        xi = la.ket(0, proc.N)
    return SuccessSearchResult(p, xi, ProjectiveMeasurement(w))


# -- randomized inequality sweep ------------------------------------------------------

def _suite_processors():
    from . import zoo

    procs = [zoo.cnot_processor(), zoo.qid_processor(2), zoo.qid_processor(3), zoo.swap_processor(2),
             zoo.swap_processor(3), zoo.u1_grid_processor(3), zoo.u1_grid_processor(4), vmc_processor(2)]
    procs += [zoo.u_processor(la.haar_unitaries(2, 3, (9101, i)), f"random-u{i}") for i in range(2)]
    procs += [Processor(la.haar_unitary(4, (9102, 0)), 2, 2, "random-g")]
    return procs


def inequality_suite(configs: int, seed=0) -> list[InequalityReport]:
    """``P_error >= eps`` on random (processor, measurement, program, target) tuples.

    Each configuration draws a zoo processor, a computational or Haar
    measurement, a basis or random program, and either a Haar target or (to
    exercise nonzero success) the unitary realized by one of the branches.
    """
    procs = _suite_processors()
    g = la.rng((9100, seed))
    out = []
    for i in range(configs):
        proc = procs[i % len(procs)]
        key = (seed, i)
        if g.random() < 0.5:
            meas = ProjectiveMeasurement.computational(proc.N)
        else:
            meas = ProjectiveMeasurement.from_unitary(la.haar_unitary(proc.N, key + (0,)))
        xi = la.ket(int(g.integers(proc.N)), proc.N).astype(complex) if g.random() < 0.5 \
            else la.random_pure_state(proc.N, key + (1,))
        target = la.haar_unitary(proc.d, key + (2,))
        if g.random() < 0.5:
            realized = [b.realized for b in branches(proc, xi, meas) if b.realized is not None]
            if realized:
                target = realized[int(g.integers(len(realized)))]
        out.append(error_epsilon_inequality(proc, meas, xi, target))
    return out
