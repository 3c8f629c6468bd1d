"""``qproc`` command line: reproduction reports, ``.qproc`` evaluation and property sweeps."""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Optional

import numpy as np
import scipy

from . import __version__
from . import dsl, zoo
from . import linalg as la
from . import metrics as mt
from . import probabilistic as pr
from . import u1
from .channels import Processor, ProjectiveMeasurement, induced_channel


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    samples: int = 50
    grid: int = mt.U1_GRID
    tolerance: float = 1e-6
    output_format: str = "json"
    output_path: Optional[str] = None
    timestamp: bool = True

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.grid < 16:
            raise ValueError("grid must be at least 16")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.output_format not in ("json", "csv"):
            raise ValueError("format must be json or csv")


class Report:
    """Accumulates checks, tables and free-form details for one command."""

    def __init__(self, command: str, cfg: RunConfig, extra_config: dict | None = None):
        self.command, self.cfg = command, cfg
        self.extra_config = extra_config or {}
        self.results: list[dict] = []
        self.tables: dict[str, list[dict]] = {}
        self.details: dict[str, Any] = {}

    def check(self, name: str, computed, reference=None, tol: float | None = None,
              relation: str = "==", stderr: float | None = None, info: bool = False):
        """Record one result; ``relation`` is ``==``, ``<=`` or ``>=`` (computed vs reference).

        ``info`` rows are reported but always pass.
        """
        tol = self.cfg.tolerance if tol is None else tol
        entry = {"name": name, "computed": computed, "reference": reference, "|diff|": None}
        if info:
            ok = True
        elif reference is None:
            ok = bool(computed) if isinstance(computed, (bool, np.bool_)) else True
        elif isinstance(computed, (bool, str, np.bool_)) or isinstance(reference, (bool, str)):
            ok = computed == reference
        else:
            diff = abs(float(computed) - float(reference))
            entry["|diff|"] = diff
            if relation == "<=":
                ok = float(computed) <= float(reference) + tol
            elif relation == ">=":
                ok = float(computed) >= float(reference) - tol
            else:
                ok = diff <= (3 * stderr + tol if stderr is not None else tol)
        if relation != "==":
            entry["relation"] = relation
        if stderr is not None:
            entry["stderr"] = stderr
        entry["pass"] = bool(ok)
        self.results.append(entry)
        return entry["pass"]

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.results)

    def to_dict(self) -> dict:
        config = {
            "seed": self.cfg.seed, "samples": self.cfg.samples, "grid": self.cfg.grid,
            "tolerance": self.cfg.tolerance, "format": self.cfg.output_format,
            "out": self.cfg.output_path, **self.extra_config,
        }
        prov = {
            "seed": self.cfg.seed,
            "versions": {"qproc": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
        }
        if self.cfg.timestamp:
            prov["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        out = {"command": self.command, "config": config, "results": self.results}
        if self.tables:
            out["tables"] = self.tables
        if self.details:
            out["details"] = self.details
        out["provenance"] = prov
        out["all_pass"] = self.passed
        return _jsonable(out)

    def render(self) -> str:
        data = self.to_dict()
        if self.cfg.output_format == "json":
            return json.dumps(data, indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "computed", "reference", "|diff|", "pass"])
        for r in data["results"]:
            w.writerow([r["name"], r["computed"], r["reference"], r["|diff|"], r["pass"]])
        for tname, rows in data.get("tables", {}).items():
            if not rows:
                continue
            buf.write(f"\n# {tname}\n")
            w.writerow(list(rows[0]))
            for row in rows:
                w.writerow([row[k] for k in rows[0]])
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, Fraction):
        return str(x)
    return x


def _extreme(values, reference):
    """The sample farthest from ``reference`` (what a max-deviation check should report)."""
    values = np.asarray(values, dtype=float)
    return float(values[int(np.argmax(np.abs(values - reference)))])


def haar_mean_fidelity(proc, xi, samples: int, seed) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of ``F(U, E_xi)`` over Haar targets."""
    targets = la.haar_unitaries(proc.d, samples, seed)
    m = np.einsum("tab,rqab->trq", targets.conj(), proc.blocks())
    f = np.sum(np.abs(m @ xi) ** 2, axis=1) / proc.d**2
    return float(f.mean()), float(f.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0


# -- repro ------------------------------------------------------------------------------

def repro_cnot(rep: Report, args):
    proc = zoo.cnot_processor()
    cfg = rep.cfg
    rep.check("epsilon_worst", mt.epsilon_worst_u1(proc, grid=cfg.grid), 0.5)
    rep.check("epsilon_avg", mt.epsilon_avg_u1(proc, grid=cfg.grid), 0.5 - 1 / np.pi)
    for label, eta in (("pi/8", np.pi / 8), ("pi/4", np.pi / 4), ("3pi/8", 3 * np.pi / 8)):
        rep.check(f"avg_success[eta={label}]", pr.cnot_eta_average_success(eta, cfg.grid), 0.5)
        rep.check(f"worst_success[eta={label}]", pr.cnot_eta_worst_success(eta, cfg.grid),
                  min(np.cos(eta) ** 2, np.sin(eta) ** 2))
    eta = np.pi / 4
    target = la.rotation(np.pi / 4)
    ineq = pr.error_epsilon_inequality(proc, pr.cnot_eta_measurement(eta), pr.cnot_eta_program(np.pi / 4), target)
    rep.check("saturation[eta=pi/4].p_error", ineq.p_error, 0.5)
    rep.check("saturation[eta=pi/4].epsilon", ineq.epsilon, 0.5)
    rep.check("saturation[eta=pi/4]", bool(abs(ineq.gap) <= cfg.tolerance), True)


def repro_qid(rep: Report, args):
    d = args.d or 2
    proc = zoo.qid_processor(d)
    thetas = zoo.qid_program_basis(d)
    fids = [mt.induced_fidelity(proc, t, u) for t, u in zip(thetas, zoo.weyl_basis(d))]
    rep.check("elementary_fidelity_min", min(fids), 1.0)
    meas = zoo.qid_measurement_basis(d)
    ps = []
    for i in range(20):
        u = la.haar_unitary(d, (rep.cfg.seed, 7, i))
        ps.append(pr.success_probability(proc, meas, zoo.qid_program(u), u))
    rep.check("p_success", _extreme(ps, 1 / d**2), 1 / d**2)
    w = zoo.flat_weyl_witness(d)
    rep.check("epsilon_worst", mt.epsilon_of_target(proc, w).epsilon, 1 - 1 / d**2)
    xi = la.random_pure_state(proc.N, (rep.cfg.seed, 8))
    mean, se = haar_mean_fidelity(proc, xi, max(rep.cfg.samples, 2), (rep.cfg.seed, 9))
    rep.check("haar_mean_fidelity[random program]", mean, 1 / d**2, stderr=se)
    rep.details["witness_target"] = w


def repro_swap(rep: Report, args):
    d = args.d or 2
    proc = zoo.swap_processor(d)
    seed = rep.cfg.seed
    targets = la.haar_unitaries(d, rep.cfg.samples, (seed, 10))
    eps = mt.epsilon_values(proc, targets)
    rep.check("epsilon[haar]", _extreme(eps, 1 - 1 / d**2), 1 - 1 / d**2)
    succ, dependent = [], True
    for i in range(min(rep.cfg.samples, 20)):
        meas = ProjectiveMeasurement.from_unitary(la.haar_unitary(d, (seed, 11, i)))
        xi = la.random_pure_state(d, (seed, 12, i))
        bs = pr.branches(proc, xi, meas, targets[i])
        dependent &= all(b.data_dependent for b in bs)
        succ.append(sum(b.probability for b in bs if b.matches_target))
    rep.check("p_success_max", max(succ), 0.0)
    rep.check("data_dependent_branches", bool(dependent), True)
    uni = mt.universality_check(proc)
    rep.check("universal", uni.universal, True)
    rep.check("operator_rank", uni.operator_rank, d**2)


def repro_u1(rep: Report, args):
    Ns = [args.N] if args.N else list(range(1, 13))
    rows = []
    for N in Ns:
        r = u1.u1_report(N, grid=rep.cfg.grid)
        rep.check(f"epsilon_worst[N={N}]", r.numeric_worst, r.epsilon_worst)
        rep.check(f"epsilon_avg[N={N}]", r.numeric_avg, r.epsilon_avg)
        rows.append({"N": N, "epsilon_worst": r.numeric_worst, "epsilon_worst_closed": r.epsilon_worst,
                     "epsilon_avg": r.numeric_avg, "epsilon_avg_closed": r.epsilon_avg})
    if 2 in Ns:
        cnot = zoo.cnot_processor()
        g2 = zoo.u1_grid_processor(2)
        rep.check("N=2 worst equals cnot", mt.epsilon_worst_u1(g2, grid=rep.cfg.grid),
                  mt.epsilon_worst_u1(cnot, grid=rep.cfg.grid), tol=1e-9)
        rep.check("N=2 average equals cnot", mt.epsilon_avg_u1(g2, grid=rep.cfg.grid),
                  mt.epsilon_avg_u1(cnot, grid=rep.cfg.grid), tol=1e-9)
    rep.tables["u1_errors"] = rows


def repro_vmc(rep: Report, args):
    n = args.n or 3
    phi = float(la.rng((rep.cfg.seed, 13)).uniform(0, np.pi))
    res = pr.vmc_simulate(n, phi)
    rep.check("p_success", res.p_success, 1 - 2.0**-n)
    rep.check("p_success_exact", str(res.p_success_exact), str(1 - Fraction(1, 2**n)))
    rep.check("conditional_fidelity", res.conditional_fidelity, 1.0, tol=max(rep.cfg.tolerance, 1e-9))
    rep.check("p_success <= cos^2(pi/2N)", res.p_success, pr.u1_success_bounds(2**n)["worst"], relation="<=")
    rep.details["phi"] = phi


def repro_bounds(rep: Report, args):
    top = args.N or 64
    rows = []
    for N in range(1, top + 1):
        b = pr.u1_success_bounds(N)
        row = {"N": N, "epsilon_worst": u1.worst_error_closed_form(N), "epsilon_avg": u1.average_error_closed_form(N),
               "p_bound_worst": b["worst"], "p_bound_avg": b["average"], "vmc_success": None}
        if N & (N - 1) == 0 and 2 <= N <= 64:
            n = N.bit_length() - 1
            phi = float(la.rng((rep.cfg.seed, 14, n)).uniform(0, np.pi))
            p = pr.vmc_simulate(n, phi).p_success
            row["vmc_success"] = p
            rep.check(f"vmc_success[N={N}] <= cos^2(pi/2N)", p, b["worst"], relation="<=")
        rows.append(row)
    rep.tables["u1_bounds"] = rows


REPRO = {"cnot": repro_cnot, "qid": repro_qid, "swap": repro_swap,
         "u1": repro_u1, "vmc": repro_vmc, "bounds": repro_bounds}


# -- file commands -----------------------------------------------------------------------

def _load(path: str, name: str | None):
    ast = dsl.parse_file(path)
    return ast, dsl.elaborate(ast, name)


def _target(text: str, ast, d: int) -> np.ndarray:
    u = dsl.parse_unitary(text, ast)
    if u.shape != (d, d):
        raise dsl.DSLError("E007", f"target has dimension {u.shape[0]}, processor data dimension is {d}")
    return u


def cmd_epsilon(rep: Report, args):
    ast, proc = _load(args.file, args.name)
    u = _target(args.target, ast, proc.d)
    r = mt.epsilon_of_target(proc, u)
    rep.check("epsilon", r.epsilon, args.expect)
    rep.details.update({"processor": proc.label, "d": proc.d, "N": proc.N, "epsilon": r.epsilon,
                        "fidelity": r.fidelity, "multiplicity": r.multiplicity,
                        "optimal_program": r.optimal_program})


def _measurement(text: str, proc) -> ProjectiveMeasurement:
    if text == "computational":
        return ProjectiveMeasurement.computational(proc.N)
    if text == "qid":
        d = int(round(np.sqrt(proc.N)))
        if d * d != proc.N:
            raise ValueError(f"qid measurement needs a square program dimension, got {proc.N}")
        return zoo.qid_measurement_basis(d)
    rows = []
    with open(text, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append(dsl.parse_vector(line))
            except dsl.DSLError as e:
                raise ValueError(f"{text}:{lineno}:{e.col}: {e.code} {e.message}") from None
    rows = [r / np.linalg.norm(r) for r in rows]
    return ProjectiveMeasurement(np.array(rows))


def _program(text: str, proc, ast=None) -> np.ndarray:
    kind, _, arg = text.partition(":")
    if text.lstrip().startswith("["):
        v = dsl.parse_vector(text)
    elif kind == "basis":
        v = la.ket(int(arg), proc.N).astype(complex)
    elif kind == "theta":
        d = int(round(np.sqrt(proc.N)))
        if arg.strip().isdigit():
            v = zoo.qid_program_basis(d)[int(arg)]
        else:
            v = zoo.qid_program(_target(arg, ast, d))
    elif kind == "phi":
        n = int(round(np.log2(proc.N)))
        if 2**n != proc.N:
            raise ValueError("phi programs need a program register of qubits")
        v = pr.vmc_program(n, float(dsl._LineParser(dsl.tokenize_line(arg, 1)).rexpr()))
    else:
        raise ValueError(f"unknown program {text!r}")
    if v.shape != (proc.N,):
        raise ValueError(f"program has length {v.shape[0]}, program dimension is {proc.N}")
    return v / np.linalg.norm(v)


def cmd_success(rep: Report, args):
    ast, proc = _load(args.file, args.name)
    u = _target(args.target, ast, proc.d)
    meas = _measurement(args.measurement, proc)
    xi = _program(args.program, proc, ast)
    bs = pr.branches(proc, xi, meas, u)
    p = float(sum(b.probability for b in bs if b.matches_target))
    ineq = pr.error_epsilon_inequality(proc, meas, xi, u)
    rep.check("p_success", p, args.expect)
    rep.check("p_error >= epsilon", ineq.p_error, ineq.epsilon, relation=">=", tol=1e-8)
    rep.details["branches"] = [
        {"outcome": b.outcome if b.outcome is not None else i, "probability": b.probability,
         "data_dependent": b.data_dependent, "matches_target": b.matches_target,
         "realized": b.realized}
        for i, b in enumerate(bs)]
    if any(b.data_dependent for b in bs):
        rep.details["note"] = "data-dependent branches"


def cmd_check(rep: Report, args):
    ast, proc = _load(args.file, args.name)
    rep.check("unitary", la.is_unitary(proc.G), True)
    uni = mt.universality_check(proc)
    rep.check("universal", uni.universal, info=True)
    rep.check("operator_rank", uni.operator_rank, info=True)
    rep.details.update({"processor": proc.label, "d": proc.d, "N": proc.N,
                        "universal": uni.universal, "operator_rank": uni.operator_rank})
    if uni.universal:
        est = mt.epsilon_worst_search(proc, restarts=4, seed=rep.cfg.seed, samples=512)
        rep.check("epsilon_worst_estimate >= 1 - 1/d^2", est.epsilon, mt.universal_lower_bound(proc.d),
                  relation=">=", tol=1e-9)
    names = [n for n, _ in ast.unitaries]
    sizes = {n: dsl.parse_unitary(n, ast).shape[0] for n in names}
    names = [n for n in names if sizes[n] == proc.d]
    if names:
        c = dsl.static_compat(ast, names)
        rep.details["compatibility"] = {
            "minimal_program_dimension": c.minimal_dimension,
            "pairs": [{"a": a, "b": b, "c": v} for (a, b), v in c.table.items()],
        }


def cmd_props(rep: Report, args):
    seed = rep.cfg.seed
    res = pr.inequality_suite(rep.cfg.samples, seed)
    rep.check("p_error >= epsilon (min gap)", min(r.gap for r in res), 0.0, relation=">=", tol=1e-8)
    rep.check("configurations", len(res), info=True)
    for d in (2, 3):
        eps = mt.epsilon_values(zoo.swap_processor(d), la.haar_unitaries(d, rep.cfg.samples, (seed, 20, d)))
        rep.check(f"swap({d}) epsilon constant", _extreme(eps, 1 - 1 / d**2), 1 - 1 / d**2, tol=1e-9)
    worst = 0.0
    for i in range(rep.cfg.samples):
        g = la.haar_unitary(4, (seed, 21, i))
        proc = Processor(g, 2, 2)
        ch = induced_channel(proc, la.random_density(2, (seed, 22, i)))
        s = sum(a.conj().T @ a for a in ch.operators)
        worst = max(worst, la.max_norm(s - np.eye(2)))
    rep.check("induced channels trace preserving", worst, 0.0, tol=1e-9)


# -- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=50)
    common.add_argument("--grid", type=int, default=mt.U1_GRID)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--no-timestamp", action="store_true")
    common.add_argument("--d", type=int, metavar="DIM")
    common.add_argument("--n", type=int, metavar="QUBITS")
    common.add_argument("--N", type=int, metavar="SIZE")

    p = argparse.ArgumentParser(prog="qproc", description="Programmable quantum processor toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("repro", parents=[common], help="reproduce reference quantities")
    r.add_argument("target", choices=sorted(REPRO))
    for name, hlp in (("epsilon", "approximation error for a target"),
                      ("success", "measurement-assisted success probability"),
                      ("check", "unitarity, universality and compatibility checks")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("file")
        s.add_argument("--name", help="processor to use (default: last declared)")
        if name in ("epsilon", "success"):
            s.add_argument("--target", required=True, help="unitary expression, e.g. hadamard or rz(pi/4)")
            s.add_argument("--expect", type=float, help="reference value to compare against")
        if name == "success":
            s.add_argument("--measurement", default="computational",
                           help="computational, qid, or a file with one basis vector per line (normalized on read)")
            s.add_argument("--program", required=True,
                           help="vector literal, basis:J, theta:K, theta:UNITARY or phi:ANGLE")
    sub.add_parser("props", parents=[common], help="randomized property sweeps")
    return p


COMMANDS = {"epsilon": cmd_epsilon, "success": cmd_success, "check": cmd_check, "props": cmd_props}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(args.seed, args.samples, args.grid, args.tol, args.format, args.out,
                        not args.no_timestamp)
    except ValueError as e:
        parser.error(str(e))
    label = f"repro {args.target}" if args.command == "repro" else args.command
    extra = {k: getattr(args, k) for k in ("d", "n", "N", "file", "target", "measurement", "program", "name")
             if getattr(args, k, None) is not None and not (args.command == "repro" and k == "target")}
    rep = Report(label, cfg, extra)
    try:
        (REPRO[args.target] if args.command == "repro" else COMMANDS[args.command])(rep, args)
    except dsl.DSLError as e:
        where = f"{args.file}:" if getattr(args, "file", None) else ""
        print(f"error: {where}{e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    text = rep.render()
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as e:
            print(f"error: cannot write {cfg.output_path}: {e}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
