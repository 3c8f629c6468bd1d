"""Parser and elaborator for ``.qproc`` processor descriptions.

One statement per line::

    # comment
    data_dim 2
    unitary Z = [[1, 0], [0, -1]]
    unitary T = phase(pi/4)
    processor p = uproc(id(2), Z)
    processor q = network(toffoli@[1,2,3], cnot@[1,2])

``network(g1, ..., gk)`` is the operator product ``g1 g2 ... gk`` (``gk``
acts first).  Wires are 1-based qubits; the data register occupies the
first ``log2(data_dim)`` wires.

Diagnostics are raised as :class:`DSLError` with a code, line and column:

====  ==========================================
E001  lexical error
E002  syntax error
E003  undefined name
E004  matrix shape error
E005  ``data_dim`` required
E006  non-unitary matrix literal
E007  dimension mismatch
E008  invalid wire list
E009  duplicate definition
E010  unknown function or wrong arity
E011  invalid argument value
E012  no such processor
====  ==========================================
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Union

import numpy as np

from . import linalg as la
from .channels import Processor, compatibility_constant, unitary_program_dimension
from . import zoo

LITERAL_TOL = 1e-8


class DSLError(Exception):
    def __init__(self, code: str, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {code} {message}")
        self.code, self.message, self.line, self.col = code, message, line, col


# -- AST -------------------------------------------------------------------------------

Pos = Optional[tuple]


@dataclass(frozen=True)
class MatrixLit:
    rows: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ref:
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)


UExpr = Union[MatrixLit, Call, Ref]


@dataclass(frozen=True)
class Gate:
    expr: UExpr
    wires: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ProcNode:
    kind: str  # cnot | swap | qid | vmc | uproc | network
    args: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ProcessorSpecAst:
    data_dim: Optional[int]
    unitaries: tuple  # ((name, UExpr), ...)
    processors: tuple  # ((name, ProcNode), ...)
    positions: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def processor(self) -> Optional[ProcNode]:
        return self.processors[-1][1] if self.processors else None

    def unitary_map(self) -> dict:
        return dict(self.unitaries)


# -- lexer -----------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<comment>\#.*)
      | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<punct>[()\[\],=@+\-*/])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # num | name | punct | end
    text: str
    line: int
    col: int


def tokenize_line(text: str, line: int) -> list[Token]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise DSLError("E001", f"unexpected character {text[i]!r}", line, i + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, i + 1))
        i = m.end()
    out.append(Token("end", "", line, len(text) + 1))
    return out


# -- parser ----------------------------------------------------------------------------

_CONSTANTS = {"pi": np.pi}
_PROCESSOR_KINDS = ("cnot", "swap", "qid", "vmc", "uproc", "network")


class _LineParser:
    def __init__(self, tokens: list[Token]):
        self.toks, self.i = tokens, 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None) -> DSLError:
        t = tok or self.tok
        found = "end of line" if t.kind == "end" else repr(t.text)
        return DSLError("E002", f"{msg}, found {found}", t.line, t.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "end":
            raise self.error(f"expected {text!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            raise self.error("expected a name")
        return self.advance()

    def expect_end(self):
        if self.tok.kind != "end":
            raise self.error("expected end of statement")

    def int_literal(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self.error("expected an integer")
        self.advance()
        return int(t.text)

    # real arithmetic for builtin arguments
    def rexpr(self) -> float:
        v = self.rterm()
        while self.tok.text in ("+", "-") and self.tok.kind == "punct":
            op = self.advance().text
            v = v + self.rterm() if op == "+" else v - self.rterm()
        return v

    def rterm(self) -> float:
        v = self.rfactor()
        while self.tok.text in ("*", "/") and self.tok.kind == "punct":
            op, t = self.advance().text, self.tok
            rhs = self.rfactor()
            if op == "/" and rhs == 0:
                raise DSLError("E011", "division by zero", t.line, t.col)
            v = v * rhs if op == "*" else v / rhs
        return v

    def rfactor(self) -> float:
        t = self.tok
        if t.kind == "punct" and t.text in ("+", "-"):
            self.advance()
            v = self.rfactor()
            return -v if t.text == "-" else v
        if t.kind == "num":
            if t.text.endswith("i"):
                raise DSLError("E011", "complex value where a real number is required", t.line, t.col)
            self.advance()
            return float(t.text)
        if t.kind == "name" and t.text in _CONSTANTS:
            self.advance()
            return float(_CONSTANTS[t.text])
        if t.text == "(":
            self.advance()
            v = self.rexpr()
            self.expect(")")
            return v
        raise self.error("expected a number")

    # complex literals a+bi inside matrices
    def cnum(self) -> complex:
        sign = 1.0
        if self.tok.kind == "punct" and self.tok.text in ("+", "-"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        first = self._cpart()
        value = sign * first
        if first.imag == 0 and self.tok.kind == "punct" and self.tok.text in ("+", "-"):
            s = -1.0 if self.advance().text == "-" else 1.0
            t = self.tok
            second = self._cpart()
            if second.imag == 0:
                raise self.error("expected an imaginary part", t)
            value += s * second
        return complex(value)

    def _cpart(self) -> complex:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return complex(0, float(t.text[:-1])) if t.text.endswith("i") else complex(float(t.text))
        if t.kind == "name" and t.text == "i":
            self.advance()
            return 1j
        raise self.error("expected a complex number")

    def matrix(self) -> MatrixLit:
        start = self.expect("[")
        rows = [self.row()]
        while self.tok.text == ",":
            self.advance()
            rows.append(self.row())
        self.expect("]")
        return MatrixLit(tuple(rows), (start.line, start.col))

    def row(self) -> tuple:
        self.expect("[")
        entries = [self.cnum()]
        while self.tok.text == ",":
            self.advance()
            entries.append(self.cnum())
        self.expect("]")
        return tuple(entries)

    def uexpr(self) -> UExpr:
        t = self.tok
        if t.text == "[":
            return self.matrix()
        if t.kind != "name":
            raise self.error("expected a unitary expression")
        self.advance()
        pos = (t.line, t.col)
        if self.tok.text == "(":
            self.advance()
            args = []
            if self.tok.text != ")":
                args.append(self.rexpr())
                while self.tok.text == ",":
                    self.advance()
                    args.append(self.rexpr())
            self.expect(")")
            return Call(t.text, tuple(args), pos)
        return Ref(t.text, pos)

    def gate(self) -> Gate:
        t = self.tok
        expr = self.uexpr()
        self.expect("@")
        self.expect("[")
        wires = [self.int_literal()]
        while self.tok.text == ",":
            self.advance()
            wires.append(self.int_literal())
        self.expect("]")
        return Gate(expr, tuple(wires), (t.line, t.col))

    def pexpr(self) -> ProcNode:
        t = self.tok
        if t.kind != "name" or t.text not in _PROCESSOR_KINDS:
            raise self.error("expected a processor (" + ", ".join(_PROCESSOR_KINDS) + ")")
        self.advance()
        pos = (t.line, t.col)
        if t.text == "cnot":
            return ProcNode("cnot", (), pos)
        self.expect("(")
        if t.text in ("swap", "qid", "vmc"):
            args = (self.int_literal(),)
        else:
            item = self.uexpr if t.text == "uproc" else self.gate
            items = [item()]
            while self.tok.text == ",":
                self.advance()
                items.append(item())
            args = tuple(items)
        self.expect(")")
        return ProcNode(t.text, args, pos)


def _parse_statements(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = tokenize_line(line, lineno)
        if toks[0].kind == "end":
            continue
        p = _LineParser(toks)
        head = p.tok
        if head.kind == "name" and head.text == "data_dim":
            p.advance()
            value = p.int_literal()
            p.expect_end()
            yield ("data_dim", value, head)
        elif head.kind == "name" and head.text in ("unitary", "processor"):
            p.advance()
            name = p.expect_name()
            p.expect("=")
            node = p.uexpr() if head.text == "unitary" else p.pexpr()
            p.expect_end()
            yield (head.text, (name.text, node), name)
        else:
            raise p.error("expected 'data_dim', 'unitary' or 'processor'")


def parse(text: str) -> ProcessorSpecAst:
    """Parse and statically validate a ``.qproc`` document."""
    data_dim = None
    unitaries: list = []
    processors: list = []
    positions: dict = {}
    defined: dict = {}
    for kind, payload, tok in _parse_statements(text):
        if kind == "data_dim":
            if data_dim is not None:
                raise DSLError("E009", "data_dim declared twice", tok.line, tok.col)
            if payload < 2:
                raise DSLError("E011", "data_dim must be at least 2", tok.line, tok.col)
            data_dim = payload
            continue
        name, node = payload
        if name in defined:
            raise DSLError("E009", f"{name!r} is already defined", tok.line, tok.col)
        if kind == "unitary":
            if name in _BUILTIN_CONSTANTS or name in _BUILTIN_FUNCTIONS or name in _CONSTANTS:
                raise DSLError("E009", f"{name!r} shadows a built-in", tok.line, tok.col)
            _unitary_value(node, defined)
            defined[name] = node
            unitaries.append((name, node))
        else:
            if data_dim is None:
                raise DSLError("E005", "data_dim required before a processor", tok.line, tok.col)
            _validate_processor(node, defined)
            defined[name] = node
            processors.append((name, node))
        positions[name] = (tok.line, tok.col)
    return ProcessorSpecAst(data_dim, tuple(unitaries), tuple(processors), positions)


def parse_file(path) -> ProcessorSpecAst:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def parse_unitary(text: str, ast: ProcessorSpecAst | None = None) -> np.ndarray:
    """Evaluate a standalone unitary expression, resolving names against ``ast``."""
    toks = tokenize_line(text, 1)
    p = _LineParser(toks)
    node = p.uexpr()
    p.expect_end()
    return _unitary_value(node, ast.unitary_map() if ast else {})


def parse_vector(text: str) -> np.ndarray:
    """A vector literal ``[c0, c1, ...]`` of complex numbers."""
    toks = tokenize_line(text, 1)
    p = _LineParser(toks)
    entries = p.row()
    p.expect_end()
    return np.array(entries, dtype=complex)


# -- built-in unitaries ----------------------------------------------------------------

def _cnot_gate():
    return zoo.multi_controlled_x(2, [0], 1)


def _toffoli_gate():
    return zoo.multi_controlled_x(3, [0, 1], 2)


_BUILTIN_CONSTANTS = {
    "px": lambda: la.PAULI_X.copy(),
    "py": lambda: la.PAULI_Y.copy(),
    "pz": lambda: la.PAULI_Z.copy(),
    "hadamard": lambda: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "cnot": _cnot_gate,
    "toffoli": _toffoli_gate,
}


def _int_arg(x: float, what: str, pos, lo: int = 0) -> int:
    if x != int(x) or x < lo:
        raise DSLError("E011", f"{what} must be an integer >= {lo}, got {x!r}", *pos)
    return int(x)


def _b_id(pos, d):
    return np.eye(_int_arg(d, "id dimension", pos, 1), dtype=complex)


def _b_phase(pos, theta, d=2.0):
    return np.exp(1j * theta) * np.eye(_int_arg(d, "phase dimension", pos, 1), dtype=complex)


def _b_rz(pos, theta):
    return la.rotation(-theta)


def _b_weyl(pos, d, a, b):
    d = _int_arg(d, "weyl dimension", pos, 2)
    a, b = _int_arg(a, "weyl index a", pos), _int_arg(b, "weyl index b", pos)
    if a >= d or b >= d:
        raise DSLError("E011", f"weyl index ({a}, {b}) out of range for d={d}", *pos)
    return zoo.generalized_pauli(d, a, b)


def _b_mcx(pos, k):
    k = _int_arg(k, "mcx control count", pos, 1)
    if k > 6:
        raise DSLError("E011", "mcx supports at most 6 controls", *pos)
    return zoo.multi_controlled_x(k + 1, list(range(k)), k)


_BUILTIN_FUNCTIONS = {
    "id": (_b_id, (1,)),
    "phase": (_b_phase, (1, 2)),
    "rz": (_b_rz, (1,)),
    "weyl": (_b_weyl, (3,)),
    "mcx": (_b_mcx, (1,)),
}


def _unitary_value(node: UExpr, defined: dict) -> np.ndarray:
    pos = node.pos or (0, 0)
    if isinstance(node, MatrixLit):
        widths = {len(r) for r in node.rows}
        if len(widths) != 1:
            raise DSLError("E004", "matrix rows have different lengths", *pos)
        if widths.pop() != len(node.rows):
            raise DSLError("E004", "matrix literal must be square", *pos)
        m = np.array(node.rows, dtype=complex)
        if la.max_norm(m.conj().T @ m - np.eye(len(m))) > LITERAL_TOL:
            raise DSLError("E006", "matrix literal is not unitary", *pos)
        return la.nearest_unitary(m)
    if isinstance(node, Ref):
        if node.name in defined:
            target = defined[node.name]
            if isinstance(target, ProcNode):
                raise DSLError("E007", f"{node.name!r} is a processor, not a unitary", *pos)
            return _unitary_value(target, defined)
        if node.name in _BUILTIN_CONSTANTS:
            return _BUILTIN_CONSTANTS[node.name]()
        if node.name in _BUILTIN_FUNCTIONS:
            raise DSLError("E010", f"{node.name!r} needs arguments", *pos)
        raise DSLError("E003", f"undefined name {node.name!r}", *pos)
    if isinstance(node, Call):
        if node.name not in _BUILTIN_FUNCTIONS:
            if node.name in _BUILTIN_CONSTANTS:
                raise DSLError("E010", f"{node.name!r} takes no arguments", *pos)
            if node.name in defined:
                raise DSLError("E010", f"{node.name!r} is not a function", *pos)
            raise DSLError("E010", f"unknown function {node.name!r}", *pos)
        fn, arities = _BUILTIN_FUNCTIONS[node.name]
        if len(node.args) not in arities:
            raise DSLError("E010", f"{node.name} expects {' or '.join(map(str, arities))} arguments", *pos)
        return fn(pos, *node.args)
    raise TypeError(f"not a unitary expression: {node!r}")


def _validate_processor(node: ProcNode, defined: dict):
    pos = node.pos or (0, 0)
    if node.kind in ("swap", "qid") and node.args[0] < 2:
        raise DSLError("E011", f"{node.kind} dimension must be at least 2", *pos)
    if node.kind == "vmc" and not 1 <= node.args[0] <= 6:
        raise DSLError("E011", "vmc qubit count must be between 1 and 6", *pos)
    if node.kind == "uproc":
        for e in node.args:
            _unitary_value(e, defined)
    if node.kind == "network":
        for g in node.args:
            gpos = g.pos or pos
            if len(set(g.wires)) != len(g.wires):
                raise DSLError("E008", "gate wires must be distinct", *gpos)
            if min(g.wires) < 1:
                raise DSLError("E008", "wire indices start at 1", *gpos)
            u = _unitary_value(g.expr, defined)
            if u.shape[0] != 2 ** len(g.wires):
                raise DSLError("E007", f"gate of dimension {u.shape[0]} placed on {len(g.wires)} wires", *gpos)


# -- serializer ------------------------------------------------------------------------

def _real(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _complex(z: complex) -> str:
    re_, im = z.real, z.imag
    if im == 0:
        return _real(re_)
    if re_ == 0:
        return f"{_real(im)}i"
    return f"{_real(re_)}{'+' if im > 0 else '-'}{_real(abs(im))}i"


def _uexpr_text(node: UExpr) -> str:
    if isinstance(node, MatrixLit):
        return "[" + ", ".join("[" + ", ".join(_complex(z) for z in r) + "]" for r in node.rows) + "]"
    if isinstance(node, Ref):
        return node.name
    return f"{node.name}(" + ", ".join(_real(a) for a in node.args) + ")"


def _pexpr_text(node: ProcNode) -> str:
    if node.kind == "cnot":
        return "cnot"
    if node.kind in ("swap", "qid", "vmc"):
        return f"{node.kind}({node.args[0]})"
    if node.kind == "uproc":
        return "uproc(" + ", ".join(_uexpr_text(e) for e in node.args) + ")"
    return "network(" + ", ".join(
        f"{_uexpr_text(g.expr)}@[" + ",".join(map(str, g.wires)) + "]" for g in node.args) + ")"


def serialize(ast: ProcessorSpecAst) -> str:
    lines = []
    if ast.data_dim is not None:
        lines.append(f"data_dim {ast.data_dim}")
    lines += [f"unitary {n} = {_uexpr_text(e)}" for n, e in ast.unitaries]
    lines += [f"processor {n} = {_pexpr_text(p)}" for n, p in ast.processors]
    return "\n".join(lines) + "\n"


# -- elaboration -----------------------------------------------------------------------

def embed_gate(u: np.ndarray, wires, n_qubits: int) -> np.ndarray:
    """Lift a ``k``-qubit gate onto 0-based ``wires`` of an ``n_qubits`` register (wire 0 most significant)."""
    k = len(wires)
    rest = [q for q in range(n_qubits) if q not in wires]
    full = np.kron(u, np.eye(2 ** (n_qubits - k), dtype=complex))
    order = list(wires) + rest
    t = full.reshape([2] * (2 * n_qubits))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n_qubits + i for i in inv])
    return t.reshape(2**n_qubits, 2**n_qubits)


def _network_processor(node: ProcNode, data_dim: int, defined: dict) -> Processor:
    pos = node.pos or (0, 0)
    m = int(round(np.log2(data_dim)))
    if 2**m != data_dim:
        raise DSLError("E007", "network processors need a data_dim that is a power of 2", *pos)
    n = max(max(g.wires) for g in node.args)
    if n < m:
        raise DSLError("E008", "network does not reach every data wire", *pos)
    mats = [embed_gate(_unitary_value(g.expr, defined), [w - 1 for w in g.wires], n) for g in node.args]
    g = reduce(np.matmul, mats)
    return Processor(g, data_dim, 2 ** (n - m), "network")


def elaborate(ast: ProcessorSpecAst, name: str | None = None) -> Processor:
    """Build the processor ``name`` (default: the last one declared)."""
    procs = dict(ast.processors)
    if not procs:
        raise DSLError("E012", "no processor declared")
    if name is None:
        name = ast.processors[-1][0]
    if name not in procs:
        raise DSLError("E012", f"no processor named {name!r}")
    node = procs[name]
    pos = node.pos or ast.positions.get(name, (0, 0))
    d = ast.data_dim
    if d is None:
        raise DSLError("E005", "data_dim required", *pos)
    defined = ast.unitary_map()
    expect_d = {"cnot": 2, "vmc": 2, "swap": None, "qid": None}
    if node.kind in ("swap", "qid"):
        expect_d[node.kind] = node.args[0]
    if node.kind in expect_d and expect_d[node.kind] != d:
        raise DSLError("E007", f"{node.kind} acts on dimension {expect_d[node.kind]}, data_dim is {d}", *pos)
    if node.kind == "cnot":
        proc = zoo.cnot_processor()
    elif node.kind == "swap":
        proc = zoo.swap_processor(d)
    elif node.kind == "qid":
        proc = zoo.qid_processor(d)
    elif node.kind == "vmc":
        proc = zoo.vmc_processor(node.args[0])
    elif node.kind == "uproc":
        mats = []
        for e in node.args:
            u = _unitary_value(e, defined)
            if u.shape != (d, d):
                raise DSLError("E007", f"program unitary of dimension {u.shape[0]}, data_dim is {d}",
                               *(e.pos or pos))
            mats.append(u)
        proc = zoo.u_processor(mats)
    else:
        proc = _network_processor(node, d, defined)
    return Processor(proc.G, proc.d, proc.N, name)


# -- static compatibility --------------------------------------------------------------

@dataclass(frozen=True)
class CompatReport:
    names: tuple
    table: dict  # (a, b) -> complex phase c, or the string REQUIRES_ORTHOGONAL
    minimal_dimension: int


REQUIRES_ORTHOGONAL = "requires orthogonal programs"


def static_compat(ast: ProcessorSpecAst, program_names) -> CompatReport:
    """Pairwise compatibility of declared unitaries and the program dimension they need."""
    defined = ast.unitary_map()
    mats = {}
    for n in program_names:
        if n not in defined:
            raise DSLError("E003", f"undefined unitary {n!r}", *ast.positions.get(n, (0, 0)))
        mats[n] = _unitary_value(defined[n], defined)
    names = tuple(program_names)
    table = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if mats[a].shape != mats[b].shape:
                raise DSLError("E007", f"{a!r} and {b!r} act on different dimensions",
                               *ast.positions.get(b, (0, 0)))
            c = compatibility_constant([mats[a]], [mats[b]])
            table[(a, b)] = REQUIRES_ORTHOGONAL if c is None else c
    dim = unitary_program_dimension([mats[n] for n in names]) if names else 0
    return CompatReport(names, table, dim)
