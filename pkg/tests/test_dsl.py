import re
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qproc import dsl, zoo
from qproc import linalg as la

CORPUS = Path(__file__).parent / "corpus"
VALID = sorted((CORPUS / "valid").glob("*.qproc"))
INVALID = sorted((CORPUS / "invalid").glob("*.qproc"))

ZOO_REFS = {
    "cnot_processor()": lambda: zoo.cnot_processor(),
    "u_processor([I, Z])": lambda: zoo.u_processor([la.PAULI_I, la.PAULI_Z]),
    "u_processor([I, Z, X, Y])": lambda: zoo.u_processor([la.PAULI_I, la.PAULI_Z, la.PAULI_X, la.PAULI_Y]),
    "u_processor(weyl(3))": lambda: zoo.u_processor(zoo.weyl_basis(3)),
    "u1_grid_processor(4)": lambda: zoo.u1_grid_processor(4),
}


def zoo_reference(text: str):
    m = re.search(r"^# zoo: (.+)$", text, re.M)
    ref = m.group(1).strip()
    if ref == "none":
        return None
    if ref in ZOO_REFS:
        return ZOO_REFS[ref]()
    name, arg = re.fullmatch(r"(\w+)\((\d+)\)", ref).groups()
    return getattr(zoo, name)(int(arg))


def test_corpus_size():
    assert len(VALID) == 20 and len(INVALID) == 10


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_round_trip(path):
    ast = dsl.parse(path.read_text())
    again = dsl.parse(dsl.serialize(ast))
    assert again == ast
    assert dsl.serialize(again) == dsl.serialize(ast)


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_elaborates_like_zoo(path):
    text = path.read_text()
    proc = dsl.elaborate(dsl.parse(text))
    assert la.is_unitary(proc.G)
    ref = zoo_reference(text)
    if ref is not None:
        assert (proc.d, proc.N) == (ref.d, ref.N)
        assert la.max_norm(proc.G - ref.G) <= 1e-10
    again = dsl.elaborate(dsl.parse(text))
    assert np.array_equal(proc.G, again.G)


@pytest.mark.parametrize("path", INVALID, ids=lambda p: p.stem)
def test_negative_files(path):
    text = path.read_text()
    code = re.search(r"^# expect: (E\d{3})$", text, re.M).group(1)
    with pytest.raises(dsl.DSLError) as info:
        dsl.elaborate(dsl.parse(text))
    assert info.value.code == code
    assert info.value.line >= 1 and info.value.col >= 1


def test_spec_examples():
    a = dsl.parse("data_dim 2\nprocessor p = cnot")
    assert a.processor == dsl.ProcNode("cnot", ())
    b = dsl.parse("data_dim 2\nunitary Z = [[1,0],[0,-1]]\nprocessor p = uproc(id(2), Z)")
    assert b.processor.kind == "uproc" and len(b.processor.args) == 2
    with pytest.raises(dsl.DSLError, match="data_dim required"):
        dsl.parse("processor p = qid(3)")
    assert np.array_equal(dsl.elaborate(a).G, zoo.cnot_processor().G)
    assert np.allclose(dsl.elaborate(b).G, zoo.u_processor([la.PAULI_I, la.PAULI_Z]).G)


def test_positions_do_not_affect_equality():
    a = dsl.parse("data_dim 2\nprocessor p = uproc(px, pz)")
    b = dsl.parse("# shifted\n\ndata_dim   2\nprocessor p =   uproc( px ,pz )")
    assert a == b
    assert a.processor.pos != b.processor.pos


def test_elaboration_errors():
    ast = dsl.ProcessorSpecAst(2, (("A", dsl.MatrixLit(((1, 0), (0, 2)))),),
                               (("p", dsl.ProcNode("uproc", (dsl.Ref("A"),))),))
    with pytest.raises(dsl.DSLError) as e:
        dsl.elaborate(ast)
    assert e.value.code == "E006"
    with pytest.raises(dsl.DSLError) as e:
        dsl.elaborate(dsl.parse("data_dim 3\nprocessor p = vmc(2)"))
    assert e.value.code == "E007"
    with pytest.raises(dsl.DSLError) as e:
        dsl.elaborate(dsl.parse("data_dim 2\nunitary A = px"))
    assert e.value.code == "E012"
    with pytest.raises(dsl.DSLError) as e:
        dsl.elaborate(dsl.parse("data_dim 2\nprocessor p = cnot"), "q")
    assert e.value.code == "E012"


def test_literal_reprojection():
    c = 0.70710678  # decimal rounding of 1/sqrt 2
    text = f"data_dim 2\nunitary H = [[{c}, {c}], [{c}, -{c}]]\nprocessor p = uproc(H, id(2))"
    proc = dsl.elaborate(dsl.parse(text))
    assert la.is_unitary(proc.G, 1e-14)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert la.max_norm(proc.blocks()[0, 0] - h) < 1e-8


def test_builtins():
    assert np.allclose(dsl.parse_unitary("rz(pi/4)"), np.diag(np.exp([-1j * np.pi / 4, 1j * np.pi / 4])))
    assert np.allclose(dsl.parse_unitary("phase(pi)"), -np.eye(2))
    assert np.allclose(dsl.parse_unitary("phase(0.5, 3)"), np.exp(0.5j) * np.eye(3))
    assert np.allclose(dsl.parse_unitary("weyl(3, 1, 2)"), zoo.generalized_pauli(3, 1, 2))
    assert np.allclose(dsl.parse_unitary("[[0, -i], [i, 0]]"), la.PAULI_Y)
    assert np.allclose(dsl.parse_vector("[1, 1-2i, -0.5i]"), [1, 1 - 2j, -0.5j])
    for bad, code in (("weyl(3, 3, 0)", "E011"), ("id(2.5)", "E011"), ("rz(1, 2)", "E010"),
                      ("px(1)", "E010"), ("id", "E010"), ("foo", "E003"), ("rz(1i)", "E011")):
        with pytest.raises(dsl.DSLError) as e:
            dsl.parse_unitary(bad)
        assert e.value.code == code, bad


def test_static_compat():
    ast = dsl.parse("data_dim 2\nunitary I = id(2)\nunitary Z = pz\nunitary P = phase(0.7)\n"
                    "unitary X = px\nunitary Y = py")
    r = dsl.static_compat(ast, ["I", "Z"])
    assert r.minimal_dimension == 2 and r.table[("I", "Z")] == dsl.REQUIRES_ORTHOGONAL
    r = dsl.static_compat(ast, ["I", "P"])
    assert r.minimal_dimension == 1 and isinstance(r.table[("I", "P")], complex)
    assert dsl.static_compat(ast, ["I", "Z", "X", "Y"]).minimal_dimension == 4
    with pytest.raises(dsl.DSLError) as e:
        dsl.static_compat(ast, ["I", "W"])
    assert e.value.code == "E003"


def test_network_embedding_order():
    # wire order: wire 1 is most significant; network(a, b) = a @ b
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    proc = dsl.elaborate(dsl.parse("data_dim 2\nprocessor p = network(hadamard@[2], cnot@[2,1])"))
    cnot_rev = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]])
    assert np.allclose(proc.G, np.kron(np.eye(2), h) @ cnot_rev)


complex_entries = st.complex_numbers(min_magnitude=0, max_magnitude=1e6, allow_nan=False,
                                     allow_infinity=False, allow_subnormal=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(complex_entries, min_size=4, max_size=4),
       st.lists(st.floats(-100, 100, allow_subnormal=False), min_size=1, max_size=1))
def test_serialize_round_trip_values(entries, angle):
    # non-unitary literals are rejected, so go through the AST directly
    rows = ((entries[0], entries[1]), (entries[2], entries[3]))
    lit = dsl.MatrixLit(tuple(tuple(complex(z) for z in r) for r in rows))
    call = dsl.Call("rz", (float(angle[0]),))
    text = dsl._uexpr_text(lit) + "\n" + dsl._uexpr_text(call)
    line1, line2 = text.splitlines()
    p1 = dsl._LineParser(dsl.tokenize_line(line1, 1)).uexpr()
    p2 = dsl._LineParser(dsl.tokenize_line(line2, 2)).uexpr()
    assert p1 == lit and p2 == call
