import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qiso.models import circle_target_presentation, qdt_presentation
from qiso.symbolic import (
    NOT_REDUCED,
    REDUCED,
    NcPoly,
    Presentation,
    RewritingSystem,
    SymbolTable,
    TensorPoly,
    au_q_presentation,
    check_coproduct,
    free_product,
    implies,
    reduce,
    sym,
    tensor,
)


def canon_set(pres, polys):
    return {pres.table.canonical(p) for p in polys}


# NcPoly basics --------------------------------------------------------------

def test_ncpoly_arithmetic():
    a, b = sym("a"), sym("b")
    p = (a + 2) * (b - 1)
    assert p == a * b - a + 2 * b - 2
    assert (a * b).adj() == b.adj() * a.adj()
    assert (1j * a).adj() == -1j * a.adj()
    assert (a - a).is_zero() and p.degree == 2
    assert p.symbols() == {"a", "b"}


def test_ncpoly_substitute_and_json():
    a, b = sym("a"), sym("b")
    p = a * b.adj() + 3j
    q = p.substitute({"a": b + 1})
    assert q == b * b.adj() + b.adj() + 3j
    assert NcPoly.from_json(p.to_json()) == p


def test_tensor_poly_product_and_json():
    a, b = sym("a"), sym("b")
    t = tensor(a, b) + tensor(b, a)
    assert (t * TensorPoly.one(2) - t).is_zero()
    assert (t - t).is_zero()
    assert (TensorPoly.from_json(2, t.to_json()) - t).is_zero()
    assert (t.adj() - (tensor(a.adj(), b.adj()) + tensor(b.adj(), a.adj()))).is_zero()


def test_deglex_adjoints_after_plain():
    table = SymbolTable(["a", "b"])
    a, b = sym("a"), sym("b")
    assert table.leading_word(a + b) == table.leading_word(b)
    assert table.leading_word(a * a + b) == table.leading_word(a * a)
    assert table.leading_word(a.adj() + b) == table.leading_word(a.adj())


# A_u(Q) ---------------------------------------------------------------------

def test_au_1_is_circle_algebra():
    pres = au_q_presentation(1)
    u = sym("u[1,1]")
    assert len(pres.relations) == 4
    assert reduce(u * u.adj() - 1, pres, 2).is_zero()
    assert reduce(u.adj() * u - 1, pres, 2).is_zero()
    assert canon_set(pres, pres.relations) == canon_set(pres, [u * u.adj() - 1, u.adj() * u - 1])


def test_au_i2_biunitary():
    pres = au_q_presentation(2)
    assert len(pres.relations) == 16
    u = {(i, j): sym(f"u[{i},{j}]") for i in (1, 2) for j in (1, 2)}
    for i, j in itertools.product((1, 2), repeat=2):
        # ubar is unitary: sum_k u_ik^* u_jk = delta_ij
        bar = sum((u[i, k].adj() * u[j, k] for k in (1, 2)), NcPoly())
        assert reduce(bar - (1 if i == j else 0), pres, 2).is_zero()


def test_au_scalar_q_matches_identity():
    a, b = au_q_presentation(1), au_q_presentation(1, [[2.0]])
    assert canon_set(a, a.relations) == canon_set(b, b.relations)


def test_au_singular_q_rejected():
    with pytest.raises(ValueError):
        au_q_presentation(2, [[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        au_q_presentation(2, np.eye(3))


def test_au_adjoint_closed_for_identity():
    assert au_q_presentation(2).is_adjoint_closed()


@settings(max_examples=6, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_au_closure_is_adjoint_closed(n, seed):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 2 * np.eye(n)
    pres = au_q_presentation(n, Q)
    closed = Presentation(pres.table, pres.closed_relations())
    assert closed.is_adjoint_closed()
    assert len(pres.relations) == 4 * n * n


@settings(max_examples=6, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_coproduct_random_q(n, seed):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 2 * np.eye(n)
    assert check_coproduct(au_q_presentation(n, Q), 4).passed


# free products --------------------------------------------------------------

def test_free_product_trivial_cases():
    p = au_q_presentation(2)
    assert free_product([p]) is p
    unit = free_product([])
    assert len(unit.table) == 0 and unit.relations == []


def test_free_product_of_two_blocks():
    p = au_q_presentation(2)
    fp = free_product([p, p])
    assert len(fp.table) == 8
    assert len(fp.relations) == 32
    assert len(fp.coproduct) == 8
    x, y = sym("u[1,1]#0"), sym("u[1,1]#1")
    assert not reduce(x * y - y * x, fp, 2).is_zero()
    assert check_coproduct(fp, 4).passed


def test_free_product_disjoint_names_kept():
    fp = free_product([au_q_presentation(1, prefix="a"), au_q_presentation(1, prefix="b")])
    assert fp.table.names == ("a[1,1]", "b[1,1]") or list(fp.table.names) == ["a[1,1]", "b[1,1]"]


# reduce / implies -------------------------------------------------------------

def test_saturation_finds_overlap_consequence():
    V, P = sym("V"), sym("P")
    x = V * P * V.adj() - P
    assert not reduce(x, CIRCLE, 4).is_zero()
    assert reduce(x, CIRCLE4, 4).is_zero()


def test_reduce_examples():
    a, b = sym("A"), sym("B")
    pres = Presentation(SymbolTable(["A", "B"]), [a * b, b * a])
    assert reduce(a * b + b * a, pres, 2).is_zero()
    circle = circle_target_presentation()
    V, P = sym("V"), sym("P")
    assert reduce(V * P - P * V, circle, 4).is_zero()


def test_implies_examples():
    u = sym("u")
    empty = Presentation(SymbolTable(["u"]), [])
    (v,) = implies(empty, [u * u.adj() - 1], 2)
    assert v.status == NOT_REDUCED and not v.reduced
    P = sym("P")
    proj = Presentation(SymbolTable(["P"]), [P * P - P])
    (v,) = implies(proj, [P * P * P - P], 3)
    assert v.status == REDUCED


def test_implies_with_substitution():
    V, P = sym("V"), sym("P")
    circle = circle_target_presentation()
    A1, Am = sym("A[1]"), sym("A[-1]")
    sub = {"A[1]": V * P, "A[-1]": V - V * P}
    verdicts = implies(circle, [A1 * Am + Am * A1, A1.adj() * A1 + Am.adj() * Am - 1], 4, sub)
    assert all(v.reduced for v in verdicts)


def test_degree_bound_exceeded_is_reported():
    a = sym("a")
    pres = Presentation(SymbolTable(["a"]), [a * a - a * a * a])
    nf, exceeded = pres.rewriter.normal_form(a * a * a * a, degree_bound=3)
    assert exceeded


def test_inconsistent_relations_rejected():
    a = sym("a")
    with pytest.raises(ValueError):
        RewritingSystem(SymbolTable(["a"]), [a - 1, a - 2])


def test_presentation_json_roundtrip():
    pres = qdt_presentation()
    back = Presentation.from_json(pres.to_json())
    assert back.table == pres.table
    assert canon_set(pres, back.relations) == canon_set(pres, pres.relations)
    for g in pres.table.names:
        assert (back.delta(g) - pres.delta(g)).is_zero()


def test_presentation_rejects_undeclared_symbols():
    doc = Presentation(SymbolTable(["a"]), [sym("b") - 1]).to_json()
    with pytest.raises(ValueError):
        Presentation.from_json(doc)


# coproducts -----------------------------------------------------------------

def test_coproduct_au_i2():
    rep = check_coproduct(au_q_presentation(2), 4)
    assert rep.coassociative and rep.ideal_stable and rep.passed


def test_coproduct_qdt():
    rep = check_coproduct(qdt_presentation(), 4)
    assert rep.coassociative and rep.passed


def test_coproduct_circle_target():
    assert check_coproduct(circle_target_presentation(), 4).passed


def test_coproduct_missing_rule():
    pres = au_q_presentation(2)
    pres = Presentation(pres.table, pres.relations, {}, pres.name)
    with pytest.raises(KeyError):
        check_coproduct(pres, 4)


def test_grouplike_rule_is_not_a_hopf_ideal():
    pres = au_q_presentation(2)
    cop = {g: tensor(sym(g), sym(g)) for g in pres.table.names}
    rep = check_coproduct(Presentation(pres.table, pres.relations, cop), 4)
    assert rep.coassociative
    assert not rep.ideal_stable and not rep.passed


def test_transposed_rule_breaks_coassociativity():
    pres = au_q_presentation(2)
    u = lambda i, j: sym(f"u[{i},{j}]")
    cop = {f"u[{i},{j}]": sum((tensor(u(k, j), u(i, k)) for k in (1, 2)), TensorPoly(2))
           for i in (1, 2) for j in (1, 2)}
    cop = {g: t for g, t in cop.items()}
    # flip one generator only so the rule set is inconsistent
    cop["u[1,2]"] = tensor(u(1, 1), u(1, 2)) + tensor(u(2, 1), u(2, 2))
    rep = check_coproduct(Presentation(pres.table, pres.relations, cop), 4)
    assert not rep.coassociative


# properties -------------------------------------------------------------------

LETTERS = [("V", False), ("V", True), ("P", False), ("P", True)]


@st.composite
def polys(draw, max_deg=2):
    terms = {}
    for _ in range(draw(st.integers(1, 4))):
        n = draw(st.integers(0, max_deg))
        w = tuple(draw(st.sampled_from(LETTERS)) for _ in range(n))
        c = complex(draw(st.integers(-3, 3)), draw(st.integers(-3, 3)))
        terms[w] = terms.get(w, 0) + c
    return NcPoly(terms)


CIRCLE = circle_target_presentation()
CIRCLE4 = CIRCLE.saturated(4)


@settings(max_examples=60, deadline=None)
@given(polys(3))
def test_reduce_idempotent(p):
    once = reduce(p, CIRCLE, 6)
    assert reduce(once, CIRCLE, 6) == once


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_reduce_homomorphism_mod_ideal(p, q):
    lhs = reduce(p * q, CIRCLE4, 4)
    rhs = reduce(reduce(p, CIRCLE4, 4) * reduce(q, CIRCLE4, 4), CIRCLE4, 4)
    assert (lhs - rhs).is_zero()


@settings(max_examples=40, deadline=None)
@given(polys())
def test_reduce_deterministic(p):
    fresh = circle_target_presentation()
    assert reduce(p, fresh, 6) == reduce(p, CIRCLE, 6)
