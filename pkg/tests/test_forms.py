import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qiso.forms import (
    FormsComplex,
    build_dprime,
    build_forms,
    build_Un,
    check_equivariance,
    d_on_word,
    export_matrix,
    import_matrix,
)
from qiso.models import circle_action, circle_model, qdt_action, torus_model
from qiso.toric import AlgebraSpec
from qiso.verifier import ConcreteAction


@pytest.fixture(scope="module")
def circle_forms():
    return build_forms(circle_model(6), 2)


@pytest.fixture(scope="module")
def torus_forms():
    return build_forms(torus_model(6), 2)


@pytest.fixture(scope="module")
def torus_U(torus_forms):
    return build_Un(qdt_action(), torus_forms)


def block(cx, M, degrees):
    idx = np.concatenate([np.arange(a, a + h) for a, h in (cx.offsets[(M, n)] for n in degrees)])
    return idx


# spaces ----------------------------------------------------------------------

def test_torus_dimensions(torus_forms):
    cx = torus_forms[0].complex
    L = len(cx.region)
    assert [sp.dim for sp in torus_forms] == [L, 2 * L, L]
    for M in cx.region:
        assert cx.dims(M) == [1, 2, 1]


def test_circle_dimensions(circle_forms):
    L = len(circle_forms[0].complex.region)
    assert [sp.dim for sp in circle_forms] == [L, L, 0]


def test_degree_zero_is_gns(torus_forms):
    sp = torus_forms[0]
    for M in sp.complex.region:
        assert np.allclose(sp.gram(M), np.eye(1), atol=1e-12)
        assert sp.basis(M).shape[1] == 1


def test_gram_psd_and_basis_orthonormal(torus_forms):
    for sp in torus_forms:
        assert sp.min_gram_eigenvalue() >= -1e-10
        for M in sp.complex.region:
            B = sp.basis(M)
            assert np.allclose(B.conj().T @ B, np.eye(B.shape[1]), atol=1e-9)


def test_region_is_disk(torus_forms):
    cx = torus_forms[0].complex
    assert all(a * a + b * b <= 9 for a, b in cx.region)
    assert (3, 0) in cx.region and (2, 3) not in cx.region


def test_max_degree_validation():
    with pytest.raises(ValueError):
        build_forms(torus_model(6), 0)


@pytest.mark.parametrize("model,degree", [(circle_model(8), 2), (torus_model(4), 1)])
def test_word_radius_two_same_dims(model, degree):
    a = FormsComplex(model, degree, word_radius=1)
    b = FormsComplex(model, degree, word_radius=2)
    for M in a.region:
        assert a.dims(M) == b.dims(M)


# d -----------------------------------------------------------------------------

def test_d_on_words():
    assert d_on_word((0, 0), [(1, 0)]) == ((0, 0), ((0, 0), (1, 0)))
    assert d_on_word((1, 0), [(0, 1)]) == ((0, 0), ((1, 0), (0, 1)))


def test_d_of_unit_vanishes(torus_forms):
    cx = torus_forms[0].complex
    d = cx.d_matrix()
    c0, _ = cx.offsets[((0, 0), 0)]
    assert np.linalg.norm(d[:, c0]) < 1e-14


@pytest.mark.parametrize("fixture", ["circle_forms", "torus_forms"])
def test_d_squared_zero(fixture, request):
    assert request.getfixturevalue(fixture)[0].complex.d_squared_residual() < 1e-8


# D' ----------------------------------------------------------------------------

def test_dprime_self_adjoint(torus_forms):
    D = build_dprime(torus_forms)
    assert np.linalg.norm(D - D.conj().T) < 1e-10


def test_circle_dprime_squared_is_minus_laplacian(circle_forms):
    cx = circle_forms[0].complex
    D2 = np.linalg.matrix_power(build_dprime(circle_forms), 2)
    for M in cx.region:
        i = block(cx, M, [0])
        assert np.allclose(D2[np.ix_(i, i)], M[0] ** 2 * np.eye(len(i)), atol=1e-10)


def test_dprime_kills_constant(torus_forms):
    cx = torus_forms[0].complex
    D = build_dprime(torus_forms)
    c0, _ = cx.offsets[((0, 0), 0)]
    assert np.linalg.norm(D[:, c0]) < 1e-14


def test_torus_dprime_squared_spectrum(torus_forms):
    cx = torus_forms[0].complex
    D = build_dprime(torus_forms)
    D2 = D @ D
    got = np.sort(np.linalg.eigvalsh(D2))
    want = np.sort([a * a + b * b for a, b in cx.region for _ in range(4)])
    assert np.allclose(got, want, atol=1e-9)


# pi ------------------------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.tuples(st.integers(-1, 1), st.integers(-1, 1)), st.tuples(st.integers(-1, 1), st.integers(-1, 1)))
def test_pi_is_star_homomorphism(p, q):
    cx = _TORUS4
    spec = cx.spec
    ph, key = spec.monomial_product((0, p), (0, q))
    pq = tuple(a + b for a, b in zip(p, q))
    mask = np.zeros(cx.dim, dtype=bool)
    for M in cx.region:
        mids = [tuple(a + b for a, b in zip(q, M)), tuple(a + b for a, b in zip(pq, M))]
        if all(cx.in_region(x) for x in mids):
            for n in range(cx.max_degree + 1):
                a, h = cx.offsets[(M, n)]
                mask[a:a + h] = True
    lhs = (cx.pi_operator(p) @ cx.pi_operator(q))[:, mask]
    rhs = (ph * cx.pi_operator(key[1]))[:, mask]
    assert np.allclose(lhs, rhs, atol=1e-10)
    sph, skey = spec.monomial_star((0, p))
    adj_mask = np.zeros(cx.dim, dtype=bool)
    for M in cx.region:
        if cx.in_region(tuple(a + b for a, b in zip(p, M))) and cx.in_region(tuple(a - b for a, b in zip(M, p))):
            for n in range(cx.max_degree + 1):
                a, h = cx.offsets[(M, n)]
                adj_mask[a:a + h] = True
    A = cx.pi_operator(p).conj().T
    B = sph * cx.pi_operator(skey[1])
    assert np.allclose(A[np.ix_(adj_mask, adj_mask)], B[np.ix_(adj_mask, adj_mask)], atol=1e-10)


_TORUS4 = build_forms(torus_model(8), 2)[0].complex


def test_bounded_commutators_stable_in_truncation():
    small = build_forms(torus_model(6), 2)[0].complex
    big = _TORUS4
    for g in ((1, 0), (0, 1)):
        a, b = small.commutator_norm(g), big.commutator_norm(g)
        assert np.isfinite(a) and abs(a - b) < 1e-8
        assert a <= 1 + 1e-8


# U^(n) and equivariance ----------------------------------------------------------

def test_trivial_action_identity(torus_forms):
    act = ConcreteAction.trivial(torus_forms[0].complex.spec)
    u = build_Un(act, torus_forms)
    assert np.allclose(u.matrix, np.eye(u.matrix.shape[0]), atol=1e-12)
    rep = check_equivariance(act, torus_forms, unitary=u)
    assert rep.residual < 1e-14 and rep.passed


def test_qdt_unitary(torus_U):
    assert torus_U.unitarity < 1e-8
    assert torus_U.leakage < 1e-12 and torus_U.well_definedness < 1e-8


def test_circle_unitary(circle_forms):
    u = build_Un(circle_action(), circle_forms)
    assert u.unitarity < 1e-8 and u.leakage < 1e-12


def test_u0_matches_module_unitary(torus_forms, torus_U):
    act = qdt_action()
    cx = torus_forms[0].complex
    r = act.dim
    for M in cx.region:
        c0, _ = cx.offsets[(M, 0)]
        for key, S in act.alpha_monomial((0, M)).items():
            M2 = key[1]
            if not cx.in_region(M2):
                continue
            r0, _ = cx.offsets[(M2, 0)]
            got = torus_U.matrix[r0 * r:(r0 + 1) * r, c0 * r:(c0 + 1) * r]
            assert np.allclose(got, S, atol=1e-10)


def test_equivariance_qdt(torus_forms, torus_U):
    rep = check_equivariance(qdt_action(), torus_forms, unitary=torus_U)
    assert rep.residual < 1e-8 and rep.passed


def test_equivariance_circle(circle_forms):
    rep = check_equivariance(circle_action(), circle_forms)
    assert rep.residual < 1e-8 and rep.passed


def test_action_spec_mismatch(circle_forms):
    with pytest.raises(ValueError):
        build_Un(qdt_action(), circle_forms)


def test_matrix_export_roundtrip():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    doc = export_matrix(A)
    assert doc["shape"] == [3, 4] and doc["data"][1] == [A[0, 1].real, A[0, 1].imag]
    assert np.array_equal(import_matrix(doc), A)
