"""Quotient forms, the operator ``D' = d + d^*`` and the unitaries ``U^(n)``.

A formal n-form is spanned by words ``a_0 d(a_1) ... d(a_n)`` in monomials.
It is represented as ``pi(w) = phase(a_0 a_1 ... a_n) U^M (x) c(m_1) ... c(m_n)``
where ``M`` is the total exponent, so everything splits by ``M``.  For each
``M`` the coefficient lives in ``M_k`` with the normalized Hilbert-Schmidt
inner product.  The Hilbert space of n-forms at ``M`` is ``pi(Omega^n)_M``
modulo the image of ``d`` on ``ker pi`` in degree ``n - 1`` (junk forms);
that quotient is what makes ``d`` well defined.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import SpectralModel
from .verifier import ConcreteAction

NULL_RTOL = 1e-9


def _orth(A: np.ndarray, rtol: float = NULL_RTOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the range; singular values below ``rtol * scale`` are dropped."""
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    ref = (s[0] if s.size else 0.0) if scale is None else scale
    if ref == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    return U[:, s > rtol * ref]


def _null(A: np.ndarray, rtol: float = NULL_RTOL) -> np.ndarray:
    n = A.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * top)) if top > 0 else 0
    return Vh[rank:].conj().T


def _canonical_columns(B: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of ``span(B)`` (Gram-Schmidt on the projector)."""
    if B.shape[1] == 0:
        return B
    P = B @ B.conj().T
    out = []
    for j in range(P.shape[0]):
        col = P[:, j].copy()
        for b in out:
            col -= b * np.vdot(b, col)
        nrm = np.linalg.norm(col)
        if nrm > 1e-6:
            col /= nrm
            if abs(col[j]) > 1e-12:
                col *= abs(col[j]) / col[j]
            out.append(col)
            if len(out) == B.shape[1]:
                break
    return np.array(out).T


@dataclass
class GradedPiece:
    """All data of the complex at one total exponent ``M``."""

    M: tuple
    words: list  # per degree: list of slot tuples (m_1, ..., m_n)
    pi: list  # per degree: k^2 x |words| matrix of pi(w)
    dpi: list  # per degree n: k^2 x |words_{n-1}| matrix of pi(d w), n >= 1
    basis: list  # per degree: orthonormal basis of H^n_M (k^2 x h)
    gram_min: list  # per degree: smallest eigenvalue of the word Gram matrix
    d: list  # per degree n < max: matrix of d from H^n_M to H^{n+1}_M
    preimage: list  # per degree: |words| x h least-norm preimages of basis vectors


class FormsComplex:
    """Graded pieces of the quotient forms, built lazily per total exponent."""

    def __init__(self, model: SpectralModel, max_degree: int, word_radius: int = 1, radius: int | None = None):
        if max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        if len(model.spec.summands) != 1:
            raise ValueError("forms are built for single-summand algebras")
        self.model = model
        self.spec = model.spec
        self.max_degree = max_degree
        self.word_radius = word_radius
        self.radius = model.truncation // 2 if radius is None else radius
        self.k = model.k
        self._pieces: dict = {}
        self._phase_cache: dict = {}
        self._cliff_cache: dict = {}
        d = model.rank
        box = [m for m in itertools.product(range(-word_radius, word_radius + 1), repeat=d) if any(m)]
        self._slots = [[()]]
        for n in range(1, max_degree + 2):
            self._slots.append(list(itertools.product(box, repeat=n)))

    # region -----------------------------------------------------------------
    @cached_property
    def region(self) -> list:
        d = self.model.rank
        R = self.radius
        pts = [m for m in itertools.product(range(-R, R + 1), repeat=d) if sum(x * x for x in m) <= R * R]
        return sorted(pts, key=lambda m: (sum(x * x for x in m), m))

    def in_region(self, M) -> bool:
        return sum(x * x for x in M) <= self.radius ** 2

    # words -----------------------------------------------------------------
    def word_phase(self, monomials) -> complex:
        monomials = tuple(tuple(m) for m in monomials)
        hit = self._phase_cache.get(monomials)
        if hit is None:
            hit = 1.0 + 0j
            key = self.spec.identity_key(0)
            for m in monomials:
                p, key = self.spec.monomial_product(key, (0, m))
                hit *= p
            self._phase_cache[monomials] = hit
        return hit

    def clifford_product(self, slots) -> np.ndarray:
        slots = tuple(tuple(m) for m in slots)
        hit = self._cliff_cache.get(slots)
        if hit is None:
            hit = np.eye(self.k, dtype=complex)
            for m in slots:
                hit = hit @ self.model.clifford(m)
            self._cliff_cache[slots] = hit
        return hit

    def pi_vector(self, a0, slots) -> np.ndarray:
        """``pi(a_0 d(a_1) ... d(a_n))`` as a vector in ``C^{k^2}`` (normalized HS)."""
        ph = self.word_phase([a0, *slots])
        return ph * self.clifford_product(slots).reshape(-1) / math.sqrt(self.k)

    def a0_of(self, M, slots) -> tuple:
        return tuple(M[i] - sum(s[i] for s in slots) for i in range(len(M)))

    # pieces ----------------------------------------------------------------
    def piece(self, M) -> GradedPiece:
        M = tuple(int(x) for x in M)
        hit = self._pieces.get(M)
        if hit is not None:
            return hit
        top = self.max_degree + 1
        words, pi, dpi = [], [], [None]
        for n in range(top + 1):
            ws = self._slots[n]
            words.append(ws)
            cols = [self.pi_vector(self.a0_of(M, w), w) for w in ws]
            pi.append(np.array(cols).T if cols else np.zeros((self.k ** 2, 0), dtype=complex))
        for n in range(1, top + 1):
            cols = []
            for w in words[n - 1]:
                a0 = self.a0_of(M, w)
                cols.append(self.pi_vector((0,) * len(M), (a0, *w)))
            dpi.append(np.array(cols).T)
        basis, gram_min, preimage = [], [], []
        for n in range(top + 1):
            G = pi[n].conj().T @ pi[n]
            gram_min.append(float(np.min(np.linalg.eigvalsh(G))) if G.size else 0.0)
            image = _orth(pi[n])
            if n == 0:
                junk = np.zeros((self.k ** 2, 0), dtype=complex)
            else:
                # d-words of degree n - 1 carry an unrestricted slot; d kills them
                ext = pi[n - 1] if n == 1 else np.hstack([pi[n - 1], dpi[n - 1]])
                K = _null(ext)[: pi[n - 1].shape[1]]
                junk = _orth(dpi[n] @ K) if K.size else np.zeros((self.k ** 2, 0), dtype=complex)
            if junk.shape[1]:
                image = _orth(image - junk @ (junk.conj().T @ image), scale=1.0)
            B = _canonical_columns(image)
            basis.append(B)
            preimage.append(np.linalg.pinv(pi[n], rcond=NULL_RTOL) @ B if B.shape[1] else np.zeros((pi[n].shape[1], 0)))
        dmats = []
        for n in range(top):
            dmats.append(basis[n + 1].conj().T @ dpi[n + 1] @ preimage[n])
        piece = GradedPiece(M, words, pi, dpi, basis, gram_min, dmats, preimage)
        self._pieces[M] = piece
        return piece

    def dims(self, M) -> list:
        p = self.piece(M)
        return [p.basis[n].shape[1] for n in range(self.max_degree + 1)]

    # assembled operators --------------------------------------------------
    @cached_property
    def index(self) -> list:
        """``(M, degree, i)`` for every basis vector on the region, in order."""
        out = []
        for M in self.region:
            for n, h in enumerate(self.dims(M)):
                out.extend((M, n, i) for i in range(h))
        return out

    @cached_property
    def offsets(self) -> dict:
        out, pos = {}, 0
        for M in self.region:
            for n, h in enumerate(self.dims(M)):
                out[(M, n)] = (pos, h)
                pos += h
        return out

    @property
    def dim(self) -> int:
        return len(self.index)

    def d_matrix(self) -> np.ndarray:
        N = self.dim
        out = np.zeros((N, N), dtype=complex)
        for M in self.region:
            p = self.piece(M)
            for n in range(self.max_degree):
                r0, rh = self.offsets[(M, n + 1)]
                c0, ch = self.offsets[(M, n)]
                out[r0:r0 + rh, c0:c0 + ch] = p.d[n]
        return out

    def dprime(self) -> np.ndarray:
        d = self.d_matrix()
        return d + d.conj().T

    def d_squared_residual(self) -> float:
        worst = 0.0
        for M in self.region:
            p = self.piece(M)
            for n in range(self.max_degree):
                dd = p.d[n + 1] @ p.d[n]
                if dd.size:
                    worst = max(worst, float(np.linalg.norm(dd, 2)))
        return worst

    def pi_operator(self, p) -> np.ndarray:
        """Left multiplication by ``U^p`` restricted to the region (zero where it leaves)."""
        p = tuple(p)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for M in self.region:
            M2 = tuple(a + b for a, b in zip(p, M))
            if not self.in_region(M2):
                continue
            ph, _ = self.spec.monomial_product((0, p), (0, M))
            src, dst = self.piece(M), self.piece(M2)
            for n in range(self.max_degree + 1):
                r0, rh = self.offsets[(M2, n)]
                c0, ch = self.offsets[(M, n)]
                out[r0:r0 + rh, c0:c0 + ch] = ph * (dst.basis[n].conj().T @ src.basis[n])
        return out

    def commutator_norm(self, p) -> float:
        """``||[D', pi(U^p)]||`` on vectors whose image stays in the region."""
        P = self.pi_operator(p)
        D = self.dprime()
        mask = np.zeros(self.dim, dtype=bool)
        for M in self.region:
            M2 = tuple(a + b for a, b in zip(p, M))
            M3 = tuple(a - b for a, b in zip(M, p))
            if self.in_region(M2) and self.in_region(M3):
                for n in range(self.max_degree + 1):
                    c0, ch = self.offsets[(M, n)]
                    mask[c0:c0 + ch] = True
        C = (D @ P - P @ D)[:, mask]
        return float(np.linalg.norm(C, 2)) if C.size else 0.0


@dataclass
class FormsSpace:
    """Degree-n quotient forms over the region."""

    complex: FormsComplex
    degree: int

    @property
    def dims(self) -> dict:
        return {M: self.complex.dims(M)[self.degree] for M in self.complex.region}

    @property
    def dim(self) -> int:
        return sum(self.dims.values())

    def gram(self, M) -> np.ndarray:
        p = self.complex.piece(M).pi[self.degree]
        return p.conj().T @ p

    def basis(self, M) -> np.ndarray:
        return self.complex.piece(M).basis[self.degree]

    def min_gram_eigenvalue(self) -> float:
        return min(self.complex.piece(M).gram_min[self.degree] for M in self.complex.region)


def build_forms(model: SpectralModel, max_degree: int, word_radius: int = 1, radius: int | None = None) -> list:
    cx = FormsComplex(model, max_degree, word_radius, radius)
    spaces = [FormsSpace(cx, n) for n in range(max_degree + 1)]
    for sp in spaces:
        if sp.min_gram_eigenvalue() < -1e-10:
            raise ValueError(f"Gram matrix of degree {sp.degree} is indefinite")
    return spaces


def build_dprime(spaces) -> np.ndarray:
    return spaces[0].complex.dprime()


def d_on_word(a0, slots) -> tuple:
    """``d(a_0 d(a_1) ... d(a_n)) = 1 d(a_0) d(a_1) ... d(a_n)`` as a formal word."""
    zero = tuple(0 for _ in a0)
    return zero, (tuple(a0), *[tuple(s) for s in slots])


# U^(n) -------------------------------------------------------------------------

@dataclass
class UnitaryData:
    matrix: np.ndarray  # (dim * r) x (dim * r)
    leakage: float
    well_definedness: float
    unitarity: float


def _sweedler(cx: FormsComplex, action: ConcreteAction, a0, slots) -> dict:
    """``sum pi(b_0 d(b_1) ... d(b_n)) (x) S_0 S_1 ... S_n`` grouped by total exponent."""
    factors = [action.alpha_monomial((0, tuple(a0)))] + [action.alpha_monomial((0, tuple(s))) for s in slots]
    out: dict = {}
    for combo in itertools.product(*(f.items() for f in factors)):
        keys = [kk[1] for kk, _ in combo]
        S = combo[0][1]
        for _, m in combo[1:]:
            S = S @ m
        M2 = tuple(sum(k[i] for k in keys) for i in range(len(keys[0])))
        vec = cx.pi_vector(keys[0], keys[1:])
        blk = vec[:, None, None] * S[None, :, :]
        if M2 in out:
            out[M2] += blk
        else:
            out[M2] = blk
    return out


def build_Un(action: ConcreteAction, spaces, tol: float = 1e-8) -> UnitaryData:
    """The unitary ``U`` on ``(+)_n H^n (x) C^r`` built from the Sweedler formula.

    Also measures how far the formula is from being well defined (images of
    formal words with ``pi = 0``) and any weight escaping the region.
    """
    cx: FormsComplex = spaces[0].complex
    if action.spec != cx.spec:
        raise ValueError("action and forms use different algebras")
    r = action.dim
    N = cx.dim
    U = np.zeros((N * r, N * r), dtype=complex)
    leak = 0.0
    wd = 0.0
    for M in cx.region:
        p = cx.piece(M)
        for n in range(cx.max_degree + 1):
            c0, ch = cx.offsets[(M, n)]
            if ch == 0:
                continue
            words = p.words[n]
            stacked: dict = {}
            for wi, w in enumerate(words):
                for M2, blk in _sweedler(cx, action, cx.a0_of(M, w), w).items():
                    arr = stacked.get(M2)
                    if arr is None:
                        arr = stacked[M2] = np.zeros((len(words),) + blk.shape, dtype=complex)
                    arr[wi] = blk
            K = _null(p.pi[n])
            for M2, arr in stacked.items():
                img = np.einsum("wc,waij->caij", p.preimage[n], arr)
                ker = np.einsum("wc,waij->caij", K, arr) if K.size else None
                if not cx.in_region(M2):
                    leak = max(leak, float(np.max(np.abs(img))))
                    continue
                B = cx.piece(M2).basis[n]
                proj = np.einsum("ab,caij->cbij", B.conj(), img)
                if ker is not None and B.shape[1]:
                    wd = max(wd, float(np.max(np.abs(np.einsum("ab,caij->cbij", B.conj(), ker)))))
                r0, rh = cx.offsets[(M2, n)]
                block = proj.transpose(1, 2, 0, 3).reshape(rh * r, ch * r)
                U[r0 * r:(r0 + rh) * r, c0 * r:(c0 + ch) * r] = block
    eye = np.eye(N * r)
    unit = max(float(np.linalg.norm(U.conj().T @ U - eye, 2)), float(np.linalg.norm(U @ U.conj().T - eye, 2)))
    return UnitaryData(U, leak, wd, unit)


@dataclass
class EquivarianceReport:
    residual: float
    unitarity: float
    leakage: float
    well_definedness: float
    d_squared: float
    tolerance: float = 1e-8

    @property
    def passed(self) -> bool:
        return all(v < self.tolerance for v in (self.residual, self.unitarity, self.leakage, self.well_definedness, self.d_squared))

    def to_json(self) -> dict:
        return {
            "equivariance_residual": self.residual,
            "unitarity_residual": self.unitarity,
            "leakage": self.leakage,
            "well_definedness": self.well_definedness,
            "d_squared": self.d_squared,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def check_equivariance(action: ConcreteAction, spaces, tol: float = 1e-8, unitary: UnitaryData | None = None) -> EquivarianceReport:
    """Operator-norm residual of ``U (D' (x) 1) - (D' (x) 1) U`` on the region."""
    cx: FormsComplex = spaces[0].complex
    u = unitary or build_Un(action, spaces)
    Dp = np.kron(cx.dprime(), np.eye(action.dim))
    res = float(np.linalg.norm(u.matrix @ Dp - Dp @ u.matrix, 2))
    return EquivarianceReport(res, u.unitarity, u.leakage, u.well_definedness, cx.d_squared_residual(), tol)


def export_matrix(A: np.ndarray) -> dict:
    """Row-major ``[re, im]`` pairs."""
    A = np.asarray(A, dtype=complex)
    return {"shape": list(A.shape), "data": [[float(z.real), float(z.imag)] for z in A.reshape(-1)]}


def import_matrix(doc: dict) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in doc["data"]])
    return flat.reshape(doc["shape"])
