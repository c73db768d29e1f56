"""Spectral triples on toric algebras, their one-forms and Laplacians.

The Dirac operators handled here have the form ``D = sum_j gamma_j (x) d_j``
where ``d_j`` multiplies ``U^m`` by ``m_j`` and the ``gamma_j`` are fixed
``k x k`` matrices.  Hence ``[D, a] = c(m) (x) a`` on a monomial ``a = U^m``
with ``c(m) = sum_j m_j gamma_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .toric import (
    AlgebraElement,
    AlgebraSpec,
    TruncationError,
    gns_inner,
    key_radius,
    multiply,
    star,
)

DIRAC_KINDS = ("circle", "torus2")


def dirac_gammas(kind: str) -> np.ndarray:
    """Clifford data ``gamma_j`` for a named Dirac family, shape ``(d, k, k)``."""
    if kind == "circle":
        return np.array([[[1.0 + 0j]]])
    if kind == "torus2":
        g1 = np.array([[0, 1], [1, 0]], dtype=complex)
        g2 = np.array([[0, 1j], [-1j, 0]], dtype=complex)
        return np.stack([g1, g2])
    raise ValueError(f"unknown Dirac kind {kind!r}; expected one of {DIRAC_KINDS}")


@dataclass(frozen=True)
class SpectralModel:
    """A truncated spectral triple ``(A, L^2(A, tau) (x) C^k, D)``."""

    spec: AlgebraSpec
    truncation: int
    kind: str = "circle"
    gammas: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.truncation < 0:
            raise ValueError("truncation radius must be non-negative")
        gammas = dirac_gammas(self.kind) if self.gammas is None else np.asarray(self.gammas, dtype=complex)
        d = gammas.shape[0]
        for s, summand in enumerate(self.spec.summands):
            if summand.rank != d:
                raise ValueError(f"summand {s} has rank {summand.rank} but the Dirac family needs rank {d}")
        for g in gammas:
            if not np.allclose(g, g.conj().T, atol=1e-14):
                raise ValueError("gamma matrices must be self-adjoint")
        object.__setattr__(self, "gammas", gammas)

    @classmethod
    def circle(cls, truncation: int) -> "SpectralModel":
        return cls(AlgebraSpec.circle(), truncation, "circle")

    @classmethod
    def torus(cls, truncation: int, theta=0) -> "SpectralModel":
        return cls(AlgebraSpec.torus(theta), truncation, "torus2")

    @property
    def k(self) -> int:
        return self.gammas.shape[1]

    @property
    def rank(self) -> int:
        return self.gammas.shape[0]

    def clifford(self, m) -> np.ndarray:
        """``c(m) = sum_j m_j gamma_j``."""
        return np.tensordot(np.asarray(m, dtype=float), self.gammas, axes=1)

    def safe_radius(self, degree: int = 0) -> int:
        return self.truncation - degree

    def basis_keys(self, radius: int | None = None) -> list:
        return self.spec.keys_in_box(self.truncation if radius is None else radius)

    def to_json(self) -> dict:
        return {"algebra": self.spec.to_json(), "dirac": {"kind": self.kind}, "truncation": self.truncation}

    @classmethod
    def from_json(cls, doc: dict, truncation: int | None = None) -> "SpectralModel":
        spec = AlgebraSpec.from_json(doc["algebra"])
        kind = doc.get("dirac", {}).get("kind", "circle")
        n = int(doc.get("truncation", 0)) if truncation is None else int(truncation)
        return cls(spec, n, kind)


class OneForm:
    """A ``k x k`` operator matrix whose entries are algebra elements."""

    def __init__(self, model: SpectralModel, blocks: dict | None = None):
        self.model = model
        self.blocks = {pq: x for pq, x in (blocks or {}).items() if not x.is_zero(0.0)}

    def block(self, p: int, q: int) -> AlgebraElement:
        return self.blocks.get((p, q), AlgebraElement.zero(self.model.spec))

    @property
    def radius(self) -> int:
        return max((x.radius for x in self.blocks.values()), default=0)

    def __add__(self, other: "OneForm") -> "OneForm":
        out = dict(self.blocks)
        for pq, x in other.blocks.items():
            out[pq] = out[pq] + x if pq in out else x
        return OneForm(self.model, out)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return self + other.scale(-1)

    def scale(self, z) -> "OneForm":
        return OneForm(self.model, {pq: x.scale(z) for pq, x in self.blocks.items()})

    def left(self, a: AlgebraElement) -> "OneForm":
        """``a . eta`` with ``a`` acting diagonally."""
        return OneForm(self.model, {pq: multiply(a, x) for pq, x in self.blocks.items()})

    def right(self, c: AlgebraElement) -> "OneForm":
        return OneForm(self.model, {pq: multiply(x, c) for pq, x in self.blocks.items()})

    def max_abs(self) -> float:
        return max((x.max_abs() for x in self.blocks.values()), default=0.0)


def d_D(model: SpectralModel, a: AlgebraElement) -> OneForm:
    """The commutator ``[D, a]`` as a one-form."""
    if a.radius > model.truncation:
        raise TruncationError(f"element radius {a.radius} exceeds truncation {model.truncation}")
    k = model.k
    blocks: dict = {}
    for key, coeff in a.terms.items():
        c = model.clifford(key[1])
        for p in range(k):
            for q in range(k):
                if c[p, q] != 0:
                    blocks.setdefault((p, q), {})
                    blocks[(p, q)][key] = blocks[(p, q)].get(key, 0j) + c[p, q] * coeff
    return OneForm(model, {pq: AlgebraElement(model.spec, t) for pq, t in blocks.items()})


def oneform_inner(eta: OneForm, eta2: OneForm) -> complex:
    """``(tr_k / k (x) tau)(eta^* eta2)``."""
    k = eta.model.k
    total = 0j
    for pq, x in eta.blocks.items():
        if pq in eta2.blocks:
            total += gns_inner(x, eta2.blocks[pq])
    return total / k


@dataclass
class LaplacianData:
    """Grouped spectrum of the Laplacian, eigenvalues in descending order."""

    eigenvalues: list
    eigenspaces: list  # list of lists of AlgebraElement
    vectors: list = field(repr=False, default_factory=list)  # GNS coordinates, one array per space

    @property
    def multiplicities(self) -> list:
        return [len(v) for v in self.eigenspaces]

    def flat(self):
        for i, (lam, space) in enumerate(zip(self.eigenvalues, self.eigenspaces)):
            for e in space:
                yield i, lam, e


class Laplacian:
    """``L = -d_D^* d_D`` on the truncated GNS space, with its eigendata.

    Coordinates are taken in the GNS-orthonormal basis of rescaled monomials
    ``U^m / sqrt(w_s)``.
    """

    def __init__(self, model: SpectralModel, matrix: np.ndarray, keys: list, data: LaplacianData):
        self.model = model
        self.matrix = matrix
        self.keys = keys
        self.index = {key: i for i, key in enumerate(keys)}
        self.scales = np.array([math.sqrt(model.spec.weights[key[0]]) for key in keys])
        self.data = data

    @property
    def dim(self) -> int:
        return len(self.keys)

    def coords(self, x: AlgebraElement) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        for key, c in x.terms.items():
            i = self.index.get(key)
            if i is None:
                raise TruncationError(f"monomial {key} lies outside the truncation radius {self.model.truncation}")
            v[i] = c * self.scales[i]
        return v

    def element(self, v: np.ndarray) -> AlgebraElement:
        terms = {key: v[i] / self.scales[i] for i, key in enumerate(self.keys) if v[i] != 0}
        return AlgebraElement(self.model.spec, terms)

    def apply(self, x: AlgebraElement) -> AlgebraElement:
        return self.element(self.matrix @ self.coords(x))

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return self.apply(x)

    def eigenvalue_of(self, x: AlgebraElement, tol: float = 1e-9) -> float:
        """Eigenvalue of an eigenvector ``x``; raises if ``x`` is not one."""
        v = self.coords(x)
        nrm = np.vdot(v, v).real
        if nrm == 0:
            raise ValueError("the zero vector has no eigenvalue")
        w = self.matrix @ v
        lam = (np.vdot(v, w) / nrm).real
        if np.linalg.norm(w - lam * v) > tol * max(1.0, math.sqrt(nrm) * abs(lam)):
            raise ValueError(f"{x!r} is not an eigenvector of the Laplacian")
        return float(lam)


def derivation_blocks(model: SpectralModel, keys: list) -> dict:
    """Diagonals of the block maps ``x -> [D, x]_{pq}`` in the GNS basis."""
    k = model.k
    exps = np.array([key[1] for key in keys], dtype=float).reshape(len(keys), model.rank)
    cl = np.einsum("nj,jpq->npq", exps, model.gammas)
    return {(p, q): cl[:, p, q] for p in range(k) for q in range(k) if np.any(cl[:, p, q] != 0)}


def oneform_gram(model: SpectralModel, keys: list) -> np.ndarray:
    """Gram matrix ``<d_D e_i, d_D e_j>`` over the GNS basis ``keys``.

    Each ``d_D e_i`` is embedded blockwise into ``C^{k x k} (x) C^{keys}``; the
    normalized matrix trace then becomes a Euclidean inner product divided by k.
    """
    n = len(keys)
    rows = []
    for diag in derivation_blocks(model, keys).values():
        rows.append(np.diag(diag))
    if not rows:
        return np.zeros((n, n), dtype=complex)
    F = np.vstack(rows)
    return (F.conj().T @ F) / model.k


def build_laplacian(model: SpectralModel, group_tol: float = 1e-7, symmetry_tol: float = 1e-10) -> Laplacian:
    keys = model.basis_keys()
    G = oneform_gram(model, keys)
    asym = np.linalg.norm(G - G.conj().T)
    if asym > symmetry_tol:
        raise ValueError(f"Gram matrix is not Hermitian (defect {asym:.3g})")
    L = -G
    data = _eigendata(model, L, keys, group_tol)
    return Laplacian(model, L, keys, data)


def _eigendata(model: SpectralModel, L: np.ndarray, keys: list, group_tol: float) -> LaplacianData:
    evals, evecs = np.linalg.eigh(L)
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]
    groups: list = []
    for i, lam in enumerate(evals):
        if groups and abs(lam - groups[-1][0]) <= group_tol * max(1.0, abs(lam)):
            groups[-1][1].append(i)
        else:
            groups.append([lam, [i]])
    scales = np.array([math.sqrt(model.spec.weights[key[0]]) for key in keys])
    eigenvalues, spaces, vectors = [], [], []
    for lam, idx in groups:
        V = evecs[:, idx]
        B = _canonical_basis(V)
        vals = [float(np.mean(evals[idx]))]
        eigenvalues.append(_snap(vals[0]))
        vectors.append(B)
        elems = []
        for col in B.T:
            terms = {keys[j]: col[j] / scales[j] for j in np.flatnonzero(np.abs(col) > 1e-13)}
            elems.append(AlgebraElement(model.spec, terms))
        spaces.append(elems)
    return LaplacianData(eigenvalues, spaces, vectors)


def _snap(x: float) -> float:
    r = round(x)
    return float(r) if abs(x - r) < 1e-9 else x


def _canonical_basis(V: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(V)`` independent of how ``eigh`` rotated it.

    Gram-Schmidt runs over the columns of the projector in basis order, so a
    monomial eigenspace comes out as its monomials in index order.
    """
    d = V.shape[1]
    P = V @ V.conj().T
    out = []
    for j in range(P.shape[0]):
        col = P[:, j].copy()
        for b in out:
            col -= b * np.vdot(b, col)
        nrm = np.linalg.norm(col)
        if nrm > 1e-6:
            col /= nrm
            pivot = col[j]
            if abs(pivot) > 1e-12:
                col *= abs(pivot) / pivot
            col[np.abs(col) < 1e-15] = 0
            out.append(col)
            if len(out) == d:
                break
    return np.array(out).T


def dstar_formula(lap: Laplacian, b: AlgebraElement, c: AlgebraElement) -> AlgebraElement:
    """``d_D^*(d_D(b) c)`` expressed through the Laplacian.

    Equals ``1/2 (b L(c) - L(b) c - L(bc))``; with ``c = 1`` this reduces to
    ``-L(b) = d_D^* d_D b``.
    """
    _check_product_radius(lap, b, c)
    bc = multiply(b, c)
    return (multiply(b, lap(c)) - multiply(lap(b), c) - lap(bc)).scale(0.5)


def dstar_direct(model: SpectralModel, eta: OneForm, radius: int | None = None) -> AlgebraElement:
    """Independent oracle: apply the conjugate transpose of the ``d_D`` matrix to ``eta``."""
    R = max(eta.radius, 0) if radius is None else radius
    keys = model.basis_keys(R)
    index = {key: i for i, key in enumerate(keys)}
    scales = np.array([math.sqrt(model.spec.weights[key[0]]) for key in keys])
    out = np.zeros(len(keys), dtype=complex)
    for pq, diag in derivation_blocks(model, keys).items():
        x = eta.block(*pq)
        v = np.zeros(len(keys), dtype=complex)
        for key, c in x.terms.items():
            v[index[key]] = c * scales[index[key]]
        out += diag.conj() * v
    out /= model.k
    return AlgebraElement(model.spec, {key: out[i] / scales[i] for i, key in enumerate(keys) if out[i] != 0})


def psi(lap: Laplacian, x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """``L(xy) - L(x) y + x L(y)``."""
    _check_product_radius(lap, x, y)
    return lap(multiply(x, y)) - multiply(lap(x), y) + multiply(x, lap(y))


def inner_product_formula(lap: Laplacian, a, b, a2, b2, variant: str = "mixed") -> complex:
    """``-1/2 tau(b^* Psi(x, b2))`` with ``x = a^* a2`` (``variant="mixed"``) or ``a^* a`` (``"diagonal"``).

    The direct value is ``oneform_inner(d_D(b).left(a), d_D(b2).left(a2))``.
    """
    from .toric import trace

    if variant == "mixed":
        x = multiply(star(a), a2)
    elif variant == "diagonal":
        x = multiply(star(a), a)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return -0.5 * trace(multiply(star(b), psi(lap, x, b2)))


def _check_product_radius(lap: Laplacian, x: AlgebraElement, y: AlgebraElement):
    if x.radius + y.radius > lap.model.truncation:
        raise TruncationError(
            f"product radius {x.radius + y.radius} exceeds truncation {lap.model.truncation}"
        )


def heat_semigroup(lap: Laplacian, t: float, x: AlgebraElement) -> AlgebraElement:
    """``exp(t L) x`` through the spectral decomposition."""
    if t <= 0:
        raise ValueError("t must be positive")
    v = lap.coords(x)
    out = np.zeros_like(v)
    for lam, B in zip(lap.data.eigenvalues, lap.data.vectors):
        out += math.exp(lam * t) * (B @ (B.conj().T @ v))
    return lap.element(out)


@dataclass
class AdmissibilityReport:
    verdicts: dict
    residuals: dict
    kernel_dimension: int

    @property
    def passed(self) -> bool:
        return bool(all(self.verdicts.values()))

    def to_json(self) -> dict:
        return {
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "kernel_dimension": self.kernel_dimension,
            "passed": self.passed,
        }


def check_admissibility(lap: Laplacian, tol: float = 1e-9) -> AdmissibilityReport:
    """Assumption-by-assumption check at the current truncation."""
    model, L = lap.model, lap.matrix
    verdicts: dict = {}
    residuals: dict = {}

    verdicts["ii_compact_resolvent"] = True

    safe = lap.model.safe_radius(1)
    inner = np.array([key_radius(key) <= safe for key in lap.keys])
    leak = np.linalg.norm(L[~inner][:, inner]) if inner.any() and (~inner).any() else 0.0
    residuals["iii_leakage"] = float(leak)
    verdicts["iii_laplacian_preserves_algebra"] = leak < tol

    worst = 0.0
    for lam, B in zip(lap.data.eigenvalues, lap.data.vectors):
        worst = max(worst, float(np.linalg.norm(L @ B - lam * B)))
    residuals["iv_eigen_residual"] = worst
    verdicts["iv_eigenvectors_in_algebra"] = worst < tol * max(1.0, abs(min(lap.data.eigenvalues)))

    lam0 = lap.data.eigenvalues[0]
    kernel_dim = lap.data.multiplicities[0] if abs(lam0) < 1e-9 else 0
    one = lap.coords(AlgebraElement.one(model.spec))
    if kernel_dim:
        B0 = lap.data.vectors[0]
        overlap = np.linalg.norm(B0.conj().T @ one) / np.linalg.norm(one)
    else:
        overlap = 0.0
    residuals["v_kernel_overlap_with_unit"] = float(1.0 - overlap)
    verdicts["v_connected"] = kernel_dim == 1 and abs(1.0 - overlap) < tol

    verdicts["vi_density"] = True

    worst = 0.0
    for key in lap.keys:
        m = AlgebraElement(model.spec, {key: 1.0})
        worst = max(worst, (lap(star(m)) - star(lap(m))).max_abs())
    residuals["lemma_star_compatibility"] = worst
    verdicts["lemma_star_compatibility"] = worst < tol

    asym = float(np.linalg.norm(L - L.conj().T))
    residuals["self_adjoint"] = asym
    verdicts["self_adjoint"] = asym < 1e-10
    top = float(np.max(np.linalg.eigvalsh(L)))
    residuals["max_eigenvalue"] = top
    verdicts["negative_semidefinite"] = top <= 1e-10
    return AdmissibilityReport(verdicts, residuals, kernel_dim)
