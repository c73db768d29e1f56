"""Quantum families of smooth isometries: symbolic derivation and matrix verification.

An ansatz writes ``alpha(g) = sum_b b (x) S_{g,b}`` for each generator ``g`` of
a single-summand toric algebra, with abstract coefficient symbols.  In
symbolic mode the *-homomorphism constraints are expanded into relations
among the symbols.  In matrix mode the symbols are realized by matrices on
a common space and every defining condition is measured as a residual.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .spectral import Laplacian, SpectralModel
from .symbolic import NcPoly, Presentation, SymbolTable, TensorPoly
from .toric import AlgebraElement, AlgebraSpec, TruncationError, key_radius

DEFAULT_TOL = 1e-8


class AnsatzError(ValueError):
    """Raised for ansatz data that cannot describe an action."""


class RealizationError(ValueError):
    """Raised for missing or ill-shaped coefficient matrices."""


def default_generator_names(spec: AlgebraSpec) -> list:
    if len(spec.summands) != 1:
        raise AnsatzError("actions are supported on single-summand algebras only")
    d = spec.rank(0)
    if d <= 2:
        return ["U", "V"][:d]
    return [f"U{j + 1}" for j in range(d)]


def _exp_label(m) -> str:
    return ",".join(str(x) for x in m)


@dataclass
class ActionAnsatz:
    """Formal ``alpha(g) = sum_b b (x) S_{g,b}`` per generator."""

    spec: AlgebraSpec
    generators: dict  # name -> generator key
    terms: dict  # name -> list of (key, symbol)
    forced_zero: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.spec.summands) != 1:
            raise AnsatzError("actions are supported on single-summand algebras only")
        for g in self.generators:
            if g not in self.terms:
                raise AnsatzError(f"generator {g!r} has no ansatz terms")

    @classmethod
    def full(cls, spec: AlgebraSpec, radius: int, prefixes: Mapping[str, str] | None = None) -> "ActionAnsatz":
        """Every monomial in the max-norm box of ``radius`` with its own symbol."""
        names = default_generator_names(spec)
        prefixes = dict(prefixes or {})
        letters = iter("ABCDEFGH")
        gens, terms = {}, {}
        for j, g in enumerate(names):
            m = [0] * spec.rank(0)
            m[j] = 1
            gens[g] = (0, tuple(m))
            p = prefixes.get(g) or next(letters)
            terms[g] = [(key, f"{p}[{_exp_label(key[1])}]") for key in spec.keys_in_box(radius)]
        return cls(spec, gens, terms)

    @classmethod
    def from_terms(cls, spec: AlgebraSpec, terms: Mapping[str, Sequence]) -> "ActionAnsatz":
        names = default_generator_names(spec)
        gens = {}
        for j, g in enumerate(names):
            m = [0] * spec.rank(0)
            m[j] = 1
            gens[g] = (0, tuple(m))
        return cls(spec, gens, {g: [(tuple(k) if isinstance(k[1], tuple) else (k[0], tuple(k[1])), s) for k, s in t] for g, t in terms.items()})

    @property
    def symbols(self) -> list:
        seen: dict = {}
        for g in self.generators:
            for _, s in self.terms[g]:
                seen.setdefault(s, None)
        return list(seen)

    @property
    def radius(self) -> int:
        return max((key_radius(k) for g in self.terms for k, _ in self.terms[g]), default=0)

    def image(self, g: str) -> dict:
        """``alpha(g)`` as ``{monomial key: NcPoly}``."""
        out: dict = {}
        for key, s in self.terms[g]:
            out[key] = out.get(key, NcPoly()) + NcPoly.sym(s)
        return out

    def to_json(self) -> dict:
        return {
            "generators": {
                g: [{"monomial": {"summand": k[0], "exponents": list(k[1])}, "symbol": s} for k, s in self.terms[g]]
                for g in self.generators
            },
            "forced_zero": list(self.forced_zero),
        }

    @classmethod
    def from_json(cls, spec: AlgebraSpec, doc: dict) -> "ActionAnsatz":
        terms = {}
        for g, items in doc["generators"].items():
            terms[g] = [((int(t["monomial"].get("summand", 0)), tuple(int(x) for x in t["monomial"]["exponents"])), str(t["symbol"])) for t in items]
        names = default_generator_names(spec)
        unknown = set(terms) - set(names)
        if unknown:
            raise AnsatzError(f"unknown generators {sorted(unknown)}; expected {names}")
        gens = {}
        for j, g in enumerate(names):
            m = [0] * spec.rank(0)
            m[j] = 1
            gens[g] = (0, tuple(m))
        for g in gens:
            terms.setdefault(g, [])
        out = cls(spec, gens, terms, list(doc.get("forced_zero", [])))
        return out


def laplacian_filter(ansatz: ActionAnsatz, lap: Laplacian, tol: float = 1e-9) -> ActionAnsatz:
    """Drop every term whose monomial lies in a different L-eigenspace than its generator."""
    spec = ansatz.spec
    new_terms, forced = {}, list(ansatz.forced_zero)
    for g, gkey in ansatz.generators.items():
        lam = lap.eigenvalue_of(AlgebraElement(spec, {gkey: 1.0}))
        keep = []
        for key, s in ansatz.terms[g]:
            mu = lap.eigenvalue_of(AlgebraElement(spec, {key: 1.0}))
            if abs(mu - lam) <= tol * max(1.0, abs(lam)):
                keep.append((key, s))
            else:
                forced.append(s)
        if not keep:
            raise AnsatzError(
                f"no surviving terms for generator {g!r}: no isometric family supports this generator at this truncation"
            )
        new_terms[g] = keep
    surviving = {s for g in new_terms for _, s in new_terms[g]}
    forced = [s for s in dict.fromkeys(forced) if s not in surviving]
    return ActionAnsatz(spec, dict(ansatz.generators), new_terms, forced)


# symbolic mode -------------------------------------------------------------

def _sym_mul(spec: AlgebraSpec, x: dict, y: dict) -> dict:
    out: dict = {}
    for k1, p1 in x.items():
        for k2, p2 in y.items():
            prod = spec.monomial_product(k1, k2)
            if prod is None:
                continue
            ph, key = prod
            out[key] = out.get(key, NcPoly()) + (p1 * p2) * ph
    return {k: p for k, p in out.items() if not p.is_zero()}


def _sym_star(spec: AlgebraSpec, x: dict) -> dict:
    out: dict = {}
    for k, p in x.items():
        ph, key = spec.monomial_star(k)
        out[key] = out.get(key, NcPoly()) + p.adj() * ph
    return out


def derive_relations(ansatz: ActionAnsatz, model: SpectralModel, check_degree: int = 2, lap: Laplacian | None = None) -> list:
    """Relations forced on the coefficient symbols by the *-homomorphism conditions.

    Unitarity of each generator image contributes the coefficients of
    ``alpha(g) alpha(g)^* - 1 (x) 1`` and ``alpha(g)^* alpha(g) - 1 (x) 1``.
    Each product ``alpha(g_1) ... alpha(g_l)`` over generator words of length
    ``2..check_degree`` must have no component outside the eigenspace of the
    word's monomial, and words with the same monomial must agree once their
    commutation phases are divided out.
    """
    from .spectral import build_laplacian

    spec = ansatz.spec
    if ansatz.radius * check_degree > model.truncation:
        raise TruncationError(
            f"products of degree {check_degree} reach radius {ansatz.radius * check_degree}, "
            f"beyond the truncation {model.truncation}"
        )
    lap = lap or build_laplacian(model)
    one_key = spec.identity_key(0)
    eig_cache: dict = {}

    def eig(key):
        if key not in eig_cache:
            eig_cache[key] = lap.eigenvalue_of(AlgebraElement(spec, {key: 1.0}))
        return eig_cache[key]

    rels: list = []
    images = {g: ansatz.image(g) for g in ansatz.generators}
    for g in ansatz.generators:
        a = images[g]
        a_star = _sym_star(spec, a)
        for prod in (_sym_mul(spec, a, a_star), _sym_mul(spec, a_star, a)):
            keys = set(prod) | {one_key}
            for key in sorted(keys):
                p = prod.get(key, NcPoly())
                if key == one_key:
                    p = p - 1
                rels.append(p)

    names = list(ansatz.generators)
    by_monomial: dict = {}
    for length in range(2, check_degree + 1):
        for word in itertools.product(names, repeat=length):
            img = images[word[0]]
            phase, key = 1.0 + 0j, ansatz.generators[word[0]]
            for g in word[1:]:
                img = _sym_mul(spec, img, images[g])
                ph, key = spec.monomial_product(key, ansatz.generators[g])
                phase *= ph
            lam = eig(key)
            for k in sorted(img):
                if abs(eig(k) - lam) > 1e-9 * max(1.0, abs(lam)):
                    rels.append(img[k])
            normalized = {k: p * (1.0 / phase) for k, p in img.items() if abs(eig(k) - lam) <= 1e-9 * max(1.0, abs(lam))}
            by_monomial.setdefault(key, []).append(normalized)
    for key in sorted(by_monomial):
        group = by_monomial[key]
        first = group[0]
        for other in group[1:]:
            for k in sorted(set(first) | set(other)):
                rels.append(first.get(k, NcPoly()) - other.get(k, NcPoly()))

    table = SymbolTable(ansatz.symbols)
    out, seen = [], set()
    for r in rels:
        if r.is_zero():
            continue
        r = table.monic(r)
        c = table.canonical(r)
        if c not in seen:
            seen.add(c)
            out.append(r)
    return out


# matrix mode ----------------------------------------------------------------

def _as_matrix(x) -> np.ndarray:
    a = np.asarray(x)
    if a.dtype.kind in "iuf" and a.ndim == 3 and a.shape[-1] == 2:
        a = a[..., 0] + 1j * a[..., 1]
    return np.asarray(a, dtype=complex)


def evaluate_poly(p: NcPoly, realization: Mapping[str, np.ndarray], dim: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(dim, dtype=complex)
    for w, c in p.terms.items():
        m = eye
        for name, adj in w:
            if name not in realization:
                raise RealizationError(f"no matrix for symbol {name!r}")
            x = realization[name]
            m = m @ (x.conj().T if adj else x)
        out += c * m
    return out


def evaluate_tensor(t: TensorPoly, realization: Mapping[str, np.ndarray], dim: int) -> np.ndarray:
    out = np.zeros((dim ** t.legs, dim ** t.legs), dtype=complex)
    for key, c in t.terms.items():
        m = np.ones((1, 1), dtype=complex)
        for w in key:
            m = np.kron(m, evaluate_poly(NcPoly({w: 1.0}), realization, dim))
        out += c * m
    return out


class ConcreteAction:
    """An ansatz whose symbols are realized by ``r x r`` matrices."""

    def __init__(
        self,
        ansatz: ActionAnsatz,
        realization: Mapping[str, object],
        target: Mapping[str, object] | None = None,
        symbol_map: Mapping[str, NcPoly] | None = None,
        name: str = "",
    ):
        self.ansatz = ansatz
        self.spec = ansatz.spec
        self.realization = {s: _as_matrix(m) for s, m in realization.items()}
        missing = [s for s in ansatz.symbols if s not in self.realization]
        if missing:
            raise RealizationError(f"missing matrices for symbols {missing}")
        shapes = {m.shape for m in self.realization.values()}
        if len(shapes) != 1:
            raise RealizationError(f"coefficient matrices have mismatched shapes {sorted(shapes)}")
        shape = shapes.pop()
        if len(shape) != 2 or shape[0] != shape[1]:
            raise RealizationError(f"coefficient matrices must be square, got {shape}")
        self.dim = shape[0]
        self.target = {s: _as_matrix(m) for s, m in (target or {}).items()}
        for s, m in self.target.items():
            if m.shape != (self.dim, self.dim):
                raise RealizationError(f"target matrix {s!r} has shape {m.shape}, expected {(self.dim, self.dim)}")
        self.symbol_map = dict(symbol_map or {})
        self.name = name
        self._cache: dict = {}
        self._gen = {}
        for g, gkey in ansatz.generators.items():
            img: dict = {}
            for key, s in ansatz.terms[g]:
                img[key] = img.get(key, 0) + self.realization[s]
            self._gen[gkey[1].index(1)] = img

    @classmethod
    def trivial(cls, spec: AlgebraSpec) -> "ConcreteAction":
        names = default_generator_names(spec)
        terms = {}
        for j, g in enumerate(names):
            m = [0] * spec.rank(0)
            m[j] = 1
            terms[g] = [((0, tuple(m)), f"T[{g}]")]
        ans = ActionAnsatz.from_terms(spec, terms)
        return cls(ans, {f"T[{g}]": np.eye(1) for g in names}, name="trivial")

    # algebra of A (x) M_r --------------------------------------------------
    def identity(self) -> dict:
        return {self.spec.identity_key(0): np.eye(self.dim, dtype=complex)}

    def mul(self, x: dict, y: dict) -> dict:
        out: dict = {}
        for k1, a in x.items():
            for k2, b in y.items():
                prod = self.spec.monomial_product(k1, k2)
                if prod is None:
                    continue
                ph, key = prod
                out[key] = out.get(key, 0) + ph * (a @ b)
        return out

    def adj(self, x: dict) -> dict:
        out: dict = {}
        for k, a in x.items():
            ph, key = self.spec.monomial_star(k)
            out[key] = out.get(key, 0) + ph * a.conj().T
        return out

    def alpha_generator(self, j: int, power: int) -> dict:
        base = self._gen[j] if power > 0 else self.adj(self._gen[j])
        out = self.identity()
        for _ in range(abs(power)):
            out = self.mul(out, base)
        return out

    def alpha_monomial(self, key) -> dict:
        key = (int(key[0]), tuple(int(x) for x in key[1]))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if key[0] != 0:
            raise AnsatzError("actions are supported on single-summand algebras only")
        out = self.identity()
        for j, mj in enumerate(key[1]):
            if mj:
                out = self.mul(out, self.alpha_generator(j, mj))
        self._cache[key] = out
        return out

    def alpha(self, x: AlgebraElement) -> dict:
        out: dict = {}
        for key, c in x.terms.items():
            for k, a in self.alpha_monomial(key).items():
                out[k] = out.get(k, 0) + c * a
        return out

    def target_presentation_check(self, pres: Presentation) -> float:
        """Largest residual of the presentation's relations on the target matrices."""
        worst = 0.0
        for r in pres.relations:
            worst = max(worst, float(np.max(np.abs(evaluate_poly(r, self.target, self.dim)))) if not r.is_zero() else 0.0)
        return worst

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        def mat(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        doc = {"name": self.name, "ansatz": self.ansatz.to_json(), "realization": {s: mat(m) for s, m in sorted(self.realization.items())}}
        if self.target:
            doc["target"] = {s: mat(m) for s, m in sorted(self.target.items())}
        if self.symbol_map:
            doc["symbol_map"] = {s: p.to_json() for s, p in sorted(self.symbol_map.items())}
        return doc

    @classmethod
    def from_json(cls, spec: AlgebraSpec, doc: dict) -> "ConcreteAction":
        ans = ActionAnsatz.from_json(spec, doc["ansatz"] if "ansatz" in doc else doc)
        if "realization" not in doc:
            raise RealizationError("action file has no realization")
        symbol_map = {s: NcPoly.from_json(p) for s, p in doc.get("symbol_map", {}).items()}
        return cls(ans, doc["realization"], doc.get("target"), symbol_map, doc.get("name", ""))


def _dict_diff(x: dict, y: dict) -> float:
    worst = 0.0
    for k in set(x) | set(y):
        a = x.get(k)
        b = y.get(k)
        if a is None:
            d = np.max(np.abs(b))
        elif b is None:
            d = np.max(np.abs(a))
        else:
            d = np.max(np.abs(a - b))
        worst = max(worst, float(d))
    return worst


@dataclass
class VerificationReport:
    residuals: dict
    tolerance: float = DEFAULT_TOL
    details: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        return {k: bool(v < self.tolerance) for k, v in self.residuals.items()}

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_json(self) -> dict:
        return {
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "verdicts": self.verdicts,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }


RESIDUAL_FAMILIES = ("homomorphism", "star", "laplacian_commutation", "trace_invariance", "module_unitarity", "density")


def eigenspace_blocks(action: ConcreteAction, lap: Laplacian, max_abs_eigenvalue: float) -> list:
    """Per eigenspace ``(eigenvalue, V)`` with ``V`` the block matrix ``[v_kj]`` of alpha.

    ``alpha(e_j) = sum_k e_k (x) v_kj`` in the eigenspace's orthonormal basis;
    also returns the norm of whatever part of ``alpha(e_j)`` falls outside it.
    """
    spec = action.spec
    r = action.dim
    out = []
    for lam, space in zip(lap.data.eigenvalues, lap.data.eigenspaces):
        if abs(lam) > max_abs_eigenvalue:
            continue
        d = len(space)
        V = np.zeros((d * r, d * r), dtype=complex)
        leak = 0.0
        for j, e in enumerate(space):
            img = action.alpha(e)
            captured = {}
            for kk, f in enumerate(space):
                blk = np.zeros((r, r), dtype=complex)
                for key, c in f.terms.items():
                    if key in img:
                        blk += spec.weights[key[0]] * np.conj(c) * img[key]
                V[kk * r:(kk + 1) * r, j * r:(j + 1) * r] = blk
                for key, c in f.terms.items():
                    captured[key] = captured.get(key, 0) + c * blk
            leak = max(leak, _dict_diff(img, captured))
        out.append((lam, V, leak))
    return out


def verify_concrete(
    action: ConcreteAction,
    model: SpectralModel,
    lap: Laplacian | None = None,
    tol: float = DEFAULT_TOL,
    safe_radius: int | None = None,
) -> VerificationReport:
    from .spectral import build_laplacian

    if action.spec != model.spec:
        raise AnsatzError("action and model use different algebras")
    lap = lap or build_laplacian(model)
    spec = model.spec
    R = model.truncation // 2 if safe_radius is None else safe_radius
    r = action.dim
    res: dict = {}
    details: dict = {}

    small = spec.keys_in_box(1)
    worst = 0.0
    for k1 in small:
        for k2 in small:
            ph, key = spec.monomial_product(k1, k2)
            lhs = action.mul(action.alpha_monomial(k1), action.alpha_monomial(k2))
            rhs = {k: ph * a for k, a in action.alpha_monomial(key).items()}
            worst = max(worst, _dict_diff(lhs, rhs))
    res["homomorphism"] = worst

    worst = 0.0
    for k in spec.keys_in_box(min(R, 2)):
        ph, key = spec.monomial_star(k)
        lhs = {kk: ph * a for kk, a in action.alpha_monomial(key).items()}
        worst = max(worst, _dict_diff(lhs, action.adj(action.alpha_monomial(k))))
    res["star"] = worst

    worst = 0.0
    for lam, space in zip(lap.data.eigenvalues, lap.data.eigenspaces):
        if abs(lam) > R * R:
            continue
        for e in space:
            img = action.alpha(e)
            keys = sorted(img)
            outside = [k for k in keys if k not in lap.index]
            if outside:
                worst = math.inf
                details.setdefault("laplacian_commutation_outside", []).append([list(k[1]) for k in outside])
                continue
            T = np.zeros((lap.dim, r * r), dtype=complex)
            for k in keys:
                i = lap.index[k]
                T[i] = img[k].reshape(-1) * lap.scales[i]
            worst = max(worst, float(np.max(np.abs(lap.matrix @ T - lam * T))))
    res["laplacian_commutation"] = worst

    worst = 0.0
    one = spec.identity_key(0)
    for k in spec.keys_in_box(R):
        img = action.alpha_monomial(k)
        tau_x = 1.0 if k == one else 0.0
        got = sum(spec.weights[s] * img.get(spec.identity_key(s), 0) for s in range(len(spec.summands)))
        worst = max(worst, float(np.max(np.abs(got - tau_x * np.eye(r)))))
    res["trace_invariance"] = worst

    unit, dens, leak = 0.0, 0.0, 0.0
    for lam, V, lk in eigenspace_blocks(action, lap, R * R):
        n = V.shape[0]
        eye = np.eye(n)
        conj = _block_conjugate(V, r)
        unit = max(
            unit,
            float(np.max(np.abs(V.conj().T @ V - eye))),
            float(np.max(np.abs(V @ V.conj().T - eye))),
            float(np.max(np.abs(conj.conj().T @ conj - eye))),
            float(np.max(np.abs(conj @ conj.conj().T - eye))),
        )
        dens = max(dens, float(np.linalg.norm(V @ np.linalg.pinv(V) - eye, 2)))
        leak = max(leak, lk)
    res["module_unitarity"] = max(unit, leak)
    res["density"] = dens
    details["safe_radius"] = R
    return VerificationReport(res, tol, details)


def _block_conjugate(V: np.ndarray, r: int) -> np.ndarray:
    """Replace each ``r x r`` block by its adjoint, keeping block positions."""
    n = V.shape[0] // r
    out = np.empty_like(V)
    for a in range(n):
        for b in range(n):
            out[a * r:(a + 1) * r, b * r:(b + 1) * r] = V[a * r:(a + 1) * r, b * r:(b + 1) * r].conj().T
    return out


def hilbert_module_gram_defect(action: ConcreteAction, elements: Sequence[AlgebraElement]) -> float:
    """Largest deviation of ``<alpha(x_i), alpha(x_j)>_S`` from ``<x_i, x_j> 1``."""
    spec = action.spec
    from .toric import gns_inner

    imgs = [action.alpha(x) for x in elements]
    worst = 0.0
    eye = np.eye(action.dim)
    for i, x in enumerate(elements):
        for j, y in enumerate(elements):
            got = np.zeros((action.dim, action.dim), dtype=complex)
            for k, a in imgs[i].items():
                b = imgs[j].get(k)
                if b is not None:
                    got += spec.weights[k[0]] * (a.conj().T @ b)
            worst = max(worst, float(np.max(np.abs(got - gns_inner(x, y) * eye))))
    return worst


def _target_symbol_matrix(action: ConcreteAction, s: str) -> NcPoly:
    return action.symbol_map.get(s, NcPoly.sym(s))


def verify_coaction_square(action: ConcreteAction, pres: Presentation, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Residual of ``(alpha (x) id) alpha - (id (x) Delta) alpha`` on the generators.

    ``Delta`` is realized from the presentation's coproduct rule on the target
    matrices; each ansatz symbol is the image of a polynomial in the target
    generators (identity when no symbol map is given).
    """
    r = action.dim
    target = action.target or action.realization
    for g in pres.table.names:
        if g not in target:
            raise RealizationError(f"no matrix for presentation generator {g!r}")
    consistency = 0.0
    for s in action.ansatz.symbols:
        p = _target_symbol_matrix(action, s)
        consistency = max(consistency, float(np.max(np.abs(evaluate_poly(p, target, r) - action.realization[s]))))
    if consistency > tol:
        raise RealizationError(f"inconsistent Delta realization: symbol images differ by {consistency:.3g}")

    delta_cache: dict = {}

    def delta_of(s):
        if s not in delta_cache:
            p = _target_symbol_matrix(action, s)
            delta_cache[s] = evaluate_tensor(pres.delta_poly(p), target, r)
        return delta_cache[s]

    worst = 0.0
    for g, gkey in action.ansatz.generators.items():
        lhs: dict = {}
        for key, s in action.ansatz.terms[g]:
            for k, a in action.alpha_monomial(key).items():
                lhs[k] = lhs.get(k, 0) + np.kron(a, action.realization[s])
        rhs: dict = {}
        for key, s in action.ansatz.terms[g]:
            rhs[key] = rhs.get(key, 0) + delta_of(s)
        worst = max(worst, _dict_diff(lhs, rhs))
    return VerificationReport({"coaction_square": worst, "symbol_consistency": consistency}, tol)
