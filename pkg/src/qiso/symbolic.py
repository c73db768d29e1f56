"""Noncommutative *-polynomials, presentations of quantum groups and bounded rewriting.

A word is a tuple of letters ``(name, adjoint)``.  Normal forms come from a
rewriting system obtained by interreducing the relation set (Gaussian
elimination over words in graded-lexicographic order).  No completion is
attempted, so a polynomial that fails to reduce to zero is *not* shown to lie
outside the ideal.  ``Presentation.saturated(D)`` adds every product
``w r w'`` of degree at most ``D``; its normal form is then exact on the
degree-``D`` truncation of the ideal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

COEFF_TOL = 1e-10

REDUCED = "reduced-to-zero"
NOT_REDUCED = "not-reduced"


def letter(name: str, adj: bool = False) -> tuple:
    return (name, bool(adj))


def word_adjoint(word: tuple) -> tuple:
    return tuple((name, not adj) for name, adj in reversed(word))


def format_word(word: tuple) -> str:
    if not word:
        return "1"
    return " ".join(name + ("*" if adj else "") for name, adj in word)


def parse_word(tokens: Sequence[str]) -> tuple:
    out = []
    for tok in tokens:
        if tok.endswith("*"):
            out.append((tok[:-1], True))
        else:
            out.append((tok, False))
    return tuple(out)


def _clean(terms: dict, tol: float = COEFF_TOL) -> dict:
    return {w: c for w, c in terms.items() if abs(c) > tol}


class NcPoly:
    """Complex linear combination of words."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = _clean({tuple(w): complex(c) for w, c in (terms or {}).items()})

    @classmethod
    def const(cls, c) -> "NcPoly":
        return cls({(): c})

    @classmethod
    def sym(cls, name: str, adj: bool = False) -> "NcPoly":
        return cls({((name, adj),): 1.0})

    @classmethod
    def coerce(cls, x) -> "NcPoly":
        if isinstance(x, NcPoly):
            return x
        return cls.const(x)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def symbols(self) -> set:
        return {name for w in self.terms for name, _ in w}

    def __add__(self, other):
        other = NcPoly.coerce(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0j) + c
        return NcPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return NcPoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-NcPoly.coerce(other))

    def __rsub__(self, other):
        return NcPoly.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, NcPoly):
            return NcPoly({w: c * other for w, c in self.terms.items()})
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0j) + c1 * c2
        return NcPoly(out)

    def __rmul__(self, z):
        return NcPoly({w: z * c for w, c in self.terms.items()})

    def adj(self) -> "NcPoly":
        return NcPoly({word_adjoint(w): c.conjugate() for w, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, NcPoly):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("NcPoly is unhashable; use SymbolTable.canonical")

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms.items(), key=lambda t: (len(t[0]), t[0])):
            parts.append(f"({_fmt(c)})*{format_word(w)}" if c != 1 else format_word(w))
        return " + ".join(parts)

    def substitute(self, mapping: Mapping[str, "NcPoly"]) -> "NcPoly":
        """Apply the *-homomorphism sending each listed symbol to a polynomial."""
        cache: dict = {}

        def image(lt):
            if lt not in cache:
                name, adj = lt
                if name in mapping:
                    p = NcPoly.coerce(mapping[name])
                    cache[lt] = p.adj() if adj else p
                else:
                    cache[lt] = NcPoly({(lt,): 1.0})
            return cache[lt]

        out = NcPoly()
        for w, c in self.terms.items():
            term = NcPoly.const(c)
            for lt in w:
                term = term * image(lt)
            out = out + term
        return out

    def to_json(self) -> list:
        return [
            {"re": c.real, "im": c.imag, "word": [n + ("*" if a else "") for n, a in w]}
            for w, c in sorted(self.terms.items(), key=lambda t: (len(t[0]), t[0]))
        ]

    @classmethod
    def from_json(cls, doc: Iterable[dict]) -> "NcPoly":
        out: dict = {}
        for t in doc:
            w = parse_word(t["word"])
            out[w] = out.get(w, 0j) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(out)


def _fmt(c: complex) -> str:
    if abs(c.imag) < 1e-12:
        return f"{c.real:.6g}"
    return f"{c.real:.6g}{c.imag:+.6g}j"


def sym(name: str) -> NcPoly:
    return NcPoly.sym(name)


class SymbolTable:
    """Ordered generator symbols; adjoint letters sort after every plain letter."""

    def __init__(self, names: Sequence[str]):
        names = list(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names")
        self.names = tuple(names)
        self.rank = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.rank

    def __eq__(self, other):
        return isinstance(other, SymbolTable) and self.names == other.names

    def letter_key(self, lt: tuple) -> tuple:
        name, adj = lt
        return (adj, self.rank[name])

    def word_key(self, word: tuple) -> tuple:
        """Graded lexicographic key."""
        return (len(word), tuple(self.letter_key(lt) for lt in word))

    def leading_word(self, p: NcPoly) -> tuple:
        return max(p.terms, key=self.word_key)

    def canonical(self, p: NcPoly, digits: int = 9) -> tuple:
        """Hashable form of ``p`` up to a nonzero scalar."""
        if p.is_zero():
            return ()
        lead = p.terms[self.leading_word(p)]
        items = []
        for w, c in sorted(p.terms.items(), key=lambda t: self.word_key(t[0])):
            z = c / lead
            items.append((w, round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0))
        return tuple(items)

    def monic(self, p: NcPoly) -> NcPoly:
        if p.is_zero():
            return p
        return p * (1.0 / p.terms[self.leading_word(p)])


class TensorPoly:
    """Element of the algebraic tensor power, as ``{(word_1, ..., word_n): coeff}``."""

    __slots__ = ("terms", "legs")

    def __init__(self, legs: int, terms: Mapping | None = None):
        self.legs = legs
        self.terms = _clean({tuple(k): complex(c) for k, c in (terms or {}).items()})

    @classmethod
    def one(cls, legs: int) -> "TensorPoly":
        return cls(legs, {((),) * legs: 1.0})

    @classmethod
    def from_polys(cls, *polys: NcPoly) -> "TensorPoly":
        out: dict = {}
        for combo in itertools.product(*(p.terms.items() for p in polys)):
            key = tuple(w for w, _ in combo)
            c = complex(np.prod([c for _, c in combo]))
            out[key] = out.get(key, 0j) + c
        return cls(len(polys), out)

    def __add__(self, other: "TensorPoly") -> "TensorPoly":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0j) + c
        return TensorPoly(self.legs, out)

    def __sub__(self, other: "TensorPoly") -> "TensorPoly":
        return self + other.scale(-1)

    def scale(self, z) -> "TensorPoly":
        return TensorPoly(self.legs, {k: z * c for k, c in self.terms.items()})

    def __mul__(self, other: "TensorPoly") -> "TensorPoly":
        out: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0j) + c1 * c2
        return TensorPoly(self.legs, out)

    def adj(self) -> "TensorPoly":
        return TensorPoly(self.legs, {tuple(word_adjoint(w) for w in k): c.conjugate() for k, c in self.terms.items()})

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self.terms

    def map_leg(self, i: int, f) -> "TensorPoly":
        """Apply a linear map ``word -> TensorPoly(m legs)`` on leg ``i``."""
        out = None
        for key, c in self.terms.items():
            img = f(key[i])
            pre = key[:i]
            post = key[i + 1:]
            piece = TensorPoly(
                self.legs - 1 + img.legs,
                {pre + k + post: c * v for k, v in img.terms.items()},
            )
            out = piece if out is None else out + piece
        if out is None:
            return TensorPoly(self.legs)
        return out

    def to_json(self) -> list:
        return [
            {"re": c.real, "im": c.imag, "legs": [[n + ("*" if a else "") for n, a in w] for w in k]}
            for k, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, legs: int, doc: Iterable[dict]) -> "TensorPoly":
        out: dict = {}
        for t in doc:
            k = tuple(parse_word(w) for w in t["legs"])
            out[k] = out.get(k, 0j) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(legs, out)


def tensor(a: NcPoly, b: NcPoly) -> TensorPoly:
    return TensorPoly.from_polys(a, b)


class RewritingSystem:
    """Rules ``leading word -> tail`` from the interreduced relation span."""

    def __init__(self, table: SymbolTable, relations: Sequence[NcPoly]):
        self.table = table
        self.rules = _interreduce(table, relations)
        self.lengths = sorted({len(w) for w in self.rules})
        self._cache: dict = {}

    def word_normal_form(self, word: tuple) -> NcPoly:
        hit = self._cache.get(word)
        if hit is not None:
            return hit
        for i in range(len(word)):
            for ell in self.lengths:
                if i + ell > len(word):
                    break
                tail = self.rules.get(word[i:i + ell])
                if tail is not None:
                    pre, post = word[:i], word[i + ell:]
                    out = NcPoly()
                    for w, c in tail.terms.items():
                        out = out + self.word_normal_form(pre + w + post) * c
                    self._cache[word] = out
                    return out
        out = NcPoly({word: 1.0})
        self._cache[word] = out
        return out

    def normal_form(self, p: NcPoly, degree_bound: int | None = None) -> tuple:
        """Return ``(normal form, bound_exceeded)``; words over the bound are left as they are."""
        out = NcPoly()
        exceeded = False
        for w, c in p.terms.items():
            if degree_bound is not None and len(w) > degree_bound:
                exceeded = True
                out = out + NcPoly({w: c})
            else:
                out = out + self.word_normal_form(w) * c
        return out, exceeded

    def tensor_normal_form(self, t: TensorPoly) -> TensorPoly:
        for leg in range(t.legs):
            t = t.map_leg(leg, lambda w: TensorPoly(1, {(k,): c for k, c in self.word_normal_form(w).terms.items()}))
        return t


def _interreduce(table: SymbolTable, relations: Sequence[NcPoly]) -> dict:
    rels = [r for r in relations if not r.is_zero()]
    if not rels:
        return {}
    words = sorted({w for r in rels for w in r.terms}, key=table.word_key, reverse=True)
    col = {w: j for j, w in enumerate(words)}
    M = np.zeros((len(rels), len(words)), dtype=complex)
    for i, r in enumerate(rels):
        for w, c in r.terms.items():
            M[i, col[w]] = c
    scale = max(1.0, float(np.max(np.abs(M))))
    tol = COEFF_TOL * scale
    pivots = []
    row = 0
    for j in range(len(words)):
        if row == M.shape[0]:
            break
        p = row + int(np.argmax(np.abs(M[row:, j])))
        if abs(M[p, j]) <= tol:
            continue
        M[[row, p]] = M[[p, row]]
        M[row] /= M[row, j]
        hit = np.flatnonzero(M[:, j])
        hit = hit[hit != row]
        if hit.size:
            nz = np.flatnonzero(M[row])
            block = M[np.ix_(hit, nz)] - np.outer(M[hit, j], M[row, nz])
            block[np.abs(block) <= tol] = 0
            M[np.ix_(hit, nz)] = block
        pivots.append((row, j))
        row += 1
    rules = {}
    for r, j in pivots:
        lead = words[j]
        if lead == ():
            raise ValueError("relations are inconsistent: they imply 1 = 0")
        tail = {words[c]: -M[r, c] for c in np.flatnonzero(M[r]) if c != j}
        rules[lead] = NcPoly(tail)
    return rules


@dataclass
class Presentation:
    """Generators, relations (each ``= 0``) and an optional coproduct rule per generator."""

    table: SymbolTable
    relations: list
    coproduct: dict = field(default_factory=dict)
    name: str = ""

    @cached_property
    def rewriter(self) -> RewritingSystem:
        return RewritingSystem(self.table, self.closed_relations())

    def closed_relations(self) -> list:
        """Relations together with any adjoints not already in their span."""
        out = list(self.relations)
        base = RewritingSystem(self.table, out)
        for r in self.relations:
            nf, _ = base.normal_form(r.adj())
            if not nf.is_zero():
                out.append(r.adj())
        return out

    def saturated(self, degree: int) -> "Presentation":
        """Same algebra with relations multiplied by all words up to total degree ``degree``."""
        base = self.closed_relations()
        letters = [(n, a) for n in self.table.names for a in (False, True)]
        words_by_len = [[()]]
        for _ in range(degree):
            words_by_len.append([w + (lt,) for w in words_by_len[-1] for lt in letters])
        out = []
        for r in base:
            room = degree - r.degree
            for left_len in range(room + 1):
                for right_len in range(room - left_len + 1):
                    for lw in words_by_len[left_len]:
                        for rw in words_by_len[right_len]:
                            out.append(NcPoly({lw: 1.0}) * r * NcPoly({rw: 1.0}))
        return Presentation(self.table, out, dict(self.coproduct), self.name)

    def is_adjoint_closed(self) -> bool:
        base = RewritingSystem(self.table, self.relations)
        return all(base.normal_form(r.adj())[0].is_zero() for r in self.relations)

    def delta(self, name: str) -> TensorPoly:
        if name not in self.coproduct:
            raise KeyError(f"no coproduct rule for generator {name!r}")
        return self.coproduct[name]

    def delta_word(self, word: tuple) -> TensorPoly:
        out = TensorPoly.one(2)
        for name, adj in word:
            d = self.delta(name)
            out = out * (d.adj() if adj else d)
        return out

    def delta_poly(self, p: NcPoly) -> TensorPoly:
        out = TensorPoly(2)
        for w, c in p.terms.items():
            out = out + self.delta_word(w).scale(c)
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "symbols": list(self.table.names),
            "relations": [r.to_json() for r in self.relations],
            "coproduct": {g: t.to_json() for g, t in self.coproduct.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Presentation":
        table = SymbolTable(doc["symbols"])
        rels = [NcPoly.from_json(r) for r in doc.get("relations", [])]
        cop = {g: TensorPoly.from_json(2, t) for g, t in doc.get("coproduct", {}).items()}
        for r in rels:
            unknown = r.symbols() - set(table.names)
            if unknown:
                raise ValueError(f"relation uses undeclared symbols {sorted(unknown)}")
        return cls(table, rels, cop, doc.get("name", ""))


def au_q_presentation(n: int, Q=None, prefix: str = "u") -> Presentation:
    """Wang's universal unitary quantum group ``A_u(Q)``.

    Relations: ``u u^* = I = u^* u`` and ``u' Q ubar Q^{-1} = I = Q ubar Q^{-1} u'``,
    entrywise, where ``u'`` is the transpose and ``ubar`` the entrywise adjoint.
    """
    Q = np.eye(n, dtype=complex) if Q is None else np.atleast_2d(np.asarray(Q, dtype=complex))
    if Q.shape != (n, n):
        raise ValueError(f"Q must be {n} x {n}")
    if abs(np.linalg.det(Q)) < 1e-12 or np.linalg.cond(Q) > 1e12:
        raise ValueError("Q must be invertible")
    Qi = np.linalg.inv(Q)
    names = [f"{prefix}[{i + 1},{j + 1}]" for i in range(n) for j in range(n)]
    table = SymbolTable(names)

    def u(i, j, adj=False):
        return ((f"{prefix}[{i + 1},{j + 1}]", adj),)

    rels = []
    for i in range(n):
        for j in range(n):
            uu = {u(i, k)[0:1] + u(j, k, True): 1.0 for k in range(n)}
            rels.append(NcPoly(uu) - (1.0 if i == j else 0.0))
    for i in range(n):
        for j in range(n):
            su = {u(k, i, True) + u(k, j): 1.0 for k in range(n)}
            rels.append(NcPoly(su) - (1.0 if i == j else 0.0))
    # (u' Q ubar Q^{-1})_{ij} = sum_{k,l,m} u_{ki} Q_{kl} u*_{lm} Qi_{mj}
    for i in range(n):
        for j in range(n):
            t: dict = {}
            for k, l, m in itertools.product(range(n), repeat=3):
                c = Q[k, l] * Qi[m, j]
                if c != 0:
                    w = u(k, i) + u(l, m, True)
                    t[w] = t.get(w, 0j) + c
            rels.append(NcPoly(t) - (1.0 if i == j else 0.0))
    # (Q ubar Q^{-1} u')_{ij} = sum_{k,l,m} Q_{ik} u*_{kl} Qi_{lm} u_{jm}
    for i in range(n):
        for j in range(n):
            t = {}
            for k, l, m in itertools.product(range(n), repeat=3):
                c = Q[i, k] * Qi[l, m]
                if c != 0:
                    w = u(k, l, True) + u(j, m)
                    t[w] = t.get(w, 0j) + c
            rels.append(NcPoly(t) - (1.0 if i == j else 0.0))
    cop = {}
    for i in range(n):
        for j in range(n):
            cop[f"{prefix}[{i + 1},{j + 1}]"] = TensorPoly(2, {(u(i, k), u(k, j)): 1.0 for k in range(n)})
    return Presentation(table, rels, cop, name=f"A_u(Q), n={n}")


def unit_presentation() -> Presentation:
    return Presentation(SymbolTable([]), [], {}, name="C")


def _rename_word(word: tuple, ren: Mapping[str, str]) -> tuple:
    return tuple((ren.get(n, n), a) for n, a in word)


def rename(p: Presentation, ren: Mapping[str, str]) -> Presentation:
    table = SymbolTable([ren.get(n, n) for n in p.table.names])
    rels = [NcPoly({_rename_word(w, ren): c for w, c in r.terms.items()}) for r in p.relations]
    cop = {
        ren.get(g, g): TensorPoly(t.legs, {tuple(_rename_word(w, ren) for w in k): c for k, c in t.terms.items()})
        for g, t in p.coproduct.items()
    }
    return Presentation(table, rels, cop, p.name)


def free_product(ps: Sequence[Presentation]) -> Presentation:
    """Free product: disjoint union of generators and relations, no cross relations."""
    ps = list(ps)
    if not ps:
        return unit_presentation()
    if len(ps) == 1:
        return ps[0]
    seen: set = set()
    clash = False
    for p in ps:
        if seen & set(p.table.names):
            clash = True
        seen |= set(p.table.names)
    if clash:
        ps = [rename(p, {n: f"{n}#{i}" for n in p.table.names}) for i, p in enumerate(ps)]
    names, rels, cop = [], [], {}
    for p in ps:
        names.extend(p.table.names)
        rels.extend(p.relations)
        cop.update(p.coproduct)
    return Presentation(SymbolTable(names), rels, cop, name=" * ".join(p.name for p in ps))


def reduce(p: NcPoly, pres: Presentation, degree_bound: int | None = None) -> NcPoly:
    """Normal form of ``p`` under the presentation's rewriting system."""
    return pres.rewriter.normal_form(p, degree_bound)[0]


@dataclass
class Verdict:
    candidate: NcPoly
    status: str
    remainder: NcPoly
    bound_exceeded: bool = False

    @property
    def reduced(self) -> bool:
        return self.status == REDUCED


def implies(
    pres: Presentation,
    candidates: Sequence[NcPoly],
    degree_bound: int,
    substitution: Mapping[str, NcPoly] | None = None,
) -> list:
    """One-directional check that each candidate lies in the relation ideal.

    A ``not-reduced`` verdict is inconclusive, never a disproof.
    """
    out = []
    for cand in candidates:
        q = cand.substitute(substitution) if substitution else cand
        nf, exceeded = pres.rewriter.normal_form(q, degree_bound)
        status = REDUCED if nf.is_zero() else NOT_REDUCED
        out.append(Verdict(cand, status, nf, exceeded))
    return out


@dataclass
class CoproductReport:
    coassociativity: dict  # generator -> residual
    hopf_ideal: dict  # relation index -> status

    @property
    def coassociative(self) -> bool:
        return all(v < COEFF_TOL for v in self.coassociativity.values())

    @property
    def ideal_stable(self) -> bool:
        return all(v == REDUCED for v in self.hopf_ideal.values())

    @property
    def passed(self) -> bool:
        return self.coassociative and self.ideal_stable

    def to_json(self) -> dict:
        return {
            "coassociative": self.coassociative,
            "coassociativity_residuals": dict(self.coassociativity),
            "hopf_ideal": {str(k): v for k, v in self.hopf_ideal.items()},
            "ideal_stable": self.ideal_stable,
            "passed": self.passed,
        }


def check_coproduct(pres: Presentation, degree_bound: int = 4) -> CoproductReport:
    """Coassociativity on generators and ``Delta(I) in I (x) S + S (x) I`` per relation."""
    missing = [g for g in pres.table.names if g not in pres.coproduct]
    if missing:
        raise KeyError(f"missing coproduct rule for {missing}")
    rw = pres.rewriter

    def delta_leg(w):
        return pres.delta_word(w)

    def ident_leg(w):
        return TensorPoly(1, {(w,): 1.0})

    coassoc = {}
    for g in pres.table.names:
        d = pres.delta(g)
        left = d.map_leg(0, delta_leg)
        right = d.map_leg(1, delta_leg)
        diff = left - right
        raw = diff.max_abs()
        coassoc[g] = raw if raw < COEFF_TOL else rw.tensor_normal_form(diff).max_abs()

    hopf = {}
    for i, r in enumerate(pres.relations):
        t = pres.delta_poly(r)
        if any(sum(len(w) for w in k) > 2 * degree_bound for k in t.terms):
            hopf[i] = NOT_REDUCED
            continue
        hopf[i] = REDUCED if rw.tensor_normal_form(t).is_zero() else NOT_REDUCED
    return CoproductReport(coassoc, hopf)
