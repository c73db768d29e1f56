"""Bundled models, concrete actions and target presentations.

The rotation parameter of the noncommutative torus is taken rational
(``theta = 1/5``) so that twisted coefficient algebras have finite
clock-and-shift realizations.
"""

from __future__ import annotations

import cmath
import json
import math
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .spectral import SpectralModel
from .symbolic import NcPoly, Presentation, SymbolTable, TensorPoly, sym
from .toric import AlgebraSpec, ToricSummand, phase_of
from .verifier import ActionAnsatz, ConcreteAction

THETA = Fraction(1, 5)


# operators ------------------------------------------------------------------

def shift(n: int, phase: float = 0.0) -> np.ndarray:
    """Cyclic shift ``e_j -> e_{j+1}`` times ``exp(i phase)``."""
    return cmath.exp(1j * phase) * np.roll(np.eye(n, dtype=complex), 1, axis=0)


def clock(n: int, omega: complex, phase: float = 0.0) -> np.ndarray:
    """``diag(omega^j)`` times ``exp(i phase)``; ``clock @ shift = omega * shift @ clock``."""
    return cmath.exp(1j * phase) * np.diag([omega ** j for j in range(n)])


def commuting_pair(phases=(0.3, 0.7)) -> tuple:
    """Two commuting unitaries on ``C^2 (x) C^2`` with generic joint spectrum."""
    x = shift(2, phases[0])
    y = shift(2, phases[1])
    i2 = np.eye(2)
    return np.kron(x, i2), np.kron(i2, y)


def twisted_pair(omega: complex, n: int, phases=(0.2, 0.5)) -> tuple:
    """``(Z, X)`` with ``Z X = omega X Z`` on ``C^n``."""
    return clock(n, omega, phases[0]), shift(n, phases[1])


def block_diag(*blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def place(blocks, index: int, mat: np.ndarray) -> np.ndarray:
    """Block-diagonal matrix that is ``mat`` in slot ``index`` and zero elsewhere."""
    return block_diag(*[mat if i == index else np.zeros_like(b) for i, b in enumerate(blocks)])


# models ---------------------------------------------------------------------

def circle_model(truncation: int) -> SpectralModel:
    return SpectralModel.circle(truncation)


def torus_model(truncation: int, theta=THETA) -> SpectralModel:
    return SpectralModel.torus(truncation, theta)


def disconnected_model(truncation: int) -> SpectralModel:
    """``C(T) (+) C(T)``: the Laplacian kernel is two-dimensional."""
    spec = AlgebraSpec((ToricSummand.commutative(1), ToricSummand.commutative(1)))
    return SpectralModel(spec, truncation, "circle")


# the circle -----------------------------------------------------------------

def circle_target_presentation() -> Presentation:
    """``C(T x| Z_2)``: unitary ``V``, projection ``P``, ``VP = PV``."""
    V, P = sym("V"), sym("P")
    rels = [
        V * V.adj() - 1,
        V.adj() * V - 1,
        P * P - P,
        P.adj() - P,
        V * P - P * V,
        P * V.adj() - V.adj() * P,
    ]
    one = NcPoly.const(1)
    cop = {
        "V": TensorPoly.from_polys(V, V * P) + TensorPoly.from_polys(V.adj(), V - V * P),
        "P": TensorPoly.from_polys(P, P) + TensorPoly.from_polys(one - P, one - P),
    }
    return Presentation(SymbolTable(["V", "P"]), rels, cop, name="C(T x| Z_2)")


def circle_substitution() -> dict:
    V, P = sym("V"), sym("P")
    return {"A[1]": V * P, "A[-1]": V - V * P}


def circle_action() -> ConcreteAction:
    spec = AlgebraSpec.circle()
    ansatz = ActionAnsatz.from_terms(spec, {"U": [((0, (1,)), "A[1]"), ((0, (-1,)), "A[-1]")]})
    V = block_diag(shift(3, 0.4), shift(3, 1.1))
    P = block_diag(np.eye(3), np.zeros((3, 3)))
    real = {"A[1]": V @ P, "A[-1]": V @ (np.eye(6) - P)}
    return ConcreteAction(ansatz, real, {"V": V, "P": P}, circle_substitution(), name="circle")


# holomorphic isometries of the torus --------------------------------------

def qdt_presentation(theta=THETA) -> Presentation:
    """``C(T^2) (+) A_{2 theta}`` on ``A0, B0, C0, D0`` with its coproduct."""
    lam2 = phase_of(2 * Fraction(theta)) if isinstance(theta, Fraction) else cmath.exp(4j * math.pi * theta)
    A, B, C, D = (sym(s) for s in ("A0", "B0", "C0", "D0"))
    E = A * A.adj()
    rels = [
        A.adj() * A - E,
        D * D.adj() - E,
        D.adj() * D - E,
        B * B.adj() + E - 1,
        B.adj() * B + E - 1,
        C * C.adj() + E - 1,
        C.adj() * C + E - 1,
        A * D - D * A,
        A * D.adj() - D.adj() * A,
        B * C - C * B * lam2,
        B.adj() * C - C * B.adj() * lam2.conjugate(),
    ]
    for x in (A, D):
        for y in (B, C):
            for xx in (x, x.adj()):
                for yy in (y, y.adj()):
                    rels.append(xx * yy)
                    rels.append(yy * xx)
    cop = {
        "A0": TensorPoly.from_polys(A, A) + TensorPoly.from_polys(C, B),
        "B0": TensorPoly.from_polys(B, A) + TensorPoly.from_polys(D, B),
        "C0": TensorPoly.from_polys(A, C) + TensorPoly.from_polys(C, D),
        "D0": TensorPoly.from_polys(B, C) + TensorPoly.from_polys(D, D),
    }
    return Presentation(SymbolTable(["A0", "B0", "C0", "D0"]), rels, cop, name="quantum double torus")


def qdt_action(theta=THETA) -> ConcreteAction:
    spec = AlgebraSpec.torus(theta)
    omega = phase_of(2 * Fraction(theta))
    ansatz = ActionAnsatz.from_terms(
        spec,
        {
            "U": [((0, (1, 0)), "A0"), ((0, (0, 1)), "B0")],
            "V": [((0, (1, 0)), "C0"), ((0, (0, 1)), "D0")],
        },
    )
    a, d = commuting_pair((0.3, 0.7))
    z, x = twisted_pair(omega, 5, (0.2, 0.5))
    blocks = [a, z]
    real = {
        "A0": place(blocks, 0, a),
        "D0": place(blocks, 0, d),
        "B0": place(blocks, 1, z),
        "C0": place(blocks, 1, x),
    }
    return ConcreteAction(ansatz, real, dict(real), name="quantum double torus")


# the full quantum isometry group of the torus ------------------------------

# (monomial exponents, summand, leg) for each term of alpha(U) and alpha(V)
FULL_ACTION = {
    "U": {(1, 0): [(1, 1), (4, 1)], (0, 1): [(5, 2), (6, 2)], (-1, 0): [(2, 1), (3, 1)], (0, -1): [(7, 2), (8, 2)]},
    "V": {(1, 0): [(6, 1), (7, 1)], (0, 1): [(1, 2), (2, 2)], (-1, 0): [(5, 1), (8, 1)], (0, -1): [(3, 2), (4, 2)]},
}

# summands 3, 4 exchanged in alpha(U) and 5, 6 in alpha(V); not a homomorphism
SWAPPED_FULL_ACTION = {
    "U": {(1, 0): [(1, 1), (3, 1)], (0, 1): [(5, 2), (6, 2)], (-1, 0): [(2, 1), (4, 1)], (0, -1): [(7, 2), (8, 2)]},
    "V": {(1, 0): [(5, 1), (7, 1)], (0, 1): [(1, 2), (2, 2)], (-1, 0): [(6, 1), (8, 1)], (0, -1): [(3, 2), (4, 2)]},
}

# commutation of U_{k1} U_{k2} = exp(2 pi i c theta) U_{k2} U_{k1}
FULL_TWIST = {1: 0, 2: 2, 3: 0, 4: 2, 5: 0, 6: -2, 7: 0, 8: -2}


def _summand_pair(k: int, theta: Fraction) -> tuple:
    c = FULL_TWIST[k]
    if c == 0:
        return commuting_pair((0.1 * k + 0.05, 0.13 * k + 0.3))
    omega = phase_of(2 * theta)
    z, x = twisted_pair(omega, 5, (0.07 * k, 0.11 * k + 0.2))
    return (z, x) if c > 0 else (x, z)


def full_symbol(g: str, m) -> str:
    return f"{'A' if g == 'U' else 'B'}[{m[0]},{m[1]}]"


def full_substitution(table=FULL_ACTION) -> dict:
    out = {}
    for g, terms in table.items():
        for m, legs in terms.items():
            p = NcPoly()
            for k, leg in legs:
                p = p + sym(f"U{k}{leg}")
            out[full_symbol(g, m)] = p
    return out


def full_action(theta=THETA, table=FULL_ACTION, name="full") -> ConcreteAction:
    theta = Fraction(theta)
    spec = AlgebraSpec.torus(theta)
    pairs = {k: _summand_pair(k, theta) for k in range(1, 9)}
    blocks = [pairs[k][0] for k in range(1, 9)]
    target = {}
    for k in range(1, 9):
        for leg in (1, 2):
            target[f"U{k}{leg}"] = place(blocks, k - 1, pairs[k][leg - 1])
    terms = {}
    for g, parts in table.items():
        terms[g] = [((0, m), full_symbol(g, m)) for m in parts]
    ansatz = ActionAnsatz.from_terms(spec, terms)
    subst = full_substitution(table)
    dim = blocks[0].shape[0] * 0 + sum(b.shape[0] for b in blocks)
    from .verifier import evaluate_poly

    real = {s: evaluate_poly(p, target, dim) for s, p in subst.items()}
    return ConcreteAction(ansatz, real, target, subst, name=name)


def full_presentation(theta=THETA) -> Presentation:
    """Eight summands ``C^*(U_k1, U_k2)``, odd ones commutative, even ones twisted."""
    theta = Fraction(theta)
    names = [f"U{k}{leg}" for k in range(1, 9) for leg in (1, 2)]
    rels = []
    units = []
    for k in range(1, 9):
        a, b = sym(f"U{k}1"), sym(f"U{k}2")
        e = a * a.adj()
        units.append(e)
        rels += [a.adj() * a - e, b * b.adj() - e, b.adj() * b - e]
        q = phase_of(FULL_TWIST[k] * theta)
        rels.append(a * b - b * a * q)
        rels.append(a.adj() * b - b * a.adj() * q.conjugate())
    total = NcPoly()
    for e in units:
        total = total + e
    rels.append(total - 1)
    for k in range(1, 9):
        for l in range(1, 9):
            if k == l:
                continue
            for i in (1, 2):
                for j in (1, 2):
                    x, y = sym(f"U{k}{i}"), sym(f"U{l}{j}")
                    for xx in (x, x.adj()):
                        for yy in (y, y.adj()):
                            rels.append(xx * yy)
    return Presentation(SymbolTable(names), rels, {}, name="QISO(A_theta)")


# data files -------------------------------------------------------------------

def bundles(truncation: int = 6) -> dict:
    """Self-contained job bundles keyed by file stem."""
    return {
        "circle": {
            "model": circle_model(max(truncation, 16)).to_json(),
            "action": circle_action().to_json(),
            "presentation": circle_target_presentation().to_json(),
            "substitution": {s: p.to_json() for s, p in circle_substitution().items()},
            "ansatz_radius": 3,
        },
        "holomorphic": {
            "model": torus_model(truncation).to_json(),
            "action": qdt_action().to_json(),
            "presentation": qdt_presentation().to_json(),
            "substitution": {},
            "ansatz": ActionAnsatz.from_terms(
                AlgebraSpec.torus(THETA),
                {"U": [((0, (1, 0)), "A0"), ((0, (0, 1)), "B0")], "V": [((0, (1, 0)), "C0"), ((0, (0, 1)), "D0")]},
            ).to_json(),
        },
        "full": {
            "model": torus_model(truncation).to_json(),
            "action": full_action().to_json(),
            "presentation": full_presentation().to_json(),
            "substitution": {s: p.to_json() for s, p in full_substitution().items()},
            "ansatz_radius": 1,
        },
        "disconnected": {
            "model": disconnected_model(truncation).to_json(),
        },
    }


def write_data(directory: Path | str | None = None) -> list:
    directory = Path(directory) if directory else Path(__file__).parent / "data"
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, doc in bundles().items():
        path = directory / f"{stem}.json"
        path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        written.append(path)
    return written


def data_path(stem: str) -> Path:
    return Path(str(resources.files("qiso") / "data" / f"{stem}.json"))


def load_bundle(stem: str) -> dict:
    return json.loads(data_path(stem).read_text())


if __name__ == "__main__":
    for p in write_data():
        print(p)
