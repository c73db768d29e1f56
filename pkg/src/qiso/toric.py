"""Direct sums of twisted torus algebras at finite Fourier truncation.

A summand of rank ``d`` is generated by unitaries ``U_1, ..., U_d`` with
``U_j U_k = lambda_jk U_k U_j``.  Elements are finite linear combinations
of normal-ordered monomials ``U_1^{m_1} ... U_d^{m_d}``, keyed by
``(summand, exponents)``.

Commutation phases are stored as angles in turns (``lambda = exp(2 pi i a)``).
Rational angles are kept as :class:`fractions.Fraction` so that phase
bookkeeping is exact; irrational angles fall back to floats.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

Angle = Union[Fraction, float]
Key = tuple  # (summand index, exponent tuple)

ZERO_TOL = 1e-14


class SpecMismatchError(ValueError):
    """Raised when elements of different algebras are combined."""


class TruncationError(ValueError):
    """Raised when a result would leave the allowed truncation radius."""


@lru_cache(maxsize=4096)
def _exact_phase(angle: Fraction) -> complex:
    a = angle % 1
    if a == 0:
        return 1.0 + 0j
    if a == Fraction(1, 2):
        return -1.0 + 0j
    if a == Fraction(1, 4):
        return 1j
    if a == Fraction(3, 4):
        return -1j
    return cmath.exp(2j * math.pi * float(a))


def phase_of(angle: Angle) -> complex:
    """``exp(2 pi i angle)``, exact at the quarter turns."""
    if isinstance(angle, Fraction):
        return _exact_phase(angle)
    return cmath.exp(2j * math.pi * angle)


def as_angle(value) -> Angle:
    """Coerce ``value`` to an angle, preferring an exact fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


def angle_from_phase(z: complex, max_denominator: int = 1000) -> Angle:
    """Recover an angle from a unit-modulus phase, exactly when it is rational."""
    a = (cmath.phase(z) / (2 * math.pi)) % 1.0
    frac = Fraction(a).limit_denominator(max_denominator)
    if abs(phase_of(frac) - z) < 1e-12:
        return frac % 1
    return a


@dataclass(frozen=True)
class ToricSummand:
    """One twisted torus ``C*(U_1, ..., U_d)``.

    ``angles[j][k]`` is the angle of ``lambda_jk``; the matrix must be
    antisymmetric modulo 1 with zero diagonal.
    """

    rank: int
    angles: tuple

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        angles = tuple(tuple(as_angle(a) % 1 for a in row) for row in self.angles)
        if len(angles) != self.rank or any(len(row) != self.rank for row in angles):
            raise ValueError("phase matrix must be rank x rank")
        for j in range(self.rank):
            if abs(phase_of(angles[j][j]) - 1) > 1e-12:
                raise ValueError("diagonal phases must equal 1")
            for k in range(self.rank):
                if abs(phase_of(angles[j][k]) * phase_of(angles[k][j]) - 1) > 1e-12:
                    raise ValueError("phases must satisfy lambda_jk lambda_kj = 1")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def commutative(cls, rank: int) -> "ToricSummand":
        return cls(rank, tuple((Fraction(0),) * rank for _ in range(rank)))

    @classmethod
    def rotation(cls, theta) -> "ToricSummand":
        """Rank-2 summand with ``U V = exp(2 pi i theta) V U``."""
        t = as_angle(theta)
        return cls(2, ((Fraction(0), t), (-t, Fraction(0))))

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Fraction) for row in self.angles for a in row)

    def phase(self, j: int, k: int) -> complex:
        return phase_of(self.angles[j][k])

    def product_angle(self, a: Sequence[int], b: Sequence[int]) -> Angle:
        """Angle picked up when normal-ordering ``U^a U^b``."""
        total: Angle = Fraction(0) if self.exact else 0.0
        for j in range(self.rank):
            if b[j] == 0:
                continue
            for k in range(j + 1, self.rank):
                if a[k]:
                    total -= self.angles[j][k] * a[k] * b[j]
        return total

    def star_angle(self, m: Sequence[int]) -> Angle:
        total: Angle = Fraction(0) if self.exact else 0.0
        for j in range(self.rank):
            for k in range(j + 1, self.rank):
                if m[j] and m[k]:
                    total -= self.angles[j][k] * m[j] * m[k]
        return total


@dataclass(frozen=True)
class AlgebraSpec:
    """A finite direct sum of twisted torus algebras."""

    summands: tuple

    def __post_init__(self):
        summands = tuple(self.summands)
        if not summands:
            raise ValueError("an algebra needs at least one summand")
        object.__setattr__(self, "summands", summands)

    @classmethod
    def circle(cls) -> "AlgebraSpec":
        return cls((ToricSummand.commutative(1),))

    @classmethod
    def torus(cls, theta=0) -> "AlgebraSpec":
        return cls((ToricSummand.rotation(theta),))

    @property
    def weights(self) -> tuple:
        n = len(self.summands)
        return (1.0 / n,) * n

    def rank(self, s: int) -> int:
        return self.summands[s].rank

    def identity_key(self, s: int) -> Key:
        return (s, (0,) * self.summands[s].rank)

    def monomial_product(self, k1: Key, k2: Key):
        """Return ``(phase, key)`` for ``k1 * k2`` or ``None`` across summands."""
        s1, a = k1
        s2, b = k2
        if s1 != s2:
            return None
        summand = self.summands[s1]
        ph = phase_of(summand.product_angle(a, b))
        return ph, (s1, tuple(x + y for x, y in zip(a, b)))

    def monomial_star(self, key: Key):
        s, m = key
        ph = phase_of(self.summands[s].star_angle(m))
        return ph, (s, tuple(-x for x in m))

    def keys_in_box(self, radius: int) -> list:
        """All monomial keys with max-norm at most ``radius``, in a fixed order."""
        out = []
        for s, summand in enumerate(self.summands):
            rng = range(-radius, radius + 1)
            for m in _product(rng, summand.rank):
                out.append((s, m))
        return out

    def to_json(self) -> dict:
        doc = []
        for summand in self.summands:
            doc.append(
                {
                    "rank": summand.rank,
                    "phases": [
                        [[summand.phase(j, k).real, summand.phase(j, k).imag] for k in range(summand.rank)]
                        for j in range(summand.rank)
                    ],
                    "angles": [[str(a) for a in row] for row in summand.angles],
                }
            )
        return {"summands": doc}

    @classmethod
    def from_json(cls, doc: dict) -> "AlgebraSpec":
        summands = []
        for entry in doc["summands"]:
            rank = int(entry["rank"])
            if "angles" in entry:
                angles = [[_parse_angle(a) for a in row] for row in entry["angles"]]
            else:
                angles = [[angle_from_phase(complex(re, im)) for re, im in row] for row in entry["phases"]]
            summands.append(ToricSummand(rank, tuple(tuple(r) for r in angles)))
        return cls(tuple(summands))


def _parse_angle(a) -> Angle:
    if isinstance(a, str):
        try:
            return Fraction(a)
        except ValueError:
            return float(a)
    return as_angle(a)


def _product(rng: range, d: int) -> Iterator[tuple]:
    if d == 0:
        yield ()
        return
    for head in rng:
        for tail in _product(rng, d - 1):
            yield (head,) + tail


def key_radius(key: Key) -> int:
    return max((abs(x) for x in key[1]), default=0)


class AlgebraElement:
    """Finite complex combination of monomials in an :class:`AlgebraSpec`."""

    __slots__ = ("spec", "terms")

    def __init__(self, spec: AlgebraSpec, terms: dict | None = None):
        self.spec = spec
        clean = {}
        for key, c in (terms or {}).items():
            c = complex(c)
            if abs(c) > ZERO_TOL:
                s, m = key
                if len(m) != spec.rank(s):
                    raise ValueError(f"exponent vector {m} does not match rank of summand {s}")
                clean[(int(s), tuple(int(x) for x in m))] = c
        self.terms = clean

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, spec: AlgebraSpec) -> "AlgebraElement":
        return cls(spec)

    @classmethod
    def one(cls, spec: AlgebraSpec) -> "AlgebraElement":
        return cls(spec, {spec.identity_key(s): 1.0 for s in range(len(spec.summands))})

    @classmethod
    def monomial(cls, spec: AlgebraSpec, exponents: Sequence[int], summand: int = 0, coeff=1.0) -> "AlgebraElement":
        return cls(spec, {(summand, tuple(exponents)): coeff})

    @classmethod
    def generator(cls, spec: AlgebraSpec, j: int, summand: int = 0) -> "AlgebraElement":
        m = [0] * spec.rank(summand)
        m[j] = 1
        return cls.monomial(spec, m, summand)

    # inspection -------------------------------------------------------
    @property
    def radius(self) -> int:
        return max((key_radius(k) for k in self.terms), default=0)

    def coeff(self, key: Key) -> complex:
        return self.terms.get(key, 0j)

    def is_zero(self, tol: float = 1e-12) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __iter__(self):
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = [f"({c:.6g})*{k}" for k, c in sorted(self.terms.items())]
        return " + ".join(parts)

    # linear structure -------------------------------------------------
    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            raise TypeError(f"cannot combine AlgebraElement with {type(other).__name__}")
        if other.spec != self.spec:
            raise SpecMismatchError("elements belong to different algebras")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0j) + c
        return AlgebraElement(self.spec, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return AlgebraElement(self.spec, {k: -c for k, c in self.terms.items()})

    def scale(self, z) -> "AlgebraElement":
        return AlgebraElement(self.spec, {k: z * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, z):
        return self.scale(z)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement) or other.spec != self.spec:
            return NotImplemented
        return (self - other).is_zero(0.0)

    def __hash__(self):
        raise TypeError("AlgebraElement is unhashable")

    def close_to(self, other: "AlgebraElement", tol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def star(self) -> "AlgebraElement":
        return star(self)

    # serialization ----------------------------------------------------
    def to_json(self) -> list:
        return [
            {"summand": s, "exponents": list(m), "re": c.real, "im": c.imag}
            for (s, m), c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, spec: AlgebraSpec, doc: Iterable[dict]) -> "AlgebraElement":
        terms = {}
        for t in doc:
            key = (int(t.get("summand", 0)), tuple(int(x) for x in t["exponents"]))
            terms[key] = terms.get(key, 0j) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(spec, terms)


def multiply(x: AlgebraElement, y: AlgebraElement, buffer_radius: int | None = None) -> AlgebraElement:
    """Normal-ordered product ``x y``.

    If ``buffer_radius`` is given it must be at least ``radius(x) + radius(y)``.
    """
    x._check(y)
    if buffer_radius is not None and buffer_radius < x.radius + y.radius:
        raise TruncationError(
            f"buffer radius {buffer_radius} is smaller than {x.radius} + {y.radius}"
        )
    spec = x.spec
    out: dict = {}
    for k1, c1 in x.terms.items():
        for k2, c2 in y.terms.items():
            prod = spec.monomial_product(k1, k2)
            if prod is None:
                continue
            ph, key = prod
            out[key] = out.get(key, 0j) + ph * c1 * c2
    return AlgebraElement(spec, out)


def star(x: AlgebraElement) -> AlgebraElement:
    out = {}
    for key, c in x.terms.items():
        ph, k = x.spec.monomial_star(key)
        out[k] = out.get(k, 0j) + ph * c.conjugate()
    return AlgebraElement(x.spec, out)


def trace(x: AlgebraElement) -> complex:
    """Canonical trace: equal-weight average of the identity coefficients."""
    spec = x.spec
    return sum(w * x.coeff(spec.identity_key(s)) for s, w in enumerate(spec.weights))


def gns_inner(x: AlgebraElement, y: AlgebraElement) -> complex:
    """``tau(x^* y)``; antilinear in ``x``."""
    x._check(y)
    w = x.spec.weights
    return sum(w[k[0]] * c.conjugate() * y.terms[k] for k, c in x.terms.items() if k in y.terms)


def gns_norm(x: AlgebraElement) -> float:
    return math.sqrt(max(gns_inner(x, x).real, 0.0))


def random_element(spec: AlgebraSpec, radius: int, rng: np.random.Generator, density: float = 1.0) -> AlgebraElement:
    """Random element supported in the max-norm ball of ``radius``."""
    terms = {}
    for key in spec.keys_in_box(radius):
        if rng.random() <= density:
            terms[key] = complex(rng.normal(), rng.normal())
    return AlgebraElement(spec, terms)
