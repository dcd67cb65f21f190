"""Orthant charts [0,inf)^b x R^m and monomial maps between them."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import DomainError, UnsupportedComposition
from .linalg import frac, fstr, rank
from .poly import Poly


@dataclass(frozen=True)
class OrthantChart:
    """Coordinates x_1..x_b >= 0 followed by y_1..y_m; labels name the hypersurfaces x_j = 0."""

    b: int
    m: int
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.b < 0 or self.m < 0:
            raise DomainError("negative dimension")
        labels = tuple(self.labels) if self.labels else tuple(f"x{j + 1}" for j in range(self.b))
        if len(labels) != self.b:
            raise DomainError("one label per boundary coordinate")
        if len(set(labels)) != len(labels):
            raise DomainError(f"duplicate labels {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.b + self.m

    def is_boundary(self, i: int) -> bool:
        return i < self.b

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def relabel(self, mapping: dict[str, str]) -> "OrthantChart":
        return OrthantChart(self.b, self.m, tuple(mapping.get(a, a) for a in self.labels))

    def to_json(self) -> dict:
        return {"boundary_count": self.b, "interior_count": self.m, "labels": list(self.labels)}

    @classmethod
    def from_json(cls, data: dict) -> "OrthantChart":
        return cls(data["boundary_count"], data["interior_count"], tuple(data["labels"]))


class _Zero:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "ZERO"

    def __reduce__(self):
        return (_Zero, ())


ZERO = _Zero()


@dataclass(frozen=True)
class MonomialAffineMap:
    """Boundary components alpha * x^a (or ZERO); interior components are polynomials in the source.

    Interior components may carry negative powers of boundary coordinates; such maps
    only arise as chart transitions and never classify as b-maps.
    """

    source: OrthantChart
    target: OrthantChart
    boundary: tuple
    interior: tuple

    def __post_init__(self):
        bnd = []
        for comp in self.boundary:
            if comp is ZERO or comp == "zero":
                bnd.append(ZERO)
                continue
            alpha, exps = comp
            alpha = frac(alpha)
            exps = tuple(int(e) for e in exps)
            if alpha <= 0:
                raise DomainError("boundary constants must be positive")
            if len(exps) != self.source.b:
                raise DomainError("exponent vector length must equal source boundary count")
            bnd.append((alpha, exps))
        object.__setattr__(self, "boundary", tuple(bnd))
        object.__setattr__(self, "interior", tuple(self.interior))
        if len(self.boundary) != self.target.b or len(self.interior) != self.target.m:
            raise DomainError("component count does not match the target chart")
        for p in self.interior:
            if not isinstance(p, Poly) or p.n != self.source.n:
                raise DomainError("interior components must be polynomials on the source chart")

    @classmethod
    def identity(cls, chart: OrthantChart) -> "MonomialAffineMap":
        bnd = tuple((1, tuple(int(i == j) for i in range(chart.b))) for j in range(chart.b))
        inter = tuple(Poly.var(chart.n, chart.b + l) for l in range(chart.m))
        return cls(chart, chart, bnd, inter)

    def boundary_poly(self, j: int) -> Poly:
        comp = self.boundary[j]
        if comp is ZERO:
            return Poly(self.source.n)
        alpha, exps = comp
        return Poly.monomial(tuple(exps) + (0,) * self.source.m, alpha)

    def components(self) -> list[Poly]:
        return [self.boundary_poly(j) for j in range(self.target.b)] + list(self.interior)

    def exponent_matrix(self) -> list[list[int]]:
        return [[0] * self.source.b if c is ZERO else list(c[1]) for c in self.boundary]

    def evaluate(self, point: Sequence) -> list[Fraction]:
        return [p.evaluate(point) for p in self.components()]

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "boundary": ["zero" if c is ZERO else {"alpha": fstr(c[0]), "exponents": list(c[1])} for c in self.boundary],
            "interior": [p.to_json() for p in self.interior],
        }

    @classmethod
    def from_json(cls, data: dict) -> "MonomialAffineMap":
        src = OrthantChart.from_json(data["source"])
        tgt = OrthantChart.from_json(data["target"])
        bnd = tuple(ZERO if c == "zero" else (Fraction(c["alpha"]), tuple(c["exponents"])) for c in data["boundary"])
        inter = tuple(Poly.from_json(src.n, p) for p in data["interior"])
        return cls(src, tgt, bnd, inter)


@dataclass(frozen=True)
class BMapClass:
    kind: str
    flags: frozenset = frozenset()

    NOT_B_MAP = "NotBMap"
    BOUNDARY = "BoundaryBMap"
    INTERIOR = "InteriorBMap"

    def has(self, flag: str) -> bool:
        return flag in self.flags

    @property
    def is_b_map(self) -> bool:
        return self.kind != self.NOT_B_MAP

    def to_json(self) -> dict:
        return {"kind": self.kind, "flags": sorted(self.flags)}


B_NORMAL = "BNormal"
B_SUBMERSION = "BSubmersion"
B_FIBRATION = "BFibration"
SIMPLE_B_FIBRATION = "SimpleBFibration"


def b_differential(f: MonomialAffineMap) -> list[list[Poly]]:
    """Matrix of the b-differential in the frames x d/dx, d/dy (rows: target, columns: source)."""
    n, b = f.source.n, f.source.b
    rows = []
    for comp in f.boundary:
        exps = [0] * b if comp is ZERO else comp[1]
        rows.append([Poly.const(n, e) for e in exps] + [Poly(n)] * f.source.m)
    for p in f.interior:
        row = [p.diff(k) * Poly.var(n, k) for k in range(b)]
        row += [p.diff(k) for k in range(b, n)]
        rows.append(row)
    return rows


def _poly_det(M: list[list[Poly]], n: int) -> Poly:
    """Fraction-free (Bareiss) determinant of a square matrix of polynomials."""
    k = len(M)
    if k == 0:
        return Poly.const(n, 1)
    A = [list(r) for r in M]
    sign = 1
    prev = Poly.const(n, 1)
    for c in range(k - 1):
        piv = next((r for r in range(c, k) if not A[r][c].is_zero()), None)
        if piv is None:
            return Poly(n)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            sign = -sign
        for r in range(c + 1, k):
            for j in range(c + 1, k):
                num = A[r][j] * A[c][c] - A[r][c] * A[c][j]
                q = num.exact_div(prev)
                if q is None:
                    raise ArithmeticError("Bareiss division failed")
                A[r][j] = q
        prev = A[c][c]
    det = A[k - 1][k - 1]
    return det if sign > 0 else -det


def _has_constant_maximal_minor(M: list[list[Poly]], n: int) -> bool:
    rows = len(M)
    cols = len(M[0]) if M else 0
    if rows == 0:
        return True
    if rows > cols:
        return False
    if all(p.is_constant() for r in M for p in r):
        return rank([[p.constant() for p in r] for r in M]) == rows
    rng = random.Random(7)
    pt = [Fraction(rng.randint(1, 97), rng.randint(1, 13)) for _ in range(n)]
    numeric = [[p.evaluate(pt) for p in r] for r in M]
    if rank(numeric) < rows:
        return False
    for cs in combinations(range(cols), rows):
        if rank([[r[c] for c in cs] for r in numeric]) < rows:
            continue
        d = _poly_det([[r[c] for c in cs] for r in M], n)
        if d.is_constant() and not d.is_zero():
            return True
    return False


def classify_map(f: MonomialAffineMap) -> BMapClass:
    if not isinstance(f, MonomialAffineMap):
        raise DomainError("expected a MonomialAffineMap")
    for p in f.interior:
        if p.n != f.source.n:
            raise DomainError("interior component lives on a different chart")
    if any(c is not ZERO and min(c[1], default=0) < 0 for c in f.boundary):
        return BMapClass(BMapClass.NOT_B_MAP)
    if any(p.is_laurent() for p in f.interior):
        return BMapClass(BMapClass.NOT_B_MAP)
    interior = all(c is not ZERO for c in f.boundary)
    kind = BMapClass.INTERIOR if interior else BMapClass.BOUNDARY
    flags = set()
    used: dict[int, int] = {}
    normal = True
    for j, c in enumerate(f.boundary):
        if c is ZERO:
            continue
        for k, e in enumerate(c[1]):
            if e:
                if k in used:
                    normal = False
                used[k] = j
    if normal:
        flags.add(B_NORMAL)
    if interior and _has_constant_maximal_minor(b_differential(f), f.source.n):
        flags.add(B_SUBMERSION)
    onto_faces = all(any(c[1]) for c in f.boundary) if interior else False
    if interior and normal and B_SUBMERSION in flags and onto_faces:
        flags.add(B_FIBRATION)
        if all(e in (0, 1) for c in f.boundary for e in c[1]):
            flags.add(SIMPLE_B_FIBRATION)
    return BMapClass(kind, frozenset(flags))


def compose_maps(f: MonomialAffineMap, g: MonomialAffineMap) -> MonomialAffineMap:
    """f o g."""
    if g.target != f.source:
        raise DomainError("target of g must equal source of f")
    src = g.source
    bnd = []
    for comp in f.boundary:
        if comp is ZERO:
            bnd.append(ZERO)
            continue
        alpha, a = comp
        exps = [0] * src.b
        zero = False
        for k, e in enumerate(a):
            if e == 0:
                continue
            gc = g.boundary[k]
            if gc is ZERO:
                if e < 0:
                    raise UnsupportedComposition("negative power of a vanishing component")
                zero = True
                continue
            alpha = alpha * gc[0] ** e
            for i, v in enumerate(gc[1]):
                exps[i] += e * v
        bnd.append(ZERO if zero else (alpha, tuple(exps)))
    subs = g.components()
    inter = []
    for p in f.interior:
        try:
            inter.append(p.lcompose(subs))
        except (ValueError, ZeroDivisionError) as exc:
            raise UnsupportedComposition(str(exc)) from exc
    return MonomialAffineMap(src, f.target, tuple(bnd), tuple(inter))


def radial_compactification(m: int):
    """The closed ball compactifying R^m, as an atlas of one interior and 2m projective boundary charts."""
    from .atlas import radial_atlas

    if m < 1:
        raise DomainError("m >= 1 required")
    return radial_atlas(m)
