"""Affine p-submanifolds of an orthant chart and their relative position."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, islice, permutations
from typing import Sequence

from .errors import DomainError, PreconditionError
from .finsetcat import enumerate_partitions
from .linalg import feasible, frac, fstr, intersect_spans, rank, rref, solve
from .orthant import OrthantChart

DISJOINT = "Disjoint"
FIRST_CONTAINS_SECOND = "FirstContainsSecond"
SECOND_CONTAINS_FIRST = "SecondContainsFirst"
EQUAL = "Equal"
TRANSVERSAL = "Transversal"
CLEAN_NON_TRANSVERSAL = "CleanNonTransversal"
NOT_CLEAN = "NotClean"

SIZE_ORDER = "SizeOrder"
INTERSECTION_ORDER = "IntersectionOrder"
NEITHER = "Neither"


class _Empty:
    def __repr__(self) -> str:
        return "EMPTY"

    def __bool__(self) -> bool:
        return False


EMPTY = _Empty()


def _canonical(chart: OrthantChart, S, rows, rhs):
    n = chart.n
    S = set(int(j) for j in S)
    for j in S:
        if not 0 <= j < chart.b:
            raise DomainError(f"zero hypersurface index {j} is not a boundary coordinate")
    rows = [[frac(v) for v in r] for r in rows]
    rhs = [frac(c) for c in rhs]
    if any(len(r) != n for r in rows) or len(rows) != len(rhs):
        raise DomainError("equation shape does not match the chart")
    while True:
        aug = [[Fraction(0) if i in S else r[i] for i in range(n)] + [c] for r, c in zip(rows, rhs)]
        R, piv = rref(aug, n + 1) if aug else ([], [])
        if n in piv:
            return None
        moved = False
        keep = []
        for r in R:
            nz = [i for i in range(n) if r[i] != 0]
            if len(nz) == 1 and nz[0] < chart.b and r[n] == 0:
                S.add(nz[0])
                moved = True
            else:
                keep.append(r)
        rows = [r[:n] for r in keep]
        rhs = [r[n] for r in keep]
        if not moved:
            return tuple(sorted(S)), tuple(tuple(r) for r in rows), tuple(rhs)


@dataclass(frozen=True)
class AffinePSub:
    """{x_i = 0 for i in S} cut by the affine equations rows . (x, y) = rhs, in canonical form."""

    chart: OrthantChart
    zero_hypersurfaces: tuple[int, ...]
    equations: tuple[tuple[Fraction, ...], ...] = ()
    rhs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        canon = _canonical(self.chart, self.zero_hypersurfaces, self.equations, self.rhs)
        if canon is None:
            raise DomainError("inconsistent equations")
        S, rows, rhs = canon
        object.__setattr__(self, "zero_hypersurfaces", S)
        object.__setattr__(self, "equations", rows)
        object.__setattr__(self, "rhs", rhs)

    @classmethod
    def make(cls, chart: OrthantChart, S=(), rows=(), rhs=(), validity=()) -> "AffinePSub | _Empty":
        """Canonical sub, or EMPTY when inconsistent or disjoint from the orthant."""
        canon = _canonical(chart, S, rows, rhs)
        if canon is None:
            return EMPTY
        sub = cls(chart, *canon)
        if not sub.meets_orthant(validity):
            return EMPTY
        return sub

    @property
    def codim(self) -> int:
        return len(self.zero_hypersurfaces) + len(self.equations)

    @property
    def dim(self) -> int:
        return self.chart.n - self.codim

    def conormal(self) -> list[list[Fraction]]:
        n = self.chart.n
        out = [[Fraction(int(i == j)) for i in range(n)] for j in self.zero_hypersurfaces]
        return out + [list(r) for r in self.equations]

    def augmented(self) -> list[list[Fraction]]:
        n = self.chart.n
        out = [[Fraction(int(i == j)) for i in range(n)] + [Fraction(0)] for j in self.zero_hypersurfaces]
        return out + [list(r) + [c] for r, c in zip(self.equations, self.rhs)]

    def constraints(self, zero=(), positive=(), validity=()) -> list[tuple]:
        n = self.chart.n
        cons = [(r, -c, "=") for r, c in zip(self.equations, self.rhs)]
        zero = set(zero) | set(self.zero_hypersurfaces)
        for j in range(self.chart.b):
            e = [Fraction(int(i == j)) for i in range(n)]
            if j in zero:
                cons.append((e, 0, "="))
            elif j in positive:
                cons.append((e, 0, ">"))
            else:
                cons.append((e, 0, ">="))
        cons.extend(validity)
        return cons

    def meets_orthant(self, validity=()) -> bool:
        return feasible(self.chart.n, self.constraints(validity=validity))

    def meets_stratum(self, T, validity=()) -> bool:
        T = set(T)
        pos = [j for j in range(self.chart.b) if j not in T]
        return feasible(self.chart.n, self.constraints(zero=T, positive=pos, validity=validity))

    def point(self) -> list[Fraction]:
        """Some point of the affine hull."""
        n = self.chart.n
        A = self.conormal()
        if not A:
            return [Fraction(0)] * n
        b = [Fraction(0)] * len(self.zero_hypersurfaces) + list(self.rhs)
        return solve(A, b)[0]

    def contains(self, other: "AffinePSub") -> bool:
        """other is a subset of self (affine hulls)."""
        mine = self.augmented()
        theirs = other.augmented()
        if not mine:
            return True
        r = rank(theirs) if theirs else 0
        return all((rank(theirs + [row]) if theirs else rank([row])) == r for row in mine)

    def to_json(self, chart_ref: str = "chart") -> dict:
        return {
            "chart_ref": chart_ref,
            "zero_hypersurfaces": [self.chart.labels[j] for j in self.zero_hypersurfaces],
            "equations": {
                "matrix": [[fstr(v) for v in r] for r in self.equations],
                "rhs": [fstr(c) for c in self.rhs],
            },
        }

    @classmethod
    def from_json(cls, chart: OrthantChart, data: dict) -> "AffinePSub":
        S = [chart.index_of(a) for a in data["zero_hypersurfaces"]]
        eq = data.get("equations", {"matrix": [], "rhs": []})
        return cls(chart, tuple(S), tuple(tuple(Fraction(v) for v in r) for r in eq["matrix"]), tuple(Fraction(c) for c in eq["rhs"]))

    def __str__(self) -> str:
        parts = [f"{self.chart.labels[j]}=0" for j in self.zero_hypersurfaces]
        names = list(self.chart.labels) + [f"y{l + 1}" for l in range(self.chart.m)]
        for r, c in zip(self.equations, self.rhs):
            lhs = " + ".join(f"{fstr(v)}*{names[i]}" for i, v in enumerate(r) if v)
            parts.append(f"{lhs}={fstr(c)}")
        return "{" + ", ".join(parts) + "}"


def sub_from_equations(chart: OrthantChart, S=(), equations: Sequence[Sequence] = ()) -> AffinePSub:
    """Build from rows [a_1, ..., a_n, c] meaning a . (x, y) = c."""
    rows = [r[:-1] for r in equations]
    rhs = [r[-1] for r in equations]
    return AffinePSub(chart, tuple(S), tuple(tuple(r) for r in rows), tuple(rhs))


@dataclass(frozen=True)
class PCleanFamily:
    elements: tuple[AffinePSub, ...]
    names: tuple[str, ...] = ()
    closure_flag: bool = False
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        names = tuple(self.names) if self.names else tuple(f"F{i + 1}" for i in range(len(self.elements)))
        if len(names) != len(self.elements):
            raise DomainError("one name per element")
        object.__setattr__(self, "names", names)
        charts = {e.chart for e in self.elements}
        if len(charts) > 1:
            raise DomainError("all elements must live in one chart")

    @property
    def chart(self) -> OrthantChart:
        return self.elements[0].chart

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def ordered(self, names: Sequence[str]) -> "PCleanFamily":
        idx = [self.index(a) for a in names]
        return PCleanFamily(tuple(self.elements[i] for i in idx), tuple(names), self.closure_flag, tuple(range(len(idx))))

    def subfamily(self, idx: Sequence[int]) -> "PCleanFamily":
        return PCleanFamily(tuple(self.elements[i] for i in idx), tuple(self.names[i] for i in idx))

    def to_json(self) -> dict:
        return {
            "closure_flag": self.closure_flag,
            "order": list(self.order) if self.order is not None else None,
            "elements": {a: e.to_json() for a, e in zip(self.names, self.elements)},
            "names": list(self.names),
        }


def _same_chart(P: AffinePSub, Q: AffinePSub):
    if P.chart != Q.chart:
        raise DomainError("submanifolds live in different charts")


def intersect(P: AffinePSub, Q: AffinePSub, validity=()) -> AffinePSub | _Empty:
    _same_chart(P, Q)
    S = set(P.zero_hypersurfaces) | set(Q.zero_hypersurfaces)
    return AffinePSub.make(P.chart, S, list(P.equations) + list(Q.equations), list(P.rhs) + list(Q.rhs), validity)


def relation(P: AffinePSub, Q: AffinePSub) -> str:
    _same_chart(P, Q)
    meet = intersect(P, Q)
    if meet is EMPTY:
        return DISJOINT
    pq, qp = P.contains(Q), Q.contains(P)
    if pq and qp:
        return EQUAL
    if pq:
        return FIRST_CONTAINS_SECOND
    if qp:
        return SECOND_CONTAINS_FIRST
    NP, NQ = P.conormal(), Q.conormal()
    if rank(NP + NQ) == len(NP) + len(NQ):
        return TRANSVERSAL
    if is_p_clean(PCleanFamily((P, Q))):
        return CLEAN_NON_TRANSVERSAL
    return NOT_CLEAN


# --- local normal forms ------------------------------------------------------


def _boundary_part(N: list, T: list[int], n: int) -> list[int] | None:
    """Indices S' with N & span(dx_T) = span(dx_S'), or None if that intersection is not a coordinate subspace."""
    if not T or not N:
        return []
    B = [[Fraction(int(i == j)) for i in range(n)] for j in T]
    inter = intersect_spans(N, B, n)
    out = []
    for r in inter:
        nz = [i for i in range(n) if r[i] != 0]
        if len(nz) != 1:
            return None
        out.append(nz[0])
    return sorted(out)


def common_complement(n: int, T: Sequence[int], conormals: Sequence[list]) -> bool:
    """Is there one complement Y* to span(dx_T) splitting every conormal as (N & B) + (N & Y*)?"""
    T = sorted(T)
    Y = [i for i in range(n) if i not in T]
    parts = []
    for N in conormals:
        Sp = _boundary_part(N, T, n)
        if Sp is None:
            return False
        parts.append(Sp)
    for i in T:
        A, b = [], []
        for N, Sp in zip(conormals, parts):
            if i in Sp:
                continue
            for v in N:
                A.append([v[k] for k in Y])
                b.append(v[i])
        if not A:
            continue
        if not Y:
            if any(c != 0 for c in b):
                return False
            continue
        if solve(A, b) is None:
            return False
    return True


def _strata(sub_chart: OrthantChart, subs: Sequence[AffinePSub], validity=()):
    """Boundary strata T (sets of vanishing boundary coordinates) met by some sub, with the subs meeting each."""
    b = sub_chart.b
    out = []
    for k in range(b + 1):
        for T in combinations(range(b), k):
            meeting = [i for i, s in enumerate(subs) if set(s.zero_hypersurfaces) <= set(T) and s.meets_stratum(T, validity)]
            if meeting:
                out.append((T, meeting))
    return out


def is_p_positioned(sub: AffinePSub, validity=()) -> bool:
    n = sub.chart.n
    N = sub.conormal()
    for T, _ in _strata(sub.chart, [sub], validity):
        if _boundary_part(N, list(T), n) is None:
            return False
    return True


def is_p_clean(family: PCleanFamily | Sequence[AffinePSub], validity=()) -> bool:
    elements = list(family.elements) if isinstance(family, PCleanFamily) else list(family)
    if not elements:
        return True
    chart = elements[0].chart
    n = chart.n
    conormals = [e.conormal() for e in elements]
    for T, meeting in _strata(chart, elements, validity):
        for i in meeting:
            if _boundary_part(conormals[i], list(T), n) is None:
                return False
        # maximal sets of elements through a point of the stratum
        face = AffinePSub(chart, tuple(T))
        seen: list[AffinePSub] = []
        frontier = []
        for i in meeting:
            z = intersect(elements[i], face, validity)
            if z is not EMPTY and z.meets_stratum(T, validity) and z not in seen:
                seen.append(z)
                frontier.append(z)
        while frontier:
            z = frontier.pop()
            through = [i for i in meeting if elements[i].contains(z)]
            if not common_complement(n, T, [conormals[i] for i in through]):
                return False
            for i in meeting:
                if i in through:
                    continue
                w = intersect(z, elements[i], validity)
                if w is not EMPTY and w.meets_stratum(T, validity) and w not in seen:
                    seen.append(w)
                    frontier.append(w)
    return True


def intersection_closure(family: PCleanFamily) -> PCleanFamily:
    elements = list(family.elements)
    names = list(family.names)
    while True:
        added = False
        for a, b in combinations(range(len(elements)), 2):
            z = intersect(elements[a], elements[b])
            if z is EMPTY or z in elements:
                continue
            elements.append(z)
            names.append(f"({names[a]}^{names[b]})")
            added = True
            break
        if not added:
            break
    return PCleanFamily(tuple(elements), tuple(names), True, family.order)


def is_closed(family: PCleanFamily) -> bool:
    els = list(family.elements)
    for a, b in combinations(range(len(els)), 2):
        z = intersect(els[a], els[b])
        if z is not EMPTY and z not in els:
            return False
    return True


def order_class(family: PCleanFamily) -> str:
    """Classify the listed order of the elements."""
    els = list(family.elements)
    if not is_closed(family):
        raise PreconditionError("family is not closed under intersection")
    size = all(els[i].dim <= els[i + 1].dim for i in range(len(els) - 1))
    inter = True
    for i, j in combinations(range(len(els)), 2):
        z = intersect(els[i], els[j])
        if z is EMPTY:
            continue
        if els.index(z) > j:
            inter = False
            break
    if size:
        assert inter, "a size order must be an intersection order"
        return SIZE_ORDER
    return INTERSECTION_ORDER if inter else NEITHER


def enumerate_orders(family: PCleanFamily, cap: int | None = None) -> list[tuple[tuple[str, ...], str]]:
    """Every total order of a closed family (at most cap of them) with its class."""
    if not is_closed(family):
        raise PreconditionError("family is not closed under intersection")
    perms = permutations(family.names)
    if cap is not None:
        perms = islice(perms, cap)
    return [(names, order_class(family.ordered(names))) for names in perms]


def intersection_orders(family: PCleanFamily, cap: int | None = None) -> list[tuple[str, ...]]:
    return [names for names, cls in enumerate_orders(family, cap) if cls != NEITHER]


def size_order(family: PCleanFamily) -> tuple[str, ...]:
    """The listed order stably sorted by dimension."""
    idx = sorted(range(len(family)), key=lambda i: family.elements[i].dim)
    return tuple(family.names[i] for i in idx)


def split_order(family: PCleanFamily, first: Sequence[str]) -> tuple[str, ...]:
    """For a split family = G + R (both closed, G & R inside R): G then R, each in size order."""
    G = set(first)
    if not G <= set(family.names):
        raise DomainError(f"unknown names {sorted(G - set(family.names))}")
    g_idx = [i for i, a in enumerate(family.names) if a in G]
    r_idx = [i for i, a in enumerate(family.names) if a not in G]
    gf, rf = family.subfamily(g_idx), family.subfamily(r_idx)
    if not is_closed(gf) or (r_idx and not is_closed(rf)):
        raise PreconditionError("both parts must be closed under intersection")
    for i in g_idx:
        for j in r_idx:
            z = intersect(family.elements[i], family.elements[j])
            if z is not EMPTY and z not in rf.elements:
                raise PreconditionError(f"{family.names[i]} & {family.names[j]} does not lie in the second part")
    return size_order(gf) + (size_order(rf) if r_idx else ())


def diagonal_name(p) -> str:
    if p.is_discrete():
        return "Ddisc"
    return "D" + "|".join("".join(map(str, blk)) if p.ground_size < 10 else ",".join(map(str, blk)) for blk in p.nontrivial_blocks())


def diagonal_sub(chart: OrthantChart, p, kappa: int, offset: int, S=()) -> AffinePSub:
    """{z_i = z_j for i, j in one block of p}, z_i occupying kappa coordinates starting at offset."""
    n = chart.n
    rows = []
    for blk in p.nontrivial_blocks():
        for i, j in zip(blk, blk[1:]):
            for a in range(kappa):
                r = [Fraction(0)] * n
                r[offset + (i - 1) * kappa + a] = Fraction(1)
                r[offset + (j - 1) * kappa + a] = Fraction(-1)
                rows.append(r)
    return AffinePSub(chart, tuple(S), tuple(tuple(r) for r in rows), (Fraction(0),) * len(rows))


def diagonal_family(k: int, kappa: int, scl: bool = False, include_discrete: bool = False) -> PCleanFamily:
    """Diagonals of (R^kappa)^k for the non-discrete partitions of J(k).

    With scl the chart gains a boundary coordinate eps and every diagonal sits in
    {eps = 0}; include_discrete then adds {eps = 0} itself (named "Ddisc").
    """
    if k < 2 or kappa < 1:
        raise DomainError("k >= 2 and kappa >= 1 required")
    if include_discrete and not scl:
        raise DomainError("the discrete diagonal is the whole space without scl")
    chart = OrthantChart(1, k * kappa, ("eps",)) if scl else OrthantChart(0, k * kappa)
    offset = 1 if scl else 0
    parts = [p for p in enumerate_partitions(k) if include_discrete or not p.is_discrete()]
    els = [diagonal_sub(chart, p, kappa, offset, (0,) if scl else ()) for p in parts]
    return PCleanFamily(tuple(els), tuple(diagonal_name(p) for p in parts), True, None)


def three_coplanar_lines() -> PCleanFamily:
    """Three lines through 0 in the plane x_3 = 0 of R^3, with the origin.

    F1 = {x1=0=x3}, F2 = {0}, F3 = {x2=0=x3}, F4 = {x1=x2, x3=0}.
    """
    chart = OrthantChart(0, 3)
    F1 = sub_from_equations(chart, (), [[1, 0, 0, 0], [0, 0, 1, 0]])
    F2 = sub_from_equations(chart, (), [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]])
    F3 = sub_from_equations(chart, (), [[0, 1, 0, 0], [0, 0, 1, 0]])
    F4 = sub_from_equations(chart, (), [[1, -1, 0, 0], [0, 0, 1, 0]])
    return PCleanFamily((F1, F2, F3, F4), ("F1", "F2", "F3", "F4"), True, None)
