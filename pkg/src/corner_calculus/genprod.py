"""Generalized products M[k] presented by affine structure maps on ambient charts.

A model fixes, for every level k, an ambient orthant chart, a base atlas and an
ordered list of centers to blow up.  The structure map S_I of I: J(n) -> J(m) is
an affine map M[m] -> M[n] on ambient coordinates; it lifts to the resolutions
as the unique extension from the interior, which lift_map constructs and
classifies chart by chart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from .arrangement import AffinePSub, PCleanFamily, diagonal_name, is_p_positioned, sub_from_equations
from .atlas import Atlas, cube_atlas, radial_atlas
from .blowup import (BlowupSequence, LiftedMap, Poset, face_lattice, lift_map, register,
                     resolve, _strata_of)
from .errors import ChartCoverageError, DomainError, LiftLeavesAffineClass, PreconditionError
from .finsetcat import (FinSetMap, Partition, all_maps, canonical_surjection, enumerate_partitions,
                        epi_mono_factorize, generator_decompose, generator_map)
from .linalg import nullspace, rank
from .orthant import B_FIBRATION, SIMPLE_B_FIBRATION, BMapClass, OrthantChart
from .poly import Poly

# --- affine helpers ----------------------------------------------------------


def _linear_parts(polys: Sequence[Poly], n: int):
    A, c = [], []
    for p in polys:
        if not p.is_affine():
            raise DomainError("structure maps must be affine on ambient coordinates")
        coeffs, k = p.affine_parts()
        A.append(list(coeffs) if coeffs else [Fraction(0)] * n)
        c.append(k)
    return A, c


def compose_polys(outer: Sequence[Poly], inner: Sequence[Poly], n: int) -> list[Poly]:
    """outer o inner, where inner lives on an n-dimensional chart."""
    if not inner:
        return [Poly.const(n, p.constant()) for p in outer]
    return [p.compose(inner) for p in outer]


def same_map(f: Sequence[Poly], g: Sequence[Poly]) -> bool:
    return len(f) == len(g) and all((p - q).is_zero() for p, q in zip(f, g))


def image_sub(target: OrthantChart, polys: Sequence[Poly], n: int) -> AffinePSub:
    """Image of an injective affine map from an n-dimensional chart, as equations on target."""
    A, c = _linear_parts(polys, n)
    cols = [[A[i][j] for i in range(target.n)] for j in range(n)]
    rows = nullspace(cols, target.n) if cols else [[Fraction(int(i == j)) for i in range(target.n)] for j in range(target.n)]
    rhs = [sum((r[i] * c[i] for i in range(target.n)), Fraction(0)) for r in rows]
    return AffinePSub(target, (), tuple(tuple(r) for r in rows), tuple(rhs))


def preimage_sub(source: OrthantChart, polys: Sequence[Poly], sub: AffinePSub) -> AffinePSub:
    """Preimage of an affine sub of the target under an affine map on source."""
    A, c = _linear_parts(polys, source.n)
    rows, rhs = [], []
    for r in sub.augmented():
        N, h = r[:-1], r[-1]
        rows.append(tuple(sum((N[i] * A[i][j] for i in range(len(N))), Fraction(0)) for j in range(source.n)))
        rhs.append(h - sum((N[i] * c[i] for i in range(len(N))), Fraction(0)))
    return AffinePSub(source, (), tuple(rows), tuple(rhs))


def same_sub(P: AffinePSub, Q: AffinePSub) -> bool:
    return P.contains(Q) and Q.contains(P)


def _shift_map(k: int) -> FinSetMap:
    """J(k-1) -> J(k), j -> j + 1: the projection forgetting the first factor."""
    return FinSetMap(tuple(range(2, k + 1)), k)


def _inclusion(k: int) -> FinSetMap:
    """J(k-1) -> J(k), j -> j: the projection forgetting the last factor."""
    return FinSetMap(tuple(range(1, k)), k)


def _collapse12(k: int) -> FinSetMap:
    """J(k) -> J(k-1) identifying 1 and 2."""
    return FinSetMap((1,) + tuple(range(1, k)), k - 1)


def _swap(k: int, i: int, j: int) -> FinSetMap:
    vals = list(range(1, k + 1))
    vals[i - 1], vals[j - 1] = vals[j - 1], vals[i - 1]
    return FinSetMap(tuple(vals), k)


TRACK_D12 = "track:D12"
TRACK_FULL = "track:Dfull"

NAMED_MAPS = {
    "L": FinSetMap((1,), 2),
    "R": FinSetMap((2,), 2),
    "S": FinSetMap((1, 2), 3),
    "C": FinSetMap((1, 3), 3),
    "F": FinSetMap((2, 3), 3),
}


def factor_coords(prefix: int, block: int) -> Callable[[FinSetMap], list[Poly]]:
    """S_I for charts with `prefix` shared coordinates followed by one block per factor."""

    def coords(I: FinSetMap) -> list[Poly]:
        m = I.codomain_size
        n = prefix + block * m
        out = [Poly.var(n, i) for i in range(prefix)]
        for v in I.values:
            out += [Poly.var(n, prefix + (v - 1) * block + a) for a in range(block)]
        return out

    return coords


def difference_coords(block: int) -> Callable[[FinSetMap], list[Poly]]:
    """S_I on G^k/G in coordinates a_i = g_i - g_k (i < k), for a vector group of dimension block."""

    def coords(I: FinSetMap) -> list[Poly]:
        m = I.codomain_size
        n = block * (m - 1)

        def g(v: int, a: int) -> Poly:
            return Poly.var(n, (v - 1) * block + a) if v < m else Poly(n)

        last = I.values[-1] if I.values else m
        out = []
        for v in I.values[:-1]:
            out += [g(v, a) - g(last, a) for a in range(block)]
        return out

    return coords


# --- models ------------------------------------------------------------------


@dataclass
class GeneralizedProductModel:
    """Levels M[1..K] with structure maps S_I: M[m] -> M[n] for I: J(n) -> J(m)."""

    name: str
    mu: int
    kappa: int
    K: int
    chart_fn: Callable[[int], OrthantChart]
    coords_fn: Callable[[FinSetMap], list[Poly]]
    atlas_fn: Callable[[int], Atlas] | None = None
    centers_fn: Callable[[int], list[tuple[str, AffinePSub]]] | None = None
    overrides: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    watch_fn: Callable[[int], list[str]] | None = None

    def __post_init__(self):
        self._res: dict[int, BlowupSequence] = {}
        self._lifts: dict = {}

    def chart(self, k: int) -> OrthantChart:
        return self.chart_fn(k)

    def base_atlas(self, k: int) -> Atlas:
        return self.atlas_fn(k) if self.atlas_fn else Atlas.from_chart(self.chart(k))

    def centers(self, k: int) -> list[tuple[str, AffinePSub]]:
        return self.centers_fn(k) if self.centers_fn else []

    def resolution(self, k: int) -> BlowupSequence:
        if not 1 <= k <= self.K:
            raise DomainError(f"level {k} outside 1..{self.K}")
        if k not in self._res:
            base = self.base_atlas(k)
            cs = self.centers(k)
            if not cs:
                for name, sub in self.tracked(k).items():
                    base = register(base, name, sub)
                self._res[k] = BlowupSequence(base, [], [], base)
            else:
                fam = PCleanFamily(tuple(c for _, c in cs), tuple(a for a, _ in cs))
                watch = self.watch_fn(k) if self.watch_fn else ()
                self._res[k] = resolve(base, fam, extra=self.tracked(k), watch=watch)
        return self._res[k]

    def tracked(self, k: int) -> dict[str, AffinePSub]:
        """Submanifolds followed through the resolution: the image of D_12 and the full diagonal."""
        if k < 2:
            return {}
        out = {TRACK_D12: image_sub(self.chart(k), self.diagonal_embedding(k), self.chart(k - 1).n)}
        out[TRACK_FULL] = image_sub(self.chart(k), self.structure_map(FinSetMap((1,) * k, 1)), self.chart(1).n)
        return out

    def space(self, k: int) -> Atlas:
        return self.resolution(k).result

    # structure maps on ambient coordinates

    def structure_map(self, I: FinSetMap) -> list[Poly]:
        return self.coords_fn(I)

    def named(self, name: str) -> list[Poly]:
        """Pi_L, Pi_R (M[2] -> M[1]) and Pi_S, Pi_C, Pi_F (M[3] -> M[2]), honouring overrides."""
        return self.structure_map(self.overrides.get(name, NAMED_MAPS[name]))

    def word_map(self, word: Sequence[tuple], n: int) -> list[Poly]:
        """S of the composite of a generator word (word[0] acts first) on J(n)."""
        maps = []
        size = n
        for g in word:
            f = generator_map(g)
            if f.domain_size != size:
                raise DomainError("word does not compose")
            maps.append(f)
            size = f.codomain_size
        out = [Poly.var(self.chart(size).n, i) for i in range(self.chart(size).n)]
        # S_{g_r o ... o g_1} = S_{g_1} o ... o S_{g_r}
        for f in reversed(maps):
            out = compose_polys(self.structure_map(f), out, self.chart(size).n)
        return out

    def projection(self, k: int) -> list[Poly]:
        """Pi_k: M[k] -> M[k-1] forgetting the last factor."""
        return self.structure_map(_inclusion(k))

    def diagonal_embedding(self, k: int) -> list[Poly]:
        """D_{1,2}: M[k-1] -> M[k]."""
        return self.structure_map(_collapse12(k))

    def diagonal(self, k: int, p: Partition) -> AffinePSub:
        """D_P as an affine sub of the ambient chart of M[k]."""
        f = canonical_surjection(p)
        return image_sub(self.chart(k), self.structure_map(f), self.chart(f.codomain_size).n)

    def lifted(self, I: FinSetMap) -> LiftedMap:
        key = I
        if key not in self._lifts:
            n, m = I.domain_size, I.codomain_size
            self._lifts[key] = lift_map(self.structure_map(I), self.space(m), self.space(n))
        return self._lifts[key]

    def to_json(self) -> dict:
        levels = {}
        for k in range(1, self.K + 1):
            sp = self.space(k)
            levels[str(k)] = {
                "dimension": self.chart(k).n,
                "charts": len(sp.charts),
                "centers": [a for a, _ in self.centers(k)],
                "front_faces": sp.front_faces(),
                "hypersurfaces": sorted(sp.labels_present()),
            }
        return {"name": self.name, "mu": self.mu, "kappa": self.kappa, "K": self.K, "levels": levels,
                "meta": {k: v for k, v in sorted(self.meta.items())}}


@dataclass
class IteratedFibrationModel:
    """M -> F -> Y with gamma-fibres Z and psi-fibres Q, all affine spaces."""

    z_dim: int
    q_dim: int
    y_dim: int

    def __post_init__(self):
        if min(self.z_dim, self.q_dim, self.y_dim) < 0:
            raise DomainError("negative dimension")

    @property
    def dim(self) -> int:
        return self.z_dim + self.q_dim + self.y_dim

    @property
    def mu(self) -> int:
        return self.dim

    @property
    def kappa(self) -> int:
        """Fibre dimension of phi = psi o gamma."""
        return self.z_dim + self.q_dim

    @property
    def kappa_gamma(self) -> int:
        return self.z_dim

    @property
    def kappa_psi(self) -> int:
        return self.q_dim


# --- constructors ------------------------------------------------------------


def fibre_product_model(kappa: int, base_dim: int, K: int) -> GeneralizedProductModel:
    """M[k] = Y x F^k for the trivial fibration with fibre R^kappa over Y = R^base_dim."""
    if kappa < 1 or base_dim < 0 or K < 1:
        raise DomainError("kappa >= 1, base_dim >= 0, K >= 1 required")
    return GeneralizedProductModel(
        "fibre-product", base_dim + kappa, kappa, K,
        lambda k: OrthantChart(0, base_dim + kappa * k),
        factor_coords(base_dim, kappa),
        meta={"base_dim": base_dim, "algebroid": ["d/dz"]},
    )


TRANSLATION = "translation"
POSITIVE_REALS = "positive-reals"


def group_model(kind: str, K: int, n: int = 1) -> GeneralizedProductModel:
    """G[k] = G^k / G for a vector group; the positive reals are modelled in log coordinates."""
    if kind == POSITIVE_REALS:
        n = 1
    elif kind != TRANSLATION:
        raise DomainError(f"unknown group {kind!r}")
    if n < 1 or K < 1:
        raise DomainError("n >= 1 and K >= 1 required")
    meta = {"group": kind, "n": n, "algebroid": ["right-invariant fields"]}
    if kind == POSITIVE_REALS:
        meta["coordinates"] = "a = log t; compactifying coordinate s = (t - 1)/(t + 1)"
    return GeneralizedProductModel(
        f"group:{kind}", 0, n, K,
        lambda k: OrthantChart(0, n * (k - 1)),
        difference_coords(n),
        meta=meta,
    )


def compactifying_coordinate(t: Fraction) -> Fraction:
    return (t - 1) / (t + 1)


def reflection_is_sign_change(samples: Sequence[Fraction] = (Fraction(1, 3), Fraction(2), Fraction(7, 5), Fraction(1))) -> bool:
    """On G[2] = (0, inf) the reflection t -> 1/t becomes s -> -s."""
    model = group_model(POSITIVE_REALS, 2)
    R = model.structure_map(_swap(2, 1, 2))
    ok = len(R) == 1 and same_map(R, [-Poly.var(1, 0)])
    for t in samples:
        ok = ok and compactifying_coordinate(1 / t) == -compactifying_coordinate(t)
    return ok


def _prefixed(model: GeneralizedProductModel, labels: tuple[str, ...]):
    """Chart and coordinate functions for [0,inf)^labels x M[k]; the model must be a single interior chart."""
    p = len(labels)

    def chart(k: int) -> OrthantChart:
        ch = model.chart(k)
        if ch.b:
            raise PreconditionError("prefixing needs a model without boundary")
        return OrthantChart(p, ch.m, labels)

    def coords(I: FinSetMap) -> list[Poly]:
        inner = model.structure_map(I)
        n = p + model.chart(I.codomain_size).n
        shift = [Poly.var(n, p + i) for i in range(n - p)]
        return [Poly.var(n, i) for i in range(p)] + compose_polys(inner, shift, n)

    return chart, coords


def _lift_rows(sub: AffinePSub, chart: OrthantChart, offset: int, S=()) -> AffinePSub:
    rows = [tuple([Fraction(0)] * offset + list(r)) for r in sub.equations]
    return AffinePSub(chart, tuple(S), tuple(rows), tuple(sub.rhs))


def _size_ordered(k: int) -> list[Partition]:
    parts = [p for p in enumerate_partitions(k) if not p.is_discrete()]
    return sorted(parts, key=lambda p: (len(p.blocks), diagonal_name(p)))


def scl_construct(model: GeneralizedProductModel, K: int | None = None) -> GeneralizedProductModel:
    """M[k;scl]: blow up {eps = 0} x D_P for every non-discrete partition, in size order."""
    K = model.K if K is None else K
    chart, coords = _prefixed(model, ("eps",))

    def centers(k: int):
        out = []
        for p in _size_ordered(k):
            out.append((diagonal_name(p), _lift_rows(model.diagonal(k, p), chart(k), 1, (0,))))
        return out

    return GeneralizedProductModel(
        f"scl({model.name})", model.mu + 1, model.kappa, K, chart, coords, centers_fn=centers,
        meta={"algebroid": ["eps d/dz"], "of": model.name},
    )


def _phi_factor_model(ifib: IteratedFibrationModel, K: int) -> GeneralizedProductModel:
    block = ifib.q_dim + ifib.z_dim
    return GeneralizedProductModel(
        "phi-fibre-product", ifib.mu, block, K,
        lambda k: OrthantChart(0, ifib.y_dim + block * k),
        factor_coords(ifib.y_dim, block),
    )


def _q_diagonal(ifib: IteratedFibrationModel, chart: OrthantChart, offset: int, p: Partition, S) -> AffinePSub:
    """{q_i = q_j for i, j in a block of p} where factor i has coordinates (q_i, z_i)."""
    block = ifib.q_dim + ifib.z_dim
    rows = []
    for blk in p.nontrivial_blocks():
        for i, j in zip(blk, blk[1:]):
            for a in range(ifib.q_dim):
                r = [Fraction(0)] * chart.n
                r[offset + ifib.y_dim + (i - 1) * block + a] = Fraction(1)
                r[offset + ifib.y_dim + (j - 1) * block + a] = Fraction(-1)
                rows.append(tuple(r))
    return AffinePSub(chart, tuple(S), tuple(rows), (Fraction(0),) * len(rows))


def ad_construct(ifib: IteratedFibrationModel, K: int) -> GeneralizedProductModel:
    """M[k;ad]: blow up {eps = 0} x (gamma-fibre diagonals), in size order."""
    if ifib.q_dim < 1:
        raise DomainError("the gamma-fibre diagonals need q_dim >= 1")
    base = _phi_factor_model(ifib, K)
    chart, coords = _prefixed(base, ("eps",))

    def centers(k: int):
        return [(diagonal_name(p), _q_diagonal(ifib, chart(k), 1, p, (0,))) for p in _size_ordered(k)]

    return GeneralizedProductModel(
        "ad", base.mu + 1, base.kappa, K, chart, coords, centers_fn=centers,
        meta={"algebroid": ["d/dz (V)", "eps d/dq (eps W)"], "z_dim": ifib.z_dim, "q_dim": ifib.q_dim, "y_dim": ifib.y_dim},
    )


def twoscl_construct(ifib: IteratedFibrationModel, K: int) -> GeneralizedProductModel:
    """M[k;2scl]: first {eps = 0} x phi-diagonals, then {delta = 0} x gamma-fibre diagonals.

    The gamma-fibre family is watched: it must stay p-clean after every step.
    """
    if ifib.q_dim < 1:
        raise DomainError("the gamma-fibre diagonals need q_dim >= 1")
    base = _phi_factor_model(ifib, K)
    chart, coords = _prefixed(base, ("delta", "eps"))

    def centers(k: int):
        out = []
        for p in _size_ordered(k):
            out.append((diagonal_name(p), _lift_rows(base.diagonal(k, p), chart(k), 2, (1,))))
        for p in _size_ordered(k):
            out.append(("Q" + diagonal_name(p), _q_diagonal(ifib, chart(k), 2, p, (0,))))
        return out

    def watch(k: int):
        return ["Q" + diagonal_name(p) for p in _size_ordered(k)]

    return GeneralizedProductModel(
        "2scl", base.mu + 2, base.kappa, K, chart, coords, centers_fn=centers, watch_fn=watch,
        meta={"algebroid": ["eps d/dz (eps V)", "eps delta d/dq (eps delta W)"]},
    )


def bphi_construct(K: int) -> GeneralizedProductModel:
    """Fibre [-1,1] over a point: blow up the corners {s_j = +-1, j in P}, |P| >= 2, in size order."""
    if K < 1:
        raise DomainError("K >= 1 required")

    def centers(k: int):
        out = []
        amb = OrthantChart(0, k)
        for size in range(k, 1, -1):
            for sign in ("+", "-"):
                for P in combinations(range(1, k + 1), size):
                    rows = []
                    for j in P:
                        r = [0] * (k + 1)
                        r[j - 1] = 1
                        r[k] = 1 if sign == "+" else -1
                        rows.append(r)
                    out.append((f"H{sign}{''.join(map(str, P))}", sub_from_equations(amb, (), rows)))
        return out

    return GeneralizedProductModel(
        "bphi-interval", 1, 1, K, lambda k: OrthantChart(0, k), factor_coords(0, 1),
        atlas_fn=cube_atlas, centers_fn=centers, meta={"hypersurfaces": ["s1=+1", "s1=-1"]},
    )


def interior_model(model: GeneralizedProductModel) -> GeneralizedProductModel:
    """The same structure maps on the interiors: every coordinate becomes interior, nothing is blown up."""
    return GeneralizedProductModel(
        f"interior({model.name})", model.mu, model.kappa, model.K,
        lambda k: OrthantChart(0, model.chart(k).n), model.coords_fn, overrides=dict(model.overrides),
    )


def product_model(A: GeneralizedProductModel, B: GeneralizedProductModel) -> GeneralizedProductModel:
    """M[k] = A[k] x B[k]; both factors must be presented on single charts."""
    if A.atlas_fn or B.atlas_fn:
        raise PreconditionError("product needs single-chart factors")
    K = min(A.K, B.K)

    def layout(k: int):
        a, b = A.chart(k), B.chart(k)
        ia = [i if i < a.b else a.b + b.b + (i - a.b) for i in range(a.n)]
        ib = [a.b + j if j < b.b else a.b + b.b + a.m + (j - b.b) for j in range(b.n)]
        return a, b, ia, ib

    def chart(k: int) -> OrthantChart:
        a, b = A.chart(k), B.chart(k)
        la = tuple(f"A:{x}" for x in a.labels)
        lb = tuple(f"B:{x}" for x in b.labels)
        return OrthantChart(a.b + b.b, a.m + b.m, la + lb)

    def coords(I: FinSetMap) -> list[Poly]:
        m, n = I.codomain_size, I.domain_size
        _, _, ia, ib = layout(m)
        N = chart(m).n
        fa = compose_polys(A.structure_map(I), [Poly.var(N, i) for i in ia], N)
        fb = compose_polys(B.structure_map(I), [Poly.var(N, i) for i in ib], N)
        _, _, ja, jb = layout(n)
        out: list = [None] * chart(n).n
        for i, p in zip(ja, fa):
            out[i] = p
        for i, p in zip(jb, fb):
            out[i] = p
        return out

    def move(sub: AffinePSub, idx: list[int], k: int) -> AffinePSub:
        ch = chart(k)
        rows = []
        for r in sub.equations:
            row = [Fraction(0)] * ch.n
            for i, v in zip(idx, r):
                row[i] = v
            rows.append(tuple(row))
        return AffinePSub(ch, tuple(idx[j] for j in sub.zero_hypersurfaces), tuple(rows), tuple(sub.rhs))

    def centers(k: int):
        _, _, ia, ib = layout(k)
        return [(f"A:{a}", move(s, ia, k)) for a, s in A.centers(k)] + [(f"B:{a}", move(s, ib, k)) for a, s in B.centers(k)]

    return GeneralizedProductModel(
        f"({A.name})x({B.name})", A.mu + B.mu, A.kappa + B.kappa, K, chart, coords, centers_fn=centers,
    )


# --- axioms ------------------------------------------------------------------


@dataclass
class AxiomReport:
    dimension_law: bool
    generator_relations: list[tuple[str, bool]]
    injection_maps: dict[str, dict]
    surjection_maps: dict[str, bool]
    symmetry: bool
    details: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.dimension_law and all(ok for _, ok in self.generator_relations)
                and all(B_FIBRATION in c["flags"] for c in self.injection_maps.values())
                and all(self.surjection_maps.values()) and self.symmetry)

    def all_simple(self) -> bool:
        return all(SIMPLE_B_FIBRATION in c["flags"] for c in self.injection_maps.values())

    def failures(self) -> list[str]:
        out = [name for name, ok in self.generator_relations if not ok]
        if not self.dimension_law:
            out.append("dimension law")
        out += [k for k, c in self.injection_maps.items() if B_FIBRATION not in c["flags"]]
        out += [k for k, ok in self.surjection_maps.items() if not ok]
        if not self.symmetry:
            out.append("symmetry")
        return out

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "dimension_law": self.dimension_law,
            "generator_relations": [{"identity": a, "holds": ok} for a, ok in self.generator_relations],
            "injection_maps": dict(sorted(self.injection_maps.items())),
            "surjection_maps": dict(sorted(self.surjection_maps.items())),
            "symmetry": self.symmetry,
            "details": list(self.details),
        }


def _composite(model: GeneralizedProductModel, *fs: Sequence[Poly], source_level: int) -> list[Poly]:
    """fs[0] o fs[1] o ... on ambient coordinates; the last map starts at source_level."""
    n = model.chart(source_level).n
    out = list(fs[-1])
    for f in reversed(fs[:-1]):
        out = compose_polys(f, out, n)
    return out


def relation_checks(model: GeneralizedProductModel, max_level: int = 3) -> list[tuple[str, bool]]:
    K = model.K
    S = model.structure_map
    out = []
    if K >= 3:
        out.append(("Pi_R Pi_S = Pi_L Pi_F", same_map(_composite(model, model.named("R"), model.named("S"), source_level=3),
                                                        _composite(model, model.named("L"), model.named("F"), source_level=3))))
        out.append(("Pi_R Pi_F = Pi_R Pi_C", same_map(_composite(model, model.named("R"), model.named("F"), source_level=3),
                                                        _composite(model, model.named("R"), model.named("C"), source_level=3))))
    for k in range(2, K + 1):
        for j in range(2, k + 1):
            pij = S(FinSetMap((1, j), k))
            lhs = _composite(model, pij, S(_swap(k, 1, j)), source_level=k)
            rhs = _composite(model, S(_swap(2, 1, 2)), pij, source_level=k)
            out.append((f"Pi_1{j} R_1{j} = R Pi_1{j} on M[{k}]", same_map(lhs, rhs)))
        lhs = _composite(model, S(_shift_map(k)), model.diagonal_embedding(k), source_level=k - 1)
        out.append((f"Pi D_12 = id on M[{k - 1}]", same_map(lhs, [Poly.var(model.chart(k - 1).n, i) for i in range(model.chart(k - 1).n)])))
    top = min(K, max_level)
    bad = []
    total = 0
    for n in range(1, top + 1):
        for m in range(1, top + 1):
            for I in all_maps(n, m):
                total += 1
                e, mono = epi_mono_factorize(I)
                w1 = generator_decompose(I)
                w2 = generator_decompose(e) + generator_decompose(mono)
                direct = S(I)
                if not (same_map(model.word_map(w1, n), direct) and same_map(model.word_map(w2, n), direct)):
                    bad.append(I.values)
    out.append((f"S_I independent of generator word ({total} maps)", not bad))
    return out


def _is_diffeomorphism(lm: LiftedMap) -> bool:
    if B_FIBRATION not in lm.classification.flags:
        return False
    targets = {}
    for h, col in lm.pullback.items():
        hits = [(lab, e) for lab, e in col.items() if e]
        if len(hits) != 1 or hits[0][1] != 1:
            return False
        targets[h] = hits[0][0]
    return len(set(targets.values())) == len(targets) == len(lm.source.labels_present())


def check_axioms(model: GeneralizedProductModel, lifts: bool = True) -> AxiomReport:
    """Dimension law, generator relations, and the classification of lifted generators."""
    if model.K < 2:
        raise PreconditionError("K >= 2 required")
    details = []
    dim_ok = True
    for k in range(1, model.K + 1):
        d = model.chart(k).n
        if d != model.mu + (k - 1) * model.kappa:
            dim_ok = False
            details.append(f"dim M[{k}] = {d}, expected {model.mu + (k - 1) * model.kappa}")
    relations = relation_checks(model)
    injections: dict[str, dict] = {}
    surjections: dict[str, bool] = {}
    symmetric = True
    if lifts:
        for k in range(2, model.K + 1):
            try:
                injections[f"Pi_{k}"] = model.lifted(_inclusion(k)).classification.to_json()
            except (ChartCoverageError, LiftLeavesAffineClass) as exc:
                injections[f"Pi_{k}"] = {"kind": BMapClass.NOT_B_MAP, "flags": []}
                details.append(f"Pi_{k} does not lift: {exc}")
            sp = model.space(k)
            ok = True
            present = False
            for a, rec in enumerate(sp.charts):
                part = sp.lifted_subs[TRACK_D12][a]
                if part is None:
                    continue
                present = True
                if not is_p_positioned(part, rec.affine_validity()):
                    ok = False
                    details.append(f"D_12 lift not p-positioned in chart {rec.name} of M[{k}]")
            surjections[f"D12_{k}"] = ok and present
            for i in range(1, k):
                try:
                    diffeo = _is_diffeomorphism(model.lifted(_swap(k, i, i + 1)))
                except (ChartCoverageError, LiftLeavesAffineClass):
                    diffeo = False
                if not diffeo:
                    symmetric = False
                    details.append(f"sigma_{i} on M[{k}] does not lift to a diffeomorphism")
    return AxiomReport(dim_ok, relations, injections, surjections, symmetric, details)


# --- boundary products and diagonals -------------------------------------------


def labels_meet(atlas: Atlas, a_label: str, b_label: str) -> bool:
    """Two boundary hypersurfaces of the atlas intersect."""
    for rec in atlas.charts:
        labs = rec.chart.labels
        if a_label in labs and b_label in labs:
            i, j = labs.index(a_label), labs.index(b_label)
            if any(i in T and j in T for T in _strata_of(rec)):
                return True
    return False


def sub_meets_label(atlas: Atlas, sub_id: str, label: str) -> bool:
    for a, rec in enumerate(atlas.charts):
        part = atlas.lifted_subs[sub_id][a]
        if part is not None and label in rec.chart.labels:
            if part.meets_stratum((rec.chart.labels.index(label),), rec.affine_validity()) or any(
                rec.chart.labels.index(label) in T and part.meets_stratum(T, rec.affine_validity()) for T in _strata_of(rec)
            ):
                return True
    return False


def fibre_lattice(atlas: Atlas, label: str) -> Poset:
    """Faces of the hypersurface `label`, each with codimension one less, the hypersurface itself removed."""
    P = face_lattice(atlas)
    keep = [v for v in P.nodes if label in v["labels"] and v["codim"] > 1]
    index = {v["id"]: i for i, v in enumerate(keep)}
    nodes = [{"id": index[v["id"]], "codim": v["codim"] - 1, "labels": tuple(x for x in v["labels"] if x != label)} for v in keep]
    covers = [(index[s], index[t]) for s, t in P.covers if s in index and t in index]
    return Poset(nodes, covers)


def posets_isomorphic(P: Poset, Q: Poset) -> bool:
    from networkx.algorithms.isomorphism import DiGraphMatcher, categorical_node_match

    return DiGraphMatcher(P.to_networkx(), Q.to_networkx(), node_match=categorical_node_match("codim", None)).is_isomorphic() \
        if len(P.nodes) == len(Q.nodes) else False


@dataclass
class BoundaryProduct:
    H: str
    hypersurfaces: dict[int, str]
    dims: dict[int, int]
    fibre_lattices: dict[int, Poset]

    def to_json(self) -> dict:
        return {
            "H": self.H,
            "hypersurfaces": {str(k): v for k, v in sorted(self.hypersurfaces.items())},
            "dims": {str(k): v for k, v in sorted(self.dims.items())},
            "fibre_lattices": {str(k): P.to_json() for k, P in sorted(self.fibre_lattices.items())},
        }


def boundary_product(model: GeneralizedProductModel, H: str, K: int | None = None) -> BoundaryProduct:
    """For each k, the unique hypersurface H[k] over H meeting the full diagonal, and its fibre faces."""
    K = model.K if K is None else K
    if H not in model.space(1).labels_present():
        raise DomainError(f"{H!r} is not a boundary hypersurface of M[1]")
    found, dims, lattices = {1: H}, {1: model.chart(1).n - 1}, {}
    for k in range(2, K + 1):
        sp = model.space(k)
        proj = model.lifted(FinSetMap((1,), k))
        cands = [lab for lab in sorted(sp.labels_present())
                 if proj.hypersurface_map.get(lab) == (H,) and sub_meets_label(sp, TRACK_FULL, lab)]
        if len(cands) != 1:
            raise DomainError(f"expected one hypersurface over {H} meeting the diagonal in M[{k}], found {cands}")
        found[k] = cands[0]
        dims[k] = model.chart(k).n - 1
        lattices[k] = fibre_lattice(sp, cands[0])
    return BoundaryProduct(H, found, dims, lattices)


def radial_fibre_lattice(m: int) -> Poset:
    return face_lattice(radial_atlas(m))


def interval_lattice() -> Poset:
    return face_lattice(cube_atlas(1))


def diagonal_report(model: GeneralizedProductModel, k: int) -> dict:
    """Affine identities relating multidiagonals and projections on the ambient chart of M[k]."""
    if not 2 <= k <= model.K:
        raise DomainError("2 <= k <= K required")
    S = model.structure_map
    ch = model.chart(k)
    D = model.diagonal(2, Partition(2, ((1, 2),)))
    out: dict = {"preimage_of_D": {}, "projection_preimage": {}, "projection_restriction": {}}
    for i, j in combinations(range(1, k + 1), 2):
        blocks = ((i, j),) + tuple((x,) for x in range(1, k + 1) if x not in (i, j))
        Dij = model.diagonal(k, Partition(k, blocks))
        out["preimage_of_D"][f"{i}{j}"] = same_sub(Dij, preimage_sub(ch, S(FinSetMap((i, j), k)), D))
    if k >= 3:
        D12 = model.diagonal(k, Partition(k, ((1, 2),) + tuple((x,) for x in range(3, k + 1))))
        D13 = model.diagonal(k, Partition(k, ((1, 3),) + tuple((x,) for x in (2, *range(4, k + 1)))))
        D123 = model.diagonal(k, Partition(k, ((1, 2, 3),) + tuple((x,) for x in range(4, k + 1))))
        inter = AffinePSub(ch, (), D12.equations + D13.equations, D12.rhs + D13.rhs)
        out["D12_D13_transversal"] = same_sub(inter, D123) and D123.codim == D12.codim + D13.codim
    proj = model.projection(k)
    A, _ = _linear_parts(proj, ch.n)
    for p in enumerate_partitions(k - 1):
        name = diagonal_name(p) if not p.is_discrete() else "M"
        ext = Partition(k, p.blocks + ((k,),))
        if not p.is_discrete():
            lhs = preimage_sub(ch, proj, model.diagonal(k - 1, p))
            out["projection_preimage"][name] = same_sub(lhs, model.diagonal(k, ext))
        for b in range(len(p.blocks)):
            blocks = list(p.blocks)
            blocks[b] = blocks[b] + (k,)
            q = Partition(k, tuple(blocks))
            Dq = model.diagonal(k, q)
            # Pi_k restricted to D_q is a bijection onto D_p iff it is injective on the direction space
            dirs = nullspace([list(r) for r in Dq.conormal()], ch.n) if Dq.conormal() else [[Fraction(int(i == j)) for i in range(ch.n)] for j in range(ch.n)]
            img = [[sum((A[r][c] * d[c] for c in range(ch.n)), Fraction(0)) for r in range(len(A))] for d in dirs]
            target_dim = model.chart(k - 1).n - model.diagonal(k - 1, p).codim if not p.is_discrete() else model.chart(k - 1).n
            out["projection_restriction"][diagonal_name(q)] = (rank(img) if img else 0) == len(dirs) == target_dim
    out["passed"] = all(v if isinstance(v, bool) else all(v.values()) for v in out.values())
    return out


# --- supports ------------------------------------------------------------------


def pullback_support(lm: LiftedMap, support: set[str]) -> set[str]:
    """Source hypersurfaces where the pull-back of a kernel supported at `support` need not vanish."""
    out = set()
    for lab, targets in lm.hypersurface_map.items():
        if not targets or all(t in support for t in targets):
            out.add(lab)
    return out


def simple_support_check(lm: LiftedMap, support: set[str]) -> bool:
    """No fixed hypersurface in the support, and support hypersurfaces over one target face are disjoint."""
    for lab in support:
        if lab not in lm.hypersurface_map:
            raise DomainError(f"{lab!r} is not a hypersurface of the source")
        if not lm.hypersurface_map[lab]:
            return False
    for a, b in combinations(sorted(support), 2):
        if lm.hypersurface_map[a] == lm.hypersurface_map[b] and labels_meet(lm.source, a, b):
            return False
    return True


def composition_support(model: GeneralizedProductModel, kernel_support: set[str]) -> set[str]:
    """Support on M[3] of Pi_S^* A . Pi_F^* B for kernels A, B on M[2] supported at kernel_support."""
    s = pullback_support(model.lifted(NAMED_MAPS["S"]), kernel_support)
    f = pullback_support(model.lifted(NAMED_MAPS["F"]), kernel_support)
    return s & f
