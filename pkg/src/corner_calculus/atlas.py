"""Atlases of orthant charts glued through common base coordinates.

Each chart remembers the chain of coordinate changes leading to it from the base.
Transitions are never stored; they are recomputed as psi_b o beta_a, where beta_a is
the blowdown of chart a (a polynomial map to the base) and psi_b runs chart b's chain
forward on rational functions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError
from .linalg import fstr, inverse
from .orthant import OrthantChart, MonomialAffineMap
from .poly import Poly, RatFunc

ORIGINAL = "Original"
FRONT_FACE = "FrontFace"


class BlowupStep:
    """Projective chart of a blow-up.

    f = M . old + const are affine coordinates on the old chart; the first c of them
    (u) cut out the center.  In the new chart rho = sign * u_dominant, the other u are
    divided by rho, and the remaining f (w) are kept.  layout[i] says what new
    coordinate i is: ("rho",), ("ratio", j) or ("w", j).
    """

    kind = "blowup"

    def __init__(self, center_id: str, M, const, c: int, dominant: int, sign: int, layout, center=None):
        self.center_id = center_id
        self.M = [[Fraction(v) for v in r] for r in M]
        self.const = [Fraction(v) for v in const]
        self.c = c
        self.dominant = dominant
        self.sign = sign
        self.layout = tuple(tuple(x) for x in layout)
        self.center = center
        self.Minv = inverse(self.M)
        self.n = len(self.M)
        self.pos = {}
        for i, item in enumerate(self.layout):
            if item[0] == "rho":
                self.pos[("u", dominant)] = i
            elif item[0] == "ratio":
                self.pos[("u", item[1])] = i
            else:
                self.pos[("w", item[1])] = i
        self.rho_index = self.pos[("u", dominant)]

    def f_polys(self) -> list[Poly]:
        """The coordinates f (u then w) as polynomials in the new chart."""
        n = self.n
        rho = Poly.var(n, self.rho_index)
        out = []
        for j in range(self.c):
            if j == self.dominant:
                out.append(rho.scale(self.sign))
            else:
                out.append(rho * Poly.var(n, self.pos[("u", j)]))
        for j in range(n - self.c):
            out.append(Poly.var(n, self.pos[("w", j)]))
        return out

    def backward(self) -> list[Poly]:
        """Old coordinates as polynomials in the new chart."""
        f = self.f_polys()
        shifted = [p - k for p, k in zip(f, self.const)]
        out = []
        for row in self.Minv:
            acc = Poly(self.n)
            for v, p in zip(row, shifted):
                if v:
                    acc = acc + p.scale(v)
            out.append(acc)
        return out

    def forward(self, old: Sequence[RatFunc]) -> list[RatFunc]:
        f = []
        for row, k in zip(self.M, self.const):
            acc = RatFunc(Poly.const(old[0].n, k))
            for v, r in zip(row, old):
                if v:
                    acc = acc + r * v
            f.append(acc)
        rho = f[self.dominant] * self.sign
        out = []
        for item in self.layout:
            if item[0] == "rho":
                out.append(rho)
            elif item[0] == "ratio":
                out.append(f[item[1]] / rho)
            else:
                out.append(f[self.c + item[1]])
        return out

    def forward_point(self, old: Sequence[Fraction]) -> list[Fraction] | None:
        f = [sum((v * x for v, x in zip(row, old)), Fraction(0)) + k for row, k in zip(self.M, self.const)]
        rho = f[self.dominant] * self.sign
        if rho <= 0:
            return None
        out = []
        for item in self.layout:
            if item[0] == "rho":
                out.append(rho)
            elif item[0] == "ratio":
                out.append(f[item[1]] / rho)
            else:
                out.append(f[self.c + item[1]])
        return out

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "center": self.center_id,
            "forms": [[fstr(v) for v in r] for r in self.M],
            "constants": [fstr(v) for v in self.const],
            "codim": self.c,
            "dominant": self.dominant,
            "sign": self.sign,
            "layout": [list(x) for x in self.layout],
        }


class AffineStep:
    """Root chart of a compact base: new = A . old + c with A invertible."""

    kind = "affine"
    center = None

    def __init__(self, A, c, new_chart: OrthantChart, validity=()):
        self.A = [[Fraction(v) for v in r] for r in A]
        self.c = [Fraction(v) for v in c]
        self.Ainv = inverse(self.A)
        self.n = len(self.A)
        self.new_chart = new_chart
        self.old_validity = []
        self.new_validity_affine = [(g.affine_parts()[0], g.affine_parts()[1], ">") for g in validity]

    def backward(self) -> list[Poly]:
        return [Poly.affine(row, -sum((v * k for v, k in zip(row, self.c)), Fraction(0))) for row in self.Ainv]

    def forward(self, old: Sequence[RatFunc]) -> list[RatFunc]:
        out = []
        for row, k in zip(self.A, self.c):
            acc = RatFunc(Poly.const(old[0].n, k))
            for v, r in zip(row, old):
                if v:
                    acc = acc + r * v
            out.append(acc)
        return out

    def forward_point(self, old):
        return [sum((v * x for v, x in zip(row, old)), Fraction(0)) + k for row, k in zip(self.A, self.c)]

    def to_json(self) -> dict:
        return {"kind": self.kind, "matrix": [[fstr(v) for v in r] for r in self.A], "offset": [fstr(v) for v in self.c]}


class RadialStep:
    """Boundary chart of the radial compactification: rho = sign / z_d, t_j = z_j * rho."""

    kind = "radial"

    def __init__(self, m: int, dominant: int, sign: int):
        self.m = m
        self.dominant = dominant
        self.sign = sign
        self.others = [j for j in range(m) if j != dominant]

    def backward(self) -> list[Poly]:
        m = self.m
        inv_rho = Poly.monomial([-1] + [0] * (m - 1))
        out = [None] * m
        out[self.dominant] = inv_rho.scale(self.sign)
        for i, j in enumerate(self.others):
            out[j] = Poly.var(m, 1 + i) * inv_rho
        return out

    def forward(self, old: Sequence[RatFunc]) -> list[RatFunc]:
        one = RatFunc(Poly.const(old[0].n, self.sign))
        rho = one / old[self.dominant]
        return [rho] + [old[j] * rho for j in self.others]

    def forward_point(self, old):
        zd = old[self.dominant] * self.sign
        if zd <= 0:
            return None
        rho = 1 / zd
        return [rho] + [old[j] * rho for j in self.others]

    def to_json(self) -> dict:
        return {"kind": self.kind, "dominant": self.dominant, "sign": self.sign}


@dataclass
class ChartRecord:
    chart: OrthantChart
    steps: tuple = ()
    blowdown: tuple = ()
    validity: tuple = ()
    name: str = ""

    def affine_validity(self) -> list[tuple]:
        """Affine validity polynomials as strict linear constraints."""
        out = []
        for g in self.validity:
            if g.is_affine():
                coeffs, const = g.affine_parts()
                out.append((coeffs, const, ">"))
        return out

    def valid_at(self, point: Sequence) -> bool:
        if any(point[j] < 0 for j in range(self.chart.b)):
            return False
        return all(g.evaluate(point) > 0 for g in self.validity)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "chart": self.chart.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "blowdown": [p.to_json() for p in self.blowdown],
            "validity": [p.to_json() for p in self.validity],
        }


@dataclass
class Atlas:
    base: OrthantChart
    charts: list[ChartRecord]
    hypersurface_registry: dict[str, tuple[str, str]]
    lifted_subs: dict[str, list] = field(default_factory=dict)
    base_subs: dict = field(default_factory=dict)
    centers: list[str] = field(default_factory=list)
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self._trans_cache: dict = {}

    @classmethod
    def from_chart(cls, chart: OrthantChart) -> "Atlas":
        rec = ChartRecord(chart, (), tuple(Poly.var(chart.n, i) for i in range(chart.n)), (), "c0")
        reg = {a: (ORIGINAL, a) for a in chart.labels}
        return cls(chart, [rec], reg)

    @classmethod
    def from_roots(cls, base: OrthantChart, roots: Sequence[tuple]) -> "Atlas":
        """Atlas of a compact base covered by affine root charts.

        Each root is (chart, A, c, validity, name): chart coordinates are A . s + c for
        base coordinates s, and validity lists affine polynomials required positive.
        """
        charts = []
        reg = {}
        for chart, A, c, validity, name in roots:
            st = AffineStep(A, c, chart, validity)
            charts.append(ChartRecord(chart, (st,), tuple(st.backward()), tuple(validity), name))
            for a in chart.labels:
                reg[a] = (ORIGINAL, a)
        return cls(base, charts, reg)

    def copy(self) -> "Atlas":
        out = Atlas(self.base, list(self.charts), dict(self.hypersurface_registry),
                    {k: list(v) for k, v in self.lifted_subs.items()}, dict(self.base_subs),
                    list(self.centers), dict(self.aliases))
        return out

    def __len__(self) -> int:
        return len(self.charts)

    def front_faces(self) -> list[str]:
        return sorted(a for a, t in self.hypersurface_registry.items() if t[0] == FRONT_FACE)

    def labels_present(self) -> set[str]:
        return {a for r in self.charts for a in r.chart.labels}

    def sub_in_chart(self, sub_id: str, a: int):
        return self.lifted_subs[sub_id][a]

    # --- transitions ---------------------------------------------------------

    def transition(self, a: int, b: int) -> list[RatFunc]:
        """Coordinates of chart b as rational functions on chart a."""
        key = (a, b)
        if key not in self._trans_cache:
            vals = [RatFunc(p) for p in self.charts[a].blowdown]
            for st in self.charts[b].steps:
                vals = st.forward(vals)
            self._trans_cache[key] = vals
        return self._trans_cache[key]

    def boundary_units(self, a: int, b: int) -> list[tuple]:
        """Boundary coordinates of chart b on chart a written as (x^e, unit)."""
        key = ("units", a, b)
        if key not in self._trans_cache:
            out = []
            for r in self.transition(a, b)[: self.charts[b].chart.b]:
                e, _ = r.num.split_content()
                e = tuple(e[: self.charts[a].chart.b]) + (0,) * (r.n - self.charts[a].chart.b)
                out.append((e, RatFunc(r.num.shift([-k for k in e]), r.den)))
            self._trans_cache[key] = out
        return self._trans_cache[key]

    def map_point(self, a: int, b: int, point: Sequence) -> list[Fraction] | None:
        """Image in chart b of a point of chart a, or None if it is not in chart b.

        At boundary points the transition must carry the local orthant into the
        orthant: each boundary coordinate of b is a monomial times a positive unit.
        """
        vals = []
        for r in self.transition(a, b):
            v = r.evaluate(point)
            if v is None:
                return None
            vals.append(v)
        if any(point[j] == 0 for j in range(self.charts[a].chart.b)):
            for e, u in self.boundary_units(a, b):
                uv = u.evaluate(point)
                if uv is None or uv <= 0:
                    return None
        if not self.charts[b].valid_at(vals):
            return None
        return vals

    def transition_map(self, a: int, b: int) -> MonomialAffineMap | None:
        """The transition as a monomial map when its boundary part is monomial."""
        ra, rb = self.charts[a], self.charts[b]
        comps = self.transition(a, b)
        if any(not r.is_poly() for r in comps):
            return None
        bnd = []
        for j in range(rb.chart.b):
            p = comps[j].num
            if not p.is_monomial():
                return None
            (e, c), = p.terms.items()
            if c <= 0 or any(e[ra.chart.b:]):
                return None
            bnd.append((c, e[: ra.chart.b]))
        return MonomialAffineMap(ra.chart, rb.chart, tuple(bnd), tuple(r.num for r in comps[rb.chart.b:]))

    # --- witness points ------------------------------------------------------

    def witnesses(self, a: int, zero=(), count: int = 6, seed: int = 0) -> list[list[Fraction]]:
        """Seeded rational points of chart a with the boundary coordinates in `zero` vanishing."""
        rec = self.charts[a]
        ch = rec.chart
        rng = random.Random(hash((seed, a, tuple(sorted(zero)))) & 0xFFFFFFFF)
        out = []
        tries = 0
        # per-coordinate scales so that thin regions (tubes, remainders) are hit
        scales = [Fraction(1, 2**k) for k in range(9)] + [Fraction(3)]
        while len(out) < count and tries < 200 * count:
            tries += 1
            pt = []
            for j in range(ch.n):
                sc = rng.choice(scales) if tries > 20 else scales[tries % 4]
                if j < ch.b:
                    pt.append(Fraction(0) if j in zero else sc * Fraction(rng.randint(1, 60), 31))
                else:
                    pt.append(sc * Fraction(rng.randint(-60, 60), 29))
            if rec.valid_at(pt):
                out.append(pt)
        return out

    # --- serialization -------------------------------------------------------

    def to_json(self, with_transitions: bool = False) -> dict:
        data = {
            "base": self.base.to_json(),
            "charts": [r.to_json() for r in self.charts],
            "hypersurface_registry": {a: {"kind": t[0], "ref": t[1]} for a, t in sorted(self.hypersurface_registry.items())},
            "aliases": dict(sorted(self.aliases.items())),
            "centers": list(self.centers),
            "lifted_subs": {
                k: [None if s is None else s.to_json(self.charts[i].name) for i, s in enumerate(v)]
                for k, v in sorted(self.lifted_subs.items())
            },
        }
        if with_transitions:
            trans = []
            for a in range(len(self.charts)):
                for b in range(len(self.charts)):
                    t = self.transition_map(a, b)
                    if t is not None:
                        trans.append({"source": a, "target": b, "map": t.to_json()})
            data["transitions"] = trans
        return data


def radial_atlas(m: int) -> Atlas:
    base = OrthantChart(0, m)
    charts = [ChartRecord(base, (), tuple(Poly.var(m, i) for i in range(m)), (), "interior")]
    reg = {}
    for d in range(m):
        for s in (1, -1):
            label = ("inf+" if s > 0 else "inf-") if m == 1 else "inf"
            st = RadialStep(m, d, s)
            ch = OrthantChart(1, m - 1, (label,))
            charts.append(ChartRecord(ch, (st,), tuple(st.backward()), (), f"z{d + 1}{'+' if s > 0 else '-'}"))
            reg[label] = (ORIGINAL, label)
    return Atlas(base, charts, reg)


def rat_compose(r: RatFunc, subs: Sequence[RatFunc]) -> RatFunc:
    """r with variable i replaced by subs[i]."""

    def poly_at(p: Poly) -> RatFunc:
        acc = RatFunc(Poly(subs[0].n))
        for e, c in p.terms.items():
            t = RatFunc(Poly.const(subs[0].n, c))
            for i, k in enumerate(e):
                for _ in range(abs(k)):
                    t = t * subs[i] if k > 0 else t / subs[i]
            acc = acc + t
        return acc

    out = poly_at(r.num)
    for f in r.den:
        out = out / poly_at(f)
    return out


def cocycle_holds(atlas: Atlas, a: int, b: int, c: int) -> bool:
    """Phi_bc o Phi_ab = Phi_ac as rational functions on chart a (vacuous without a common point)."""
    if not 0 <= max(a, b, c) < len(atlas.charts):
        raise DomainError("chart index out of range")
    common = any(
        atlas.map_point(a, b, pt) is not None and atlas.map_point(a, c, pt) is not None
        for pt in atlas.witnesses(a, count=12, seed=11)
    )
    if not common:
        return True
    ab = atlas.transition(a, b)
    bc = atlas.transition(b, c)
    ac = atlas.transition(a, c)
    for r, target in zip(bc, ac):
        if not (rat_compose(r, ab) - target).num.is_zero():
            return False
    return True


def all_cocycles_hold(atlas: Atlas, witnesses: int = 6) -> bool:
    """The cocycle identity on every triple of charts sharing a witness point of the first."""
    n = len(atlas.charts)
    for a in range(n):
        pts = atlas.witnesses(a, count=witnesses, seed=11)
        groups: set[tuple[int, ...]] = set()
        for pt in pts:
            groups.add(tuple(b for b in range(n) if atlas.map_point(a, b, pt) is not None))
        checked = set()
        for g in groups:
            for b in g:
                for c in g:
                    if (b, c) in checked:
                        continue
                    checked.add((b, c))
                    ab, bc, ac = atlas.transition(a, b), atlas.transition(b, c), atlas.transition(a, c)
                    for r, target in zip(bc, ac):
                        if not (rat_compose(r, ab) - target).num.is_zero():
                            return False
    return True


def cube_atlas(k: int) -> Atlas:
    """The cube [-1,1]^k with one root chart per corner.

    The corner with signs sigma has coordinates r_j = 1 - sigma_j s_j >= 0, valid for
    r_j < 3/2; face s_j = +1 or -1 is labelled "s{j}=+1" or "s{j}=-1".
    """
    from itertools import product

    if k < 1:
        raise DomainError("k >= 1 required")
    base = OrthantChart(0, k)
    roots = []
    for sigma in product((1, -1), repeat=k):
        labels = tuple(f"s{j + 1}={'+' if s > 0 else '-'}1" for j, s in enumerate(sigma))
        A = [[-s if i == j else 0 for i in range(k)] for j, s in enumerate(sigma)]
        validity = tuple(Poly.affine([-int(i == j) for i in range(k)], Fraction(3, 2)) for j in range(k))
        name = "corner" + "".join("+" if s > 0 else "-" for s in sigma)
        roots.append((OrthantChart(k, 0, labels), A, [1] * k, validity, name))
    return Atlas.from_roots(base, roots)
