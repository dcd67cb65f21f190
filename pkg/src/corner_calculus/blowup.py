"""Iterated real blow-up of affine p-submanifolds in projective charts."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .arrangement import EMPTY, AffinePSub, PCleanFamily, intersect, is_p_clean, is_p_positioned
from .atlas import FRONT_FACE, Atlas, BlowupStep, ChartRecord
from .errors import ChartCoverageError, LiftLeavesAffineClass, NotPPositioned, PreconditionError, StepError
from .linalg import feasible, intersect_spans, rank, rref, solve
from .orthant import B_FIBRATION, B_NORMAL, B_SUBMERSION, SIMPLE_B_FIBRATION, BMapClass, MonomialAffineMap, OrthantChart
from .poly import Poly, RatFunc


def front_face_label(center_id: str) -> str:
    return f"ff[{center_id}]"


def register(space: Atlas, sub_id: str, sub: AffinePSub) -> Atlas:
    """Track a submanifold of the base, lifting it through every blow-up already performed."""
    if sub.chart != space.base:
        raise ValueError("submanifold must live in the base chart")
    out = space.copy()
    out.base_subs[sub_id] = sub
    parts = []
    for rec in out.charts:
        part = sub
        for st in rec.steps:
            if part is None:
                break
            part = lift_through(st, part, None)
        if part is not None:
            part = _restrict(part, rec)
        parts.append(part)
    out.lifted_subs[sub_id] = parts
    return out


def _restrict(part: AffinePSub, rec: ChartRecord):
    if part.chart != rec.chart:
        part = AffinePSub(rec.chart, part.zero_hypersurfaces, part.equations, part.rhs)
    return part if part.meets_orthant(rec.affine_validity()) else None


# --- normal coordinates of a center -----------------------------------------


def _normal_data(Z: AffinePSub):
    """Split the center's defining functions.

    Returns (u_forms, boundary_u, interiorized) where each u form is (coeffs, const)
    vanishing on Z, the first len(S) are the boundary coordinates of S, and
    interiorized lists (j, c) for rows x_j = c with x_j a boundary coordinate.
    """
    ch = Z.chart
    n = ch.n
    S = list(Z.zero_hypersurfaces)
    u = []
    for j in S:
        u.append(([Fraction(int(i == j)) for i in range(n)], Fraction(0)))
    order = list(range(ch.b, n)) + [j for j in range(ch.b) if j not in S]
    rows = [[r[i] for i in order] + [c] for r, c in zip(Z.equations, Z.rhs)]
    R, piv = rref(rows, len(order) + 1) if rows else ([], [])
    interiorized = []
    for r, p in zip(R, piv):
        coeffs = [Fraction(0)] * n
        for k, i in enumerate(order):
            coeffs[i] = r[k]
        var = order[p]
        if var < ch.b:
            nz = [i for i in range(n) if coeffs[i] != 0]
            if len(nz) != 1 or r[-1] <= 0:
                raise NotPPositioned("center", ch, "equation on boundary coordinates only")
            interiorized.append((var, r[-1]))
        u.append((coeffs, -r[-1]))
    return u, len(S), interiorized


def _complement(Z: AffinePSub, u_forms, interiorized, others: Sequence[AffinePSub]):
    """Affine forms w completing u to coordinates, chosen so that each sub in `others` splits."""
    ch = Z.chart
    n = ch.n
    c = len(u_forms)
    U = [f for f, _ in u_forms]
    inter = {j for j, _ in interiorized}
    Bp = [j for j in range(ch.b) if j not in Z.zero_hypersurfaces and j not in inter]
    R, piv = rref(U + [[Fraction(int(i == j)) for i in range(n)] for j in Bp], n)
    free = [i for i in range(ch.b, n) if i not in piv]
    w_std = [[Fraction(int(i == j)) for i in range(n)] for j in Bp + free]
    basis = U + w_std
    nb = len(Bp)
    nw = len(free)

    def coords(v):
        # express v in the basis (u, w_std)
        sol = solve([[basis[k][i] for k in range(n)] for i in range(n)], v)
        return sol[0]

    def system(subs):
        # unknowns: A (nw x c, row-major) then lambdas
        eqs, rhs = [], []
        nl = 0
        blocks = []
        for G in subs:
            N = G.conormal()
            Nc = [coords(v) for v in N]
            Kg = intersect_spans(Nc, [[Fraction(int(i == k)) for i in range(n)] for k in range(c)], n)
            blocks.append((Nc, Kg, nl))
            nl += len(Nc) * len(Kg)
        nun = nw * c + nl
        for Nc, Kg, off in blocks:
            for t, v in enumerate(Nc):
                alpha, beta = v[:c], v[c:]
                for i in range(c):
                    row = [Fraction(0)] * nun
                    for k in range(nw):
                        row[k * c + i] = -beta[nb + k]
                    for s, kv in enumerate(Kg):
                        row[nw * c + off + t * len(Kg) + s] = -kv[i]
                    eqs.append(row)
                    rhs.append(-alpha[i])
        if not eqs:
            return [Fraction(0)] * nun
        sol = solve(eqs, rhs)
        return None if sol is None else sol[0]

    chosen = []
    A = [Fraction(0)] * (nw * c)
    for G in others:
        sol = system(chosen + [G])
        if sol is not None:
            chosen.append(G)
            A = sol[: nw * c]
    w_forms = []
    for j in Bp:
        w_forms.append(([Fraction(int(i == j)) for i in range(n)], Fraction(0)))
    for k, j in enumerate(free):
        coeffs = [Fraction(int(i == j)) for i in range(n)]
        const = Fraction(0)
        for i in range(c):
            a = A[k * c + i]
            if a:
                coeffs = [x + a * y for x, y in zip(coeffs, u_forms[i][0])]
                const += a * u_forms[i][1]
        w_forms.append((coeffs, const))
    return w_forms, Bp, free


# --- lifting ----------------------------------------------------------------


def _rows_in_f(st: BlowupStep, P: AffinePSub):
    """P's defining rows in the f-coordinates of the step, with right-hand sides."""
    out = []
    for row in P.augmented():
        a, r = row[:-1], row[-1]
        alpha = [sum((a[k] * st.Minv[k][i] for k in range(st.n)), Fraction(0)) for i in range(st.n)]
        rr = r + sum((x * y for x, y in zip(alpha, st.const)), Fraction(0))
        out.append((alpha, rr))
    return out


def _solve_poly_system(polys: list[Poly], rho: int, n: int):
    """Affine rows (coeffs, rhs) equivalent to the polynomial system, dividing by rho freely.

    Returns None when inconsistent; raises LiftLeavesAffineClass when non-affine rows remain.
    """
    polys = [p for p in polys if not p.is_zero()]
    for _ in range(4 * n + 4):
        polys = [_strip_rho(p, rho) for p in polys]
        if any(p.is_constant() and not p.is_zero() for p in polys):
            return None
        polys = [p for p in polys if not p.is_zero()]
        monos = sorted({e for p in polys for e in p.terms}, key=lambda e: (-sum(e), e))
        mat = [[p.terms.get(e, Fraction(0)) for e in monos] for p in polys]
        R, piv = rref(mat, len(monos)) if mat else ([], [])
        polys = [Poly(n, {e: v for e, v in zip(monos, r) if v}) for r in R]
        affine = [p for p in polys if p.is_affine()]
        nonlin = [p for p in polys if not p.is_affine()]
        if any(p.is_constant() and not p.is_zero() for p in affine):
            return None
        if not nonlin:
            return [p.affine_parts() for p in affine]
        changed = False
        for a in affine:
            coeffs, const = a.affine_parts()
            j = next((i for i in range(n) if coeffs[i] != 0 and any(i in q.variables() for q in nonlin)), None)
            if j is None:
                continue
            val = Poly.affine([-v / coeffs[j] if i != j else 0 for i, v in enumerate(coeffs)], -const / coeffs[j])
            nonlin = [q.substitute(j, val) for q in nonlin]
            changed = True
        polys = affine + nonlin
        if not changed:
            break
    raise LiftLeavesAffineClass("lift is not affine in this chart")


def _strip_rho(p: Poly, rho: int) -> Poly:
    if p.is_zero():
        return p
    k = p.min_exponents()[rho]
    if k <= 0:
        return p
    e = [0] * p.n
    e[rho] = -k
    return p.shift(e)


def lift_through(st: BlowupStep, P: AffinePSub, rec: ChartRecord | None):
    """The lift of P (a sub of the step's old chart) to the step's new chart, or None."""
    if st.kind == "affine":
        rows, rhs = [], []
        for row in P.augmented():
            a, r = row[:-1], row[-1]
            alpha = [sum((a[k] * st.Ainv[k][i] for k in range(st.n)), Fraction(0)) for i in range(st.n)]
            rows.append(alpha)
            rhs.append(r + sum((x * y for x, y in zip(alpha, st.c)), Fraction(0)))
        out = AffinePSub.make(st.new_chart, (), rows, rhs, st.new_validity_affine)
        return None if out is EMPTY else out
    if st.kind != "blowup":
        raise LiftLeavesAffineClass(f"cannot lift through a {st.kind} chart")
    Z = st.center
    new_chart = st.new_chart
    n = st.n
    validity = st.old_validity
    if not P.meets_orthant(validity):
        return None
    meets = intersect(P, Z, validity) if Z is not None else EMPTY
    rows = _rows_in_f(st, P)
    c = st.c
    new_rows: list[tuple] = []
    S_new: list[int] = []
    done = False
    if meets is not EMPTY:
        N = [a for a, _ in rows]
        Kg = intersect_spans(N, [[Fraction(int(i == k)) for i in range(n)] for k in range(c)], n)
        Lg = intersect_spans(N, [[Fraction(int(i == k)) for i in range(n)] for k in range(c, n)], n)
        if len(Kg) + len(Lg) == rank(N):
            p0 = meets.point()
            f0 = [sum((x * y for x, y in zip(r, p0)), Fraction(0)) + k for r, k in zip(st.M, st.const)]
            contained = Z.contains(P)
            for v in Lg:
                coeffs = [Fraction(0)] * n
                for j in range(c, n):
                    if v[j]:
                        coeffs[st.pos[("w", j - c)]] = v[j]
                new_rows.append((coeffs, sum((x * y for x, y in zip(v, f0)), Fraction(0))))
            if contained:
                S_new.append(st.rho_index)
            else:
                for v in Kg:
                    coeffs = [Fraction(0)] * n
                    rhs = Fraction(0)
                    for j in range(c):
                        if not v[j]:
                            continue
                        if j == st.dominant:
                            rhs -= v[j] * st.sign
                        else:
                            coeffs[st.pos[("u", j)]] = v[j]
                    new_rows.append((coeffs, rhs))
            done = True
    if not done:
        f = st.f_polys()
        polys = []
        for alpha, r in rows:
            p = Poly.const(n, -r)
            for a, q in zip(alpha, f):
                if a:
                    p = p + q.scale(a)
            polys.append(p)
        sol = _solve_poly_system(polys, st.rho_index, n)
        if sol is None:
            return None
        new_rows = [(co, -k) for co, k in sol]
        if meets is EMPTY:
            S_new = []
    out = AffinePSub.make(new_chart, S_new, [r for r, _ in new_rows], [k for _, k in new_rows], st.new_validity_affine)
    return None if out is EMPTY else out


# --- blow-up ----------------------------------------------------------------


def _chart_center(space: Atlas, center_id: str, a: int):
    part = space.lifted_subs[center_id][a]
    if part is None:
        return None
    rec = space.charts[a]
    return part if part.meets_orthant(rec.affine_validity()) else None


def _gt(coeffs, const) -> tuple:
    return (list(coeffs), Fraction(const), ">")


def _box(u_forms, delta: Fraction) -> list[tuple]:
    """|u_i| < 2 delta as strict affine constraints on the old chart."""
    out = []
    for coeffs, const in u_forms:
        out.append(_gt([-v for v in coeffs], 2 * delta - const))
        out.append(_gt(coeffs, 2 * delta + const))
    return out


def _tube_radius(rec: ChartRecord, Z: AffinePSub, u_forms, disjoint: list[AffinePSub]) -> Fraction:
    """A radius small enough that the tube around Z misses every disjoint tracked sub."""
    delta = Fraction(1)
    for _ in range(40):
        box = rec.affine_validity() + _box(u_forms, delta)
        if not any(P.meets_orthant(box) for P in disjoint):
            return delta
        delta /= 4
    raise LiftLeavesAffineClass("no tube separates the center from a disjoint submanifold")


def _blow_chart(space: Atlas, a: int, Z: AffinePSub, center_id: str, parts: dict, priority, delta: Fraction | None):
    """Charts replacing chart a, each with the parts of every tracked sub.

    With delta set, projective charts are cut down to a tube rho < delta, |ratio| < 2
    and the complement of the tube is covered by copies of the old chart.
    """
    rec = space.charts[a]
    label = front_face_label(center_id)
    try:
        u_forms, nS, interiorized = _normal_data(Z)
    except NotPPositioned as exc:
        raise NotPPositioned(center_id, rec.name, str(exc)) from exc
    order = [k for k in priority if k in parts and k != center_id] + sorted(k for k in parts if k not in priority and k != center_id)
    others = []
    for k in order:
        P = parts[k][a]
        if P is not None and intersect(P, Z, rec.affine_validity()) is not EMPTY:
            others.append(P)
    w_forms, Bp, free = _complement(Z, u_forms, interiorized, others)
    forms = u_forms + w_forms
    M = [f for f, _ in forms]
    const = [k for _, k in forms]
    c = len(u_forms)
    inter_u = list(range(nS, c))
    ch = rec.chart
    out = []
    for d in range(c):
        for s in ((1,) if d < nS else (1, -1)):
            layout = [("rho",)]
            labels = [label]
            for j in range(nS):
                if j != d:
                    layout.append(("ratio", j))
                    labels.append(ch.labels[Z.zero_hypersurfaces[j]])
            for t, j in enumerate(Bp):
                layout.append(("w", t))
                labels.append(ch.labels[j])
            nb = len(labels)
            for j in inter_u:
                if j != d:
                    layout.append(("ratio", j))
            for t in range(len(free)):
                layout.append(("w", len(Bp) + t))
            new_chart = OrthantChart(nb, ch.n - nb, tuple(labels))
            st = BlowupStep(center_id, M, const, c, d, s, layout, Z)
            back = st.backward()
            blowdown = tuple(p.compose(back) for p in rec.blowdown)
            validity = [g.compose(back) for g in rec.validity]
            for j, _ in interiorized:
                validity.append(Poly.var(ch.n, j).compose(back))
            if delta is not None:
                validity.append(Poly.affine([-int(i == st.rho_index) for i in range(ch.n)], delta))
                for i, item in enumerate(layout):
                    if item[0] == "ratio":
                        validity.append(Poly.affine([-int(t == i) for t in range(ch.n)], 2))
                        if i >= nb:
                            validity.append(Poly.affine([int(t == i) for t in range(ch.n)], 2))
            validity = tuple(g for g in validity if not (g.is_constant() and g.constant() > 0))
            if any(g.is_constant() for g in validity):
                continue
            st.new_chart = new_chart
            st.old_validity = rec.affine_validity() + [_gt([int(i == j) for i in range(ch.n)], 0) for j, _ in interiorized]
            if delta is not None:
                st.old_validity += _box(u_forms, delta)
            nrec = ChartRecord(new_chart, rec.steps + (st,), blowdown, validity, f"{rec.name}.{center_id}:{d}{'+' if s > 0 else '-'}")
            st.new_validity_affine = nrec.affine_validity()
            lifted = {}
            for k in parts:
                P = parts[k][a]
                if k == center_id:
                    lifted[k] = AffinePSub(new_chart, (0,))
                else:
                    lifted[k] = None if P is None else lift_through(st, P, nrec)
            out.append((nrec, lifted))
    pieces = [(f"rem{j}", Poly.affine([-int(i == j) for i in range(ch.n)], cval)) for j, cval in interiorized]
    if delta is not None:
        for i, (coeffs, k) in enumerate(u_forms):
            pieces.append((f"out{i}+", Poly.affine(coeffs, k - delta / 2)))
            if i >= nS:
                pieces.append((f"out{i}-", Poly.affine([-v for v in coeffs], -k - delta / 2)))
    for tag, g in pieces:
        rem = ChartRecord(ch, rec.steps, rec.blowdown, rec.validity + (g,), f"{rec.name}.{center_id}:{tag}")
        lifted = {}
        for k in parts:
            P = parts[k][a]
            if k == center_id or P is None:
                lifted[k] = None
            else:
                lifted[k] = P if P.meets_orthant(rem.affine_validity()) else None
        out.append((rem, lifted))
    return out


def blow_up(space: Atlas, center: str | AffinePSub, center_id: str | None = None, priority: Sequence[str] = ()) -> Atlas:
    """Blow up a tracked submanifold (by id) or a base submanifold; returns a new atlas."""
    if isinstance(center, AffinePSub):
        center_id = center_id or f"C{len(space.centers) + 1}"
        space = register(space, center_id, center)
    else:
        center_id = center
    out = space.copy()
    label = front_face_label(center_id)
    parts = {k: v for k, v in space.lifted_subs.items()}
    new_charts: list[ChartRecord] = []
    new_parts: dict[str, list] = {k: [] for k in parts}
    boundary_center = False
    for a, rec in enumerate(space.charts):
        Z = _chart_center(space, center_id, a)
        if Z is not None and not is_p_positioned(Z, rec.affine_validity()):
            raise NotPPositioned(center_id, rec.name)
        if Z is not None and Z.codim == 1 and len(Z.zero_hypersurfaces) == 1:
            boundary_center = True
            out.aliases[center_id] = rec.chart.labels[Z.zero_hypersurfaces[0]]
            Z = None
        if Z is None:
            new_charts.append(rec)
            for k in parts:
                new_parts[k].append(parts[k][a])
            continue
        try:
            pieces = _blow_chart(space, a, Z, center_id, parts, priority, None)
        except LiftLeavesAffineClass:
            # subs disjoint from the center may curve in far-away projective charts
            u_forms = _normal_data(Z)[0]
            disjoint = [P[a] for k, P in parts.items() if k != center_id and P[a] is not None and intersect(P[a], Z, rec.affine_validity()) is EMPTY]
            delta = _tube_radius(rec, Z, u_forms, disjoint)
            pieces = _blow_chart(space, a, Z, center_id, parts, priority, delta)
        for nrec, lifted in pieces:
            new_charts.append(nrec)
            for k in parts:
                new_parts[k].append(lifted[k])
    out.charts = new_charts
    out.lifted_subs = new_parts
    out.centers = space.centers + [center_id]
    if not boundary_center:
        out.hypersurface_registry[label] = (FRONT_FACE, center_id)
    out._trans_cache = {}
    return out


def lift_sub(sub_id: str, space: Atlas) -> list:
    """Per-chart parts of a tracked submanifold in the current atlas."""
    return list(space.lifted_subs[sub_id])


# --- resolution --------------------------------------------------------------


@dataclass
class BlowupSequence:
    base: Atlas
    centers: list[str]
    step_results: list[dict] = field(default_factory=list)
    result: Atlas | None = None


def atlas_p_clean(space: Atlas, ids: Sequence[str]) -> bool:
    for a, rec in enumerate(space.charts):
        els = [space.lifted_subs[k][a] for k in ids if space.lifted_subs[k][a] is not None]
        if len(els) > 1 and not is_p_clean(els, rec.affine_validity()):
            return False
    return True


def resolve(space: Atlas | OrthantChart, family: PCleanFamily, order: Sequence[str] | None = None,
            extra: dict[str, AffinePSub] | None = None, record_clean: bool = True,
            watch: Sequence[str] = ()) -> BlowupSequence:
    """Blow up the family's elements in the given order (default: as listed).

    Each step records whether the remaining centers are p-clean and, separately,
    whether the not yet blown-up members of `watch` are.
    """
    if isinstance(space, OrthantChart):
        space = Atlas.from_chart(space)
    order = list(order) if order is not None else list(family.names)
    if len(set(order)) != len(order):
        raise ValueError("centers must be distinct")
    base = space
    for name, el in zip(family.names, family.elements):
        space = register(space, name, el)
    for k, v in (extra or {}).items():
        space = register(space, k, v)
    seq = BlowupSequence(base, order)
    for i, name in enumerate(order):
        remaining = order[i + 1:]
        try:
            space = blow_up(space, name, priority=remaining)
        except (NotPPositioned, LiftLeavesAffineClass) as exc:
            raise StepError(i, str(exc), exc) from exc
        rec = {"center": name, "charts": len(space.charts)}
        if record_clean:
            rec["p_clean"] = atlas_p_clean(space, remaining)
        if watch:
            rec["watch_p_clean"] = atlas_p_clean(space, [w for w in watch if w not in order[: i + 1]])
        seq.step_results.append(rec)
    seq.result = space
    return seq


# --- equivalence -------------------------------------------------------------

TRUE = "TRUE"
FALSE = "FALSE"
UNCERTIFIED = "UNCERTIFIED"


@dataclass(frozen=True)
class Equivalence:
    status: str
    detail: str = ""

    def __bool__(self) -> bool:
        return self.status == TRUE


def _cross_transition(A: Atlas, a: int, B: Atlas, b: int):
    vals = [RatFunc(p) for p in A.charts[a].blowdown]
    for st in B.charts[b].steps:
        vals = st.forward(vals)
    return vals


class _Cross:
    def __init__(self, A: Atlas, B: Atlas):
        self.A, self.B = A, B
        self.cache: dict = {}

    def get(self, a: int, b: int):
        if (a, b) not in self.cache:
            self.cache[(a, b)] = _cross_transition(self.A, a, self.B, b)
        return self.cache[(a, b)]


def _strata_of(rec: ChartRecord):
    b = rec.chart.b
    out = []
    for k in range(b + 1):
        for T in combinations(range(b), k):
            pos = [j for j in range(b) if j not in T]
            n = rec.chart.n
            cons = [([Fraction(int(i == j)) for i in range(n)], Fraction(0), "=") for j in T]
            cons += [([Fraction(int(i == j)) for i in range(n)], Fraction(0), ">") for j in pos]
            if feasible(n, cons + rec.affine_validity()):
                out.append(T)
    return out


def _local_match(fwd, back, rec_a: ChartRecord, rec_b: ChartRecord, T, p) -> bool:
    """fwd is a local diffeomorphism at p preserving hypersurface labels, with inverse back."""
    img = []
    for r in fwd:
        v = r.evaluate(p)
        if v is None:
            return False
        img.append(v)
    if not rec_b.valid_at(img):
        return False
    for r in back:
        if r.evaluate(img) is None:
            return False
    labels_a = {rec_a.chart.labels[i]: i for i in T}
    n = rec_a.chart.n
    for j in range(rec_b.chart.b):
        lab = rec_b.chart.labels[j]
        e = [0] * n
        if lab in labels_a:
            e[labels_a[lab]] = -1
        q = RatFunc(fwd[j].num.shift(e), fwd[j].den)
        v = q.evaluate(p)
        if v is None or v <= 0:
            return False
    # every vanishing coordinate of p must be matched by a label of chart b
    return set(labels_a) <= set(rec_b.chart.labels)


def _cover(A: Atlas, B: Atlas, witnesses: int) -> str | None:
    fwd, back = _Cross(A, B), _Cross(B, A)
    for a, rec in enumerate(A.charts):
        preferred: list[int] = []
        for T in _strata_of(rec):
            pts = A.witnesses(a, zero=T, count=witnesses, seed=5)
            for p in pts:
                ok = False
                for b in preferred + [b for b in range(len(B.charts)) if b not in preferred]:
                    rb = B.charts[b]
                    f = fwd.get(a, b)
                    img_ok = True
                    for r in f:
                        if r.evaluate(p) is None:
                            img_ok = False
                            break
                    if not img_ok:
                        continue
                    if _local_match(f, back.get(b, a), rec, rb, T, p):
                        ok = True
                        if b in preferred:
                            preferred.remove(b)
                        preferred.insert(0, b)
                        break
                if not ok:
                    return f"chart {rec.name} stratum {T} point {[str(x) for x in p]}"
    return None


def check_equivalence(A: Atlas, B: Atlas, witnesses: int = 3) -> Equivalence:
    """Certify that the identity of the common interior extends to a diffeomorphism.

    At seeded witness points of every boundary stratum of every chart, look for a chart
    of the other atlas in which the transition is regular, has a regular inverse, and
    carries each vanishing hypersurface to the one with the same label.
    """
    if A.base != B.base:
        raise PreconditionError("atlases resolve different base charts")
    la = {k: v for k, v in A.hypersurface_registry.items()}
    lb = {k: v for k, v in B.hypersurface_registry.items()}
    if la != lb or A.labels_present() != B.labels_present():
        return Equivalence(FALSE, "hypersurface registries differ")
    for X, Y in ((A, B), (B, A)):
        gap = _cover(X, Y, witnesses)
        if gap is not None:
            return Equivalence(UNCERTIFIED, gap)
    return Equivalence(TRUE)


# --- lifting maps ------------------------------------------------------------


@dataclass
class MapPiece:
    """The lifted map from source chart `source` into target chart `target`.

    Boundary component j is x^exponents[j] * units[j] (None marks an identically zero
    component); interior components are rational functions on the source chart.
    """

    source: int
    target: int
    exponents: list
    units: list
    interior: list

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "boundary": [None if e is None else {"exponents": list(e), "unit": repr(u)} for e, u in zip(self.exponents, self.units)],
            "interior": [repr(r) for r in self.interior],
        }


@dataclass
class LiftedMap:
    source: Atlas
    target: Atlas
    pieces: dict
    classification: BMapClass
    hypersurface_map: dict
    pullback: dict

    def pullback_exponents(self, target_label: str) -> dict[str, int]:
        """Order of vanishing of the pulled-back defining function of target_label along each source hypersurface."""
        return dict(self.pullback.get(target_label, {}))

    def to_json(self) -> dict:
        return {
            "classification": self.classification.to_json(),
            "hypersurface_map": {k: list(v) for k, v in sorted(self.hypersurface_map.items())},
            "pullback": {h: dict(sorted(v.items())) for h, v in sorted(self.pullback.items())},
            "pieces": [p.to_json() for _, p in sorted(self.pieces.items())],
        }


def _as_atlas(space) -> Atlas:
    if isinstance(space, BlowupSequence):
        return space.result
    if isinstance(space, OrthantChart):
        return Atlas.from_chart(space)
    return space


def _make_piece(src: Atlas, a: int, tgt: Atlas, b: int, comps: list) -> MapPiece:
    from .atlas import rat_compose

    blow = [RatFunc(p) for p in src.charts[a].blowdown]
    vals = [rat_compose(r, blow) for r in comps]
    for st in tgt.charts[b].steps:
        vals = st.forward(vals)
    sb = src.charts[a].chart.b
    tb = tgt.charts[b].chart.b
    exps, units = [], []
    for r in vals[:tb]:
        if r.num.is_zero():
            exps.append(None)
            units.append(None)
            continue
        e, _ = r.num.split_content()
        e = tuple(e[:sb])
        units.append(RatFunc(r.num.shift([-k for k in e] + [0] * (r.n - sb)), r.den))
        exps.append(e)
    return MapPiece(a, b, exps, units, vals[tb:])


def _piece_at(piece: MapPiece, tgt_rec: ChartRecord, p) -> bool:
    img = []
    for e, u in zip(piece.exponents, piece.units):
        if e is None:
            img.append(Fraction(0))
            continue
        if any(k < 0 and x == 0 for x, k in zip(p, e)):
            return False
        v = u.evaluate(p)
        if v is None or v <= 0:
            return False
        for x, k in zip(p, e):
            if k:
                v *= x ** k
        img.append(v)
    for r in piece.interior:
        v = r.evaluate(p)
        if v is None:
            return False
        img.append(v)
    return tgt_rec.valid_at(img)


def _b_rank_at(piece: MapPiece, src_rec: ChartRecord, p) -> int:
    """Rank at p of the b-differential in the frames x d/dx, d/dy."""
    n, sb = src_rec.chart.n, src_rec.chart.b
    rows = []
    for e, u in zip(piece.exponents, piece.units):
        if e is None:
            continue
        uv = u.evaluate(p)
        row = []
        for k in range(n):
            d = u.diff(k).evaluate(p) / uv
            row.append(e[k] + p[k] * d if k < sb else d)
        rows.append(row)
    for r in piece.interior:
        rows.append([r.diff(k).evaluate(p) * (p[k] if k < sb else 1) for k in range(n)])
    return rank(rows) if rows else 0


def _critical_points(piece: MapPiece, rec: ChartRecord, T, seeds) -> list:
    """Points of the stratum where an affine factor of a unit or denominator of the piece vanishes.

    The piece is not usable there, so another target chart has to cover them.
    """
    factors = []
    for u in piece.units:
        if u is None:
            continue
        _, q = u.num.split_content()
        factors += [q] + list(u.den)
    for r in piece.interior:
        factors += list(r.den)
    out = []
    ch = rec.chart
    for g in factors:
        if g.is_constant() or not g.is_affine():
            continue
        coeffs, const = g.affine_parts()
        free = [j for j in range(ch.n) if coeffs[j] and j not in T]
        free.sort(key=lambda j: j < ch.b)
        for p in seeds:
            for j in free:
                q = list(p)
                q[j] = Fraction(0)
                q[j] = -(sum((c * x for c, x in zip(coeffs, q)), Fraction(0)) + const) / coeffs[j]
                if (j >= ch.b or q[j] > 0) and rec.valid_at(q):
                    out.append(q)
                    break
    return out


def lift_map(f, source_res, target_res, witnesses: int = 2) -> LiftedMap:
    """Lift a map of base charts to the resolutions and classify the lift.

    f is a MonomialAffineMap between the base charts or a list of polynomials giving
    the target base coordinates on the source base.  At witness points of every
    boundary stratum of every source chart a target chart is chosen in which each
    boundary component is a monomial times a positive unit; the local data is
    classified pointwise.
    """

    src, tgt = _as_atlas(source_res), _as_atlas(target_res)
    polys = f.components() if isinstance(f, MonomialAffineMap) else list(f)
    if len(polys) != tgt.base.n or any(p.n != src.base.n for p in polys):
        raise PreconditionError("map components do not match the base charts")
    comps = [RatFunc(p) for p in polys]
    cache: dict = {}
    pieces: dict = {}
    tgt_dim = tgt.base.n
    zero_seen = False
    normal = submersion = True
    simple = True
    images: dict[str, set] = {}
    pull: dict[str, dict[str, set]] = {h: {} for h in tgt.labels_present()}
    for a, rec in enumerate(src.charts):
        preferred: list[int] = []
        for T in _strata_of(rec):
            queue = list(src.witnesses(a, zero=T, count=witnesses, seed=17))
            probed: set = set()
            while queue:
                p = queue.pop(0)
                found = None
                for b in preferred + [b for b in range(len(tgt.charts)) if b not in preferred]:
                    key = (a, b)
                    if key not in cache:
                        cache[key] = _make_piece(src, a, tgt, b, comps)
                    if _piece_at(cache[key], tgt.charts[b], p):
                        found = b
                        break
                if found is None:
                    raise ChartCoverageError(f"no target chart covers chart {rec.name} at {[str(x) for x in p]}")
                if found not in preferred:
                    preferred.insert(0, found)
                pc = pieces[(a, found)] = cache[(a, found)]
                if found not in probed:
                    probed.add(found)
                    queue += _critical_points(pc, rec, T, src.witnesses(a, zero=T, count=witnesses + 2, seed=29))
                tch = tgt.charts[found].chart
                if any(e is None for e in pc.exponents):
                    zero_seen = True
                live = [e for e in pc.exponents if e is not None]
                for k in T:
                    if sum(1 for e in live if e[k]) > 1:
                        normal = False
                if any(e[k] not in (0, 1) for e in live for k in T):
                    simple = False
                if _b_rank_at(pc, rec, p) < tgt_dim:
                    submersion = False
                for k in T:
                    lab = rec.chart.labels[k]
                    hit = images.setdefault(lab, set())
                    for j, e in enumerate(pc.exponents):
                        if e is not None and e[k]:
                            hit.add(tch.labels[j])
                    for h in pull:
                        j = tch.labels.index(h) if h in tch.labels else None
                        e = 0 if j is None or pc.exponents[j] is None else pc.exponents[j][k]
                        pull[h].setdefault(lab, set()).add(e)
    pullback = {}
    for h, m in pull.items():
        pullback[h] = {}
        for lab, es in m.items():
            if len(es) != 1:
                raise LiftLeavesAffineClass(f"inconsistent vanishing order of {h} along {lab}")
            pullback[h][lab] = es.pop()
    hmap = {lab: tuple(sorted(v)) for lab, v in images.items()}
    kind = BMapClass.BOUNDARY if zero_seen else BMapClass.INTERIOR
    flags = set()
    if normal:
        flags.add(B_NORMAL)
    if submersion and not zero_seen:
        flags.add(B_SUBMERSION)
    onto = all(any(v) for v in pullback.values())
    if not zero_seen and normal and submersion and onto:
        flags.add(B_FIBRATION)
        if simple:
            flags.add(SIMPLE_B_FIBRATION)
    return LiftedMap(src, tgt, pieces, BMapClass(kind, frozenset(flags)), hmap, pullback)


# --- face lattice ------------------------------------------------------------


@dataclass
class Poset:
    """Boundary faces ordered by inclusion; covers[i] lists the faces covering face i."""

    nodes: list[dict]
    covers: list[tuple[int, int]]

    def by_codim(self, c: int) -> list[dict]:
        return [v for v in self.nodes if v["codim"] == c]

    def leq(self, i: int, j: int) -> bool:
        """Face i is contained in face j."""
        if i == j:
            return True
        up = {i}
        stack = [i]
        while stack:
            x = stack.pop()
            for s, t in self.covers:
                if s == x and t not in up:
                    if t == j:
                        return True
                    up.add(t)
                    stack.append(t)
        return False

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        for v in self.nodes:
            g.add_node(v["id"], codim=v["codim"])
        g.add_edges_from(self.covers)
        return g

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": v["id"], "codim": v["codim"], "labels": list(v["labels"])} for v in self.nodes],
            "covers": [list(e) for e in self.covers],
        }

    def to_dot(self) -> str:
        lines = ["digraph faces {"]
        for v in self.nodes:
            lab = "\\n".join(v["labels"])
            lines.append(f'  f{v["id"]} [label="{lab}\\ncodim {v["codim"]}"];')
        for s, t in self.covers:
            lines.append(f"  f{s} -> f{t};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def face_lattice(atlas: Atlas, witnesses: int = 8) -> Poset:
    """Global boundary faces: local strata of the charts glued through transitions."""
    local = [(a, T) for a, rec in enumerate(atlas.charts) for T in _strata_of(rec) if T]
    parent = {x: x for x in local}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, T in local:
        for p in atlas.witnesses(a, zero=T, count=witnesses, seed=3):
            for b, rb in enumerate(atlas.charts):
                if b == a:
                    continue
                q = atlas.map_point(a, b, p)
                if q is None:
                    continue
                Tb = tuple(j for j in range(rb.chart.b) if q[j] == 0)
                if (b, Tb) in parent:
                    ra, rb_ = find((a, T)), find((b, Tb))
                    if ra != rb_:
                        parent[max(ra, rb_)] = min(ra, rb_)
    comps: dict = {}
    for x in local:
        comps.setdefault(find(x), []).append(x)

    def labels_of(x):
        a, T = x
        return tuple(sorted(atlas.charts[a].chart.labels[j] for j in T))

    roots = sorted(comps, key=lambda r: (len(r[1]), labels_of(r), r))
    index = {r: i for i, r in enumerate(roots)}
    nodes = [{"id": i, "codim": len(r[1]), "labels": labels_of(r)} for r, i in index.items()]
    above = set()
    for a, T in local:
        for U in local:
            if U[0] == a and set(U[1]) < set(T):
                above.add((index[find((a, T))], index[find(U)]))
    covers = sorted((s, t) for s, t in above
                    if not any((s, m) in above and (m, t) in above for m in range(len(nodes))))
    return Poset(nodes, covers)
