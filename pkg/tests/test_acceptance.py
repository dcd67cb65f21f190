"""End-to-end acceptance checks, one test per criterion, each under its time budget.

Every test prints a single PASS/FAIL line; the lines are repeated in the terminal summary.
"""

from __future__ import annotations

import random
import time
from contextlib import contextmanager
from itertools import permutations, product

import sympy as sp

from corpus import disjoint_lift_triples, lemma_pairs, transversal_lift_triples
from corner_calculus.arrangement import (EMPTY, PCleanFamily, diagonal_family, intersect,
                                         intersection_closure, intersection_orders, is_closed, is_p_clean,
                                         size_order, sub_from_equations, three_coplanar_lines)
from corner_calculus.atlas import Atlas
from corner_calculus.blowup import TRUE, blow_up, check_equivalence, lift_map, register, resolve
from corner_calculus.finsetcat import enumerate_partitions, partition_join
from corner_calculus.genprod import (NAMED_MAPS, TRANSLATION, IteratedFibrationModel, ad_construct,
                                     boundary_product, bphi_construct, check_axioms, composition_support,
                                     fibre_product_model, group_model, interval_lattice, posets_isomorphic,
                                     radial_fibre_lattice, scl_construct, simple_support_check,
                                     twoscl_construct)
from corner_calculus.liealg import (AlgebroidSection, anchor, bracket, fibre_product_linear, monomial_fields,
                                    scl_rescaled_linear, translation_linear)
from corner_calculus.linalg import rank
from corner_calculus.orthant import SIMPLE_B_FIBRATION, MonomialAffineMap, OrthantChart, classify_map
from corner_calculus.poly import Poly
from test_liealg import commutator_oracle, fibre_field, scl_field

RESULTS: dict[int, str] = {}


@contextmanager
def criterion(number: int, title: str, budget: float):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        ok = ok and elapsed < budget
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f}s, budget {budget:g}s)"
        RESULTS[number] = line
        print(line)
    assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"


def _all_equivalent_to_size_order(fam: PCleanFamily) -> None:
    ref = resolve(fam.chart, fam, size_order(fam), record_clean=False).result
    orders = intersection_orders(fam)
    assert orders
    for order in orders:
        res = resolve(fam.chart, fam, order, record_clean=False).result
        assert check_equivalence(ref, res).status == TRUE, order


def test_criterion_01_coplanar_lines() -> None:
    with criterion(1, "coplanar lines: clean flags and equivalence", 1):
        fam = three_coplanar_lines()
        a = resolve(fam.chart, fam, ("F1", "F2", "F3", "F4"))
        assert [s["p_clean"] for s in a.step_results[:2]] == [False, True]
        b = resolve(fam.chart, fam, ("F2", "F1", "F3", "F4"))
        assert all(s["p_clean"] for s in b.step_results)
        assert check_equivalence(a.result, b.result).status == TRUE


def test_criterion_02_all_intersection_orders_agree() -> None:
    with criterion(2, "every intersection order resolves, all equivalent", 120):
        scl = intersection_closure(diagonal_family(3, 1, scl=True, include_discrete=True))
        assert len(scl) == 5 and is_closed(scl)
        for fam in (scl, three_coplanar_lines()):
            _all_equivalent_to_size_order(fam)


def _lifts_meet(sp_, a_name: str, b_name: str) -> list:
    hits = []
    for a, rec in enumerate(sp_.charts):
        P, Q = sp_.lifted_subs[a_name][a], sp_.lifted_subs[b_name][a]
        if P is not None and Q is not None:
            z = intersect(P, Q, rec.affine_validity())
            if z is not EMPTY:
                hits.append((P, Q))
    return hits


def _registered(subs: dict) -> Atlas:
    ch = next(iter(subs.values())).chart
    sp_ = Atlas.from_chart(ch)
    for name, F in subs.items():
        sp_ = register(sp_, name, F)
    return sp_


def test_criterion_03_commutation_corpora() -> None:
    with criterion(3, "nested/transversal commute, disjoint and transversal lifts", 120):
        rng = random.Random(1)
        pairs = lemma_pairs(rng, 100)
        for F1, F2, _ in pairs:
            fam = PCleanFamily((F1, F2), ("A", "B"))
            a = resolve(F1.chart, fam, ("A", "B"), record_clean=False).result
            b = resolve(F1.chart, fam, ("B", "A"), record_clean=False).result
            assert check_equivalence(a, b).status == TRUE
        triples = disjoint_lift_triples(rng, 100)
        for F1, F2, F3 in triples:
            sp_ = blow_up(_registered({"F1": F1, "F2": F2, "F3": F3}), "F3")
            assert not _lifts_meet(sp_, "F1", "F2")
        triples = transversal_lift_triples(rng, 100)
        for F1, F2, F3 in triples:
            sp_ = blow_up(_registered({"F1": F1, "F2": F2, "F3": F3}), "F1")
            for P, Q in _lifts_meet(sp_, "F2", "F3"):
                NP, NQ = P.conormal(), Q.conormal()
                assert rank(NP + NQ) == len(NP) + len(NQ)
        assert len(pairs) == len(triples) == 100


def test_criterion_04_diagonal_families() -> None:
    with criterion(4, "diagonal families: p-clean, closed, meets are joins", 30):
        for k, kappa in product((2, 3, 4), (1, 2)):
            fam = diagonal_family(k, kappa)
            assert is_p_clean(fam) and is_closed(fam)
            parts = [p for p in enumerate_partitions(k) if not p.is_discrete()]
            by_part = dict(zip(parts, fam.elements))
            for p, q in permutations(parts, 2):
                assert intersect(by_part[p], by_part[q]) == by_part[partition_join(p, q)]


def test_criterion_05_constructors_satisfy_the_axioms() -> None:
    with criterion(5, "constructors pass the axioms with simple lifts", 300):
        ifib = IteratedFibrationModel(1, 1, 0)
        models = [
            fibre_product_model(1, 1, 4),
            group_model(TRANSLATION, 4, n=1),
            scl_construct(fibre_product_model(1, 0, 3)),
            ad_construct(ifib, 2),
            bphi_construct(3),
            twoscl_construct(ifib, 2),
        ]
        for m in models:
            report = check_axioms(m)
            assert report.passed and report.all_simple(), (m.name, report.failures())
            assert report.dimension_law
            assert all(ok for _, ok in report.generator_relations)
            assert all(report.surjection_maps.values())


def test_criterion_06_front_face_counts() -> None:
    with criterion(6, "front faces: Bell(k) - 1 for scl, 2 for bphi", 60):
        m = scl_construct(fibre_product_model(1, 0, 4))
        counts = [len(m.space(k).front_faces()) for k in (2, 3, 4)]
        assert counts == [len(enumerate_partitions(k)) - 1 for k in (2, 3, 4)] == [1, 4, 14]
        sp_ = bphi_construct(2).space(2)
        assert len(sp_.front_faces()) == 2 and len(sp_.labels_present()) == 6


def test_criterion_07_boundary_products() -> None:
    with criterion(7, "boundary products: radial fibre and interval factor", 30):
        for kappa in (1, 2):
            bp = boundary_product(scl_construct(fibre_product_model(kappa, 0, 2)), "eps", 2)
            assert posets_isomorphic(bp.fibre_lattices[2], radial_fibre_lattice(kappa))
        bp = boundary_product(bphi_construct(2), "s1=+1", 2)
        assert bp.hypersurfaces[2] == "ff[H+12]"
        assert posets_isomorphic(bp.fibre_lattices[2], interval_lattice())


def test_criterion_08_lie_bracket_oracle() -> None:
    with criterion(8, "bracket equals commutator oracle; Jacobi; anchor homomorphism", 60):
        m = fibre_product_linear(2)
        z1, z2 = m.coords[0]
        assert bracket(AlgebroidSection(m, (0, z1)), AlgebroidSection(m, (z2, 0))) == AlgebroidSection(m, (z1, -z2))
        models = [(fibre_product_linear(kappa, base), fibre_field) for kappa, base in product((1, 2), (0, 1))]
        models += [(scl_rescaled_linear(kappa), scl_field) for kappa in (1, 2)]
        rng = random.Random(7)
        for lm, as_field in models:
            xs = lm.coords[0]
            fields = monomial_fields(lm, 2)
            anchors = [anchor(V) for V in fields]
            for (V1, A1), (V2, A2) in product(zip(fields, anchors), repeat=2):
                B = bracket(V1, V2)
                assert as_field(lm, B) == commutator_oracle(as_field(lm, V1), as_field(lm, V2), xs)
                assert anchor(B) == A1.commutator(A2)
            linear = monomial_fields(lm, 1)
            for _ in range(10):
                A, B, C = (_combination(lm, linear, rng) for _ in range(3))
                cyc = [bracket(A, bracket(B, C)), bracket(B, bracket(C, A)), bracket(C, bracket(A, B))]
                assert all(sp.expand(sum(t.components[i] for t in cyc)) == 0 for i in range(len(lm.null_basis)))
        tm = translation_linear(2)
        for V1, V2 in product(monomial_fields(tm, 2), repeat=2):
            assert bracket(V1, V2).is_zero() and anchor(V1).is_zero()


def _combination(m, fields: list, rng: random.Random) -> AlgebroidSection:
    total = [sp.Integer(0)] * len(m.null_basis)
    for V in fields:
        c = sp.Rational(rng.randint(-3, 3), rng.randint(1, 3))
        total = [a + c * b for a, b in zip(total, V.components)]
    return AlgebroidSection(m, tuple(total))


def test_criterion_09_b_map_classifier() -> None:
    with criterion(9, "product normal form is simple; lifted map factorizes", 10):
        for k, n in ((1, 1), (2, 1), (3, 2), (4, 0)):
            src, tgt = OrthantChart(k, n), OrthantChart(1, n)
            inter = tuple(Poly.var(k + n, k + l) for l in range(n))
            f = MonomialAffineMap(src, tgt, ((1, (1,) * k),), inter)
            assert SIMPLE_B_FIBRATION in classify_map(f).flags
        # (xi1, xi2, y) -> (xi1 xi2, y), source blown up at both {xi_j = 0, y = 0}, target at {x = 0, y = 0}
        S = OrthantChart(2, 1, ("xi1", "xi2"))
        X1 = sub_from_equations(S, (0,), [[0, 0, 1, 0]])
        X2 = sub_from_equations(S, (1,), [[0, 0, 1, 0]])
        source = resolve(S, PCleanFamily((X1, X2), ("X1", "X2")))
        T = OrthantChart(1, 1, ("x",))
        target = blow_up(Atlas.from_chart(T), sub_from_equations(T, (0,), [[0, 1, 0]]), "Y")
        L = lift_map([Poly.monomial((1, 1, 0)), Poly.var(3, 2)], source, target)
        assert SIMPLE_B_FIBRATION in L.classification.flags
        # the target front face pulls back to the product of all source front faces
        assert {h: e for h, e in L.pullback["ff[Y]"].items() if e} == {"ff[X1]": 1, "ff[X2]": 1}
        assert {h: e for h, e in L.pullback["x"].items() if e} == {"xi1": 1, "xi2": 1}


def test_criterion_10_simple_support_composition() -> None:
    with criterion(10, "composed support is simple for Pi_C", 10):
        m = scl_construct(fibre_product_model(1, 0, 3))
        support = composition_support(m, {"ff[D12]"})
        assert support == {"ff[D123]"}
        assert simple_support_check(m.lifted(NAMED_MAPS["C"]), support)
