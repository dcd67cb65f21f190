from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import _frame, coordinate_sub, random_chart, random_sub
from corner_calculus.arrangement import (CLEAN_NON_TRANSVERSAL, DISJOINT, EMPTY, EQUAL, FIRST_CONTAINS_SECOND,
                                         INTERSECTION_ORDER, NEITHER, NOT_CLEAN, SECOND_CONTAINS_FIRST, SIZE_ORDER,
                                         TRANSVERSAL, AffinePSub, PCleanFamily, diagonal_family, enumerate_orders,
                                         intersect, intersection_closure, intersection_orders, is_closed, is_p_clean,
                                         is_p_positioned, order_class, relation, size_order, split_order,
                                         sub_from_equations, three_coplanar_lines)
from corner_calculus.errors import DomainError, PreconditionError
from corner_calculus.finsetcat import enumerate_partitions, partition_join
from corner_calculus.orthant import OrthantChart

R2, R3 = OrthantChart(0, 2), OrthantChart(0, 3)
SWAP = {FIRST_CONTAINS_SECOND: SECOND_CONTAINS_FIRST, SECOND_CONTAINS_FIRST: FIRST_CONTAINS_SECOND}


def _lines():
    fam = three_coplanar_lines()
    return fam, dict(zip(fam.names, fam.elements))


def test_intersect_examples() -> None:
    a = sub_from_equations(R2, (), [[1, 0, 0]])
    b = sub_from_equations(R2, (), [[0, 1, 0]])
    assert intersect(a, b).dim == 0
    d12 = sub_from_equations(R3, (), [[1, -1, 0, 0]])
    d23 = sub_from_equations(R3, (), [[0, 1, -1, 0]])
    full = sub_from_equations(R3, (), [[1, -1, 0, 0], [1, 0, -1, 0]])
    assert intersect(d12, d23) == full
    # x_1 = 0 and x_1 + y_1 = -1 with y_1 = 1 forces x_1 < 0
    ch = OrthantChart(1, 1)
    x0 = sub_from_equations(ch, (0,))
    neg = sub_from_equations(ch, (), [[1, 0, -2], [0, 1, 1]])
    assert intersect(x0, neg) is EMPTY
    with pytest.raises(DomainError):
        intersect(a, x0)


def test_relation_examples() -> None:
    axes = [sub_from_equations(R3, (), [[0, 1, 0, 0], [0, 0, 1, 0]]),
            sub_from_equations(R3, (), [[1, 0, 0, 0], [0, 0, 1, 0]])]
    assert relation(*axes) == CLEAN_NON_TRANSVERSAL
    assert relation(sub_from_equations(R2, (), [[1, 0, 0]]), sub_from_equations(R2, (), [[0, 1, 0]])) == TRANSVERSAL
    _, F = _lines()
    assert relation(F["F2"], F["F1"]) == SECOND_CONTAINS_FIRST
    assert relation(F["F1"], F["F1"]) == EQUAL
    assert relation(sub_from_equations(R2, (), [[1, 0, 0]]), sub_from_equations(R2, (), [[1, 0, 1]])) == DISJOINT


def test_transversal_pair_through_a_corner_need_not_be_p_clean() -> None:
    # {y=0} and {y=x} in [0,inf) x R: independent conormals, but no common adapted frame
    ch = OrthantChart(1, 1)
    a = sub_from_equations(ch, (), [[0, 1, 0]])
    b = sub_from_equations(ch, (), [[-1, 1, 0]])
    assert relation(a, b) == TRANSVERSAL
    assert not is_p_clean(PCleanFamily((a, b)))


@settings(max_examples=150)
@given(st.integers(0, 2**32))
def test_relation_is_symmetric(seed: int) -> None:
    rnd = random.Random(seed)
    ch = random_chart(rnd)
    P, Q = random_sub(rnd, ch), random_sub(rnd, ch)
    assert relation(Q, P) == SWAP.get(relation(P, Q), relation(P, Q))


def test_p_positioned_examples() -> None:
    square = OrthantChart(2, 0)
    assert not is_p_positioned(sub_from_equations(square, (), [[1, -1, 0]]))
    ch = OrthantChart(1, 2)
    assert is_p_positioned(sub_from_equations(ch, (0,), [[0, 1, 0, 0]]))
    assert is_p_positioned(sub_from_equations(ch, (), [[-1, 1, 0, 0], [0, 0, 1, 0]]))


def test_p_clean_examples() -> None:
    fam, _ = _lines()
    assert is_p_clean(fam)
    assert is_p_clean(diagonal_family(3, 2, scl=True))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32))
def test_coordinate_subspaces_in_any_frame_are_p_clean_and_monotone(seed: int) -> None:
    rnd = random.Random(seed)
    ch = OrthantChart(rnd.randint(0, 2), rnd.randint(1, 3))
    frame = _frame(rnd, ch)
    subs = []
    for _ in range(rnd.randint(2, 4)):
        S = {j for j in range(ch.b) if rnd.random() < 0.5}
        R = {r for r in range(ch.m) if rnd.random() < 0.5} or {0}
        subs.append(coordinate_sub(ch, frame, S, R))
    fam = PCleanFamily(tuple(subs))
    assert is_p_clean(fam)
    for r in range(1, len(subs)):
        for idx in combinations(range(len(subs)), r):
            assert is_p_clean(fam.subfamily(idx))


def test_closure_examples() -> None:
    d12 = sub_from_equations(R3, (), [[1, -1, 0, 0]])
    d23 = sub_from_equations(R3, (), [[0, 1, -1, 0]])
    closed = intersection_closure(PCleanFamily((d12, d23), ("D12", "D23")))
    assert len(closed) == 3 and is_closed(closed)
    fam, F = _lines()
    three = PCleanFamily((F["F1"], F["F3"], F["F4"]), ("F1", "F3", "F4"))
    assert not is_closed(three)
    added = intersection_closure(three).elements[3:]
    assert added == (F["F2"],)
    assert intersection_closure(fam).elements == fam.elements


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_closure_is_idempotent(seed: int) -> None:
    rnd = random.Random(seed)
    ch = random_chart(rnd)
    fam = PCleanFamily(tuple({random_sub(rnd, ch) for _ in range(3)}))
    c = intersection_closure(fam)
    assert is_closed(c)
    assert set(fam.elements) <= set(c.elements)
    assert set(intersection_closure(c).elements) == set(c.elements)


def _class_oracle(els: list[AffinePSub]) -> str:
    """Definitions checked directly: weakly increasing dimension; F < G implies F & G <= G."""
    if all(els[i].dim <= els[i + 1].dim for i in range(len(els) - 1)):
        return SIZE_ORDER
    for i, j in combinations(range(len(els)), 2):
        z = intersect(els[i], els[j])
        if z is not EMPTY and not any(z == e for e in els[: j + 1]):
            return NEITHER
    return INTERSECTION_ORDER


def test_order_classes_of_the_coplanar_lines() -> None:
    fam, F = _lines()
    assert order_class(fam.ordered(("F2", "F1", "F3", "F4"))) == SIZE_ORDER
    assert order_class(fam.ordered(("F1", "F2", "F3", "F4"))) == INTERSECTION_ORDER
    assert order_class(fam.ordered(("F1", "F3", "F2", "F4"))) == NEITHER
    orders = enumerate_orders(fam)
    assert len(orders) == 24
    for names, cls in orders:
        assert cls == _class_oracle([F[a] for a in names])
    counts = {c: sum(1 for _, k in orders if k == c) for c in (SIZE_ORDER, INTERSECTION_ORDER, NEITHER)}
    # frozen from the definition oracle above
    assert counts == {SIZE_ORDER: 6, INTERSECTION_ORDER: 6, NEITHER: 12}
    assert len(intersection_orders(fam)) == 12
    assert size_order(fam) == ("F2", "F1", "F3", "F4")
    assert len(enumerate_orders(fam, cap=5)) == 5
    with pytest.raises(PreconditionError):
        order_class(PCleanFamily((F["F1"], F["F3"])))


def test_split_orders() -> None:
    diag = diagonal_family(3, 1)
    assert split_order(diag, ["D12"]) == ("D12", "D123", "D13", "D23")
    fam, _ = _lines()
    assert split_order(fam, ["F1"]) == ("F1", "F2", "F3", "F4")
    assert order_class(fam.ordered(split_order(fam, ["F1"]))) != NEITHER
    with pytest.raises(PreconditionError):
        split_order(diag, ["D12", "D13"])  # D12 & D13 = D123 must lie in the first part
    with pytest.raises(DomainError):
        split_order(diag, ["nope"])


@pytest.mark.parametrize("k,kappa", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2)])
def test_diagonal_family_structure(k: int, kappa: int) -> None:
    fam = diagonal_family(k, kappa)
    parts = [p for p in enumerate_partitions(k) if not p.is_discrete()]
    assert len(fam) == len(parts)
    for p, e in zip(parts, fam.elements):
        assert e.codim == kappa * (k - len(p.blocks))
    by_part = dict(zip(parts, fam.elements))
    for p, q in permutations(parts, 2):
        assert intersect(by_part[p], by_part[q]) == by_part[partition_join(p, q)]


def test_simple_diagonals_meet_transversally_in_the_full_diagonal() -> None:
    for k in (3, 4):
        fam = diagonal_family(k, 1)
        F = dict(zip(fam.names, fam.elements))
        acc = F["D12"]
        for l in range(3, k + 1):
            nxt = F[f"D{l - 1}{l}"]
            assert relation(acc, nxt) == TRANSVERSAL
            acc = intersect(acc, nxt)
            assert acc == F["D" + "".join(map(str, range(1, l + 1)))]


def test_json_round_trip() -> None:
    fam, F = _lines()
    for e in fam.elements:
        assert AffinePSub.from_json(fam.chart, e.to_json()) == e
    ch = OrthantChart(1, 1, ("eps",))
    s = sub_from_equations(ch, (0,), [[0, 1, Fraction(1, 2)]])
    assert s.to_json()["equations"]["rhs"] == ["1/2"]
    assert AffinePSub.from_json(ch, s.to_json()) == s


def test_not_clean_relation() -> None:
    # {y1 = y2 = 0} and {y1 = x1, y2 = 0}: dependent conormals, and a common frame would need dx1 interior
    ch = OrthantChart(1, 2)
    a = sub_from_equations(ch, (), [[0, 1, 0, 0], [0, 0, 1, 0]])
    b = sub_from_equations(ch, (), [[-1, 1, 0, 0], [0, 0, 1, 0]])
    assert relation(a, b) == NOT_CLEAN
    assert relation(b, a) == NOT_CLEAN
