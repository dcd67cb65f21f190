from __future__ import annotations

import json
from fractions import Fraction

import pytest

from corner_calculus.arrangement import (EMPTY, PCleanFamily, diagonal_family, intersect, is_p_positioned,
                                         size_order, split_order, sub_from_equations, three_coplanar_lines)
from corner_calculus.atlas import FRONT_FACE, Atlas, all_cocycles_hold, cube_atlas, radial_atlas
from corner_calculus.blowup import (FALSE, TRUE, Poset, blow_up, check_equivalence, face_lattice, lift_map,
                                    register, resolve)
from corner_calculus.errors import NotPPositioned, PreconditionError, StepError
from corner_calculus.orthant import SIMPLE_B_FIBRATION, OrthantChart
from corner_calculus.poly import Poly


def _origin(n: int) -> tuple[OrthantChart, object]:
    ch = OrthantChart(0, n)
    rows = [[int(i == j) for j in range(n)] + [0] for i in range(n)]
    return ch, sub_from_equations(ch, (), rows)


def test_blow_up_of_a_point_in_the_plane() -> None:
    ch, O = _origin(2)
    sp = blow_up(Atlas.from_chart(ch), O, "O")
    assert sp.front_faces() == ["ff[O]"]
    assert sp.hypersurface_registry["ff[O]"][0] == FRONT_FACE
    # one projective chart per sign of each dominant coordinate
    assert len(sp.charts) == 4
    assert all(r.chart.labels == ("ff[O]",) for r in sp.charts)
    assert all_cocycles_hold(sp)


def test_corner_blow_up_face_lattice() -> None:
    ch = OrthantChart(2, 0)
    sp = blow_up(Atlas.from_chart(ch), sub_from_equations(ch, (0, 1)), "c")
    P = face_lattice(sp)
    assert len(P.by_codim(1)) == 3 and len(P.by_codim(2)) == 2
    # each corner lies in the front face and in one original side
    assert len(P.covers) == 4
    for v in P.by_codim(2):
        assert "ff[c]" in v["labels"]
    assert P.to_dot() == face_lattice(sp).to_dot()


def test_face_lattice_of_interior_chart_is_empty() -> None:
    P = face_lattice(Atlas.from_chart(OrthantChart(0, 3)))
    assert P.nodes == [] and P.covers == []
    assert P.to_dot() == "digraph faces {\n}\n"


def test_cube_face_lattice_counts() -> None:
    P = face_lattice(cube_atlas(2))
    assert [len(P.by_codim(c)) for c in (1, 2)] == [4, 4]


def test_coplanar_lines_clean_flags_and_equivalence() -> None:
    fam = three_coplanar_lines()
    a = resolve(fam.chart, fam, ("F1", "F2", "F3", "F4"))
    assert [s["p_clean"] for s in a.step_results[:2]] == [False, True]
    b = resolve(fam.chart, fam, ("F2", "F1", "F3", "F4"))
    assert all(s["p_clean"] for s in b.step_results)
    assert check_equivalence(a.result, b.result).status == TRUE


def test_equivalence_detects_different_registries() -> None:
    fam = three_coplanar_lines()
    a = resolve(fam.chart, fam, ("F2", "F1", "F3", "F4")).result
    sub = fam.subfamily([1, 0, 2])
    c = resolve(fam.chart, sub, ("F2", "F1", "F3")).result
    assert check_equivalence(a, c).status == FALSE
    other = resolve(OrthantChart(0, 2), PCleanFamily((_origin(2)[1],)), None).result
    with pytest.raises(PreconditionError):
        check_equivalence(a, other)


def test_split_order_resolutions_match_size_order() -> None:
    for fam, first in ((diagonal_family(3, 1), ["D12"]), (three_coplanar_lines(), ["F1"])):
        split = resolve(fam.chart, fam, split_order(fam, first)).result
        size = resolve(fam.chart, fam, size_order(fam)).result
        assert check_equivalence(split, size).status == TRUE


def test_impermissible_order_raises_step_error() -> None:
    # three lines through 0 in R^2, the origin left out: cutting along A and B leaves C through a corner
    ch = OrthantChart(0, 2)
    A = sub_from_equations(ch, (), [[0, 1, 0]])
    B = sub_from_equations(ch, (), [[1, 2, 0]])
    C = sub_from_equations(ch, (), [[1, 0, 0]])
    fam = PCleanFamily((A, B, C), ("A", "B", "C"))
    with pytest.raises(StepError) as info:
        resolve(ch, fam, ("A", "B", "C"))
    assert info.value.index == 2
    assert info.value.not_p_positioned
    assert isinstance(info.value.cause, NotPPositioned)
    # hand computation: on the side y2 >= 0 put x = y2 and u = y1 + 2 y2, both >= 0 after cutting;
    # C = {y1 = 0} becomes {u = 2x} through the corner, which admits no adapted coordinates
    corner = OrthantChart(2, 0)
    assert not is_p_positioned(sub_from_equations(corner, (), [[-2, 1, 0]]))
    # blowing up the origin first makes every order permissible
    O = intersect(A, C)
    full = PCleanFamily((O, A, B, C), ("O", "A", "B", "C"))
    resolve(ch, full, ("O", "A", "B", "C"))


def test_disjoint_lifts_need_a_joint_product_decomposition() -> None:
    # F1 & F3 = {0} lies in F4 and neither line lies in F4, yet both project onto the same
    # normal line of F4 at 0, so their lifts meet on the front face
    fam = three_coplanar_lines()
    F = dict(zip(fam.names, fam.elements))
    sp = Atlas.from_chart(fam.chart)
    for name in ("F1", "F3", "F4"):
        sp = register(sp, name, F[name])
    sp = blow_up(sp, "F4")
    meets = []
    for a, rec in enumerate(sp.charts):
        P, Q = sp.lifted_subs["F1"][a], sp.lifted_subs["F3"][a]
        if P is not None and Q is not None:
            z = intersect(P, Q, rec.affine_validity())
            if z is not EMPTY:
                meets.append((rec.chart.labels, z.zero_hypersurfaces))
    assert meets and all(labels == ("ff[F4]",) and S == (0,) for labels, S in meets)


def test_lift_of_projection_through_a_blown_up_point() -> None:
    M = OrthantChart(1, 1, ("eps",))
    A = blow_up(Atlas.from_chart(M), sub_from_equations(M, (0,), [[0, 1, 0]]), "O")
    N = Atlas.from_chart(OrthantChart(1, 0, ("eps",)))
    L = lift_map([Poly.var(2, 0)], A, N)
    assert SIMPLE_B_FIBRATION in L.classification.flags
    assert L.hypersurface_map == {"ff[O]": ("eps",), "eps": ("eps",)}
    assert L.pullback_exponents("eps") == {"ff[O]": 1, "eps": 1}


def test_lift_of_identity_is_identity_on_faces() -> None:
    M = OrthantChart(1, 1, ("eps",))
    A = blow_up(Atlas.from_chart(M), sub_from_equations(M, (0,), [[0, 1, 0]]), "O")
    L = lift_map([Poly.var(2, 0), Poly.var(2, 1)], A, A)
    assert L.hypersurface_map == {"ff[O]": ("ff[O]",), "eps": ("eps",)}


def test_cocycles_on_resolutions() -> None:
    fam = three_coplanar_lines()
    assert all_cocycles_hold(resolve(fam.chart, fam, size_order(fam)).result)
    assert all_cocycles_hold(radial_atlas(2))
    assert all_cocycles_hold(cube_atlas(2))


def test_atlas_json_is_deterministic() -> None:
    fam = diagonal_family(3, 1, scl=True)
    one = json.dumps(resolve(fam.chart, fam, size_order(fam)).result.to_json(), sort_keys=True)
    two = json.dumps(resolve(fam.chart, fam, size_order(fam)).result.to_json(), sort_keys=True)
    assert one == two


def test_poset_order_relation() -> None:
    P = Poset([{"id": 0, "codim": 1, "labels": ("a",)}, {"id": 1, "codim": 2, "labels": ("a", "b")}], [(1, 0)])
    assert P.leq(1, 0) and not P.leq(0, 1) and P.leq(0, 0)
    assert P.to_json()["covers"] == [[1, 0]]


def test_witness_points_lie_in_validity_regions() -> None:
    ch, O = _origin(2)
    sp = blow_up(Atlas.from_chart(ch), O, "O")
    for a, rec in enumerate(sp.charts):
        for p in sp.witnesses(a, count=4, seed=5):
            assert all(v >= 0 for v in p[: rec.chart.b])
            assert all(isinstance(v, Fraction) for v in p)
