from __future__ import annotations

import random
from itertools import product

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from corner_calculus.errors import DomainError, ModelError
from corner_calculus.liealg import (AlgebroidSection, LinearModel, PolyVectorField, anchor, bracket,
                                    fibre_product_linear, monomial_fields, restrict_to_diagonal,
                                    scl_rescaled_linear, simplicial_extend, translation_linear)
from corner_calculus.orthant import OrthantChart


def commutator_oracle(a: list, b: list, xs: tuple) -> list:
    """[sum a_j d_j, sum b_j d_j] computed straight from the definition."""
    return [sp.expand(sum(a[j] * sp.diff(b[i], x) - b[j] * sp.diff(a[i], x) for j, x in enumerate(xs)))
            for i in range(len(xs))]


def fibre_field(m: LinearModel, V: AlgebroidSection) -> list:
    """The fibre-product section as a field on M[1] = Y x Z: components only along z."""
    base = len(m.coords[0]) - len(m.null_basis)
    return [sp.Integer(0)] * base + list(V.components)


def scl_field(m: LinearModel, V: AlgebroidSection) -> list:
    """The scl section sum c_i (eps d/dz_i) on M[1] = [0, inf) x Y x Z."""
    eps = m.coords[0][0]
    base = len(m.coords[0]) - len(m.null_basis)
    return [sp.Integer(0)] * base + [eps * c for c in V.components]


def _section(m: LinearModel, *comps) -> AlgebroidSection:
    return AlgebroidSection(m, tuple(comps))


def test_worked_bracket_on_the_plane() -> None:
    m = fibre_product_linear(2)
    z1, z2 = m.coords[0]
    V1, V2 = _section(m, 0, z1), _section(m, z2, 0)
    assert bracket(V1, V2) == _section(m, z1, -z2)


def test_base_dependent_bracket() -> None:
    m = fibre_product_linear(2, base_dim=1)
    y, z1, z2 = m.coords[0]
    assert bracket(_section(m, 0, y * z1), _section(m, z2, 0)) == _section(m, y * z1, -y * z2)


def test_zero_section_extends_to_zero() -> None:
    for m in (fibre_product_linear(1, 1), translation_linear(2), scl_rescaled_linear(1)):
        assert simplicial_extend(_section(m, *[0] * len(m.null_basis))).is_zero()


def test_fibre_product_extension_is_fibre_constant() -> None:
    m = fibre_product_linear(1, base_dim=1)
    y, z = m.coords[0]
    V = _section(m, y * z ** 2 + 3)
    ext = simplicial_extend(V)
    # M[2] = (y, z', z''): the same formula in (y, z'), independent of z''
    y2, z_first, z_second = m.coords[1]
    assert ext.ordinary() == (0, sp.expand(y2 * z_first ** 2 + 3), 0)
    assert restrict_to_diagonal(ext, m) == V


def test_translation_extension_is_invariant_and_abelian() -> None:
    m = translation_linear(2)
    c1, c2 = _section(m, 1, 0), _section(m, 2, -5)
    assert simplicial_extend(c1).ordinary() == (1, 0)
    assert bracket(c1, c2).is_zero()
    # M[1] is a point, so the anchor vanishes
    assert anchor(c2).is_zero() and anchor(c2).coords == ()


@pytest.mark.parametrize("kappa,base_dim", [(1, 0), (2, 0), (1, 1), (2, 1)])
def test_exhaustive_brackets_match_commutator_oracle(kappa: int, base_dim: int) -> None:
    m = fibre_product_linear(kappa, base_dim)
    xs = m.coords[0]
    fields = monomial_fields(m, 2)
    for V1, V2 in product(fields, repeat=2):
        B = bracket(V1, V2)
        assert fibre_field(m, B) == commutator_oracle(fibre_field(m, V1), fibre_field(m, V2), xs)
        # anchor is the inclusion of fibre fields
        assert list(anchor(V1).ordinary()) == fibre_field(m, V1)


@pytest.mark.parametrize("kappa", [1, 2])
def test_scl_brackets_match_commutator_of_anchors(kappa: int) -> None:
    m = scl_rescaled_linear(kappa)
    xs = m.coords[0]
    fields = monomial_fields(m, 1)
    for V1, V2 in product(fields, repeat=2):
        B = bracket(V1, V2)
        assert scl_field(m, B) == commutator_oracle(scl_field(m, V1), scl_field(m, V2), xs)
        assert list(anchor(B).ordinary()) == commutator_oracle(list(anchor(V1).ordinary()),
                                                                list(anchor(V2).ordinary()), xs)


def test_scl_generator_anchor() -> None:
    m = scl_rescaled_linear(1, base_dim=1)
    eps, y, z = m.coords[0]
    assert anchor(_section(m, 1)).ordinary() == (0, 0, eps)


def _random_section(m: LinearModel, rnd: random.Random, degree: int) -> AlgebroidSection:
    fields = monomial_fields(m, degree)
    total = [sp.Integer(0)] * len(m.null_basis)
    for V in rnd.sample(fields, 3):
        c = sp.Rational(rnd.randint(-3, 3), rnd.randint(1, 2))
        total = [a + c * b for a, b in zip(total, V.components)]
    return AlgebroidSection(m, tuple(total))


MODELS = {"fp": fibre_product_linear(2, 1), "scl": scl_rescaled_linear(2)}


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(sorted(MODELS)), st.integers(0, 2**32))
def test_jacobi_and_anchor_homomorphism(name: str, seed: int) -> None:
    m = MODELS[name]
    rnd = random.Random(seed)
    A, B, C = (_random_section(m, rnd, 1) for _ in range(3))
    terms = [bracket(A, bracket(B, C)), bracket(B, bracket(C, A)), bracket(C, bracket(A, B))]
    assert all(sp.expand(sum(t.components[i] for t in terms)) == 0 for i in range(len(m.null_basis)))
    assert anchor(bracket(A, B)) == anchor(A).commutator(anchor(B))


def test_extension_restricts_to_the_section() -> None:
    for m in (fibre_product_linear(2, 1), scl_rescaled_linear(1, 1), translation_linear(1)):
        for V in monomial_fields(m, 2):
            assert restrict_to_diagonal(simplicial_extend(V), m) == V


def test_non_invertible_pushforward_is_a_model_error() -> None:
    # Pi_S forgets the middle point, so it cannot identify null(Pi_F) with the fibre of Pi_R
    z, (a, b), (p, q, r) = sp.Symbol("z"), sp.symbols("a b"), sp.symbols("p q r")
    charts = (OrthantChart(0, 1), OrthantChart(0, 2), OrthantChart(0, 3))
    maps = {"D": [z, z], "L": [a], "R": [b], "D12": [a, a, b],
            "S": [p, p], "C": [p, r], "F": [p, r]}
    with pytest.raises(ModelError):
        LinearModel("degenerate", charts, ((z,), (a, b), (p, q, r)), maps)


def test_vector_field_validation_and_b_normalization() -> None:
    ch = OrthantChart(1, 1)
    x, y = sp.symbols("x y")
    with pytest.raises(DomainError):
        PolyVectorField(ch, (x, y), (1, 0))  # not tangent to x = 0
    with pytest.raises(DomainError):
        PolyVectorField(ch, (x, y), (x, 1 / (1 + y)))
    with pytest.raises(DomainError):
        PolyVectorField(ch, (x, y), (0, y ** 3), cap=2)
    bx = PolyVectorField(ch, (x, y), (1, 0), b_flag=True)
    assert bx.ordinary() == (x, 0)
    assert PolyVectorField.from_ordinary(ch, (x, y), (x * y, 1), b_flag=True).coeffs == (y, 1)
    assert bx == PolyVectorField(ch, (x, y), (x, 0))
    # [x d_x, y d_y] = 0 and [x d_x, x d_y] = x d_y
    assert bx.commutator(PolyVectorField(ch, (x, y), (0, y))).is_zero()
    assert bx.commutator(PolyVectorField(ch, (x, y), (0, x))) == PolyVectorField(ch, (x, y), (0, x))
    assert bx.apply(x ** 2 * y) == 2 * x ** 2 * y


def test_json_monomial_lists() -> None:
    m = fibre_product_linear(2)
    z1, z2 = m.coords[0]
    V = _section(m, sp.Rational(1, 2) * z1 * z2, 0)
    assert V.to_json()["components"][0] == [{"exponents": [1, 1], "coeff": "1/2"}]
    data = anchor(V).to_json()
    assert data["components"][0]["terms"] == [{"exponents": [1, 1], "coeff": "1/2"}]
    assert data["components"][1]["terms"] == []
    with pytest.raises(DomainError):
        AlgebroidSection(m, (z1,))
