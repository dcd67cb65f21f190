"""The Lie algebroid of a generalized product, on polynomial linear models.

A section V of E = D^* null((Pi_R)_*) is extended to M[2] in two steps: on D_12
the unique W in null((Pi_F)_*) with (Pi_S)_* W = V o Pi_S, then V~ = (Pi_C)_* W
transported along the diffeomorphism Pi_C: D_12 -> M[2].  The bracket of two
sections is the commutator of their extensions restricted to D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy as sp

from .errors import DomainError, ModelError
from .linalg import fstr
from .orthant import OrthantChart

DEFAULT_DEGREE_CAP = 8


def _rational(c) -> Fraction:
    c = sp.Rational(c)
    return Fraction(int(c.p), int(c.q))


@dataclass(frozen=True)
class PolyVectorField:
    """sum_i coeffs[i] d/dx_i, or with b_flag sum_i coeffs[i] x_i d/dx_i for boundary coordinates."""

    chart: OrthantChart
    coords: tuple
    coeffs: tuple
    b_flag: bool = False
    cap: int = DEFAULT_DEGREE_CAP

    def __post_init__(self):
        if len(self.coords) != self.chart.n or len(self.coeffs) != self.chart.n:
            raise DomainError("one coefficient per chart coordinate")
        coeffs = tuple(sp.expand(sp.sympify(c)) for c in self.coeffs)
        for c in coeffs:
            if c != 0 and not c.is_polynomial(*self.coords):
                raise DomainError(f"coefficient {c} is not a polynomial in the chart coordinates")
            if c.free_symbols - set(self.coords):
                raise DomainError(f"coefficient {c} uses symbols outside the chart")
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "coeffs", coeffs)
        if self.degree() > self.cap:
            raise DomainError(f"degree {self.degree()} exceeds the cap {self.cap}")
        if not self.b_flag:
            # tangency to x_j = 0: the d/dx_j coefficient vanishes there
            for j in range(self.chart.b):
                if sp.expand(coeffs[j].subs(self.coords[j], 0)) != 0:
                    raise DomainError("field is not tangent to the boundary")

    def ordinary(self) -> tuple:
        """Coefficients in the frame d/dx_i."""
        if not self.b_flag:
            return self.coeffs
        return tuple(sp.expand(c * self.coords[i]) if i < self.chart.b else c for i, c in enumerate(self.coeffs))

    @classmethod
    def from_ordinary(cls, chart: OrthantChart, coords, coeffs, b_flag: bool = False, cap: int = DEFAULT_DEGREE_CAP):
        coeffs = [sp.expand(c) for c in coeffs]
        if b_flag:
            out = []
            for i, c in enumerate(coeffs):
                if i < chart.b:
                    q, r = sp.div(c, coords[i], *coords)
                    if r != 0:
                        raise DomainError("field is not tangent to the boundary")
                    c = q
                out.append(c)
            coeffs = out
        return cls(chart, tuple(coords), tuple(coeffs), b_flag, cap)

    def degree(self) -> int:
        return max((sp.Poly(c, *self.coords).total_degree() for c in self.coeffs if c != 0), default=0)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def apply(self, f) -> sp.Expr:
        return sp.expand(sum(c * sp.diff(f, x) for c, x in zip(self.ordinary(), self.coords)))

    def commutator(self, other: "PolyVectorField") -> "PolyVectorField":
        if self.coords != other.coords:
            raise DomainError("fields live on different charts")
        a, b = self.ordinary(), other.ordinary()
        out = []
        for i in range(len(self.coords)):
            out.append(sp.expand(sum(a[j] * sp.diff(b[i], x) - b[j] * sp.diff(a[i], x) for j, x in enumerate(self.coords))))
        cap = max(self.cap, other.cap)
        return PolyVectorField.from_ordinary(self.chart, self.coords, out, self.b_flag and other.b_flag, cap)

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        a, b = self.ordinary(), other.ordinary()
        return PolyVectorField.from_ordinary(self.chart, self.coords, [x + y for x, y in zip(a, b)], self.b_flag and other.b_flag, self.cap)

    def scale(self, c) -> "PolyVectorField":
        return PolyVectorField(self.chart, self.coords, tuple(c * x for x in self.coeffs), self.b_flag, self.cap)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self.coords == other.coords and all(sp.expand(a - b) == 0 for a, b in zip(self.ordinary(), other.ordinary()))

    def __hash__(self) -> int:
        return hash(self.coords)

    def to_json(self) -> dict:
        comps = []
        for x, c in zip(self.coords, self.coeffs):
            terms = []
            if c != 0:
                P = sp.Poly(c, *self.coords)
                for exps, coef in sorted(P.terms()):
                    terms.append({"exponents": list(exps), "coeff": fstr(_rational(coef))})
            comps.append({"direction": str(x), "terms": terms})
        return {"coords": [str(x) for x in self.coords], "b_flag": self.b_flag, "components": comps}

    def __str__(self) -> str:
        parts = []
        for x, c in zip(self.coords, self.ordinary()):
            if c != 0:
                parts.append(f"({c})*d/d{x}")
        return " + ".join(parts) if parts else "0"


@dataclass
class LinearModel:
    """Levels 1..3 of a generalized product on single polynomial charts.

    maps holds component lists: D (M[1] -> M[2]), D12 (M[2] -> M[3]), L and R
    (M[2] -> M[1]), S, C and F (M[3] -> M[2]).
    """

    name: str
    charts: tuple[OrthantChart, OrthantChart, OrthantChart]
    coords: tuple[tuple, tuple, tuple]
    maps: dict
    null_basis: list = field(default_factory=list)

    def __post_init__(self):
        self._check()
        self._prepare()

    def _map(self, name: str, src: int) -> list:
        return [sp.expand(sp.sympify(e)) for e in self.maps[name]]

    def _compose(self, outer: str, outer_src: int, inner_exprs: list) -> list:
        sub = dict(zip(self.coords[outer_src], inner_exprs))
        return [sp.expand(e.xreplace(sub)) for e in self._map(outer, outer_src)]

    def _check(self):
        x1, x2, x3 = self.coords
        need = {"D": (0, 1), "D12": (1, 2), "L": (1, 0), "R": (1, 0), "S": (2, 1), "C": (2, 1), "F": (2, 1)}
        for k, (a, b) in need.items():
            if k not in self.maps or len(self.maps[k]) != len(self.coords[b]):
                raise ModelError(f"map {k} missing or of the wrong size")
        ident1 = [sp.expand(v) for v in x1]
        for k in ("L", "R"):
            if self._compose(k, 1, self._map("D", 0)) != ident1:
                raise ModelError(f"Pi_{k} o D is not the identity")
        w = list(x3)
        if [sp.expand(a - b) for a, b in zip(self._compose("R", 1, self._compose("S", 2, w)), self._compose("L", 1, self._compose("F", 2, w)))] != [0] * len(x1):
            raise ModelError("Pi_R Pi_S != Pi_L Pi_F")
        if [sp.expand(a - b) for a, b in zip(self._compose("R", 1, self._compose("F", 2, w)), self._compose("R", 1, self._compose("C", 2, w)))] != [0] * len(x1):
            raise ModelError("Pi_R Pi_F != Pi_R Pi_C")

    def jacobian(self, name: str, src: int) -> sp.Matrix:
        exprs, xs = self._map(name, src), self.coords[src]
        if not exprs or not xs:
            return sp.zeros(len(exprs), len(xs))
        return sp.Matrix(exprs).jacobian(sp.Matrix(xs))

    def _prepare(self):
        x1, x2, x3 = self.coords
        JR = self.jacobian("R", 1)
        Dx = self._map("D", 0)
        JR_D = JR.xreplace(dict(zip(x2, Dx)))
        if not self.null_basis:
            self.null_basis = [list(v) for v in JR_D.nullspace()]
        for v in self.null_basis:
            if any(sp.simplify(e) != 0 for e in JR_D * sp.Matrix(v)):
                raise ModelError("null basis is not in the null space of (Pi_R)_* at D")
        # W in null((Pi_F)_*) along D_12 with (Pi_S)_* W = V: parametrize null((Pi_F)_*) at D_12(q)
        D12 = self._map("D12", 1)
        on_d12 = dict(zip(x3, D12))
        JF = self.jacobian("F", 2).xreplace(on_d12)
        JS = self.jacobian("S", 2).xreplace(on_d12)
        JC = self.jacobian("C", 2).xreplace(on_d12)
        NF = JF.nullspace(simplify=True)
        if len(NF) != len(self.null_basis):
            raise ModelError("null spaces of (Pi_F)_* and (Pi_R)_* have different ranks")
        NFm = sp.Matrix.hstack(*NF) if NF else sp.zeros(len(x3), 0)
        NRm = sp.Matrix.hstack(*[sp.Matrix(v) for v in self.null_basis]) if self.null_basis else sp.zeros(len(x2), 0)
        # (Pi_S)_* NF = NR(at Pi_S point) * A, A must be invertible with polynomial inverse
        on_s = dict(zip(x2, self._compose("S", 2, D12)))
        NR_s = NRm.xreplace(on_s)
        img = JS * NFm
        sol = (NR_s.T * NR_s).inv() * NR_s.T * img if NF else sp.zeros(0, 0)
        sol = sp.simplify(sol)
        if NF and sp.simplify(NR_s * sol - img) != sp.zeros(*img.shape):
            raise ModelError("(Pi_S)_* does not map null((Pi_F)_*) into null((Pi_R)_*)")
        det = sp.factor(sol.det()) if NF else sp.Integer(1)
        if NF and not (det.is_number and det != 0):
            raise ModelError(f"(Pi_S)_* restricted to null((Pi_F)_*) is not invertible everywhere (det {det})")
        self._W_of_coeffs = NFm * sol.inv() if NF else NFm
        self._JC_on_D12 = JC
        # Pi_C o D_12 is a diffeomorphism of M[2]; invert it
        y = sp.symbols(f"_v0:{len(x2)}")
        image = self._compose("C", 2, D12)
        sol_q = sp.solve([sp.Eq(a, b) for a, b in zip(image, y)], list(x2), dict=True)
        if len(sol_q) != 1:
            raise ModelError("Pi_C is not a diffeomorphism of D_12 onto M[2]")
        inv = [sp.expand(sol_q[0][v].xreplace(dict(zip(y, x2)))) for v in x2]
        if any(not e.is_polynomial(*x2) for e in inv):
            raise ModelError("inverse of Pi_C on D_12 is not polynomial")
        self._q_of_point = inv
        # the M[1] point over q in D_12: Pi_L(Pi_S(D_12 q))
        self._x_of_q = self._compose("L", 1, self._compose("S", 2, D12))

    @property
    def charts_json(self) -> list:
        return [c.to_json() for c in self.charts]


@dataclass(frozen=True)
class AlgebroidSection:
    """V = sum_i components[i] * null_basis[i], components polynomial on M[1]."""

    model: LinearModel
    components: tuple

    def __post_init__(self):
        comps = tuple(sp.expand(sp.sympify(c)) for c in self.components)
        if len(comps) != len(self.model.null_basis):
            raise DomainError("one component per null direction")
        x1 = self.model.coords[0]
        for c in comps:
            if c != 0 and (not c.is_polynomial(*x1) or c.free_symbols - set(x1)):
                raise DomainError(f"component {c} is not a polynomial on M[1]")
        object.__setattr__(self, "components", comps)

    def vector_at_diagonal(self) -> list:
        """The M[2]-vector V(x) at D(x), as polynomials on M[1]."""
        m = self.model
        D = m._map("D", 0)
        out = [sp.Integer(0)] * len(m.coords[1])
        for c, v in zip(self.components, m.null_basis):
            for i, e in enumerate(v):
                out[i] += c * sp.sympify(e).xreplace(dict(zip(m.coords[1], D)))
        return [sp.expand(e) for e in out]

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.components)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebroidSection):
            return NotImplemented
        return other.model is self.model and all(sp.expand(a - b) == 0 for a, b in zip(self.components, other.components))

    def __hash__(self) -> int:
        return hash(self.components)

    def to_json(self) -> dict:
        x1 = self.model.coords[0]
        comps = []
        for c in self.components:
            terms = []
            if c != 0:
                for exps, coef in sorted(sp.Poly(c, *x1).terms()):
                    terms.append({"exponents": list(exps), "coeff": fstr(_rational(coef))})
            comps.append(terms)
        return {"model": self.model.name, "coords": [str(x) for x in x1], "components": comps}


def simplicial_extend(V: AlgebroidSection, model: LinearModel | None = None) -> PolyVectorField:
    """V~ on M[2]: tangent to the fibres of Pi_R and equal to V on the diagonal."""
    m = model or V.model
    if V.model is not m:
        raise DomainError("section belongs to another model")
    x2 = m.coords[1]
    # components of V at Pi_S(p), p = D_12(q), as functions of q
    coeffs_q = [c.xreplace(dict(zip(m.coords[0], m._x_of_q))) for c in V.components]
    W = m._W_of_coeffs * sp.Matrix(coeffs_q) if coeffs_q else sp.zeros(len(m.coords[2]), 1)
    Vt = m._JC_on_D12 * W
    # transport from q to the point y = Pi_C(D_12(q)) of M[2]
    back = dict(zip(x2, m._q_of_point))
    coeffs = [sp.expand(sp.simplify(e.xreplace(back))) for e in Vt]
    for e in coeffs:
        if e != 0 and not e.is_polynomial(*x2):
            raise ModelError("extension is not polynomial")
    return PolyVectorField.from_ordinary(m.charts[1], x2, coeffs)


def restrict_to_diagonal(F: PolyVectorField, model: LinearModel) -> AlgebroidSection:
    """Components along the null basis of a field on M[2] that is tangent to the Pi_R fibres at D."""
    m = model
    D = m._map("D", 0)
    vec = sp.Matrix([sp.expand(c.xreplace(dict(zip(m.coords[1], D)))) for c in F.ordinary()])
    basis = sp.Matrix.hstack(*[sp.Matrix([sp.sympify(e).xreplace(dict(zip(m.coords[1], D))) for e in v]) for v in m.null_basis])
    sol = (basis.T * basis).inv() * basis.T * vec
    sol = sp.simplify(sol)
    if sp.simplify(basis * sol - vec) != sp.zeros(*vec.shape):
        raise ModelError("field is not in null((Pi_R)_*) along D")
    return AlgebroidSection(m, tuple(sp.expand(e) for e in sol))


def bracket(V1: AlgebroidSection, V2: AlgebroidSection, model: LinearModel | None = None) -> AlgebroidSection:
    m = model or V1.model
    if V1.model is not m or V2.model is not m:
        raise DomainError("sections belong to different models")
    return restrict_to_diagonal(simplicial_extend(V1, m).commutator(simplicial_extend(V2, m)), m)


def anchor(V: AlgebroidSection, model: LinearModel | None = None) -> PolyVectorField:
    """(Pi_L)_* V as a vector field on M[1]."""
    m = model or V.model
    JL = m.jacobian("L", 1).xreplace(dict(zip(m.coords[1], m._map("D", 0))))
    vec = JL * sp.Matrix(V.vector_at_diagonal()) if m.coords[1] else sp.zeros(len(m.coords[0]), 1)
    return PolyVectorField.from_ordinary(m.charts[0], m.coords[0], [sp.expand(e) for e in vec])


# --- models ------------------------------------------------------------------


def _symbols(prefix: str, n: int) -> tuple:
    return tuple(sp.symbols(f"{prefix}0:{n}")) if n else ()


def _poly_to_sympy(p, syms) -> sp.Expr:
    out = sp.Integer(0)
    for exps, c in p.terms.items():
        term = sp.Rational(c.numerator, c.denominator)
        for s, e in zip(syms, exps):
            term *= s ** e
        out += term
    return out


def from_product_model(model, name: str | None = None) -> LinearModel:
    """A linear model from the affine structure maps of a single-chart generalized product."""
    from .finsetcat import FinSetMap
    from .genprod import NAMED_MAPS

    charts = tuple(model.chart(k) for k in (1, 2, 3))
    coords = tuple(_symbols(f"x{k}_", charts[k - 1].n) for k in (1, 2, 3))
    maps = {}
    for key, I in (("D", FinSetMap((1, 1), 1)), ("D12", FinSetMap((1, 1, 2), 2))):
        src = I.codomain_size
        maps[key] = [_poly_to_sympy(p, coords[src - 1]) for p in model.structure_map(I)]
    for key in ("L", "R", "S", "C", "F"):
        I = model.overrides.get(key, NAMED_MAPS[key])
        src = I.codomain_size
        maps[key] = [_poly_to_sympy(p, coords[src - 1]) for p in model.structure_map(I)]
    return LinearModel(name or model.name, charts, coords, maps)


def fibre_product_linear(kappa: int, base_dim: int = 0) -> LinearModel:
    from .genprod import fibre_product_model

    return from_product_model(fibre_product_model(kappa, base_dim, 3))


def translation_linear(n: int) -> LinearModel:
    from .genprod import TRANSLATION, group_model

    return from_product_model(group_model(TRANSLATION, 3, n))


def scl_rescaled_linear(kappa: int, base_dim: int = 0) -> LinearModel:
    """The semiclassical front-face model: Z = (z' - z'')/eps on M[2], Z_i = (z_i - z_3)/eps on M[3].

    M[1] = [0, inf)_eps x Y x Z; the algebroid is spanned by eps d/dz.
    """
    if kappa < 1 or base_dim < 0:
        raise DomainError("kappa >= 1 and base_dim >= 0 required")
    b = base_dim
    c1 = OrthantChart(1, b + kappa, ("eps",))
    c2 = OrthantChart(1, b + 2 * kappa, ("eps",))
    c3 = OrthantChart(1, b + 3 * kappa, ("eps",))
    eps = sp.Symbol("eps")
    y = _symbols("y", b)
    z = _symbols("z", kappa)
    w, Z = _symbols("w", kappa), _symbols("Z", kappa)
    w3, Z1, Z2 = _symbols("v", kappa), _symbols("U", kappa), _symbols("V", kappa)
    x1 = (eps,) + y + z
    x2 = (eps,) + y + w + Z
    x3 = (eps,) + y + w3 + Z1 + Z2
    head = [eps, *y]
    maps = {
        "D": head + list(z) + [0] * kappa,
        "L": head + [w[i] + eps * Z[i] for i in range(kappa)],
        "R": head + list(w),
        "D12": head + list(w) + list(Z) + list(Z),
        "S": head + [w3[i] + eps * Z2[i] for i in range(kappa)] + [Z1[i] - Z2[i] for i in range(kappa)],
        "C": head + list(w3) + list(Z1),
        "F": head + list(w3) + list(Z2),
    }
    return LinearModel("scl-front-face", (c1, c2, c3), (x1, x2, x3), maps)


def monomial_fields(model: LinearModel, degree: int, variables: Sequence | None = None) -> list[AlgebroidSection]:
    """All sections m(x) e_i with m a monomial of degree <= degree in the given M[1] variables."""
    from itertools import combinations_with_replacement

    xs = list(variables) if variables is not None else list(model.coords[0])
    monos = [sp.Integer(1)]
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(xs, d):
            monos.append(sp.Mul(*combo))
    out = []
    r = len(model.null_basis)
    for i in range(r):
        for mono in monos:
            comps = [sp.Integer(0)] * r
            comps[i] = mono
            out.append(AlgebroidSection(model, tuple(comps)))
    return out
