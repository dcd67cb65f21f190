"""Sparse multivariate (Laurent) polynomials with Fraction coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .linalg import frac, fstr


class Poly:
    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {}
        if terms:
            for e, c in terms.items():
                c = frac(c)
                if c != 0:
                    self.terms[tuple(e)] = c

    @classmethod
    def const(cls, n: int, c) -> "Poly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def var(cls, n: int, i: int, c=1) -> "Poly":
        e = [0] * n
        e[i] = 1
        return cls(n, {tuple(e): c})

    @classmethod
    def affine(cls, coeffs: Sequence, const=0) -> "Poly":
        n = len(coeffs)
        p = cls(n)
        for i, c in enumerate(coeffs):
            c = frac(c)
            if c:
                e = [0] * n
                e[i] = 1
                p.terms[tuple(e)] = c
        c = frac(const)
        if c:
            p.terms[(0,) * n] = c
        return p

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Poly":
        return cls(len(exps), {tuple(exps): c})

    def copy(self) -> "Poly":
        q = Poly(self.n)
        q.terms = dict(self.terms)
        return q

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.n == other.n and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __add__(self, other: "Poly") -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(self.n, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        q = Poly(self.n)
        q.terms = out
        return q

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        q = Poly(self.n)
        q.terms = {e: -c for e, c in self.terms.items()}
        return q

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(self.n, other)
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return Poly.const(self.n, other) - self

    def scale(self, c) -> "Poly":
        c = frac(c)
        q = Poly(self.n)
        if c:
            q.terms = {e: v * c for e, v in self.terms.items()}
        return q

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        q = Poly(self.n)
        q.terms = out
        return q

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        out = Poly.const(self.n, 1)
        for _ in range(k):
            out = out * self
        return out

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get((0,) * self.n, Fraction(0))

    def is_affine(self) -> bool:
        return all(sum(e) <= 1 and min(e, default=0) >= 0 for e in self.terms)

    def affine_parts(self) -> tuple[list[Fraction], Fraction]:
        coeffs = [Fraction(0)] * self.n
        const = Fraction(0)
        for e, c in self.terms.items():
            s = sum(e)
            if s == 0:
                const = c
            elif s == 1 and min(e) >= 0:
                coeffs[e.index(1)] = c
            else:
                raise ValueError("not affine")
        return coeffs, const

    def variables(self) -> set[int]:
        out = set()
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    out.add(i)
        return out

    def min_exponents(self) -> tuple[int, ...]:
        if not self.terms:
            return (0,) * self.n
        es = list(self.terms)
        return tuple(min(e[i] for e in es) for i in range(self.n))

    def shift(self, exps: Sequence[int]) -> "Poly":
        """Multiply by the monomial x^exps (negative entries divide)."""
        q = Poly(self.n)
        q.terms = {tuple(a + b for a, b in zip(e, exps)): c for e, c in self.terms.items()}
        return q

    def is_laurent(self) -> bool:
        return any(min(e, default=0) < 0 for e in self.terms)

    def evaluate(self, point: Sequence) -> Fraction:
        pt = [frac(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for v, k in zip(pt, e):
                if k:
                    t *= v ** k
            total += t
        return total

    def compose(self, subs: Sequence["Poly"]) -> "Poly":
        """Substitute subs[i] for variable i; result lives in subs' ring."""
        m = subs[0].n if subs else 0
        out = Poly(m)
        cache: dict = {}
        for e, c in self.terms.items():
            t = Poly.const(m, c)
            for i, k in enumerate(e):
                if k == 0:
                    continue
                if k < 0:
                    raise ValueError("cannot compose a Laurent term")
                key = (i, k)
                if key not in cache:
                    cache[key] = subs[i] ** k
                t = t * cache[key]
            out = out + t
        return out

    def substitute(self, i: int, value: "Poly") -> "Poly":
        subs = [Poly.var(self.n, j) for j in range(self.n)]
        subs[i] = value
        return self.compose(subs)

    def leading(self):
        e = max(self.terms)
        return e, self.terms[e]

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def monomial_inverse(self) -> "Poly":
        (e, c), = self.terms.items()
        return Poly.monomial([-k for k in e], 1 / c)

    def lcompose(self, subs: Sequence["Poly"]) -> "Poly":
        """Like compose, but a negative power of variable i is allowed when subs[i] is a monomial."""
        m = subs[0].n if subs else 0
        out = Poly(m)
        for e, c in self.terms.items():
            t = Poly.const(m, c)
            for i, k in enumerate(e):
                if k > 0:
                    t = t * subs[i] ** k
                elif k < 0:
                    if not subs[i].is_monomial():
                        raise ValueError("negative power of a non-monomial")
                    t = t * subs[i].monomial_inverse() ** (-k)
            out = out + t
        return out

    def split_content(self) -> tuple[tuple[int, ...], "Poly"]:
        """(e, q) with self = x^e * q and q not divisible by any variable."""
        e = self.min_exponents()
        return e, self.shift([-k for k in e])

    def exact_div(self, other: "Poly") -> "Poly | None":
        """Quotient if other divides self exactly, else None."""
        if self.is_laurent() or other.is_laurent():
            e1, a = self.split_content()
            e2, b = other.split_content()
            q = a.exact_div(b)
            return None if q is None else q.shift([x - y for x, y in zip(e1, e2)])
        if other.is_zero():
            return None
        if self.is_zero():
            return Poly(self.n)
        if len(other.terms) == 1:
            (e, c), = other.terms.items()
            q = self.shift([-k for k in e]).scale(1 / c)
            if any(min(x) < 0 for x in q.terms) and not self.is_laurent():
                return None
            return q
        rem = self.copy()
        q = Poly(self.n)
        le, lc = other.leading()
        steps = 0
        while not rem.is_zero():
            e, c = rem.leading()
            d = tuple(a - b for a, b in zip(e, le))
            if min(d) < 0:
                return None
            t = Poly.monomial(d, c / lc)
            q = q + t
            rem = rem - t * other
            steps += 1
            if steps > 10000:
                return None
        return q

    def diff(self, i: int) -> "Poly":
        q = Poly(self.n)
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = list(e)
                e2[i] -= 1
                q.terms[tuple(e2)] = c * k
        return q

    def to_json(self) -> list:
        return [[list(e), fstr(c)] for e, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, n: int, data) -> "Poly":
        return cls(n, {tuple(e): Fraction(c) for e, c in data})

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(("v%d" % i) + (("^%d" % k) if k != 1 else "") for i, k in enumerate(e) if k)
            parts.append(fstr(c) + ("*" + mono if mono else ""))
        return " + ".join(parts)


class RatFunc:
    """num / prod(den) with num a Laurent polynomial and den a list of non-monomial factors."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Sequence[Poly] = ()):
        self.num = num
        self.den = []
        for f in den:
            self._absorb(f)
        self._cancel()

    def _absorb(self, f: Poly):
        if f.is_zero():
            raise ZeroDivisionError("zero denominator")
        e, q = f.split_content()
        self.num = self.num.shift([-k for k in e])
        lead = q.leading()[1]
        if lead != 1:
            q = q.scale(1 / lead)
            self.num = self.num.scale(1 / lead)
        if q.is_constant():
            return
        self.den.append(q)

    def _cancel(self):
        keep = []
        for f in self.den:
            q = self.num.exact_div(f)
            if q is not None:
                self.num = q
            else:
                keep.append(f)
        self.den = keep

    @classmethod
    def of(cls, p: Poly) -> "RatFunc":
        return cls(p)

    @property
    def n(self) -> int:
        return self.num.n

    def is_poly(self) -> bool:
        return not self.den

    def _common(self, other: "RatFunc"):
        rest = list(other.den)
        mine_only = []
        for f in self.den:
            if f in rest:
                rest.remove(f)
            else:
                mine_only.append(f)
        return mine_only, rest

    def __add__(self, other) -> "RatFunc":
        if not isinstance(other, RatFunc):
            other = RatFunc(other if isinstance(other, Poly) else Poly.const(self.n, other))
        mine_only, theirs_only = self._common(other)
        a = self.num
        for f in theirs_only:
            a = a * f
        b = other.num
        for f in mine_only:
            b = b * f
        out = RatFunc.__new__(RatFunc)
        out.num = a + b
        out.den = list(self.den) + theirs_only
        out._cancel()
        return out

    def __neg__(self) -> "RatFunc":
        out = RatFunc.__new__(RatFunc)
        out.num = -self.num
        out.den = list(self.den)
        return out

    def __sub__(self, other) -> "RatFunc":
        if not isinstance(other, RatFunc):
            other = RatFunc(other if isinstance(other, Poly) else Poly.const(self.n, other))
        return self + (-other)

    def __mul__(self, other) -> "RatFunc":
        if not isinstance(other, RatFunc):
            if isinstance(other, Poly):
                other = RatFunc(other)
            else:
                out = RatFunc.__new__(RatFunc)
                out.num = self.num.scale(other)
                out.den = list(self.den)
                return out
        out = RatFunc.__new__(RatFunc)
        out.num = self.num * other.num
        out.den = list(self.den) + list(other.den)
        out._cancel()
        return out

    def __truediv__(self, other) -> "RatFunc":
        if not isinstance(other, RatFunc):
            other = RatFunc(other if isinstance(other, Poly) else Poly.const(self.n, other))
        out = RatFunc.__new__(RatFunc)
        out.num = self.num
        out.den = list(self.den)
        for f in other.den:
            out.num = out.num * f
        out._absorb(other.num)
        out._cancel()
        return out

    def evaluate(self, point: Sequence) -> Fraction | None:
        """Value at point, or None where a denominator or a negative power vanishes."""
        pt = [frac(v) for v in point]
        for f in self.den:
            if f.evaluate(pt) == 0:
                return None
        e, q = self.num.split_content()
        val = q.evaluate(pt)
        for v, k in zip(pt, e):
            if k < 0 and v == 0:
                return None
            if k:
                val *= v ** k
        for f in self.den:
            val /= f.evaluate(pt)
        return val

    def regular_at(self, point: Sequence) -> bool:
        return self.evaluate(point) is not None

    def diff(self, i: int) -> "RatFunc":
        out = RatFunc(self.num.diff(i), self.den)
        for f in self.den:
            out = out - RatFunc(self.num * f.diff(i), list(self.den) + [f])
        return out

    def __repr__(self) -> str:
        if not self.den:
            return repr(self.num)
        return "(%r)/(%s)" % (self.num, ")*(".join(map(repr, self.den)))
