"""Exact rational linear algebra and Fourier-Motzkin feasibility."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple
Row = list


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def fstr(x) -> str:
    x = frac(x)
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def rref(rows: Iterable[Sequence], ncols: int | None = None):
    """Reduced row echelon form. Returns (rows, pivot_columns); zero rows dropped."""
    A = [[frac(v) for v in r] for r in rows]
    if not A:
        return [], []
    n = len(A[0]) if ncols is None else ncols
    pivots = []
    r = 0
    for c in range(n):
        p = None
        for i in range(r, len(A)):
            if A[i][c] != 0:
                p = i
                break
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        pv = A[r][c]
        if pv != 1:
            A[r] = [v / pv for v in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[:r], pivots


def rank(rows: Iterable[Sequence]) -> int:
    return len(rref(rows)[0])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {v : A v = 0}."""
    R, piv = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -R[i][f]
        basis.append(v)
    return basis


def in_span(v: Sequence, rows: Sequence[Sequence]) -> bool:
    if not rows:
        return all(frac(x) == 0 for x in v)
    return rank(list(rows) + [list(v)]) == rank(rows)


def span_equal(a: Sequence[Sequence], b: Sequence[Sequence]) -> bool:
    ra = rank(a) if a else 0
    rb = rank(b) if b else 0
    if ra != rb:
        return False
    if ra == 0:
        return True
    return rank(list(a) + list(b)) == ra


def intersect_spans(a: Sequence[Sequence], b: Sequence[Sequence], n: int) -> list[list[Fraction]]:
    """Basis of span(a) & span(b) inside Q^n."""
    if not a or not b:
        return []
    # solve sum(s_i a_i) = sum(t_j b_j)
    cols = [list(r) for r in a] + [[-frac(x) for x in r] for r in b]
    M = [[frac(cols[j][i]) for j in range(len(cols))] for i in range(n)]
    ns = nullspace(M, len(cols))
    out = []
    for v in ns:
        w = [Fraction(0)] * n
        for j, r in enumerate(a):
            if v[j] != 0:
                for i in range(n):
                    w[i] += v[j] * frac(r[i])
        out.append(w)
    R, _ = rref(out, n) if out else ([], [])
    return R


def solve(A: Sequence[Sequence], b: Sequence) -> tuple[list[Fraction], list[list[Fraction]]] | None:
    """Affine solution set of A x = b as (particular, kernel basis), or None."""
    n = len(A[0]) if A else 0
    aug = [[frac(v) for v in r] + [frac(c)] for r, c in zip(A, b)]
    R, piv = rref(aug, n + 1) if aug else ([], [])
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for i, p in enumerate(piv):
        x[p] = R[i][n]
    return x, nullspace([r[:n] for r in R], n) if R else [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(A, B):
    return [[sum((frac(a) * frac(b) for a, b in zip(r, c)), Fraction(0)) for c in zip(*B)] for r in A]


def inverse(A):
    n = len(A)
    aug = [[frac(v) for v in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(A)]
    R, piv = rref(aug, 2 * n)
    if piv[:n] != list(range(n)) or len(R) < n:
        raise ZeroDivisionError("singular matrix")
    return [r[n:] for r in R]


# --- Fourier-Motzkin -------------------------------------------------------
# A constraint is (coeffs, const, kind): coeffs . z + const  (kind) 0,
# kind in {"=", ">=", ">"}.


def _normalize(c, k, kind):
    nz = [abs(v) for v in c if v != 0]
    if not nz:
        return tuple(c), k, kind
    s = max(nz)
    return tuple(v / s for v in c), k / s, kind


def feasible(n: int, constraints: Sequence[tuple]) -> bool:
    """Exact feasibility of a mixed system of equalities and (strict) inequalities."""
    eqs = [(list(map(frac, c)), frac(k)) for c, k, kind in constraints if kind == "="]
    ineqs = [(list(map(frac, c)), frac(k), kind) for c, k, kind in constraints if kind != "="]
    if eqs:
        sol = solve([c for c, _ in eqs], [-k for _, k in eqs])
        if sol is None:
            return False
        x0, K = sol
        # z = x0 + K^T t
        m = len(K)
        new = []
        for c, k, kind in ineqs:
            cc = [sum((c[i] * K[j][i] for i in range(n)), Fraction(0)) for j in range(m)]
            kk = k + sum((c[i] * x0[i] for i in range(n)), Fraction(0))
            new.append((cc, kk, kind))
        return _fm(m, new)
    return _fm(n, ineqs)


def _fm(n: int, ineqs: list) -> bool:
    cur = set()
    for c, k, kind in ineqs:
        cur.add(_normalize(tuple(c), k, kind))
    for v in range(n):
        pos, neg, rest = [], [], []
        for c, k, kind in cur:
            if c[v] > 0:
                pos.append((c, k, kind))
            elif c[v] < 0:
                neg.append((c, k, kind))
            else:
                rest.append((c, k, kind))
        nxt = set(rest)
        for cp, kp, sp in pos:
            for cn, kn, sn in neg:
                a, b = -cn[v], cp[v]
                c = tuple(a * x + b * y for x, y in zip(cp, cn))
                k = a * kp + b * kn
                kind = ">" if (sp == ">" or sn == ">") else ">="
                nxt.add(_normalize(c, k, kind))
        cur = _prune(nxt)
    for c, k, kind in cur:
        if kind == ">" and not k > 0:
            return False
        if kind == ">=" and not k >= 0:
            return False
    return True


def _prune(cons: set) -> set:
    # keep the tightest constant per direction
    best: dict = {}
    for c, k, kind in cons:
        key = c
        if key not in best:
            best[key] = (k, kind)
        else:
            k0, s0 = best[key]
            if k < k0 or (k == k0 and kind == ">"):
                best[key] = (k, kind)
    return {(c, k, kind) for c, (k, kind) in best.items()}
