"""Maps between the finite sets J(n) = {1..n} and partitions of J(k)."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .errors import DomainError


@dataclass(frozen=True)
class FinSetMap:
    values: tuple[int, ...]
    codomain_size: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if self.codomain_size < 1 and self.values:
            raise DomainError("empty codomain")
        for v in self.values:
            if not 1 <= v <= self.codomain_size:
                raise DomainError(f"value {v} outside J({self.codomain_size})")

    @property
    def domain_size(self) -> int:
        return len(self.values)

    def __call__(self, i: int) -> int:
        return self.values[i - 1]

    def is_injective(self) -> bool:
        return len(set(self.values)) == len(self.values)

    def is_surjective(self) -> bool:
        return set(self.values) == set(range(1, self.codomain_size + 1))

    def image(self) -> list[int]:
        return sorted(set(self.values))

    def to_json(self) -> list[int]:
        return list(self.values)


def identity(n: int) -> FinSetMap:
    return FinSetMap(tuple(range(1, n + 1)), n)


def compose(f: FinSetMap, g: FinSetMap) -> FinSetMap:
    """f o g."""
    if g.codomain_size != f.domain_size:
        raise DomainError(f"cannot compose J({g.domain_size})->J({g.codomain_size}) into map on J({f.domain_size})")
    return FinSetMap(tuple(f(v) for v in g.values), f.codomain_size)


def all_maps(n: int, m: int):
    for vals in product(range(1, m + 1), repeat=n):
        yield FinSetMap(vals, m)


def epi_mono_factorize(f: FinSetMap) -> tuple[FinSetMap, FinSetMap]:
    img = f.image()
    rank = {v: i + 1 for i, v in enumerate(img)}
    e = FinSetMap(tuple(rank[v] for v in f.values), len(img))
    m = FinSetMap(tuple(img), f.codomain_size)
    return e, m


# generators -----------------------------------------------------------------
# ("sigma", n, i): J(n)->J(n) swapping i, i+1
# ("iota", n):     J(n)->J(n+1), j -> j
# ("delta", n):    J(n)->J(n-1), 1,2 -> 1, j -> j-1


def generator_map(g: tuple) -> FinSetMap:
    kind, n = g[0], g[1]
    if kind == "sigma":
        i = g[2]
        vals = list(range(1, n + 1))
        vals[i - 1], vals[i] = vals[i], vals[i - 1]
        return FinSetMap(tuple(vals), n)
    if kind == "iota":
        return FinSetMap(tuple(range(1, n + 1)), n + 1)
    if kind == "delta":
        return FinSetMap((1,) + tuple(range(1, n)), n - 1)
    raise DomainError(f"unknown generator {g!r}")


def word_composite(word: list[tuple], n: int) -> FinSetMap:
    """Composite of a word applied left to right: word[0] acts first."""
    f = identity(n)
    for g in word:
        f = compose(generator_map(g), f)
    return f


def _permutation_to_word(p: FinSetMap) -> list[tuple]:
    """Adjacent transpositions whose composite (first applied first) is p."""
    n = p.domain_size
    vals = list(p.values)
    word = []
    # p o s_a1 o ... o s_ar = id  =>  p = s_ar o ... o s_a1
    for pos in range(n):
        j = vals.index(pos + 1)
        while j > pos:
            vals[j - 1], vals[j] = vals[j], vals[j - 1]
            word.append(("sigma", n, j))
            j -= 1
    return word


def _collapse_word(t: int, n: int) -> list[tuple]:
    """Word for the monotone surjection J(n)->J(n-1) identifying t and t+1."""
    pre = FinSetMap(tuple([*range(3, t + 2), 1, 2, *range(t + 2, n + 1)]), n)
    post = FinSetMap(tuple([t, *range(1, t), *range(t + 1, n)]), n - 1)
    return _permutation_to_word(pre) + [("delta", n)] + _permutation_to_word(post)


def generator_decompose(f: FinSetMap) -> list[tuple]:
    """A word in sigma/iota/delta whose composite equals f."""
    n, m = f.domain_size, f.codomain_size
    e, mono = epi_mono_factorize(f)
    k = e.codomain_size
    # e = s o pi with s monotone
    order = sorted(range(1, n + 1), key=lambda i: (e(i), i))
    pi = [0] * n
    for j, i in enumerate(order, start=1):
        pi[i - 1] = j
    word = _permutation_to_word(FinSetMap(tuple(pi), n))
    vals = [e(i) for i in order]
    cur = n
    while cur > k:
        t = next(i for i in range(1, cur) if vals[i - 1] == vals[i])
        word += _collapse_word(t, cur)
        del vals[t]
        cur -= 1
    word += [("iota", j) for j in range(k, m)]
    rest = [v for v in range(1, m + 1) if v not in mono.values]
    word += _permutation_to_word(FinSetMap(tuple(list(mono.values) + rest), m))
    if word_composite(word, n) != f:
        raise AssertionError(f"decomposition failed for {f.values}")
    return word


# --- partitions --------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    ground_size: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        seen = [x for b in blocks for x in b]
        if any(not b for b in blocks):
            raise DomainError("empty block")
        if sorted(seen) != list(range(1, self.ground_size + 1)):
            raise DomainError("blocks must partition J(k)")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def discrete(cls, k: int) -> "Partition":
        return cls(k, tuple((i,) for i in range(1, k + 1)))

    @classmethod
    def full(cls, k: int) -> "Partition":
        return cls(k, (tuple(range(1, k + 1)),))

    def block_of(self, i: int) -> tuple[int, ...]:
        for b in self.blocks:
            if i in b:
                return b
        raise DomainError(i)

    def is_discrete(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def singletons(self) -> list[int]:
        return [b[0] for b in self.blocks if len(b) == 1]

    def nontrivial_blocks(self) -> list[tuple[int, ...]]:
        return [b for b in self.blocks if len(b) > 1]

    def to_json(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]

    def __str__(self) -> str:
        return "|".join("".join(map(str, b)) if self.ground_size < 10 else ",".join(map(str, b)) for b in self.blocks)


def partition_from_string(s: str) -> Partition:
    blocks = [tuple(int(c) for c in part) for part in s.split("|")]
    return Partition(sum(len(b) for b in blocks), tuple(blocks))


def partition_join(p: Partition, q: Partition) -> Partition:
    if p.ground_size != q.ground_size:
        raise DomainError("ground sizes differ")
    k = p.ground_size
    parent = list(range(k + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for part in (p, q):
        for b in part.blocks:
            for x in b[1:]:
                ra, rb = find(b[0]), find(x)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for i in range(1, k + 1):
        groups.setdefault(find(i), []).append(i)
    return Partition(k, tuple(tuple(g) for g in groups.values()))


def partition_leq(q: Partition, p: Partition) -> bool:
    """Every block of q lies in a block of p (q refines p)."""
    if p.ground_size != q.ground_size:
        raise DomainError("ground sizes differ")
    return all(set(b) <= set(p.block_of(b[0])) for b in q.blocks)


def canonical_surjection(p: Partition) -> FinSetMap:
    """Block j (blocks ordered by minimum) goes to j."""
    vals = [0] * p.ground_size
    for j, b in enumerate(p.blocks, start=1):
        for x in b:
            vals[x - 1] = j
    return FinSetMap(tuple(vals), len(p.blocks))


def fibre_partition(f: FinSetMap) -> Partition:
    groups: dict[int, list[int]] = {}
    for i, v in enumerate(f.values, start=1):
        groups.setdefault(v, []).append(i)
    return Partition(f.domain_size, tuple(tuple(g) for g in groups.values()))


def enumerate_partitions(k: int) -> list[Partition]:
    """All partitions of J(k) via restricted-growth strings, in lexicographic order."""
    out = []

    def rec(prefix: list[int], mx: int):
        if len(prefix) == k:
            blocks: dict[int, list[int]] = {}
            for i, a in enumerate(prefix, start=1):
                blocks.setdefault(a, []).append(i)
            out.append(Partition(k, tuple(tuple(b) for b in blocks.values())))
            return
        for a in range(mx + 2):
            rec(prefix + [a], max(mx, a))

    if k == 0:
        return [Partition(0, ())]
    rec([0], 0)
    return out


def bell(k: int) -> int:
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]
