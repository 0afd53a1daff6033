"""Finitely presented group utilities: Tietze elimination and coset enumeration.

Words are tuples of nonzero signed generator ids.  Generator ids are kept
from the original presentation so substitutions stay readable.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

Word = tuple[int, ...]


class GroupBudgetError(RuntimeError):
    """A group computation ran past its size budget."""


def reduce_word(word) -> Word:
    out: list[int] = []
    for g in word:
        if out and out[-1] == -g:
            out.pop()
        elif g:
            out.append(g)
    return tuple(out)


def multiply_reduced(a: Word, b: Word) -> Word:
    """Product of two reduced words; cancellation only happens at the join."""
    i, n = 0, min(len(a), len(b))
    while i < n and a[-1 - i] == -b[i]:
        i += 1
    return a[:len(a) - i] + b[i:]


def cyclic_reduce(word) -> Word:
    w = list(reduce_word(word))
    a, b = 0, len(w) - 1
    while a < b and w[a] == -w[b]:
        a += 1
        b -= 1
    return tuple(w[a:b + 1])


def inverse(word: Sequence[int]) -> Word:
    return tuple(-g for g in reversed(word))


@dataclass
class TietzeResult:
    """Simplified presentation plus images of every original generator."""

    ngens: int
    kept: tuple[int, ...]
    relators: list[Word]
    images: dict[int, Word]

    def image(self, word: Sequence[int], max_len: int | None = None) -> Word:
        out: list[int] = []
        for g in word:
            w = self.images[abs(g)]
            for x in (w if g > 0 else inverse(w)):
                if out and out[-1] == -x:
                    out.pop()
                else:
                    out.append(x)
            if max_len is not None and len(out) > max_len:
                raise GroupBudgetError("image word too long")
        return tuple(out)

    @property
    def is_trivial(self) -> bool:
        return not self.kept

    @property
    def is_free(self) -> bool:
        return not self.relators


def tietze(ngens: int, relators: Sequence[Word], max_relator: int = 24,
           max_total: int = 2_000_000, max_image: int = 4096) -> TietzeResult:
    """Eliminate generators occurring exactly once in some relator.

    Shortest relators are used first.  A relator longer than ``max_relator``
    is never used for elimination; substitutions stop when the total
    relator length would pass ``max_total``.
    """
    rels: dict[int, Word] = {}
    occ: dict[int, set[int]] = {g: set() for g in range(1, ngens + 1)}
    heap: list[tuple[int, int]] = []
    seen: set[Word] = set()
    total = 0
    nid = 0

    def add(w: Word):
        nonlocal nid, total
        w = cyclic_reduce(w)
        if not w:
            return
        key = _canonical(w)
        if key in seen:
            return
        seen.add(key)
        rels[nid] = w
        total += len(w)
        for g in w:
            occ[abs(g)].add(nid)
        heapq.heappush(heap, (len(w), nid))
        nid += 1

    def drop(rid: int):
        nonlocal total
        w = rels.pop(rid)
        seen.discard(_canonical(w))
        total -= len(w)
        for g in w:
            occ[abs(g)].discard(rid)

    for r in relators:
        add(tuple(r))
    subst: dict[int, Word] = {}
    while heap:
        ln, rid = heap[0]
        if rid not in rels or len(rels[rid]) != ln:
            heapq.heappop(heap)
            continue
        if ln > max_relator:
            break
        w = rels[rid]
        counts: dict[int, int] = {}
        for g in w:
            counts[abs(g)] = counts.get(abs(g), 0) + 1
        cands = [g for g, c in counts.items() if c == 1]
        if not cands:
            heapq.heappop(heap)
            continue
        # generator touching the fewest other relators keeps growth low
        g = min(cands, key=lambda x: (len(occ[x]), x))
        i = next(t for t, x in enumerate(w) if abs(x) == g)
        u, v = w[:i], w[i + 1:]
        s = reduce_word(inverse(u) + inverse(v)) if w[i] > 0 else reduce_word(v + u)
        growth = sum(len(rels[r]) * len(s) for r in occ[g] if r != rid)
        if total + growth > max_total:
            break
        heapq.heappop(heap)
        drop(rid)
        subst[g] = s
        for r in sorted(occ[g]):
            old = rels[r]
            drop(r)
            new: list[int] = []
            for x in old:
                if abs(x) == g:
                    new.extend(s if x > 0 else inverse(s))
                else:
                    new.append(x)
            add(tuple(new))
        del occ[g]
    kept = tuple(sorted(g for g in range(1, ngens + 1) if g not in subst))
    images: dict[int, Word] = {g: (g,) for g in kept}

    def expand(g: int) -> Word:
        stack = [g]
        while stack:
            x = stack[-1]
            if x in images:
                stack.pop()
                continue
            missing = [abs(y) for y in subst[x] if abs(y) not in images]
            if missing:
                stack.extend(missing)
                continue
            out: list[int] = []
            for y in subst[x]:
                out.extend(images[y] if y > 0 else inverse(images[-y]))
            img = reduce_word(out)
            if len(img) > max_image:
                raise GroupBudgetError("generator image too long")
            images[x] = img
            stack.pop()
        return images[g]

    for g in sorted(subst):
        expand(g)
    return TietzeResult(ngens, kept, [rels[r] for r in sorted(rels)], images)


def _canonical(w: Word) -> Word:
    """Least rotation of ``w`` or its inverse, so conjugate duplicates collapse."""
    best = None
    for cand in (w, inverse(w)):
        for i in range(len(cand)):
            r = cand[i:] + cand[:i]
            if best is None or r < best:
                best = r
    return best


@dataclass
class CosetTable:
    """Complete coset table of the trivial subgroup (the regular action)."""

    gens: tuple[int, ...]
    rows: list[list[int]]
    col: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.col:
            for t, g in enumerate(self.gens):
                self.col[g] = 2 * t
                self.col[-g] = 2 * t + 1

    @property
    def order(self) -> int:
        return len(self.rows)

    def trace(self, start: int, word: Sequence[int]) -> int:
        c = start
        for g in word:
            c = self.rows[c][self.col[g]]
        return c

    def permutation(self, g: int) -> list[int]:
        k = self.col[g]
        return [row[k] for row in self.rows]

    def rep_words(self) -> list[Word]:
        """A word reaching each coset from coset 0 (BFS, so shortest)."""
        words: list[Word | None] = [None] * len(self.rows)
        words[0] = ()
        queue = [0]
        for c in queue:
            for g in self.gens:
                for x in (g, -g):
                    d = self.rows[c][self.col[x]]
                    if words[d] is None:
                        words[d] = words[c] + (x,)
                        queue.append(d)
        return words  # type: ignore[return-value]


def enumerate_cosets(gens: Sequence[int], relators: Sequence[Word], max_rows: int = 20000) -> CosetTable | None:
    """HLT enumeration of the cosets of the trivial subgroup.

    Returns ``None`` when more than ``max_rows`` cosets get defined.
    """
    gens = tuple(gens)
    col = {}
    for t, g in enumerate(gens):
        col[g] = 2 * t
        col[-g] = 2 * t + 1
    width = 2 * len(gens)
    inv = [c ^ 1 for c in range(width)]
    rels = [[col[x] for x in r] for r in relators if r]
    T: list[list[int]] = [[-1] * width]
    p = [0]

    def rep(k):
        r = k
        while p[r] != r:
            r = p[r]
        while p[k] != r:
            p[k], k = r, p[k]
        return r

    def merge(k, l, q):
        a, b = rep(k), rep(l)
        if a != b:
            lo, hi = min(a, b), max(a, b)
            p[hi] = lo
            q.append(hi)

    def coincidence(a, b):
        q: list[int] = []
        merge(a, b, q)
        i = 0
        while i < len(q):
            g = q[i]
            i += 1
            for x in range(width):
                d = T[g][x]
                if d >= 0:
                    T[d][inv[x]] = -1
                    mu, nu = rep(g), rep(d)
                    if T[mu][x] >= 0:
                        merge(nu, T[mu][x], q)
                    elif T[nu][inv[x]] >= 0:
                        merge(mu, T[nu][inv[x]], q)
                    else:
                        T[mu][x] = nu
                        T[nu][inv[x]] = mu

    def define(a, x):
        if len(T) >= max_rows:
            raise GroupBudgetError("coset table row budget exhausted")
        b = len(T)
        T.append([-1] * width)
        p.append(b)
        T[a][x] = b
        T[b][inv[x]] = a

    def scan_and_fill(a, w):
        f, i, b, j = a, 0, a, len(w) - 1
        while True:
            while i <= j and T[f][w[i]] >= 0:
                f = T[f][w[i]]
                i += 1
            if i > j:
                if f != a:
                    coincidence(f, a)
                return
            while j >= i and T[b][inv[w[j]]] >= 0:
                b = T[b][inv[w[j]]]
                j -= 1
            if j < i:
                coincidence(f, b)
                return
            if i == j:
                T[f][w[i]] = b
                T[b][inv[w[i]]] = f
                return
            define(f, w[i])

    try:
        a = 0
        while a < len(T):
            for w in rels:
                if p[a] != a:
                    break
                scan_and_fill(a, w)
            if p[a] == a:
                for x in range(width):
                    if T[a][x] < 0:
                        define(a, x)
            a += 1
    except GroupBudgetError:
        return None
    live = [c for c in range(len(T)) if p[c] == c]
    index = {c: t for t, c in enumerate(live)}
    rows = [[index[rep(T[c][x])] for x in range(width)] for c in live]
    table = CosetTable(gens, rows, dict(col))
    for r in relators:
        for c in range(table.order):
            if table.trace(c, r) != c:
                raise AssertionError("coset enumeration produced an inconsistent table")
    return table


def separating_permutations(word: Word) -> dict[int, list[int]]:
    """Permutations of len(word)+1 points under which a reduced word is not the identity.

    Letter t moves point t to t+1; partial maps are injective because the
    word is reduced, then completed in sorted order.  The word sends 0 to L.
    """
    L = len(word)
    part: dict[int, dict[int, int]] = {}
    for t, g in enumerate(word):
        m = part.setdefault(abs(g), {})
        src, dst = (t, t + 1) if g > 0 else (t + 1, t)
        if m.get(src, dst) != dst:
            raise ValueError("word is not reduced")
        m[src] = dst
    out = {}
    for g, m in part.items():
        if len(set(m.values())) != len(m):
            raise ValueError("word is not reduced")
        free_src = [x for x in range(L + 1) if x not in m]
        free_dst = sorted(set(range(L + 1)) - set(m.values()))
        perm = [0] * (L + 1)
        for s, d in m.items():
            perm[s] = d
        for s, d in zip(free_src, free_dst):
            perm[s] = d
        out[g] = perm
    return out


def perm_compose_word(perms: dict[int, list[int]], word: Sequence[int], degree: int) -> list[int]:
    """Right action: result[x] = x acted on by the letters of ``word`` in order."""
    inv_cache: dict[int, list[int]] = {}
    out = list(range(degree))
    for g in word:
        if g > 0:
            p = perms.get(g)
        else:
            p = inv_cache.get(-g)
            if p is None and (-g) in perms:
                q = perms[-g]
                p = [0] * degree
                for x, y in enumerate(q):
                    p[y] = x
                inv_cache[-g] = p
        if p is None:
            continue
        out = [p[x] for x in out]
    return out


def hermite_rows(rows: Sequence[Sequence[int]], width: int) -> list[list[int]]:
    """Row Hermite normal form of the integer lattice spanned by ``rows``."""
    work = [list(r) for r in rows if any(r)]
    out: list[list[int]] = []
    col = 0
    while work and col < width:
        nz = [r for r in work if r[col]]
        if not nz:
            col += 1
            continue
        rest = [r for r in work if not r[col]]
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            nxt = [piv]
            for r in nz[1:]:
                q = r[col] // piv[col]
                r2 = [a - q * b for a, b in zip(r, piv)]
                (nxt if r2[col] else rest).append(r2)
            nz = nxt
        piv = nz[0]
        if piv[col] < 0:
            piv = [-a for a in piv]
        for t, r in enumerate(out):
            q = r[col] // piv[col]
            if q:
                out[t] = [a - q * b for a, b in zip(r, piv)]
        out.append(piv)
        work = [r for r in rest if any(r)]
        col += 1
    return out


def lattice_reduce(v: Sequence[int], hnf: list[list[int]]) -> tuple[int, ...]:
    """Canonical representative of ``v`` modulo the lattice with Hermite basis ``hnf``."""
    v = list(v)
    for r in hnf:
        col = next(t for t, a in enumerate(r) if a)
        q = v[col] // r[col]
        if q:
            v = [a - q * b for a, b in zip(v, r)]
    return tuple(v)


def abelian_lattice(kept: Sequence[int], relators: Sequence[Word]) -> list[list[int]] | None:
    """Relation lattice when the relators include every commutator of the generators.

    Returns ``None`` if some commutator is missing (the group may not be abelian).
    """
    pos = {g: t for t, g in enumerate(kept)}
    have = {_canonical(cyclic_reduce(r)) for r in relators}
    for s, a in enumerate(kept):
        for b in kept[s + 1:]:
            if _canonical((a, b, -a, -b)) not in have:
                return None
    rows = []
    for r in relators:
        v = [0] * len(kept)
        for g in r:
            v[pos[abs(g)]] += 1 if g > 0 else -1
        rows.append(v)
    return hermite_rows(rows, len(kept))
