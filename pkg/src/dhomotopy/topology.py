"""Cosets of the kernels, the ultrametric on loop classes, and lollipop checks."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .chains import ChainError
from .homotopy import Budget, Decision, decide_null, lollipop_certificate
from .rips import (ABOVE, RipsComplex, ScalePoint, free_reduce_word, invert, path_word, presentation,
                   scale_points)
from .spaces import FiniteMetricSpace

SKIP = None


def word_loop(space: FiniteMetricSpace, ref: ScalePoint, word: Sequence[int]) -> tuple[int, ...]:
    pres = presentation(space, ref)
    return tuple(pres.word_loop(free_reduce_word(word)))


def finest_connected(space: FiniteMetricSpace) -> ScalePoint:
    """Finest scale point whose Rips graph is connected."""
    for sp in scale_points(space):
        if len(RipsComplex.of(space, sp).component(space.basepoint)) == space.n:
            return sp
    if not len(space.values):
        raise ValueError("a one-point space has no scale points")
    return ScalePoint(len(space.values), ABOVE)


def loop_word(space: FiniteMetricSpace, ref: ScalePoint, loop) -> tuple[int, ...]:
    """Reduced word of a loop at the base point over the presentation at ``ref``."""
    pts = tuple(getattr(loop, "points", loop))
    if pts[0] != space.basepoint or pts[-1] != space.basepoint:
        raise ValueError("loop is not based at the base point")
    return free_reduce_word(path_word(presentation(space, ref), pts))


def products(words: Sequence[Sequence[int]], length: int) -> list[tuple[int, ...]]:
    """Distinct reduced products of up to ``length`` factors from ``words`` and their inverses."""
    base = [tuple(w) for w in words] + [invert(tuple(w)) for w in words]
    out = {(): None}
    layer = [()]
    for _ in range(length):
        layer = [free_reduce_word(a + b) for a in layer for b in base]
        for w in layer:
            out.setdefault(w, None)
    return list(out)


def coset_member(space: FiniteMetricSpace, sp: ScalePoint, g: Sequence[int], h: Sequence[int],
                 budget: Budget | None = None, ref: ScalePoint | None = None) -> Decision:
    """Whether h lies in gK at ``sp``: the decision on the loop of g^-1 h.

    Words are over the presentation at ``ref`` (default ``sp``), which must be
    finer than or equal to ``sp``.
    """
    ref = ref or sp
    if ref.order() > sp.order():
        raise ValueError(f"reference scale {ref} is coarser than {sp}")
    loop = word_loop(space, ref, invert(tuple(g)) + tuple(h))
    return decide_null(space, sp, loop, budget)


def ultrametric_value(space: FiniteMetricSpace, ref: ScalePoint, g: Sequence[int], h: Sequence[int],
                      budget: Budget | None = None) -> float | None:
    """rho(g, h): 0 if g^-1 h is null at ``ref``, else the first d_k with null at ABOVE(k).

    Returns ``None`` (skipped) when an undecided scale comes first, and
    ``inf`` if no scale kills the loop (cannot happen once edges span all pairs).
    """
    loop = word_loop(space, ref, invert(tuple(g)) + tuple(h))
    return _first_null(space, ref, loop, budget)


def _first_null(space, ref, loop, budget) -> float | None:
    d = decide_null(space, ref, loop, budget)
    if d.is_null:
        return 0.0
    undecided = not d.conclusive
    for k in range(1, len(space.values) + 1):
        sp = ScalePoint(k, ABOVE)
        if sp.order() <= ref.order():
            continue
        d = decide_null(space, sp, loop, budget)
        if d.is_null:
            return SKIP if undecided else float(space.values[k - 1])
        if not d.conclusive:
            undecided = True
    return SKIP if undecided else math.inf


@dataclass
class UltrametricTable:
    ref: ScalePoint
    words: list[tuple[int, ...]]
    rho: list[list[float | None]]
    violations: list[dict] = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_csv(self) -> str:
        def cell(v):
            if v is None:
                return "skip"
            if math.isinf(v):
                return "inf"
            return repr(v)
        head = ["word"] + [" ".join(map(str, w)) or "e" for w in self.words]
        lines = [",".join(head)]
        for w, row in zip(self.words, self.rho):
            lines.append(",".join([" ".join(map(str, w)) or "e"] + [cell(v) for v in row]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        enc = [[("skip" if v is None else ("inf" if math.isinf(v) else v)) for v in row] for row in self.rho]
        return {"ref": str(self.ref), "words": [list(w) for w in self.words], "rho": enc,
                "violations": self.violations, "skipped": self.skipped}


def ultrametric_table(space: FiniteMetricSpace, ref: ScalePoint, words: Sequence[Sequence[int]],
                      budget: Budget | None = None) -> UltrametricTable:
    words = [free_reduce_word(w) for w in words]
    cache: dict[tuple, float | None] = {}

    def rho(a, b):
        key = free_reduce_word(invert(a) + b)
        if key not in cache:
            cache[key] = _first_null(space, ref, word_loop(space, ref, key), budget) if key else 0.0
        return cache[key]

    table = [[rho(a, b) for b in words] for a in words]
    return UltrametricTable(ref, words, table)


def verify_ultrametric(space: FiniteMetricSpace, ref: ScalePoint, words: Sequence[Sequence[int]],
                       budget: Budget | None = None, shifts: int = 3, seed: int = 0) -> UltrametricTable:
    """Check identity, symmetry, the strong triangle inequality and left invariance.

    Pairs with a skipped value are left out of every check that needs them.
    """
    t = ultrametric_table(space, ref, words, budget)
    n = len(t.words)
    R = t.rho
    vio = t.violations
    t.skipped = sum(v is None for row in R for v in row)
    values = set(float(v) for v in space.values) | {0.0, math.inf}
    for i in range(n):
        if R[i][i] != 0.0:
            vio.append({"kind": "identity", "words": [i], "value": R[i][i]})
        for j in range(n):
            a = R[i][j]
            if a is None:
                continue
            if a not in values:
                vio.append({"kind": "grid", "words": [i, j], "value": a})
            if R[j][i] is not None and R[j][i] != a:
                vio.append({"kind": "symmetry", "words": [i, j]})
    for i in range(n):
        for j in range(n):
            a = R[i][j]
            if a is None:
                continue
            for k in range(n):
                b, c = R[i][k], R[k][j]
                if b is None or c is None:
                    continue
                if a > max(b, c):
                    vio.append({"kind": "strong-triangle", "words": [i, k, j], "value": [a, b, c]})
    # left invariance: (wg)^-1 (wh) reduces to g^-1 h, so rho(wg, wh) must equal rho(g, h)
    rng = random.Random(seed)
    for _ in range(shifts if n else 0):
        w = t.words[rng.randrange(n)]
        i, j = rng.randrange(n), rng.randrange(n)
        lhs = free_reduce_word(invert(w + t.words[i]) + w + t.words[j])
        rhs = free_reduce_word(invert(t.words[i]) + t.words[j])
        if lhs != rhs:
            vio.append({"kind": "left-invariance", "words": [i, j], "shift": list(w)})
            continue
        a = ultrametric_value(space, ref, w + t.words[i], w + t.words[j], budget)
        if a is not None and R[i][j] is not None and a != R[i][j]:
            vio.append({"kind": "left-invariance", "words": [i, j], "shift": list(w)})
    return t


def all_words(ngens: int, max_len: int) -> list[tuple[int, ...]]:
    """Every reduced word of length <= max_len, shortlex order."""
    out = [()]
    layer = [()]
    letters = [g for a in range(1, ngens + 1) for g in (a, -a)]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for g in letters:
                if w and w[-1] == -g:
                    continue
                nxt.append(w + (g,))
        out += nxt
        layer = nxt
    return out


@dataclass
class SpanierReport:
    k: int
    value: float
    checked: int
    null: int
    failures: list[dict]

    @property
    def ok(self) -> bool:
        return self.checked == self.null and not self.failures

    def to_json(self) -> dict:
        return {"k": self.k, "value": self.value, "checked": self.checked, "null": self.null,
                "failures": self.failures, "ok": self.ok}


def spanier_check(space: FiniteMetricSpace, k: int, budget: Budget | None = None,
                  max_heads: int = 2000) -> SpanierReport:
    """Lollipops with heads in the balls {x : d(c, x) <= d_k} are null at ABOVE(k).

    Heads are the fundamental cycles of the Rips graph induced on each ball
    (spanning tree from the centre); tails follow the global spanning tree.
    """
    sp = ScalePoint(k, ABOVE).check(space)
    value = float(space.values[k - 1])
    cx = RipsComplex.of(space, sp)
    pres = presentation(space, sp, partial=True)
    tree = pres.tree
    checked = nulls = 0
    failures = []
    for c in range(space.n):
        if checked >= max_heads:
            break
        if tree.depth[c] < 0:
            continue
        ball = [x for x in range(space.n) if space.dist[c, x] <= value]
        inball = set(ball)
        parent = {c: c}
        order = [c]
        for u in order:
            for v in cx.neighbors[u]:
                if v in inball and v not in parent:
                    parent[v] = u
                    order.append(v)
        root_path = lambda v: _walk(parent, v, c)
        for u in order:
            for v in cx.neighbors[u]:
                if v <= u or v not in parent or parent[v] == u or parent[u] == v:
                    continue
                if checked >= max_heads:
                    break
                head = tuple(root_path(u)[::-1] + root_path(v))
                tail = tuple(tree.path_from_root(c))
                checked += 1
                try:
                    cert = lollipop_certificate(space, sp, tail, head, c)
                    if cert.verify() and len(cert.target.points) == 1:
                        nulls += 1
                    else:
                        failures.append({"center": c, "edge": [u, v], "reason": "replay failed"})
                except ChainError as exc:
                    failures.append({"center": c, "edge": [u, v], "reason": str(exc)})
    return SpanierReport(k, value, checked, nulls, failures)


def _walk(parent: dict, v: int, root: int) -> list[int]:
    out = [v]
    while v != root:
        v = parent[v]
        out.append(v)
    return out
