"""Rips graphs and 2-skeleta at symbolic scale points, edge-path presentations."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .spaces import FiniteMetricSpace

AT = "at"
ABOVE = "above"

Word = tuple[int, ...]


@dataclass(frozen=True, order=True)
class ScalePoint:
    """``AT(k)``: epsilon = d_k.  ``ABOVE(k)``: epsilon in (d_k, d_{k+1}).

    ``k`` is 1-based into the scale set.  Chains are strict (d < epsilon), so
    ``AT(k)`` keeps edges of rank < k-1 and ``ABOVE(k)`` keeps rank <= k-1.
    """

    k: int
    side: str = ABOVE

    def __post_init__(self):
        if self.side not in (AT, ABOVE):
            raise ValueError(f"side must be 'at' or 'above', got {self.side!r}")
        if self.k < 1:
            raise ValueError("scale index is 1-based")

    @property
    def max_rank(self) -> int:
        return self.k - 1 if self.side == ABOVE else self.k - 2

    def order(self) -> int:
        """Monotone in epsilon; ABOVE(k) and AT(k+1) compare equal."""
        return self.max_rank

    def value(self, space: FiniteMetricSpace) -> float:
        return float(space.values[self.k - 1])

    def epsilon(self, space: FiniteMetricSpace) -> float:
        """A representative epsilon for chains at this scale point."""
        v = space.values
        if self.side == AT:
            return float(v[self.k - 1])
        if self.k < len(v):
            return float((v[self.k - 1] + v[self.k]) / 2)
        return float(v[-1]) * 1.5

    def check(self, space: FiniteMetricSpace) -> "ScalePoint":
        if self.k > len(space.values):
            raise ValueError(f"scale index {self.k} exceeds scale set size {len(space.values)}")
        return self

    def __str__(self) -> str:
        return f"{self.k}:{self.side}"

    @classmethod
    def parse(cls, text: str, space: FiniteMetricSpace | None = None) -> "ScalePoint":
        """Parse ``k:at`` / ``k:above`` or a raw epsilon (needs ``space``)."""
        m = re.fullmatch(r"\s*(\d+)\s*:\s*(at|above)\s*", text)
        if m:
            sp = cls(int(m.group(1)), m.group(2))
            return sp.check(space) if space is not None else sp
        try:
            eps = float(text)
        except ValueError:
            raise ValueError(f"cannot parse scale point {text!r}") from None
        if space is None:
            raise ValueError("a raw epsilon needs the space to snap to the scale grid")
        return snap(space, eps)


def snap(space: FiniteMetricSpace, eps: float) -> ScalePoint:
    """Symbolic scale point whose Rips complex equals the one at raw ``eps``."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    v = space.values
    if len(v) == 0:
        raise ValueError("a one-point space has no scale set")
    e = round(float(eps), 12)
    k = int(np.searchsorted(v, e, side="left"))  # v[k-1] < e <= v[k]
    if k < len(v) and v[k] == e:
        return ScalePoint(k + 1, AT)
    if k == 0:
        return ScalePoint(1, AT)
    return ScalePoint(k, ABOVE)


def scale_set(space: FiniteMetricSpace) -> list[float]:
    return [float(x) for x in space.values]


def scale_points(space: FiniteMetricSpace) -> list[ScalePoint]:
    """Every distinct Rips complex once: AT(1), then ABOVE(1..m)."""
    m = len(space.values)
    if m == 0:
        return []
    return [ScalePoint(1, AT)] + [ScalePoint(k, ABOVE) for k in range(1, m + 1)]


class RipsComplex:
    """Rips 2-skeleton of ``space`` with edges of rank <= ``max_rank``."""

    def __init__(self, space: FiniteMetricSpace, max_rank: int):
        self.space = space
        self.max_rank = max_rank
        n = space.n
        adj = (space.drank <= max_rank) & (space.drank >= 0)
        adj.setflags(write=False)
        self.adj = adj
        self.neighbors: list[list[int]] = [np.flatnonzero(adj[i]).tolist() for i in range(n)]
        self.edges: list[tuple[int, int]] = [(i, j) for i in range(n) for j in self.neighbors[i] if j > i]

    @classmethod
    def of(cls, space: FiniteMetricSpace, sp: ScalePoint) -> "RipsComplex":
        key = ("rips", sp.max_rank)
        cx = space._cache.get(key)
        if cx is None:
            cx = space._cache[key] = cls(space, sp.max_rank)
        return cx

    def has_edge(self, u: int, v: int) -> bool:
        return u == v or bool(self.adj[u, v])

    def triangle_count(self) -> int:
        a = self.adj.astype(np.float64)
        return int(round(np.trace(a @ a @ a) / 6))

    @cached_property
    def triangles(self) -> list[tuple[int, int, int]]:
        out = []
        adj = self.adj
        for a in range(self.space.n):
            up = [b for b in self.neighbors[a] if b > a]
            for x, b in enumerate(up):
                row = adj[b]
                for c in up[x + 1:]:
                    if row[c]:
                        out.append((a, b, c))
        return out

    @cached_property
    def edge_triangles(self) -> dict[tuple[int, int], list[tuple[int, int, int]]]:
        out: dict[tuple[int, int], list] = {e: [] for e in self.edges}
        for t in self.triangles:
            a, b, c = t
            out[(a, b)].append(t)
            out[(a, c)].append(t)
            out[(b, c)].append(t)
        return out

    def component(self, root: int) -> list[int]:
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return sorted(seen)

    def tree(self, root: int) -> "SpanningTree":
        key = ("tree", self.max_rank, root)
        t = self.space._cache.get(key)
        if t is None:
            t = self.space._cache[key] = SpanningTree.bfs(self, root)
        return t


@dataclass(frozen=True)
class SpanningTree:
    root: int
    parent: tuple[int, ...]  # -1 for root and unreached points
    depth: tuple[int, ...]

    @classmethod
    def bfs(cls, cx: RipsComplex, root: int) -> "SpanningTree":
        n = cx.space.n
        parent = [-1] * n
        depth = [-1] * n
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in cx.neighbors[u]:  # ascending index order
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    queue.append(v)
        return cls(root, tuple(parent), tuple(depth))

    def is_tree_edge(self, u: int, v: int) -> bool:
        return self.parent[v] == u or self.parent[u] == v

    def path_to_root(self, x: int) -> list[int]:
        """[x, parent(x), ..., root]."""
        out = [x]
        while x != self.root:
            x = self.parent[x]
            if x < 0:
                raise ValueError("point not reached by the spanning tree")
            out.append(x)
        return out

    def path_from_root(self, x: int) -> list[int]:
        return self.path_to_root(x)[::-1]


class PresentationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Presentation:
    """Edge-path presentation of the Rips 2-complex at one scale point.

    Generator ``g`` (1-based) is the non-tree edge ``generators[g-1] = (u, v)``
    with ``u < v``, traversed u -> v; ``-g`` is the reverse traversal.
    Relators are the triangle words a -> b -> c -> a (tree edges dropped).
    """

    space: FiniteMetricSpace
    scale: ScalePoint
    basepoint: int
    tree: SpanningTree
    generators: tuple[tuple[int, int], ...]
    relators: tuple[Word, ...]
    triangles: tuple[tuple[int, int, int], ...]
    gen_index: dict

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def edge_letter(self, u: int, v: int) -> int:
        """Signed generator for traversing u -> v, 0 for tree edges or u == v."""
        if u == v:
            return 0
        if u < v:
            return self.gen_index.get((u, v), 0)
        return -self.gen_index.get((v, u), 0)

    def generator_loop(self, g: int) -> list[int]:
        """Tree path * -> u, edge u -> v, tree path v -> * (reversed for -g)."""
        u, v = self.generators[abs(g) - 1]
        if g < 0:
            u, v = v, u
        return self.tree.path_from_root(u) + self.tree.path_to_root(v)

    def word_loop(self, word: Sequence[int]) -> list[int]:
        """A loop at the base point spelling ``word``."""
        pts = [self.basepoint]
        for g in word:
            pts.extend(self.generator_loop(g)[1:])
        return pts

    def to_json(self) -> dict:
        return {
            "scale": str(self.scale),
            "basepoint": self.basepoint,
            "generators": [list(e) for e in self.generators],
            "relators": [list(r) for r in self.relators],
            "tree": [[v, p] for v, p in enumerate(self.tree.parent) if p >= 0],
        }


def rips_graph(space: FiniteMetricSpace, sp: ScalePoint) -> list[tuple[int, int]]:
    return list(RipsComplex.of(space, sp.check(space)).edges)


def triangles(space: FiniteMetricSpace, sp: ScalePoint) -> list[tuple[int, int, int]]:
    return list(RipsComplex.of(space, sp.check(space)).triangles)


def presentation(space: FiniteMetricSpace, sp: ScalePoint, basepoint: int | None = None,
                 partial: bool = False) -> Presentation:
    """Edge-path presentation at ``sp``.

    With ``partial`` the presentation covers only the base point's component
    instead of raising when the Rips graph is disconnected.
    """
    bp = space.basepoint if basepoint is None else basepoint
    key = ("presentation", sp, bp, partial)
    pres = space._cache.get(key)
    if pres is not None:
        return pres
    if space.n > 1:
        sp.check(space)
    cx = RipsComplex.of(space, sp) if space.n > 1 else RipsComplex(space, -1)
    tree = cx.tree(bp)
    stray = [v for v in range(space.n) if tree.depth[v] < 0]
    if stray and not partial:
        raise PresentationError(
            f"Rips graph at {sp} does not connect the base point to points {stray[:20]}"
            + (" ..." if len(stray) > 20 else ""))
    reached = [d >= 0 for d in tree.depth]
    gens = tuple(e for e in cx.edges if reached[e[0]] and not tree.is_tree_edge(*e))
    gen_index = {e: i + 1 for i, e in enumerate(gens)}

    def letter(u, v):
        if u < v:
            return gen_index.get((u, v), 0)
        return -gen_index.get((v, u), 0)

    rels = []
    tris = tuple(t for t in cx.triangles if reached[t[0]])
    for a, b, c in tris:
        w = tuple(x for x in (letter(a, b), letter(b, c), letter(c, a)) if x)
        rels.append(w)
    pres = Presentation(space, sp, bp, tree, gens, tuple(rels), tris, gen_index)
    space._cache[key] = pres
    return pres


def free_reduce_word(word: Iterable[int]) -> Word:
    out: list[int] = []
    for g in word:
        if g == 0:
            continue
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def invert(word: Sequence[int]) -> Word:
    return tuple(-g for g in reversed(word))


def path_word(pres: Presentation, points: Sequence[int]) -> Word:
    """Generators crossed by an edge path (not reduced); rejects non-edges."""
    cx = RipsComplex.of(pres.space, pres.scale)
    out = []
    for u, v in zip(points, points[1:]):
        if u == v:
            continue
        if not cx.adj[u, v]:
            raise ValueError(f"({u}, {v}) is not an edge of the Rips graph at {pres.scale}")
        g = pres.edge_letter(u, v)
        if g:
            out.append(g)
    return tuple(out)


def chain_to_word(space: FiniteMetricSpace, sp: ScalePoint, points: Sequence[int]) -> Word:
    """Reduced word of a loop at the base point."""
    points = list(getattr(points, "points", points))
    pres = presentation(space, sp)
    if not points or points[0] != pres.basepoint or points[-1] != pres.basepoint:
        raise ValueError("chain is not a loop at the base point")
    return free_reduce_word(path_word(pres, points))


def bonding_map(space: FiniteMetricSpace, from_sp: ScalePoint, to_sp: ScalePoint,
                word: Sequence[int]) -> Word:
    """Image of a fine-scale word under reinterpretation at a coarser scale."""
    if from_sp.order() > to_sp.order():
        raise ValueError(f"bonding map needs a finer source scale: {from_sp} is coarser than {to_sp}")
    if from_sp.order() == to_sp.order():
        return tuple(word)
    fine = presentation(space, from_sp)
    coarse = presentation(space, to_sp)
    images: dict[int, Word] = {}
    out: list[int] = []
    for g in word:
        a = abs(g)
        if a not in images:
            images[a] = free_reduce_word(path_word(coarse, fine.generator_loop(a)))
        out.extend(images[a] if g > 0 else invert(images[a]))
    return free_reduce_word(out)


def rips_dot(space: FiniteMetricSpace, sp: ScalePoint) -> str:
    pres = presentation(space, sp)
    lines = [f'graph rips {{', f'  label="Rips graph at {sp}";']
    for v in range(space.n):
        name = space.labels[v] if space.labels else str(v)
        shape = ' shape=doublecircle' if v == pres.basepoint else ''
        lines.append(f'  {v} [label="{name}"{shape}];')
    for u, v in RipsComplex.of(space, sp).edges:
        if pres.tree.is_tree_edge(u, v):
            lines.append(f'  {u} -- {v} [style=bold tree=true];')
        else:
            lines.append(f'  {u} -- {v} [style=dashed label="g{pres.gen_index[(u, v)]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
