"""Epsilon-covers built as graphs over (point, group element) pairs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .chains import Chain
from .homotopy import Budget, Decision, GroupModel, analyze_group, decide_null, persistence_of
from .rips import RipsComplex, ScalePoint, path_word
from .spaces import FiniteMetricSpace
from .spectrum import kernel_witness


class CoverError(ValueError):
    pass


class LiftError(CoverError):
    """The lift left the constructed ball."""


@dataclass
class CoverBall:
    """Finite piece of the cover at one scale point around (base point, identity).

    ``complete`` means every vertex was expanded and the group is finite, so
    this is the whole cover.  ``exact`` means classes are group elements
    (otherwise reduced words, which may split classes).
    """

    space: FiniteMetricSpace
    scale: ScalePoint
    model: GroupModel
    vertices: list[tuple[int, object]]
    class_keys: list
    class_id: dict
    index: dict
    depth: list[int]
    edges: list[tuple[int, int, float]]
    radius: int
    complete: bool
    exact: bool
    _dist: np.ndarray | None = field(default=None, repr=False)

    @property
    def center(self) -> int:
        return 0

    def label(self, v: int) -> str:
        b, c = self.vertices[v]
        return f"{b}:{self.class_id[c]}"

    def neighbor(self, v: int, q: int) -> int | None:
        b, c = self.vertices[v]
        if b == q:
            return v
        if not RipsComplex.of(self.space, self.scale).has_edge(b, q):
            raise CoverError(f"({b}, {q}) is not a Rips edge at {self.scale}")
        return self.index.get((q, self.model.edge_step(c, b, q)))

    def to_json(self) -> dict:
        return {"scale": str(self.scale), "group": self.model.kind, "complete": self.complete,
                "exact": self.exact, "radius": self.radius,
                "vertices": [[b, self.class_id[c]] for b, c in self.vertices],
                "edges": [[i, j, w] for i, j, w in self.edges]}

    def to_dot(self) -> str:
        lines = ["graph cover {", f'  label="cover at {self.scale}";']
        for v in range(len(self.vertices)):
            shape = " shape=doublecircle" if v == 0 else ""
            lines.append(f'  {v} [label="{self.label(v)}"{shape}];')
        for i, j, w in self.edges:
            lines.append(f'  {i} -- {j} [len={w!r}];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def distances(self) -> np.ndarray:
        if self._dist is None:
            n = len(self.vertices)
            if self.edges:
                i, j, w = zip(*self.edges)
                g = csr_matrix((w, (i, j)), shape=(n, n))
            else:
                g = csr_matrix((n, n))
            self._dist = dijkstra(g, directed=False)
        return self._dist


def build_cover(space: FiniteMetricSpace, sp: ScalePoint, radius: int | None = None,
                budget: Budget | None = None, exact: bool = False) -> CoverBall:
    """Breadth-first ball of hop radius ``radius`` (whole cover when finite and ``None``).

    With ``exact`` an error is raised unless the whole cover was built.
    """
    budget = budget or Budget()
    model = analyze_group(space, sp.check(space), space.basepoint, budget)
    cx = RipsComplex.of(space, sp)
    if len(cx.component(space.basepoint)) != space.n:
        raise CoverError(f"Rips graph at {sp} is not connected")
    root = (space.basepoint, model.identity())
    verts = [root]
    index = {root: 0}
    depth = [0]
    class_id = {model.identity(): 0}
    keys = [model.identity()]
    queue = deque([0])
    limit = budget.max_cover_vertices
    truncated = False
    while queue:
        x = queue.popleft()
        if radius is not None and depth[x] >= radius:
            truncated = True
            continue
        b, c = verts[x]
        for u in cx.neighbors[b]:
            key = (u, model.edge_step(c, b, u))
            if key in index:
                continue
            if len(verts) >= limit:
                truncated = True
                break
            index[key] = len(verts)
            verts.append(key)
            depth.append(depth[x] + 1)
            if key[1] not in class_id:
                class_id[key[1]] = len(keys)
                keys.append(key[1])
            queue.append(index[key])
        if truncated and len(verts) >= limit:
            break
    edges = []
    d = space.dist
    for x, (b, c) in enumerate(verts):
        for u in cx.neighbors[b]:
            y = index.get((u, model.edge_step(c, b, u)))
            if y is not None and y > x:
                edges.append((x, y, float(d[b, u])))
    finite = model.kind in ("trivial", "finite")
    complete = finite and not truncated
    if exact and not complete:
        raise CoverError(f"cover at {sp} could not be completed ({model.kind} group"
                         + (f", {model.note}" if model.note else "") + ")")
    return CoverBall(space, sp, model, verts, keys, class_id, index, depth, edges,
                     max(depth), complete, model.exact)


@dataclass(frozen=True)
class LiftResult:
    path: tuple[int, ...]

    @property
    def endpoint(self) -> int:
        return self.path[-1]

    @property
    def closed(self) -> bool:
        return self.path[0] == self.path[-1]


def lift_chain(cb: CoverBall, chain, start: int = 0) -> LiftResult:
    pts = tuple(getattr(chain, "points", chain))
    if cb.vertices[start][0] != pts[0]:
        raise CoverError(f"start vertex lies over {cb.vertices[start][0]}, chain starts at {pts[0]}")
    path = [start]
    for q in pts[1:]:
        y = cb.neighbor(path[-1], q)
        if y is None:
            raise LiftError(f"lift leaves the ball (radius {cb.radius}) after {len(path)} steps")
        path.append(y)
    return LiftResult(tuple(path))


@dataclass(frozen=True)
class DeckElement:
    """Loop class at the base point, given as a word in the presentation generators."""

    word: tuple[int, ...]

    @classmethod
    def of_loop(cls, cb: CoverBall, loop) -> "DeckElement":
        return cls(tuple(path_word(cb.model.pres, tuple(getattr(loop, "points", loop)))))


def _element(cb: CoverBall, word: Sequence[int]):
    return cb.model.act(cb.model.identity(), word)


def deck_apply(cb: CoverBall, g: DeckElement, v: int) -> int:
    """Left translation of vertex ``v`` by ``g``."""
    if not cb.complete:
        raise CoverError("deck action needs a complete cover")
    b, c = cb.vertices[v]
    m = cb.model
    if m.kind == "trivial":
        return v
    reps = cb.__dict__.setdefault("_reps", m.table.rep_words())
    h = m.table.trace(_element(cb, g.word), reps[c])
    return cb.index[(b, h)]


def deck_elements(cb: CoverBall) -> list[DeckElement]:
    """One word per group element (identity first)."""
    if not cb.complete:
        raise CoverError("deck group needs a complete cover")
    m = cb.model
    if m.kind == "trivial":
        return [DeckElement(())]
    # kept generators are original generators, so coset words are loop words
    return [DeckElement(tuple(w)) for w in m.table.rep_words()]


def displacement(cb: CoverBall, g: DeckElement) -> float:
    """min over vertices v of the cover-graph distance from v to g.v."""
    if not cb.complete:
        raise CoverError("displacement needs a complete cover")
    dist = cb.distances()
    return float(min(dist[v, deck_apply(cb, g, v)] for v in range(len(cb.vertices))))


@dataclass
class KernelStep:
    k: int
    value: float
    rank: int
    generators: list[dict]

    def to_json(self) -> dict:
        return {"k": self.k, "value": self.value, "rank": self.rank,
                "generators": [{"loop": g["loop"].to_json(), "fine": g["fine"].to_json(),
                                "coarse": g["coarse"].to_json()} for g in self.generators]}


@dataclass
class KernelReport:
    steps: list[KernelStep]
    trivial_steps: int
    stabilized: bool
    stable_below: float | None

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps], "trivial_steps": self.trivial_steps,
                "stabilized": self.stabilized, "stable_below": self.stable_below}


def kernel_report(space: FiniteMetricSpace, budget: Budget | None = None,
                  max_generators: int = 4) -> KernelReport:
    """Kernels of the rational first-homology maps AT(k) -> ABOVE(k) with loop evidence.

    Every other consecutive pair (ABOVE(k) -> AT(k+1)) has the same complex on
    both sides.  For a finite space all steps below the smallest critical
    distance are trivial, so the stabilization flag always holds; the
    threshold is reported as ``stable_below``.
    """
    budget = budget or Budget()
    m = len(space.values)
    if space.n < 3:
        return KernelReport([], 2 * m, True, None)
    ph = persistence_of(space)
    by_rank: dict[int, list[tuple[int, int]]] = {}
    for p, t in ph.essential_pairs():
        by_rank.setdefault(t // ph.nt, []).append((p, t))
    steps = []
    for r in sorted(by_rank):
        k = r + 1
        gens = []
        for pair in by_rank[r][:max_generators]:
            loop, fine = kernel_witness(space, pair)
            coarse = decide_null(space, ScalePoint(k, "above"), loop.points, budget)
            gens.append({"loop": loop, "fine": fine, "coarse": coarse})
        steps.append(KernelStep(k, float(ph.values[r]), len(by_rank[r]), gens))
    stable = min((s.value for s in steps), default=None)
    return KernelReport(steps, 2 * m - len(steps), True, stable)
