"""Deciding epsilon-nullity of loops, with certificates in both directions.

Null verdicts carry a move certificate that replays step by step.  NonNull
verdicts carry either an integer cocycle (pairs nonzero with the loop and
vanishes on every triangle) or a permutation representation of the edge-path
group (every triangle relator acts trivially, the loop does not).
"""
from __future__ import annotations

import heapq
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import groups
from .chains import Chain, ChainError, HomotopyCertificate, Move, MoveRecorder, reduced_points
from .persistence import (H1Persistence, alive_pairs, cocycle_defects, h1_persistence,
                          restricted_cocycle)
from .rips import Presentation, RipsComplex, ScalePoint, path_word, presentation, snap
from .spaces import FiniteMetricSpace, _trusted

NULL = "null"
NONNULL = "nonnull"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Budget:
    max_states: int = 20000
    max_chain_length: int = 256
    max_coset_rows: int = 20000
    time_limit: float | None = None
    max_triangles: int = 250_000
    max_cover_vertices: int = 50_000

    def __post_init__(self):
        for name in ("max_states", "max_chain_length", "max_coset_rows", "max_triangles",
                     "max_cover_vertices"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    def deadline(self) -> float | None:
        return None if self.time_limit is None else time.monotonic() + self.time_limit

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _expired(deadline: float | None) -> bool:
    return deadline is not None and time.monotonic() > deadline


def persistence_of(space: FiniteMetricSpace) -> H1Persistence:
    ph = space._cache.get("h1")
    if ph is None:
        ph = space._cache["h1"] = h1_persistence(space.dist)
    return ph


def loop_at(space: FiniteMetricSpace, sp: ScalePoint, loop) -> Chain:
    """Re-tag ``loop`` (Chain or point list) at the representative epsilon of ``sp``."""
    pts = tuple(getattr(loop, "points", loop))
    c = Chain(space, sp.check(space).epsilon(space), pts)
    if not c.is_loop:
        raise ChainError("chain is not a loop")
    return c


# ---------------------------------------------------------------- certificates

def _loop_edge_vector(points: Sequence[int]) -> dict[tuple[int, int], int]:
    vec: dict[tuple[int, int], int] = {}
    for u, v in zip(points, points[1:]):
        if u == v:
            continue
        if u < v:
            vec[(u, v)] = vec.get((u, v), 0) + 1
        else:
            vec[(v, u)] = vec.get((v, u), 0) - 1
    return vec


def pairing(cochain: dict[tuple[int, int], int], points: Sequence[int]) -> int:
    return sum(cochain.get(e, 0) * c for e, c in _loop_edge_vector(points).items())


@dataclass(frozen=True)
class H1Certificate:
    """Integer cochain on Rips edges: zero on every triangle, nonzero on the loop."""

    scale: ScalePoint
    loop: tuple[int, ...]
    cochain: dict

    @property
    def value(self) -> int:
        return pairing(self.cochain, self.loop)

    def verify(self, space: FiniteMetricSpace) -> bool:
        cx = RipsComplex.of(space, self.scale)
        for u, v in zip(self.loop, self.loop[1:]):
            if not cx.has_edge(u, v):
                return False
        if self.loop[0] != self.loop[-1] or self.value == 0:
            return False
        return cocycle_defects(self.cochain, cx.adj) == 0

    def to_json(self) -> dict:
        return {"type": "h1", "scale": str(self.scale), "loop": list(self.loop), "pairing": self.value,
                "cochain": [[i, j, c] for (i, j), c in sorted(self.cochain.items())]}

    @classmethod
    def from_json(cls, doc: dict) -> "H1Certificate":
        return cls(ScalePoint.parse(doc["scale"]), tuple(doc["loop"]),
                   {(int(i), int(j)): int(c) for i, j, c in doc["cochain"]})


@dataclass(frozen=True)
class PermutationCertificate:
    """Right action of the edge-path group by permutations.

    ``perms`` maps generators of the presentation at ``scale`` (based at the
    loop's first point) to permutations; absent generators act trivially.
    """

    scale: ScalePoint
    loop: tuple[int, ...]
    degree: int
    perms: dict

    def verify(self, space: FiniteMetricSpace) -> bool:
        try:
            pres = presentation(space, self.scale, self.loop[0], partial=True)
            word = path_word(pres, self.loop)
        except ValueError:
            return False
        ident = list(range(self.degree))
        for p in self.perms.values():
            if sorted(p) != ident:
                return False
        for r in pres.relators:
            if groups.perm_compose_word(self.perms, r, self.degree) != ident:
                return False
        return groups.perm_compose_word(self.perms, word, self.degree) != ident

    def to_json(self) -> dict:
        return {"type": "permutation", "scale": str(self.scale), "loop": list(self.loop),
                "degree": self.degree, "perms": {str(g): p for g, p in sorted(self.perms.items())}}

    @classmethod
    def from_json(cls, doc: dict) -> "PermutationCertificate":
        return cls(ScalePoint.parse(doc["scale"]), tuple(doc["loop"]), int(doc["degree"]),
                   {int(g): list(p) for g, p in doc["perms"].items()})


@dataclass(frozen=True)
class Decision:
    verdict: str
    certificate: object = None
    strategy: str = ""
    scale: ScalePoint | None = None
    report: dict = field(default_factory=dict)

    @property
    def is_null(self) -> bool:
        return self.verdict == NULL

    @property
    def is_nonnull(self) -> bool:
        return self.verdict == NONNULL

    @property
    def conclusive(self) -> bool:
        return self.verdict != INCONCLUSIVE

    def verify(self, space: FiniteMetricSpace) -> bool:
        if self.verdict == NULL:
            c = self.certificate
            return (isinstance(c, HomotopyCertificate) and c.verify()
                    and len(c.target.points) == 1)
        if self.verdict == NONNULL:
            return self.certificate.verify(space)
        return True

    def to_json(self) -> dict:
        cert = self.certificate.to_json() if self.certificate is not None else None
        if isinstance(self.certificate, HomotopyCertificate):
            cert = {"type": "moves", **cert, "scale_point": str(self.scale)}
        return {"verdict": self.verdict, "strategy": self.strategy,
                "scale": str(self.scale) if self.scale else None,
                "certificate": cert, "report": self.report}


def certificate_from_json(space: FiniteMetricSpace, doc: dict):
    kind = doc.get("type")
    if kind == "moves":
        return HomotopyCertificate.from_json(space, doc)
    if kind == "h1":
        return H1Certificate.from_json(doc)
    if kind == "permutation":
        return PermutationCertificate.from_json(doc)
    raise ValueError(f"unknown certificate type {kind!r}")


def verify_certificate(space: FiniteMetricSpace, cert) -> bool:
    if isinstance(cert, HomotopyCertificate):
        return cert.verify()
    return cert.verify(space)


# ---------------------------------------------------------------- strategies

def h1_witness(space: FiniteMetricSpace, sp: ScalePoint, loop) -> H1Certificate | None:
    """Cocycle certifying that ``loop`` is not a rational boundary at ``sp``.

    Restrictions of the persistent cocycles alive at ``sp`` form a basis of
    rational first cohomology there, so the loop bounds iff all pairings vanish.
    """
    c = loop_at(space, sp, loop)
    if len(reduced_points(c.points)) == 1:
        return None
    ph = persistence_of(space)
    r = sp.max_rank
    for pos, _ in alive_pairs(ph, r):
        phi = restricted_cocycle(ph, pos, r)
        if pairing(phi, c.points):
            return H1Certificate(sp, c.points, phi)
    return None


def shorten(rec: MoveRecorder) -> None:
    """Free-reduce, then drop interior points while the chain stays valid."""
    rec.free_reduce()
    d = rec.space.dist
    eps = rec.eps
    changed = True
    while changed and len(rec.points) > 1:
        changed = False
        i = 1
        while i < len(rec.points) - 1:
            p = rec.points
            if d[p[i - 1], p[i + 1]] < eps:
                rec.remove(i)
                changed = True
            else:
                i += 1
        rec.free_reduce()


def ball_loop_certificate(space: FiniteMetricSpace, sp, loop, center: int) -> HomotopyCertificate:
    """Contract a loop lying in the open epsilon-ball around ``center``.

    Insert the center after the base point, remove the loop points through
    it one by one, then drop the center and the duplicated base point.
    """
    c = loop if isinstance(loop, Chain) and sp is None else loop_at(space, sp, loop)
    far = [x for x in c.points if not space.dist[center, x] < c.scale]
    if far:
        raise ChainError(f"points {sorted(set(far))[:10]} are not within {c.scale} of {center}")
    rec = MoveRecorder(space, c.scale, c.points)
    _ball_moves(rec, 0, len(c.points) - 1, center)
    return rec.certificate(c)


def _ball_moves(rec: MoveRecorder, lo: int, hi: int, center: int) -> int:
    """Contract the loop ``points[lo..hi]`` through ``center``; returns the new ``hi``."""
    if hi == lo:
        return hi
    rec.insert(lo + 1, center)
    for _ in range(lo + 1, hi):
        rec.remove(lo + 2)
    # now points[lo..lo+2] = x0, center, x0
    rec.remove(lo + 1)
    rec.remove(lo + 1)
    return lo


def lollipop_certificate(space: FiniteMetricSpace, sp, tail, head, center: int) -> HomotopyCertificate:
    """Null certificate for tail * head * reverse(tail) with head in a ball."""
    eps = sp.epsilon(space) if sp is not None else head.scale
    t = tuple(getattr(tail, "points", tail))
    h = tuple(getattr(head, "points", head))
    if t[-1] != h[0]:
        raise ChainError("tail does not end at the head's base point")
    if h[0] != h[-1]:
        raise ChainError("head is not a loop")
    far = [x for x in h if not space.dist[center, x] < eps]
    if far:
        raise ChainError(f"head points {sorted(set(far))[:10]} are not within {eps} of {center}")
    pts = t + h[1:] + t[::-1][1:]
    source = Chain(space, eps, pts)
    rec = MoveRecorder(space, eps, pts)
    lo = len(t) - 1
    _ball_moves(rec, lo, lo + len(h) - 1, center)
    rec.free_reduce()
    return rec.certificate(source)


def product_certificate(a: HomotopyCertificate, b: HomotopyCertificate) -> HomotopyCertificate:
    """Null certificate for a concatenation of two null loops at one base point."""
    if len(a.target.points) != 1 or len(b.target.points) != 1:
        raise ChainError("both certificates must end at a constant chain")
    if a.source.end != b.source.start:
        raise ChainError("loops are not based at the same point")
    src = a.source.with_points(a.source.points + b.source.points[1:])
    return HomotopyCertificate(src, a.moves + b.moves, b.target)


# -- triangle collapse on a (lifted) 2-complex

class _Complex:
    """Explicit graph over vertex ids with a projection to base points.

    ``nbr[x]`` maps a base point to the neighbouring vertex lying over it.
    ``parent`` is a BFS spanning tree from vertex 0.
    """

    def __init__(self, proj: list[int], nbr: list[dict[int, int]], parent: list[int]):
        self.proj = proj
        self.nbr = nbr
        self.parent = parent

    def is_tree(self, x: int, y: int) -> bool:
        return self.parent[x] == y or self.parent[y] == x


def _base_complex(space: FiniteMetricSpace, cx: RipsComplex, root: int) -> _Complex:
    tree = cx.tree(root)
    order = [v for v in range(space.n) if tree.depth[v] >= 0]
    order.sort(key=lambda v: (tree.depth[v], v))
    ids = {v: t for t, v in enumerate(order)}
    proj = order
    nbr = [{u: ids[u] for u in cx.neighbors[v] if u in ids} for v in order]
    parent = [ids[tree.parent[v]] if tree.parent[v] >= 0 else -1 for v in order]
    return _Complex(proj, nbr, parent)


def _resolve(cp: _Complex, cx: RipsComplex, deadline) -> dict[tuple[int, int], int]:
    """Edges that collapse onto the tree through triangles.

    Tree edges cost 1; an edge costs the sum of the two other edges of a
    triangle once both are resolved.  The returned map gives, for every
    resolved non-tree edge (x, y), the apex used; cheapest first (Knuth's
    generalisation of Dijkstra).
    """
    proj, nbr = cp.proj, cp.nbr
    cost: dict[tuple[int, int], int] = {}
    apex: dict[tuple[int, int], int] = {}
    heap: list[tuple[int, int, int, int]] = []
    done: set[tuple[int, int]] = set()
    for x, px in enumerate(cp.parent):
        if px >= 0:
            key = (min(x, px), max(x, px))
            cost[key] = 1
            heapq.heappush(heap, (1, key[0], key[1], -1))
    steps = 0
    while heap:
        c, x, y, w = heapq.heappop(heap)
        key = (x, y)
        if key in done:
            continue
        done.add(key)
        if w >= 0:
            apex[key] = w
        steps += 1
        if steps % 4096 == 0 and _expired(deadline):
            break
        by = proj[y]
        nx, ny = nbr[x], nbr[y]
        for bz, z in nx.items():
            if bz == by or ny.get(bz) != z:
                continue
            # triangle x, y, z
            exz = (min(x, z), max(x, z))
            eyz = (min(y, z), max(y, z))
            if exz in done and eyz not in done:
                nc = c + cost[exz]
                if nc < cost.get(eyz, 1 << 60):
                    cost[eyz] = nc
                    heapq.heappush(heap, (nc, eyz[0], eyz[1], x))
            elif eyz in done and exz not in done:
                nc = c + cost[eyz]
                if nc < cost.get(exz, 1 << 60):
                    cost[exz] = nc
                    heapq.heappush(heap, (nc, exz[0], exz[1], y))
    return {e: apex[e] for e in apex}


def _collapse_moves(rec: MoveRecorder, lift: list[int], cp: _Complex,
                    apex: dict[tuple[int, int], int], cap: int, deadline) -> bool:
    """Expand non-tree edges through their apexes and cancel tree backtracks.

    ``lift`` shadows ``rec.points`` with vertex ids.  Returns True when the
    chain reaches a single point.
    """
    p = 0
    proj = cp.proj
    steps = 0
    while p < len(lift) - 1:
        steps += 1
        if steps % 4096 == 0 and _expired(deadline):
            return False
        a, b = lift[p], lift[p + 1]
        if a == b:
            rec.remove(p + 1)
            del lift[p + 1]
            continue
        if p > 0 and lift[p - 1] == b:
            rec.remove(p)
            del lift[p]
            rec.remove(p)
            del lift[p]
            p -= 1
            continue
        if cp.is_tree(a, b):
            p += 1
            continue
        w = apex.get((min(a, b), max(a, b)))
        if w is None:
            return False
        rec.insert(p + 1, proj[w])
        lift.insert(p + 1, w)
        if len(lift) > cap:
            return False
    return len(lift) == 1


def _lift_points(cp: _Complex, points: Sequence[int], start: int) -> list[int] | None:
    out = [start]
    for q in points[1:]:
        x = out[-1]
        if cp.proj[x] == q:
            out.append(x)
            continue
        y = cp.nbr[x].get(q)
        if y is None:
            return None
        out.append(y)
    return out


def collapse_certificate(space: FiniteMetricSpace, sp: ScalePoint, loop: Chain, budget: Budget,
                         model: "GroupModel | None" = None, deadline=None) -> HomotopyCertificate | None:
    """Null certificate by collapsing the loop onto a spanning tree through triangles.

    Without ``model`` this works in the Rips complex itself; with an exact
    group model it works in the lifted complex, where every null loop lifts
    closed.
    """
    cx = RipsComplex.of(space, sp)
    if cx.triangle_count() > budget.max_triangles:
        return None
    if model is None:
        cp = _base_complex(space, cx, loop.start)
        start = 0
    else:
        built = model.lifted_complex(loop.points, budget)
        if built is None:
            return None
        cp, start = built
    lift = _lift_points(cp, loop.points, start)
    if lift is None or lift[-1] != lift[0]:
        return None
    apex = _resolve(cp, cx, deadline)
    rec = MoveRecorder(space, loop.scale, loop.points, check=False)
    if not _collapse_moves(rec, lift, cp, apex, budget.max_chain_length, deadline):
        return None
    cert = rec.certificate(loop)
    return cert if cert.verify() else None


def local_collapse_certificate(space: FiniteMetricSpace, loop: Chain, radius: float, budget: Budget,
                               deadline=None) -> HomotopyCertificate | None:
    """Collapse inside the sub-complex on points within ``radius`` of the loop."""
    pts = sorted(set(loop.points))
    near = np.flatnonzero(space.dist[pts].min(axis=0) <= radius).tolist()
    if len(near) == space.n or len(near) < 3:
        return None
    pos = {v: i for i, v in enumerate(near)}
    sub = _trusted(space.dist[np.ix_(near, near)], basepoint=pos[loop.start])
    ssp = snap(sub, loop.scale)
    sloop = Chain(sub, ssp.epsilon(sub), tuple(pos[p] for p in loop.points))
    cert = collapse_certificate(sub, ssp, sloop, budget, None, deadline)
    if cert is None:
        return None
    moves = tuple(Move.insert(m.position, near[m.point]) if m.kind == "insert" else m for m in cert.moves)
    full = HomotopyCertificate(loop, moves, loop.with_points((loop.start,)))
    return full if full.verify() else None


# -- group models

@dataclass
class GroupModel:
    """The edge-path group at one scale point, as far as it could be identified.

    ``kind`` is ``trivial``, ``free``, ``abelian``, ``finite`` or ``unknown``.
    Classes are coset indices (finite), lattice-reduced exponent vectors
    (abelian), reduced words in the simplified generators (trivial/free), or
    reduced words in the raw generators (unknown; an over-splitting
    approximation).
    """

    pres: Presentation
    kind: str
    tietze: groups.TietzeResult | None = None
    table: groups.CosetTable | None = None
    note: str = ""
    lattice: list | None = None

    @property
    def exact(self) -> bool:
        return self.kind != "unknown"

    @property
    def order(self) -> int | None:
        if self.kind == "trivial":
            return 1
        if self.kind == "finite":
            return self.table.order
        return None

    def identity(self):
        if self.kind == "finite":
            return 0
        if self.kind == "abelian":
            return (0,) * len(self.tietze.kept)
        return ()

    def image(self, word: Sequence[int]) -> tuple[int, ...]:
        if self.tietze is None:
            return groups.reduce_word(word)
        return self.tietze.image(word)

    def act(self, cls, word: Sequence[int]):
        """Class of (element ``cls``) * ``word``."""
        if not word:
            return cls
        if self.kind == "finite":
            return self.table.trace(cls, self.image(word))
        if self.kind == "trivial":
            return ()
        if self.kind == "abelian":
            v = list(cls)
            pos = self._pos
            for g in self.image(word):
                v[pos[abs(g)]] += 1 if g > 0 else -1
            return groups.lattice_reduce(v, self.lattice)
        return groups.multiply_reduced(tuple(cls), groups.reduce_word(self.image(word)))

    @property
    def _pos(self) -> dict[int, int]:
        return {g: t for t, g in enumerate(self.tietze.kept)}

    def edge_step(self, cls, u: int, v: int):
        g = self.pres.edge_letter(u, v)
        return self.act(cls, (g,)) if g else cls

    def is_identity(self, word: Sequence[int]) -> bool | None:
        if not self.exact:
            w = groups.reduce_word(word)
            return True if not w else None
        return self.act(self.identity(), word) == self.identity()

    def separating_certificate(self, loop: tuple[int, ...]) -> PermutationCertificate | None:
        word = path_word(self.pres, loop)
        if self.kind == "finite":
            degree = self.table.order
            base = {g: self.table.permutation(g) for g in self.table.gens}
        elif self.kind == "free":
            img = self.image(word)
            if not img:
                return None
            base = groups.separating_permutations(img)
            degree = len(img) + 1
        elif self.kind == "abelian":
            table = self._abelian_quotient(self.image(word))
            if table is None:
                return None
            degree = table.order
            base = {g: table.permutation(g) for g in table.gens}
        else:
            return None
        perms = {}
        for g in range(1, self.pres.ngens + 1):
            img = self.tietze.images[g]
            p = groups.perm_compose_word(base, img, degree)
            if p != list(range(degree)):
                perms[g] = p
        cert = PermutationCertificate(self.pres.scale, loop, degree, perms)
        return cert

    def _abelian_quotient(self, img, max_rows: int = 20000) -> groups.CosetTable | None:
        """Finite quotient (extra relators g^N) in which ``img`` stays nontrivial."""
        kept = self.tietze.kept
        rels = list(self.tietze.relators)
        full = len(self.lattice) == len(kept)
        for N in ([0] if full else []) + [2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29, 31, 32]:
            extra = [(g,) * N for g in kept] if N else []
            table = groups.enumerate_cosets(kept, rels + extra, max_rows)
            if table is not None and table.trace(0, img) != 0:
                return table
        return None

    def lifted_complex(self, points: Sequence[int], budget: Budget):
        """Finite piece of the cover containing the lift of ``points``.

        Returns ``(complex, start id)`` or None past the vertex budget.
        """
        pres = self.pres
        space = pres.space
        cx = RipsComplex.of(space, pres.scale)
        root = (pres.basepoint, self.identity())
        if self.kind == "trivial":
            return _base_complex(space, cx, pres.basepoint), 0
        # hop radius: how far the lift wanders, plus room for triangles
        need = set()
        c = self.identity()
        for u, v in zip(points, points[1:]):
            c = self.edge_step(c, u, v) if u != v else c
            need.add((v, c))
        ids = {root: 0}
        verts = [root]
        parent = [-1]
        queue = deque([0])
        limit = budget.max_cover_vertices
        while queue:
            x = queue.popleft()
            b, c = verts[x]
            for u in cx.neighbors[b]:
                key = (u, self.edge_step(c, b, u))
                if key not in ids:
                    if len(verts) >= limit:
                        queue.clear()
                        break
                    ids[key] = len(verts)
                    verts.append(key)
                    parent.append(x)
                    queue.append(ids[key])
            if need and all(k in ids for k in need) and self.kind != "finite":
                # grow one more BFS layer past the loop, then stop
                depth_goal = _depth(parent, max(ids[k] for k in need)) + 2
                if _depth(parent, x) >= depth_goal:
                    break
        if not all(k in ids for k in need):
            return None
        proj = [v for v, _ in verts]
        nbr: list[dict[int, int]] = []
        for b, c in verts:
            row = {}
            for u in cx.neighbors[b]:
                y = ids.get((u, self.edge_step(c, b, u)))
                if y is not None:
                    row[u] = y
            nbr.append(row)
        return _Complex(proj, nbr, parent), 0


def _depth(parent: list[int], x: int) -> int:
    d = 0
    while parent[x] >= 0:
        x = parent[x]
        d += 1
    return d


def analyze_group(space: FiniteMetricSpace, sp: ScalePoint, basepoint: int | None = None,
                  budget: Budget | None = None) -> GroupModel:
    budget = budget or Budget()
    bp = space.basepoint if basepoint is None else basepoint
    key = ("group", sp, bp, budget.max_coset_rows, budget.max_triangles)
    model = space._cache.get(key)
    if model is not None:
        return model
    pres = presentation(space, sp, bp, partial=True)
    if RipsComplex.of(space, sp).triangle_count() > budget.max_triangles:
        model = GroupModel(pres, "unknown", note="too many triangles for simplification")
    else:
        try:
            tz = groups.tietze(pres.ngens, pres.relators)
        except groups.GroupBudgetError as exc:
            model = GroupModel(pres, "unknown", note=str(exc))
        else:
            if tz.is_trivial:
                model = GroupModel(pres, "trivial", tz)
            elif tz.is_free:
                model = GroupModel(pres, "free", tz, note=f"free of rank {len(tz.kept)}")
            elif ((lat := groups.abelian_lattice(tz.kept, tz.relators)) is not None
                  and not _finite_index(lat, len(tz.kept), budget.max_coset_rows)):
                model = GroupModel(pres, "abelian", tz, note=f"abelian of rank {len(tz.kept) - len(lat)}"
                                   f" on {len(tz.kept)} generators", lattice=lat)
            else:
                table = groups.enumerate_cosets(tz.kept, tz.relators, budget.max_coset_rows)
                if table is None:
                    model = GroupModel(pres, "unknown", tz, note="coset enumeration did not close")
                elif table.order == 1:
                    model = GroupModel(pres, "trivial", tz)
                else:
                    model = GroupModel(pres, "finite", tz, table, note=f"order {table.order}")
    space._cache[key] = model
    return model


def _finite_index(lattice: list, rank: int, limit: int) -> bool:
    """Full-rank relation lattice with index small enough to enumerate."""
    if len(lattice) < rank:
        return False
    index = 1
    for r in lattice:
        index *= next(a for a in r if a)
    return abs(index) <= limit


def coset_null_test(pres: Presentation, word: Sequence[int], budget: Budget | None = None) -> bool | None:
    """Whether ``word`` is trivial, when that is decidable within budget."""
    model = analyze_group(pres.space, pres.scale, pres.basepoint, budget)
    if not model.exact:
        return None
    return model.is_identity(word)


# -- breadth-first search over reduced chains

def bfs_null_search(space: FiniteMetricSpace, sp: ScalePoint, loop, budget: Budget | None = None,
                    stats: dict | None = None, deadline=None) -> HomotopyCertificate | None:
    """Search basic moves (each followed by free reduction) for a path to the constant loop."""
    budget = budget or Budget()
    c = loop_at(space, sp, loop)
    cx = RipsComplex.of(space, sp)
    nb = [set(row) for row in cx.neighbors]
    adj = cx.adj
    cap = budget.max_chain_length
    start = reduced_points(c.points)
    goal = (c.start,)
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    longest = len(start)
    found = start == goal
    while queue and not found:
        if len(parent) >= budget.max_states or _expired(deadline):
            break
        s = queue.popleft()
        L = len(s)
        nxt: list[tuple[tuple, Move]] = []
        for i in range(1, L - 1):
            if adj[s[i - 1], s[i + 1]] or s[i - 1] == s[i + 1]:
                nxt.append((reduced_points(s[:i] + s[i + 1:]), Move.remove(i)))
        if L + 1 <= cap:
            for i in range(1, L):
                for x in sorted(nb[s[i - 1]] & nb[s[i]]):
                    nxt.append((reduced_points(s[:i] + (x,) + s[i:]), Move.insert(i, x)))
        for t, m in nxt:
            if t in parent:
                continue
            parent[t] = (s, m)
            longest = max(longest, len(t))
            if t == goal:
                found = True
                break
            queue.append(t)
    if stats is not None:
        stats.update(states=len(parent), max_length=longest)
    if not found:
        return None
    path = []
    t = goal
    while parent[t] is not None:
        s, m = parent[t]
        path.append(m)
        t = s
    path.reverse()
    rec = MoveRecorder(space, c.scale, c.points)
    rec.free_reduce()
    for m in path:
        if m.kind == "insert":
            rec.insert(m.position, m.point)
        else:
            rec.remove(m.position)
        rec.free_reduce()
    return rec.certificate(c)


# ---------------------------------------------------------------- cascade

def _ball_strategy(space, loop: Chain):
    d = space.dist[:, list(set(loop.points))].max(axis=1)
    center = int(np.argmin(d))
    if d[center] < loop.scale:
        return ball_loop_certificate(space, None, loop, center)
    return None


def decide_null(space: FiniteMetricSpace, sp: ScalePoint, loop, budget: Budget | None = None,
                concurrent: bool = False) -> Decision:
    """Three-valued nullity verdict with a certificate.

    Strategies, in order: free reduction and greedy shortening, contraction
    inside a ball, rational cohomology, triangle collapse, group
    identification (simplification plus coset enumeration), breadth-first
    search.  In concurrent mode the later strategies run in parallel and the
    first conclusive one in that same order is returned.
    """
    budget = budget or Budget()
    deadline = budget.deadline()
    c = loop_at(space, sp, loop)
    report: dict = {"strategies": []}

    def null(cert_tail: HomotopyCertificate | None, prefix: MoveRecorder, name: str) -> Decision:
        moves = tuple(prefix.moves) + (cert_tail.moves if cert_tail else ())
        cert = HomotopyCertificate(c, moves, c.with_points((c.start,)))
        cert.replay()
        return Decision(NULL, cert, name, sp, report)

    rec = MoveRecorder(space, c.scale, c.points)
    shorten(rec)
    report["strategies"].append("reduce")
    if len(rec.points) == 1:
        return null(None, rec, "reduce")
    short = c.with_points(rec.points)

    report["strategies"].append("ball")
    cert = _ball_strategy(space, short)
    if cert is not None:
        return null(cert, rec, "ball")

    def s_h1():
        w = h1_witness(space, sp, c)
        return Decision(NONNULL, w, "h1", sp, report) if w else None

    def s_collapse():
        eps = short.scale
        for r in (eps / 4, eps / 2):
            t = local_collapse_certificate(space, short, r, budget, deadline)
            if t:
                return null(t, rec, "collapse")
        t = collapse_certificate(space, sp, short, budget, None, deadline)
        if t is None:
            t = local_collapse_certificate(space, short, eps, budget, deadline)
        return null(t, rec, "collapse") if t else None

    def s_group(rep):
        model = analyze_group(space, sp, c.start, budget)
        rep["group"] = model.kind + (f" ({model.note})" if model.note else "")
        if not model.exact:
            return None
        word = path_word(model.pres, c.points)
        if model.is_identity(word):
            t = collapse_certificate(space, sp, short, budget, model, deadline)
            return null(t, rec, "group") if t else None
        pc = model.separating_certificate(c.points)
        if pc is not None and pc.verify(space):
            return Decision(NONNULL, pc, "group", sp, report)
        return None

    def s_bfs(rep):
        stats: dict = {}
        t = bfs_null_search(space, sp, short, budget, stats, deadline)
        rep["bfs"] = stats
        return null(t, rec, "bfs") if t else None

    stages = [("h1", lambda rep: s_h1()), ("collapse", lambda rep: s_collapse()),
              ("group", s_group), ("bfs", s_bfs)]
    # per-stage report fragments, merged in cascade order so that the
    # report does not depend on concurrency
    reps: dict[str, dict] = {n: {} for n, _ in stages}
    results: dict[str, Decision | None] = {}
    if concurrent:
        with ThreadPoolExecutor(max_workers=len(stages)) as pool:
            futs = {n: pool.submit(_guarded, f, reps[n]) for n, f in stages}
            for n, _ in stages:
                results[n] = futs[n].result()
    for n, f in stages:
        if _expired(deadline) and n not in results:
            report["timeout"] = True
            break
        report["strategies"].append(n)
        if not concurrent:
            results[n] = _guarded(f, reps[n])
        report.update(reps[n])
        if results.get(n) is not None:
            return results[n]
    report["reduced_length"] = len(short.points)
    return Decision(INCONCLUSIVE, None, "", sp, report)


def _guarded(f, *args):
    try:
        return f(*args)
    except (groups.GroupBudgetError, ArithmeticError, RecursionError):
        return None
