"""Finite metric spaces and their generators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

MAX_POINTS = 4096
DECIMALS = 12
# slack for the triangle inequality after rounding to DECIMALS digits
TRIANGLE_TOL = 1e-9


class MetricError(ValueError):
    """Raised when a matrix is not a metric; ``violations`` lists every failure found."""

    def __init__(self, message: str, violations: Sequence["Violation"] = ()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class Violation:
    kind: str  # "diagonal" | "symmetry" | "positivity" | "triangle"
    indices: tuple[int, ...]
    detail: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "indices": list(self.indices), "detail": self.detail}


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """An immutable finite metric space with a base point.

    ``values`` is the sorted list of distinct pairwise distances and ``drank``
    the matrix of their ranks (``-1`` on the diagonal); every scale-dependent
    computation works with ranks, never with float comparisons.
    """

    dist: np.ndarray
    labels: tuple[str, ...] | None = None
    basepoint: int = 0
    values: np.ndarray = field(init=False, repr=False)
    drank: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        n = d.shape[0]
        iu = np.triu_indices(n, 1)
        values = np.unique(d[iu])
        drank = np.full((n, n), -1, dtype=np.int64)
        if n > 1:
            r = np.searchsorted(values, d[iu])
            drank[iu] = r
            drank[(iu[1], iu[0])] = r
        values.setflags(write=False)
        drank.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "drank", drank)
        if not 0 <= self.basepoint < max(n, 1):
            raise ValueError(f"basepoint {self.basepoint} out of range for {n} points")

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self) -> int:
        return self.n

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    @property
    def diameter(self) -> float:
        return float(self.values[-1]) if len(self.values) else 0.0

    def with_basepoint(self, basepoint: int) -> "FiniteMetricSpace":
        return FiniteMetricSpace(self.dist, self.labels, basepoint)

    def permuted(self, perm: Sequence[int]) -> "FiniteMetricSpace":
        """Relabel so that new point ``i`` is old point ``perm[i]``."""
        p = np.asarray(perm)
        labels = tuple(self.labels[i] for i in p) if self.labels else None
        inv = int(np.argsort(p)[self.basepoint])
        return FiniteMetricSpace(self.dist[np.ix_(p, p)], labels, inv)

    def to_json(self) -> dict:
        doc = {"kind": "matrix", "matrix": self.dist.tolist(), "basepoint": self.basepoint}
        if self.labels:
            doc["labels"] = list(self.labels)
        return doc


def _round(matrix) -> np.ndarray:
    return np.round(np.asarray(matrix, dtype=np.float64), DECIMALS)


def check_metric(matrix, limit: int = 1000) -> list[Violation]:
    """Return every violated metric condition (up to ``limit`` triples)."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {m.shape}")
    if np.isnan(m).any():
        i, j = np.argwhere(np.isnan(m))[0]
        raise ValueError(f"NaN entry at ({i}, {j})")
    if (m < 0).any():
        i, j = np.argwhere(m < 0)[0]
        raise ValueError(f"negative entry at ({i}, {j})")
    m = _round(m)
    n = m.shape[0]
    out: list[Violation] = []
    for i in np.flatnonzero(np.diag(m) != 0):
        out.append(Violation("diagonal", (int(i),), f"d[{i}][{i}] = {m[i, i]}"))
    for i, j in np.argwhere(np.triu(m != m.T, 1)):
        out.append(Violation("symmetry", (int(i), int(j)), f"{m[i, j]} != {m[j, i]}"))
    off = ~np.eye(n, dtype=bool)
    for i, j in np.argwhere(np.triu((m <= 0) & off, 1)):
        out.append(Violation("positivity", (int(i), int(j)), "distinct points at distance 0"))
    if n >= 3:
        sym = np.minimum(m, m.T)
        tol = TRIANGLE_TOL * max(1.0, float(sym.max()))
        found = 0
        for j in range(n):
            bad = sym > sym[:, j, None] + sym[None, j, :] + tol
            if bad.any():
                for i, k in np.argwhere(bad):
                    if i < k and i != j and k != j:
                        out.append(Violation(
                            "triangle", (int(i), int(j), int(k)),
                            f"d({i},{k})={sym[i, k]} > d({i},{j})+d({j},{k})="
                            f"{sym[i, j] + sym[j, k]}"))
                        found += 1
                        if found >= limit:
                            return out
    return out


def validate_metric(matrix, labels: Sequence[str] | None = None, basepoint: int = 0,
                    max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """Build a space from a matrix, raising ``MetricError`` with all violations."""
    violations = check_metric(matrix)
    if violations:
        raise MetricError(f"{len(violations)} metric violation(s)", violations)
    m = _round(matrix)
    if m.shape[0] > max_points:
        raise ValueError(f"{m.shape[0]} points exceeds the size cap {max_points}")
    if labels is not None and len(labels) != m.shape[0]:
        raise ValueError("labels length does not match matrix size")
    return FiniteMetricSpace(m, tuple(labels) if labels is not None else None, basepoint)


def _trusted(matrix, labels=None, basepoint=0, max_points=MAX_POINTS) -> FiniteMetricSpace:
    m = _round(matrix)
    if m.shape[0] > max_points:
        raise ValueError(f"{m.shape[0]} points exceeds the size cap {max_points}")
    return FiniteMetricSpace(m, labels, basepoint)


def point() -> FiniteMetricSpace:
    return _trusted(np.zeros((1, 1)))


def sample_circle(r: float, n: int, max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """``n`` evenly spaced points on the geodesic circle of circumference ``r``."""
    if n < 3:
        raise ValueError("a circle sample needs n >= 3")
    if r <= 0:
        raise ValueError("circumference must be positive")
    i = np.arange(n)
    k = np.abs(i[:, None] - i[None, :])
    k = np.minimum(k, n - k)
    return _trusted((r / n) * k, max_points=max_points)


def product_space(a: FiniteMetricSpace, b: FiniteMetricSpace,
                  max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """Euclidean (l2) product; point ``(i, j)`` has index ``i * b.n + j``."""
    if a.n * b.n > max_points:
        raise ValueError(f"product of {a.n} x {b.n} points exceeds the size cap {max_points}")
    d = np.sqrt(a.dist[:, None, :, None] ** 2 + b.dist[None, :, None, :] ** 2)
    d = d.reshape(a.n * b.n, a.n * b.n)
    labels = None
    if a.labels or b.labels:
        la = a.labels or tuple(map(str, range(a.n)))
        lb = b.labels or tuple(map(str, range(b.n)))
        labels = tuple(f"({x},{y})" for x in la for y in lb)
    return _trusted(d, labels, a.basepoint * b.n + b.basepoint, max_points)


def wedge(a: FiniteMetricSpace, b: FiniteMetricSpace, a0: int | None = None,
          b0: int | None = None, max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """Glue ``a0 ~ b0``.  The glued point is index 0, then the rest of A, then the rest of B."""
    a0 = a.basepoint if a0 is None else a0
    b0 = b.basepoint if b0 is None else b0
    if not (0 <= a0 < a.n and 0 <= b0 < b.n):
        raise IndexError("wedge point index out of range")
    ra = [a0] + [i for i in range(a.n) if i != a0]
    rb = [j for j in range(b.n) if j != b0]
    n = a.n + b.n - 1
    if n > max_points:
        raise ValueError(f"wedge of {n} points exceeds the size cap {max_points}")
    d = np.zeros((n, n))
    pa = np.array(ra)
    d[:a.n, :a.n] = a.dist[np.ix_(pa, pa)]
    if rb:
        pb = np.array([b0] + rb)
        db = b.dist[np.ix_(pb, pb)]
        d[a.n:, a.n:] = db[1:, 1:]
        d[0, a.n:] = db[0, 1:]
        d[a.n:, 0] = db[1:, 0]
        cross = a.dist[pa, a0][1:, None] + b.dist[b0, np.array(rb)][None, :]
        d[1:a.n, a.n:] = cross
        d[a.n:, 1:a.n] = cross.T
    return _trusted(d, None, 0, max_points)


def hawaiian_truncation(k: int, n_per_circle: int, max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """Wedge of circle samples of circumference 3/2, 3/4, ..., 3/2**k at one point."""
    if k < 1:
        raise ValueError("need k >= 1")
    space = sample_circle(1.5, n_per_circle, max_points)
    for m in range(2, k + 1):
        space = wedge(space, sample_circle(3 / 2 ** m, n_per_circle, max_points), 0, 0, max_points)
    return space


_RP2_TRIANGLES = ((0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1),
                  (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3))


def projective_plane() -> FiniteMetricSpace:
    """Hop metric on the barycentric subdivision of the 6-vertex projective plane.

    Between hop distances 1 and 2 the Rips complex is the subdivided surface,
    so the group there has order two.  Points: 6 vertices, then 15 edge
    midpoints, then 10 face centres.
    """
    edges = sorted({tuple(sorted(e)) for t in _RP2_TRIANGLES for e in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2]))})
    eid = {e: 6 + i for i, e in enumerate(edges)}
    n = 6 + len(edges) + len(_RP2_TRIANGLES)
    links = []
    for (a, b), m in eid.items():
        links += [(a, m), (b, m)]
    for i, t in enumerate(_RP2_TRIANGLES):
        f = 6 + len(edges) + i
        links += [(v, f) for v in t]
        links += [(eid[tuple(sorted(e))], f) for e in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2]))]
    hops = np.full((n, n), np.inf)
    np.fill_diagonal(hops, 0)
    for a, b in links:
        hops[a, b] = hops[b, a] = 1
    for k in range(n):
        hops = np.minimum(hops, hops[:, k:k + 1] + hops[k:k + 1, :])
    return _trusted(hops)


@dataclass(frozen=True)
class MetricGraph:
    """Undirected graph with positive edge lengths (multi-edges and loops allowed)."""

    vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v), float(w)) for u, v, w in self.edges))
        for u, v, w in self.edges:
            if not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise ValueError(f"edge ({u}, {v}) references a missing vertex")
            if not w > 0 or math.isnan(w):
                raise ValueError(f"edge ({u}, {v}) has non-positive length {w}")

    def to_json(self) -> dict:
        return {"vertices": self.vertices, "edges": [list(e) for e in self.edges]}


def graph_to_space(g: MetricGraph, h: float, max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """Subdivide edges into segments of length <= h; distance is the path metric.

    Points are numbered in traversal order: walking the edge list, a vertex gets
    an index when first met, and subdivision points follow along the edge.
    """
    if h <= 0:
        raise ValueError("mesh must be positive")
    index: dict[int, int] = {}
    rows, cols, lens = [], [], []
    count = 0

    def vid(v):
        nonlocal count
        if v not in index:
            index[v] = count
            count += 1
        return index[v]

    for u, v, w in g.edges:
        k = max(1, math.ceil(w / h - 1e-9))
        if u == v:
            k = max(k, 3)
        seg = w / k
        prev = vid(u)
        for _ in range(k - 1):
            cur = count
            count += 1
            rows.append(prev), cols.append(cur), lens.append(seg)
            prev = cur
        end = vid(v)
        rows.append(prev), cols.append(end), lens.append(seg)
    for v in range(g.vertices):
        vid(v)
    if count > max_points:
        raise ValueError(f"subdivision has {count} points, exceeding the size cap {max_points}")
    adj = coo_matrix((lens, (rows, cols)), shape=(count, count)).tocsr()
    # coo sums duplicates; keep the shortest parallel segment instead
    if len(rows):
        best: dict[tuple[int, int], float] = {}
        for a, b, w in zip(rows, cols, lens):
            key = (min(a, b), max(a, b))
            best[key] = min(best.get(key, math.inf), w)
        r2, c2, w2 = zip(*[(a, b, w) for (a, b), w in best.items()])
        adj = coo_matrix((w2, (r2, c2)), shape=(count, count)).tocsr()
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise ValueError(f"graph is disconnected ({ncomp} components)")
    d = dijkstra(adj, directed=False)
    return _trusted(d, None, 0, max_points)


def space_from_json(doc: dict, max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    """Parse a space document (``kind`` = matrix | graph | generator)."""
    kind = doc.get("kind", "matrix")
    basepoint = int(doc.get("basepoint", 0))
    labels = doc.get("labels")
    if kind == "matrix":
        if "matrix" not in doc:
            raise ValueError("field 'matrix' is required for kind=matrix")
        space = validate_metric(doc["matrix"], labels, basepoint, max_points)
    elif kind == "graph":
        gd = doc.get("graph")
        if not isinstance(gd, dict) or "vertices" not in gd or "edges" not in gd:
            raise ValueError("field 'graph' needs 'vertices' and 'edges'")
        g = MetricGraph(int(gd["vertices"]), tuple(tuple(e) for e in gd["edges"]))
        space = graph_to_space(g, float(doc.get("mesh", gd.get("mesh", 1.0))), max_points)
    elif kind == "generator":
        gen = doc.get("generator")
        if not isinstance(gen, dict) or "name" not in gen:
            raise ValueError("field 'generator' needs 'name'")
        space = generate(gen["name"], gen.get("params", {}), max_points)
    else:
        raise ValueError(f"unknown space kind {kind!r}")
    if kind != "matrix":
        if labels is not None:
            if len(labels) != space.n:
                raise ValueError("labels length does not match point count")
            space = FiniteMetricSpace(space.dist, tuple(labels), space.basepoint)
        if "basepoint" in doc:
            space = space.with_basepoint(basepoint)
    return space


def generate(name: str, params: dict, max_points: int = MAX_POINTS) -> FiniteMetricSpace:
    p = dict(params)
    if name == "circle":
        return sample_circle(float(p.get("r", 3.0)), int(p.get("n", 12)), max_points)
    if name == "hawaiian":
        return hawaiian_truncation(int(p["k"]), int(p.get("n", p.get("n_per_circle", 24))), max_points)
    if name == "torus":
        a = sample_circle(float(p.get("r1", 1.5)), int(p.get("n1", 24)))
        b = sample_circle(float(p.get("r2", 0.75)), int(p.get("n2", 24)))
        return product_space(a, b, max_points)
    if name == "wedge":
        a = sample_circle(float(p.get("r1", 1.0)), int(p.get("n1", 16)))
        b = sample_circle(float(p.get("r2", 2.0)), int(p.get("n2", 16)))
        return wedge(a, b, 0, 0, max_points)
    if name == "point":
        return point()
    if name == "projective-plane":
        return projective_plane()
    if name == "path":
        n = int(p.get("n", 4))
        g = MetricGraph(n, tuple((i, i + 1, float(p.get("length", 1.0))) for i in range(n - 1)))
        return graph_to_space(g, float(p.get("h", p.get("length", 1.0))), max_points)
    raise ValueError(f"unknown generator {name!r}")
