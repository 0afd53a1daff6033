"""Degree-one persistence of the Rips filtration over the integers.

The engine runs a cohomology reduction (columns are edge coboundaries,
processed in reverse filtration order) with fraction-free integer column
operations, so the resulting pairing is the pairing over the rationals.
Coefficients live in int64; growth past ``COEF_LIMIT`` aborts with
``ArithmeticError`` rather than silently wrapping.

Simplices are keyed by ``rank * NT + combinatorial_index`` where ``rank`` is
the position of the simplex diameter in the scale set.  Within one diameter
the combinatorial index breaks ties, giving a total filtration order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit, types
from numba.typed import Dict, List

COEF_LIMIT = 1 << 40


@njit(cache=True)
def _binom2(x):
    return x * (x - 1) // 2


@njit(cache=True)
def _binom3(x):
    return x * (x - 1) * (x - 2) // 6


@njit(cache=True)
def _tri_index(a, b, c):
    return _binom3(c) + _binom2(b) + a


@njit(cache=True)
def _coboundary(drank, thr, i, j, nt, keys, coefs):
    """Fill keys/coefs with the coboundary of edge (i, j), i < j; return size."""
    n = drank.shape[0]
    dij = drank[i, j]
    m = 0
    for k in range(n):
        if k == i or k == j:
            continue
        d = dij
        if drank[i, k] > d:
            d = drank[i, k]
        if drank[j, k] > d:
            d = drank[j, k]
        if d > thr:
            continue
        if k < i:
            idx = _tri_index(k, i, j)
            s = 1
        elif k < j:
            idx = _tri_index(i, k, j)
            s = -1
        else:
            idx = _tri_index(i, j, k)
            s = 1
        keys[m] = d * nt + idx
        coefs[m] = s
        m += 1
    return m


@njit(cache=True)
def _gcd(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@njit(cache=True)
def _reduce_columns(drank, thr, ei, ej, skip, nt):
    m = ei.shape[0]
    n = drank.shape[0]
    keys = np.empty(n, dtype=np.int64)
    coefs = np.empty(n, dtype=np.int64)

    pivot_col = Dict.empty(key_type=types.int64, value_type=types.int64)
    pivot_coef = np.zeros(m, dtype=np.int64)
    # stored reduction columns; raw columns (V = e) are not stored
    v_start = np.full(m, -1, dtype=np.int64)
    v_len = np.zeros(m, dtype=np.int64)
    v_edge = List.empty_list(types.int64)
    v_coef = List.empty_list(types.int64)

    pair_edge = List.empty_list(types.int64)
    pair_tri = List.empty_list(types.int64)
    status = 0

    for pos in range(m - 1, -1, -1):
        if skip[pos]:
            continue
        size = _coboundary(drank, thr, ei[pos], ej[pos], nt, keys, coefs)
        if size == 0:
            continue
        # apparent-pivot shortcut: raw column already reduced
        lo = 0
        for t in range(1, size):
            if keys[t] < keys[lo]:
                lo = t
        if keys[lo] not in pivot_col:
            pivot_col[keys[lo]] = pos
            pivot_coef[pos] = coefs[lo]
            pair_edge.append(pos)
            pair_tri.append(keys[lo])
            continue

        work = Dict.empty(key_type=types.int64, value_type=types.int64)
        heap = List.empty_list(types.int64)
        for t in range(size):
            work[keys[t]] = coefs[t]
            heap.append(keys[t])
        # heapify
        _heapify(heap)
        vw = Dict.empty(key_type=types.int64, value_type=types.int64)
        vw[pos] = 1
        piv = -1
        while True:
            piv = -1
            while len(heap) > 0:
                top = heap[0]
                c = work.get(top, 0)
                if c == 0:
                    _heappop(heap)
                    if top in work:
                        del work[top]
                    continue
                piv = top
                break
            if piv < 0:
                break
            if piv not in pivot_col:
                break
            other = pivot_col[piv]
            a = work[piv]
            b = pivot_coef[other]
            if a % b == 0:
                scale = 1
                factor = a // b
            else:
                scale = b
                factor = a
            if scale != 1:
                for k2 in work:
                    work[k2] = work[k2] * scale
                for k2 in vw:
                    vw[k2] = vw[k2] * scale
            # subtract factor * column(other)
            if v_start[other] < 0:
                size2 = _coboundary(drank, thr, ei[other], ej[other], nt, keys, coefs)
                for t in range(size2):
                    kk = keys[t]
                    if kk in work:
                        work[kk] = work[kk] - factor * coefs[t]
                    else:
                        work[kk] = -factor * coefs[t]
                        _heappush(heap, kk)
                vw[other] = vw.get(other, 0) - factor
            else:
                s0 = v_start[other]
                for q in range(s0, s0 + v_len[other]):
                    eq = v_edge[q]
                    cq = v_coef[q]
                    size2 = _coboundary(drank, thr, ei[eq], ej[eq], nt, keys, coefs)
                    for t in range(size2):
                        kk = keys[t]
                        if kk in work:
                            work[kk] = work[kk] - factor * cq * coefs[t]
                        else:
                            work[kk] = -factor * cq * coefs[t]
                            _heappush(heap, kk)
                    vw[eq] = vw.get(eq, 0) - factor * cq
            # normalise by the content of the reduction column
            g = 0
            big = 0
            for k2 in vw:
                c = vw[k2]
                if c != 0:
                    g = _gcd(g, c)
                    if abs(c) > big:
                        big = abs(c)
            if g > 1:
                for k2 in vw:
                    vw[k2] = vw[k2] // g
                for k2 in work:
                    work[k2] = work[k2] // g
                big = big // g
            if big > COEF_LIMIT:
                status = 1
                break
        if status != 0:
            break
        if piv < 0:
            continue
        pivot_col[piv] = pos
        pivot_coef[pos] = work[piv]
        pair_edge.append(pos)
        pair_tri.append(piv)
        v_start[pos] = len(v_edge)
        cnt = 0
        for k2 in vw:
            if vw[k2] != 0:
                v_edge.append(k2)
                v_coef.append(vw[k2])
                cnt += 1
        v_len[pos] = cnt

    pe = np.empty(len(pair_edge), dtype=np.int64)
    pt = np.empty(len(pair_edge), dtype=np.int64)
    for t in range(len(pair_edge)):
        pe[t] = pair_edge[t]
        pt[t] = pair_tri[t]
    ve = np.empty(len(v_edge), dtype=np.int64)
    vc = np.empty(len(v_edge), dtype=np.int64)
    for t in range(len(v_edge)):
        ve[t] = v_edge[t]
        vc[t] = v_coef[t]
    return status, pe, pt, v_start, v_len, ve, vc


@njit(cache=True)
def _heapify(h):
    n = len(h)
    for i in range(n // 2 - 1, -1, -1):
        _sift_down(h, i)


@njit(cache=True)
def _sift_down(h, i):
    n = len(h)
    while True:
        l = 2 * i + 1
        r = l + 1
        s = i
        if l < n and h[l] < h[s]:
            s = l
        if r < n and h[r] < h[s]:
            s = r
        if s == i:
            return
        h[i], h[s] = h[s], h[i]
        i = s


@njit(cache=True)
def _heappush(h, x):
    h.append(x)
    i = len(h) - 1
    while i > 0:
        p = (i - 1) // 2
        if h[p] <= h[i]:
            break
        h[p], h[i] = h[i], h[p]
        i = p


@njit(cache=True)
def _heappop(h):
    last = h.pop()
    if len(h) == 0:
        return last
    top = h[0]
    h[0] = last
    _sift_down(h, 0)
    return top


def rank_matrix(dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct off-diagonal values and the matrix of their ranks (diagonal -1)."""
    n = dist.shape[0]
    iu = np.triu_indices(n, 1)
    values = np.unique(dist[iu])
    drank = np.full((n, n), -1, dtype=np.int64)
    if n > 1:
        r = np.searchsorted(values, dist[iu])
        drank[iu] = r
        drank[(iu[1], iu[0])] = r
    return values, drank


def enclosing_rank(drank: np.ndarray) -> int:
    """Rank of the enclosing radius: above it the Rips complex is a cone."""
    if drank.shape[0] < 2:
        return -1
    return int(drank.max(axis=1).min())


@dataclass
class H1Persistence:
    """Degree-one pairing of the Rips filtration of a finite space.

    ``edges`` is the filtration-ordered edge list ``(i, j, rank)``; each pair
    is ``(edge position, triangle key)``.  ``nt`` is the triangle key stride.
    """

    values: np.ndarray
    drank: np.ndarray
    threshold: int
    edges: np.ndarray
    nt: int
    pair_edge: np.ndarray
    pair_tri: np.ndarray
    v_start: np.ndarray
    v_len: np.ndarray
    v_edge: np.ndarray
    v_coef: np.ndarray
    _edge_pos: dict = field(default_factory=dict, repr=False)

    def tri_rank(self, key: int) -> int:
        return int(key) // self.nt

    def essential_pairs(self) -> list[tuple[int, int]]:
        """Pairs with positive persistence, as (edge position, triangle key)."""
        out = []
        for p, t in zip(self.pair_edge.tolist(), self.pair_tri.tolist()):
            if self.edges[p, 2] < t // self.nt:
                out.append((p, t))
        return out

    def death_ranks(self) -> dict[int, int]:
        """Map death rank -> number of classes dying crossing that distance."""
        out: dict[int, int] = {}
        for _, t in self.essential_pairs():
            r = t // self.nt
            out[r] = out.get(r, 0) + 1
        return dict(sorted(out.items()))

    def cocycle(self, pos: int) -> dict[tuple[int, int], int]:
        """Integer cochain (edge -> value) of the reduced column of ``pos``."""
        if self.v_start[pos] < 0:
            cols = [(pos, 1)]
        else:
            s = self.v_start[pos]
            cols = list(zip(self.v_edge[s:s + self.v_len[pos]].tolist(),
                            self.v_coef[s:s + self.v_len[pos]].tolist()))
        out = {}
        for q, c in cols:
            i, j = int(self.edges[q, 0]), int(self.edges[q, 1])
            out[(i, j)] = out.get((i, j), 0) + c
        return {k: v for k, v in out.items() if v}

    def edge_position(self, i: int, j: int) -> int:
        if not self._edge_pos:
            self._edge_pos = {(int(a), int(b)): p for p, (a, b, _) in enumerate(self.edges.tolist())}
        if i > j:
            i, j = j, i
        return self._edge_pos[(i, j)]


def _kruskal_mask(n: int, edges: np.ndarray) -> np.ndarray:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    mask = np.zeros(len(edges), dtype=np.bool_)
    for p, (i, j, _) in enumerate(edges.tolist()):
        a, b = find(i), find(j)
        if a != b:
            parent[a] = b
            mask[p] = True
    return mask


def h1_persistence(dist: np.ndarray, threshold: int | None = None) -> H1Persistence:
    """Run the integer cohomology reduction on the Rips filtration of ``dist``."""
    dist = np.asarray(dist, dtype=np.float64)
    values, drank = rank_matrix(dist)
    n = dist.shape[0]
    thr = enclosing_rank(drank) if threshold is None else threshold
    iu = np.triu_indices(n, 1)
    r = drank[iu]
    keep = r <= thr
    ii, jj, rr = iu[0][keep], iu[1][keep], r[keep]
    idx = jj * (jj - 1) // 2 + ii
    order = np.lexsort((idx, rr))
    edges = np.stack([ii[order], jj[order], rr[order]], axis=1).astype(np.int64)
    nt = max(1, n * (n - 1) * (n - 2) // 6)
    skip = _kruskal_mask(n, edges)
    status, pe, pt, vs, vl, ve, vc = _reduce_columns(
        drank, thr, edges[:, 0].copy(), edges[:, 1].copy(), skip, nt)
    if status:
        raise ArithmeticError("integer coefficient growth exceeded the int64 guard")
    return H1Persistence(values, drank, thr, edges, nt, pe, pt, vs, vl, ve, vc)


def tri_vertices(key: int, nt: int) -> tuple[int, int, int]:
    """Inverse of the combinatorial triangle index (a < b < c)."""
    idx = int(key) % nt
    c = 2
    while (c + 1) * c * (c - 1) // 6 <= idx:
        c += 1
    idx -= c * (c - 1) * (c - 2) // 6
    b = 1
    while (b + 1) * b // 2 <= idx:
        b += 1
    return idx - b * (b - 1) // 2, b, c


def alive_pairs(ph: H1Persistence, max_rank: int) -> list[tuple[int, int]]:
    """Classes alive in the complex with edges of rank <= max_rank."""
    out = []
    for p, t in ph.essential_pairs():
        if ph.edges[p, 2] <= max_rank < t // ph.nt:
            out.append((p, t))
    return out


def restricted_cocycle(ph: H1Persistence, pos: int, max_rank: int) -> dict[tuple[int, int], int]:
    """Cocycle of pair ``pos`` restricted to edges of rank <= max_rank.

    The coboundary of the full cocycle only meets triangles at or after the
    death triangle, so the restriction is a cocycle before the death scale.
    """
    return {e: c for e, c in ph.cocycle(pos).items() if ph.drank[e] <= max_rank}


def witness_cycle(ph: H1Persistence, tri_key: int) -> dict[tuple[int, int], int]:
    """Integer cycle born at the partner edge of ``tri_key`` and killed by it.

    Lazy homology reduction of the triangle boundary against the boundaries
    of earlier death triangles.  The result has its last edge at the birth
    edge, so it lives strictly before the death scale, and it is a rational
    multiple of a boundary once the death triangle appears.
    """
    partner = {int(e): int(t) for e, t in zip(ph.pair_edge.tolist(), ph.pair_tri.tolist())}
    memo: dict[int, dict[int, int]] = {}

    def boundary(t):
        a, b, c = tri_vertices(t, ph.nt)
        return {ph.edge_position(b, c): 1, ph.edge_position(a, c): -1, ph.edge_position(a, b): 1}

    stack = [int(tri_key)]
    while stack:
        t = stack[-1]
        if t in memo:
            stack.pop()
            continue
        col = boundary(t)
        need = None
        while col:
            low = max(col)
            t2 = partner.get(low)
            if t2 is None or t2 == t:
                break
            if t2 not in memo:
                need = t2
                break
            other = memo[t2]
            a, b = col[low], other[max(other)]
            g = np.gcd(a, b)
            sa, sb = b // g, a // g
            col = {k: v * sa for k, v in col.items()}
            for k, v in other.items():
                x = col.get(k, 0) - sb * v
                if x:
                    col[k] = x
                else:
                    col.pop(k, None)
            g = int(np.gcd.reduce(np.fromiter(col.values(), dtype=np.int64))) if col else 1
            if g > 1:
                col = {k: v // g for k, v in col.items()}
            if col and max(abs(v) for v in col.values()) > COEF_LIMIT:
                raise ArithmeticError("witness coefficients exceeded the int64 guard")
        if need is not None:
            stack.append(need)
            continue
        memo[t] = col
        stack.pop()
    out = {}
    for p, c in memo[int(tri_key)].items():
        out[(int(ph.edges[p, 0]), int(ph.edges[p, 1]))] = c
    return out


@njit(cache=True)
def _cocycle_defects(phi, adj):
    """Number of triangles of ``adj`` on which antisymmetric ``phi`` does not vanish."""
    n = adj.shape[0]
    bad = 0
    for a in range(n):
        for b in range(a + 1, n):
            if not adj[a, b]:
                continue
            for c in range(b + 1, n):
                if adj[a, c] and adj[b, c]:
                    if phi[a, b] + phi[b, c] + phi[c, a] != 0:
                        bad += 1
    return bad


def cocycle_defects(phi: dict[tuple[int, int], int], adj: np.ndarray) -> int:
    """Exact check that ``phi`` (on ordered pairs i < j) sums to zero on every triangle."""
    n = adj.shape[0]
    mat = np.zeros((n, n), dtype=np.int64)
    for (i, j), c in phi.items():
        if not adj[i, j]:
            return -1
        mat[i, j] = c
        mat[j, i] = -c
    return int(_cocycle_defects(mat, adj))
