"""Independent brute-force references used to check the library.

Nothing here imports the package's algorithms: ranks use modular
elimination, chains are replayed from scratch, and nullity is searched
over the full move graph.
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np


def distinct_values(dist: np.ndarray) -> list[float]:
    n = len(dist)
    return sorted({float(dist[i, j]) for i in range(n) for j in range(i + 1, n)})


def scale_pairs(dist: np.ndarray) -> list[tuple[float, float, float]]:
    """(d_k, eps_at, eps_above) for every k; chains are strict so eps_at = d_k."""
    v = distinct_values(dist)
    out = []
    for k, x in enumerate(v):
        above = (x + v[k + 1]) / 2 if k + 1 < len(v) else 1.5 * x
        out.append((x, x, above))
    return out


def edges(dist, eps):
    n = len(dist)
    return [(i, j) for i in range(n) for j in range(i + 1, n) if dist[i, j] < eps]


def triangles(dist, eps):
    n = len(dist)
    return [t for t in itertools.combinations(range(n), 3)
            if all(dist[a, b] < eps for a, b in itertools.combinations(t, 2))]


PRIMES = (2_147_483_647, 2_147_483_629)


def _rank_mod(m: np.ndarray, p: int) -> int:
    m = m % p
    r = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = np.nonzero(m[r:, c])[0]
        if not len(piv):
            continue
        i = r + piv[0]
        m[[r, i]] = m[[i, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r] = _mulmod(m[r], inv, p)
        nz = np.nonzero(m[:, c])[0]
        nz = nz[nz != r]
        if len(nz):
            f = m[nz, c][:, None]
            m[nz] = (m[nz] - _mulmod(m[r][None, :], f, p)) % p
        r += 1
        if r == rows:
            break
    return r


def _mulmod(a, b, p):
    """a * b mod p for entries below 2**31 without int64 overflow."""
    lo, hi = a & 0xFFFF, a >> 16
    return ((b * lo) % p + (((b * hi) % p) << 16) % p) % p


def rank(rows: list[list[int]]) -> int:
    """Rank over Q, computed modulo two large primes (the larger result is kept).

    A prime lowers the rank only if it divides every maximal minor, so two
    independent primes make a wrong answer implausible at these sizes.
    """
    rows = [r for r in rows if any(r)]
    if not rows:
        return 0
    m = np.array(rows, dtype=np.int64)
    return max(_rank_mod(m.copy(), p) for p in PRIMES)


def _cycle_basis(n, es):
    """Fundamental cycles of a spanning forest, as {edge: coefficient}."""
    adj = {v: [] for v in range(n)}
    for i, j in es:
        adj[i].append(j)
        adj[j].append(i)
    parent = {}
    for s in range(n):
        if s in parent:
            continue
        parent[s] = s
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in parent:
                    parent[w] = u
                    q.append(w)

    def up(v):
        path = [v]
        while parent[v] != v:
            v = parent[v]
            path.append(v)
        return path

    cycles = []
    for i, j in es:
        if parent[j] == i or parent[i] == j:
            continue
        pi, pj = up(i), up(j)
        common = set(pi) & set(pj)
        a = next(x for x in pi if x in common)
        # cycle: i -> j, j up to a, a down to i
        path = [i, j] + pj[1:pj.index(a) + 1] + pi[:pi.index(a)][::-1]
        z = {}
        for u, v in zip(path, path[1:]):
            key = (min(u, v), max(u, v))
            z[key] = z.get(key, 0) + (1 if u < v else -1)
        cycles.append({k: c for k, c in z.items() if c})
    return cycles


def _boundary_rows(dist, eps, es):
    col = {e: c for c, e in enumerate(es)}
    rows = []
    for a, b, c in triangles(dist, eps):
        r = [0] * len(es)
        r[col[(b, c)]] += 1
        r[col[(a, c)]] -= 1
        r[col[(a, b)]] += 1
        rows.append(r)
    return rows


def kernel_dim(dist: np.ndarray, eps_a: float, eps_b: float) -> int:
    """dim ker(H1(R_a) -> H1(R_b)) over Q, for eps_a <= eps_b."""
    n = len(dist)
    eb = edges(dist, eps_b)
    za = [[z.get(e, 0) for e in eb] for z in _cycle_basis(n, edges(dist, eps_a))]
    ba = _boundary_rows(dist, eps_a, eb)
    bb = _boundary_rows(dist, eps_b, eb)
    inter = rank(za) + rank(bb) - rank(za + bb)  # dim(Z_a ∩ B_b)
    return inter - rank(ba)


def betti1(dist, eps) -> int:
    n = len(dist)
    es = edges(dist, eps)
    cyc = [[z.get(e, 0) for e in es] for z in _cycle_basis(n, es)]
    return rank(cyc) - rank(_boundary_rows(dist, eps, es))


def homology_spectrum(dist: np.ndarray) -> dict[float, int]:
    """{d_k: kernel dimension} over every k with nonzero kernel."""
    out = {}
    for x, a, b in scale_pairs(dist):
        k = kernel_dim(dist, a, b)
        if k:
            out[x] = k
    return out


# -- chains

def is_chain(dist, pts, eps) -> bool:
    return all(dist[u, v] < eps for u, v in zip(pts, pts[1:]))


def replay(dist, eps, source, moves, target) -> bool:
    """Apply ["i", p, x] / ["r", p] moves, checking every intermediate chain."""
    pts = list(source)
    if not is_chain(dist, pts, eps):
        return False
    for m in moves:
        if m[0] == "i":
            p, x = m[1], m[2]
            if not 1 <= p <= len(pts) - 1 + (len(pts) == 1):
                return False
            pts.insert(p, x)
        elif m[0] == "r":
            p = m[1]
            n = len(pts)
            interior = 1 <= p <= n - 2
            # a duplicated endpoint may also be dropped
            dup_end = (p == 0 and n > 1 and pts[0] == pts[1]) or (p == n - 1 and n > 1 and pts[-1] == pts[-2])
            if not (interior or dup_end):
                return False
            del pts[p]
        else:
            return False
        if not is_chain(dist, pts, eps):
            return False
    return list(target) == pts and pts[0] == source[0] and pts[-1] == source[-1]


def reduce(pts):
    """Drop repeats and backtracks x y x -> x; endpoints stay fixed."""
    out = []
    for p in pts:
        if out and out[-1] == p:
            continue
        if len(out) >= 2 and out[-2] == p:
            out.pop()
            continue
        out.append(p)
    return tuple(out)


def brute_null(dist, eps, loop, max_len: int | None = None, max_states: int = 200_000):
    """Search all chains reachable by moves (length <= max_len).

    True: reaches the constant loop.  False: the bounded move graph is
    exhausted without reaching it.  None: state cap hit.
    """
    n = len(dist)
    max_len = max_len or len(loop) + 2
    start = reduce(loop)
    if len(start) == 1:
        return True
    seen = {start}
    q = deque([start])
    while q:
        c = q.popleft()
        nxt = []
        for i in range(1, len(c) - 1):
            if dist[c[i - 1], c[i + 1]] < eps:
                nxt.append(c[:i] + c[i + 1:])
        if len(c) < max_len:
            for i in range(1, len(c)):
                for x in range(n):
                    if dist[c[i - 1], x] < eps and dist[x, c[i]] < eps:
                        nxt.append(c[:i] + (x,) + c[i:])
        for d in nxt:
            d = reduce(d)
            if len(d) == 1:
                return True
            if d not in seen:
                if len(seen) >= max_states:
                    return None
                seen.add(d)
                q.append(d)
    return False
