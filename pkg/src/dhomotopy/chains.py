"""Epsilon-chains, basic moves, and move certificates.

A basic move inserts or removes one point.  It is legal when the result is
still an epsilon-chain (consecutive distances strictly below epsilon) with the
same first and last point.  Removing a duplicated endpoint is legal, so
``[a, a]`` reduces to ``[a]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .spaces import FiniteMetricSpace


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class Chain:
    space: FiniteMetricSpace
    scale: float
    points: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        if not self.points:
            raise ChainError("a chain needs at least one point")
        if not self.scale > 0:
            raise ChainError("scale must be positive")
        bad = first_gap_violation(self.space, self.points, self.scale)
        if bad is not None:
            i = bad
            raise ChainError(
                f"d({self.points[i - 1]}, {self.points[i]}) = "
                f"{self.space.d(self.points[i - 1], self.points[i])} is not < {self.scale}")

    @classmethod
    def at(cls, space: FiniteMetricSpace, sp, points: Sequence[int]) -> "Chain":
        """Chain at a symbolic scale point (``rips.ScalePoint``)."""
        return cls(space, sp.epsilon(space), tuple(points))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def start(self) -> int:
        return self.points[0]

    @property
    def end(self) -> int:
        return self.points[-1]

    @property
    def is_loop(self) -> bool:
        return self.points[0] == self.points[-1]

    def with_points(self, points: Sequence[int]) -> "Chain":
        return Chain(self.space, self.scale, tuple(points))

    def to_json(self) -> dict:
        return {"scale": self.scale, "points": list(self.points)}


def first_gap_violation(space: FiniteMetricSpace, points: Sequence[int], eps: float) -> int | None:
    n = space.n
    for p in points:
        if not 0 <= p < n:
            raise IndexError(f"point index {p} out of range for {n} points")
    d = space.dist
    for i in range(1, len(points)):
        if not d[points[i - 1], points[i]] < eps:
            return i
    return None


def is_epsilon_chain(space: FiniteMetricSpace, points: Sequence[int], eps: float) -> bool:
    if not len(points):
        raise ValueError("empty point sequence")
    return first_gap_violation(space, points, eps) is None


@dataclass(frozen=True)
class Move:
    """``insert``: place ``point`` at ``position``.  ``remove``: drop ``position``."""

    kind: str
    position: int
    point: int | None = None

    @classmethod
    def insert(cls, position: int, point: int) -> "Move":
        return cls("insert", position, point)

    @classmethod
    def remove(cls, position: int) -> "Move":
        return cls("remove", position)

    def to_json(self) -> list:
        if self.kind == "insert":
            return ["i", self.position, self.point]
        return ["r", self.position]

    @classmethod
    def from_json(cls, doc) -> "Move":
        if doc[0] == "i":
            return cls.insert(int(doc[1]), int(doc[2]))
        if doc[0] == "r":
            return cls.remove(int(doc[1]))
        raise ValueError(f"unknown move {doc!r}")


def move_points(space: FiniteMetricSpace, points: list[int], move: Move, eps: float) -> None:
    """Apply ``move`` in place, checking legality locally (O(1))."""
    d = space.dist
    n = len(points)
    p = move.position
    if move.kind == "insert":
        x = move.point
        if not 0 <= p <= n:
            raise ChainError(f"insert position {p} out of range")
        if not 0 <= x < space.n:
            raise IndexError(f"point index {x} out of range")
        if (p == 0 and points[0] != x) or (p == n and points[-1] != x):
            raise ChainError("insertion would move an endpoint")
        if p > 0 and not d[points[p - 1], x] < eps:
            raise ChainError(f"insert {x} at {p}: d({points[p - 1]}, {x}) >= {eps}")
        if p < n and not d[x, points[p]] < eps:
            raise ChainError(f"insert {x} at {p}: d({x}, {points[p]}) >= {eps}")
        points.insert(p, x)
    elif move.kind == "remove":
        if not 0 <= p < n or n < 2:
            raise ChainError(f"remove position {p} out of range")
        if (p == 0 and points[1] != points[0]) or (p == n - 1 and points[-2] != points[-1]):
            raise ChainError("removal would move an endpoint")
        if 0 < p < n - 1 and not d[points[p - 1], points[p + 1]] < eps:
            raise ChainError(
                f"remove position {p}: d({points[p - 1]}, {points[p + 1]}) >= {eps}")
        del points[p]
    else:
        raise ChainError(f"unknown move kind {move.kind!r}")


def apply_move(chain: Chain, move: Move) -> Chain:
    pts = list(chain.points)
    move_points(chain.space, pts, move, chain.scale)
    return chain.with_points(pts)


@dataclass(frozen=True)
class HomotopyCertificate:
    """Moves taking ``source`` to ``target``; intermediates are rebuilt on replay."""

    source: Chain
    moves: tuple[Move, ...]
    target: Chain

    def replay(self) -> Chain:
        """Re-run every move, raising ``ChainError`` on the first illegal one."""
        pts = list(self.source.points)
        eps = self.source.scale
        for step, m in enumerate(self.moves):
            try:
                move_points(self.source.space, pts, m, eps)
            except ChainError as exc:
                raise ChainError(f"move {step} ({m.to_json()}): {exc}") from None
        if tuple(pts) != self.target.points:
            raise ChainError(f"replay ends at {pts[:12]}..., not the stated target")
        return self.target

    def verify(self) -> bool:
        try:
            self.replay()
        except (ChainError, IndexError):
            return False
        return (self.source.scale == self.target.scale
                and self.source.start == self.target.start and self.source.end == self.target.end)

    def __len__(self) -> int:
        return len(self.moves)

    def __add__(self, other: "HomotopyCertificate") -> "HomotopyCertificate":
        if other.source.points != self.target.points:
            raise ChainError("certificates do not compose")
        return HomotopyCertificate(self.source, self.moves + other.moves, other.target)

    def to_json(self) -> dict:
        return {"scale": self.source.scale, "source": list(self.source.points),
                "target": list(self.target.points), "moves": [m.to_json() for m in self.moves]}

    @classmethod
    def from_json(cls, space: FiniteMetricSpace, doc: dict) -> "HomotopyCertificate":
        eps = float(doc["scale"])
        return cls(Chain(space, eps, tuple(doc["source"])),
                   tuple(Move.from_json(m) for m in doc["moves"]),
                   Chain(space, eps, tuple(doc["target"])))


class MoveRecorder:
    """A mutable chain that logs (and checks) every basic move applied to it."""

    def __init__(self, space: FiniteMetricSpace, eps: float, points: Iterable[int], check: bool = True):
        self.space = space
        self.eps = eps
        self.points = list(points)
        self.moves: list[Move] = []
        self.check = check

    def insert(self, pos: int, x: int) -> None:
        m = Move.insert(pos, x)
        if self.check:
            move_points(self.space, self.points, m, self.eps)
        else:
            self.points.insert(pos, x)
        self.moves.append(m)

    def remove(self, pos: int) -> None:
        m = Move.remove(pos)
        if self.check:
            move_points(self.space, self.points, m, self.eps)
        else:
            del self.points[pos]
        self.moves.append(m)

    def free_reduce(self, lo: int = 0, hi: int | None = None) -> int:
        """Cancel duplicates and backtracks inside ``points[lo:hi]``; return the new ``hi``.

        The segment endpoints stay in place (a closed segment shrinks to one point).
        """
        hi = len(self.points) if hi is None else hi
        top = lo  # points[lo:top+1] is the reduced prefix of the segment
        i = lo + 1
        while i < hi:
            x = self.points[i]
            if x == self.points[top]:
                self.remove(i)
                hi -= 1
                continue
            if top > lo and x == self.points[top - 1]:
                # [.., x, y, x, ..] -> [.., x, x, ..] -> [.., x, ..]
                self.remove(top)
                self.remove(top)
                hi -= 2
                top -= 1
                i -= 1
                continue
            top += 1
            i += 1
        return hi

    def insert_backtrack(self, pos: int, path: Sequence[int]) -> int:
        """At ``points[pos] == path[0]`` splice in ``path`` then its reverse.

        Returns the index of the far end ``path[-1]``.  Two moves per step:
        duplicate the current point, then insert the next one between the copies.
        """
        if self.points[pos] != path[0]:
            raise ChainError("backtrack path does not start at the chain point")
        at = pos
        for nxt in path[1:]:
            self.insert(at + 1, self.points[at])
            self.insert(at + 1, nxt)
            at += 1
        return at

    def certificate(self, source: Chain) -> HomotopyCertificate:
        return HomotopyCertificate(source, tuple(self.moves), source.with_points(self.points))


def e_gap(chain: Chain) -> float:
    """min over gaps of (epsilon - d); epsilon itself for a one-point chain."""
    pts = chain.points
    if len(pts) == 1:
        return chain.scale
    d = chain.space.dist
    return min(chain.scale - float(d[a, b]) for a, b in zip(pts, pts[1:]))


def chain_distance(a: Chain, b: Chain) -> float:
    if len(a) != len(b):
        raise ChainError(f"chains have different lengths ({len(a)} vs {len(b)})")
    d = a.space.dist
    return max(float(d[x, y]) for x, y in zip(a.points, b.points))


def close_chain_certificate(a: Chain, b_points: Sequence[int] | Chain) -> HomotopyCertificate:
    """Homotopy from ``a`` to a pointwise-close chain with the same ends.

    Needs D(a, b) < E(a)/2.  Walks the chain replacing x_i by y_i: insert y_i
    after x_i, then drop x_i.
    """
    pts_b = tuple(getattr(b_points, "points", b_points))
    if len(a.points) != len(pts_b):
        raise ChainError(f"length mismatch: {len(a.points)} vs {len(pts_b)} points")
    if a.start != pts_b[0] or a.end != pts_b[-1]:
        raise ChainError("endpoints differ")
    d = a.space.dist
    gap = e_gap(a)
    dist = max(float(d[x, y]) for x, y in zip(a.points, pts_b))
    if not dist < gap / 2:
        raise ChainError(f"D(a, b) = {dist} is not < E(a)/2 = {gap / 2}")
    rec = MoveRecorder(a.space, a.scale, a.points)
    for i in range(1, len(pts_b) - 1):
        if pts_b[i] == a.points[i]:
            continue
        rec.insert(i + 1, pts_b[i])
        rec.remove(i)
    return rec.certificate(a)


def concat(a: Chain, b: Chain) -> Chain:
    if a.scale != b.scale:
        raise ChainError("scale mismatch")
    if a.end != b.start:
        raise ChainError(f"end({a.end}) != start({b.start})")
    return a.with_points(a.points + b.points[1:])


def reverse(a: Chain) -> Chain:
    return a.with_points(a.points[::-1])


def free_reduce(chain: Chain, certificate: bool = False):
    """Remove duplicates and backtracks x, y, x; optionally return the certificate."""
    rec = MoveRecorder(chain.space, chain.scale, chain.points, check=False)
    rec.free_reduce()
    out = chain.with_points(rec.points)
    if certificate:
        return out, HomotopyCertificate(chain, tuple(rec.moves), out)
    return out


def reduced_points(points: Sequence[int]) -> tuple[int, ...]:
    """Free-reduced form of a point sequence (endpoints kept)."""
    if not points:
        return ()
    out = [points[0]]
    for x in points[1:]:
        if x == out[-1]:
            continue
        if len(out) >= 2 and x == out[-2]:
            out.pop()
            continue
        out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class Polyline:
    """A fine point sequence standing in for a continuous path."""

    space: FiniteMetricSpace
    points: tuple[int, ...]

    @property
    def mesh(self) -> float:
        d = self.space.dist
        if len(self.points) < 2:
            return 0.0
        return max(float(d[a, b]) for a, b in zip(self.points, self.points[1:]))


def strong_chain(poly: Polyline, eps: float, slack: float = 1.0) -> Chain:
    """Greedy strong eps-chain along ``poly``.

    A segment from the current point grows while every polyline point it skips
    is within ``slack * eps`` of both the segment start and the candidate end;
    the longest valid segment is kept (ties resolved leftmost).
    """
    if not 0 < slack <= 1:
        raise ValueError("slack must be in (0, 1]")
    if poly.mesh > eps / 4:
        raise ChainError(f"mesh {poly.mesh} exceeds eps/4 = {eps / 4}")
    pts = poly.points
    d = poly.space.dist
    bound = slack * eps
    out = [pts[0]]
    s = 0
    while s < len(pts) - 1:
        best = s + 1
        j = s + 1
        while j < len(pts):
            if not d[pts[s], pts[j]] < bound:
                break
            if all(d[pts[t], pts[j]] < bound and d[pts[t], pts[s]] < bound for t in range(s + 1, j)):
                best = j
                j += 1
            else:
                break
        out.append(pts[best])
        s = best
    return Chain(poly.space, eps, tuple(out))
