"""Critical and covering spectra of finite metric spaces."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .chains import Chain, MoveRecorder
from .homotopy import (Budget, Decision, H1Certificate, INCONCLUSIVE, NONNULL, decide_null,
                       h1_witness, pairing, persistence_of, shorten)
from .persistence import restricted_cocycle, witness_cycle
from .rips import ABOVE, AT, RipsComplex, ScalePoint
from .spaces import FiniteMetricSpace, generate

HOMOLOGY_EXACT = "HomologyExact"
GROUP_CONFIRMED = "GroupConfirmed"
NO_UNIVERSAL_COVER = "limit-space-has-no-universal-cover"


def homology_spectrum(space: FiniteMetricSpace) -> list[float]:
    """Distances d_k where some first-homology class of AT(k) dies at ABOVE(k), descending."""
    if space.n < 3:
        return []
    ph = persistence_of(space)
    return sorted((float(ph.values[r]) for r in ph.death_ranks()), reverse=True)


@dataclass
class SpectrumEntry:
    value: float
    k: int
    level: str
    witness: Chain
    nonnull: Decision
    null: Decision
    classes: int = 1

    def verify(self, space: FiniteMetricSpace) -> bool:
        """Evidence re-checks: NonNull at AT(k), and Null at ABOVE(k) when confirmed."""
        if not (self.nonnull.is_nonnull and self.nonnull.verify(space)):
            return False
        if self.level == GROUP_CONFIRMED:
            return self.null.is_null and self.null.verify(space)
        return self.null.verify(space)

    def to_json(self) -> dict:
        return {"value": self.value, "k": self.k, "level": self.level, "classes": self.classes,
                "witness": self.witness.to_json(), "at": self.nonnull.to_json(),
                "above": self.null.to_json()}


@dataclass
class SpectrumReport:
    entries: list[SpectrumEntry]
    inconclusive: list[int] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.entries]

    @property
    def covering_spectrum(self) -> list[float]:
        return covering_spectrum(self)

    def to_json(self) -> dict:
        return {"critical": self.values, "covering": self.covering_spectrum,
                "inconclusive": self.inconclusive, "entries": [e.to_json() for e in self.entries]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "level", "witness_length"])
        for e in self.entries:
            w.writerow([repr(e.value), e.level, len(e.witness)])
        return buf.getvalue()


def covering_spectrum(report: SpectrumReport | Sequence[float]) -> list[float]:
    values = report.values if isinstance(report, SpectrumReport) else report
    return [v * 3 / 2 for v in values]


def _euler_circuits(z: dict[tuple[int, int], int]) -> list[list[int]]:
    """Split an integer 1-cycle into closed walks (Hierholzer, smallest vertex first)."""
    out_arcs: dict[int, list[int]] = {}
    for (i, j), c in sorted(z.items()):
        a, b = (i, j) if c > 0 else (j, i)
        for _ in range(abs(c)):
            out_arcs.setdefault(a, []).append(b)
    for v in out_arcs:
        out_arcs[v].sort(reverse=True)
    circuits = []
    while any(out_arcs.values()):
        s = min(v for v, arcs in out_arcs.items() if arcs)
        stack, walk = [s], []
        while stack:
            v = stack[-1]
            if out_arcs.get(v):
                stack.append(out_arcs[v].pop())
            else:
                walk.append(stack.pop())
        circuits.append(walk[::-1])
    return circuits


def witness_loop(space: FiniteMetricSpace, z: dict[tuple[int, int], int], sp: ScalePoint,
                 cochain: dict | None = None) -> Chain:
    """Loop at ``sp`` with edge vector ``z``, conjugated to the base point.

    If ``z`` is spread over several components of the Rips graph, the part in
    a component where ``cochain`` pairs nonzero is used (base point's first).
    """
    cx = RipsComplex.of(space, sp)
    eps = sp.epsilon(space)
    circuits = _euler_circuits(z)
    comp: dict[int, int] = {}

    def cid(v: int) -> int:
        if v not in comp:
            members = cx.component(v)
            for u in members:
                comp[u] = members[0]
        return comp[v]

    parts: dict[int, list[list[int]]] = {}
    for c in circuits:
        parts.setdefault(cid(c[0]), []).append(c)
    bpc = cid(space.basepoint)
    order = sorted(parts, key=lambda r: (r != bpc, r))
    chosen = order[0]
    if cochain is not None and len(order) > 1:
        chosen = next((r for r in order if sum(pairing(cochain, c) for c in parts[r])), chosen)
    root = space.basepoint if chosen == bpc else chosen
    tree = cx.tree(root)
    pts = [root]
    for c in parts[chosen]:
        pts += tree.path_from_root(c[0])[1:] + c[1:] + tree.path_to_root(c[0])[1:]
    return Chain(space, eps, tuple(pts))


def kernel_witness(space: FiniteMetricSpace, pair: tuple[int, int]) -> tuple[Chain, Decision]:
    """Shortened witness loop for a persistence pair, with its NonNull evidence at AT(k)."""
    ph = persistence_of(space)
    pos, tri = pair
    at = ScalePoint(tri // ph.nt + 1, AT)
    z = witness_cycle(ph, tri)
    phi = restricted_cocycle(ph, pos, at.max_rank)
    loop = witness_loop(space, z, at, phi)
    rec = MoveRecorder(space, loop.scale, loop.points)
    shorten(rec)
    if len(rec.points) > 1:
        loop = loop.with_points(rec.points)
    cert = H1Certificate(at, loop.points, phi)
    if cert.value == 0:
        cert = h1_witness(space, at, loop)
    nonnull = Decision(NONNULL, cert, "h1", at) if cert else Decision(INCONCLUSIVE, None, "", at)
    return loop, nonnull


def _entry(space: FiniteMetricSpace, rank: int, count: int, pair: tuple[int, int],
           budget: Budget, confirm: bool) -> SpectrumEntry:
    ph = persistence_of(space)
    k = rank + 1
    at, above = ScalePoint(k, AT), ScalePoint(k, ABOVE)
    loop, nonnull = kernel_witness(space, pair)
    if confirm:
        null = decide_null(space, above, loop.points, budget)
    else:
        null = Decision(INCONCLUSIVE, None, "", above, {"strategies": []})
    level = GROUP_CONFIRMED if (null.is_null and nonnull.is_nonnull) else HOMOLOGY_EXACT
    return SpectrumEntry(float(ph.values[rank]), k, level, loop, nonnull, null, count)


def critical_spectrum(space: FiniteMetricSpace, budget: Budget | None = None, confirm: bool = True,
                      threads: int = 1) -> SpectrumReport:
    """One entry per homology-critical distance, with witness loop and evidence."""
    budget = budget or Budget()
    if space.n < 3:
        return SpectrumReport([])
    ph = persistence_of(space)
    first: dict[int, tuple[int, int]] = {}
    for p, t in ph.essential_pairs():
        r = t // ph.nt
        if r not in first:
            first[r] = (p, t)
    counts = ph.death_ranks()
    ranks = sorted(first, reverse=True)
    jobs = [(r, counts[r], first[r]) for r in ranks]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(lambda j: _entry(space, *j, budget, confirm), jobs))
    else:
        entries = [_entry(space, *j, budget, confirm) for j in jobs]
    inconclusive = sorted(e.k for e in entries if confirm and not e.null.conclusive)
    return SpectrumReport(entries, inconclusive)


@dataclass
class FamilyReport:
    name: str
    rows: list[dict]
    flags: list[str]

    def to_json(self) -> dict:
        return {"generator": self.name, "rows": self.rows, "flags": self.flags}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "points", "count", "min_value", "values"])
        for r in self.rows:
            w.writerow([r["k"], r["points"], r["count"], repr(r["min"]) if r["min"] is not None else "",
                        " ".join(repr(v) for v in r["values"])])
        return buf.getvalue()


def family_report(family: str | Callable[[int], FiniteMetricSpace], ks: Iterable[int],
                  params: dict | None = None, index: str = "k") -> FamilyReport:
    """Spectrum size and minimum over a family of spaces indexed by ``k``.

    ``family`` is a generator name (the index is passed as parameter
    ``index``) or a callable.  The no-universal-cover flag is raised when the
    count strictly grows and the minimum strictly drops at every step.
    """
    rows = []
    for k in ks:
        if callable(family):
            space = family(k)
        else:
            space = generate(family, {**(params or {}), index: k})
        vals = homology_spectrum(space)
        rows.append({"k": k, "points": space.n, "count": len(vals),
                     "min": min(vals) if vals else None, "values": vals})
    flags = []
    if len(rows) >= 2 and all(r["min"] is not None for r in rows):
        grows = all(b["count"] > a["count"] for a, b in zip(rows, rows[1:]))
        drops = all(b["min"] < a["min"] for a, b in zip(rows, rows[1:]))
        if grows and drops:
            flags.append(NO_UNIVERSAL_COVER)
    name = family if isinstance(family, str) else getattr(family, "__name__", "family")
    return FamilyReport(name, rows, flags)
