"""Acceptance criteria, one test each."""
import json
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

import oracles
from conftest import annulus_space, random_loop, random_space, random_word_loop
from dhomotopy.chains import Chain, close_chain_certificate, e_gap, is_epsilon_chain
from dhomotopy.covers import CoverError, LiftError, build_cover, deck_elements, displacement, lift_chain
from dhomotopy.homotopy import (NONNULL, NULL, analyze_group, bfs_null_search, coset_null_test, decide_null,
                                h1_witness)
from dhomotopy.rips import RipsComplex, path_word, presentation, scale_points
from dhomotopy.spaces import (hawaiian_truncation, product_space, projective_plane, sample_circle,
                              validate_metric, wedge)
from dhomotopy.spectrum import (GROUP_CONFIRMED, HOMOLOGY_EXACT, NO_UNIVERSAL_COVER, critical_spectrum,
                                family_report)
from dhomotopy.topology import all_words, finest_connected, loop_word, products, verify_ultrametric


def _replay(space, cert) -> bool:
    js = cert.to_json()
    return oracles.replay(space.dist, js["scale"], js["source"], js["moves"], js["target"])


@lru_cache(maxsize=None)
def _report(name):
    if name == "torus":
        return critical_spectrum(product_space(sample_circle(1.5, 24), sample_circle(0.75, 24)))
    if name.startswith("circle"):
        return critical_spectrum(sample_circle(3, int(name[6:])))
    if name.startswith("hawaiian"):
        return critical_spectrum(hawaiian_truncation(int(name[8:]), 24))
    raise KeyError(name)


# -- 1

@pytest.mark.parametrize("n", [12, 24, 48])
def test_circle_spectrum(n):
    s = sample_circle(3, n)
    t = time.perf_counter()
    rep = critical_spectrum(s)
    elapsed = time.perf_counter() - t
    assert len(rep.entries) == 1
    e = rep.entries[0]
    assert abs(e.value - 1.0) <= 6 / n
    assert e.level == GROUP_CONFIRMED and e.verify(s)
    assert _replay(s, e.null.certificate)
    if n == 48:
        assert elapsed <= 30


# -- 2

def test_torus_product():
    a, b = sample_circle(1.5, 24), sample_circle(0.75, 24)
    t = time.perf_counter()
    rep = _report("torus")
    assert time.perf_counter() - t <= 300
    targets = (0.5, 0.25)
    near = [e for e in rep.entries if min(abs(e.value - x) for x in targets) <= 0.08]
    assert len(near) == 2
    assert sorted(min(targets, key=lambda x: abs(e.value - x)) for e in near) == sorted(targets)
    assert all(e.level in (HOMOLOGY_EXACT, GROUP_CONFIRMED) for e in near)
    # anything else lives at the sampling mesh: the diagonal of one grid cell
    mesh = float(np.hypot(a.dist[0, 1], b.dist[0, 1]))
    assert all(e.value <= mesh + 1e-9 for e in rep.entries if e not in near)


# -- 3

def test_hawaiian_growth():
    rep = family_report("hawaiian", range(1, 5), {"n": 24})
    assert [r["count"] for r in rep.rows] == [1, 2, 3, 4]
    mins = [r["min"] for r in rep.rows]
    assert all(b < a for a, b in zip(mins, mins[1:]))
    assert NO_UNIVERSAL_COVER in rep.flags


# -- 4

def _close_pair(rng, space):
    n = space.n
    d = space.dist
    vals = space.values
    thr = float(vals[int(rng.integers(0, len(vals)))])
    cx_nb = [np.flatnonzero((d[i] <= thr) & (np.arange(n) != i)) for i in range(n)]
    pts = [int(rng.integers(n))]
    for _ in range(int(rng.integers(2, 20))):
        nb = cx_nb[pts[-1]]
        if not len(nb):
            break
        pts.append(int(rng.choice(nb)))
    step = max((float(d[x, y]) for x, y in zip(pts, pts[1:])), default=0.0)
    eps = step + float(rng.uniform(0.05, 1.0)) * float(space.diameter)
    a = Chain(space, eps, tuple(pts))
    half = e_gap(a) / 2
    b = list(pts)
    for i in range(1, len(b) - 1):
        b[i] = int(rng.choice(np.flatnonzero(d[pts[i]] < half)))
    return a, b


def test_close_chain_pairs():
    rng = np.random.default_rng(4)
    t = time.perf_counter()
    ok = moved = 0
    total = 1000
    for i in range(total):
        kind = i % 3
        n = int(rng.integers(4, 65))
        if kind == 0:
            s = random_space(rng, n)
        elif kind == 1:
            s = annulus_space(rng, n)
        else:
            s = sample_circle(float(rng.uniform(1, 8)), n)
        a, b = _close_pair(rng, s)
        cert = close_chain_certificate(a, b)
        moved += tuple(b) != a.points
        ok += cert.verify() and _replay(s, cert) and cert.target.points == tuple(b)
    assert ok == total
    assert moved > total // 2
    assert time.perf_counter() - t <= 60


# -- corpus for 5-8

def _corpus_spaces(rng, count, lo, hi):
    out = []
    for i in range(count):
        n = int(rng.integers(lo, hi + 1))
        out.append(random_space(rng, n) if i % 2 == 0 else annulus_space(rng, n))
    return out


@pytest.fixture(scope="module")
def corpus():
    """(space, loops, decisions) with decisions[(loop index, scale index)] for every scale the loop lives at."""
    rng = np.random.default_rng(5)
    spaces = _corpus_spaces(rng, 50, 3, 8)
    spaces += [sample_circle(4, 4), validate_metric([[0, 1, 1], [1, 0, 1], [1, 1, 0]])]
    out = []
    for s in spaces:
        sps = scale_points(s)
        loops = []
        for j in range(10):
            sp0 = sps[int(rng.integers(1, len(sps)))]
            if j % 2:
                loops.append(random_loop(rng, s, sp0, int(rng.integers(2, 7))))
            else:
                loops.append(random_word_loop(rng, s, sp0, int(rng.integers(1, 4))))
        dec = {}
        for li, loop in enumerate(loops):
            for si, sp in enumerate(sps):
                if is_epsilon_chain(s, loop, sp.epsilon(s)):
                    dec[li, si] = decide_null(s, sp, loop)
        out.append((s, sps, loops, dec))
    return out


# -- 5

def test_nullity_soundness(corpus):
    n_loops = sum(len(c[2]) for c in corpus)
    assert n_loops >= 500 and all(c[0].n <= 8 for c in corpus)
    conflicts, h1_checks = [], 0
    verdicts = {NULL: 0, NONNULL: 0}
    for s, sps, loops, dec in corpus:
        for (li, si), d in dec.items():
            sp, loop = sps[si], loops[li]
            claims = {"cascade": d.verdict}
            assert d.verify(s)
            if d.verdict == NULL:
                assert _replay(s, d.certificate)
            claims["concurrent"] = decide_null(s, sp, loop, concurrent=True).verdict
            w = h1_witness(s, sp, loop)
            if w is not None:
                assert w.verify(s)
                claims["h1"] = NONNULL
            cert = bfs_null_search(s, sp, loop)
            if cert is not None:
                assert cert.verify()
                claims["bfs"] = NULL
            if w is not None:
                h1_checks += 1
                if cert is not None:
                    conflicts.append((loop, str(sp), "bfs-vs-h1"))
            p = presentation(s, sp, partial=True)
            g = coset_null_test(p, path_word(p, loop))
            if g is not None:
                claims["group"] = NULL if g else NONNULL
            seen = set(claims.values())
            if NULL in seen and NONNULL in seen:
                conflicts.append((loop, str(sp), claims))
            for v in seen & {NULL, NONNULL}:
                verdicts[v] += 1
    assert conflicts == []
    assert h1_checks > 0 and verdicts[NULL] > 0 and verdicts[NONNULL] > 0


# -- 6

def test_kernel_nesting(corpus):
    violations, pairs = [], 0
    for s, sps, loops, dec in corpus:
        for li, loop in enumerate(loops):
            seq = [(si, dec[li, si].verdict) for si in range(len(sps)) if (li, si) in dec]
            for i, (si, v) in enumerate(seq):
                if v != NULL:
                    continue
                for sj, w in seq[i + 1:]:
                    pairs += 1
                    if w == NONNULL:
                        violations.append((loop, str(sps[si]), str(sps[sj])))
    assert pairs > 0 and violations == []


# -- 7

def test_lifting_coherence(corpus):
    rng = np.random.default_rng(7)
    extra = []
    for s in _corpus_spaces(rng, 10, 9, 10):
        sps = scale_points(s)
        loops = [random_word_loop(rng, s, sps[int(rng.integers(1, len(sps)))], int(rng.integers(1, 4)))
                 for _ in range(6)]
        dec = {(li, si): decide_null(s, sp, loop) for li, loop in enumerate(loops)
               for si, sp in enumerate(sps) if is_epsilon_chain(s, loop, sp.epsilon(s))}
        extra.append((s, sps, loops, dec))
    checked = mismatches = 0
    closed = {True: 0, False: 0}
    for s, sps, loops, dec in list(corpus) + extra:
        assert s.n <= 10
        covers = {}
        for (li, si), d in sorted(dec.items()):
            if not d.conclusive:
                continue
            if si not in covers:
                try:
                    covers[si] = build_cover(s, sps[si], radius=max(map(len, loops)))
                except CoverError:
                    covers[si] = None
            cb = covers[si]
            if cb is None or not cb.exact:
                continue
            try:
                lr = lift_chain(cb, loops[li])
            except LiftError:
                continue
            checked += 1
            closed[lr.closed] += 1
            mismatches += lr.closed != d.is_null
    assert mismatches == 0
    assert checked > 500 and closed[True] > 0 and closed[False] > 0


# -- 8

def test_displacement_bound(corpus):
    complete = nontrivial = 0
    cases = [(s, sp) for s, sps, _, _ in corpus for sp in sps[1:]]
    rp2 = projective_plane()
    cases += [(rp2, sp) for sp in scale_points(rp2)[1:]]
    for s, sp in cases:
        if len(RipsComplex.of(s, sp).component(s.basepoint)) < s.n or analyze_group(s, sp, s.basepoint).kind not in ("trivial",
                                                                                                  "finite"):
            continue
        try:
            cb = build_cover(s, sp)
        except CoverError:
            continue
        if not cb.complete:
            continue
        complete += 1
        els = deck_elements(cb)
        assert displacement(cb, els[0]) == 0
        for g in els[1:]:
            nontrivial += 1
            assert displacement(cb, g) >= sp.value(s)
    assert complete > 0 and nontrivial > 0


# -- 9

def test_ultrametric_axioms():
    c = sample_circle(3, 12)
    ref = finest_connected(c)
    t = verify_ultrametric(c, ref, all_words(presentation(c, ref).ngens, 14))
    assert t.ok and t.skipped == 0 and len(t.words) >= 29
    w = wedge(sample_circle(1, 16), sample_circle(2, 16))
    ref = finest_connected(w)
    a = loop_word(w, ref, tuple(range(16)) + (0,))
    b = loop_word(w, ref, (0,) + tuple(range(16, 31)) + (0,))
    t = verify_ultrametric(w, ref, products([a, b], 2))
    assert t.ok and t.skipped == 0
    for name in ["circle12", "circle24", "circle48", "hawaiian1", "hawaiian2", "hawaiian3", "hawaiian4",
                 "torus"]:
        rep = _report(name)
        assert rep.covering_spectrum == [v * 3 / 2 for v in rep.values]
        assert json.loads(json.dumps(rep.to_json()))["covering"] == [v * 3 / 2 for v in rep.values]


# -- 10

def test_cli_determinism(tmp_path):
    space = tmp_path / "w.json"
    space.write_text(json.dumps(wedge(sample_circle(1, 12), sample_circle(2, 12)).to_json()))
    loop = tmp_path / "l.json"
    loop.write_text(json.dumps({"points": list(range(12)) + [0]}))
    words = tmp_path / "words.json"
    words.write_text(json.dumps({"words": [[], [1], [2], [1, 2]]}))
    commands = [
        ["spectrum", "--space", str(space)],
        ["spectrum", "--space", str(space), "--format", "csv"],
        ["null", "--space", str(space), "--loop", str(loop), "--scale", "1:above"],
        ["cover", "--space", str(space), "--scale", "2:above", "--radius", "3", "--format", "dot"],
        ["ultra", "--space", str(space), "--words", str(words)],
        ["family-report", "--generator", "hawaiian", "--k", "1..3", "--param", "n=12"],
    ]
    for cmd in commands:
        outs = set()
        for threads in ["1", "2", "8", "1"]:
            r = subprocess.run([sys.executable, "-m", "dhomotopy", *cmd, "--threads", threads, "--deterministic"],
                               capture_output=True, timeout=300)
            assert r.returncode in (0, 1), r.stderr
            outs.add(r.stdout)
        assert len(outs) == 1, cmd
