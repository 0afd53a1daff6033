import pytest

from dhomotopy.covers import (CoverError, DeckElement, LiftError, build_cover, deck_apply, deck_elements,
                              displacement, lift_chain)
from dhomotopy.homotopy import decide_null
from dhomotopy.rips import ABOVE, ScalePoint

A1, A2 = ScalePoint(1, ABOVE), ScalePoint(2, ABOVE)
C4_LOOP = (0, 1, 2, 3, 0)


def test_trivial_covers(triangle, c4):
    cb = build_cover(triangle, A1)
    assert cb.complete and len(cb.vertices) == 3
    cb = build_cover(c4, A2)
    assert cb.complete and len(cb.vertices) == 4


def test_c4_ball_is_a_path(c4):
    cb = build_cover(c4, A1, radius=6)
    assert not cb.complete
    assert len(cb.vertices) == 13
    deg = [0] * len(cb.vertices)
    for i, j, _ in cb.edges:
        deg[i] += 1
        deg[j] += 1
    assert max(deg) == 2 and deg.count(1) == 2
    assert len(cb.edges) == len(cb.vertices) - 1
    with pytest.raises(CoverError):
        build_cover(c4, A1, radius=3, exact=True)


def test_lifts(c4):
    cb = build_cover(c4, A1, radius=8)
    assert lift_chain(cb, (0,)).closed
    assert not lift_chain(cb, C4_LOOP).closed
    assert lift_chain(cb, (0, 1, 0, 3, 0)).closed
    assert lift_chain(build_cover(c4, A2), C4_LOOP).closed
    with pytest.raises(LiftError):
        lift_chain(build_cover(c4, A1, radius=2), C4_LOOP * 2)


def test_deck_on_trivial_cover(triangle):
    cb = build_cover(triangle, A1)
    els = deck_elements(cb)
    assert els == [DeckElement(())]
    assert all(deck_apply(cb, els[0], v) == v for v in range(len(cb.vertices)))
    assert displacement(cb, els[0]) == 0


def test_deck_needs_complete_cover(c4):
    cb = build_cover(c4, A1, radius=4)
    with pytest.raises(CoverError):
        deck_elements(cb)


def test_projective_plane_cover(rp2):
    cb = build_cover(rp2, A1)
    assert cb.complete and len(cb.vertices) == 2 * rp2.n
    els = deck_elements(cb)
    assert len(els) == 2
    e, g = els
    assert displacement(cb, e) == 0
    assert displacement(cb, g) >= A1.value(rp2)
    # the deck action is free and squares to the identity
    for v in range(len(cb.vertices)):
        w = deck_apply(cb, g, v)
        assert w != v and cb.vertices[w][0] == cb.vertices[v][0]
        assert deck_apply(cb, g, w) == v


def test_lift_matches_verdict_on_rp2(rp2):
    cb = build_cover(rp2, A1)
    m = cb.model
    for word in [(m.tietze.kept[0],), (m.tietze.kept[0],) * 2, ()]:
        loop = tuple(m.pres.word_loop(word)) if word else (0,)
        d = decide_null(rp2, A1, loop)
        assert d.conclusive
        assert lift_chain(cb, loop).closed == d.is_null


def test_dot_export(c4):
    dot = build_cover(c4, A2).to_dot()
    assert dot.startswith("graph cover {") and '"0:0"' in dot
