import pytest
from hypothesis import given, settings, strategies as st

from dhomotopy.groups import (abelian_lattice, cyclic_reduce, enumerate_cosets, hermite_rows, inverse,
                              lattice_reduce, multiply_reduced, perm_compose_word, reduce_word, separating_permutations,
                              tietze)

# (generators, relators, order)
GROUPS = {
    "cyclic5": ([1], [(1,) * 5], 5),
    "s3": ([1, 2], [(1, 1), (2, 2, 2), (1, 2, 1, 2)], 6),
    "q8": ([1, 2], [(1,) * 4, (1, 1, -2, -2), (-2, 1, 2, 1)], 8),
    "trivial": ([1, 2], [(1, 2), (1, 2, 2)], 1),
    "z2xz3": ([1, 2], [(1, 1), (2, 2, 2), (1, 2, -1, -2)], 6),
    "a4": ([1, 2], [(1, 1), (2, 2, 2), (1, 2) * 3], 12),
}


@pytest.mark.parametrize("name", sorted(GROUPS))
def test_coset_orders(name):
    gens, rels, order = GROUPS[name]
    t = enumerate_cosets(gens, rels)
    assert t is not None and t.order == order
    for r in rels:
        assert all(t.trace(c, r) == c for c in range(t.order))
    words = t.rep_words()
    assert len({t.trace(0, w) for w in words}) == order


def test_coset_budget_on_infinite_group():
    assert enumerate_cosets([1, 2], [], max_rows=500) is None
    assert enumerate_cosets([1, 2], [(1, 2, -1, -2)], max_rows=500) is None


def test_words():
    assert reduce_word((1, -1, 2, 3, -3)) == (2,)
    assert cyclic_reduce((-1, 2, 3, 1)) == (2, 3)
    assert inverse((1, -2)) == (2, -1)


def test_tietze_triangle_relators():
    r = tietze(3, [(1, 2), (2, 3), (1, 3)])
    # a b = 1 and b c = 1 give c = a, then a c = 1 leaves a^2 = 1
    assert len(r.kept) == 1
    t = enumerate_cosets(r.kept, r.relators)
    assert t.order == 2
    z = tietze(3, [(1, 2), (2, 3), (1, -3)])  # a c^-1 = 1 is implied: the group is Z
    assert len(z.kept) == 1 and z.is_free


def test_tietze_free_and_trivial():
    assert tietze(2, []).is_free
    assert tietze(2, [(1,), (2,)]).is_trivial


@pytest.mark.parametrize("name", sorted(GROUPS))
def test_tietze_preserves_order(name):
    gens, rels, order = GROUPS[name]
    r = tietze(len(gens), rels)
    if r.is_trivial:
        assert order == 1
        return
    t = enumerate_cosets(r.kept, r.relators)
    assert t.order == order
    # images of the original relators are trivial in the simplified group
    for rel in rels:
        assert t.trace(0, r.image(rel)) == 0


reduced_words = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), min_size=1, max_size=30).map(
    reduce_word).filter(bool)


@settings(max_examples=200, deadline=None)
@given(w=reduced_words)
def test_separating_permutations(w):
    perms = separating_permutations(w)
    deg = len(w) + 1
    out = perm_compose_word(perms, w, deg)
    assert out != list(range(deg))
    for p in perms.values():
        assert sorted(p) == list(range(deg))


@settings(max_examples=200, deadline=None)
@given(a=reduced_words, b=reduced_words)
def test_multiply_reduced(a, b):
    assert multiply_reduced(a, b) == reduce_word(a + b)
    assert multiply_reduced(a, inverse(a)) == ()


def test_non_reduced_word_rejected():
    with pytest.raises(ValueError):
        separating_permutations((1, -1))


def test_hermite_and_lattice():
    h = hermite_rows([[2, 4], [0, 6]], 2)
    assert lattice_reduce((2, 4), h) == (0, 0)
    assert lattice_reduce((1, 0), h) != (0, 0)
    assert lattice_reduce((4, 14), h) == (0, 0)
    comm = (1, 2, -1, -2)
    assert abelian_lattice([1, 2], [comm]) == []
    assert abelian_lattice([1, 2], [(1, 1)]) is None
    lat = abelian_lattice([1, 2], [comm, (1, 1, 1)])
    assert lattice_reduce((3, 0), lat) == (0, 0)
