import json

import numpy as np
import pytest

from dhomotopy.spaces import (MetricError, MetricGraph, check_metric, generate, graph_to_space,
                              hawaiian_truncation, point, product_space, projective_plane,
                              sample_circle, space_from_json, validate_metric, wedge)


def test_two_point_metric():
    s = validate_metric([[0, 1], [1, 0]])
    assert s.n == 2
    assert list(s.values) == [1.0]


def test_triangle_violation_names_triple():
    with pytest.raises(MetricError) as exc:
        validate_metric([[0, 5, 10], [5, 0, 1], [10, 1, 0]])
    kinds = {(v.kind, tuple(sorted(v.indices))) for v in exc.value.violations}
    assert ("triangle", (0, 1, 2)) in kinds


def test_symmetry_violation():
    with pytest.raises(MetricError) as exc:
        validate_metric([[0, 1], [2, 0]])
    v = exc.value.violations[0]
    assert v.kind == "symmetry" and sorted(v.indices) == [0, 1]


@pytest.mark.parametrize("m", [
    [[1, 1], [1, 0]],            # nonzero diagonal
    [[0, -1], [-1, 0]],          # negative
    [[0, 0], [0, 0]],            # distinct points at distance 0
    [[0, np.nan], [np.nan, 0]],
    [[0, 1, 2]],                 # not square
])
def test_rejects_bad_matrices(m):
    with pytest.raises((MetricError, ValueError)):
        validate_metric(m)


def test_check_metric_clean():
    assert check_metric(sample_circle(3, 12).dist) == []


def test_circle_formula():
    s = sample_circle(3, 4)
    assert s.dist[0, 1] == pytest.approx(0.75)
    assert s.dist[0, 2] == pytest.approx(1.5)
    t = sample_circle(1, 3)
    assert np.allclose(t.dist[~np.eye(3, dtype=bool)], 1 / 3)


def test_product_with_point_is_copy():
    b = sample_circle(3, 6)
    p = product_space(point(), b)
    assert np.allclose(p.dist, b.dist)


def test_product_two_points():
    a = validate_metric([[0, 1], [1, 0]])
    p = product_space(a, a)
    assert p.n == 4
    assert sorted(set(np.round(p.dist[0], 9))) == [0, 1, pytest.approx(np.sqrt(2))]


def test_wedge_of_segments():
    a = validate_metric([[0, 1], [1, 0]])
    w = wedge(a, a, 0, 0)
    assert w.n == 3
    assert sorted(w.dist[np.triu_indices(3, 1)]) == [1, 1, 2]


def test_wedge_with_point():
    a = sample_circle(2, 8)
    w = wedge(a, point())
    assert np.allclose(w.dist, a.dist)


def test_hawaiian_k1_is_circle():
    h = hawaiian_truncation(1, 12)
    assert np.allclose(h.dist, sample_circle(1.5, 12).dist)


def test_graph_subdivision():
    s = graph_to_space(MetricGraph(2, ((0, 1, 1.0),)), 0.5)
    assert s.n == 3
    assert sorted(set(s.dist[np.triu_indices(3, 1)])) == [0.5, 1.0]


def test_graph_triangle():
    s = graph_to_space(MetricGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0))), 1.0)
    assert s.n == 3 and np.allclose(s.dist[np.triu_indices(3, 1)], 1)


def test_cycle_graph_matches_circle():
    g = MetricGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)))
    s = graph_to_space(g, 0.25)
    c = sample_circle(3, 12)
    assert s.n == 12
    # same multiset of rows up to relabelling: compare sorted distance profiles
    assert np.allclose(np.sort(s.dist, axis=1)[np.argsort(s.dist.sum(1))],
                       np.sort(c.dist, axis=1)[np.argsort(c.dist.sum(1))])
    assert list(s.values) == list(c.values)


def test_projective_plane_metric():
    s = projective_plane()
    assert s.n == 31
    assert check_metric(s.dist) == []
    assert list(s.values) == [1.0, 2.0, 3.0]


def test_json_roundtrip(tmp_path):
    s = sample_circle(3, 6)
    doc = json.loads(json.dumps(s.to_json()))
    t = space_from_json(doc)
    assert np.array_equal(s.dist, t.dist)
    g = space_from_json({"kind": "generator", "generator": {"name": "circle", "params": {"r": 3, "n": 6}}})
    assert np.array_equal(g.dist, s.dist)
    e = space_from_json({"kind": "graph", "graph": {"vertices": 2, "edges": [[0, 1, 1.0]]}, "mesh": 0.5})
    assert e.n == 3


def test_json_errors():
    with pytest.raises(ValueError):
        space_from_json({"kind": "matrix"})
    with pytest.raises(ValueError):
        space_from_json({"kind": "nope"})
    with pytest.raises(ValueError):
        generate("nope", {})


def test_size_cap():
    with pytest.raises(ValueError):
        sample_circle(3, 10, max_points=8)
