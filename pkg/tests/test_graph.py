import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from metricgraph import (
    GraphError,
    GraphFormatError,
    build_graph,
    g14_graph,
    parse_graph,
    pumpkin_graph,
    read_graph,
    serialize_graph,
    write_graph,
)

G14_LENGTHS = [11.91371443, 7.08276253, 6.0, 2.236067977, 4.123105626, 1.414213562, 2.0,
               1.0, 4.7169892, 4.472135955, 2.0, 2.0, 1.414213562, 4.472135955]


def test_pumpkin_degrees():
    g = build_graph(2, [(1, 2, math.sqrt(2)), (1, 2, math.sqrt(3)), (1, 2, math.sqrt(5))])
    assert g == pumpkin_graph()
    assert list(g.degrees) == [3, 3]
    assert g.arc_count == 3


def test_single_edge_and_path():
    assert list(build_graph(2, [(1, 2, 1.0)]).degrees) == [1, 1]
    path = build_graph(3, [(1, 2, 0.5), (2, 3, 0.5)])
    assert list(path.degrees) == [1, 2, 1]


def test_g14_lengths():
    g = g14_graph()
    assert g.arc_count == 14
    assert g.vertex_count == 14
    assert len(g.components()) == 1
    assert_allclose(g.lengths[3], 2.236067977, rtol=0, atol=1e-12)
    assert_allclose(g.total_length, sum(G14_LENGTHS), rtol=1e-9)


@pytest.mark.parametrize(
    "n, edges",
    [
        (2, [(1, 2, 0.0)]),
        (2, [(1, 2, -1.0)]),
        (2, [(1, 2, float("nan"))]),
        (2, [(1, 3, 1.0)]),
        (4, [(1, 2, 1.0), (3, 4, 1.0)]),
    ],
)
def test_invalid_graphs(n, edges):
    with pytest.raises(GraphError):
        build_graph(n, edges)


def test_disconnected_reports_components():
    with pytest.raises(GraphError) as info:
        build_graph(4, [(1, 2, 1.0), (3, 4, 1.0)])
    assert sorted(map(sorted, info.value.components)) == [[1, 2], [3, 4]]
    g = build_graph(4, [(1, 2, 1.0), (3, 4, 1.0)], allow_disconnected=True)
    assert len(g.components()) == 2


def test_round_trip_bitwise(tmp_path):
    g = pumpkin_graph()
    h = parse_graph(serialize_graph(g))
    assert h == g
    assert np.array_equal(h.lengths, g.lengths)
    path = tmp_path / "p.graph"
    write_graph(g, path)
    assert read_graph(path) == g


def test_parse_missing_length_names_line():
    text = "vertices 2\narc 1 1 2 1.0\narc 2 1 2\n"
    with pytest.raises(GraphFormatError) as info:
        parse_graph(text)
    assert info.value.lineno == 3
    assert "line 3" in str(info.value)


@pytest.mark.parametrize(
    "text",
    [
        "arc 1 1 2 1.0\n",
        "vertices 2\nvertices 2\narc 1 1 2 1\n",
        "vertices 2\narc 1 1 2 x\n",
        "vertices 2\narc 2 1 2 1\n",
        "vertices 2\nedge 1 1 2 1\n",
        "",
    ],
)
def test_parse_errors(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)


def test_comments_ignored():
    g = parse_graph("# header\nvertices 2  # two\n\narc 1 1 2 0.5\n")
    assert g.total_length == 0.5


def test_split_arc_preserves_length():
    g = pumpkin_graph().split_arc(2, 0.3)
    assert g.vertex_count == 3
    assert g.degree(3) == 2
    assert_allclose(g.total_length, pumpkin_graph().total_length, rtol=1e-15)


def test_incidence_signs():
    g = build_graph(2, [(1, 2, 1.0)])
    (tail,) = g.incidences(1)
    (head,) = g.incidences(2)
    assert tail.sign == 1 and head.sign == -1


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(2, 8))
    edges = [(draw(st.integers(1, v - 1)), v, draw(st.floats(0.05, 10.0))) for v in range(2, n + 1)]
    extra = draw(st.integers(0, 6))
    for _ in range(extra):
        edges.append((draw(st.integers(1, n)), draw(st.integers(1, n)), draw(st.floats(0.05, 10.0))))
    return build_graph(n, edges)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_degree_sum_and_round_trip(g):
    assert int(np.sum(g.degrees)) == 2 * g.arc_count
    assert parse_graph(serialize_graph(g)) == g
    assert_allclose(g.scaled(2.5).total_length, 2.5 * g.total_length, rtol=1e-14)
