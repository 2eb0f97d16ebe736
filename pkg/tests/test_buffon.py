from collections import Counter

import numpy as np
import pytest
from numpy.testing import assert_allclose

from metricgraph import DegenerateGraphError, buffon_generate, needle_graph
from metricgraph.buffon import merge_radius, sample_needles

CROSS = np.array([[[0.0, 0.0], [2.0, 2.0]], [[0.0, 2.0], [2.0, 0.0]]])


def test_two_needles_kept():
    g = needle_graph(CROSS, 1e-6)
    assert g.vertex_count == 5
    assert g.arc_count == 4
    assert sorted(g.degrees.tolist()) == [1, 1, 1, 1, 4]
    assert_allclose(g.lengths, np.sqrt(2.0), rtol=1e-14)


def test_two_needles_pruned_is_degenerate():
    with pytest.raises(DegenerateGraphError) as info:
        needle_graph(CROSS, 1e-6, prune=True)
    assert info.value.intersections == 1


def test_close_intersections_merge():
    # third needle crosses the other two near their common crossing point
    segs = np.concatenate([CROSS, [[[0.0, 1.001], [2.0, 1.001]]]])
    assert needle_graph(segs, 1e-6).vertex_count == 9
    merged = needle_graph(segs, 0.01)
    assert merged.vertex_count == 7
    assert max(merged.degrees) == 6


def test_deterministic():
    a = buffon_generate(60, 10.0, 0.05, seed=7)
    b = buffon_generate(60, 10.0, 0.05, seed=7)
    assert a == b
    assert np.array_equal(a.lengths, b.lengths)
    assert a != buffon_generate(60, 10.0, 0.05, seed=8)


def test_needle_sampling_bounds(rng):
    segs = sample_needles(500, 4.0, rng)
    side = 4.0 / np.sqrt(2.0)
    assert np.all((segs[:, 0] >= 0) & (segs[:, 0] <= side))
    lengths = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
    assert np.all((lengths > 0) & (lengths <= 2.0))


def test_merge_radius():
    assert_allclose(merge_radius(10.0, 0.5), 0.36)


def test_degree_statistics():
    g = buffon_generate(300, 10.0, 0.2, seed=3, prune=True)
    counts = Counter(g.degrees.tolist())
    assert counts.most_common(1)[0][0] == 4
    assert 0.05 <= counts[6] / g.vertex_count <= 0.25
    assert len(g.components()) == 1


@pytest.mark.parametrize("args", [(1, 10.0, 0.1), (10, 0.0, 0.1), (10, 10.0, -1.0)])
def test_bad_arguments(args):
    with pytest.raises(ValueError):
        buffon_generate(*args, seed=0)
