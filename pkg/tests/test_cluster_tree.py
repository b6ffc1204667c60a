import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwfmm.cluster_tree import build_tree
from dwfmm.geometry import PointSet


def _collinear(n):
    return PointSet(np.arange(n, dtype=float)[:, None] * np.ones((1, 2)))


def test_single_point_is_root_leaf():
    tree = build_tree(PointSet(np.array([[0.2, 0.4]])), leaf_size=4)
    assert len(tree) == 1
    assert tree[tree.root].is_leaf
    assert tree.depth == 0


def test_eight_collinear_points():
    tree = build_tree(_collinear(8), leaf_size=2)
    assert tree.depth == 2
    leaves = tree.leaves()
    assert [c.size for c in leaves] == [2, 2, 2, 2]
    assert [c.size for c in tree.level_clusters(1)] == [4, 4]
    assert [c.id for c in tree.level_clusters(0)] == [tree.root]


def test_level_out_of_range():
    tree = build_tree(_collinear(8), leaf_size=2)
    with pytest.raises(ValueError):
        tree.level_clusters(3)
    with pytest.raises(ValueError):
        build_tree(_collinear(8), leaf_size=0)


def test_anisotropic_box_splits_long_axis_first(rng):
    x = rng.random((10_000, 2)) * np.array([1.0, 0.01])
    tree = build_tree(PointSet(x), leaf_size=32)
    # walk down the leftmost branch; the long edge halves each time
    cid = tree.root
    axes = []
    for _ in range(7):
        c = tree[cid]
        axes.append(int(np.argmax(c.bbox.edges)))
        cid = c.children[0]
    assert axes == [0] * 7


def test_tie_goes_to_lowest_dimension():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.2, 0.9], [0.8, 0.1]])
    tree = build_tree(PointSet(x), leaf_size=2)
    left = tree[tree[tree.root].children[0]]
    # split along dimension 0: the two smallest x1 values go left
    assert sorted(tree.points.coords[left.start : left.stop, 0]) == [0.0, 0.2]


def test_duplicate_points_still_split_by_count():
    x = np.zeros((17, 3))
    tree = build_tree(PointSet(x), leaf_size=4)
    assert sum(c.size for c in tree.leaves()) == 17
    assert max(c.size for c in tree.leaves()) <= 4


def test_stats_fields(rng):
    tree = build_tree(PointSet(rng.random((300, 3))), leaf_size=20)
    s = tree.stats()
    assert s["n_points"] == 300
    assert s["n_leaves"] == len(tree.leaves())
    assert sum(c for c in s["clusters_per_level"]) == s["n_clusters"]
    assert s["max_leaf_size"] <= 20


@settings(max_examples=40)
@given(
    n=st.integers(1, 400),
    d=st.integers(1, 5),
    leaf=st.integers(1, 40),
    seed=st.integers(0, 2**31 - 1),
    dup=st.booleans(),
)
def test_tree_invariants(n, d, leaf, seed, dup):
    rng = np.random.default_rng(seed)
    x = rng.random((n, d))
    if dup:
        x = np.round(x * 3) / 3
    tree = build_tree(PointSet(x), leaf_size=leaf)
    pts = tree.points

    # leaves tile [0, N) in order
    leaves = tree.leaves()
    assert leaves[0].start == 0 and leaves[-1].stop == n
    assert all(a.stop == b.start for a, b in zip(leaves, leaves[1:]))
    assert all(1 <= c.size <= leaf for c in leaves)

    # reordered points are the input rows under the recorded permutation
    assert sorted(pts.permutation.tolist()) == list(range(n))
    assert np.array_equal(pts.coords, x[pts.permutation])
    assert np.array_equal(pts.to_original_order(pts.coords), x)

    for c in tree.clusters:
        block = pts.coords[c.start : c.stop]
        assert np.all(c.bbox.contains(block))
        if not c.is_leaf:
            a, b = (tree[i] for i in c.children)
            assert (a.start, b.stop) == (c.start, c.stop) and a.stop == b.start
            assert abs(a.size - b.size) <= 1
            assert a.parent == c.id and b.parent == c.id
        # balanced: every cluster holds floor or ceil of N / 2^level
        assert n // 2**c.level <= c.size <= -(-n // 2**c.level)
        # contained in every ancestor's box
        p = c.parent
        while p is not None:
            assert np.all(tree[p].bbox.contains(block))
            p = tree[p].parent


def test_depth_grows_logarithmically(rng):
    for n in (1000, 4000, 16000):
        tree = build_tree(PointSet(rng.random((n, 4))), leaf_size=32)
        assert tree.depth == int(np.ceil(np.log2(n / 32)))
