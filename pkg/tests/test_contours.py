import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from closureguide.contours import CHAIN_HEADER, EdgeParams, chain_rows, detect_edges, link_edges
from oracles import hollow_square


def _is_8_path(points):
    return all(max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1 for a, b in zip(points, points[1:]))


def test_constant_image_has_no_edges():
    assert not detect_edges(np.full((32, 32), 0.4)).any()


def test_vertical_step_gives_single_column():
    img = np.zeros((40, 40))
    img[:, 20:] = 1.0
    edges = detect_edges(img)
    cols = np.nonzero(edges.any(axis=0))[0]
    assert cols.size == 1
    assert edges[:, cols[0]].all()
    assert edges.max() <= 1.0 and edges.min() >= 0.0


def test_diagonal_step_is_one_pixel_thick():
    ys, xs = np.mgrid[0:64, 0:64]
    img = (xs > ys).astype(float)
    edges = detect_edges(img) > 0
    assert edges.sum() > 50
    # no 2x2 block and no 4-adjacent pair along a 45 degree edge
    blocks = edges[:-1, :-1] & edges[1:, :-1] & edges[:-1, 1:] & edges[1:, 1:]
    assert not blocks.any()
    assert not (edges[:, :-1] & edges[:, 1:]).any()
    assert not (edges[:-1, :] & edges[1:, :]).any()


def test_edge_params_validation():
    with pytest.raises(ValueError):
        EdgeParams(high_threshold=0.1, low_threshold=0.2)
    with pytest.raises(ValueError):
        EdgeParams(min_chain_length=1)


def test_straight_segment_one_chain():
    m = np.zeros((30, 30), dtype=bool)
    m[10, 5:25] = True
    chains, out = link_edges(m, 10)
    assert len(chains) == 1 and chains[0].pixel_count == 20
    assert np.array_equal(out, m)
    assert not chains[0].closed


def test_speckle_is_pruned():
    m = np.zeros((20, 20), dtype=bool)
    m[5, 5:10] = True
    chains, out = link_edges(m, 10)
    assert chains == [] and not out.any()


def test_hollow_square_is_one_closed_chain():
    m = hollow_square(20, 4, 4, 10)
    chains, out = link_edges(m, 10)
    assert len(chains) == 1 and chains[0].closed
    assert chains[0].pixel_count == m.sum()
    assert np.array_equal(out, m)


def test_t_junction_splits_into_branches():
    m = np.zeros((21, 21), dtype=bool)
    m[10, 2:19] = True
    m[11:19, 10] = True
    chains, out = link_edges(m, 2)
    assert len(chains) == 3
    assert np.array_equal(out, m)
    for ch in chains:
        assert _is_8_path(ch.points)


def test_chain_points_are_x_then_y():
    m = np.zeros((10, 12), dtype=bool)
    m[2, 3:9] = True
    chains, _ = link_edges(m, 2)
    assert {p[1] for p in chains[0].points} == {2}
    assert {p[0] for p in chains[0].points} == set(range(3, 9))


def test_chain_rows_layout():
    m = np.zeros((5, 5), dtype=bool)
    m[1, 1:4] = True
    rows = list(chain_rows(link_edges(m, 2)[0]))
    assert len(CHAIN_HEADER) == 5
    assert [r[:2] for r in rows] == [(0, 0), (0, 1), (0, 2)]


masks = arrays(bool, st.tuples(st.integers(4, 24), st.integers(4, 24)), elements=st.booleans())


@given(masks)
def test_linking_partitions_mask_without_loss(m):
    # components of >= 2 pixels survive min length 2 with zero loss
    lab, n = ndimage.label(m, structure=np.ones((3, 3)))
    sizes = np.bincount(lab.ravel())
    big = m & (sizes[lab] >= 2)
    chains, out = link_edges(big, 2)
    assert np.array_equal(out, big)
    owners = {}
    for i, ch in enumerate(chains):
        assert _is_8_path(ch.points)
        for p in set(ch.points):
            owners.setdefault(p, set()).add(i)
    assert all(len(v) == 1 for v in owners.values())
    assert set(owners) == {(int(c), int(r)) for r, c in zip(*np.nonzero(big))}


@given(masks, st.integers(2, 12), st.integers(1, 10))
def test_pruning_is_monotone(m, lo, extra):
    _, a = link_edges(m, lo)
    _, b = link_edges(m, lo + extra)
    assert np.all(a >= b)
