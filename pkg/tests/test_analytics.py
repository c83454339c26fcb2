import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from closureguide.analytics import (
    ClosedRegionSet,
    DensityParams,
    EmptyFixationWarning,
    SegmentSaliency,
    ShapeFeatureVector,
    UndefinedCorrelationError,
    UndefinedRatioError,
    cc,
    closed_regions,
    closure_score,
    convex_hull,
    crack_perimeter,
    density_map,
    feature_correlation,
    guidance_metrics,
    hierarchical_objects,
    mae,
    mean_ci95,
    segment_saliency,
    segment_saliency_map,
    shape_features,
)
from closureguide.fixations import FixationSet
from closureguide.raster import normalize01
from oracles import closure_score_walk, ellipse_from_moments, pearson, rectangle_moments


def fixset(points, drop=False, image_id="im"):
    # start at ordinal 2 so nothing is dropped unless asked
    return FixationSet.from_points(points, image_id=image_id, start_ordinal=1 if drop else 2)


# ------------------------------------------------------------------ density

def test_density_drop_first_leaves_one_unit():
    d = density_map(fixset([(10.5, 10.5), (30.5, 20.5)], drop=True), 64, 48)
    assert d.sum() == pytest.approx(1.0, abs=1e-3)


def test_density_mass_without_drop():
    pts = [(20.2, 20.7), (40.0, 30.0), (33.3, 12.1)]
    d = density_map(fixset(pts, drop=True), 64, 48, DensityParams(sigma=4.0, drop_first_fixation=False))
    assert d.sum() == pytest.approx(3.0, abs=1e-3)


def test_density_empty_warns_and_is_zero():
    with pytest.warns(EmptyFixationWarning):
        d = density_map(fixset([(3.0, 3.0)], drop=True), 10, 8)
    assert d.shape == (8, 10) and not d.any()


# -------------------------------------------------------------- cc and mae

def test_cc_identities(rng):
    f = rng.random((20, 30))
    g = rng.random((20, 30))
    assert cc(f, f) == pytest.approx(1.0, abs=1e-12)
    assert cc(f, 3.0 - f) == pytest.approx(-1.0, abs=1e-12)
    assert cc(f, g) == pytest.approx(pearson(f.ravel().tolist(), g.ravel().tolist()), abs=1e-12)


@given(st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 1000))
def test_cc_affine_invariance(a, b, seed):
    rng = np.random.default_rng(seed)
    f, g = rng.random((12, 9)), rng.random((12, 9))
    assert abs(cc(a * f + b, g) - cc(f, g)) <= 1e-9
    assert cc(f, g) == cc(g, f)


def test_cc_constant_is_undefined():
    with pytest.raises(UndefinedCorrelationError):
        cc(np.ones((4, 4)), np.eye(4))
    with pytest.raises(ValueError):
        cc(np.eye(4), np.eye(3))


def test_mae_examples(rng):
    f, g = rng.random((6, 7)), rng.random((6, 7))
    assert mae(f, f) == 0.0
    assert mae(np.zeros((3, 3)), np.ones((3, 3))) == 1.0
    assert mae(f, g) == mae(g, f)
    assert mae(2 * f, 5 * g, normalize=True) == pytest.approx(mae(normalize01(f), normalize01(g)))
    with pytest.raises(ValueError):
        mae(f, g[:, :3])


@given(st.integers(0, 10_000))
def test_mae_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    f, g, h = rng.random((3, 5, 5))
    assert mae(f, h) <= mae(f, g) + mae(g, h) + 1e-9


# -------------------------------------------------------- segment saliency

def two_halves(h=10, w=12, split=4):
    labels = np.zeros((h, w), dtype=int)
    labels[:, split:] = 1
    return labels


def test_all_fixations_in_one_segment():
    scores = segment_saliency(two_halves(), fixset([(1.5, 2.5), (2.5, 7.5)]))
    assert [s.saliency_score for s in scores] == [1.0, 0.0]


def test_equal_counts_area_ratio_two():
    labels = np.zeros((10, 12), dtype=int)
    labels[:, 4:] = 1  # areas 40 and 80
    scores = segment_saliency(labels, fixset([(1.5, 1.5), (8.5, 1.5)]))
    assert [s.saliency_score for s in scores] == [1.0, 0.5]
    assert scores[1] == SegmentSaliency(1, 1, 80, 1 / 80, 0.5)


def test_no_retained_fixations_all_zero():
    scores = segment_saliency(two_halves(), fixset([(1.5, 1.5)], drop=True))
    assert all(s.saliency_score == 0.0 for s in scores)


@given(st.lists(st.tuples(st.floats(0, 11.99), st.floats(0, 9.99)), min_size=1, max_size=15))
def test_segment_scores_invariant_under_duplication(pts):
    labels = two_halves()
    labels[6:, :] = 2
    once = [s.saliency_score for s in segment_saliency(labels, fixset(pts))]
    twice = [s.saliency_score for s in segment_saliency(labels, fixset(pts + pts))]
    assert np.allclose(once, twice, atol=1e-12)


def test_hierarchical_objects_examples(rng):
    a = rng.random((5, 6))
    assert np.array_equal(hierarchical_objects(a, np.zeros_like(a)), normalize01(a))
    assert np.allclose(hierarchical_objects(a, a), normalize01(a), atol=1e-15)
    la = np.zeros((4, 4))
    la[0, 0] = 0.8
    lb = np.zeros((4, 4))
    lb[3, 3] = 0.4
    out = hierarchical_objects(la, lb)
    assert out[0, 0] > out[3, 3] > 0
    with pytest.raises(ValueError):
        hierarchical_objects(a, a[:2])


def test_segment_saliency_map_paints_scores():
    labels = two_halves()
    scores = segment_saliency(labels, fixset([(1.5, 1.5), (8.5, 1.5)]))
    painted = segment_saliency_map(labels, scores)
    assert set(np.unique(painted)) == {0.5, 1.0}


# ----------------------------------------------------------- closure score

def test_closure_score_interior_and_whole():
    labels = np.zeros((12, 12), dtype=int)
    labels[4:8, 3:9] = 1
    assert closure_score(labels, 1) == 1.0
    assert closure_score(np.zeros((7, 9), dtype=int), 0) == 0.0


def test_closure_score_left_half_matches_walk():
    labels = np.ones((10, 10), dtype=int)
    labels[:, :5] = 0
    nb, nr = closure_score_walk(labels.tolist(), 0)
    # left column 10, plus top and bottom rows minus the shared corners: 10 + 4 + 4
    assert (nb, nr) == (18, 26)
    assert closure_score(labels, 0) == 1 - nb / nr


@given(st.integers(0, 10_000))
def test_closure_score_matches_walk_on_random_labels(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, (9, 11))
    labels[0, 0], labels[1, 1], labels[2, 2] = 0, 1, 2
    for s in range(3):
        nb, nr = closure_score_walk(labels.tolist(), s)
        assert closure_score(labels, s) == 1 - nb / nr


@given(st.integers(1, 10), st.integers(1, 10))
def test_closure_score_translation_invariant(dx, dy):
    labels = np.zeros((30, 30), dtype=int)
    labels[3:9, 4:12] = 1
    moved = np.zeros_like(labels)
    moved[3 + dy:9 + dy, 4 + dx:12 + dx] = 1
    assert closure_score(labels, 1) == closure_score(moved, 1)


def test_closure_score_unknown_segment():
    with pytest.raises(ValueError):
        closure_score(np.zeros((4, 4), dtype=int), 3)


def test_closed_regions_threshold():
    labels = np.zeros((20, 20), dtype=int)
    labels[5:10, 5:10] = 1
    labels[0:4, 12:20] = 2  # touches the top and right border
    out = closed_regions(labels)
    assert out.member_segments == (1,)
    assert out.area == 25
    nb, nr = closure_score_walk(labels.tolist(), 0)
    assert 1 - nb / nr < 0.9
    assert closed_regions(labels, threshold=1.0).member_segments == (1,)
    assert 0 < closure_score(labels, 2) < 0.9
    assert closed_regions(labels, threshold=0.0).member_segments == (0, 1, 2)


# -------------------------------------------------------- guidance metrics

def random_fixture(seed, size=40):
    rng = np.random.default_rng(seed)
    contours = np.zeros((size, size), dtype=bool)
    for _ in range(3):
        r = rng.integers(0, size)
        c0, c1 = sorted(rng.integers(0, size, 2))
        contours[r, c0:c1 + 1] = True
    contours[rng.integers(0, size), rng.integers(0, size)] = True
    labels = np.zeros((size, size), dtype=int)
    y0, x0 = rng.integers(2, size // 2, 2)
    labels[y0:y0 + 8, x0:x0 + 8] = 1
    pts = [tuple(rng.uniform(0, size, 2)) for _ in range(rng.integers(2, 15))]
    return FixationSet.from_points(pts, image_id="im"), contours, closed_regions(labels)


@pytest.mark.parametrize("seed", range(5))
def test_guidance_metrics_range_and_monotone(seed):
    fix, contours, closed = random_fixture(seed)
    prev = None
    for n in range(3, 23, 2):
        m = guidance_metrics(fix, contours, closed, n)
        vals = (m.pof, m.poc, m.pofc, m.pocc)
        assert all(0.0 <= v <= 1.0 for v in vals)
        if prev is not None:
            assert all(b >= a for a, b in zip(prev, vals))
        prev = vals


def test_fixations_on_contours_give_pof_one():
    contours = np.zeros((20, 20), dtype=bool)
    contours[5, 2:18] = True
    fix = fixset([(3.5, 5.5), (10.2, 5.9), (17.0, 5.0)])
    for n in (1, 3, 9):
        assert guidance_metrics(fix, contours, np.zeros_like(contours), n).pof == 1.0


def test_whole_image_closed_set():
    fix, contours, _ = random_fixture(3)
    whole = ClosedRegionSet((0,), np.ones(contours.shape, dtype=bool))
    m = guidance_metrics(fix, contours, whole, 3)
    assert m.pofc == 1.0 and m.pocc == 1.0


def test_poc_counts_pixels():
    contours = np.zeros((10, 10), dtype=bool)
    contours[5, :] = True
    fix = fixset([(0.5, 5.5), (0.6, 5.4)])  # one pixel, two fixations
    m = guidance_metrics(fix, contours, np.zeros_like(contours), 3)
    assert m.poc == pytest.approx(2 / 10)


def test_guidance_errors():
    contours = np.zeros((6, 6), dtype=bool)
    with pytest.raises(UndefinedRatioError):
        guidance_metrics(fixset([(1.0, 1.0)]), contours, contours, 3)
    contours[2, 2] = True
    with pytest.raises(UndefinedRatioError):
        guidance_metrics(fixset([(1.0, 1.0)], drop=True), contours, contours, 3)
    with pytest.raises(ValueError):
        guidance_metrics(fixset([(1.0, 1.0)]), contours, np.zeros((5, 6), dtype=bool), 3)


# ---------------------------------------------------------- shape features

@pytest.mark.parametrize("w,h", [(8, 4), (4, 8), (10, 10), (3, 11)])
def test_rectangle_features_match_closed_form(w, h):
    labels = np.zeros((30, 40), dtype=int)
    labels[5:5 + h, 7:7 + w] = 1
    f = shape_features(labels, 1)
    axis, ecc, orient = ellipse_from_moments(*rectangle_moments(w, h))
    assert f.axis_ratio == pytest.approx(axis, abs=1e-6)
    assert f.eccentricity == pytest.approx(ecc, abs=1e-6)
    assert f.orientation == pytest.approx(orient, abs=1e-6)
    assert f.extent == 1.0 and f.solidity == 1.0 and f.closure_score == 1.0


def test_two_to_one_rectangle_values():
    labels = np.zeros((20, 20), dtype=int)
    labels[8:12, 6:14] = 1
    f = shape_features(labels, 1)
    assert f.axis_ratio == pytest.approx(0.5, abs=1e-12)
    assert f.eccentricity == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert f.orientation == 0.0


def test_centered_square():
    labels = np.zeros((20, 20), dtype=int)
    labels[6:14, 6:14] = 1
    f = shape_features(labels, 1)
    assert f.axis_ratio == pytest.approx(1.0) and f.extent == 1.0 and f.solidity == 1.0
    # mean pixel distance to the centre of an 8x8 block, over the half-diagonal
    assert f.centralization < 0.25


def test_full_image_segment():
    f = shape_features(np.zeros((12, 17), dtype=int), 0)
    assert f.area_ratio == 1.0 and f.perimeter_ratio == 1.0 and f.closure_score == 0.0
    assert f.centralization > 0


def test_diagonal_segment_orientation_sign():
    labels = np.zeros((30, 30), dtype=int)
    for i in range(20):
        labels[5 + i, 5 + i:8 + i] = 1  # descends to the right: y grows with x
    f = shape_features(labels, 1)
    assert f.orientation == pytest.approx(math.pi / 4, abs=0.05)
    assert f.solidity < 1.0 and f.extent < 1.0


def test_shape_feature_errors():
    with pytest.raises(ValueError):
        shape_features(np.zeros((4, 4), dtype=int), 1)
    with pytest.raises(ValueError):
        shape_features(np.zeros((4, 4), dtype=int), 0, width=5, height=4)


@given(st.integers(0, 10_000))
def test_area_ratios_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 4, (7, 9))
    labels.flat[:4] = [0, 1, 2, 3]
    total = sum(shape_features(labels, s).area_ratio for s in range(4))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_crack_perimeter_and_hull():
    seg = np.zeros((5, 5), dtype=bool)
    seg[1:3, 1:4] = True
    assert crack_perimeter(seg) == 10
    hull = convex_hull([(0, 0), (2, 0), (1, 1), (2, 2), (0, 2), (1, 0)])
    assert sorted(hull) == [(0, 0), (0, 2), (2, 0), (2, 2)]


# ----------------------------------------------------- feature correlation

def features_with(closure_values):
    base = dict.fromkeys(ShapeFeatureVector.names(), 0.3)
    return [ShapeFeatureVector(**{**base, "closure_score": c, "area_ratio": 0.1 * i})
            for i, c in enumerate(closure_values)]


def test_feature_identical_to_log_saliency():
    sal = [0.1, 0.5, 1.0, 0.02]
    feats = features_with([math.log(s + 1e-6) for s in sal])
    out = {c.feature: c for c in feature_correlation(feats, sal)}
    assert out["closure_score"].r == pytest.approx(1.0, abs=1e-12)
    assert out["solidity"].degenerate and out["solidity"].r == 0.0
    assert not out["closure_score"].degenerate


def test_feature_correlation_matches_pearson_and_accepts_records():
    sal = [0.0, 0.4, 1.0]
    feats = features_with([0.2, 0.9, 0.7])
    recs = [SegmentSaliency(i, 0, 1, 0.0, s) for i, s in enumerate(sal)]
    out = {c.feature: c.r for c in feature_correlation(feats, recs)}
    logs = [math.log(s + 1e-6) for s in sal]
    assert out["closure_score"] == pytest.approx(pearson([0.2, 0.9, 0.7], logs), abs=1e-12)


def test_feature_correlation_needs_three():
    with pytest.raises(ValueError):
        feature_correlation(features_with([0.1, 0.2]), [0.1, 0.2])
    with pytest.raises(ValueError):
        feature_correlation(features_with([0.1, 0.2, 0.3]), [0.1, 0.2])


def test_mean_ci95():
    vals = [0.6, 0.7, 0.8, 0.9]
    mean, lo, hi = mean_ci95(vals)
    half = 1.959963984540054 * np.std(vals, ddof=1) / 2
    assert mean == pytest.approx(0.75)
    assert (lo, hi) == pytest.approx((0.75 - half, 0.75 + half), abs=1e-12)
    m1 = mean_ci95([0.3])
    assert m1[0] == 0.3 and math.isnan(m1[1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert all(math.isnan(v) for v in mean_ci95([]))
