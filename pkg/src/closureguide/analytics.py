"""Fixation analytics on line drawings and segmentations.

Covers fixation density maps and their agreement (CC, MAE), per-segment
saliency from fixation density, the boundary-based closure score of a
segment, fixation/contour co-location metrics under dilation, and shape
features of segments with their correlation to saliency.
"""

from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .raster import (
    as_float_map,
    as_label_map,
    as_mask,
    dilate,
    fixation_pixels,
    gaussian_blur,
    impulse_raster,
    normalize01,
)

LOG_EPS = 1e-6
Z95 = statistics.NormalDist().inv_cdf(0.975)


class UndefinedRatioError(ValueError):
    """A ratio metric has an empty denominator."""


class UndefinedCorrelationError(ValueError):
    """Correlation with a constant map is undefined."""


class EmptyFixationWarning(UserWarning):
    """No fixations were left after dropping first fixations."""


@dataclass(frozen=True)
class DensityParams:
    sigma: float = 16.0
    drop_first_fixation: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


# ------------------------------------------------------------ density maps

def density_map(fixations, width, height, params=None):
    """Blurred fixation density: one unit of mass per retained fixation."""
    params = params or DensityParams()
    xs, ys = fixations.coordinates(params.drop_first_fixation)
    if xs.size == 0:
        warnings.warn(f"no fixations retained for image {fixations.image_id!r}", EmptyFixationWarning, stacklevel=2)
        return np.zeros((height, width))
    return gaussian_blur(impulse_raster(xs, ys, width, height), params.sigma)


def cc(f, g):
    """Pearson correlation between two maps over all pixels."""
    a = as_float_map(f, "f").ravel()
    b = as_float_map(g, "g").ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {np.shape(f)} vs {np.shape(g)}")
    a = a - a.mean()
    b = b - b.mean()
    sa = math.sqrt(float(np.dot(a, a)))
    sb = math.sqrt(float(np.dot(b, b)))
    if sa == 0 or sb == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant map")
    return max(-1.0, min(1.0, float(np.dot(a, b)) / (sa * sb)))


def mae(f, g, normalize=False):
    """Mean absolute difference of two [0, 1] maps.

    With ``normalize=True`` each map is first passed through ``normalize01``.
    """
    a = as_float_map(f, "f")
    b = as_float_map(g, "g")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if normalize:
        a, b = normalize01(a), normalize01(b)
    return float(np.mean(np.abs(a - b)))


# -------------------------------------------------------- segment saliency

@dataclass(frozen=True)
class SegmentSaliency:
    segment_id: int
    fixation_count: int
    area: int
    density: float
    saliency_score: float


def segment_saliency(labels, fixations, params=None):
    """Fixation density of every segment, scored relative to the densest one."""
    params = params or DensityParams()
    labels = as_label_map(labels)
    h, w = labels.shape
    n_seg = int(labels.max()) + 1
    xs, ys = fixations.coordinates(params.drop_first_fixation)
    rows, cols = fixation_pixels(xs, ys, w, h)
    counts = np.bincount(labels[rows, cols], minlength=n_seg)
    areas = np.bincount(labels.ravel(), minlength=n_seg)
    dens = counts / areas
    top = dens.max()
    scores = dens / top if top > 0 else np.zeros(n_seg)
    return [
        SegmentSaliency(i, int(counts[i]), int(areas[i]), float(dens[i]), float(scores[i]))
        for i in range(n_seg)
    ]


def segment_saliency_map(labels, scores):
    """Paint each segment with its saliency score."""
    labels = as_label_map(labels)
    lut = np.zeros(int(labels.max()) + 1)
    for s in scores:
        lut[s.segment_id] = s.saliency_score
    return lut[labels]


def hierarchical_objects(map_a, map_b):
    """Equal-weight sum of two segment-saliency maps, rescaled to [0, 1]."""
    a = as_float_map(map_a, "map_a")
    b = as_float_map(map_b, "map_b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return normalize01(a + b)


# ----------------------------------------------------------- closure score

def boundary_mask(labels, segment_id):
    """Segment pixels 4-adjacent to another label or to the image border."""
    seg = labels == segment_id
    padded = np.pad(seg, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return seg & ~interior


def _border_ring(shape):
    ring = np.zeros(shape, dtype=bool)
    ring[0, :] = ring[-1, :] = True
    ring[:, 0] = ring[:, -1] = True
    return ring


def closure_score(labels, segment_id):
    """Fraction of a segment's boundary pixels that are not on the image border."""
    labels = as_label_map(labels)
    if not 0 <= segment_id <= labels.max() or int(segment_id) != segment_id:
        raise ValueError(f"unknown segment id {segment_id}")
    boundary = boundary_mask(labels, segment_id)
    nr = int(boundary.sum())
    nb = int((boundary & _border_ring(labels.shape)).sum())
    return 1.0 - nb / nr


@dataclass(frozen=True)
class ClosedRegionSet:
    member_segments: tuple
    pixels: np.ndarray  # bool mask

    @property
    def area(self):
        return int(self.pixels.sum())


def closed_regions(labels, threshold=0.9):
    """Segments whose closure score exceeds ``threshold``, with their pixel union.

    A segment that never touches the border (score exactly 1) always counts,
    so ``threshold=1.0`` selects the fully enclosed segments.
    """
    labels = as_label_map(labels)
    members = tuple(
        s for s in range(int(labels.max()) + 1)
        if (cs := closure_score(labels, s)) > threshold or cs == 1.0
    )
    pixels = np.isin(labels, members) if members else np.zeros(labels.shape, dtype=bool)
    return ClosedRegionSet(members, pixels)


# -------------------------------------------------------- guidance metrics

@dataclass(frozen=True)
class GuidanceMetrics:
    pof: float
    poc: float
    pofc: float
    pocc: float


def _fixation_cells(fixations, shape, drop_first):
    xs, ys = fixations.coordinates(drop_first)
    return fixation_pixels(xs, ys, shape[1], shape[0])


def pof(fixations, contours, n, drop_first=True):
    """Share of fixations inside the ``n x n`` dilated contours."""
    mask = as_mask(contours, "contours")
    rows, cols = _fixation_cells(fixations, mask.shape, drop_first)
    if rows.size == 0:
        raise UndefinedRatioError("PoF undefined: no fixations retained")
    if not mask.any():
        return 0.0
    return float(dilate(mask, n)[rows, cols].mean())


def poc(fixations, contours, n, drop_first=True):
    """Share of contour pixels inside the ``n x n`` dilated fixation pixels."""
    mask = as_mask(contours, "contours")
    total = int(mask.sum())
    if total == 0:
        raise UndefinedRatioError("PoC undefined: contour set is empty")
    rows, cols = _fixation_cells(fixations, mask.shape, drop_first)
    fix = np.zeros(mask.shape, dtype=bool)
    fix[rows, cols] = True
    return int((mask & dilate(fix, n)).sum()) / total


def pofc(fixations, closed, n, drop_first=True):
    """Share of fixations inside the ``n x n`` dilated closed-region pixels."""
    region = closed.pixels if isinstance(closed, ClosedRegionSet) else as_mask(closed, "closed")
    rows, cols = _fixation_cells(fixations, region.shape, drop_first)
    if rows.size == 0:
        raise UndefinedRatioError("PoFC undefined: no fixations retained")
    if not region.any():
        return 0.0
    return float(dilate(region, n)[rows, cols].mean())


def pocc(closed, n):
    """Share of the image covered by the ``n x n`` dilated closed regions."""
    region = closed.pixels if isinstance(closed, ClosedRegionSet) else as_mask(closed, "closed")
    return float(dilate(region, n).mean())


def guidance_metrics(fixations, contours, closed, n, drop_first=True):
    """PoF, PoC, PoFC and PoCC at dilation size ``n``.

    Fixation ratios count fixations (duplicates on one pixel count twice);
    contour and area ratios count pixels.
    """
    contours = as_mask(contours, "contours")
    region = closed.pixels if isinstance(closed, ClosedRegionSet) else as_mask(closed, "closed")
    if region.shape != contours.shape:
        raise ValueError(f"dimension mismatch: {contours.shape} vs {region.shape}")
    return GuidanceMetrics(
        pof=pof(fixations, contours, n, drop_first),
        poc=poc(fixations, contours, n, drop_first),
        pofc=pofc(fixations, region, n, drop_first),
        pocc=pocc(region, n),
    )


# ---------------------------------------------------------- shape features

@dataclass(frozen=True)
class ShapeFeatureVector:
    area_ratio: float
    centralization: float
    perimeter_ratio: float
    axis_ratio: float
    eccentricity: float
    orientation: float
    equiv_diameter: float
    solidity: float
    extent: float
    closure_score: float

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def values(self):
        return [getattr(self, name) for name in self.names()]


def convex_hull(points):
    """Monotone-chain convex hull, counter-clockwise, no collinear points."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices):
    if len(vertices) < 3:
        return 0.0
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def crack_perimeter(seg):
    """Number of unit pixel edges between the segment and everything else."""
    padded = np.pad(seg, 1, constant_values=False).astype(np.int8)
    return int(np.abs(np.diff(padded, axis=0)).sum() + np.abs(np.diff(padded, axis=1)).sum())


def shape_features(labels, segment_id, width=None, height=None):
    """Ten shape descriptors of one segment.

    Pixels are treated as unit squares: second moments include the 1/12
    per-pixel term, the convex hull runs over pixel corners, and the perimeter
    counts exposed pixel edges (a full-image segment has perimeter 2(W+H)).
    Orientation is the major-axis angle with x to the right and y down.
    """
    labels = as_label_map(labels)
    h, w = labels.shape
    width = w if width is None else width
    height = h if height is None else height
    if (height, width) != labels.shape:
        raise ValueError(f"labels are {w}x{h}, not {width}x{height}")
    if not 0 <= segment_id <= labels.max() or int(segment_id) != segment_id:
        raise ValueError(f"unknown segment id {segment_id}")
    seg = labels == segment_id
    rows, cols = np.nonzero(seg)
    area = rows.size
    xs = cols + 0.5
    ys = rows + 0.5

    half_diag = math.hypot(width, height) / 2.0
    centralization = float(np.mean(np.hypot(xs - width / 2.0, ys - height / 2.0))) / half_diag

    mx, my = xs.mean(), ys.mean()
    cxx = float(np.mean((xs - mx) ** 2)) + 1.0 / 12.0
    cyy = float(np.mean((ys - my) ** 2)) + 1.0 / 12.0
    cxy = float(np.mean((xs - mx) * (ys - my)))
    half_tr = 0.5 * (cxx + cyy)
    root = math.sqrt(max(0.25 * (cxx - cyy) ** 2 + cxy * cxy, 0.0))
    lam_major = half_tr + root
    lam_minor = max(half_tr - root, 0.0)
    axis_ratio = math.sqrt(lam_minor / lam_major)
    eccentricity = math.sqrt(1.0 - lam_minor / lam_major)
    orientation = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
    if orientation <= -math.pi / 2:
        orientation += math.pi

    boundary = boundary_mask(labels, segment_id)
    br, bc = np.nonzero(boundary)
    corners = np.concatenate(
        [np.column_stack([bc + dx, br + dy]) for dx in (0, 1) for dy in (0, 1)]
    )
    hull_area = polygon_area(convex_hull(corners.tolist()))
    bbox_area = (rows.max() - rows.min() + 1) * (cols.max() - cols.min() + 1)

    return ShapeFeatureVector(
        area_ratio=area / (width * height),
        centralization=centralization,
        perimeter_ratio=crack_perimeter(seg) / (2.0 * (width + height)),
        axis_ratio=axis_ratio,
        eccentricity=eccentricity,
        orientation=orientation,
        equiv_diameter=math.sqrt(4.0 * area / math.pi) / math.hypot(width, height),
        solidity=min(1.0, area / hull_area),
        extent=float(area / bbox_area),
        closure_score=closure_score(labels, segment_id),
    )


@dataclass(frozen=True)
class FeatureCorrelation:
    feature: str
    r: float
    degenerate: bool = False


def _pearson(a, b):
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    den = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if den == 0:
        return None
    return max(-1.0, min(1.0, float(np.dot(a, b)) / den))


def feature_correlation(features, scores, eps=LOG_EPS):
    """Pearson r of every shape feature against log(saliency + eps).

    ``scores`` holds per-segment saliency values (numbers or
    :class:`SegmentSaliency`). A constant feature (or constant saliency)
    yields r = 0 flagged as degenerate.
    """
    if len(features) != len(scores):
        raise ValueError("features and scores must be aligned")
    if len(features) < 3:
        raise ValueError(f"need at least 3 segments, got {len(features)}")
    values = [s.saliency_score if isinstance(s, SegmentSaliency) else float(s) for s in scores]
    log_sal = np.log(np.asarray(values) + eps)
    out = []
    for name in ShapeFeatureVector.names():
        col = [getattr(f, name) for f in features]
        r = _pearson(col, log_sal)
        out.append(FeatureCorrelation(name, 0.0, True) if r is None else FeatureCorrelation(name, r))
    return out


# ----------------------------------------------------------------- summary

def mean_ci95(values):
    """Mean and normal-approximation 95% interval; ``(mean, nan, nan)`` for n < 2."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(vals.mean())
    if vals.size < 2:
        return mean, math.nan, math.nan
    half = Z95 * float(vals.std(ddof=1)) / math.sqrt(vals.size)
    return mean, mean - half, mean + half
