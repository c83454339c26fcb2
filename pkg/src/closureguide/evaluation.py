"""Fixation-prediction scoring: Judd-style ROC curves and model comparison."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .analytics import DensityParams, Z95
from .raster import as_float_map, fixation_pixels, gaussian_blur

CURVE_HEADER = ["model", "image_id", "threshold", "tpr", "salient_fraction"]
SUMMARY_HEADER = ["model", "mean_auc", "ci_low", "ci_high"]
DIFF_HEADER = ["baseline", "guided", "mean_difference", "ci_low", "ci_high", "n_images"]
GRID_POINTS = 101


@dataclass(frozen=True)
class EvalParams:
    """Evaluation-time treatment of maps; ``blur_sigma = 0`` scores them as given."""

    blur_sigma: float = 0.0

    def __post_init__(self):
        if not self.blur_sigma >= 0:
            raise ValueError(f"blur_sigma must be >= 0, got {self.blur_sigma}")

    def prepare(self, saliency):
        sal = as_float_map(saliency, "saliency")
        return gaussian_blur(sal, self.blur_sigma) if self.blur_sigma > 0 else sal


@dataclass(frozen=True)
class RocCurve:
    points: tuple  # ((threshold, tpr, salient_fraction), ...), descending threshold
    auc: float
    image_id: str = ""

    def xy(self):
        """Curve including the (0, 0) and (1, 1) endpoints as two arrays."""
        fpr = [0.0] + [p[2] for p in self.points] + [1.0]
        tpr = [0.0] + [p[1] for p in self.points] + [1.0]
        return np.array(fpr), np.array(tpr)


def roc_judd(saliency, fixations, params=None):
    """ROC of fixation hits against the fraction of the image called salient.

    Thresholds are the distinct saliency values under the retained
    fixations. At threshold ``t`` the true positive rate is the share of
    fixations with saliency ``>= t`` and the salient fraction is the share of
    pixels with saliency ``>= t``; fixations tied at one value enter together.
    AUC is the trapezoid area with (0, 0) and (1, 1) appended.
    """
    params = params or DensityParams()
    sal = as_float_map(saliency, "saliency")
    h, w = sal.shape
    xs, ys = fixations.coordinates(params.drop_first_fixation)
    if xs.size == 0:
        raise ValueError(f"no fixations retained for image {fixations.image_id!r}")
    rows, cols = fixation_pixels(xs, ys, w, h)
    at_fix = sal[rows, cols]
    thresholds = np.unique(at_fix)[::-1]

    flat = np.sort(sal.ravel())
    fix_sorted = np.sort(at_fix)
    n_pix = flat.size
    n_fix = at_fix.size
    # counts of values >= t via sorted search
    above_pix = n_pix - np.searchsorted(flat, thresholds, side="left")
    above_fix = n_fix - np.searchsorted(fix_sorted, thresholds, side="left")
    tpr = above_fix / n_fix
    frac = above_pix / n_pix

    xs_curve = np.concatenate([[0.0], frac, [1.0]])
    ys_curve = np.concatenate([[0.0], tpr, [1.0]])
    auc = float(np.sum(np.diff(xs_curve) * (ys_curve[1:] + ys_curve[:-1]) / 2.0))
    points = tuple((float(t), float(a), float(b)) for t, a, b in zip(thresholds, tpr, frac))
    return RocCurve(points, auc, fixations.image_id)


def curve_rows(model, curve):
    for t, tpr, frac in curve.points:
        yield model, curve.image_id, t, tpr, frac


def mean_curve(curves, grid_points=GRID_POINTS):
    """Average TPR of several curves on a fixed salient-fraction grid (linear interpolation)."""
    grid = np.linspace(0.0, 1.0, grid_points)
    stack = []
    for curve in curves:
        fpr, tpr = curve.xy()
        # np.interp needs increasing x; vertical steps keep their upper value
        stack.append(np.interp(grid, fpr, tpr, left=0.0, right=1.0))
    return grid, np.mean(stack, axis=0)


@dataclass(frozen=True)
class ModelSummary:
    model: str
    mean_auc: float
    ci_low: float
    ci_high: float
    n_images: int

    @property
    def ci_defined(self):
        return not math.isnan(self.ci_low)


@dataclass(frozen=True)
class PairedDifference:
    baseline: str
    guided: str
    mean_difference: float
    ci_low: float
    ci_high: float
    n_images: int

    @property
    def ci_defined(self):
        return not math.isnan(self.ci_low)


@dataclass(frozen=True)
class Comparison:
    models: tuple
    differences: tuple


def _mean_ci(values):
    vals = np.asarray(values, dtype=float)
    mean = float(vals.mean())
    if vals.size < 2:
        return mean, math.nan, math.nan
    half = Z95 * float(vals.std(ddof=1)) / math.sqrt(vals.size)
    return mean, mean - half, mean + half


def compare_models(runs, pairs=None):
    """Per-model mean AUC with 95% intervals, plus paired per-image differences.

    Parameters
    ----------
    runs : iterable of (model_name, RocCurve)
        One entry per model and image; the curve's ``image_id`` keys the image.
    pairs : list of (baseline, guided), optional
        Which models to difference (``guided - baseline``). Defaults to every
        model against every later one in first-seen order.

    Intervals use the normal approximation over images and are NaN (reported
    as undefined) for a single image.
    """
    by_model = defaultdict(dict)
    order = []
    for name, curve in runs:
        if name not in by_model:
            order.append(name)
        if curve.image_id in by_model[name]:
            raise ValueError(f"duplicate image {curve.image_id!r} for model {name!r}")
        by_model[name][curve.image_id] = curve.auc
    if len(order) < 2:
        raise ValueError("need runs from at least two models")
    images = set(by_model[order[0]])
    for name in order[1:]:
        if set(by_model[name]) != images:
            raise ValueError(f"model {name!r} was scored on a different image set than {order[0]!r}")
    image_ids = sorted(images)

    summaries = []
    for name in order:
        mean, lo, hi = _mean_ci([by_model[name][i] for i in image_ids])
        summaries.append(ModelSummary(name, mean, lo, hi, len(image_ids)))

    if pairs is None:
        pairs = [(a, b) for k, a in enumerate(order) for b in order[k + 1:]]
    diffs = []
    for base, guided in pairs:
        if base not in by_model or guided not in by_model:
            raise ValueError(f"unknown model in pair ({base!r}, {guided!r})")
        delta = [by_model[guided][i] - by_model[base][i] for i in image_ids]
        mean, lo, hi = _mean_ci(delta)
        diffs.append(PairedDifference(base, guided, mean, lo, hi, len(image_ids)))
    return Comparison(tuple(summaries), tuple(diffs))
