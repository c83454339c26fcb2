"""Raster primitives shared by every stage of the pipeline.

Maps are plain numpy arrays indexed ``[row, col]`` (``[y, x]``):

* gray images and float maps are 2-D ``float64`` arrays,
* color images are ``(H, W, 3)`` arrays with r, g, b planes in [0, 1],
* contour masks are 2-D ``bool`` arrays,
* label maps are 2-D integer arrays with labels ``0..S-1``.

Continuous coordinates put the center of pixel ``(row, col)`` at
``(x, y) = (col + 0.5, row + 0.5)``, so an image spans ``[0, W] x [0, H]``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage


def as_float_map(values, name="map"):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_mask(values, name="mask"):
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr != 0


def as_label_map(values):
    """Validate a label map: integer labels forming the range ``0..S-1``."""
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"label map must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("label map must hold integer labels")
        arr = arr.astype(np.int64)
    present = np.unique(arr)
    if present[0] != 0 or present[-1] != len(present) - 1:
        raise ValueError(
            f"labels must form a contiguous range 0..S-1, found {present.min()}..{present.max()} "
            f"with {len(present)} distinct values"
        )
    return arr.astype(np.int64, copy=False)


def to_gray(image):
    """Luminance of a color image as the plain channel mean; gray images pass through."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3:
        return arr.mean(axis=2)
    return arr


def normalize01(values):
    """Affinely rescale a map to [0, 1]; a constant map becomes all zeros."""
    arr = np.asarray(values, dtype=np.float64)
    lo = arr.min()
    hi = arr.max()
    if hi <= lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def gaussian_kernel(sigma):
    """Sampled, unit-sum Gaussian kernel truncated at radius ``ceil(3 sigma)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(values, sigma):
    """Separable Gaussian blur with reflect padding.

    The kernel is :func:`gaussian_kernel`; padding mirrors the edge pixel
    (``d c b a | a b c d``) so constant maps are left unchanged and the
    total mass of the map is preserved.
    """
    arr = as_float_map(values)
    kernel = gaussian_kernel(sigma)
    out = ndimage.correlate1d(arr, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def dilate(mask, n):
    """Binary dilation by an ``n x n`` square, clipped at the image border."""
    if int(n) != n or n < 1 or n % 2 == 0:
        raise ValueError(f"dilation size must be a positive odd integer, got {n}")
    arr = as_mask(mask)
    if n == 1:
        return arr.copy()
    return ndimage.maximum_filter(arr, size=int(n), mode="constant", cval=False)


def resize_bilinear(values, shape):
    """Bilinear resampling with pixel-center alignment (edges clamped).

    No anti-aliasing is applied; blur first when shrinking by large factors.
    """
    arr = np.asarray(values, dtype=np.float64)
    out_h, out_w = int(shape[0]), int(shape[1])
    if out_h < 1 or out_w < 1:
        raise ValueError(f"invalid target shape {shape}")
    in_h, in_w = arr.shape
    if (in_h, in_w) == (out_h, out_w):
        return arr.copy()
    rows = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    cols = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    rows = np.clip(rows, 0, in_h - 1)
    cols = np.clip(cols, 0, in_w - 1)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    r1 = np.minimum(r0 + 1, in_h - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)
    fr = (rows - r0)[:, None]
    fc = (cols - c0)[None, :]
    # lerp form a + (b - a) t is exact on constant regions
    a, b = arr[r0][:, c0], arr[r0][:, c1]
    top = a + (b - a) * fc
    a, b = arr[r1][:, c0], arr[r1][:, c1]
    bottom = a + (b - a) * fc
    return top + (bottom - top) * fr


def downsample(values, shape):
    """Shrink a map to ``shape`` with a Gaussian anti-alias prefilter."""
    arr = np.asarray(values, dtype=np.float64)
    factor = max(arr.shape[0] / shape[0], arr.shape[1] / shape[1])
    if factor > 1:
        arr = ndimage.gaussian_filter(arr, sigma=0.5 * factor, mode="reflect")
    return resize_bilinear(arr, shape)


def fixation_pixels(xs, ys, width, height):
    """Floor-bin continuous fixation coordinates to ``(rows, cols)`` index arrays."""
    cols = np.floor(np.asarray(xs, dtype=np.float64)).astype(np.intp)
    rows = np.floor(np.asarray(ys, dtype=np.float64)).astype(np.intp)
    if cols.size and (cols.min() < 0 or cols.max() >= width or rows.min() < 0 or rows.max() >= height):
        raise ValueError(f"coordinate out of range for a {width}x{height} image")
    return rows, cols


def impulse_raster(xs, ys, width, height):
    """Count map with unit mass per fixation at its floor-binned pixel."""
    rows, cols = fixation_pixels(xs, ys, width, height)
    out = np.zeros((height, width), dtype=np.float64)
    np.add.at(out, (rows, cols), 1.0)
    return out
