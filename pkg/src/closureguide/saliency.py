"""Bottom-up saliency models and the closure-guided combination.

Two bottom-up baselines are provided:

* :func:`itti_saliency` -- intensity, color-opponency and orientation contrast
  over a Gaussian pyramid with center-surround differences.
* :func:`signature_saliency` -- the sign of the DCT spectrum ("image
  signature"), reconstructed, squared and blurred.

:func:`combine` multiplies a bottom-up map by the line-drawing prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft, ndimage

from .raster import as_float_map, gaussian_blur, normalize01, resize_bilinear, downsample

_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class IttiParams:
    pyramid_levels: int = 9
    center_levels: tuple = (2, 3, 4)
    surround_deltas: tuple = (3, 4)
    orientation_count: int = 4
    output_level: int = 4
    min_level_size: int = 8

    def __post_init__(self):
        if self.orientation_count < 1:
            raise ValueError(f"orientation_count must be >= 1, got {self.orientation_count}")
        if self.pyramid_levels < 2:
            raise ValueError(f"pyramid_levels must be >= 2, got {self.pyramid_levels}")
        if not self.center_levels or not self.surround_deltas:
            raise ValueError("center_levels and surround_deltas must be non-empty")
        if min(self.center_levels) < 0 or min(self.surround_deltas) < 1:
            raise ValueError("center levels must be >= 0 and surround deltas >= 1")
        if max(self.center_levels) + max(self.surround_deltas) >= self.pyramid_levels:
            raise ValueError("every center level + surround delta must stay below pyramid_levels")


@dataclass(frozen=True)
class SigParams:
    working_size: tuple = (64, 48)  # (width, height)
    blur_sigma: float = 2.5

    def __post_init__(self):
        if min(self.working_size) < 16:
            raise ValueError(f"working_size must be >= 16 in each dimension, got {self.working_size}")
        if not self.blur_sigma > 0:
            raise ValueError(f"blur_sigma must be positive, got {self.blur_sigma}")


def _as_rgb(image):
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected a gray (H, W) or color (H, W, 3) image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


# ------------------------------------------------------------------ IT model

def gaussian_pyramid(plane, levels):
    """Binomial-filtered dyadic pyramid; level 0 is the input."""
    pyr = [plane]
    for _ in range(1, levels):
        prev = pyr[-1]
        smooth = ndimage.correlate1d(prev, _BINOMIAL5, axis=0, mode="reflect")
        smooth = ndimage.correlate1d(smooth, _BINOMIAL5, axis=1, mode="reflect")
        pyr.append(smooth[::2, ::2])
    return pyr


def usable_levels(height, width, params):
    """Pyramid depth after dropping levels smaller than ``min_level_size``."""
    levels = 1
    h, w = height, width
    while levels < params.pyramid_levels:
        h, w = (h + 1) // 2, (w + 1) // 2
        if min(h, w) < params.min_level_size:
            break
        levels += 1
    return levels


def oriented_kernel(theta, sigma_along=2.0, sigma_across=1.0, offset=2.0):
    """Zero-mean line detector: a center Gaussian minus two offset flanks.

    The anisotropic Gaussian is elongated along ``theta``; the flanks are
    shifted by ``offset`` pixels across it. Responds to bars oriented at
    ``theta`` (radians, x to the right, y down).
    """
    radius = int(math.ceil(3 * max(sigma_along, sigma_across) + offset))
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(float)
    ux, uy = math.cos(theta), math.sin(theta)

    def lobe(shift):
        px = xs + shift * uy
        py = ys - shift * ux
        along = px * ux + py * uy
        across = -px * uy + py * ux
        g = np.exp(-0.5 * ((along / sigma_along) ** 2 + (across / sigma_across) ** 2))
        return g / g.sum()

    return lobe(0.0) - 0.5 * lobe(offset) - 0.5 * lobe(-offset)


def max_normalize(fmap, threshold=0.01):
    """Promote maps with one strong peak, suppress maps with many similar ones.

    The map is rescaled to [0, 1] and multiplied by ``(1 - m)^2`` where ``m``
    is the mean of its local maxima other than the global one (maxima below
    ``threshold`` are ignored).
    """
    m = normalize01(fmap)
    if not m.any():
        return m
    peaks = (m == ndimage.maximum_filter(m, size=3, mode="nearest")) & (m > threshold) & (m < 1.0)
    mbar = m[peaks].mean() if peaks.any() else 0.0
    return m * (1.0 - mbar) ** 2


def _center_surround(pyr, pairs):
    maps = []
    for c, s in pairs:
        center = pyr[c]
        surround = resize_bilinear(pyr[s], center.shape)
        maps.append((c, np.abs(center - surround)))
    return maps


def _opponent_center_surround(pyr_a, pyr_b, pairs):
    # |(A_c - B_c) - (A_s - B_s)| with the surround difference upsampled
    maps = []
    for c, s in pairs:
        center = pyr_a[c] - pyr_b[c]
        surround = resize_bilinear(pyr_a[s] - pyr_b[s], center.shape)
        maps.append((c, np.abs(center - surround)))
    return maps


def _across_scale_sum(maps, shape):
    total = np.zeros(shape)
    for _, fmap in maps:
        total += resize_bilinear(max_normalize(fmap), shape)
    return total


def itti_saliency(image, params=None, return_channels=False):
    """Feature-contrast saliency from intensity, color and orientation channels.

    Returns a map the size of ``image`` scaled to [0, 1]. With
    ``return_channels`` the three conspicuity maps (at the output level) are
    returned as well, keyed ``"intensity"``, ``"color"``, ``"orientation"``.
    """
    params = params or IttiParams()
    rgb = _as_rgb(image)
    height, width = rgb.shape[:2]
    levels = usable_levels(height, width, params)
    pairs = [
        (c, c + d)
        for c in params.center_levels
        for d in params.surround_deltas
        if c + d < levels
    ]
    if not pairs:
        raise ValueError(
            f"image {width}x{height} too small: only {levels} pyramid levels of at least "
            f"{params.min_level_size}px, no center-surround pair fits"
        )
    out_level = min(params.output_level, levels - 1)

    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    intensity = (r + g + b) / 3.0
    # hue is meaningless in dark regions
    scale = np.where(intensity > intensity.max() / 10.0, intensity, np.inf)
    rn, gn, bn = r / scale, g / scale, b / scale
    red = np.maximum(rn - (gn + bn) / 2, 0)
    green = np.maximum(gn - (rn + bn) / 2, 0)
    blue = np.maximum(bn - (rn + gn) / 2, 0)
    yellow = np.maximum((rn + gn) / 2 - np.abs(rn - gn) / 2 - bn, 0)

    pyr_i = gaussian_pyramid(intensity, levels)
    out_shape = pyr_i[out_level].shape

    i_bar = _across_scale_sum(_center_surround(pyr_i, pairs), out_shape)

    rg = _opponent_center_surround(gaussian_pyramid(red, levels), gaussian_pyramid(green, levels), pairs)
    by = _opponent_center_surround(gaussian_pyramid(blue, levels), gaussian_pyramid(yellow, levels), pairs)
    c_bar = _across_scale_sum(rg, out_shape) + _across_scale_sum(by, out_shape)

    o_bar = np.zeros(out_shape)
    for k in range(params.orientation_count):
        kernel = oriented_kernel(math.pi * k / params.orientation_count)
        pyr_o = [np.abs(ndimage.convolve(level, kernel, mode="reflect")) for level in pyr_i]
        o_bar += max_normalize(_across_scale_sum(_center_surround(pyr_o, pairs), out_shape))

    channels = {
        "intensity": max_normalize(i_bar),
        "color": max_normalize(c_bar),
        "orientation": max_normalize(o_bar),
    }
    combined = (channels["intensity"] + channels["color"] + channels["orientation"]) / 3.0
    sal = normalize01(resize_bilinear(combined, (height, width)))
    if return_channels:
        return sal, channels
    return sal


# ----------------------------------------------------------------- SIG model

def _signed(coeffs, rel_tol=1e-10):
    # round-off must not turn structural zeros into +-1
    tol = rel_tol * np.abs(coeffs).max(initial=0.0)
    out = np.where(np.abs(coeffs) <= tol, 0.0, np.sign(coeffs))
    # the DC sign only encodes the sign of the mean brightness
    out[0, 0] = 0.0
    return out


def signature_saliency(image, params=None):
    """Image-signature saliency: inverse DCT of the DCT sign, squared and blurred.

    The DC coefficient is left out of the signature, which makes the map
    invariant to any brightness change ``a * I + b`` with ``a > 0``.
    Each channel is shrunk to ``working_size`` first; channel reconstructions
    are summed, blurred at ``blur_sigma`` (working-size pixels), upsampled
    back to the input size and scaled to [0, 1].
    """
    params = params or SigParams()
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        planes = [as_float_map(arr, "image")]
    elif arr.ndim == 3 and arr.shape[2] == 3:
        planes = [as_float_map(arr[..., i], "image") for i in range(3)]
    else:
        raise ValueError(f"expected a gray or color image, got shape {arr.shape}")
    height, width = planes[0].shape
    work_w, work_h = params.working_size
    total = np.zeros((work_h, work_w))
    for plane in planes:
        small = downsample(plane, (work_h, work_w))
        recon = fft.idctn(_signed(fft.dctn(small, norm="ortho")), norm="ortho")
        total += recon * recon
    total = gaussian_blur(total, params.blur_sigma)
    return normalize01(resize_bilinear(total, (height, width)))


# ------------------------------------------------------------- combination

def combine(bottom_up, prior):
    """Guided saliency: pointwise product of bottom-up map and prior, scaled to [0, 1]."""
    a = as_float_map(bottom_up, "bottom_up")
    b = as_float_map(prior, "prior")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.min() < 0 or b.min() < 0:
        raise ValueError("saliency and prior maps must be non-negative")
    return normalize01(a * b)


MODELS = {"it": itti_saliency, "sig": signature_saliency}
