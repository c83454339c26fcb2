"""Per-pixel closure degree from rays cast against a contour mask.

From every pixel, ``D`` rays look for the nearest contour pixel. The number
of rays that hit, ``n``, and the hit distances give

    closure = exp(n - D) / (mean(radii) + std(radii))

so a pixel ringed tightly and evenly by contours scores highest, and one with
no contour in sight scores 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import as_mask


@dataclass(frozen=True)
class ClosureParams:
    directions: int = 8
    max_ray_length: float | None = None  # None: the image diagonal
    stride: int = 1

    def __post_init__(self):
        if self.directions < 4 or self.directions % 2:
            raise ValueError(f"directions must be even and >= 4, got {self.directions}")
        if self.max_ray_length is not None and self.max_ray_length < 1:
            raise ValueError(f"max_ray_length must be >= 1, got {self.max_ray_length}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    def ray_limit(self, width, height):
        if self.max_ray_length is None:
            return math.sqrt(width * width + height * height)
        return float(self.max_ray_length)


@dataclass(frozen=True)
class RayScan:
    n_hits: int
    radii: tuple  # one per hit direction, in direction order


def _snap(v):
    r = math.floor(v + 0.5)
    return float(r) if abs(v - r) < 1e-12 else v


def ray_steps(directions):
    """Per-direction ``(dx, dy, step_length)``; angle 0 points along +x.

    Each step advances one pixel along the dominant axis, so the eight
    compass directions step by exactly ``(+-1 or 0, +-1 or 0)``.
    """
    steps = []
    for k in range(directions):
        theta = 2.0 * math.pi * k / directions
        cx, cy = math.cos(theta), math.sin(theta)
        scale = max(abs(cx), abs(cy))
        dx, dy = _snap(cx / scale), _snap(cy / scale)
        steps.append((dx, dy, math.sqrt(dx * dx + dy * dy)))
    return steps


def _exp_table(directions):
    return [math.exp(n - directions) for n in range(directions + 1)]


def ray_scan(contour, x, y, params=None):
    """Cast the rays from pixel ``(x, y)`` (column, row) and collect hits.

    The start pixel itself never counts. A ray that leaves the image or
    travels farther than the ray limit without meeting contour is a miss.
    """
    params = params or ClosureParams()
    mask = as_mask(contour, "contour")
    h, w = mask.shape
    if not (0 <= x < w and 0 <= y < h) or int(x) != x or int(y) != y:
        raise ValueError(f"start pixel ({x}, {y}) outside a {w}x{h} image")
    limit = params.ray_limit(w, h)
    radii = []
    for dx, dy, length in ray_steps(params.directions):
        t = 1
        while True:
            radius = t * length
            if radius > limit:
                break
            px = x + math.floor(t * dx + 0.5)
            py = y + math.floor(t * dy + 0.5)
            if not (0 <= px < w and 0 <= py < h):
                break
            if mask[py, px]:
                radii.append(radius)
                break
            t += 1
    return RayScan(len(radii), tuple(radii))


def closure_degree(scan, directions=8):
    """Closure value of one scan; 0 when no ray hit."""
    n = scan.n_hits
    if n == 0:
        return 0.0
    total = 0.0
    for r in scan.radii:
        total += r
    mean = total / n
    var = 0.0
    for r in scan.radii:
        var += (r - mean) * (r - mean)
    spread = math.sqrt(var / n)
    return math.exp(n - directions) / (mean + spread)


def _hit_steps_integer(mask, dx, dy):
    """Steps to the first contour pixel along an integer direction, inf if none.

    Sweeps against the ray direction so each pixel reuses its neighbour's
    answer: ``steps(p) = 1`` if ``p + d`` is contour, else ``steps(p + d) + 1``.
    """
    h, w = mask.shape
    dist = np.full((h, w), np.inf)

    def shifted(arr, fill, dr):
        # arr indexed at rows r + dr
        out = np.full(arr.shape, fill, dtype=arr.dtype)
        if dr == 0:
            out[:] = arr
        elif dr > 0:
            out[:-dr] = arr[dr:]
        else:
            out[-dr:] = arr[:dr]
        return out

    if dx != 0:
        cols = range(w - 1, -1, -1) if dx > 0 else range(w)
        for c in cols:
            nc = c + dx
            if not 0 <= nc < w:
                continue
            hit = shifted(mask[:, nc], False, dy)
            prev = shifted(dist[:, nc], np.inf, dy)
            dist[:, c] = np.where(hit, 1.0, prev + 1.0)
    else:
        rows = range(h - 1, -1, -1) if dy > 0 else range(h)
        for r in rows:
            nr = r + dy
            if not 0 <= nr < h:
                continue
            dist[r] = np.where(mask[nr], 1.0, dist[nr] + 1.0)
    return dist


def _hit_steps_marching(mask, dx, dy, limit_steps):
    h, w = mask.shape
    rows, cols = np.mgrid[0:h, 0:w]
    dist = np.full((h, w), np.inf)
    alive = np.ones((h, w), dtype=bool)
    for t in range(1, limit_steps + 1):
        pr = rows + math.floor(t * dy + 0.5)
        pc = cols + math.floor(t * dx + 0.5)
        inside = (pr >= 0) & (pr < h) & (pc >= 0) & (pc < w)
        alive &= inside
        if not alive.any():
            break
        hit = np.zeros((h, w), dtype=bool)
        hit[alive] = mask[pr[alive], pc[alive]]
        dist[hit] = t
        alive &= ~hit
    return dist


def _closure_full(mask, params):
    h, w = mask.shape
    limit = params.ray_limit(w, h)
    d = params.directions
    n = np.zeros((h, w), dtype=np.int64)
    radii = []
    for dx, dy, length in ray_steps(d):
        if dx == int(dx) and dy == int(dy):
            steps = _hit_steps_integer(mask, int(dx), int(dy))
        else:
            steps = _hit_steps_marching(mask, dx, dy, int(limit // length) + 1)
        radius = steps * length
        hit = np.isfinite(steps) & (radius <= limit)
        n += hit
        radii.append((hit, np.where(hit, radius, 0.0)))

    # same summation order as closure_degree so results agree bit for bit
    total = np.zeros((h, w))
    for _, r in radii:
        total = total + r
    safe_n = np.maximum(n, 1)
    mean = total / safe_n
    var = np.zeros((h, w))
    for hit, r in radii:
        dev = r - mean
        var = var + np.where(hit, dev * dev, 0.0)
    spread = np.sqrt(var / safe_n)
    table = np.array(_exp_table(d))
    return np.divide(table[n], mean + spread, out=np.zeros((h, w)), where=n > 0)


def closure_map(contour, params=None):
    """Closure degree of every pixel.

    With ``stride > 1`` only every ``stride``-th row and column (plus the last
    ones) keep their exact value; the rest is filled bilinearly.
    """
    params = params or ClosureParams()
    mask = as_mask(contour, "contour")
    if not mask.any():
        return np.zeros(mask.shape)
    full = _closure_full(mask, params)
    if params.stride == 1:
        return full
    h, w = mask.shape
    grid_r = np.unique(np.append(np.arange(0, h, params.stride), h - 1))
    grid_c = np.unique(np.append(np.arange(0, w, params.stride), w - 1))
    coarse = full[np.ix_(grid_r, grid_c)]
    along_cols = np.array([np.interp(np.arange(w), grid_c, row) for row in coarse])
    return np.array([np.interp(np.arange(h), grid_r, col) for col in along_cols.T]).T
