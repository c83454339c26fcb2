"""Brute-force reference implementations, written from the definitions only.

Nothing here imports the package's algorithms; they exist so the fast code
paths can be compared against slow, obviously-correct loops.
"""

import math

import numpy as np

# compass directions in angle order 0, 45, ..., 315 degrees; x right, y down
COMPASS = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def closure_pixel(mask, x, y, limit=None):
    """Closure degree at one pixel: walk each compass ray until contour or edge."""
    h, w = len(mask), len(mask[0])
    if limit is None:
        limit = math.sqrt(w * w + h * h)
    radii = []
    for dx, dy in COMPASS:
        step = math.sqrt(dx * dx + dy * dy)
        t = 1
        while True:
            r = t * step
            if r > limit:
                break
            px, py = x + t * dx, y + t * dy
            if px < 0 or py < 0 or px >= w or py >= h:
                break
            if mask[py][px]:
                radii.append(r)
                break
            t += 1
    n = len(radii)
    if n == 0:
        return 0.0
    s = 0.0
    for r in radii:
        s += r
    mean = s / n
    v = 0.0
    for r in radii:
        v += (r - mean) * (r - mean)
    return math.exp(n - 8) / (mean + math.sqrt(v / n))


def closure_grid(mask, limit=None):
    h, w = len(mask), len(mask[0])
    return [[closure_pixel(mask, x, y, limit) for x in range(w)] for y in range(h)]


def closure_score_walk(labels, seg):
    """CS = 1 - NB/NR by classifying every pixel of the segment one by one."""
    h, w = len(labels), len(labels[0])
    nr = nb = 0
    for y in range(h):
        for x in range(w):
            if labels[y][x] != seg:
                continue
            on_boundary = False
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                qx, qy = x + dx, y + dy
                if qx < 0 or qy < 0 or qx >= w or qy >= h or labels[qy][qx] != seg:
                    on_boundary = True
            if on_boundary:
                nr += 1
                if x in (0, w - 1) or y in (0, h - 1):
                    nb += 1
    return nb, nr


def rectangle_moments(width, height):
    """Central second moments of a solid axis-aligned rectangle (area-normalised)."""
    return width * width / 12.0, height * height / 12.0, 0.0


def ellipse_from_moments(cxx, cyy, cxy):
    """(axis_ratio, eccentricity, orientation) of the moment-equivalent ellipse."""
    tr = cxx + cyy
    det = cxx * cyy - cxy * cxy
    disc = math.sqrt(tr * tr / 4.0 - det)
    l1, l2 = tr / 2.0 + disc, tr / 2.0 - disc
    angle = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
    return math.sqrt(l2 / l1), math.sqrt(1.0 - l2 / l1), angle


def auc_pairwise(saliency, fix_pixels):
    """Judd AUC rebuilt from explicit thresholds and a trapezoid sum."""
    flat = [v for row in saliency for v in row]
    at_fix = [saliency[r][c] for r, c in fix_pixels]
    xs, ys = [0.0], [0.0]
    for t in sorted(set(at_fix), reverse=True):
        ys.append(sum(1 for v in at_fix if v >= t) / len(at_fix))
        xs.append(sum(1 for v in flat if v >= t) / len(flat))
    xs.append(1.0)
    ys.append(1.0)
    return sum((xs[i + 1] - xs[i]) * (ys[i + 1] + ys[i]) / 2.0 for i in range(len(xs) - 1))


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    return sab / math.sqrt(saa * sbb)


# ------------------------------------------------------ fixture builders

def hollow_square(size, x0, y0, side):
    mask = np.zeros((size, size), dtype=bool)
    mask[y0, x0:x0 + side] = True
    mask[y0 + side - 1, x0:x0 + side] = True
    mask[y0:y0 + side, x0] = True
    mask[y0:y0 + side, x0 + side - 1] = True
    return mask


def ring(size, cx, cy, radius):
    """One-pixel ring: pixels whose centre lies within half a pixel of the circle."""
    ys, xs = np.mgrid[0:size, 0:size]
    d = np.hypot(xs - cx, ys - cy)
    return np.abs(d - radius) < 0.5


def closed_ring(size, cx, cy, radius):
    """Every pixel whose unit square the circle passes through (4-connected, no diagonal leaks)."""
    ys, xs = np.mgrid[0:size, 0:size].astype(float)
    # nearest and farthest points of each pixel square from the centre
    nx = np.clip(cx, xs - 0.5, xs + 0.5) - cx
    ny = np.clip(cy, ys - 0.5, ys + 0.5) - cy
    fx = np.maximum(np.abs(xs - 0.5 - cx), np.abs(xs + 0.5 - cx))
    fy = np.maximum(np.abs(ys - 0.5 - cy), np.abs(ys + 0.5 - cy))
    return (np.hypot(nx, ny) <= radius) & (np.hypot(fx, fy) >= radius)
