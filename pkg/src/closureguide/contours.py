"""Line-drawing front end: gradient edge detection and edge linking.

The detector is Sobel + non-maximum suppression + hysteresis. Linking walks
8-connected pixel chains, starting from line ends and then from whatever is
left (closed loops, branches between junctions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import as_float_map, as_mask, to_gray

# ring order N, NE, E, SE, S, SW, W, NW as (drow, dcol)
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
# 4-neighbours first so staircase corners are never skipped
_STEP_ORDER = ((-1, 0), (0, 1), (1, 0), (0, -1), (-1, 1), (1, 1), (1, -1), (-1, -1))


@dataclass(frozen=True)
class EdgeParams:
    high_threshold: float = 0.3
    low_threshold: float = 0.1
    min_chain_length: int = 10

    def __post_init__(self):
        if not 0 < self.low_threshold < self.high_threshold <= 1:
            raise ValueError(
                f"need 0 < low_threshold < high_threshold <= 1, got "
                f"{self.low_threshold}, {self.high_threshold}"
            )
        if self.min_chain_length < 2:
            raise ValueError(f"min_chain_length must be >= 2, got {self.min_chain_length}")


@dataclass(frozen=True)
class EdgeChain:
    points: tuple  # ((x, y), ...) with x = column, y = row
    closed: bool = False

    def __len__(self):
        return len(self.points)

    @property
    def pixel_count(self):
        return len(set(self.points))


def _branch_lut():
    """Number of 8-connected neighbour groups for every 8-bit ring pattern."""
    lut = np.zeros(256, dtype=np.int8)
    for pattern in range(256):
        cells = [_RING[i] for i in range(8) if pattern >> i & 1]
        remaining = set(cells)
        groups = 0
        while remaining:
            groups += 1
            stack = [remaining.pop()]
            while stack:
                r, c = stack.pop()
                for other in list(remaining):
                    if max(abs(other[0] - r), abs(other[1] - c)) == 1:
                        remaining.discard(other)
                        stack.append(other)
        lut[pattern] = groups
    return lut


def _tip_lut():
    """Ring patterns of a line end: one neighbour, or two touching ring neighbours."""
    lut = np.zeros(256, dtype=bool)
    for pattern in range(256):
        bits = [i for i in range(8) if pattern >> i & 1]
        if len(bits) == 1:
            lut[pattern] = True
        elif len(bits) == 2:
            lut[pattern] = (bits[1] - bits[0]) in (1, 7)
    return lut


def _crossing_lut():
    """Runs of set pixels around the circular ring (0 -> 1 transitions).

    Unlike the group count this separates the three arms of a T drawn with
    4-connected strokes, whose neighbours touch each other diagonally.
    """
    lut = np.zeros(256, dtype=np.int8)
    for pattern in range(256):
        lut[pattern] = sum(
            1 for i in range(8) if pattern >> i & 1 and not pattern >> ((i - 1) % 8) & 1
        )
    return lut


_BRANCHES = _branch_lut()
_CROSSINGS = _crossing_lut()
_TIPS = _tip_lut()


def _ring_patterns(mask):
    padded = np.pad(mask, 1)
    h, w = mask.shape
    pattern = np.zeros(mask.shape, dtype=np.int32)
    for bit, (dr, dc) in enumerate(_RING):
        pattern |= padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w].astype(np.int32) << bit
    return pattern


def detect_edges(image, params=None):
    """Thin edge-strength map of an image.

    Gradient magnitude comes from 3x3 Sobel filters, is thinned by
    non-maximum suppression across the gradient direction, and is kept only
    where hysteresis links it to a strong response. Thresholds are fractions
    of the 99th percentile of the thinned non-zero magnitudes. The result is
    magnitude divided by that percentile, clipped to [0, 1], zero off-edge.
    """
    params = params or EdgeParams()
    gray = as_float_map(to_gray(image), "image")
    gx = ndimage.sobel(gray, axis=1, mode="reflect")
    gy = ndimage.sobel(gray, axis=0, mode="reflect")
    mag = np.hypot(gx, gy)
    if not np.any(mag > 1e-12):
        return np.zeros_like(gray)

    # quantise the gradient direction into 0, 45, 90, 135 degrees
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    sector = (np.floor((angle + 22.5) / 45.0).astype(int)) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}

    padded = np.pad(mag, 1)
    h, w = mag.shape
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in offsets.items():
        ahead = padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        behind = padded[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        # strict on one side so a plateau two pixels wide keeps one pixel
        keep |= (sector == s) & (mag > ahead) & (mag >= behind)
    keep &= mag > 1e-12
    thin = np.where(keep, mag, 0.0)
    if not keep.any():
        return np.zeros_like(gray)

    ref = np.percentile(thin[keep], 99)
    strong = thin >= params.high_threshold * ref
    weak = thin >= params.low_threshold * ref
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    linked = np.isin(labels, np.unique(labels[strong & (labels > 0)]))
    linked &= weak
    linked = _thin_staircases(linked)
    return np.where(linked, np.clip(thin / ref, 0.0, 1.0), 0.0)


def _thin_staircases(mask):
    """Drop pixels whose neighbours stay connected without them.

    NMS leaves two-pixel staircases along diagonal edges (equal magnitudes on
    both sides of the edge). Removal is sequential in raster order so that
    neighbouring candidates never vanish together; line ends are kept.
    """
    mask = mask.copy()
    h, w = mask.shape
    for r, c in zip(*np.nonzero(mask)):
        pattern = 0
        for bit, (dr, dc) in enumerate(_RING):
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and mask[rr, cc]:
                pattern |= 1 << bit
        if pattern and _BRANCHES[pattern] == 1 and not _TIPS[pattern]:
            mask[r, c] = False
    return mask


def _trace(start, mask, visited, branches):
    """Walk unvisited 8-neighbours from ``start`` (already marked visited).

    A neighbouring junction takes priority so branches end on it instead of
    cutting the corner past it; a junction already owned by another chain
    ends the walk.
    """
    h, w = mask.shape
    path = [start]
    on_path = {start}
    r, c = start
    while True:
        if len(path) > 1 and branches[r, c] >= 3:
            break
        nxt = None
        blocked = False
        for dr, dc in _RING:
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and branches[rr, cc] >= 3 and (rr, cc) not in on_path:
                if not visited[rr, cc]:
                    nxt = (rr, cc)
                    break
                blocked = True
        if nxt is None:
            if blocked and len(path) > 1:
                break
            for dr, dc in _STEP_ORDER:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] and not visited[rr, cc]:
                    nxt = (rr, cc)
                    break
        if nxt is None:
            break
        visited[nxt] = True
        path.append(nxt)
        on_path.add(nxt)
        r, c = nxt
    return path


def _adjacent(a, b):
    return a != b and max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1


def _absorb_singletons(chains, singletons):
    """Attach isolated one-pixel leftovers to a neighbouring chain."""
    where = {}
    for ci, chain in enumerate(chains):
        for pi, p in enumerate(chain):
            where.setdefault(p, (ci, pi))
    unplaced = []
    for p in singletons:
        placed = False
        for ci, chain in enumerate(chains):
            if _adjacent(chain[-1], p):
                chain.append(p)
                placed = True
            elif _adjacent(chain[0], p):
                chain.insert(0, p)
                placed = True
            if placed:
                break
        if not placed:
            for dr, dc in _RING:
                q = (p[0] + dr, p[1] + dc)
                if q in where:
                    ci, _ = where[q]
                    chain = chains[ci]
                    pi = chain.index(q)
                    # detour q -> p -> q keeps the chain 8-connected
                    chain[pi + 1:pi + 1] = [p, q]
                    placed = True
                    break
        if not placed:
            unplaced.append(p)
    return unplaced


def link_edges(edges, min_chain_length=10):
    """Group edge pixels into 8-connected chains.

    Parameters
    ----------
    edges : array_like
        Edge map or contour mask; pixels ``> 0`` are edge pixels.
    min_chain_length : int
        Chains covering fewer distinct pixels are dropped.

    Returns
    -------
    chains : list of EdgeChain
    mask : ndarray of bool
        Exactly the pixels of the surviving chains.

    Tracing stops after entering a junction (a pixel whose ring of
    neighbours holds three or more separate runs), so each branch becomes its own chain and
    the junction pixel belongs to whichever chain reached it first. Pixels left
    over as single points are attached to an adjacent chain so that contour
    components of two or more pixels lose nothing.
    """
    if min_chain_length < 2:
        raise ValueError(f"min_chain_length must be >= 2, got {min_chain_length}")
    mask = as_mask(np.asarray(edges) > 0)
    patterns = _ring_patterns(mask)
    branches = np.where(mask, _CROSSINGS[patterns], 0)
    endpoints = mask & _TIPS[patterns]

    visited = np.zeros(mask.shape, dtype=bool)
    raw = []
    closed_flags = []
    singletons = []

    def record(path, closed):
        if len(path) == 1:
            singletons.append(path[0])
        else:
            raw.append(path)
            closed_flags.append(closed)

    for r, c in zip(*np.nonzero(endpoints)):
        if visited[r, c]:
            continue
        visited[r, c] = True
        record(_trace((r, c), mask, visited, branches), False)

    for r, c in zip(*np.nonzero(mask)):
        if visited[r, c]:
            continue
        visited[r, c] = True
        forward = _trace((r, c), mask, visited, branches)
        if branches[r, c] >= 3:
            backward = [(r, c)]
        else:
            backward = _trace((r, c), mask, visited, branches)
        path = backward[::-1] + forward[1:]
        closed = (
            len(path) >= 4
            and len(backward) == 1
            and _adjacent(path[0], path[-1])
            and not np.any(branches[tuple(np.array(path).T)] >= 3)
        )
        record(path, closed)

    leftovers = _absorb_singletons(raw, singletons)
    del leftovers  # isolated single pixels cannot form a chain

    chains = []
    out = np.zeros(mask.shape, dtype=bool)
    for path, closed in zip(raw, closed_flags):
        if len(set(path)) < min_chain_length:
            continue
        chains.append(EdgeChain(tuple((int(c), int(r)) for r, c in path), closed))
        rows, cols = np.array(path).T
        out[rows, cols] = True
    return chains, out


def chain_rows(chains):
    """Rows for the chains CSV: ``chain_id, point_index, x, y, closed``."""
    for cid, chain in enumerate(chains):
        for i, (x, y) in enumerate(chain.points):
            yield cid, i, x, y, int(chain.closed)


CHAIN_HEADER = ["chain_id", "point_index", "x", "y", "closed"]
