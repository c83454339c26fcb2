"""Synthetic line-drawing scenes with known closed shapes and fixations.

Used by the test-suite and for smoke runs of the CLI: each scene has one
closed outline among open-curve clutter, fixations concentrated inside the
closed shape plus a few uniform distractors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fixations import FixationRecord, FixationSet
from .io import write_csv, write_fixation_csv, write_labels, write_mask, write_pnm


@dataclass
class Scene:
    image_id: str
    image: np.ndarray  # (H, W, 3) black lines on white
    contours: np.ndarray  # bool
    shape_interior: np.ndarray  # bool, filled closed shape without its outline
    labels: np.ndarray  # 0 background, 1 the closed shape
    fixations: FixationSet


def draw_polyline(mask, xs, ys):
    """Rasterise a polyline into ``mask`` with 8-connected steps."""
    h, w = mask.shape
    for x0, y0, x1, y1 in zip(xs[:-1], ys[:-1], xs[1:], ys[1:]):
        n = int(math.ceil(max(abs(x1 - x0), abs(y1 - y0)))) + 1
        for t in np.linspace(0.0, 1.0, n + 1):
            c = int(math.floor(x0 + t * (x1 - x0)))
            r = int(math.floor(y0 + t * (y1 - y0)))
            if 0 <= r < h and 0 <= c < w:
                mask[r, c] = True
    return mask


def ellipse_outline(shape, cx, cy, a, b, angle=0.0, start=0.0, stop=2 * math.pi):
    mask = np.zeros(shape, dtype=bool)
    n = max(16, int(4 * (a + b)))
    t = np.linspace(start, stop, n)
    ca, sa = math.cos(angle), math.sin(angle)
    xs = cx + a * np.cos(t) * ca - b * np.sin(t) * sa
    ys = cy + a * np.cos(t) * sa + b * np.sin(t) * ca
    return draw_polyline(mask, xs, ys)


def filled_ellipse(shape, cx, cy, a, b, angle=0.0):
    ys, xs = np.mgrid[0:shape[0], 0:shape[1]] + 0.5
    ca, sa = math.cos(angle), math.sin(angle)
    u = (xs - cx) * ca + (ys - cy) * sa
    v = -(xs - cx) * sa + (ys - cy) * ca
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def make_scene(rng, size=256, n_clutter=10, n_inside=10, n_distractors=3, image_id="scene"):
    """One closed ellipse plus open arcs and strokes as clutter."""
    h = w = size
    a = rng.uniform(0.08, 0.16) * size
    b = a * rng.uniform(0.6, 1.0)
    angle = rng.uniform(0, math.pi)
    margin = a + 4
    cx = rng.uniform(margin, w - margin)
    cy = rng.uniform(margin, h - margin)
    outline = ellipse_outline((h, w), cx, cy, a, b, angle)
    inside = filled_ellipse((h, w), cx, cy, a - 2, b - 2, angle) & ~outline

    clutter = np.zeros((h, w), dtype=bool)
    keep_out = filled_ellipse((h, w), cx, cy, a + 6, b + 6, angle)
    for _ in range(n_clutter):
        for _attempt in range(20):
            layer = np.zeros((h, w), dtype=bool)
            if rng.random() < 0.5:
                # open arc covering at most half a turn
                ra = rng.uniform(0.05, 0.15) * size
                start = rng.uniform(0, 2 * math.pi)
                layer = ellipse_outline(
                    (h, w), rng.uniform(0, w), rng.uniform(0, h), ra, ra * rng.uniform(0.5, 1.0),
                    rng.uniform(0, math.pi), start, start + rng.uniform(0.3, 1.0) * math.pi,
                )
            else:
                n_pts = int(rng.integers(2, 5))
                xs = np.cumsum(rng.uniform(-0.2, 0.2, n_pts) * size) + rng.uniform(0, w)
                ys = np.cumsum(rng.uniform(-0.2, 0.2, n_pts) * size) + rng.uniform(0, h)
                draw_polyline(layer, xs, ys)
            if layer.any() and not (layer & keep_out).any():
                clutter |= layer
                break
    contours = outline | clutter
    labels = (inside | outline | filled_ellipse((h, w), cx, cy, a, b, angle)).astype(np.int64)

    image = np.ones((h, w, 3))
    image[contours] = 0.0

    records = [FixationRecord(image_id, "s1", 1, w / 2.0, h / 2.0, 200.0)]
    rows, cols = np.nonzero(inside)
    picks = rng.integers(0, rows.size, n_inside)
    pts = [(cols[i] + rng.random(), rows[i] + rng.random()) for i in picks]
    pts += [(rng.uniform(0, w), rng.uniform(0, h)) for _ in range(n_distractors)]
    order = rng.permutation(len(pts))
    for k, i in enumerate(order):
        x, y = pts[i]
        records.append(FixationRecord(image_id, "s1", k + 2, min(x, w - 1e-6), min(y, h - 1e-6), 250.0))
    return Scene(image_id, image, contours, inside, labels, FixationSet(image_id, tuple(records)))


def make_scenes(count, seed=0, size=256, **kwargs):
    rng = np.random.default_rng(seed)
    return [make_scene(rng, size=size, image_id=f"scene{i:03d}", **kwargs) for i in range(count)]


def write_bundle(scenes, directory, with_contours=True, with_labels=True):
    """Write scenes as PNM files plus ``manifest.csv`` and ``fixations.csv``.

    Returns the manifest path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for sc in scenes:
        write_pnm(sc.image, directory / f"{sc.image_id}.ppm")
        contour = labels = ""
        if with_contours:
            contour = f"{sc.image_id}_contours.pgm"
            write_mask(sc.contours, directory / contour)
        if with_labels:
            labels = f"{sc.image_id}_labels.pgm"
            write_labels(sc.labels, directory / labels)
        rows.append([sc.image_id, f"{sc.image_id}.ppm", contour, labels, 1])
    write_fixation_csv([sc.fixations for sc in scenes], directory / "fixations.csv")
    manifest = directory / "manifest.csv"
    write_csv(manifest, ["image_id", "image_path", "contour_path", "labels_path", "fixations"], rows)
    return manifest
