"""Fixation records and per-image fixation sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FixationRecord:
    image_id: str
    subject_id: str
    ordinal: int
    x: float
    y: float
    duration: float = 0.0


@dataclass(frozen=True)
class FixationSet:
    """All fixations recorded on one image, ordered by subject then ordinal."""

    image_id: str
    records: tuple = field(default_factory=tuple)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: (r.subject_id, r.ordinal)))
        object.__setattr__(self, "records", records)
        seen = set()
        for rec in records:
            if rec.image_id != self.image_id:
                raise ValueError(f"record for image {rec.image_id!r} in set for {self.image_id!r}")
            if rec.ordinal < 1:
                raise ValueError(f"ordinal must be >= 1, got {rec.ordinal}")
            if rec.duration < 0:
                raise ValueError(f"duration must be >= 0, got {rec.duration}")
            key = (rec.subject_id, rec.ordinal)
            if key in seen:
                raise ValueError(f"duplicate ordinal {rec.ordinal} for subject {rec.subject_id!r}")
            seen.add(key)

    @classmethod
    def from_points(cls, points, image_id="img", subject_id="s0", start_ordinal=1):
        """Build a single-subject set from ``(x, y)`` pairs in viewing order."""
        records = [
            FixationRecord(image_id, subject_id, start_ordinal + i, float(x), float(y))
            for i, (x, y) in enumerate(points)
        ]
        return cls(image_id, tuple(records))

    def __len__(self):
        return len(self.records)

    @property
    def subjects(self):
        return sorted({r.subject_id for r in self.records})

    def retained(self, drop_first=True):
        """Records left after removing each subject's first fixation (ordinal 1)."""
        if not drop_first:
            return list(self.records)
        return [r for r in self.records if r.ordinal != 1]

    def coordinates(self, drop_first=True):
        """``(xs, ys)`` arrays of the retained fixations."""
        kept = self.retained(drop_first)
        xs = np.array([r.x for r in kept], dtype=np.float64)
        ys = np.array([r.y for r in kept], dtype=np.float64)
        return xs, ys

    def validate(self, width, height):
        """Check every coordinate lies inside a ``width x height`` image."""
        for rec in self.records:
            if not (0 <= rec.x < width and 0 <= rec.y < height):
                raise ValueError(
                    f"coordinate out of range: ({rec.x}, {rec.y}) for subject {rec.subject_id!r} "
                    f"ordinal {rec.ordinal} on a {width}x{height} image"
                )
        return self
