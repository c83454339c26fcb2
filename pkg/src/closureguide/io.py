"""File formats: binary PNM (P5/P6), FMAP float rasters, fixation and table CSVs.

FMAP layout (little-endian throughout)::

    b"FMAP" | width: uint32 | height: uint32 | width*height float32, row-major
"""

from __future__ import annotations

import csv
import io as _io
import os
import struct
import tempfile
from collections import defaultdict
from pathlib import Path

import numpy as np

from .fixations import FixationRecord, FixationSet

FIXATION_HEADER = ["image_id", "subject_id", "ordinal", "x", "y", "duration_ms"]
FMAP_MAGIC = b"FMAP"
_WHITESPACE = b" \t\n\r\v\f"


class FormatError(ValueError):
    """A file does not follow the format it claims to be."""


class FixationParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def atomic_write_bytes(path, data):
    """Write ``data`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------- PNM

def _pnm_header(data):
    """Parse magic, width, height, maxval; return them and the payload offset."""
    if len(data) < 2:
        raise FormatError("file too short for a PNM magic number at byte offset 0")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported magic {magic!r} at byte offset 0 (expected P5 or P6)")
    pos = 2
    fields = []
    while len(fields) < 3:
        # whitespace and comments between header fields
        while pos < len(data) and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < len(data) and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            if pos >= len(data):
                raise FormatError(f"header truncated at byte offset {pos}")
            raise FormatError(f"malformed header: unexpected byte {data[pos:pos + 1]!r} at byte offset {pos}")
        fields.append((int(data[start:pos]), start))
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise FormatError(f"malformed header: missing whitespace after maxval at byte offset {pos}")
    (width, woff), (height, hoff), (maxval, moff) = fields
    if width < 1:
        raise FormatError(f"invalid width {width} at byte offset {woff}")
    if height < 1:
        raise FormatError(f"invalid height {height} at byte offset {hoff}")
    if not 1 <= maxval <= 65535:
        raise FormatError(f"invalid maxval {maxval} at byte offset {moff}")
    return magic, width, height, maxval, pos + 1


def read_pnm_raw(path):
    """Read a P5/P6 file as unscaled integer samples plus its maxval.

    Returns ``(samples, maxval)`` where samples has shape ``(H, W)`` for P5
    and ``(H, W, 3)`` for P6.
    """
    data = Path(path).read_bytes()
    magic, width, height, maxval, offset = _pnm_header(data)
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * channels * dtype.itemsize
    available = len(data) - offset
    if available < need:
        raise FormatError(
            f"payload truncated: expected {need} bytes from byte offset {offset}, "
            f"file ends at byte offset {len(data)}"
        )
    samples = np.frombuffer(data, dtype=dtype, count=width * height * channels, offset=offset)
    if samples.max(initial=0) > maxval:
        bad = int(np.argmax(samples > maxval))
        raise FormatError(f"sample exceeds maxval at byte offset {offset + bad * dtype.itemsize}")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return samples.astype(np.int64).reshape(shape), maxval


def read_pnm(path):
    """Read a P5 (gray) or P6 (color) image with samples scaled into [0, 1]."""
    samples, maxval = read_pnm_raw(path)
    return samples.astype(np.float64) / maxval


def quantize8(values):
    """Map [0, 1] values to bytes with round-half-up."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size and (arr.min() < 0 or arr.max() > 1 or not np.all(np.isfinite(arr))):
        raise ValueError("PNM output values must lie in [0, 1]")
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def encode_pnm(samples, maxval=255):
    samples = np.asarray(samples)
    if samples.ndim == 2:
        magic = b"P5"
    elif samples.ndim == 3 and samples.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot encode array of shape {samples.shape} as PNM")
    height, width = samples.shape[:2]
    header = b"%s\n%d %d\n%d\n" % (magic, width, height, maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    return header + np.ascontiguousarray(samples, dtype=dtype).tobytes()


def write_pnm(values, path):
    """Write a [0, 1] gray (2-D) or color (H, W, 3) array as 8-bit PNM."""
    atomic_write_bytes(path, encode_pnm(quantize8(values)))


def write_preview(values, path):
    """8-bit PNM preview of an arbitrary map after min-max scaling."""
    from .raster import normalize01

    write_pnm(normalize01(values), path)


def read_mask(path):
    """Contour mask from a P5 file: any nonzero sample is a contour pixel."""
    samples, _ = read_pnm_raw(path)
    if samples.ndim != 2:
        raise FormatError(f"{path}: contour masks must be P5 (gray)")
    return samples != 0


def write_mask(mask, path):
    atomic_write_bytes(path, encode_pnm(np.where(np.asarray(mask, dtype=bool), 255, 0)))


def read_labels(path):
    """Label map stored as raw P5 sample values (8- or 16-bit)."""
    from .raster import as_label_map

    samples, _ = read_pnm_raw(path)
    if samples.ndim != 2:
        raise FormatError(f"{path}: label maps must be P5 (gray)")
    return as_label_map(samples)


def write_labels(labels, path):
    labels = np.asarray(labels)
    maxval = 255 if labels.max(initial=0) <= 255 else 65535
    atomic_write_bytes(path, encode_pnm(labels, maxval=maxval))


# -------------------------------------------------------------------- FMAP

def encode_fmap(values):
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError(f"FMAP holds 2-D maps, got shape {arr.shape}")
    height, width = arr.shape
    header = FMAP_MAGIC + struct.pack("<II", width, height)
    return header + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def decode_fmap(data):
    if len(data) < 12:
        raise FormatError("FMAP header truncated")
    if data[:4] != FMAP_MAGIC:
        raise FormatError(f"bad FMAP magic {data[:4]!r}")
    width, height = struct.unpack("<II", data[4:12])
    need = width * height * 4
    payload = len(data) - 12
    if payload < need:
        raise FormatError(f"payload truncated: header says {width}x{height} ({need} bytes), found {payload}")
    if payload > need:
        raise FormatError(f"payload size mismatch: header says {width}x{height} ({need} bytes), found {payload}")
    return np.frombuffer(data, dtype="<f4", offset=12).reshape(height, width).astype(np.float32)


def write_fmap(values, path):
    """Store a map as float32; values already representable in float32 round-trip bit-exactly."""
    atomic_write_bytes(path, encode_fmap(values))


def read_fmap(path):
    return decode_fmap(Path(path).read_bytes())


# ----------------------------------------------------------- fixation CSV

def parse_fixation_csv(text):
    """Parse fixation CSV text into :class:`FixationSet` objects keyed by image order."""
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FixationParseError("missing header row", line=1) from None
    header = [h.strip() for h in header]
    missing = [c for c in FIXATION_HEADER if c not in header]
    if missing:
        raise FixationParseError(f"missing column(s): {', '.join(missing)}", line=1)
    if header != FIXATION_HEADER:
        raise FixationParseError(f"header must be exactly {','.join(FIXATION_HEADER)}", line=1)

    grouped = defaultdict(list)
    seen = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(FIXATION_HEADER):
            raise FixationParseError(f"expected {len(FIXATION_HEADER)} fields, got {len(row)}", line=line)
        image_id, subject_id, ordinal_s, x_s, y_s, dur_s = (c.strip() for c in row)
        try:
            ordinal = int(ordinal_s)
        except ValueError:
            raise FixationParseError(f"non-integer ordinal {ordinal_s!r}", line=line) from None
        try:
            x = float(x_s)
            y = float(y_s)
        except ValueError:
            raise FixationParseError(f"non-numeric coordinate ({x_s!r}, {y_s!r})", line=line) from None
        try:
            duration = float(dur_s)
        except ValueError:
            raise FixationParseError(f"non-numeric duration {dur_s!r}", line=line) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise FixationParseError("non-finite coordinate", line=line)
        if ordinal < 1:
            raise FixationParseError(f"ordinal must be >= 1, got {ordinal}", line=line)
        if duration < 0:
            raise FixationParseError(f"negative duration {duration}", line=line)
        key = (image_id, subject_id, ordinal)
        if key in seen:
            raise FixationParseError(
                f"duplicate ordinal {ordinal} for subject {subject_id!r} on image {image_id!r} "
                f"(first seen on line {seen[key]})",
                line=line,
            )
        seen[key] = line
        grouped[image_id].append(FixationRecord(image_id, subject_id, ordinal, x, y, duration))
    return [FixationSet(image_id, tuple(records)) for image_id, records in grouped.items()]


def read_fixation_csv(path, sizes=None):
    """Read a fixation log; optionally validate coordinates.

    ``sizes`` is either a single ``(width, height)`` applied to every image or
    a mapping ``image_id -> (width, height)``.
    """
    sets = parse_fixation_csv(Path(path).read_text(encoding="utf-8"))
    if sizes is not None:
        for fs in sets:
            size = sizes.get(fs.image_id) if isinstance(sizes, dict) else sizes
            if size is not None:
                fs.validate(*size)
    return sets


def write_fixation_csv(sets, path):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIXATION_HEADER)
    for fs in sets:
        for r in fs.records:
            writer.writerow([r.image_id, r.subject_id, r.ordinal, repr(float(r.x)), repr(float(r.y)), repr(float(r.duration))])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def write_csv(path, header, rows):
    """Write a headed CSV table atomically."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
