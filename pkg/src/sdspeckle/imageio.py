"""Image and annotation files.

Two image formats are supported:

* PGM, plain (P2) or binary (P5), 8 or 16 bit. Values are read as-is.
  Written files are 16-bit P5 with [min, max] mapped linearly onto
  [0, 65535]; the mapping is stored in a header comment
  ``# sdspeckle-scale min=<float> max=<float>``.
* Raw float: a headerless payload of little-endian float64 values in
  row-major order, plus a text sidecar ``<path>.hdr`` of ``key = value``
  lines::

      width = 256
      height = 256
      byte_order = little
      data_type = float64

Any path not ending in .pgm/.pnm is treated as raw float.

Annotations are JSON documents, see ``annotation_to_dict``.
"""

import json
import logging
import re
from pathlib import Path

import numpy as np

from .gamma_model import sanitize_intensities
from .metrics import EdgeAnnotation, LineAnnotation, PhantomAnnotation, Rect

logger = logging.getLogger(__name__)

PGM_SUFFIXES = (".pgm", ".pnm")
_SCALE_COMMENT = re.compile(r"sdspeckle-scale min=(\S+) max=(\S+)")


class ImageFormatError(ValueError):
    """Malformed or unsupported image file; ``position`` is a byte offset."""

    def __init__(self, path, message, position=None):
        where = f" at byte {position}" if position is not None else ""
        super().__init__(f"{path}{where}: {message}")
        self.path = str(path)
        self.position = position


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".hdr")


def is_pgm(path):
    return Path(path).suffix.lower() in PGM_SUFFIXES


def _pgm_tokens(data, path, count):
    """Read ``count`` header tokens, skipping comments; returns tokens, end offset, comments."""
    tokens, comments = [], []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError(path, "truncated PGM header", pos)
        ch = data[pos : pos + 1]
        if ch == b"#":
            end = data.find(b"\n", pos)
            end = len(data) if end < 0 else end
            comments.append(data[pos + 1 : end].decode("ascii", "replace").strip())
            pos = end + 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            tokens.append((data[start:pos], start))
    return tokens, pos, comments


def _read_pgm(path):
    data = Path(path).read_bytes()
    tokens, pos, _ = _pgm_tokens(data, path, 4)
    magic = tokens[0][0]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(path, f"unsupported magic number {magic!r}", 0)
    header = []
    for token, offset in tokens[1:]:
        try:
            header.append(int(token))
        except ValueError:
            raise ImageFormatError(path, f"expected an integer, got {token!r}", offset) from None
    width, height, maxval = header
    if width < 1 or height < 1:
        raise ImageFormatError(path, f"bad dimensions {width}x{height}", tokens[1][1])
    if not 0 < maxval < 65536:
        raise ImageFormatError(path, f"maxval {maxval} outside 1..65535", tokens[3][1])
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        expected = count * dtype.itemsize
        actual = len(data) - pos
        if actual < expected:
            raise ImageFormatError(
                path, f"truncated payload: expected {expected} bytes, found {actual}", pos
            )
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        fields = data[pos:].split()
        if len(fields) < count:
            raise ImageFormatError(
                path, f"truncated payload: expected {count} values, found {len(fields)}", pos
            )
        try:
            pixels = np.array([int(f) for f in fields[:count]])
        except ValueError:
            raise ImageFormatError(path, "non-integer pixel value", pos) from None
    if pixels.max(initial=0) > maxval:
        raise ImageFormatError(path, f"pixel value above maxval {maxval}", pos)
    return pixels.astype(float).reshape(height, width)


def _read_sidecar(path):
    hdr = sidecar_path(path)
    if not hdr.exists():
        raise ImageFormatError(path, f"missing raw-float sidecar {hdr.name}")
    fields = {}
    for lineno, line in enumerate(hdr.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ImageFormatError(hdr, f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        fields[key] = value
    try:
        width, height = int(fields["width"]), int(fields["height"])
    except (KeyError, ValueError):
        raise ImageFormatError(hdr, "width and height must be integers") from None
    if fields.get("byte_order", "little") != "little" or fields.get("data_type", "float64") != "float64":
        raise ImageFormatError(hdr, "only little-endian float64 raw data is supported")
    if width < 1 or height < 1:
        raise ImageFormatError(hdr, f"bad dimensions {width}x{height}")
    return width, height


def _read_raw(path):
    width, height = _read_sidecar(path)
    data = Path(path).read_bytes()
    expected = width * height * 8
    if len(data) != expected:
        raise ImageFormatError(
            path, f"payload size mismatch: expected {expected} bytes, found {len(data)}", len(data)
        )
    image = np.frombuffer(data, dtype="<f8").reshape(height, width).astype(float)
    if not np.all(np.isfinite(image)):
        raise ImageFormatError(path, "raw payload contains non-finite values")
    return image


def read_image(path, sanitize=True):
    """Load an intensity image as a float64 array.

    Zero pixels are replaced by the smallest positive value unless
    ``sanitize`` is False.
    """
    image = _read_pgm(path) if is_pgm(path) else _read_raw(path)
    if sanitize:
        if np.any(image < 0):
            raise ImageFormatError(path, "negative intensities")
        zeros = int((image == 0).sum())
        if zeros:
            logger.warning("%s: %d zero-valued pixels replaced", path, zeros)
        image = sanitize_intensities(image)
    return image


def write_image(image, path, fmt=None):
    """Write ``image`` as raw float (lossless) or rescaled 16-bit PGM.

    ``fmt`` is "raw" or "pgm"; by default it follows the file suffix.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("expected a 2-D image")
    path = Path(path)
    fmt = fmt or ("pgm" if is_pgm(path) else "raw")
    try:
        if fmt == "raw":
            path.write_bytes(image.astype("<f8").tobytes())
            sidecar_path(path).write_text(
                f"width = {image.shape[1]}\nheight = {image.shape[0]}\n"
                "byte_order = little\ndata_type = float64\n"
            )
        elif fmt == "pgm":
            lo, hi = float(image.min()), float(image.max())
            if hi > lo:
                scaled = np.rint((image - lo) / (hi - lo) * 65535.0)
            else:
                scaled = np.zeros_like(image)
            header = (
                f"P5\n# sdspeckle-scale min={lo!r} max={hi!r}\n"
                f"{image.shape[1]} {image.shape[0]}\n65535\n"
            )
            path.write_bytes(header.encode("ascii") + scaled.astype(">u2").tobytes())
        else:
            raise ValueError(f"unknown image format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def pgm_scale(path):
    """(min, max) recorded by ``write_image`` in a PGM header, or None."""
    _, _, comments = _pgm_tokens(Path(path).read_bytes(), path, 4)
    for comment in comments:
        match = _SCALE_COMMENT.search(comment)
        if match:
            return float(match.group(1)), float(match.group(2))
    return None


def _rect_to_dict(r):
    return {"row": r.row, "col": r.col, "height": r.height, "width": r.width}


def annotation_to_dict(annotation):
    """JSON-ready form of an annotation.

    ``{"homogeneous": rect, "lines": [...], "edges": [...]}`` where a rect is
    ``{"row", "col", "height", "width"}``, a line is ``{"line", "flank1",
    "flank2": [[row, col], ...], "reference": float}`` and an edge is
    ``{"side_a": rect, "side_b": rect, "step": float}``.
    """
    return {
        "homogeneous": _rect_to_dict(annotation.homogeneous),
        "lines": [
            {
                "line": [list(p) for p in line.line],
                "flank1": [list(p) for p in line.flank1],
                "flank2": [list(p) for p in line.flank2],
                "reference": line.reference,
            }
            for line in annotation.lines
        ],
        "edges": [
            {"side_a": _rect_to_dict(e.side_a), "side_b": _rect_to_dict(e.side_b), "step": e.step}
            for e in annotation.edges
        ],
    }


def annotation_from_dict(data):
    def rect(d):
        return Rect(int(d["row"]), int(d["col"]), int(d["height"]), int(d["width"]))

    def coords(points):
        return tuple((int(r), int(c)) for r, c in points)

    return PhantomAnnotation(
        homogeneous=rect(data["homogeneous"]),
        lines=tuple(
            LineAnnotation(
                coords(d["line"]), coords(d["flank1"]), coords(d["flank2"]),
                float(d.get("reference", 0.0)),
            )
            for d in data.get("lines", [])
        ),
        edges=tuple(
            EdgeAnnotation(rect(d["side_a"]), rect(d["side_b"]), float(d.get("step", 0.0)))
            for d in data.get("edges", [])
        ),
    )


def write_annotation(annotation, path):
    Path(path).write_text(json.dumps(annotation_to_dict(annotation), indent=1) + "\n")


def read_annotation(path):
    try:
        return annotation_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed annotation ({exc})") from exc
