"""File formats: binary PGM (P5) for images and label masks, FMAP for
probability maps, and the flat key=value configuration file.

FMAP layout: ASCII header ``FMAP\\n<width> <height> <channels>\\n`` followed
by little-endian 32-bit floats, planar (channel-major), row-major within
each channel.  Both readers reject truncated payloads with a diagnostic
naming the byte offset.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np


class FormatError(ValueError):
    pass


# --------------------------------------------------------------------- PGM


def write_pgm(arr: np.ndarray) -> bytes:
    """Encode a (h, w) uint8 array as binary PGM."""
    a = np.asarray(arr)
    if a.ndim != 2:
        raise FormatError(f"PGM needs a 2-d array, got shape {a.shape}")
    if a.dtype != np.uint8:
        if a.size and (a.min() < 0 or a.max() > 255):
            raise FormatError("PGM values must fit in a byte")
        a = a.astype(np.uint8)
    h, w = a.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + a.tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    """Decode binary PGM bytes into a (h, w) uint8 array."""
    if not data.startswith(b"P5"):
        raise FormatError("bad magic: expected P5 at byte offset 0")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token:
            raise FormatError(f"truncated header at byte offset {start}")
        if not token.isdigit():
            raise FormatError(f"bad header token {token!r} at byte offset {start}")
        fields.append(int(token))
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}; only 8-bit PGM is handled")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos : pos + w * h]
    if len(payload) < w * h:
        raise FormatError(
            f"truncated payload: expected {w * h} bytes from byte offset {pos}, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w).copy()


def image_to_pgm(img: np.ndarray) -> bytes:
    """Quantize a [0,1] float image to 8 bits and encode."""
    a = np.asarray(img, dtype=float)
    return write_pgm(np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8))


def pgm_to_image(data: bytes) -> np.ndarray:
    return read_pgm(data).astype(float) / 255.0


def labels_to_pgm(labels: np.ndarray) -> bytes:
    """Label ids are stored directly as bytes."""
    return write_pgm(np.asarray(labels))


def pgm_to_labels(data: bytes) -> np.ndarray:
    return read_pgm(data).astype(np.int64)


def mask_to_pgm(mask: np.ndarray) -> bytes:
    return write_pgm(np.asarray(mask, dtype=bool).astype(np.uint8))


def pgm_to_mask(data: bytes) -> np.ndarray:
    return read_pgm(data) != 0


# -------------------------------------------------------------------- FMAP

_FMAP_HEADER = re.compile(rb"^FMAP\n(\d+) (\d+) (\d+)\n")


def write_fmap(probs: np.ndarray) -> bytes:
    """Encode a (channels, h, w) float array."""
    p = np.asarray(probs, dtype=np.float32)
    if p.ndim != 3:
        raise FormatError(f"FMAP needs a (channels, h, w) array, got shape {p.shape}")
    c, h, w = p.shape
    return f"FMAP\n{w} {h} {c}\n".encode("ascii") + p.astype("<f4").tobytes()


def read_fmap(data: bytes) -> np.ndarray:
    m = _FMAP_HEADER.match(data)
    if m is None:
        raise FormatError("bad magic: expected FMAP header at byte offset 0")
    w, h, c = (int(g) for g in m.groups())
    offset = m.end()
    expected = w * h * c * 4
    payload = data[offset : offset + expected]
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes from byte offset {offset}, "
            f"got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(c, h, w).astype(float)


# ------------------------------------------------------------------ config


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and #-comments are skipped."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"config line {line_no}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def render_config(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


# ------------------------------------------------------------ path helpers


def load_pgm(path: str | Path) -> np.ndarray:
    return read_pgm(Path(path).read_bytes())


def save_bytes(path: str | Path, data: bytes) -> None:
    Path(path).write_bytes(data)
