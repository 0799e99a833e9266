"""Luma plane ingestion (PGM, Y4M, raw) and PPM/PGM artifact emitters."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .coded_map import CodedBlockMap


class FrameFormatError(ValueError):
    """Raised for malformed headers, out-of-range samples or short payloads."""


@dataclass(frozen=True, eq=False)
class Plane:
    """Single-channel integer raster. ``samples`` is a read-only (height, width) array."""

    width: int
    height: int
    bit_depth: int
    samples: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("plane dimensions must be positive")
        if self.bit_depth not in (8, 10):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        arr = np.ascontiguousarray(self.samples, dtype=np.int32)
        if arr.shape != (self.height, self.width):
            raise ValueError(f"samples shape {arr.shape} != ({self.height}, {self.width})")
        if arr.size and (arr.min() < 0 or arr.max() >= (1 << self.bit_depth)):
            raise FrameFormatError("sample out of range for declared depth")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_array(cls, arr, bit_depth: int = 8) -> Plane:
        arr = np.asarray(arr)
        return cls(arr.shape[1], arr.shape[0], bit_depth, arr)

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    # The two read paths below are the only way the coding loop touches samples,
    # which lets tests substitute an auditing accessor.
    def gather(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.samples[ys, xs]

    def region(self, x: int, y: int, w: int, h: int) -> np.ndarray:
        return self.samples[y:y + h, x:x + w]

    def crop(self, width: int, height: int) -> Plane:
        return Plane(width, height, self.bit_depth, self.samples[:height, :width])


_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pnm_header(data: bytes, magic: bytes, fields: int) -> tuple[list[int], int]:
    if not data.startswith(magic):
        raise FrameFormatError(f"malformed header: expected {magic.decode()} magic")
    pos = len(magic)
    values = []
    for _ in range(fields):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise FrameFormatError("malformed header: missing field")
        try:
            values.append(int(m.group(1)))
        except ValueError:
            raise FrameFormatError(f"malformed header: bad field {m.group(1)!r}") from None
        pos = m.end()
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or data[pos:pos + 1] not in b" \t\r\n":
        raise FrameFormatError("malformed header: no separator before raster")
    return values, pos + 1


def _read_pgm(data: bytes) -> Plane:
    (width, height, maxval), offset = _pnm_header(data, b"P5", 3)
    if width <= 0 or height <= 0 or not 0 < maxval < 1024:
        raise FrameFormatError(f"malformed header: {width}x{height} maxval {maxval}")
    wide = maxval > 255
    need = width * height * (2 if wide else 1)
    payload = data[offset:offset + need]
    if len(payload) < need:
        raise FrameFormatError("truncated payload")
    arr = np.frombuffer(payload, dtype=">u2" if wide else np.uint8).reshape(height, width)
    if arr.max(initial=0) > maxval:
        raise FrameFormatError("sample out of range for declared depth")
    return Plane(width, height, 10 if wide else 8, arr)


def _read_y4m(data: bytes) -> Plane:
    if not data.startswith(b"YUV4MPEG2"):
        raise FrameFormatError("malformed header: expected YUV4MPEG2 magic")
    eol = data.find(b"\n")
    if eol < 0:
        raise FrameFormatError("malformed header: unterminated stream header")
    params = {tok[:1]: tok[1:] for tok in data[9:eol].split()}
    try:
        width, height = int(params[b"W"]), int(params[b"H"])
    except (KeyError, ValueError):
        raise FrameFormatError("malformed header: missing W/H") from None
    colorspace = params.get(b"C", b"420").decode()
    if not (colorspace.startswith("420") or colorspace.startswith("mono")):
        raise FrameFormatError(f"unsupported colorspace C{colorspace}")
    depth = 10 if colorspace.endswith("p10") or colorspace == "mono10" else 8
    if not data.startswith(b"FRAME", eol + 1):
        raise FrameFormatError("malformed header: missing FRAME marker")
    start = data.find(b"\n", eol + 1)
    if start < 0:
        raise FrameFormatError("malformed header: unterminated FRAME line")
    start += 1
    need = width * height * (2 if depth == 10 else 1)
    payload = data[start:start + need]
    if len(payload) < need:
        raise FrameFormatError("truncated payload")
    if depth == 10:
        arr = np.frombuffer(payload, dtype="<u2").reshape(height, width)
        if arr.max(initial=0) > 1023:
            raise FrameFormatError("sample out of range for declared depth")
    else:
        arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Plane(width, height, depth, arr)


def _read_raw(data: bytes, width: int | None, height: int | None, depth: int | None) -> Plane:
    if not width or not height or depth not in (8, 10):
        raise ValueError("raw input needs width, height and depth (8 or 10)")
    need = width * height * (2 if depth == 10 else 1)
    if len(data) < need:
        raise FrameFormatError("truncated payload")
    if depth == 10:
        arr = np.frombuffer(data[:need], dtype="<u2").reshape(height, width) & 0x3FF
    else:
        arr = np.frombuffer(data[:need], dtype=np.uint8).reshape(height, width)
    return Plane(width, height, depth, arr)


def load_plane(path, format: str = "pgm", width: int | None = None,
               height: int | None = None, depth: int | None = None) -> Plane:
    """Load the luma plane of ``path``.

    ``format`` is one of ``pgm``, ``y4m`` (first frame only) or ``raw``; raw
    input needs explicit dimensions and depth, 10-bit raw being little-endian.
    """
    data = Path(path).read_bytes()
    if format == "pgm":
        return _read_pgm(data)
    if format == "y4m":
        return _read_y4m(data)
    if format == "raw":
        return _read_raw(data, width, height, depth)
    raise ValueError(f"unknown format {format!r}")


def save_pgm(plane: Plane, path) -> None:
    header = f"P5\n{plane.width} {plane.height}\n{plane.max_value}\n".encode()
    dtype = ">u2" if plane.bit_depth > 8 else np.uint8
    Path(path).write_bytes(header + plane.samples.astype(dtype).tobytes())


def write_ppm(rgb: np.ndarray, path) -> None:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (w, h, maxval), offset = _pnm_header(data, b"P6", 3)
    if maxval != 255:
        raise FrameFormatError("only 8-bit PPM supported")
    return np.frombuffer(data[offset:offset + w * h * 3], dtype=np.uint8).reshape(h, w, 3)


MODE_TINTS = {
    "timd": (0, 255, 255),
    "merge": (255, 255, 0),
    "explicit": (160, 32, 240),
}


def to_gray8(plane: Plane) -> np.ndarray:
    return (plane.samples >> (plane.bit_depth - 8)).astype(np.uint8)


def render_mode_map(plane: Plane, coded: CodedBlockMap) -> np.ndarray:
    """RGB overlay: each coded block blended 50% with its mode tint, outline in full tint."""
    gray = to_gray8(plane).astype(np.uint16)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    for rec in coded.records:
        g = rec.geom
        tint = np.array(MODE_TINTS[rec.mode_kind.value], dtype=np.uint16)
        block = rgb[g.y:g.y + g.h, g.x:g.x + g.w]
        block[:] = (block + tint) >> 1
        block[0, :] = tint
        block[-1, :] = tint
        block[:, 0] = tint
        block[:, -1] = tint
    return rgb.astype(np.uint8)


def emit_mode_map(plane: Plane, coded: CodedBlockMap, path) -> None:
    write_ppm(render_mode_map(plane, coded), path)


def _heat_color(t: float) -> tuple[int, int, int]:
    # black -> red -> yellow -> white
    v = int(round(765 * t))
    return (min(v, 255), min(max(v - 255, 0), 255), min(max(v - 510, 0), 255))


def render_heatmap(offsets, wins: dict, cell: int = 16) -> np.ndarray:
    """Grid of normalized offsets (half block-unit cells) coloured by win density.

    The current block occupies the blue cells at offsets [0, 1) x [0, 1);
    offsets not in the map stay dark grey.
    """
    cells = {(math.floor(2 * dx), math.floor(2 * dy)) for dx, dy in offsets} | {(0, 0), (1, 1)}
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, y0 = min(xs), min(ys)
    gw, gh = max(xs) - x0 + 1, max(ys) - y0 + 1
    img = np.full((gh * cell, gw * cell, 3), 40, dtype=np.uint8)
    peak = max([wins.get(tuple(o), 0) for o in offsets] + [0])
    for dx, dy in offsets:
        count = wins.get((dx, dy), 0)
        cx, cy = math.floor(2 * dx) - x0, math.floor(2 * dy) - y0
        color = _heat_color(count / peak if peak else 0.0)
        img[cy * cell:(cy + 1) * cell, cx * cell:(cx + 1) * cell] = color
        # thin grid line so zero-win probe cells stay visible against the background
        img[cy * cell, cx * cell:(cx + 1) * cell] = 90
        img[cy * cell:(cy + 1) * cell, cx * cell] = 90
    for cx in (0, 1):
        for cy in (0, 1):
            px, py = cx - x0, cy - y0
            img[py * cell:(py + 1) * cell, px * cell:(px + 1) * cell] = (40, 80, 220)
    return img


def emit_heatmap(offsets, wins: dict, path) -> None:
    write_ppm(render_heatmap(offsets, wins), path)
