"""Reference samples, Planar/DC/65-angular prediction, and template prediction.

Mode numbering follows the 67-mode layout: 0 Planar, 1 DC, 2..66 angular with
18 horizontal, 34 the top-left diagonal and 50 vertical. Angular modes use a
33-entry displacement table (1/32 sample units) mirrored about mode 34, 2-tap
linear interpolation, and no wide-angle remapping or filtering.

All references for a block live in one *unified* array ``u``::

    u = [left[n-1], ..., left[0], corner, above[0], ..., above[n-1]]

so bottom-left to top-right substitution is a forward scan over ``u``, and
transposing a block (swapping above and left) reverses ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .coded_map import CodedBlockMap

PLANAR = 0
DC = 1
HORIZONTAL = 18
DIAGONAL = 34
VERTICAL = 50
NUM_MODES = 67
ANGULAR_MODES = tuple(range(2, NUM_MODES))

# displacement of mode 34 + k (and, transposed, of 34 - k) for k = 0..32
ANGLES = (-32, -29, -26, -23, -20, -18, -16, -14, -12, -10, -8, -6, -4, -3, -2, -1,
          0, 1, 2, 3, 4, 6, 8, 10, 12, 14, 16, 18, 20, 23, 26, 29, 32)

BLOCK_SIZES = (4, 8, 16, 32, 64)


def is_angular(ipm: int) -> bool:
    return 2 <= ipm < NUM_MODES


def check_ipm(ipm: int) -> int:
    if not 0 <= ipm < NUM_MODES:
        raise ValueError(f"invalid IPM index {ipm}")
    return int(ipm)


def displacement(ipm: int) -> int:
    """Per-row displacement in 1/32 samples along the mode's main reference."""
    if not is_angular(ipm):
        raise ValueError(f"IPM {ipm} is not angular")
    return ANGLES[abs(ipm - DIAGONAL)]


def inverse_angle(angle: int) -> int:
    """Side-reference projection factor (1/256 units) for a negative displacement."""
    return -int(np.floor(8192 / -angle + 0.5))


@dataclass(frozen=True)
class BlockGeom:
    x: int
    y: int
    w: int
    h: int

    def validate(self, width: int, height: int) -> BlockGeom:
        if self.w not in BLOCK_SIZES or self.h not in BLOCK_SIZES:
            raise ValueError(f"unsupported block size {self.w}x{self.h}")
        if self.x % 4 or self.y % 4:
            raise ValueError("block origin must be a multiple of 4")
        if self.x < 0 or self.y < 0 or self.x + self.w > width or self.y + self.h > height:
            raise ValueError(f"block {self} outside {width}x{height} plane")
        return self

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True, eq=False)
class ReferenceLine:
    """Reference samples at distance ``line_index`` from a block.

    A reference line at distance L from a WxH block is the adjacent line of the
    (W+L)x(H+L) block anchored L samples up and left; ``above`` and ``left``
    each hold (W+L)+(H+L) samples.
    """

    line_index: int
    above: np.ndarray
    left: np.ndarray
    corner: int
    # availability before substitution, in unified order
    available: np.ndarray

    def unified(self) -> np.ndarray:
        return np.concatenate([self.left[::-1], [self.corner], self.above])


def _line_positions(geom: BlockGeom, line_index: int) -> tuple[np.ndarray, np.ndarray, int, int]:
    ex, ey = geom.x - line_index, geom.y - line_index
    ew, eh = geom.w + line_index, geom.h + line_index
    n = ew + eh
    k = np.arange(n)
    xs = np.concatenate([np.full(n, ex - 1)[::-1], [ex - 1], ex + k])
    ys = np.concatenate([(ey + k)[::-1], [ey - 1], np.full(n, ey - 1)])
    return xs, ys, ew, eh


def substitute(values: np.ndarray, available: np.ndarray, bit_depth: int) -> np.ndarray:
    """Fill unavailable entries by propagating the last available one forward.

    Entries before the first available one copy it; with nothing available the
    whole line is the mid-level value.
    """
    if not available.any():
        return np.full(values.shape, 1 << (bit_depth - 1), dtype=np.int32)
    idx = np.where(available, np.arange(values.size), 0)
    first = int(np.argmax(available))
    idx[:first] = first
    np.maximum.accumulate(idx, out=idx)
    return values[idx].astype(np.int32)


def build_reference_line(plane, geom: BlockGeom, line_index: int,
                         coded: CodedBlockMap) -> ReferenceLine:
    """Causal reference samples for ``geom``; only coded in-frame positions are read."""
    if line_index < 0:
        raise ValueError("line_index must be >= 0")
    xs, ys, ew, eh = _line_positions(geom, line_index)
    avail = coded.covered(xs, ys)
    vals = np.zeros(xs.size, dtype=np.int32)
    if avail.any():
        vals[avail] = plane.gather(xs[avail], ys[avail])
    u = substitute(vals, avail, plane.bit_depth)
    n = ew + eh
    return ReferenceLine(line_index, u[n + 1:], u[:n][::-1], int(u[n]), avail)


@lru_cache(maxsize=None)
def _vertical_table(w: int, h: int, angle: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices into ``u`` (two taps) and the 1/32 phase for a vertical-class mode."""
    n = w + h
    r = np.arange(h)[:, None]
    c = np.arange(w)[None, :]
    pos = (r + 1) * angle
    frac = np.broadcast_to(pos & 31, (h, w))
    ridx = c + (pos >> 5) + 1

    def to_unified(i):
        if angle < 0:
            # main-ref index -k projects onto left[proj - 1], i.e. u[n - proj]
            proj = (np.maximum(-i, 0) * -inverse_angle(angle) + 128) >> 8
            u = np.where(i >= 0, n + i, n - proj)
        else:
            u = n + i
        # out-of-range taps only occur with a zero weight
        return np.clip(u, 0, 2 * n)

    return to_unified(ridx), to_unified(ridx + 1), frac


@lru_cache(maxsize=None)
def mode_tables(w: int, h: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked (65, h, w) tap indices and phases for modes 2..66 on a WxH block."""
    n = w + h
    i0 = np.empty((65, h, w), dtype=np.intp)
    i1 = np.empty_like(i0)
    fr = np.empty((65, h, w), dtype=np.int32)
    for ipm in ANGULAR_MODES:
        angle = displacement(ipm)
        if ipm >= DIAGONAL:
            a, b, f = _vertical_table(w, h, angle)
        else:
            # transpose: predict the swapped block vertically, reverse u
            a, b, f = _vertical_table(h, w, angle)
            a, b, f = 2 * n - a.T, 2 * n - b.T, f.T
        i0[ipm - 2], i1[ipm - 2], fr[ipm - 2] = a, b, f
    for arr in (i0, i1, fr):
        arr.setflags(write=False)
    return i0, i1, fr


def _planar(u: np.ndarray, w: int, h: int) -> np.ndarray:
    n = w + h
    above = u[n + 1:]
    left = u[:n][::-1]
    r = np.arange(h)[:, None]
    c = np.arange(w)[None, :]
    top_right, bottom_left = int(above[w]), int(left[h])
    pred_v = (h - 1 - r) * above[None, :w] + (r + 1) * bottom_left
    pred_h = (w - 1 - c) * left[:h, None] + (c + 1) * top_right
    return (pred_v * w + pred_h * h + w * h) // (2 * w * h)


def _dc(u: np.ndarray, w: int, h: int) -> int:
    n = w + h
    total = int(u[n + 1:n + 1 + w].sum()) + int(u[n - h:n].sum())
    return (total + (w + h) // 2) // (w + h)


def predict_unified(u: np.ndarray, w: int, h: int, ipm: int) -> np.ndarray:
    ipm = check_ipm(ipm)
    if ipm == PLANAR:
        return _planar(u, w, h).astype(np.int32)
    if ipm == DC:
        return np.full((h, w), _dc(u, w, h), dtype=np.int32)
    i0, i1, fr = mode_tables(w, h)
    k = ipm - 2
    return ((u[i0[k]] * (32 - fr[k]) + u[i1[k]] * fr[k] + 16) >> 5).astype(np.int32)


def predict_all_unified(u: np.ndarray, w: int, h: int) -> np.ndarray:
    """Predictions for all 67 modes at once, shape (67, h, w)."""
    u = u.astype(np.int32)
    i0, i1, fr = mode_tables(w, h)
    out = np.empty((NUM_MODES, h, w), dtype=np.int32)
    out[PLANAR] = _planar(u, w, h)
    out[DC] = _dc(u, w, h)
    out[2:] = (u[i0] * (32 - fr) + u[i1] * fr + 16) >> 5
    return out


def predict_block(refs: ReferenceLine, geom: BlockGeom, ipm: int) -> np.ndarray:
    """WxH prediction of ``geom`` from ``refs`` for one mode."""
    L = refs.line_index
    full = predict_unified(refs.unified(), geom.w + L, geom.h + L, ipm)
    return full[L:, L:]


def predict_all(refs: ReferenceLine, geom: BlockGeom) -> np.ndarray:
    L = refs.line_index
    return predict_all_unified(refs.unified(), geom.w + L, geom.h + L)[:, L:, L:]


def template_lines(geom: BlockGeom, rule=(2, 4, 8)) -> int:
    """Template thickness M: ``small`` lines when min(W, H) <= ``limit``, else ``large``."""
    small, large, limit = rule
    return small if min(geom.w, geom.h) <= limit else large


class TemplateUnavailable(LookupError):
    """No causal template sample exists for the block."""


@dataclass(frozen=True, eq=False)
class Template:
    """L-shaped causal template: ``top`` is MxW above the block, ``left`` is HxM to its left.

    Unavailable samples are zero and cleared in the matching mask.
    """

    geom: BlockGeom
    m_lines: int
    top: np.ndarray
    left: np.ndarray
    top_mask: np.ndarray
    left_mask: np.ndarray

    @property
    def top_available(self) -> bool:
        return bool(self.top_mask.any())

    @property
    def left_available(self) -> bool:
        return bool(self.left_mask.any())

    @property
    def available(self) -> bool:
        return self.top_available or self.left_available


def _read_masked(plane, coded, xs, ys):
    mask = coded.covered(xs, ys)
    vals = np.zeros(xs.shape, dtype=np.int32)
    if mask.any():
        vals[mask] = plane.gather(xs[mask], ys[mask])
    return vals, mask


def build_template(plane, geom: BlockGeom, m_lines: int, coded: CodedBlockMap) -> Template:
    if m_lines < 1:
        raise ValueError("template needs at least one line")
    M = m_lines
    ty, tx = np.mgrid[geom.y - M:geom.y, geom.x:geom.x + geom.w]
    ly, lx = np.mgrid[geom.y:geom.y + geom.h, geom.x - M:geom.x]
    top, top_mask = _read_masked(plane, coded, tx, ty)
    left, left_mask = _read_masked(plane, coded, lx, ly)
    return Template(geom, M, top, left, top_mask, left_mask)


def template_reference(plane, tmpl: Template, coded: CodedBlockMap) -> ReferenceLine:
    """The single L-shaped reference line just outside the template (distance M)."""
    return build_reference_line(plane, tmpl.geom, tmpl.m_lines, coded)


def _split_template(full: np.ndarray, M: int):
    # full: (..., H+M, W+M) prediction of the extended block
    return full[..., :M, M:], full[..., M:, :M]


def predict_template(plane, tmpl: Template, ipm: int,
                     coded: CodedBlockMap) -> tuple[np.ndarray, np.ndarray]:
    """Template prediction ``(top MxW, left HxM)`` for one mode.

    Both sub-templates are predicted in one pass, as the top and left strips of
    the (W+M)x(H+M) extended block, from the reference line at distance M.
    """
    if not tmpl.available:
        raise TemplateUnavailable(f"no template for {tmpl.geom}")
    refs = template_reference(plane, tmpl, coded)
    g, M = tmpl.geom, tmpl.m_lines
    full = predict_unified(refs.unified(), g.w + M, g.h + M, ipm)
    return _split_template(full, M)


def predict_template_all(plane, tmpl: Template,
                         coded: CodedBlockMap) -> tuple[np.ndarray, np.ndarray]:
    """All-mode template predictions, shapes (67, M, W) and (67, H, M)."""
    if not tmpl.available:
        raise TemplateUnavailable(f"no template for {tmpl.geom}")
    refs = template_reference(plane, tmpl, coded)
    g, M = tmpl.geom, tmpl.m_lines
    full = predict_all_unified(refs.unified(), g.w + M, g.h + M)
    return _split_template(full, M)
