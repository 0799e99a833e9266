"""Coded-map layouts and painted planes shared by several test modules."""

from __future__ import annotations

import numpy as np

from timd_lab.coded_map import CodedBlockMap, CodedBlockRecord, ModeKind
from timd_lab.frame_io import Plane
from timd_lab.intra_pred import DC, BlockGeom, build_reference_line, predict_block
from timd_lab.transforms import TransformPair


def explicit(geom):
    return CodedBlockRecord(geom, ModeKind.EXPLICIT_IPM, TransformPair(), explicit_ipm=DC)


def coded_all_but(width, height, geom, unit=4):
    """Map where every 4x4 unit is its own coded block except those of ``geom``."""
    coded = CodedBlockMap(width, height)
    for y in range(0, height, unit):
        for x in range(0, width, unit):
            if not (geom.x <= x < geom.x + geom.w and geom.y <= y < geom.y + geom.h):
                coded.insert(explicit(BlockGeom(x, y, unit, unit)))
    return coded


def raster_coded(width, height, geom, unit=4):
    """Raster-order 4x4 coding up to (not including) the unit at the block's origin."""
    coded = CodedBlockMap(width, height)
    for y in range(0, height, unit):
        for x in range(0, width, unit):
            if (y, x) >= (geom.y, geom.x):
                return coded
            if not (geom.x <= x < geom.x + geom.w and geom.y <= y < geom.y + geom.h):
                coded.insert(explicit(BlockGeom(x, y, unit, unit)))
    return coded


def paint_mode(ipm, geom, m, size=64, seed=3):
    """Plane whose template area equals mode ``ipm`` extrapolated from the line at distance m."""
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (size, size))
    ext = BlockGeom(geom.x - m, geom.y - m, geom.w + m, geom.h + m)
    plane = Plane.from_array(img)
    coded = coded_all_but(size, size, geom)
    refs = build_reference_line(plane, ext, 0, coded)
    full = predict_block(refs, ext, ipm)
    img[ext.y:ext.y + m, ext.x:ext.x + ext.w] = full[:m]
    img[ext.y:ext.y + ext.h, ext.x:ext.x + m] = full[:, :m]
    return Plane.from_array(img), coded


def random_blocks(rng, size=64, min_size=4, split_p=0.6):
    """Random quadtree partition of a size x size frame in Z-scan order."""
    out = []

    def visit(x, y, s):
        # the root always splits so there is more than one block
        if s > min_size and (s == size or rng.random() < split_p):
            h = s // 2
            for dy in (0, h):
                for dx in (0, h):
                    visit(x + dx, y + dy, h)
        else:
            out.append(BlockGeom(x, y, s, s))

    visit(0, 0, size)
    return out


def random_record(rng, geom):
    from timd_lab.timd import TimdDerivation
    from timd_lab.transforms import TransformKind

    kind = [ModeKind.EXPLICIT_IPM, ModeKind.REGULAR_TIMD, ModeKind.TIMD_MERGE][rng.integers(3)]
    pair = TransformPair(*(TransformKind.DST7 if b else TransformKind.DCT2 for b in rng.integers(0, 2, 2)))
    if kind is ModeKind.EXPLICIT_IPM:
        return CodedBlockRecord(geom, kind, pair, explicit_ipm=int(rng.integers(67)))
    a, b = rng.choice(np.arange(2, 67), 2, replace=False)
    deriv = TimdDerivation.from_costs((int(a), int(b), int(rng.integers(2))), rng.integers(0, 100, 3))
    return CodedBlockRecord(geom, kind, pair, derivation=deriv)


def random_layout(rng, size=64):
    """(plane, coded map, current block): a random prefix of a random partition is coded."""
    blocks = random_blocks(rng, size)
    cut = int(rng.integers(1, len(blocks)))
    coded = CodedBlockMap(size, size)
    for geom in blocks[:cut]:
        coded.insert(random_record(rng, geom))
    # smooth texture plus noise so template costs vary
    y, x = np.mgrid[0:size, 0:size]
    f = rng.uniform(0.05, 0.5, 2)
    img = 128 + 60 * np.sin(f[0] * x + f[1] * y) + rng.normal(0, 8, (size, size))
    plane = Plane.from_array(np.clip(np.rint(img), 0, 255).astype(int))
    return plane, coded, blocks[cut]


class AuditPlane:
    """Sample accessor that logs every read made after the frame was partitioned.

    A read is causal when it touches the current block through ``region`` (the
    encoder's original samples) or, through ``gather``, samples of blocks that
    precede the current one in coding order.
    """

    def __init__(self, plane, blocks):
        self.plane = plane
        self.width, self.height, self.bit_depth = plane.width, plane.height, plane.bit_depth
        self.blocks = list(blocks)
        self.order = np.full((plane.height, plane.width), -1, dtype=np.int64)
        for i, g in enumerate(self.blocks):
            self.order[g.y:g.y + g.h, g.x:g.x + g.w] = i
        self.current = -1
        self.reads = 0
        self.violations = []

    @property
    def max_value(self):
        return self.plane.max_value

    def on_block(self, index, geom):
        self.current = index

    def gather(self, xs, ys):
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        self.reads += xs.size
        order = self.order[ys, xs]
        bad = (order < 0) | (order >= self.current)
        if bad.any():
            self.violations.append(("gather", self.current, list(zip(xs[bad].tolist(), ys[bad].tolist()))[:5]))
        return self.plane.gather(xs, ys)

    def region(self, x, y, w, h):
        self.reads += w * h
        if BlockGeom(x, y, w, h) != self.blocks[self.current]:
            self.violations.append(("region", self.current, (x, y, w, h)))
        return self.plane.region(x, y, w, h)


def distant_texture_frame(ring=1, value=180):
    """96x64 frame of 16x16 blocks where block (48, 32) repeats a distant object.

    The left third holds vertical bars (a 180-valued bar spans x = 15..35), the
    rest is a diagonal stripe pattern. The block at (48, 32) is flat ``value``
    with a ``ring``-sample border of the same value, so its immediate template
    is mostly stripes while the bar block at (16, 32) carries the same content.
    """
    y, x = np.mgrid[0:64, 0:96]
    img = 40 + 160 * (((x + y) // 4) % 2)
    bars = np.where(((x + 6) // 21) % 2 == 1, 180, 60)
    img = np.where(x < 36, bars, img)
    img[32 - ring:48, 48 - ring:64 + ring] = value
    blocks = [BlockGeom(bx, by, 16, 16) for by in range(0, 64, 16) for bx in range(0, 96, 16)]
    return Plane.from_array(img.astype(np.uint8)), blocks
