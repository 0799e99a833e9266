from __future__ import annotations

import json

import numpy as np
import pytest

from timd_lab.coded_map import CodedBlockMap, CodedBlockRecord, ModeKind, OverlapError
from timd_lab.intra_pred import BlockGeom
from timd_lab.timd import TimdDerivation
from timd_lab.transforms import TransformKind, TransformPair


def rec(x, y, w, h, kind=ModeKind.EXPLICIT_IPM):
    geom = BlockGeom(x, y, w, h)
    if kind is ModeKind.EXPLICIT_IPM:
        return CodedBlockRecord(geom, kind, TransformPair(), explicit_ipm=1)
    return CodedBlockRecord(geom, kind, TransformPair(),
                            derivation=TimdDerivation.from_costs((34, 30, 0), (3, 4, 5)))


def test_record_invariants():
    g = BlockGeom(0, 0, 4, 4)
    d = TimdDerivation.from_costs((34, 30, 0), (1, 2, 3))
    with pytest.raises(ValueError):
        CodedBlockRecord(g, ModeKind.REGULAR_TIMD, TransformPair())
    with pytest.raises(ValueError):
        CodedBlockRecord(g, ModeKind.EXPLICIT_IPM, TransformPair(), derivation=d, explicit_ipm=2)
    with pytest.raises(ValueError):
        CodedBlockRecord(g, ModeKind.EXPLICIT_IPM, TransformPair())
    with pytest.raises(ValueError):
        CodedBlockRecord(g, ModeKind.TIMD_MERGE, TransformPair(), derivation=d, explicit_ipm=2)
    assert ModeKind.TIMD_MERGE.is_timd and ModeKind.REGULAR_TIMD.is_timd
    assert not ModeKind.EXPLICIT_IPM.is_timd


def test_insert_8x8_units():
    m = CodedBlockMap(16, 16)
    stored = m.insert(rec(0, 0, 8, 8))
    assert stored.seq == 0
    assert m.grid[:2, :2].tolist() == [[0, 0], [0, 0]]
    assert (m.grid[2:, :] == -1).all() and (m.grid[:, 2:] == -1).all()


def test_insert_64x64_units():
    m = CodedBlockMap(128, 64)
    m.insert(rec(64, 0, 64, 64))
    assert int((m.grid == 0).sum()) == 256


def test_overlap_and_bounds():
    m = CodedBlockMap(16, 16)
    m.insert(rec(0, 0, 8, 8))
    with pytest.raises(OverlapError):
        m.insert(rec(4, 4, 4, 4))
    with pytest.raises(ValueError):
        m.insert(rec(12, 12, 8, 8))
    assert len(m) == 1


def test_lookup():
    m = CodedBlockMap(16, 16)
    r = m.insert(rec(8, 0, 8, 8, ModeKind.REGULAR_TIMD))
    assert m.lookup(9, 7) is r
    assert m.lookup(-4, 0) is None
    assert m.lookup(0, 0) is None
    assert m.lookup(16, 0) is None


def test_exhaustive_lookup_consistency(rng):
    m = CodedBlockMap(32, 32)
    blocks = [(0, 0, 16, 16), (16, 0, 8, 8), (24, 0, 8, 8), (16, 8, 16, 8), (0, 16, 4, 16), (4, 16, 4, 4)]
    stored = [m.insert(rec(*b)) for b in blocks]
    for y in range(32):
        for x in range(32):
            owner = [s for s in stored if s.geom.x <= x < s.geom.x + s.geom.w and s.geom.y <= y < s.geom.y + s.geom.h]
            got = m.lookup(x, y)
            assert (got is owner[0]) if owner else got is None
    xs = rng.integers(-5, 37, 200)
    ys = rng.integers(-5, 37, 200)
    ids = m.record_ids(xs, ys)
    for x, y, i in zip(xs, ys, ids):
        r = m.lookup(int(x), int(y))
        assert (r.seq if r is not None else -1) == i
    assert np.array_equal(m.covered(xs, ys), ids >= 0)


def test_replay_determinism():
    seq = [rec(0, 0, 8, 8), rec(8, 0, 8, 8, ModeKind.TIMD_MERGE), rec(0, 8, 16, 8, ModeKind.REGULAR_TIMD)]
    a, b = CodedBlockMap(16, 16), CodedBlockMap(16, 16)
    for r in seq:
        a.insert(r)
        b.insert(r)
    assert np.array_equal(a.grid, b.grid) and a.to_json() == b.to_json()


def test_json_dump():
    m = CodedBlockMap(16, 16)
    m.insert(rec(0, 0, 8, 8))
    pair = TransformPair(TransformKind.DST7, TransformKind.DCT2)
    m.insert(CodedBlockRecord(BlockGeom(8, 0, 8, 8), ModeKind.TIMD_MERGE, pair,
                              derivation=TimdDerivation.from_costs((34, 30, 0), (2, 2, 2))))
    doc = json.loads(m.to_json())
    assert [d["seq"] for d in doc] == [0, 1]
    assert doc[0]["ipm"] == 1 and "derivation" not in doc[0]
    assert doc[1]["mode"] == "merge" and doc[1]["transform"] == ["DST7", "DCT2"]
    assert doc[1]["derivation"]["weights"] == ["1/3"] * 3
