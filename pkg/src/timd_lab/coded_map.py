"""Causal store of coded blocks at 4x4-unit granularity."""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .intra_pred import BlockGeom
from .transforms import TransformPair

if TYPE_CHECKING:
    from .timd import TimdDerivation

UNIT = 4


class ModeKind(str, enum.Enum):
    EXPLICIT_IPM = "explicit"
    REGULAR_TIMD = "timd"
    TIMD_MERGE = "merge"

    @property
    def is_timd(self) -> bool:
        return self is not ModeKind.EXPLICIT_IPM


class OverlapError(ValueError):
    pass


@dataclass(frozen=True)
class CodedBlockRecord:
    geom: BlockGeom
    mode_kind: ModeKind
    transform_pair: TransformPair
    derivation: TimdDerivation | None = None
    explicit_ipm: int | None = None
    # insertion sequence number, assigned by CodedBlockMap.insert
    seq: int = -1

    def __post_init__(self):
        if self.mode_kind.is_timd != (self.derivation is not None):
            raise ValueError("derivation must be present exactly for TIMD-coded blocks")
        if (self.mode_kind is ModeKind.EXPLICIT_IPM) != (self.explicit_ipm is not None):
            raise ValueError("explicit_ipm must be present exactly for explicit blocks")

    def to_dict(self) -> dict:
        g = self.geom
        out = {
            "seq": self.seq,
            "x": g.x, "y": g.y, "w": g.w, "h": g.h,
            "mode": self.mode_kind.value,
            "transform": list(self.transform_pair.as_tuple()),
        }
        if self.explicit_ipm is not None:
            out["ipm"] = self.explicit_ipm
        if self.derivation is not None:
            out["derivation"] = self.derivation.to_dict()
        return out


class CodedBlockMap:
    """Unit grid (4x4 samples per unit) of record indices plus the insertion-ordered records."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.grid = np.full((-(-height // UNIT), -(-width // UNIT)), -1, dtype=np.int32)
        self.records: list[CodedBlockRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def _units(self, g: BlockGeom):
        return (slice(g.y // UNIT, -(-(g.y + g.h) // UNIT)),
                slice(g.x // UNIT, -(-(g.x + g.w) // UNIT)))

    def insert(self, record: CodedBlockRecord) -> CodedBlockRecord:
        """Store ``record`` (stamped with its sequence number) and return the stored copy."""
        g = record.geom
        if g.x < 0 or g.y < 0 or g.x + g.w > self.width or g.y + g.h > self.height:
            raise ValueError(f"block {g} outside the map")
        units = self.grid[self._units(g)]
        if (units >= 0).any():
            raise OverlapError(f"block {g} overlaps an already coded block")
        stored = dataclasses.replace(record, seq=len(self.records))
        self.records.append(stored)
        units[...] = stored.seq
        return stored

    def lookup(self, x: int, y: int) -> CodedBlockRecord | None:
        if not (0 <= x < self.width and 0 <= y < self.height):
            return None
        idx = self.grid[y // UNIT, x // UNIT]
        return self.records[idx] if idx >= 0 else None

    def record_ids(self, xs, ys) -> np.ndarray:
        """Vectorized lookup: record index per position, -1 when uncoded or out of frame."""
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        inside = (xs >= 0) & (ys >= 0) & (xs < self.width) & (ys < self.height)
        out = np.full(xs.shape, -1, dtype=np.int32)
        out[inside] = self.grid[ys[inside] // UNIT, xs[inside] // UNIT]
        return out

    def covered(self, xs, ys) -> np.ndarray:
        return self.record_ids(xs, ys) >= 0

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.records], indent=1, sort_keys=True)
