"""TIMD merge mode: neighbour scans, merge list, template reordering, inheritance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterator, Sequence, Union

from .coded_map import CodedBlockMap, CodedBlockRecord
from .intra_pred import BlockGeom, build_template
from .timd import TimdDerivation, template_costs
from .transforms import TransformPair

ADJACENT = "adjacent"
DEFAULT_NEIGHBOR_COUNT = 41
DEFAULT_MAX_CANDIDATES = 6

Offset = tuple[Fraction, Fraction]
# where a candidate was found: the adjacent scan or a neighbour-map offset
Origin = Union[str, Offset]


class NeighborMapError(ValueError):
    pass


def is_causal_offset(dx: Fraction, dy: Fraction) -> bool:
    """Probe lies above the block, or left of it within its rows (raster order)."""
    return dy < 0 or (dx < 0 and 0 <= dy < 1)


@dataclass(frozen=True)
class NeighborMap:
    offsets: tuple[Offset, ...]

    def __post_init__(self):
        seen = set()
        for off in self.offsets:
            if off in seen:
                raise NeighborMapError(f"duplicate offset {format_offset(off)}")
            if not is_causal_offset(*off):
                raise NeighborMapError(f"non-causal offset {format_offset(off)}")
            seen.add(off)

    def __len__(self) -> int:
        return len(self.offsets)

    def __iter__(self) -> Iterator[Offset]:
        return iter(self.offsets)


def format_offset(off: Offset) -> str:
    return f"{off[0]} {off[1]}"


def parse_neighbor_map(text: str, expected_count: int | None = DEFAULT_NEIGHBOR_COUNT) -> NeighborMap:
    offsets = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise NeighborMapError(f"line {lineno}: expected 'dx dy', got {raw!r}")
        try:
            offsets.append((Fraction(parts[0]), Fraction(parts[1])))
        except (ValueError, ZeroDivisionError):
            raise NeighborMapError(f"line {lineno}: bad number in {raw!r}") from None
    nmap = NeighborMap(tuple(offsets))
    if expected_count is not None and len(nmap) != expected_count:
        raise NeighborMapError(f"expected {expected_count} offsets, found {len(nmap)}")
    return nmap


def load_neighbor_map(path=None, expected_count: int | None = DEFAULT_NEIGHBOR_COUNT) -> NeighborMap:
    """Load a neighbour map file, or the packaged default when ``path`` is None."""
    if path is None:
        text = resources.files("timd_lab").joinpath("data/neighbor_map.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_neighbor_map(text, expected_count)


def _dedup(records, seen: set) -> list:
    out = []
    for rec in records:
        if rec is not None and rec.seq not in seen:
            seen.add(rec.seq)
            out.append(rec)
    return out


def adjacent_probes(geom: BlockGeom) -> list[tuple[int, int]]:
    x, y, w, h = geom.x, geom.y, geom.w, geom.h
    probes = [(x - 1, y + 4 * k) for k in range(h // 4)]
    probes += [(x + 4 * k, y - 1) for k in range(w // 4)]
    probes.append((x - 1, y - 1))
    return probes


def scan_adjacent(geom: BlockGeom, coded: CodedBlockMap) -> list[CodedBlockRecord]:
    """Unique records touching the left/top borders (every 4th sample) or the corner."""
    return _dedup((coded.lookup(px, py) for px, py in adjacent_probes(geom)), set())


def probe_position(geom: BlockGeom, off: Offset) -> tuple[int, int]:
    return (geom.x + math.floor(off[0] * geom.w), geom.y + math.floor(off[1] * geom.h))


def _non_adjacent_hits(geom, coded, nmap, seen) -> list[tuple[Offset, CodedBlockRecord]]:
    hits = []
    for off in nmap:
        px, py = probe_position(geom, off)
        # uncoded positions (including anything at or after the current block) are skipped
        rec = coded.lookup(px, py)
        if rec is not None and rec.seq not in seen:
            seen.add(rec.seq)
            hits.append((off, rec))
    return hits


def scan_non_adjacent(geom: BlockGeom, coded: CodedBlockMap, nmap: NeighborMap,
                      exclude: Sequence[CodedBlockRecord] = ()) -> list[CodedBlockRecord]:
    """Records covering the neighbour-map probes, in map order, minus ``exclude``."""
    seen = {r.seq for r in exclude}
    return [rec for _, rec in _non_adjacent_hits(geom, coded, nmap, seen)]


@dataclass(frozen=True)
class MergeCandidate:
    source: CodedBlockRecord
    derived_set: TimdDerivation
    transform_pair: TransformPair
    candidate_cost: Fraction
    origin: Origin = ADJACENT


def candidate_cost(costs: Sequence[int], weights: Sequence[Fraction]) -> Fraction:
    """K = sum of J_i * w_i."""
    return sum((int(j) * Fraction(w) for j, w in zip(costs, weights)), Fraction(0))


def make_candidate(source: CodedBlockRecord, costs_by_mode, origin: Origin = ADJACENT) -> MergeCandidate:
    """Re-evaluate the source's mode set on the current template and price it."""
    modes = source.derivation.modes
    derived = TimdDerivation.from_costs(modes, [costs_by_mode[m] for m in modes])
    return MergeCandidate(source, derived, source.transform_pair,
                          candidate_cost(derived.costs, derived.weights), origin)


def collect_neighbors(geom: BlockGeom, coded: CodedBlockMap, nmap: NeighborMap | None,
                      non_adjacent: bool = True) -> list[tuple[Origin, CodedBlockRecord]]:
    seen: set = set()
    found: list[tuple[Origin, CodedBlockRecord]] = [
        (ADJACENT, r) for r in _dedup((coded.lookup(*p) for p in adjacent_probes(geom)), seen)]
    if non_adjacent and nmap is not None:
        found += _non_adjacent_hits(geom, coded, nmap, seen)
    return found


def build_merge_list(geom: BlockGeom, coded: CodedBlockMap, nmap: NeighborMap | None,
                     plane, config=None) -> list[MergeCandidate]:
    """Eligible TIMD/merge-coded neighbours in scan order, capped, each with its K.

    Costs are re-evaluated on a one-line template of the current block. An
    empty list means merge mode is not available for this block.
    """
    max_candidates = getattr(config, "max_candidates", DEFAULT_MAX_CANDIDATES)
    non_adjacent = getattr(config, "non_adjacent", True)
    eligible = [(o, r) for o, r in collect_neighbors(geom, coded, nmap, non_adjacent)
                if r.mode_kind.is_timd][:max_candidates]
    if not eligible:
        return []
    tmpl = build_template(plane, geom, 1, coded)
    if not tmpl.available:
        return []
    costs = template_costs(plane, tmpl, coded)
    return [make_candidate(rec, costs, origin) for origin, rec in eligible]


def reorder_candidates(candidates: Sequence[MergeCandidate]) -> list[MergeCandidate]:
    """Stable ascending sort by K; equal K keeps scan order."""
    return sorted(candidates, key=lambda c: c.candidate_cost)


def reorder_and_select(candidates: Sequence[MergeCandidate]) -> MergeCandidate:
    if not candidates:
        raise ValueError("empty merge list")
    return reorder_candidates(candidates)[0]


def inherit_prediction(best: MergeCandidate, inherit_transform: bool = True,
                       own_transform: TransformPair | None = None) -> tuple[TimdDerivation, TransformPair]:
    """Modes and (re-evaluated) weights of ``best``, plus its transform pair.

    With ``inherit_transform`` off the block keeps ``own_transform`` instead.
    """
    if inherit_transform:
        return best.derived_set, best.transform_pair
    if own_transform is None:
        raise ValueError("own_transform is required when transform inheritance is off")
    return best.derived_set, own_transform
