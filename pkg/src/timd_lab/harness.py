"""Causal coding loop: partition, per-block mode decision, statistics and artifacts."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .coded_map import CodedBlockMap, CodedBlockRecord, ModeKind
from .cost import satd, satd_batch
from .frame_io import Plane, emit_heatmap, emit_mode_map, load_plane
from .intra_pred import BlockGeom, build_reference_line, build_template, predict_all, template_lines
from .timd import candidate_ipm_subset, derive_timd, fuse_prediction
from .timd_merge import (
    ADJACENT, NeighborMap, build_merge_list, format_offset, inherit_prediction,
    load_neighbor_map, reorder_and_select,
)
from .transforms import select_transform_pair

log = logging.getLogger(__name__)

ABLATIONS = ("non_adjacent", "transform_inherit", "merge")

# signalling-cost proxies, in units of lambda
BITS_EXPLICIT = 7
BITS_TIMD = 2
BITS_MERGE = 3


@dataclass
class LabConfig:
    input: str | None = None
    format: str = "pgm"
    width: int | None = None
    height: int | None = None
    depth: int | None = None
    out_dir: str = "out"

    max_size: int = 64
    min_size: int = 8
    split_threshold: float = 100.0
    lam: float = 4.0
    gate_ratio: float = 1.2
    max_candidates: int = 6
    subset: str = "full"
    # template thickness: m_small lines when min(W, H) <= m_limit, else m_large
    m_small: int = 2
    m_large: int = 4
    m_limit: int = 8
    neighbor_map: str | None = None
    # expected offset count when loading the neighbour map; 0 skips the check
    neighbor_count: int = 41

    merge: bool = True
    non_adjacent: bool = True
    transform_inherit: bool = True

    @property
    def ablations(self) -> list[str]:
        return [name for name in ABLATIONS if not getattr(self, name)]

    def with_ablations(self, names: Iterable[str]) -> LabConfig:
        names = [n.strip() for n in names if n.strip()]
        bad = [n for n in names if n not in ABLATIONS]
        if bad:
            raise ValueError(f"unknown ablation(s): {', '.join(bad)}")
        return dataclasses.replace(self, **{n: False for n in names})

    def template_rule(self) -> tuple[int, int, int]:
        return (self.m_small, self.m_large, self.m_limit)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config_file(path) -> dict:
    """Read ``key = value`` settings (TOML syntax) into a dict of LabConfig fields."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    # the CLI spelling is accepted as well
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    known = {f.name for f in dataclasses.fields(LabConfig)}
    unknown = set(data) - known - {"ablate"}
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def load_config_neighbor_map(config: LabConfig) -> NeighborMap:
    return load_neighbor_map(config.neighbor_map, config.neighbor_count or None)


# --- partition ---------------------------------------------------------------

def partition(plane: Plane, config: LabConfig) -> list[BlockGeom]:
    """Variance-driven quadtree, CTUs in raster order and Z-scan inside each CTU.

    A square splits while its variance exceeds ``split_threshold`` and it is
    larger than ``min_size``; squares crossing the frame edge always split
    (down to 4x4) and are dropped when entirely outside.
    """
    if plane.width % 4 or plane.height % 4:
        raise ValueError("frame dimensions must be multiples of 4; crop first")
    samples = plane.samples
    blocks: list[BlockGeom] = []

    def visit(x: int, y: int, size: int):
        if x >= plane.width or y >= plane.height:
            return
        inside = x + size <= plane.width and y + size <= plane.height
        if inside:
            if size <= config.min_size or size <= 4:
                blocks.append(BlockGeom(x, y, size, size))
                return
            var = float(samples[y:y + size, x:x + size].var())
            if var <= config.split_threshold:
                blocks.append(BlockGeom(x, y, size, size))
                return
        half = size // 2
        for dy in (0, half):
            for dx in (0, half):
                visit(x + dx, y + dy, half)

    for cy in range(0, plane.height, config.max_size):
        for cx in range(0, plane.width, config.max_size):
            visit(cx, cy, config.max_size)
    return blocks


# --- per-block decision ------------------------------------------------------

@dataclass
class ModeDecision:
    geom: BlockGeom
    chosen: ModeKind
    # total cost (SATD + lambda * bits) per tested mode
    costs: dict
    # block SATD per evaluated mode (merge included even when gated out)
    satds: dict
    merge_gated: bool = False
    merge_candidates: int = 0
    winner_origin: object = None
    explicit_ipm: int | None = None

    @property
    def chosen_cost(self) -> float:
        return self.costs[self.chosen]

    @property
    def block_satd(self) -> int:
        return self.satds[self.chosen]


def decide_block(plane, geom: BlockGeom, coded: CodedBlockMap, nmap: NeighborMap | None,
                 config: LabConfig) -> tuple[ModeDecision, CodedBlockRecord]:
    """Pick explicit / regular TIMD / TIMD merge for ``geom`` and insert the record."""
    lam = config.lam
    orig = plane.region(geom.x, geom.y, geom.w, geom.h)
    refs = build_reference_line(plane, geom, 0, coded)
    preds = predict_all(refs, geom)
    block_satds = satd_batch(preds, orig)

    best_ipm = int(np.argmin(block_satds))
    satds = {ModeKind.EXPLICIT_IPM: int(block_satds[best_ipm])}
    costs = {ModeKind.EXPLICIT_IPM: satds[ModeKind.EXPLICIT_IPM] + BITS_EXPLICIT * lam}
    fused = {ModeKind.EXPLICIT_IPM: preds[best_ipm]}
    derivations = {}
    merge_gated = False
    n_candidates = 0
    best = None

    tmpl = build_template(plane, geom, template_lines(geom, config.template_rule()), coded)
    if tmpl.available:
        subset = candidate_ipm_subset(coded, geom, config)
        deriv = derive_timd(plane, tmpl, subset, coded)
        pred = fuse_prediction(preds[list(deriv.modes)], deriv.weights, plane.bit_depth)
        satds[ModeKind.REGULAR_TIMD] = satd(pred, orig)
        costs[ModeKind.REGULAR_TIMD] = satds[ModeKind.REGULAR_TIMD] + BITS_TIMD * lam
        fused[ModeKind.REGULAR_TIMD] = pred
        derivations[ModeKind.REGULAR_TIMD] = deriv

        if config.merge and config.gate_ratio > 0:
            candidates = build_merge_list(geom, coded, nmap, plane, config)
            n_candidates = len(candidates)
            if candidates:
                best = reorder_and_select(candidates)
                m_deriv = best.derived_set
                pred = fuse_prediction(preds[list(m_deriv.modes)], m_deriv.weights, plane.bit_depth)
                m_satd = satd(pred, orig)
                satds[ModeKind.TIMD_MERGE] = m_satd
                # encoder gate: skip the full cost check when merge is clearly worse
                if m_satd <= config.gate_ratio * satds[ModeKind.REGULAR_TIMD]:
                    costs[ModeKind.TIMD_MERGE] = m_satd + BITS_MERGE * lam
                    fused[ModeKind.TIMD_MERGE] = pred
                    derivations[ModeKind.TIMD_MERGE] = m_deriv
                else:
                    merge_gated = True

    chosen = min(costs, key=lambda k: costs[k])  # dict order breaks ties: explicit, timd, merge
    own_transform = select_transform_pair(orig.astype(np.int64) - fused[chosen])
    if chosen is ModeKind.TIMD_MERGE:
        _, transform = inherit_prediction(best, config.transform_inherit, own_transform)
    else:
        transform = own_transform
    record = CodedBlockRecord(
        geom, chosen, transform,
        derivation=derivations.get(chosen),
        explicit_ipm=best_ipm if chosen is ModeKind.EXPLICIT_IPM else None,
    )
    record = coded.insert(record)
    decision = ModeDecision(
        geom, chosen, costs, satds, merge_gated, n_candidates,
        winner_origin=best.origin if chosen is ModeKind.TIMD_MERGE else None,
        explicit_ipm=best_ipm,
    )
    return decision, record


# --- frame loop and statistics ------------------------------------------------

@dataclass
class FrameResult:
    plane: Plane
    coded: CodedBlockMap
    decisions: list[ModeDecision]
    nmap: NeighborMap | None
    config: LabConfig


def code_blocks(plane, blocks: Iterable[BlockGeom], config: LabConfig,
                nmap: NeighborMap | None = None,
                on_block: Callable[[int, BlockGeom], None] | None = None) -> FrameResult:
    """Decide every block in coding order. ``on_block`` fires before each decision."""
    if nmap is None:
        nmap = load_config_neighbor_map(config)
    coded = CodedBlockMap(plane.width, plane.height)
    decisions = []
    for i, geom in enumerate(blocks):
        geom.validate(plane.width, plane.height)
        if on_block is not None:
            on_block(i, geom)
        decision, _ = decide_block(plane, geom, coded, nmap, config)
        decisions.append(decision)
    return FrameResult(plane, coded, decisions, nmap, config)


def prepare_plane(plane: Plane) -> Plane:
    """Crop to multiples of 4 (the minimum block size)."""
    w, h = plane.width - plane.width % 4, plane.height - plane.height % 4
    if (w, h) != (plane.width, plane.height):
        log.info("cropping %dx%d to %dx%d", plane.width, plane.height, w, h)
        plane = plane.crop(w, h)
    return plane


def code_frame(plane: Plane, config: LabConfig, nmap: NeighborMap | None = None,
               source=None, on_block=None) -> FrameResult:
    """Partition ``plane`` and code it. ``source`` overrides the sample accessor."""
    plane = prepare_plane(plane)
    blocks = partition(plane, config)
    result = code_blocks(source if source is not None else plane, blocks, config, nmap, on_block)
    result.plane = plane
    return result


@dataclass
class RunStats:
    block_counts: dict
    area_shares: dict
    mean_block_satd: dict
    offset_wins: dict
    adjacent_wins: int
    merge_gated: int
    total_chosen_cost: float
    ablations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def collect_stats(result: FrameResult) -> RunStats:
    kinds = [k.value for k in ModeKind]
    counts = {k: 0 for k in kinds}
    area = {k: 0 for k in kinds}
    satd_sum = {k: 0 for k in kinds}
    offsets = list(result.nmap) if result.nmap is not None else []
    wins = {format_offset(o): 0 for o in offsets}
    adjacent = 0
    for d in result.decisions:
        k = d.chosen.value
        counts[k] += 1
        area[k] += d.geom.area
        satd_sum[k] += d.block_satd
        if d.chosen is ModeKind.TIMD_MERGE:
            if d.winner_origin == ADJACENT:
                adjacent += 1
            else:
                wins[format_offset(d.winner_origin)] += 1
    total_area = sum(area.values()) or 1
    return RunStats(
        block_counts=counts,
        area_shares={k: area[k] / total_area for k in kinds},
        mean_block_satd={k: (satd_sum[k] / counts[k] if counts[k] else 0.0) for k in kinds},
        offset_wins=wins,
        adjacent_wins=adjacent,
        merge_gated=sum(d.merge_gated for d in result.decisions),
        total_chosen_cost=float(sum(d.chosen_cost for d in result.decisions)),
        ablations=result.config.ablations,
    )


def _fmt_cost(costs: dict, kind: ModeKind) -> str:
    return f"{costs[kind]:g}" if kind in costs else ""


def blocks_csv(result: FrameResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "x", "y", "w", "h", "mode", "explicit_cost", "timd_cost",
                     "merge_cost", "chosen_cost", "block_satd", "merge_candidates",
                     "merge_gated", "winner", "modes", "transform_h", "transform_v"])
    for i, (d, rec) in enumerate(zip(result.decisions, result.coded.records)):
        g = d.geom
        if d.winner_origin is None:
            winner = ""
        elif d.winner_origin == ADJACENT:
            winner = ADJACENT
        else:
            winner = format_offset(d.winner_origin)
        modes = rec.derivation.modes if rec.derivation is not None else (rec.explicit_ipm,)
        th, tv = rec.transform_pair.as_tuple()
        writer.writerow([i, g.x, g.y, g.w, g.h, d.chosen.value,
                         _fmt_cost(d.costs, ModeKind.EXPLICIT_IPM),
                         _fmt_cost(d.costs, ModeKind.REGULAR_TIMD),
                         _fmt_cost(d.costs, ModeKind.TIMD_MERGE),
                         f"{d.chosen_cost:g}", d.block_satd, d.merge_candidates,
                         int(d.merge_gated), winner, " ".join(map(str, modes)), th, tv])
    return buf.getvalue()


def stats_json(result: FrameResult, stats: RunStats) -> str:
    doc = {
        "frame": {"width": result.plane.width, "height": result.plane.height,
                  "bit_depth": result.plane.bit_depth, "blocks": len(result.decisions)},
        "config": result.config.to_dict(),
        "stats": stats.to_dict(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_artifacts(result: FrameResult, out_dir, dump_map: bool = False) -> RunStats:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = collect_stats(result)
    (out / "stats.json").write_text(stats_json(result, stats))
    (out / "blocks.csv").write_text(blocks_csv(result))
    emit_mode_map(result.plane, result.coded, out / "modemap.ppm")
    wins = {}
    for d in result.decisions:
        if d.chosen is ModeKind.TIMD_MERGE and d.winner_origin != ADJACENT:
            wins[d.winner_origin] = wins.get(d.winner_origin, 0) + 1
    emit_heatmap(list(result.nmap) if result.nmap is not None else [], wins, out / "heatmap.ppm")
    if dump_map:
        (out / "coded_map.json").write_text(result.coded.to_json() + "\n")
    return stats


def run(config: LabConfig, dump_map: bool = False) -> tuple[RunStats, FrameResult]:
    """Load the configured input, code it and write stats and images to ``out_dir``."""
    if config.input is None:
        raise ValueError("config.input is required")
    plane = load_plane(config.input, config.format, config.width, config.height, config.depth)
    nmap = load_config_neighbor_map(config)
    result = code_frame(plane, config, nmap)
    stats = write_artifacts(result, config.out_dir, dump_map)
    return stats, result
