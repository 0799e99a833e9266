"""Template-based intra mode derivation (TIMD) and TIMD merge mode, as a desk-scale lab."""

from .coded_map import CodedBlockMap, CodedBlockRecord, ModeKind
from .frame_io import Plane, load_plane
from .harness import LabConfig, code_frame, decide_block, partition, run
from .intra_pred import BlockGeom
from .timd import TimdDerivation, derive_timd, fusion_weights, fuse_prediction
from .timd_merge import NeighborMap, build_merge_list, load_neighbor_map, reorder_and_select
from .transforms import TransformKind, TransformPair

__all__ = [
    "BlockGeom", "CodedBlockMap", "CodedBlockRecord", "LabConfig", "ModeKind", "NeighborMap",
    "Plane", "TimdDerivation", "TransformKind", "TransformPair", "build_merge_list",
    "code_frame", "decide_block", "derive_timd", "fuse_prediction", "fusion_weights",
    "load_neighbor_map", "load_plane", "partition", "reorder_and_select", "run",
]
