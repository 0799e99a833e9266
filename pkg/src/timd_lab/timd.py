"""Regular TIMD: mode subset, template costs, best-three derivation, fusion."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .cost import region_cost, region_cost_batch
from .intra_pred import (
    DC, DIAGONAL, HORIZONTAL, NUM_MODES, PLANAR, VERTICAL, BlockGeom, Template,
    is_angular, predict_template, predict_template_all,
)

if TYPE_CHECKING:
    from .coded_map import CodedBlockMap

DEFAULT_MPM_MODES = (PLANAR, DC, HORIZONTAL, DIAGONAL, VERTICAL)


@dataclass(frozen=True)
class TimdDerivation:
    """The derived set D: two angular modes, one non-angular, their costs and weights."""

    primary: int
    secondary: int
    non_angular: int
    costs: tuple[int, int, int]
    weights: tuple[Fraction, Fraction, Fraction]

    def __post_init__(self):
        if self.primary == self.secondary or not (is_angular(self.primary) and is_angular(self.secondary)):
            raise ValueError("primary and secondary must be distinct angular modes")
        if self.non_angular not in (PLANAR, DC):
            raise ValueError("non_angular must be Planar or DC")
        if self.costs[0] > self.costs[1]:
            raise ValueError("primary cost exceeds secondary cost")
        if sum(self.weights) != 1 or min(self.weights) < 0:
            raise ValueError("weights must be non-negative and sum to 1")

    @property
    def modes(self) -> tuple[int, int, int]:
        return (self.primary, self.secondary, self.non_angular)

    @classmethod
    def from_costs(cls, modes: Sequence[int], costs: Sequence[int]) -> TimdDerivation:
        """Build from (angular, angular, non-angular) modes; angular pair ordered by cost then index."""
        (a, ja), (b, jb) = sorted([(modes[0], int(costs[0])), (modes[1], int(costs[1]))],
                                  key=lambda mc: (mc[1], mc[0]))
        j = (ja, jb, int(costs[2]))
        return cls(a, b, modes[2], j, fusion_weights(j))

    def to_dict(self) -> dict:
        return {
            "modes": list(self.modes),
            "costs": list(self.costs),
            "weights": [str(w) for w in self.weights],
        }


def candidate_ipm_subset(coded: CodedBlockMap | None, geom: BlockGeom, config=None) -> list[int]:
    """Modes tested on the template.

    ``config.subset == "full"`` (default) sweeps all 67 modes. ``"mpm"`` takes the
    modes of adjacent coded blocks, widens each angular one by +-1, and adds
    Planar, DC, horizontal, diagonal and vertical.
    """
    kind = getattr(config, "subset", "full") if config is not None else "full"
    if kind == "full":
        return list(range(NUM_MODES))
    if kind != "mpm":
        raise ValueError(f"unknown subset {kind!r}")
    from .timd_merge import scan_adjacent

    modes = set(DEFAULT_MPM_MODES)
    if coded is not None:
        for rec in scan_adjacent(geom, coded):
            found = rec.derivation.modes if rec.derivation is not None else (rec.explicit_ipm,)
            for m in found:
                modes.add(m)
                if is_angular(m):
                    modes.update(n for n in (m - 1, m + 1) if is_angular(n))
    return sorted(modes)


def template_costs(plane, tmpl: Template, coded: CodedBlockMap) -> np.ndarray:
    """J for all 67 modes: top and left strips costed independently and summed."""
    top, left = predict_template_all(plane, tmpl, coded)
    return (region_cost_batch(top, tmpl.top, tmpl.top_mask)
            + region_cost_batch(left, tmpl.left, tmpl.left_mask))


def template_cost(plane, tmpl: Template, ipm: int, coded: CodedBlockMap) -> int:
    top, left = predict_template(plane, tmpl, ipm, coded)
    return (region_cost(top, tmpl.top, tmpl.top_mask)
            + region_cost(left, tmpl.left, tmpl.left_mask))


def select_modes(costs, subset: Sequence[int]) -> TimdDerivation:
    """Two cheapest angular modes and the cheaper non-angular one; ties to the lower index."""
    angular = sorted((int(costs[m]), m) for m in set(subset) if is_angular(m))
    flat = sorted((int(costs[m]), m) for m in set(subset) if m in (PLANAR, DC))
    if len(angular) < 2 or not flat:
        raise ValueError("subset needs at least two angular modes and Planar or DC")
    (j1, p), (j2, s) = angular[:2]
    jn, n = flat[0]
    j = (j1, j2, jn)
    return TimdDerivation(p, s, n, j, fusion_weights(j))


def derive_timd(plane, tmpl: Template, subset: Sequence[int], coded: CodedBlockMap,
                costs: np.ndarray | None = None) -> TimdDerivation:
    if costs is None:
        costs = template_costs(plane, tmpl, coded)
    return select_modes(costs, subset)


def fusion_weights(costs: Sequence[int]) -> tuple[Fraction, Fraction, Fraction]:
    """w_i = (S - J_i) / 2S with S = sum(J); uniform when S == 0."""
    total = sum(int(c) for c in costs)
    if total == 0:
        third = Fraction(1, 3)
        return (third, third, third)
    return tuple(Fraction(total - int(c), 2 * total) for c in costs)


def fixed_point_weights(weights: Sequence[Fraction], scale: int = 64) -> tuple[int, ...]:
    """Integer weights summing to ``scale`` by largest remainder (ties to the lower index)."""
    scaled = [Fraction(w) * scale for w in weights]
    base = [int(s) for s in scaled]  # floor: weights are non-negative
    short = scale - sum(base)
    order = sorted(range(len(scaled)), key=lambda i: (-(scaled[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return tuple(base)


def fuse_prediction(preds, weights: Sequence[Fraction], bit_depth: int = 8) -> np.ndarray:
    """6-bit fixed-point weighted sum of three predictions, clipped to the sample range."""
    preds = np.asarray(preds, dtype=np.int64)
    if preds.ndim != 3 or preds.shape[0] != len(weights):
        raise ValueError("need one prediction per weight, all the same size")
    w = np.array(fixed_point_weights(weights), dtype=np.int64)
    fused = (np.tensordot(w, preds, axes=1) + 32) >> 6
    return np.clip(fused, 0, (1 << bit_depth) - 1).astype(np.int32)
