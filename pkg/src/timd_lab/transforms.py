"""Integer 1-D DCT-II / DST-VII kernels and per-direction transform-type selection.

The transform pair is only a label: it is chosen from the residual, carried in
coded-block records and inherited by merge-coded blocks. No quantization or
2-D coding happens here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SIZES = (4, 8, 16, 32, 64)


class TransformKind(str, enum.Enum):
    DCT2 = "DCT2"
    DST7 = "DST7"


@dataclass(frozen=True)
class TransformPair:
    horizontal: TransformKind = TransformKind.DCT2
    vertical: TransformKind = TransformKind.DCT2

    def as_tuple(self) -> tuple[str, str]:
        return (self.horizontal.value, self.vertical.value)


@lru_cache(maxsize=None)
def kernel(kind: TransformKind, n: int) -> np.ndarray:
    """Integer basis, rows = basis functions, scaled by 64*sqrt(n) and rounded."""
    if n not in SIZES:
        raise ValueError(f"unsupported transform size {n}")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    if TransformKind(kind) is TransformKind.DCT2:
        basis = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
        basis[0] /= np.sqrt(2.0)
    else:
        basis = np.sqrt(4.0 / (2 * n + 1)) * np.sin(np.pi * (2 * k + 1) * (i + 1) / (2 * n + 1))
    mat = np.rint(64 * np.sqrt(n) * basis).astype(np.int64)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def _inverse(kind: TransformKind, n: int) -> np.ndarray:
    inv = np.linalg.inv(kernel(kind, n).astype(np.float64))
    inv.setflags(write=False)
    return inv


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def transform_1d(kind: TransformKind, values) -> np.ndarray:
    """Forward transform along the last axis; exact integer arithmetic."""
    values = np.asarray(values, dtype=np.int64)
    return values @ kernel(TransformKind(kind), values.shape[-1]).T


def inverse_1d(kind: TransformKind, coefs) -> np.ndarray:
    coefs = np.asarray(coefs, dtype=np.int64)
    return _round_half_away(coefs @ _inverse(TransformKind(kind), coefs.shape[-1]).T)


def compaction_cost(kind: TransformKind, lines: np.ndarray) -> int:
    """Sum of |coefficients| past index 0 over every line (last axis)."""
    return int(np.abs(transform_1d(kind, lines)[..., 1:]).sum())


def _pick(lines: np.ndarray) -> TransformKind:
    if compaction_cost(TransformKind.DST7, lines) < compaction_cost(TransformKind.DCT2, lines):
        return TransformKind.DST7
    return TransformKind.DCT2


def select_transform_pair(residual) -> TransformPair:
    """Choose the kind that compacts energy best, per direction; ties go to DCT2.

    Horizontal applies to rows, vertical to columns.
    """
    residual = np.asarray(residual, dtype=np.int64)
    h, w = residual.shape
    if h not in SIZES or w not in SIZES:
        raise ValueError(f"unsupported residual size {w}x{h}")
    return TransformPair(_pick(residual), _pick(residual.T))
