"""SATD (unnormalized Hadamard) and SAD distortion, single and batched."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def hadamard(n: int) -> np.ndarray:
    """Sylvester-ordered +-1 Hadamard matrix of order ``n`` (a power of two)."""
    h = np.array([[1]], dtype=np.int64)
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    h.setflags(write=False)
    return h


def satd_tile(h: int, w: int) -> int:
    return 8 if h % 8 == 0 and w % 8 == 0 else 4


def _satd_diff(diff: np.ndarray) -> np.ndarray:
    # diff: (..., h, w) -> (...) sum of |H E H^T| over tiles
    h, w = diff.shape[-2:]
    if h % 4 or w % 4:
        raise ValueError(f"SATD needs dimensions that are multiples of 4, got {h}x{w}")
    t = satd_tile(h, w)
    lead = diff.shape[:-2]
    tiles = diff.reshape(*lead, h // t, t, w // t, t).swapaxes(-3, -2).astype(np.int64)
    H = hadamard(t)
    coef = H @ tiles @ H.T
    return np.abs(coef).sum(axis=(-4, -3, -2, -1))


def satd(a, b) -> int:
    """Sum of absolute Hadamard coefficients of ``a - b``.

    Tiles are 8x8 when both dimensions are multiples of 8, otherwise 4x4.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return int(_satd_diff(a - b))


def satd_batch(preds: np.ndarray, target: np.ndarray) -> np.ndarray:
    """SATD of each of ``preds`` (n, h, w) against ``target`` (h, w)."""
    if preds.shape[1:] != target.shape:
        raise ValueError(f"dimension mismatch {preds.shape[1:]} vs {target.shape}")
    return _satd_diff(preds.astype(np.int64) - target.astype(np.int64))


def sad(a, b, mask=None) -> int:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    d = np.abs(a - b)
    if mask is not None:
        d = d[np.asarray(mask, dtype=bool)]
    return int(d.sum())


def sad_batch(preds: np.ndarray, target: np.ndarray, mask=None) -> np.ndarray:
    d = np.abs(preds.astype(np.int64) - target.astype(np.int64))
    if mask is not None:
        d = d * np.asarray(mask, dtype=np.int64)
    return d.sum(axis=(-2, -1))


def _uses_satd(target: np.ndarray, mask) -> bool:
    h, w = target.shape
    return h % 4 == 0 and w % 4 == 0 and (mask is None or bool(np.all(mask)))


def region_cost(pred, target, mask=None) -> int:
    """Template-strip cost: SATD on fully available 4-multiple strips, masked SAD otherwise."""
    if mask is not None and not np.any(mask):
        return 0
    if _uses_satd(np.asarray(target), mask):
        return satd(pred, target)
    return sad(pred, target, mask)


def region_cost_batch(preds: np.ndarray, target: np.ndarray, mask=None) -> np.ndarray:
    if mask is not None and not np.any(mask):
        return np.zeros(preds.shape[0], dtype=np.int64)
    if _uses_satd(target, mask):
        return satd_batch(preds, target)
    return sad_batch(preds, target, mask)
