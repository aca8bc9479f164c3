"""Threshold search that turns nonnegative factors into Boolean ones."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import ShapeError, as_bool, as_dense

DEFAULT_NPOINT = 20


@dataclass
class ThresholdChoice:
    delta_w: float
    delta_h: float
    hamming: int
    w_hat: np.ndarray
    h_hat: np.ndarray


def threshold(c, delta: float) -> np.ndarray:
    """1 where ``c > delta`` (strict), 0 elsewhere."""
    if delta < 0:
        raise ValueError(f"threshold must be >= 0, got {delta}")
    return (as_dense(c) > delta).astype(np.uint8)


def threshold_grid(c: np.ndarray, npoint: int) -> np.ndarray:
    """Inclusive linear grid from min(c) to max(c), with 0 always present."""
    grid = np.linspace(float(c.min()), float(c.max()), npoint)
    if grid[0] > 0:
        grid = np.concatenate(([0.0], grid))
    return grid


def booleanize(x, w, h, npoint: int = DEFAULT_NPOINT) -> ThresholdChoice:
    """Grid-search ``(delta_w, delta_h)`` minimizing the Boolean reconstruction error.

    Every pair from the two grids is scored by the Hamming distance between
    ``x`` and the Boolean product of the thresholded factors.  Ties go to the
    lexicographically smallest pair.
    """
    if npoint < 2:
        raise ValueError(f"npoint must be >= 2, got {npoint}")
    x, w, h = as_bool(x), as_dense(w), as_dense(h)
    if w.shape[0] != x.shape[0] or h.shape[1] != x.shape[1] or w.shape[1] != h.shape[0]:
        raise ShapeError(f"factors W {w.shape} and H {h.shape} do not match X {x.shape}")
    if np.any(w < 0) or np.any(h < 0):
        raise ValueError("factors must be nonnegative")

    w_grid = threshold_grid(w, npoint)
    h_grid = threshold_grid(h, npoint)
    # all H thresholds at once: (P, k, M)
    h_stack = (h[None, :, :] > h_grid[:, None, None]).astype(np.float32)
    x_b = x.astype(bool)

    best = None
    for i, dw in enumerate(w_grid):
        w_hat = (w > dw).astype(np.float32)
        recon = np.matmul(w_hat, h_stack) > 0.5          # (P, N, M)
        errs = np.count_nonzero(recon != x_b, axis=(1, 2))
        j = int(np.argmin(errs))                          # first minimum = smallest delta_h
        if best is None or errs[j] < best[0]:
            best = (int(errs[j]), i, j)
    err, i, j = best
    return ThresholdChoice(
        delta_w=float(w_grid[i]),
        delta_h=float(h_grid[j]),
        hamming=err,
        w_hat=(w > w_grid[i]).astype(np.uint8),
        h_hat=(h > h_grid[j]).astype(np.uint8),
    )
