"""Exhaustive Boolean factorization for tiny matrices.

Given ``W`` the columns of ``H`` decouple: column ``j`` of the reconstruction
depends only on column ``j`` of ``H``.  So the search enumerates every ``W``
and, per column, every one of the ``2**k`` candidate columns, which finds the
global optimum over all ``(W, H)`` pairs without visiting them one by one.
"""
from __future__ import annotations

import itertools

import numpy as np

from .matrix import as_bool

DEFAULT_BUDGET = 2**24


class BudgetExceededError(RuntimeError):
    pass


def _all_binary(n_bits: int) -> np.ndarray:
    """All 0/1 vectors of length ``n_bits`` in lexicographic order."""
    return np.array(list(itertools.product((0, 1), repeat=n_bits)), dtype=np.uint8).reshape(-1, n_bits)


def exhaustive_bmf(x, k: int, budget: int = DEFAULT_BUDGET) -> tuple[np.ndarray, np.ndarray, int]:
    """Globally optimal rank-``k`` Boolean factorization of ``x``.

    Returns ``(w, h, min_hamming)``.  Among optimal pairs the one that is
    smallest in row-major lexicographic order (``W`` first, then ``H``) is
    returned.
    """
    x = as_bool(x)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n, m = x.shape
    space = 2 ** (n * k + k * m)
    if space > budget:
        raise BudgetExceededError(
            f"search space 2^{n * k + k * m} = {space} exceeds budget {budget}"
        )

    cols = _all_binary(k)                       # (C, k), lexicographic
    x_b = x.astype(bool)
    best = None
    for w_flat in itertools.product((0, 1), repeat=n * k):
        w = np.array(w_flat, dtype=np.uint8).reshape(n, k)
        # recon[c, i] = row i of W ⊗ candidate column c
        recon = (cols.astype(np.int32) @ w.T.astype(np.int32)) > 0     # (C, n)
        # cost[c, j] = mismatches in column j when H[:, j] = cols[c]
        cost = (recon[:, :, None] != x_b[None, :, :]).sum(axis=1)       # (C, m)
        pick = cost.argmin(axis=0)              # first minimum = smallest column
        total = int(cost[pick, np.arange(m)].sum())
        if best is None or total < best[0]:
            best = (total, w, cols[pick].T.copy())
            if total == 0:
                break
    total, w, h = best
    return w, h.astype(np.uint8), total
