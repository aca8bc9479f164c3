"""Seeded synthetic Boolean data with planted low-rank structure."""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .matrix import as_bool, bool_mat_mul

log = logging.getLogger(__name__)

MAX_RETRIES = 100
_MASK64 = 2**64 - 1


class GenerationError(RuntimeError):
    """Retry budget ran out before a usable instance was drawn."""


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit seed from a base seed and any printable parts."""
    key = ":".join(str(p) for p in (base, *parts)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class SynthSpec:
    rows: int
    cols: int
    rank: int
    density: float
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"shape must be positive, got {self.rows}x{self.cols}")
        if not 1 <= self.rank <= min(self.rows, self.cols):
            raise ValueError(f"rank {self.rank} must be in [1, min(rows, cols)]")
        if not 0 < self.density < 1:
            raise ValueError(f"density must be in (0, 1), got {self.density}")
        if not 0 <= self.noise < 1:
            raise ValueError(f"noise must be in [0, 1), got {self.noise}")


@dataclass
class PlantedInstance:
    spec: SynthSpec
    x: np.ndarray
    w_true: np.ndarray
    h_true: np.ndarray
    x_clean: np.ndarray
    real_rank: Optional[int] = None
    rank_lower_bound_gap: Optional[int] = None

    def meta(self) -> dict:
        return {
            **asdict(self.spec),
            "real_rank": self.real_rank,
            "rank_lower_bound_gap": self.rank_lower_bound_gap,
            "density_clean": float(self.x_clean.mean()),
            "density_observed": float(self.x.mean()),
        }


def factor_density(d: float, k: int) -> float:
    """Bernoulli parameter for W and H so that W ⊗ H has expected density ``d``.

    Each entry of the product is 1 unless all ``k`` terms miss, so
    ``d = 1 - (1 - p**2)**k``; this inverts that relation.
    """
    if not 0 < d < 1:
        raise ValueError(f"density must be in (0, 1), got {d}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return math.sqrt(1.0 - (1.0 - d) ** (1.0 / k))


def planted_density(p: float, k: int) -> float:
    return 1.0 - (1.0 - p * p) ** k


def apply_flip_noise(x, p_e: float, seed: int) -> np.ndarray:
    """Negate each entry independently with probability ``p_e``.

    The mask comes from uniforms compared against ``p_e``, so for one seed the
    flips at a lower rate are a subset of the flips at a higher rate.
    """
    if not 0 <= p_e < 1:
        raise ValueError(f"noise must be in [0, 1), got {p_e}")
    x = as_bool(x)
    if p_e == 0:
        return x.copy()
    flips = np.random.default_rng(seed).random(x.shape) < p_e
    return np.where(flips, 1 - x, x).astype(np.uint8)


def _has_empty_line(x: np.ndarray) -> bool:
    return bool((~x.any(axis=1)).any() or (~x.any(axis=0)).any())


def generate_planted(
    spec: SynthSpec, max_retries: int = MAX_RETRIES, reject_empty: bool = False
) -> PlantedInstance:
    """Draw ``W, H ~ Bernoulli(p)`` and form ``X = W ⊗ H`` (+ flip noise).

    W, H and the noise mask use the streams ``seed``, ``seed + 1`` and
    ``seed + 2``.  An all-zero clean product is always redrawn from the next
    attempt's streams; with ``reject_empty`` so is any draw whose clean product
    has an all-zero row or column.  The latter conditions the density upwards,
    which is why it is off by default.
    """
    p = factor_density(spec.density, spec.rank)
    n, m, k = spec.rows, spec.cols, spec.rank
    for attempt in range(max_retries):
        rng_w = np.random.default_rng([spec.seed & _MASK64, attempt])
        rng_h = np.random.default_rng([(spec.seed + 1) & _MASK64, attempt])
        w = (rng_w.random((n, k)) < p).astype(np.uint8)
        h = (rng_h.random((k, m)) < p).astype(np.uint8)
        x_clean = bool_mat_mul(w, h)
        if not x_clean.any() or (reject_empty and _has_empty_line(x_clean)):
            continue
        x = apply_flip_noise(x_clean, spec.noise, (spec.seed + 2) & _MASK64)
        return PlantedInstance(spec=spec, x=x, w_true=w, h_true=h, x_clean=x_clean)
    what = "empty rows/columns" if reject_empty else "an empty product"
    raise GenerationError(f"every draw had {what} after {max_retries} attempts for {spec}")


def exact_rank(x) -> int:
    """Rank over the rationals via fraction-free (Bareiss) elimination."""
    a = [[int(v) for v in row] for row in np.asarray(x)]
    if not a or not a[0]:
        raise ValueError("matrix must be nonempty")
    n, m = len(a), len(a[0])
    rank = 0
    prev = 1
    for c in range(m):
        if rank == n:
            break
        piv = next((r for r in range(rank, n) if a[r][c] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][c]
        for r in range(rank + 1, n):
            f = a[r][c]
            row_r, row_p = a[r], a[rank]
            for j in range(c, m):
                # exact division is guaranteed by Sylvester's identity
                row_r[j] = (p * row_r[j] - f * row_p[j]) // prev
        prev = p
        rank += 1
    return rank


def generate_rank_gap_suite(
    n_range: Iterable[int],
    m_range: Iterable[int],
    k_range: Iterable[int],
    densities: Sequence[float],
    per_cell: int,
    seed: int,
    max_retries: int = MAX_RETRIES,
) -> list[PlantedInstance]:
    """Planted instances whose clean matrix has real rank >= k.

    Since the Boolean rank of a planted matrix is at most ``k`` and the real
    rank never exceeds the nonnegative rank, ``rank(X) - k`` lower-bounds the
    gap between nonnegative and Boolean rank.  It is stored on each instance.
    Cells that exhaust the retry budget are skipped with a warning.
    """
    n_range, m_range, k_range = list(n_range), list(m_range), list(k_range)
    if not (n_range and m_range and k_range and densities) or per_cell < 1:
        raise ValueError("all ranges must be nonempty and per_cell >= 1")
    out = []
    for n in n_range:
        for m in m_range:
            for k in k_range:
                if k > min(n, m):
                    continue
                for d in densities:
                    cell = (n, m, k, d)
                    cell_out = []
                    for idx in range(per_cell):
                        inst = _draw_full_rank(cell, derive_seed(seed, *cell, idx), max_retries)
                        if inst is None:
                            log.warning("skipping cell N=%d M=%d k=%d d=%g: retry budget exhausted", *cell)
                            cell_out = []
                            break
                        cell_out.append(inst)
                    out.extend(cell_out)
    return out


def _draw_full_rank(cell, seed: int, max_retries: int) -> Optional[PlantedInstance]:
    n, m, k, d = cell
    for attempt in range(max_retries):
        spec = SynthSpec(n, m, k, d, 0.0, derive_seed(seed, attempt))
        try:
            inst = generate_planted(spec, max_retries=1)
        except GenerationError:
            continue
        r = exact_rank(inst.x_clean)
        if r >= k:
            return replace(inst, real_rank=r, rank_lower_bound_gap=r - k)
    return None
