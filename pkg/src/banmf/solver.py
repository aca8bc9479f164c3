"""Boolean-auxiliary NMF solver (plain and regularized).

The solver factorizes an auxiliary nonnegative matrix ``Y`` instead of the
Boolean input ``X``.  ``Y`` shares the support of ``X`` and its nonzero entries
are confined to ``[1, k]``.  Each iteration applies multiplicative updates to
``W`` then ``H`` and finally projects ``Y`` back onto that feasible set.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .matrix import ShapeError, as_bool, as_dense

EARLY_STOP_WINDOW = 10


class TrivialInputError(ValueError):
    """Raised for inputs without any nonzero entry."""


@dataclass(frozen=True)
class SolverConfig:
    rank: int
    max_iters: int = 1000
    lam: float = 0.0
    epsilon: float = 1e-12
    seed: int = 0
    early_stop_tol: Optional[float] = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.early_stop_tol is not None and self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass
class SolverState:
    y: np.ndarray
    w: np.ndarray
    h: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    iterations_run: int = 0
    loop_seconds: float = 0.0

    @property
    def objective(self) -> float:
        """Current ``||Y - WH||_F``."""
        return float(np.linalg.norm(self.y - self.w @ self.h))


def init_state(x, cfg: SolverConfig) -> SolverState:
    """Random factors in (0, 1] and ``Y = X``.

    Zero is excluded from the draws: a multiplicative update can never move
    an entry away from zero.
    """
    x = as_bool(x)
    if not x.any():
        raise TrivialInputError("trivial input: X has empty support")
    n, m = x.shape
    rng = np.random.default_rng(cfg.seed)
    w = 1.0 - rng.random((n, cfg.rank))
    h = 1.0 - rng.random((cfg.rank, m))
    return SolverState(y=x.astype(np.float64), w=w, h=h)


def _mu_w(y, w, h, lam, eps):
    num = y @ h.T
    den = w @ (h @ h.T)
    if lam > 0:
        w2 = w * w
        num = num + 3.0 * lam * w2
        den = den + 2.0 * lam * w2 * w + lam * w2
    return w * num / (den + eps)


def _mu_h(y, w, h, lam, eps):
    num = w.T @ y
    den = (w.T @ w) @ h
    if lam > 0:
        h2 = h * h
        num = num + 3.0 * lam * h2
        den = den + 2.0 * lam * h2 * h + lam * h2
    return h * num / (den + eps)


def _project(wh, support, k):
    return np.where(support, np.clip(wh, 1.0, float(k)), 0.0)


def _check_state(state: SolverState) -> None:
    n, m = state.y.shape
    if state.w.shape[0] != n or state.h.shape[1] != m or state.w.shape[1] != state.h.shape[0]:
        raise ShapeError(
            f"inconsistent state: Y {state.y.shape}, W {state.w.shape}, H {state.h.shape}"
        )


def update_w(state: SolverState, cfg: SolverConfig) -> SolverState:
    _check_state(state)
    return replace(state, w=_mu_w(state.y, state.w, state.h, cfg.lam, cfg.epsilon))


def update_h(state: SolverState, cfg: SolverConfig) -> SolverState:
    _check_state(state)
    return replace(state, h=_mu_h(state.y, state.w, state.h, cfg.lam, cfg.epsilon))


def project_y(state: SolverState, x, k: int) -> SolverState:
    """Clamp ``WH`` into ``[1, k]`` on the support of ``x``; zero elsewhere."""
    _check_state(state)
    x = as_bool(x)
    if x.shape != state.y.shape:
        raise ShapeError(f"X is {x.shape}, Y is {state.y.shape}")
    return replace(state, y=_project(state.w @ state.h, x.astype(bool), k))


def is_feasible(y, x, k: int) -> bool:
    """Check the auxiliary-matrix constraints exactly (no tolerance)."""
    y, x = as_dense(y), as_bool(x).astype(bool)
    if y.shape != x.shape:
        return False
    on = y[x]
    return bool(np.all(y[~x] == 0) and np.all(on >= 1) and np.all(on <= k))


Callback = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


def solve(
    x,
    cfg: SolverConfig,
    *,
    project: bool = True,
    init: Optional[SolverState] = None,
    callback: Optional[Callback] = None,
) -> SolverState:
    """Run the alternating updates for ``cfg.max_iters`` iterations.

    Parameters
    ----------
    x : array_like
        Boolean input matrix with at least one nonzero entry.
    cfg : SolverConfig
        ``cfg.lam > 0`` switches to the regularized update rules.
    project : bool
        When False, ``Y`` stays frozen at ``X`` and the loop is ordinary
        multiplicative-update NMF (used by the baselines).
    init : SolverState, optional
        Starting point; defaults to :func:`init_state`.
    callback : callable, optional
        Called as ``callback(iteration, y, w, h)`` after every iteration.
        Time spent inside it is excluded from ``loop_seconds``.

    Returns
    -------
    SolverState
        Final factors with one objective value per completed iteration.
    """
    x = as_bool(x)
    state = init_state(x, cfg) if init is None else init
    _check_state(state)
    if state.y.shape != x.shape:
        raise ShapeError(f"X is {x.shape}, Y is {state.y.shape}")
    y, w, h = state.y.copy(), state.w.copy(), state.h.copy()
    support = x.astype(bool)
    k, lam, eps = cfg.rank, cfg.lam, cfg.epsilon
    early = cfg.early_stop_tol is not None and lam == 0

    trace = list(state.objective_trace)
    quiet = 0
    outside = 0.0
    it = 0
    start = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        w = _mu_w(y, w, h, lam, eps)
        h = _mu_h(y, w, h, lam, eps)
        wh = w @ h
        if project:
            y = _project(wh, support, k)
        obj = float(np.linalg.norm(y - wh))
        if early and trace:
            prev = trace[-1]
            rel = abs(prev - obj) / prev if prev > 0 else 0.0
            quiet = quiet + 1 if rel < cfg.early_stop_tol else 0
        trace.append(obj)
        if callback is not None:
            t0 = time.perf_counter()
            callback(it, y, w, h)
            outside += time.perf_counter() - t0
        if early and quiet >= EARLY_STOP_WINDOW:
            break
    elapsed = time.perf_counter() - start - outside
    return SolverState(
        y=y, w=w, h=h,
        objective_trace=trace,
        iterations_run=state.iterations_run + it,
        loop_seconds=state.loop_seconds + elapsed,
    )
