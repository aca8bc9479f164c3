"""Multiplicative-update NMF baselines, Booleanized like BANMF.

These run the exact same loop as :func:`banmf.solver.solve` with the ``Y``
projection switched off, so ``Y`` stays equal to ``X`` throughout.
"""
from __future__ import annotations

from .booleanize import DEFAULT_NPOINT, ThresholdChoice, booleanize
from .matrix import as_bool
from .solver import SolverConfig, SolverState, solve


def nmf_solve(x, cfg: SolverConfig, **kwargs) -> SolverState:
    return solve(x, cfg, project=False, **kwargs)


def nmf_factorize_boolean(x, cfg: SolverConfig, npoint: int = DEFAULT_NPOINT) -> ThresholdChoice:
    x = as_bool(x)
    state = nmf_solve(x, cfg)
    return booleanize(x, state.w, state.h, npoint)
