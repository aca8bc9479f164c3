import numpy as np

from banmf.baselines import nmf_factorize_boolean, nmf_solve
from banmf.oracle import exhaustive_bmf
from banmf.solver import SolverConfig
from banmf.synth import SynthSpec, generate_planted


def test_nmf_keeps_y_equal_to_x():
    x = generate_planted(SynthSpec(9, 7, 2, 0.5, 0.0, 2)).x
    st = nmf_solve(x, SolverConfig(rank=2, max_iters=50))
    np.testing.assert_array_equal(st.y, x)


def test_nmf_monotone():
    x = generate_planted(SynthSpec(15, 12, 3, 0.5, 0.05, 4)).x
    trace = nmf_solve(x, SolverConfig(rank=3, max_iters=400, seed=1)).objective_trace
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


def test_nmf_exact_rank_one():
    st = nmf_solve(np.ones((5, 4), np.uint8), SolverConfig(rank=1, seed=3))
    assert st.objective_trace[-1] < 1e-6


def test_nmf_deterministic():
    x = generate_planted(SynthSpec(10, 10, 3, 0.5, 0.0, 8)).x
    cfg = SolverConfig(rank=3, max_iters=100, lam=0.1, seed=5)
    a, b = nmf_solve(x, cfg), nmf_solve(x, cfg)
    np.testing.assert_array_equal(a.w, b.w)
    np.testing.assert_array_equal(a.h, b.h)


def test_nmf_boolean_examples():
    assert nmf_factorize_boolean(np.ones((4, 4), np.uint8), SolverConfig(rank=1), 20).hamming == 0
    eye = np.eye(2, dtype=np.uint8)
    _, _, best = exhaustive_bmf(eye, 1)
    assert best == 1
    assert nmf_factorize_boolean(eye, SolverConfig(rank=1), 20).hamming >= best
