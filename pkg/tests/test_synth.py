from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banmf.matrix import bool_mat_mul
from banmf.synth import (
    GenerationError,
    SynthSpec,
    apply_flip_noise,
    derive_seed,
    exact_rank,
    factor_density,
    generate_planted,
    generate_rank_gap_suite,
    planted_density,
)


def _invert_by_bisection(d, k):
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if 1 - (1 - mid * mid) ** k < d:
            lo = mid
        else:
            hi = mid
    return lo


def _rank_by_rref(x):
    """Rank from reduced row echelon form over Fractions."""
    a = [[Fraction(int(v)) for v in row] for row in x]
    n, m = len(a), len(a[0])
    r = 0
    for c in range(m):
        piv = next((i for i in range(r, n) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        a[r] = [v / a[r][c] for v in a[r]]
        for i in range(n):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        r += 1
    return r


def test_factor_density_examples():
    assert factor_density(0.25, 1) == pytest.approx(0.5, abs=1e-12)
    assert factor_density(0.5, 5) == pytest.approx(_invert_by_bisection(0.5, 5), abs=1e-12)
    assert factor_density(0.5, 5) == pytest.approx(0.359790, abs=1e-6)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            factor_density(bad, 3)


@given(d=st.floats(0.01, 0.99), k=st.integers(1, 12))
def test_factor_density_round_trip(d, k):
    assert planted_density(factor_density(d, k), k) == pytest.approx(d, abs=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(5, 5, 6, 0.5)
    with pytest.raises(ValueError):
        SynthSpec(5, 5, 2, 1.0)
    with pytest.raises(ValueError):
        SynthSpec(5, 5, 2, 0.5, noise=1.0)


def test_planted_structure_and_determinism():
    spec = SynthSpec(20, 15, 4, 0.5, 0.0, 99)
    a, b = generate_planted(spec), generate_planted(spec)
    np.testing.assert_array_equal(a.x, a.x_clean)
    np.testing.assert_array_equal(a.x_clean, bool_mat_mul(a.w_true, a.h_true))
    for name in ("x", "w_true", "h_true"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_noise_changes_only_x():
    clean = generate_planted(SynthSpec(30, 30, 5, 0.5, 0.0, 3))
    noisy = generate_planted(SynthSpec(30, 30, 5, 0.5, 0.05, 3))
    np.testing.assert_array_equal(clean.x_clean, noisy.x_clean)
    assert (noisy.x != noisy.x_clean).any()


def test_noise_levels_nest():
    x = np.zeros((50, 50), np.uint8)
    low = apply_flip_noise(x, 0.01, 5)
    high = apply_flip_noise(x, 0.05, 5)
    assert np.all(high[low == 1] == 1)


def test_planted_density_monte_carlo():
    dens = [generate_planted(SynthSpec(50, 50, 5, 0.5, 0.0, s)).x_clean.mean() for s in range(100)]
    assert abs(np.mean(dens) - 0.5) <= 0.05


def test_reject_empty_option():
    inst = generate_planted(SynthSpec(12, 12, 3, 0.6, 0.0, 1), reject_empty=True)
    assert inst.x_clean.any(axis=0).all() and inst.x_clean.any(axis=1).all()
    with pytest.raises(GenerationError):
        generate_planted(SynthSpec(60, 60, 5, 0.05, 0.0, 1), max_retries=3, reject_empty=True)


def test_flip_noise():
    x = np.random.default_rng(0).integers(0, 2, (20, 20)).astype(np.uint8)
    np.testing.assert_array_equal(apply_flip_noise(x, 0.0, 1), x)
    ones = np.ones((1, 1), np.uint8)
    # a flip at a one gives zero
    flipped = next(apply_flip_noise(ones, 0.9, s) for s in range(100)
                   if apply_flip_noise(ones, 0.9, s)[0, 0] == 0)
    assert flipped[0, 0] == 0


def test_flip_count_binomial():
    x = np.zeros((1000, 1000), np.uint8)
    count = int(apply_flip_noise(x, 0.05, 2024).sum())
    sigma = (1e6 * 0.05 * 0.95) ** 0.5
    assert abs(count - 50000) <= 3 * sigma


def test_exact_rank_examples():
    assert exact_rank(np.eye(3, dtype=int)) == 3
    assert exact_rank(np.ones((4, 4), int)) == 1
    assert exact_rank([[1, 1, 0], [0, 1, 1], [1, 0, 1]]) == 3
    assert exact_rank([[0, 0], [0, 0]]) == 0


@settings(max_examples=200)
@given(st.integers(0, 2**63), st.integers(1, 8), st.integers(1, 8), st.floats(0.1, 0.9))
def test_exact_rank_matches_rref(seed, n, m, p):
    x = (np.random.default_rng(seed).random((n, m)) < p).astype(int)
    assert exact_rank(x) == _rank_by_rref(x)


def test_exact_rank_random_8x8_against_rref():
    rng = np.random.default_rng(8)
    for _ in range(100):
        x = rng.integers(0, 2, (8, 8))
        assert exact_rank(x) == _rank_by_rref(x)


def test_derive_seed_stable():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert derive_seed(1, "a", 2) != derive_seed(1, "a", 3)
    assert 0 <= derive_seed(7) < 2**64


def test_rank_gap_suite_small():
    suite = generate_rank_gap_suite(range(10, 21), range(10, 21), [2, 3, 4], [0.5], 3, seed=0)
    assert len(suite) == 11 * 11 * 3 * 3
    for inst in suite:
        k = inst.spec.rank
        assert inst.rank_lower_bound_gap == exact_rank(inst.x_clean) - k >= 0
        assert inst.w_true.shape[1] == k
        np.testing.assert_array_equal(inst.x_clean, bool_mat_mul(inst.w_true, inst.h_true))
    assert any(i.rank_lower_bound_gap == 0 for i in suite)


def test_rank_gap_suite_never_emits_identity_for_low_k():
    # an identity has Boolean rank n, so it is never a planted rank-2 matrix
    suite = generate_rank_gap_suite([4], [4], [2], [0.5, 0.75], 5, seed=1)
    for inst in suite:
        assert not np.array_equal(inst.x_clean, np.eye(4, dtype=np.uint8))


def test_rank_gap_suite_deterministic():
    a = generate_rank_gap_suite([10, 11], [12], [2, 3], [0.25], 2, seed=4)
    b = generate_rank_gap_suite([10, 11], [12], [2, 3], [0.25], 2, seed=4)
    assert [i.spec for i in a] == [i.spec for i in b]


def test_rank_gap_suite_skips_impossible_cell(caplog):
    # 1x1 with k=1: rank is 1 whenever the product is nonzero, so nothing is skipped;
    # a 2x2 rank-2 cell at tiny density rarely reaches rank 2 within 2 retries
    suite = generate_rank_gap_suite([2], [2], [2], [0.01], 1, seed=0, max_retries=2)
    assert suite == [] and "skipping cell" in caplog.text
