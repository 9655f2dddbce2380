import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_scan_rot_1d, random_weighted
from rwot import (
    DimensionError,
    DiscreteDistribution,
    ShiftSearchConfig,
    SinkhornConfig,
    build_cost_matrix,
    exact_solve,
    optimal_shift,
    rw2_exact,
    rw2_sinkhorn,
    rw_p_distance,
    weighted_mean,
)
from rwot.relative import shift_radius

SRC = DiscreteDistribution([0.0, 1.0])
DST = DiscreteDistribution([0.0, 2.0])
DIRAC_A = DiscreteDistribution([[0.0, 0.0]])
DIRAC_B = DiscreteDistribution([[3.0, 4.0]])


def _moved(d, t):
    return DiscreteDistribution(d.points + np.asarray(t, float), d.masses)


class TestMeans:
    def test_weighted_mean(self):
        assert weighted_mean(DiscreteDistribution([0.0, 2.0])) == pytest.approx([1.0])
        np.testing.assert_allclose(weighted_mean(DiscreteDistribution([[7.0, -1.0]])), [7, -1])
        d = DiscreteDistribution([[0, 0], [1, 0], [1, 1]], [0.25, 0.25, 0.5])
        np.testing.assert_allclose(weighted_mean(d), [0.75, 0.5], atol=1e-15)

    def test_optimal_shift(self):
        sr = optimal_shift(SRC, DST)
        assert sr.shift == pytest.approx([0.5])
        np.testing.assert_allclose(sr.shift, sr.dst_mean - sr.src_mean, atol=1e-12)
        np.testing.assert_array_equal(optimal_shift(SRC, SRC).shift, [0.0])
        np.testing.assert_allclose(optimal_shift(DIRAC_A, DIRAC_B).shift, [3, 4])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            optimal_shift(SRC, DIRAC_A)


class TestRW2:
    def test_line_pair_sinkhorn(self):
        rep = rw2_sinkhorn(SRC, DST, SinkhornConfig(0.01, 1e-10))
        assert rep.rw_distance == pytest.approx(0.5, abs=1e-3)
        assert rep.w_distance == pytest.approx(np.sqrt(0.5), abs=1e-3)
        assert rep.mean_gap == pytest.approx(0.5, abs=1e-12)

    def test_line_pair_exact(self):
        rep = rw2_exact(SRC, DST)
        assert abs(rep.rw_distance - 0.5) <= 1e-10
        assert abs(rep.w_distance - np.sqrt(0.5)) <= 1e-10

    def test_dirac_pair(self):
        rep = rw2_exact(DIRAC_A, DIRAC_B)
        assert rep.rw_distance == pytest.approx(0, abs=1e-12)
        assert rep.w_distance == pytest.approx(5, abs=1e-12)

    @pytest.mark.parametrize("t", [[0.0, 0.0], [3.0, -2.0], [40.0, 25.0]])
    def test_translated_copy(self, t):
        # distinct integer points: the entropic blur exp(-1 / lam) is negligible
        grid = np.array([(i, j) for i in range(4) for j in range(4)], float)
        d = DiscreteDistribution(np.random.default_rng(1).permutation(grid)[:8])
        cfg = SinkhornConfig(0.01, 1e-12)
        rep = rw2_sinkhorn(d, _moved(d, t), cfg)
        assert rep.rw_distance < 1e-6
        assert abs(rep.w_distance - np.linalg.norm(t)) < 1e-6
        assert abs(rep.rw_distance - rw2_sinkhorn(d, d, cfg).rw_distance) < 1e-9

    def test_identical_exact(self):
        d = DiscreteDistribution(np.random.default_rng(2).normal(size=(6, 2)))
        rep = rw2_exact(d, d)
        assert rep.rw_distance < 1e-7 and rep.w_distance < 1e-7 and rep.mean_gap == 0

    def test_equal_means(self):
        a = DiscreteDistribution([[-1.0, 0.0], [1.0, 0.0]])
        b = DiscreteDistribution([[0.0, -2.0], [0.0, 2.0]])
        rep = rw2_exact(a, b)
        assert rep.mean_gap == 0
        assert rep.rw_distance == pytest.approx(rep.w_distance, abs=1e-12)

    def test_pythagorean_by_construction(self):
        rng = np.random.default_rng(4)
        a, b = DiscreteDistribution(*random_weighted(rng)), DiscreteDistribution(*random_weighted(rng))
        rep = rw2_exact(a, b)
        assert rep.w_distance**2 == pytest.approx(rep.mean_gap**2 + rep.rw_distance**2, rel=1e-9)

    def test_pythagorean_against_independent_w2(self):
        rng = np.random.default_rng(50)
        for _ in range(50):
            a, b = DiscreteDistribution(*random_weighted(rng)), DiscreteDistribution(*random_weighted(rng))
            w2_sq = exact_solve(build_cost_matrix(a, b), a.masses, b.masses).transport_cost
            rep = rw2_exact(a, b)
            gap_sq = float(np.sum((weighted_mean(a) - weighted_mean(b)) ** 2))
            assert abs(w2_sq - gap_sq - rep.rw_distance**2) <= 1e-9 * max(1.0, w2_sq)

    def test_coupling_translation_invariance(self):
        rng = np.random.default_rng(8)
        checked = 0
        for _ in range(20):
            a = DiscreteDistribution(rng.normal(size=(4, 2)))
            b = DiscreteDistribution(rng.normal(size=(4, 2)))
            t = rng.normal(scale=5, size=2)
            base = exact_solve(build_cost_matrix(a, b), a.masses, b.masses)
            moved = exact_solve(build_cost_matrix(_moved(a, t), b), a.masses, b.masses)
            # E* + V(t) identity: cost shifts by ||t||^2 + 2 t.(mean_a - mean_b)
            v = t @ t + 2 * t @ (weighted_mean(a) - weighted_mean(b))
            assert moved.transport_cost == pytest.approx(base.transport_cost + v, abs=1e-9)
            if _unique_vertex(a, b):
                np.testing.assert_allclose(moved.plan, base.plan, atol=1e-9)
                checked += 1
        assert checked > 10

    def test_decomposition(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            a, b = DiscreteDistribution(*random_weighted(rng)), DiscreteDistribution(*random_weighted(rng))
            mu, nu = weighted_mean(a), weighted_mean(b)
            s = nu - mu
            v_star = s @ s + 2 * s @ (mu - nu)
            assert v_star == pytest.approx(-np.sum((mu - nu) ** 2), abs=1e-12)
            e_star = exact_solve(build_cost_matrix(a, b), a.masses, b.masses).transport_cost
            h_star = exact_solve(build_cost_matrix(a, b, 2, s), a.masses, b.masses).transport_cost
            assert abs(e_star - (h_star - v_star)) <= 1e-9

    def test_rw_translation_invariance(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            a, b = DiscreteDistribution(*random_weighted(rng)), DiscreteDistribution(*random_weighted(rng))
            t = rng.normal(scale=10, size=2)
            assert abs(rw2_exact(_moved(a, t), b).rw_distance - rw2_exact(a, b).rw_distance) <= 1e-9


def _unique_vertex(a, b):
    """Uniform 4x4: optimal permutation strictly better than the runner-up."""
    import itertools

    C = build_cost_matrix(a, b).entries
    vals = sorted(C[np.arange(4), list(p)].sum() for p in itertools.permutations(range(4)))
    return vals[1] - vals[0] > 1e-6


class TestRWp:
    def test_p2_delegates(self):
        rng = np.random.default_rng(3)
        a, b = DiscreteDistribution(*random_weighted(rng)), DiscreteDistribution(*random_weighted(rng))
        assert rw_p_distance(a, b, 2, "exact").rw_distance == rw2_exact(a, b).rw_distance
        cfg = SinkhornConfig(0.1, 1e-6)
        assert rw_p_distance(a, b, 2, cfg).rw_distance == rw2_sinkhorn(a, b, cfg).rw_distance

    def test_line_pair_p1_matches_grid_scan(self):
        src, dst = DiscreteDistribution([0.0, 1.0]), DiscreteDistribution([0.0, 3.0])
        # frozen from grid_scan_rot_1d([0, 1], [0, 3], 1): flat minimum on s in [0, 2]
        expected = 1.0
        rep = rw_p_distance(src, dst, 1, "exact")
        assert rep.rw_distance == pytest.approx(expected, abs=1e-6)
        assert 0 - 1e-6 <= rep.shift[0] <= 2 + 1e-6
        assert rep.w_distance is None

    @pytest.mark.slow
    def test_grid_scan_oracle_value(self):
        assert grid_scan_rot_1d([0, 1], [0, 3], 1) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
    def test_translated_copy(self, p):
        d = DiscreteDistribution(np.random.default_rng(5).normal(size=(5, 2)))
        t = np.array([2.0, -1.5])
        rep = rw_p_distance(d, _moved(d, t), p, "exact")
        assert rep.rw_distance ** p <= 1e-6
        np.testing.assert_allclose(rep.shift, t, atol=1e-6)

    @pytest.mark.parametrize("p", [1.0, 3.0])
    def test_not_worse_than_zero_or_mean_shift(self, p):
        rng = np.random.default_rng(int(p * 10))
        a = DiscreteDistribution(rng.normal(size=(4, 2)))
        b = DiscreteDistribution(rng.normal(size=(5, 2)) ** 2)
        rep = rw_p_distance(a, b, p, "exact", ShiftSearchConfig(starts=4, seed=1))
        for s in (np.zeros(2), optimal_shift(a, b).shift):
            val = exact_solve(build_cost_matrix(a, b, p, s), a.masses, b.masses).transport_cost
            assert rep.rw_distance ** p <= val + 1e-9
        assert np.sum(np.abs(rep.shift) ** p) ** (1 / p) <= shift_radius(a, b, p) + 1e-9

    def test_general_p_translation_invariance(self):
        rng = np.random.default_rng(31)
        a = DiscreteDistribution(rng.normal(size=(4, 1)))
        b = DiscreteDistribution(rng.normal(size=(4, 1)))
        r1 = rw_p_distance(a, b, 1.5, "exact").rw_distance
        r2 = rw_p_distance(_moved(a, [7.0]), b, 1.5, "exact").rw_distance
        assert abs(r1 - r2) <= 1e-3

    def test_budget_flag(self):
        rng = np.random.default_rng(6)
        a = DiscreteDistribution(rng.normal(size=(4, 2)))
        b = DiscreteDistribution(rng.normal(size=(4, 2)) * 2)
        rep = rw_p_distance(a, b, 1.0, "exact", ShiftSearchConfig(starts=2, budget=3))
        assert rep.budget_exhausted

    def test_sinkhorn_inner(self):
        src, dst = DiscreteDistribution([0.0, 1.0]), DiscreteDistribution([0.0, 3.0])
        cfg = SinkhornConfig(0.05, 1e-6, max_iterations=2000)
        rep = rw_p_distance(src, dst, 1, cfg, ShiftSearchConfig(starts=3))
        assert rep.rw_distance == pytest.approx(1.0, abs=0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50), st.floats(-50, 50))
def test_rw2_invariant_to_source_translation(seed, tx, ty):
    rng = np.random.default_rng(seed)
    a, b = DiscreteDistribution(*random_weighted(rng)), DiscreteDistribution(*random_weighted(rng))
    base = rw2_exact(a, b)
    moved = rw2_exact(_moved(a, [tx, ty]), b)
    assert abs(moved.rw_distance - base.rw_distance) <= 1e-7
    assert moved.w_distance**2 == pytest.approx(moved.mean_gap**2 + moved.rw_distance**2, rel=1e-9)
