import numpy as np
import pytest

from lanekoop.edmd import (
    FixedRule,
    FullRule,
    IdentifiedModel,
    SnapshotPair,
    full_system_matrix,
    svd_thin,
    truncated_system_matrix,
)
from lanekoop.evaluation import (
    TimingSample,
    benchmark_solve,
    build_table,
    frobenius_norm,
    one_step_rmse,
    reconstruction_error,
    relative_time,
    solve_flops,
)


def make_pair(d=4, m=60, seed=0):
    rng = np.random.default_rng(seed)
    return SnapshotPair(X=rng.normal(size=(d, m)), X_shift=rng.normal(size=(d, m)))


class TestFrobenius:
    def test_zero(self):
        assert frobenius_norm(np.zeros((3, 5))) == 0.0

    def test_identity(self):
        assert frobenius_norm(np.eye(7)) == pytest.approx(np.sqrt(7))

    def test_3_4_5(self):
        assert frobenius_norm([[3.0, 4.0]]) == pytest.approx(5.0)


class TestReconstructionError:
    def test_identical_is_zero(self):
        A = np.random.default_rng(0).normal(size=(4, 4))
        assert reconstruction_error(A, A) == 0.0

    def test_zero_approximation_is_100(self):
        A = np.random.default_rng(1).normal(size=(4, 4))
        assert reconstruction_error(A, np.zeros_like(A)) == pytest.approx(100.0)

    def test_doubled_is_100(self):
        A = np.random.default_rng(2).normal(size=(4, 4))
        assert reconstruction_error(A, 2 * A) == pytest.approx(100.0)

    def test_zero_reference_error(self):
        with pytest.raises(ValueError):
            reconstruction_error(np.zeros((2, 2)), np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            reconstruction_error(np.eye(2), np.eye(3))


class TestFlops:
    def test_strictly_increasing_in_rank(self):
        d, m = 4, 5000
        counts = [solve_flops(d, m, r) for r in range(1, 5)]
        assert np.all(np.diff(counts) > 0)

    def test_truncated_below_full(self):
        d, m = 4, 5000
        for r in range(1, 4):
            assert solve_flops(d, m, r) < solve_flops(d, m, 4)


class TestBenchmark:
    def test_repeat_count(self):
        pair = make_pair()
        f = svd_thin(pair.X)
        sample = benchmark_solve(pair, f, repeats=5, warmups=1)
        assert len(sample.durations_ns) == 5
        assert all(t > 0 for t in sample.durations_ns)

    def test_result_deterministic_across_repeats(self):
        pair = make_pair(seed=3)
        f = svd_thin(pair.X)
        A1 = full_system_matrix(pair, factors=f).A
        A2 = full_system_matrix(pair, factors=f).A
        assert np.array_equal(A1, A2)

    def test_routes_labeled(self):
        pair = make_pair(seed=4)
        f = svd_thin(pair.X)
        assert benchmark_solve(pair, f, repeats=2).route == "full"
        assert benchmark_solve(pair, f, rank=1, repeats=2).route == "truncated"

    def test_svd_scope_supported(self):
        pair = make_pair(seed=5)
        f = svd_thin(pair.X)
        s = benchmark_solve(pair, f, repeats=2, warmups=0, scope="svd+solve")
        assert len(s.durations_ns) == 2

    def test_bad_scope(self):
        pair = make_pair(seed=6)
        with pytest.raises(ValueError):
            benchmark_solve(pair, svd_thin(pair.X), scope="everything")


class TestRelativeTime:
    def _sample(self, durations):
        return TimingSample("x", list(durations), len(durations), 0)

    def test_identical_lists(self):
        s = self._sample([5, 7, 9])
        assert relative_time(s, s) == 100.0

    def test_min_over_min(self):
        assert relative_time(self._sample([9, 50]), self._sample([10, 11])) == 90.0

    def test_unclamped_above_100(self):
        assert relative_time(self._sample([30]), self._sample([10])) == 300.0


class TestBuildTable:
    def _setup(self):
        pair = make_pair(seed=7)
        f = svd_thin(pair.X)
        full = full_system_matrix(pair, factors=f)
        t_full = benchmark_solve(pair, f, repeats=3, warmups=0)
        entries = []
        for r, label in [(1, "energy90"), (3, "energy99"), (4, "ht")]:
            m = truncated_system_matrix(pair, f, r)
            t = benchmark_solve(pair, f, rank=r, repeats=3, warmups=0)
            entries.append(("monomial", label, m, t))
        return pair, entries, {"monomial": (full, t_full)}

    def test_full_rank_row_zero_error(self):
        pair, entries, refs = self._setup()
        rows = build_table(entries, refs, {"monomial": (pair.d, pair.m)})
        ht = [r for r in rows if r.rule_label == "ht"][0]
        assert ht.re_percent <= 1e-10
        assert ht.flops_trunc == ht.flops_full

    def test_row_ordering(self):
        pair, entries, refs = self._setup()
        rows = build_table(entries[::-1], refs, {"monomial": (pair.d, pair.m)})
        assert [r.rule_label for r in rows] == ["energy90", "energy99", "ht"]

    def test_missing_reference(self):
        pair, entries, refs = self._setup()
        bad = [("radial", "ht", entries[0][2], entries[0][3])]
        with pytest.raises(ValueError, match="reference"):
            build_table(bad, refs, {"radial": (4, 10)})

    def test_empty(self):
        assert build_table([], {}, {}) == []


class TestOneStepRmse:
    def test_planted_system_near_zero(self):
        rng = np.random.default_rng(8)
        L = rng.normal(size=(4, 4))
        X = rng.normal(size=(4, 50))
        pair = SnapshotPair(X=X, X_shift=L @ X)
        model = full_system_matrix(pair)
        assert one_step_rmse(model, pair) <= 1e-8

    def test_zero_model_equals_successor_rms(self):
        pair = make_pair(seed=9)
        model = IdentifiedModel(A=np.zeros((4, 4)), rank_used=4, rule=FullRule())
        expected = np.sqrt(np.mean(np.sum(pair.X_shift[:2, :] ** 2, axis=0)))
        assert one_step_rmse(model, pair) == pytest.approx(expected)

    def test_lifted_residual_ordering(self):
        # least-squares optimality holds in lifted space for any rank
        pair = make_pair(seed=10)
        f = svd_thin(pair.X)
        A = full_system_matrix(pair, factors=f).A
        res_full = np.linalg.norm(pair.X_shift - A @ pair.X)
        for r in range(1, f.r_max + 1):
            At = truncated_system_matrix(pair, f, r).A
            assert np.linalg.norm(pair.X_shift - At @ pair.X) >= res_full - 1e-8
