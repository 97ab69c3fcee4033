import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linresp.statistics import (CovAccumulator, MeanVarAccumulator,
                                StreamSpec, UndefinedVarianceError,
                                covariance_with_stderr, derive_stream)

floats = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestMeanVarAccumulator:
    def test_constant_samples(self):
        acc = MeanVarAccumulator()
        for _ in range(3):
            acc.update(1.0)
        mean, var, se = acc.finalize()
        assert mean == 1.0 and var == 0.0 and se == 0.0

    def test_two_samples(self):
        acc = MeanVarAccumulator().update(0.0).update(2.0)
        mean, var, se = acc.finalize()
        assert mean == pytest.approx(1.0)
        assert var == pytest.approx(2.0)
        assert se == pytest.approx(1.0)

    def test_too_few_samples(self):
        with pytest.raises(UndefinedVarianceError):
            MeanVarAccumulator().update(1.0).finalize()

    def test_update_many_matches_two_pass(self):
        rng = np.random.default_rng(0)
        xs = rng.normal(3.0, 2.0, 1000)
        acc = MeanVarAccumulator().update_many(xs[:400]).update_many(xs[400:])
        mean, var, _ = acc.finalize()
        assert mean == pytest.approx(xs.mean(), rel=1e-12)
        assert var == pytest.approx(xs.var(ddof=1), rel=1e-12)

    def test_merge_matches_two_pass(self):
        rng = np.random.default_rng(1)
        xs = rng.normal(size=500)
        a = MeanVarAccumulator().update_many(xs[:100])
        b = MeanVarAccumulator().update_many(xs[100:])
        mean, var, _ = a.merge(b).finalize()
        assert mean == pytest.approx(xs.mean(), rel=1e-12)
        assert var == pytest.approx(xs.var(ddof=1), rel=1e-12)

    def test_merge_with_empty(self):
        a = MeanVarAccumulator().update_many([1.0, 2.0, 3.0])
        before = a.finalize()
        assert a.merge(MeanVarAccumulator()).finalize() == before
        b = MeanVarAccumulator().merge(a)
        assert b.finalize() == before

    @settings(max_examples=60)
    @given(st.lists(floats, min_size=2, max_size=30),
           st.lists(floats, min_size=0, max_size=30),
           st.lists(floats, min_size=0, max_size=30))
    def test_merge_associative_and_order_free(self, xs, ys, zs):
        def acc(parts):
            total = MeanVarAccumulator()
            for part in parts:
                total.merge(MeanVarAccumulator().update_many(part))
            return total

        left = acc([xs, ys, zs])
        ab = MeanVarAccumulator().update_many(xs).merge(
            MeanVarAccumulator().update_many(ys))
        right = MeanVarAccumulator().merge(ab).merge(
            MeanVarAccumulator().update_many(zs))
        m1, v1, _ = left.finalize()
        m2, v2, _ = right.finalize()
        scale = max(1.0, abs(m1))
        assert m1 == pytest.approx(m2, rel=1e-10, abs=1e-10 * scale)
        assert v1 == pytest.approx(v2, rel=1e-10, abs=1e-10 * max(1.0, v1))


class TestCovAccumulator:
    def test_perfectly_correlated_pair(self):
        acc = CovAccumulator().update(0.0, 0.0).update(1.0, 1.0)
        assert acc.finalize() == pytest.approx(0.5)

    def test_anticorrelated_pair(self):
        acc = CovAccumulator().update(0.0, 1.0).update(1.0, 0.0)
        assert acc.finalize() == pytest.approx(-0.5)

    def test_cov_xx_equals_var(self):
        rng = np.random.default_rng(2)
        xs = rng.normal(size=200)
        acc = CovAccumulator()
        for x in xs:
            acc.update(x, x)
        assert acc.finalize() == pytest.approx(xs.var(ddof=1), rel=1e-12)

    def test_matches_numpy_cov(self):
        rng = np.random.default_rng(3)
        xs = rng.normal(size=300)
        ys = 0.4 * xs + rng.normal(size=300)
        acc = CovAccumulator()
        for x, y in zip(xs, ys):
            acc.update(x, y)
        assert acc.finalize() == pytest.approx(np.cov(xs, ys)[0, 1],
                                               rel=1e-10)

    def test_merge_matches_single_stream(self):
        rng = np.random.default_rng(4)
        xs = rng.normal(size=400)
        ys = rng.normal(size=400)
        whole = CovAccumulator()
        a = CovAccumulator()
        b = CovAccumulator()
        for i, (x, y) in enumerate(zip(xs, ys)):
            whole.update(x, y)
            (a if i < 150 else b).update(x, y)
        assert a.merge(b).finalize() == pytest.approx(whole.finalize(),
                                                      rel=1e-12)

    def test_too_few_samples(self):
        with pytest.raises(UndefinedVarianceError):
            CovAccumulator().update(1.0, 2.0).finalize()


class TestCovarianceWithStderr:
    def test_matches_numpy(self):
        rng = np.random.default_rng(5)
        xs = rng.normal(size=1000)
        ys = -0.7 * xs + rng.normal(size=1000)
        cov, se = covariance_with_stderr(xs, ys)
        assert cov == pytest.approx(np.cov(xs, ys)[0, 1], rel=1e-12)
        prod = (xs - xs.mean()) * (ys - ys.mean())
        assert se == pytest.approx(prod.std(ddof=1) / math.sqrt(1000),
                                   rel=1e-12)

    def test_independent_samples_cov_within_error(self):
        rng = np.random.default_rng(6)
        cov, se = covariance_with_stderr(rng.normal(size=50_000),
                                         rng.normal(size=50_000))
        assert abs(cov) < 4 * se

    def test_too_few(self):
        with pytest.raises(UndefinedVarianceError):
            covariance_with_stderr([1.0], [2.0])


class TestDeriveStream:
    def test_deterministic(self):
        a = derive_stream(StreamSpec(42, 7)).standard_normal(1000)
        b = derive_stream(StreamSpec(42, 7)).standard_normal(1000)
        assert np.array_equal(a, b)

    def test_distinct_indices_decorrelated(self):
        n = 100_000
        a = derive_stream(StreamSpec(42, 0)).standard_normal(n)
        b = derive_stream(StreamSpec(42, 1)).standard_normal(n)
        assert not np.array_equal(a[:100], b[:100])
        rho = np.corrcoef(a, b)[0, 1]
        assert abs(rho) < 0.1

    def test_gaussian_moments(self):
        n = 1_000_000
        xs = derive_stream(StreamSpec(0, 0)).standard_normal(n)
        assert abs(xs.mean()) < 4e-3
        assert 0.994 < xs.var() < 1.006
