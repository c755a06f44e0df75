import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from striptrial.gwr import GwrFit
from striptrial.metrics import (
    MetricsError,
    ScenarioResult,
    bandwidth_histogram,
    boxplot_stats,
    coefficient_mse,
    median_table,
)
from striptrial.simulate import CoefficientField


def _fit(beta_hat):
    return GwrFit(
        beta_hat=np.asarray(beta_hat, float),
        fitted=np.zeros(len(beta_hat)),
        trace_s=1.0,
        tau2=1.0,
        aicc=0.0,
        bandwidth=5.0,
        bandwidth_policy="fixed5",
    )


def _result(mse, policy="fixed5", cov="ns", design="systematic", response="linear",
            replicate=0, selected=None):
    return ScenarioResult(
        design=design,
        response=response,
        covariance=cov,
        eta=1.0,
        bandwidth_policy=policy,
        replicate=replicate,
        seed=1,
        mse=tuple(mse),
        selected_bandwidth=selected,
    )


class TestCoefficientMse:
    def test_perfect_recovery(self):
        beta = np.random.default_rng(0).normal(size=(6, 2))
        mse = coefficient_mse(CoefficientField(beta=beta), _fit(beta))
        assert np.array_equal(mse, [0.0, 0.0])

    def test_constant_offset(self):
        beta = np.zeros((8, 2))
        shifted = beta.copy()
        shifted[:, 0] += 5.0
        mse = coefficient_mse(CoefficientField(beta=beta), _fit(shifted))
        assert np.allclose(mse, [25.0, 0.0])

    def test_hand_computed_toy(self):
        beta = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, -1.0], [4.0, 2.0]])
        est = np.array([[1.5, 0.0], [2.0, 2.0], [2.0, -1.0], [4.0, 0.0]])
        mse = coefficient_mse(CoefficientField(beta=beta), _fit(est))
        assert np.allclose(mse, [(0.25 + 0 + 1 + 0) / 4, (0 + 1 + 0 + 4) / 4])

    def test_shape_mismatch(self):
        with pytest.raises(MetricsError):
            coefficient_mse(CoefficientField(beta=np.zeros((4, 2))), _fit(np.zeros((4, 3))))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        beta = rng.normal(size=(10, 3))
        est = rng.normal(size=(10, 3))
        perm = rng.permutation(10)
        a = coefficient_mse(CoefficientField(beta=beta), _fit(est))
        b = coefficient_mse(CoefficientField(beta=beta[perm]), _fit(est[perm]))
        assert np.allclose(a, b)


class TestMedianTable:
    def test_singleton(self):
        rows = median_table([_result([2.0, 0.003])], "linear")
        assert len(rows) == 2
        assert rows[0]["bw5"] == 2.0
        assert rows[1]["bw5"] == 3.0  # beta1 scaled by 1e3

    def test_even_count_midpoint(self):
        results = [_result([v, 0.001], replicate=i) for i, v in enumerate([1, 2, 3, 4])]
        rows = median_table(results, "linear")
        assert rows[0]["bw5"] == 2.5

    def test_quadratic_scaling(self):
        rows = median_table(
            [_result([1.0, 2e-4, 3e-8], response="quadratic")], "quadratic"
        )
        by_coef = {r["coefficient"]: r["bw5"] for r in rows}
        assert by_coef["beta0"] == 1.0
        assert abs(by_coef["beta1"] - 2.0) < 1e-12
        assert abs(by_coef["beta2"] - 3.0) < 1e-12

    def test_empty_group_omitted(self):
        rows = median_table([_result([1.0, 0.001], policy="fixed5")], "linear")
        assert all("bw9" not in r and "bwAicc" not in r for r in rows)
        assert median_table([], "linear") == []

    def test_ordering_invariance(self):
        results = [
            _result([v, 0.001], replicate=i, policy=p)
            for i, v in enumerate([5, 1, 4, 2])
            for p in ("fixed5", "fixed9")
        ]
        a = median_table(results, "linear")
        b = median_table(list(reversed(results)), "linear")
        assert a == b


class TestLnMse:
    def test_log_of_positive(self):
        r = _result([math.e, 1.0])
        assert abs(r.ln_mse[0] - 1.0) < 1e-12

    def test_zero_mse_flagged(self):
        assert _result([0.0, 1.0]).ln_mse[0] == -math.inf


class TestBoxplotStats:
    def test_constant_data(self):
        st_ = boxplot_stats([0.0, 0.0, 0.0, 0.0])
        assert (st_.minimum, st_.q1, st_.median, st_.q3, st_.maximum) == (0, 0, 0, 0, 0)
        assert st_.outliers == ()

    def test_type7_quartiles(self):
        st_ = boxplot_stats(list(range(1, 101)))
        assert st_.q1 == 25.75
        assert st_.median == 50.5
        assert st_.q3 == 75.25

    def test_outlier_detection(self):
        vals = list(range(1, 21)) + [1000.0]
        st_ = boxplot_stats(vals)
        assert 1000.0 in st_.outliers
        assert st_.maximum <= st_.q3 + 1.5 * (st_.q3 - st_.q1)

    def test_monotone_summary(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            st_ = boxplot_stats(rng.normal(size=30))
            assert st_.minimum <= st_.q1 <= st_.median <= st_.q3 <= st_.maximum
            lo = st_.q1 - 1.5 * (st_.q3 - st_.q1)
            hi = st_.q3 + 1.5 * (st_.q3 - st_.q1)
            assert all(x < lo or x > hi for x in st_.outliers)

    def test_empty_rejected(self):
        with pytest.raises(MetricsError):
            boxplot_stats([])


class TestBandwidthHistogram:
    def test_degenerate(self):
        results = [_result([1, 1], policy="aicc", selected=1.0, replicate=i) for i in range(7)]
        assert bandwidth_histogram(results) == {1: 7}

    def test_enumeration(self):
        sels = [1.0, 1.4, 2.2, 93.0]
        results = [
            _result([1, 1], policy="aicc", selected=s, replicate=i) for i, s in enumerate(sels)
        ]
        assert bandwidth_histogram(results) == {1: 2, 2: 1, 93: 1}

    def test_counts_sum_to_group_size(self):
        rng = np.random.default_rng(1)
        sels = rng.uniform(1, 93, size=200)
        results = [
            _result([1, 1], policy="aicc", selected=float(s), replicate=i)
            for i, s in enumerate(sels)
        ]
        assert sum(bandwidth_histogram(results).values()) == 200

    def test_fixed_policies_excluded(self):
        results = [_result([1, 1], policy="fixed5")]
        assert bandwidth_histogram(results) == {}
