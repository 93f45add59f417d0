"""Panels, matrix types, and the windowed estimators against scalar oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import covariance_brute, pearson_brute, spearman_brute
from simweight.errors import (
    DegenerateColumnError,
    InvalidInputError,
    InvalidWindowError,
)
from simweight.matrices import (
    CorrelationMatrix,
    CovarianceMatrix,
    ReturnPanel,
    SymMatrix,
    mean_pairwise_correlation,
    pearson_correlation,
    sample_covariance,
    spearman_correlation,
)


def _panel(rng, t=40, n=4):
    return ReturnPanel(
        times=np.arange(1, t + 1),
        assets=[f"a{j}" for j in range(n)],
        values=rng.standard_normal((t, n)),
    )


# ---------------------------------------------------------------- ReturnPanel


def test_panel_validation():
    values = np.zeros((3, 2))
    with pytest.raises(InvalidInputError):
        ReturnPanel(times=[3, 2, 1], assets=["a", "b"], values=values)
    with pytest.raises(InvalidInputError):
        ReturnPanel(times=[1, 1, 2], assets=["a", "b"], values=values)
    with pytest.raises(InvalidInputError):
        ReturnPanel(times=[1, 2, 3], assets=["a", "a"], values=values)
    with pytest.raises(InvalidInputError):
        ReturnPanel(times=[1, 2, 3], assets=["a"], values=values)
    with pytest.raises(InvalidInputError):
        ReturnPanel(times=[1, 2, 3], assets=["a", "b"], values=values * np.nan)
    with pytest.raises(InvalidInputError):
        ReturnPanel(times=[1, 2, 3], assets=["a", "b"], values=values, labels=["x"])


def test_panel_row_range():
    panel = _panel(np.random.default_rng(0), t=10)
    assert panel.row_range(3, 5) == (2, 5)
    assert panel.row_range(1, 10) == (0, 10)
    # outside times clamps to the covered slice
    assert panel.row_range(-5, 99) == (0, 10)
    assert panel.row_range(4, 4) == (3, 4)
    with pytest.raises(InvalidWindowError):
        panel.row_range(5, 3)


def test_panel_select_assets():
    panel = _panel(np.random.default_rng(1), t=6, n=4)
    sub = panel.select_assets([2, 0])
    assert sub.assets == ["a2", "a0"]
    assert np.array_equal(sub.values, panel.values[:, [2, 0]])
    assert np.array_equal(sub.times, panel.times)


# --------------------------------------------------------------- matrix types


def test_sym_matrix_requires_exact_symmetry():
    with pytest.raises(InvalidInputError):
        SymMatrix(np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]]))
    fixed = SymMatrix.symmetrized(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert np.array_equal(fixed.values, fixed.values.T)
    assert fixed.values[0, 1] == 1.0
    assert fixed.dim == 2
    with pytest.raises(InvalidInputError):
        SymMatrix(np.ones((2, 3)))
    with pytest.raises(InvalidInputError):
        SymMatrix(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_correlation_matrix_contract():
    good = CorrelationMatrix(np.array([[1.0, 0.4], [0.4, 1.0]]))
    assert good.dim == 2
    with pytest.raises(InvalidInputError):
        CorrelationMatrix(np.array([[1.0, 0.4], [0.4, 0.9]]))
    with pytest.raises(InvalidInputError):
        CorrelationMatrix(np.array([[1.0, 1.4], [1.4, 1.0]]))
    # symmetric with unit diagonal and entries in range, but indefinite
    bad = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
    with pytest.raises(InvalidInputError):
        CorrelationMatrix(bad)


def test_covariance_matrix_contract():
    CovarianceMatrix(np.array([[2.0, 0.5], [0.5, 1.0]]))
    with pytest.raises(InvalidInputError):
        CovarianceMatrix(np.array([[-1.0, 0.0], [0.0, 1.0]]))
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    with pytest.raises(InvalidInputError):
        CovarianceMatrix(bad)


# ----------------------------------------------------------------- estimators


def test_pearson_against_scalar_oracle():
    rng = np.random.default_rng(5)
    panel = _panel(rng, t=17, n=5)
    corr = pearson_correlation(panel, (1, 17)).values
    rows = panel.values
    for i in range(5):
        for j in range(i + 1, 5):
            assert abs(corr[i, j] - pearson_brute(rows[:, i], rows[:, j])) < 1e-12
    ref = np.corrcoef(rows.T)
    assert np.max(np.abs(corr - ref)) < 1e-12


def test_pearson_windowing_uses_inclusive_time_range():
    rng = np.random.default_rng(6)
    panel = _panel(rng, t=30)
    corr = pearson_correlation(panel, (11, 25)).values
    ref = np.corrcoef(panel.values[10:25].T)
    assert np.max(np.abs(corr - ref)) < 1e-12


def test_pearson_affine_invariance():
    rng = np.random.default_rng(7)
    panel = _panel(rng, t=25, n=3)
    base = pearson_correlation(panel, (1, 25)).values
    scaled = ReturnPanel(
        times=panel.times,
        assets=panel.assets,
        values=panel.values * np.array([2.0, 5.0, 0.1]) + np.array([1.0, -3.0, 0.0]),
    )
    assert np.max(np.abs(pearson_correlation(scaled, (1, 25)).values - base)) < 1e-12
    flipped = ReturnPanel(
        times=panel.times,
        assets=panel.assets,
        values=panel.values * np.array([-1.0, 1.0, 1.0]),
    )
    got = pearson_correlation(flipped, (1, 25)).values
    assert np.max(np.abs(got[0, 1:] + base[0, 1:])) < 1e-12
    assert np.max(np.abs(got[1:, 1:] - base[1:, 1:])) < 1e-12


def test_collinear_columns_hit_the_bounds():
    t = np.arange(1, 13)
    x = np.random.default_rng(8).standard_normal(12)
    values = np.column_stack([x, 2.0 * x, -0.5 * x])
    panel = ReturnPanel(times=t, assets=["x", "up", "down"], values=values)
    corr = pearson_correlation(panel, (1, 12)).values
    assert abs(corr[0, 1] - 1.0) < 1e-14
    assert abs(corr[0, 2] + 1.0) < 1e-14
    assert np.max(np.abs(corr)) <= 1.0


def test_constant_column_raises_naming_the_asset():
    values = np.random.default_rng(9).standard_normal((10, 3))
    values[:, 1] = 4.2
    panel = ReturnPanel(times=np.arange(10), assets=["a", "flat", "c"], values=values)
    with pytest.raises(DegenerateColumnError) as excinfo:
        pearson_correlation(panel, (0, 9))
    assert excinfo.value.asset == "flat"
    with pytest.raises(DegenerateColumnError):
        spearman_correlation(panel, (0, 9))


def test_constant_column_gives_zero_covariance_rows():
    values = np.random.default_rng(10).standard_normal((10, 3))
    values[:, 1] = 4.2
    panel = ReturnPanel(times=np.arange(10), assets=["a", "flat", "c"], values=values)
    cov = sample_covariance(panel, (0, 9)).values
    assert np.array_equal(cov[1, :], np.zeros(3))
    assert np.array_equal(cov[:, 1], np.zeros(3))


def test_spearman_against_scalar_oracle():
    rng = np.random.default_rng(11)
    values = rng.standard_normal((15, 4))
    values[3, 0] = values[7, 0]  # force a tie
    panel = ReturnPanel(times=np.arange(15), assets=list("abcd"), values=values)
    corr = spearman_correlation(panel, (0, 14)).values
    for i in range(4):
        for j in range(i + 1, 4):
            assert abs(corr[i, j] - spearman_brute(values[:, i], values[:, j])) < 1e-12


def test_spearman_invariant_under_monotone_maps():
    rng = np.random.default_rng(12)
    panel = _panel(rng, t=20, n=3)
    base = spearman_correlation(panel, (1, 20)).values
    warped = ReturnPanel(
        times=panel.times, assets=panel.assets, values=np.exp(panel.values)
    )
    assert np.array_equal(spearman_correlation(warped, (1, 20)).values, base)


def test_sample_covariance_against_oracles():
    rng = np.random.default_rng(13)
    panel = _panel(rng, t=19, n=4)
    cov = sample_covariance(panel, (1, 19)).values
    rows = panel.values
    for i in range(4):
        for j in range(4):
            assert abs(cov[i, j] - covariance_brute(rows[:, i], rows[:, j])) < 1e-12
    assert np.max(np.abs(cov - np.cov(rows.T, ddof=1))) < 1e-13


def test_correlation_consistent_with_covariance():
    rng = np.random.default_rng(14)
    panel = _panel(rng, t=31, n=5)
    corr = pearson_correlation(panel, (1, 31)).values
    cov = sample_covariance(panel, (1, 31)).values
    scale = np.sqrt(np.diag(cov))
    assert np.max(np.abs(corr - cov / np.outer(scale, scale))) < 1e-12


def test_window_errors():
    panel = _panel(np.random.default_rng(15), t=10)
    with pytest.raises(InvalidWindowError):
        pearson_correlation(panel, (5, 5))  # one row
    with pytest.raises(InvalidWindowError):
        sample_covariance(panel, (11, 20))  # outside the panel
    with pytest.raises(InvalidWindowError):
        spearman_correlation(panel, (7, 3))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.integers(min_value=3, max_value=25),
    st.integers(min_value=2, max_value=6),
)
def test_estimator_outputs_are_wellformed(seed, t, n):
    panel = _panel(np.random.default_rng(seed), t=t, n=n)
    corr = pearson_correlation(panel, (1, t)).values
    assert np.array_equal(np.diag(corr), np.ones(n))
    assert np.max(np.abs(corr)) <= 1.0
    assert np.array_equal(corr, corr.T)
    cov = sample_covariance(panel, (1, t)).values
    assert np.array_equal(cov, cov.T)
    assert np.min(np.diag(cov)) >= 0.0


# --------------------------------------------------- mean pairwise correlation


def test_mean_pairwise_correlation_two_assets():
    rng = np.random.default_rng(16)
    panel = _panel(rng, t=30, n=2)
    times, series = mean_pairwise_correlation(panel, 10)
    assert np.array_equal(times, panel.times[9:])
    assert len(series) == 21
    for pos, t in enumerate(times):
        ref = spearman_correlation(panel, (t - 9, t)).values[0, 1]
        assert abs(series[pos] - ref) < 1e-14


def test_mean_pairwise_correlation_averages_all_pairs():
    rng = np.random.default_rng(17)
    panel = _panel(rng, t=12, n=4)
    times, series = mean_pairwise_correlation(panel, 12)
    corr = spearman_correlation(panel, (1, 12)).values
    ref = corr[np.triu_indices(4, k=1)].mean()
    assert len(series) == 1
    assert abs(series[0] - ref) < 1e-14


def test_mean_pairwise_correlation_errors():
    panel = _panel(np.random.default_rng(18), t=10, n=2)
    with pytest.raises(InvalidWindowError):
        mean_pairwise_correlation(panel, 11)
    with pytest.raises(InvalidWindowError):
        mean_pairwise_correlation(panel, 1)
    single = ReturnPanel(
        times=np.arange(10), assets=["only"], values=np.random.default_rng(0).standard_normal((10, 1))
    )
    with pytest.raises(InvalidInputError):
        mean_pairwise_correlation(single, 5)
