"""Scenario truth paths, the panel generator, and the study harness."""

import numpy as np
import pytest

from simweight.errors import InvalidInputError, InvalidParameterError
from simweight.matrices import pearson_correlation
from simweight.similarity import similarity
from simweight.simulation import (
    ScenarioSpec,
    StudySettings,
    equicorrelation_scenario,
    regime_switching_scenario,
    run_study,
    simulate_returns,
    sinusoidal_scenario,
    synthetic_market_panel,
    theoretical_similarity_matrix,
    true_correlation,
)


def _corner_values(spec, day):
    """(first-block, cross, second-block) off-diagonal entries for day."""
    values = true_correlation(spec, day).values
    half = spec.n_assets // 2
    return values[0, 1], values[0, half], values[half, half + 1]


# ----------------------------------------------------------------- true paths


def test_equicorrelation_truth_is_constant():
    spec = equicorrelation_scenario(horizon=500, n_assets=6, rho=0.55)
    for day in (1, 250, 500):
        values = true_correlation(spec, day).values
        off = values[~np.eye(6, dtype=bool)]
        assert np.array_equal(off, np.full(30, 0.55))
        assert np.array_equal(np.diag(values), np.ones(6))


def test_regime_switching_truth_cycles():
    spec = regime_switching_scenario(horizon=1200, n_assets=8)
    assert _corner_values(spec, 1) == (0.7, 0.2, 0.3)
    assert _corner_values(spec, 100) == (0.7, 0.2, 0.3)
    assert _corner_values(spec, 101) == (0.5, 0.2, 0.5)
    assert _corner_values(spec, 201) == (0.3, 0.2, 0.7)
    assert _corner_values(spec, 301) == (0.7, 0.2, 0.3)  # wrapped around
    assert _corner_values(spec, 1000) == (0.7, 0.2, 0.3)
    assert np.array_equal(
        true_correlation(spec, 42).values, true_correlation(spec, 342).values
    )


def test_sinusoidal_truth_hits_known_phases():
    spec = sinusoidal_scenario(horizon=5000, n_assets=8)
    rho1, cross, rho3 = _corner_values(spec, 150)
    assert abs(rho1 - 0.7) < 1e-15  # peak of the sine
    assert abs(rho3 - 0.1) < 1e-15  # opposite phase
    assert cross == 0.2
    rho1, _, _ = _corner_values(spec, 5000)
    assert abs(rho1 - (0.4 + 0.3 * np.sin(2.0 * np.pi / 3.0))) < 1e-15
    assert round(rho1, 4) == 0.6598
    rho1, _, _ = _corner_values(spec, 1000)
    assert abs(rho1 - (0.4 + 0.3 * np.sin(4.0 * np.pi / 3.0))) < 1e-15
    assert round(rho1, 4) == 0.1402


def test_sinusoidal_truth_is_periodic():
    spec = sinusoidal_scenario(horizon=2000, n_assets=4)
    for day in (17, 123, 600):
        assert np.array_equal(
            true_correlation(spec, day).values,
            true_correlation(spec, day + 600).values,
        )


def test_true_correlation_day_range():
    spec = equicorrelation_scenario(horizon=100, n_assets=4)
    with pytest.raises(InvalidInputError):
        true_correlation(spec, 0)
    with pytest.raises(InvalidInputError):
        true_correlation(spec, 101)


def test_scenario_validation():
    with pytest.raises(InvalidParameterError):
        ScenarioSpec(kind="bursty")
    with pytest.raises(InvalidParameterError):
        regime_switching_scenario(horizon=100, n_assets=7)
    with pytest.raises(InvalidParameterError):
        equicorrelation_scenario(horizon=0, n_assets=4)
    with pytest.raises(InvalidParameterError):
        ScenarioSpec(kind="equicorrelation", n_assets=1)
    # equicorrelation with rho below -1/(n-1) is indefinite: fail at build
    with pytest.raises(InvalidInputError):
        equicorrelation_scenario(horizon=10, n_assets=16, rho=-0.5)
    # blocks that cannot coexist with the cross correlation
    with pytest.raises(InvalidInputError):
        regime_switching_scenario(
            horizon=10, n_assets=8, regimes=((0.1, 0.1),), cross_rho=0.9
        )


# ------------------------------------------------------------------ sampling


def test_simulate_returns_shape_and_determinism():
    spec = equicorrelation_scenario(horizon=40, n_assets=5)
    panel = simulate_returns(spec, 123)
    assert panel.values.shape == (40, 5)
    assert np.array_equal(panel.times, np.arange(1, 41))
    assert panel.assets[0] == "asset001" and panel.assets[-1] == "asset005"
    again = simulate_returns(spec, 123)
    assert np.array_equal(panel.values, again.values)
    other = simulate_returns(spec, 124)
    assert not np.array_equal(panel.values, other.values)


def test_simulated_moments_match_the_target():
    spec = equicorrelation_scenario(horizon=4000, n_assets=6, rho=0.7)
    panel = simulate_returns(spec, 7)
    corr = pearson_correlation(panel, (1, 4000)).values
    off = corr[~np.eye(6, dtype=bool)]
    assert np.max(np.abs(off - 0.7)) < 0.04
    assert np.max(np.abs(panel.values.std(axis=0, ddof=1) - 1.0)) < 0.05


def test_simulated_regime_rows_follow_their_day():
    spec = regime_switching_scenario(horizon=3000, n_assets=8)
    panel = simulate_returns(spec, 11)
    regime0 = np.array([((t - 1) // 100) % 3 == 0 for t in panel.times])
    rows = panel.values[regime0]
    assert len(rows) == 1000
    corr = np.corrcoef(rows.T)
    assert abs(corr[0, 1] - 0.7) < 0.06
    assert abs(corr[0, 4] - 0.2) < 0.06
    assert abs(corr[4, 5] - 0.3) < 0.06


def test_synthetic_market_scales_volatilities():
    spec = regime_switching_scenario(horizon=2000, n_assets=10)
    panel = synthetic_market_panel(spec, 3, vol_low=0.01, vol_high=0.03)
    stds = panel.values.std(axis=0, ddof=1)
    assert (stds > 0.005).all() and (stds < 0.04).all()
    assert len(np.unique(np.round(stds, 6))) == 10  # heterogeneous, not one scale
    corr = np.corrcoef(panel.values[:100].T)
    plain = simulate_returns(spec, 3)  # different stream; only structure matches
    assert abs(np.corrcoef(panel.values.T)[0, 1] - np.corrcoef(plain.values.T)[0, 1]) < 0.1
    again = synthetic_market_panel(spec, 3, vol_low=0.01, vol_high=0.03)
    assert np.array_equal(panel.values, again.values)
    with pytest.raises(InvalidParameterError):
        synthetic_market_panel(spec, 3, vol_low=0.0, vol_high=0.03)
    with pytest.raises(InvalidParameterError):
        synthetic_market_panel(spec, 3, vol_low=0.05, vol_high=0.03)


# ------------------------------------------------------- theoretical distances


def test_theoretical_similarity_matrix_regimes():
    spec = regime_switching_scenario(horizon=300, n_assets=16)
    grid = theoretical_similarity_matrix(spec, 300)
    assert grid.shape == (300, 300)
    assert np.array_equal(grid, grid.T)
    assert np.array_equal(np.diag(grid), np.zeros(300))
    # same regime: zero; adjacent regimes differ by 0.2 per block entry,
    # opposite regimes by 0.4; each block contributes (half-1) times that
    assert grid[0, 50] == 0.0
    assert abs(grid[0, 100] - 0.2 * 7) < 1e-12
    assert abs(grid[0, 200] - 0.4 * 7) < 1e-12
    assert abs(grid[120, 250] - 0.2 * 7) < 1e-12


def test_theoretical_similarity_matrix_matches_scalar_route():
    spec = sinusoidal_scenario(horizon=80, n_assets=6)
    grid = theoretical_similarity_matrix(spec, 80)
    rng = np.random.default_rng(19)
    for _ in range(25):
        i, j = rng.integers(0, 80, size=2)
        ref = similarity(true_correlation(spec, i + 1), true_correlation(spec, j + 1))
        assert abs(grid[i, j] - ref) < 1e-14
    with pytest.raises(InvalidInputError):
        theoretical_similarity_matrix(spec, 81)
    with pytest.raises(InvalidInputError):
        theoretical_similarity_matrix(spec, 0)


# ------------------------------------------------------------------ the study


SMOKE = StudySettings(window_length=20, top_s=60, unweighted_window=100, ewma_n=100)


def test_run_study_smoke():
    spec = equicorrelation_scenario(horizon=260, n_assets=6, rho=0.5)
    report = run_study(spec, (200, 260), 3, SMOKE, master_seed=5)
    assert report.completed == 3
    assert report.diagnostics == ()
    assert len(report.rows) == 2 * 1 * 3  # days x groups x estimators
    for row in report.rows:
        assert row.true_value == 0.5
        assert abs(row.mean - 0.5) < 0.2
        assert row.n_obs == 3 * 15  # repetitions x upper-triangle entries
        assert row.std > 0.0
    assert report.row(200, "all", "similarity").eval_day == 200


def test_run_study_regime_groups():
    spec = regime_switching_scenario(horizon=220, n_assets=6, regime_length=100)
    report = run_study(spec, (220,), 2, SMOKE, master_seed=9, keep_raw=True)
    day220 = {g: report.row(220, g, "unweighted") for g in ("block1", "cross", "block2")}
    # day 220 sits in the third regime: blocks at 0.3 and 0.7, cross at 0.2
    assert day220["block1"].true_value == 0.3
    assert day220["cross"].true_value == 0.2
    assert day220["block2"].true_value == 0.7
    assert day220["block1"].n_obs == 2 * 3
    assert day220["cross"].n_obs == 2 * 9
    assert len(report.raw_rows) == 2 * 1 * 3 * 3
    for entry in report.raw_rows:
        assert -1.0 <= entry.value <= 1.0


def test_run_study_is_deterministic():
    spec = equicorrelation_scenario(horizon=220, n_assets=4, rho=0.4)
    one = run_study(spec, (220,), 2, SMOKE, master_seed=21)
    two = run_study(spec, (220,), 2, SMOKE, master_seed=21)
    assert one.rows == two.rows
    other = run_study(spec, (220,), 2, SMOKE, master_seed=22)
    assert one.rows != other.rows


def test_run_study_aborts_repetitions_it_cannot_complete():
    # top_s larger than the candidate history: every repetition fails
    spec = equicorrelation_scenario(horizon=220, n_assets=4, rho=0.4)
    bad = StudySettings(window_length=20, top_s=500, unweighted_window=100, ewma_n=100)
    report = run_study(spec, (220,), 2, bad, master_seed=2)
    assert report.completed == 0
    assert len(report.diagnostics) == 2
    assert "InvalidParameterError" in report.diagnostics[0]
    row = report.row(220, "all", "similarity")
    assert row.n_obs == 0
    assert np.isnan(row.mean)


def test_run_study_argument_validation():
    spec = equicorrelation_scenario(horizon=220, n_assets=4)
    with pytest.raises(InvalidParameterError):
        run_study(spec, (), 2, SMOKE)
    with pytest.raises(InvalidParameterError):
        run_study(spec, (220,), 1, SMOKE)
    with pytest.raises(InvalidInputError):
        run_study(spec, (221,), 2, SMOKE)
    with pytest.raises(InvalidInputError):
        run_study(spec, (99,), 2, SMOKE)  # shorter than the lookback
