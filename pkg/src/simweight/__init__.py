"""Similarity-weighted correlation and covariance estimation.

Historical rolling-window snapshots of market correlation structure are
compared to the present through a spectral-norm distance; the resulting
weights form convex combinations of past estimates that adapt to regime
changes. The package ships a Monte Carlo scenario harness to validate the
estimators and a mean-variance backtester to score them on portfolios.
"""

from .eigen import spectral_norm, sym_eigenvalues
from .errors import (
    DegenerateColumnError,
    DegenerateFrontierError,
    DegenerateRestrictionError,
    DegenerateSimilarityError,
    InvalidHorizonError,
    InvalidInputError,
    InvalidParameterError,
    InvalidWindowError,
    PanelParseError,
    SimweightError,
    SingularCovarianceError,
)
from .io import ingest_returns, parse_config, parse_return_table, write_returns
from .matrices import (
    CorrelationMatrix,
    CovarianceMatrix,
    ReturnPanel,
    SymMatrix,
    mean_pairwise_correlation,
    pearson_correlation,
    sample_covariance,
    spearman_correlation,
)
from .portfolio import (
    BacktestConfig,
    BacktestRecord,
    BacktestReport,
    HorizonSummary,
    PortfolioWeights,
    gamma_for_target,
    minimum_variance_portfolio,
    naive_portfolio,
    realized_volatility,
    run_backtest,
    target_return_portfolio,
)
from .similarity import (
    ProbeSeries,
    SimilarityProfile,
    SimilaritySettings,
    WeightScheme,
    build_probe_series,
    exponential_correlation,
    exponential_covariance,
    exponential_weights,
    pairwise_similarity_grid,
    restrict_top_s,
    similarity,
    similarity_profile,
    similarity_weighted_correlation,
    similarity_weighted_covariance,
    similarity_weights,
    weight_scheme,
    weighted_correlation,
    weighted_covariance,
)
from .simulation import (
    ScenarioSpec,
    SimulationReport,
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

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
