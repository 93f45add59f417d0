"""Mean-variance portfolio construction and the rolling backtest.

Closed-form solutions of the budget-constrained Markowitz problem: the
minimum-variance portfolio, the target-return portfolio via the risk
tolerance gamma, and the equal-weight benchmark. The backtest estimates a
covariance matrix per rebalance date, holds the resulting weights fixed
over each evaluation horizon, and scores realized volatility and return.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import (
    DegenerateFrontierError,
    InvalidInputError,
    InvalidParameterError,
    InvalidWindowError,
    SimweightError,
    SingularCovarianceError,
)
from .matrices import ReturnPanel, sample_covariance
from .similarity import (
    SimilaritySettings,
    build_probe_series,
    exponential_covariance,
    similarity_weighted_covariance,
)

WEIGHT_SUM_TOL = 1e-10
CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8

STRATEGIES = ("mvp", "trp", "naive")
ESTIMATORS = ("similarity", "unweighted", "exponential")


@dataclass(frozen=True)
class PortfolioWeights:
    """Budget-constrained weights; shorts allowed, so entries may be negative."""

    assets: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "assets", tuple(self.assets))
        if weights.ndim != 1 or len(weights) != len(self.assets):
            raise InvalidInputError("weights not aligned with assets")
        if not np.isfinite(weights).all():
            raise InvalidInputError("weights must be finite")
        if abs(float(np.sum(weights)) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError("weights must sum to 1")


def _sigma_values(sigma) -> np.ndarray:
    values = sigma.values if hasattr(sigma, "values") else np.asarray(sigma, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInputError(f"expected square covariance, got {values.shape}")
    if not np.isfinite(values).all():
        raise InvalidInputError("covariance contains non-finite entries")
    return values


def _default_assets(k: int) -> tuple[str, ...]:
    return tuple(f"w{i + 1:03d}" for i in range(k))


def _spd_solve(values: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve values @ x = rhs for SPD values, or raise SingularCovarianceError."""
    evals = np.linalg.eigvalsh(values)
    if evals[0] <= 0.0 or evals[-1] / evals[0] > CONDITION_LIMIT:
        raise SingularCovarianceError(
            f"covariance condition estimate {evals[-1]:.3e}/{evals[0]:.3e} "
            "exceeds the invertibility limit"
        )
    try:
        factor = sla.cho_factor(values, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - caught by eigvalsh
        raise SingularCovarianceError(str(exc)) from exc
    return sla.cho_solve(factor, rhs)


def minimum_variance_portfolio(sigma, assets=None) -> PortfolioWeights:
    """w = inv(Sigma) 1 / (1' inv(Sigma) 1), the gamma = 0 Markowitz solution."""
    values = _sigma_values(sigma)
    k = values.shape[0]
    y = _spd_solve(values, np.ones(k))
    weights = y / float(np.sum(y))
    return PortfolioWeights(assets or _default_assets(k), weights)


def _frontier_terms(values: np.ndarray, mu: np.ndarray):
    x = _spd_solve(values, mu)
    y = _spd_solve(values, np.ones(len(mu)))
    alpha = float(np.sum(x))
    beta = float(np.sum(y))
    denom = float(mu @ x) - alpha * alpha / beta
    return x, y, alpha, beta, denom


def gamma_for_target(sigma, mu: np.ndarray, target: float) -> float:
    """Risk tolerance mapping the target return onto the efficient frontier.

    gamma = (R - alpha/beta) / (mu' inv(Sigma) mu - alpha^2/beta) with
    alpha = 1' inv(Sigma) mu and beta = 1' inv(Sigma) 1.
    """
    values = _sigma_values(sigma)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (values.shape[0],):
        raise InvalidInputError("mu not aligned with covariance")
    _, _, alpha, beta, denom = _frontier_terms(values, mu)
    if abs(denom) <= 1e-12 * float(mu @ mu):
        raise DegenerateFrontierError(
            "expected returns are parallel to the budget vector; every "
            "feasible return has the same frontier portfolio"
        )
    return (float(target) - alpha / beta) / denom


def target_return_portfolio(sigma, mu: np.ndarray, target: float, assets=None) -> PortfolioWeights:
    """Minimum-variance weights under budget and expected-return constraints.

    w = inv(Sigma)(gamma mu + nu 1) with nu = (1 - gamma alpha)/beta, which
    satisfies 1'w = 1 and mu'w = target by construction.
    """
    values = _sigma_values(sigma)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (values.shape[0],):
        raise InvalidInputError("mu not aligned with covariance")
    x, y, alpha, beta, denom = _frontier_terms(values, mu)
    if abs(denom) <= 1e-12 * float(mu @ mu):
        raise DegenerateFrontierError(
            "expected returns are parallel to the budget vector; every "
            "feasible return has the same frontier portfolio"
        )
    gamma = (float(target) - alpha / beta) / denom
    nu = (1.0 - gamma * alpha) / beta
    return PortfolioWeights(assets or _default_assets(len(mu)), gamma * x + nu * y)


def naive_portfolio(k: int, assets=None) -> PortfolioWeights:
    """Equal weight 1/k in each of k assets."""
    k = int(k)
    if k < 1:
        raise InvalidParameterError("need at least one asset")
    return PortfolioWeights(assets or _default_assets(k), np.full(k, 1.0 / k))


def realized_volatility(portfolio_returns) -> float:
    """Sum of squared daily portfolio returns over the evaluation window."""
    series = np.asarray(portfolio_returns, dtype=np.float64)
    if not np.isfinite(series).all():
        raise InvalidInputError("portfolio returns must be finite")
    return float(np.sum(series * series))


@dataclass(frozen=True)
class BacktestConfig:
    """One backtest run: a strategy, an estimator, and their parameters."""

    strategy: str
    rebalance_dates: tuple[int, ...]
    estimator: str = "similarity"
    horizons: tuple[int, ...] = (14, 28, 56)
    window_length: int = 50
    top_s: int | None = 300
    sim_horizon: int | None = None
    method: str = "pearson"
    unweighted_window: int = 300
    ewma_lambda: float = 0.94
    ewma_n: int = 300
    mu_window: int = 14
    target_margin: float = 0.05
    n_constellations: int = 10
    constellation_size: int = 100

    def __post_init__(self):
        object.__setattr__(self, "rebalance_dates", tuple(int(d) for d in self.rebalance_dates))
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        if self.strategy not in STRATEGIES:
            raise InvalidParameterError(f"unknown strategy {self.strategy!r}")
        if self.estimator not in ESTIMATORS:
            raise InvalidParameterError(f"unknown estimator {self.estimator!r}")
        if not self.rebalance_dates:
            raise InvalidParameterError("need at least one rebalance date")
        if not self.horizons or min(self.horizons) < 1:
            raise InvalidParameterError("horizons must be positive")
        if self.mu_window < 2:
            raise InvalidParameterError("mu_window must be at least 2")
        if self.n_constellations < 1 or self.constellation_size < 1:
            raise InvalidParameterError("need at least one constellation of one asset")


@dataclass(frozen=True)
class BacktestRecord:
    date: int
    constellation: int
    horizon: int
    realized_vol: float
    realized_return: float
    weights: PortfolioWeights
    ridged: bool


@dataclass(frozen=True)
class HorizonSummary:
    horizon: int
    mean_realized_vol: float
    mean_realized_return: float
    n_records: int


@dataclass(frozen=True)
class BacktestReport:
    """All records of one run plus per-horizon averages and diagnostics."""

    strategy: str
    estimator: str
    seed: int
    rebalance_dates: tuple[int, ...]
    horizons: tuple[int, ...]
    constellations: tuple[tuple[str, ...], ...]
    records: tuple[BacktestRecord, ...]
    summary: tuple[HorizonSummary, ...]
    diagnostics: tuple[str, ...]
    ridge_events: int

    def __post_init__(self):
        if any(record.realized_vol < 0.0 for record in self.records):
            raise InvalidInputError("realized volatility must be nonnegative")

    def horizon_summary(self, horizon: int) -> HorizonSummary:
        for entry in self.summary:
            if entry.horizon == horizon:
                return entry
        raise KeyError(horizon)


def _estimate_covariance(panel, probes, config: BacktestConfig, date: int) -> np.ndarray:
    if config.estimator == "unweighted":
        window = (date - config.unweighted_window + 1, date)
        return sample_covariance(panel, window).values
    if config.estimator == "exponential":
        return exponential_covariance(panel, date, config.ewma_n, config.ewma_lambda).values
    settings = SimilaritySettings(
        window_length=config.window_length,
        top_s=config.top_s,
        horizon=config.sim_horizon,
        method=config.method,
    )
    return similarity_weighted_covariance(probes, date, settings).values


def _weights_with_ridge(strategy, sigma, mu, target, assets) -> tuple[PortfolioWeights, bool]:
    """Strategy weights; one ridge retry when the covariance is near-singular."""
    def build(values):
        if strategy == "mvp":
            return minimum_variance_portfolio(values, assets)
        return target_return_portfolio(values, mu, target, assets)

    try:
        return build(sigma), False
    except SingularCovarianceError:
        k = sigma.shape[0]
        ridge = RIDGE_SCALE * float(np.trace(sigma)) / k
        return build(sigma + ridge * np.eye(k)), True


def _validate_dates(panel: ReturnPanel, config: BacktestConfig) -> None:
    first, last = int(panel.times[0]), int(panel.times[-1])
    max_h = max(config.horizons)
    for date in config.rebalance_dates:
        if date + max_h > last:
            raise InvalidWindowError(
                f"date {date} needs {max_h} future days; panel ends at {last}"
            )
        if config.strategy == "naive":
            continue
        if config.strategy == "trp" and date - config.mu_window + 1 < first:
            raise InvalidWindowError(f"date {date} lacks the {config.mu_window}-day mean window")
        if config.estimator == "unweighted" and date - config.unweighted_window + 1 < first:
            raise InvalidWindowError(
                f"date {date} lacks the {config.unweighted_window}-day estimation window"
            )
        if config.estimator == "exponential" and date - config.ewma_n + 1 < first:
            raise InvalidWindowError(f"date {date} lacks the {config.ewma_n}-day estimation window")
        if config.estimator == "similarity":
            probe_start = first + config.window_length - 1
            if config.sim_horizon is not None:
                earliest = probe_start + config.sim_horizon
            else:
                # All-history horizon still needs a nonempty reliable
                # region beyond the window-overlap correction.
                earliest = probe_start + config.window_length + 1
            if date < earliest:
                raise InvalidWindowError(
                    f"date {date} lacks similarity history; earliest usable "
                    f"date on this panel is {earliest}"
                )


def run_backtest(
    panel: ReturnPanel,
    config: BacktestConfig,
    seed: int = 0,
    universe_draws=None,
) -> BacktestReport:
    """Estimate, optimize, hold, and score at every rebalance date.

    Covariances are estimated once per date on the full panel and sliced
    per constellation; the trailing mu_window mean supplies expected
    returns and the target return is its constellation average plus
    target_margin. Failures at one (date, constellation) are recorded as
    diagnostics and skipped, never silently dropped.
    """
    if universe_draws is None:
        if config.constellation_size > panel.n_assets:
            raise InvalidParameterError(
                f"constellation size {config.constellation_size} exceeds "
                f"{panel.n_assets} available assets"
            )
        rng = np.random.default_rng(seed)
        universe_draws = tuple(
            np.sort(rng.choice(panel.n_assets, config.constellation_size, replace=False))
            for _ in range(config.n_constellations)
        )
    else:
        universe_draws = tuple(np.asarray(ix, dtype=np.intp) for ix in universe_draws)
    _validate_dates(panel, config)

    probes = None
    if config.strategy != "naive" and config.estimator == "similarity":
        probes = build_probe_series(panel, config.window_length, config.method, with_cov=True)

    records: list[BacktestRecord] = []
    diagnostics: list[str] = []
    ridge_events = 0
    for date in config.rebalance_dates:
        sigma_full = None
        mu_full = None
        if config.strategy != "naive":
            try:
                sigma_full = _estimate_covariance(panel, probes, config, date)
            except SimweightError as exc:
                diagnostics.append(f"date {date}: {type(exc).__name__}: {exc}")
                continue
            if config.strategy == "trp":
                i0, i1 = panel.row_range(date - config.mu_window + 1, date)
                mu_full = panel.values[i0:i1].mean(axis=0)
        for c_index, ix in enumerate(universe_draws):
            assets = tuple(panel.assets[i] for i in ix)
            ridged = False
            if config.strategy == "naive":
                chosen = naive_portfolio(len(ix), assets)
            else:
                sigma_c = sigma_full[np.ix_(ix, ix)]
                mu_c = mu_full[ix] if mu_full is not None else None
                target = (
                    float(mu_c.mean()) + config.target_margin if mu_c is not None else None
                )
                try:
                    chosen, ridged = _weights_with_ridge(
                        config.strategy, sigma_c, mu_c, target, assets
                    )
                except SimweightError as exc:
                    diagnostics.append(
                        f"date {date} constellation {c_index}: {type(exc).__name__}: {exc}"
                    )
                    continue
            ridge_events += int(ridged)
            for horizon in config.horizons:
                i0, i1 = panel.row_range(date + 1, date + horizon)
                if i1 - i0 != horizon:
                    diagnostics.append(
                        f"date {date} horizon {horizon}: evaluation rows missing"
                    )
                    continue
                delta = panel.values[i0:i1, ix] @ chosen.weights
                records.append(
                    BacktestRecord(
                        date=date,
                        constellation=c_index,
                        horizon=horizon,
                        realized_vol=realized_volatility(delta),
                        realized_return=float(np.prod(1.0 + delta) - 1.0),
                        weights=chosen,
                        ridged=ridged,
                    )
                )

    summary = []
    for horizon in config.horizons:
        matching = [r for r in records if r.horizon == horizon]
        summary.append(
            HorizonSummary(
                horizon=horizon,
                mean_realized_vol=(
                    float(np.mean([r.realized_vol for r in matching])) if matching else float("nan")
                ),
                mean_realized_return=(
                    float(np.mean([r.realized_return for r in matching])) if matching else float("nan")
                ),
                n_records=len(matching),
            )
        )
    return BacktestReport(
        strategy=config.strategy,
        estimator=config.estimator,
        seed=int(seed),
        rebalance_dates=config.rebalance_dates,
        horizons=config.horizons,
        constellations=tuple(tuple(panel.assets[i] for i in ix) for ix in universe_draws),
        records=tuple(records),
        summary=tuple(summary),
        diagnostics=tuple(diagnostics),
        ridge_events=ridge_events,
    )
