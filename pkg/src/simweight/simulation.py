"""Synthetic correlation-regime markets and the Monte Carlo study harness.

Three scenario kinds are provided: a constant equicorrelation structure, a
two-block structure whose block parameters cycle through a regime table,
and a two-block structure whose block parameters move sinusoidally. Days
are numbered 1..horizon and the return row for day t is drawn from
N(0, C_true(t)) with unit variances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, SimweightError
from .matrices import CorrelationMatrix, ReturnPanel, pearson_correlation
from .similarity import (
    SimilaritySettings,
    build_probe_series,
    exponential_correlation,
    similarity,
    similarity_weighted_correlation,
)

SCENARIO_KINDS = ("equicorrelation", "regime-switching", "sinusoidal")

DEFAULT_REGIMES = ((0.7, 0.3), (0.5, 0.5), (0.3, 0.7))


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters pinning down the true correlation path of one market.

    Block kinds split the assets into two equal blocks; rho1 applies inside
    the first block, rho3 inside the second, cross_rho between blocks. The
    regime table cycles every regime_length days; the sinusoidal parameters
    trace rho1(t) = base + amplitude*sin(2*pi*t/period) and rho3 the same
    curve shifted by phase days.
    """

    kind: str
    n_assets: int = 16
    horizon: int = 1000
    rho: float = 0.7
    regimes: tuple[tuple[float, float], ...] = DEFAULT_REGIMES
    regime_length: int = 100
    cross_rho: float = 0.2
    base: float = 0.4
    amplitude: float = 0.3
    period: int = 600
    phase: int = 300

    def __post_init__(self):
        object.__setattr__(
            self, "regimes", tuple(tuple(float(r) for r in pair) for pair in self.regimes)
        )
        if self.kind not in SCENARIO_KINDS:
            raise InvalidParameterError(f"unknown scenario kind {self.kind!r}")
        if self.n_assets < 2:
            raise InvalidParameterError("need at least two assets")
        if self.horizon < 1:
            raise InvalidParameterError("horizon must be positive")
        if self.kind != "equicorrelation":
            if self.n_assets % 2 != 0:
                raise InvalidParameterError("block scenarios need an even asset count")
            if self.kind == "regime-switching":
                if not self.regimes or self.regime_length < 1:
                    raise InvalidParameterError("regime table and length required")
            if self.kind == "sinusoidal" and self.period < 1:
                raise InvalidParameterError("period must be positive")
        # Fail fast on a non-PSD structure: build every distinct day matrix
        # once; CorrelationMatrix construction runs the full checks.
        for key in sorted({_day_key(self, t) for t in range(1, self.horizon + 1)}):
            _matrix_for_key(self, key)


def _day_key(spec: ScenarioSpec, t: int) -> int:
    """Canonical parameter index for day t; equal keys mean equal matrices."""
    if spec.kind == "equicorrelation":
        return 0
    if spec.kind == "regime-switching":
        return ((t - 1) // spec.regime_length) % len(spec.regimes)
    return t % spec.period


def _block_values(n: int, rho1: float, rho3: float, cross: float) -> np.ndarray:
    half = n // 2
    values = np.full((n, n), cross)
    values[:half, :half] = rho1
    values[half:, half:] = rho3
    np.fill_diagonal(values, 1.0)
    return values


def _matrix_for_key(spec: ScenarioSpec, key: int) -> CorrelationMatrix:
    if spec.kind == "equicorrelation":
        values = np.full((spec.n_assets, spec.n_assets), spec.rho)
        np.fill_diagonal(values, 1.0)
        return CorrelationMatrix(values)
    if spec.kind == "regime-switching":
        rho1, rho3 = spec.regimes[key]
        return CorrelationMatrix(
            _block_values(spec.n_assets, rho1, rho3, spec.cross_rho)
        )
    angle = 2.0 * np.pi * key / spec.period
    shifted = 2.0 * np.pi * (key - spec.phase) / spec.period
    rho1 = spec.base + spec.amplitude * np.sin(angle)
    rho3 = spec.base + spec.amplitude * np.sin(shifted)
    return CorrelationMatrix(_block_values(spec.n_assets, rho1, rho3, spec.cross_rho))


def equicorrelation_scenario(
    horizon: int, n_assets: int = 16, rho: float = 0.7
) -> ScenarioSpec:
    return ScenarioSpec(
        kind="equicorrelation", n_assets=n_assets, horizon=horizon, rho=rho
    )


def regime_switching_scenario(
    horizon: int,
    n_assets: int = 16,
    regimes: tuple[tuple[float, float], ...] = DEFAULT_REGIMES,
    regime_length: int = 100,
    cross_rho: float = 0.2,
) -> ScenarioSpec:
    return ScenarioSpec(
        kind="regime-switching",
        n_assets=n_assets,
        horizon=horizon,
        regimes=regimes,
        regime_length=regime_length,
        cross_rho=cross_rho,
    )


def sinusoidal_scenario(
    horizon: int,
    n_assets: int = 16,
    base: float = 0.4,
    amplitude: float = 0.3,
    period: int = 600,
    phase: int = 300,
    cross_rho: float = 0.2,
) -> ScenarioSpec:
    return ScenarioSpec(
        kind="sinusoidal",
        n_assets=n_assets,
        horizon=horizon,
        base=base,
        amplitude=amplitude,
        period=period,
        phase=phase,
        cross_rho=cross_rho,
    )


def true_correlation(spec: ScenarioSpec, t: int) -> CorrelationMatrix:
    """The exact correlation matrix governing day t (1-based)."""
    t = int(t)
    if t < 1 or t > spec.horizon:
        raise InvalidInputError(f"day {t} outside 1..{spec.horizon}")
    return _matrix_for_key(spec, _day_key(spec, t))


def simulate_returns(spec: ScenarioSpec, seed) -> ReturnPanel:
    """One panel draw: row t ~ N(0, true_correlation(spec, t)), unit variances."""
    rng = np.random.default_rng(seed)
    n = spec.n_assets
    z = rng.standard_normal((spec.horizon, n))
    keys = np.array([_day_key(spec, t) for t in range(1, spec.horizon + 1)])
    values = np.empty_like(z)
    for key in np.unique(keys):
        factor = np.linalg.cholesky(_matrix_for_key(spec, int(key)).values)
        rows = keys == key
        values[rows] = z[rows] @ factor.T
    return ReturnPanel(
        times=np.arange(1, spec.horizon + 1),
        assets=[f"asset{i + 1:03d}" for i in range(n)],
        values=values,
    )


def synthetic_market_panel(
    spec: ScenarioSpec, seed, vol_low: float = 0.01, vol_high: float = 0.03
) -> ReturnPanel:
    """Scenario returns rescaled to heterogeneous per-asset volatilities.

    Correlations are untouched by the per-column scaling; covariances pick
    up realistic dispersion, which is what separates optimized portfolios
    from equal weighting.
    """
    if not 0.0 < vol_low <= vol_high:
        raise InvalidParameterError("need 0 < vol_low <= vol_high")
    ss = np.random.SeedSequence(seed)
    returns_seed, vol_seed = ss.spawn(2)
    panel = simulate_returns(spec, returns_seed)
    vols = np.random.default_rng(vol_seed).uniform(vol_low, vol_high, spec.n_assets)
    return ReturnPanel(
        times=panel.times,
        assets=panel.assets,
        values=panel.values * vols,
        labels=panel.labels,
    )


def theoretical_similarity_matrix(spec: ScenarioSpec, up_to: int) -> np.ndarray:
    """Pairwise distance of the true matrices for days 1..up_to.

    Entry (i, j) is the spectral-norm distance between the true structures
    of days i+1 and j+1. Distinct day pairs with identical parameters are
    computed once.
    """
    up_to = int(up_to)
    if up_to < 1 or up_to > spec.horizon:
        raise InvalidInputError(f"up_to {up_to} outside 1..{spec.horizon}")
    keys = np.array([_day_key(spec, t) for t in range(1, up_to + 1)])
    unique = np.unique(keys)
    out = np.zeros((up_to, up_to))
    for a_pos, key_a in enumerate(unique):
        rows = np.flatnonzero(keys == key_a)
        for key_b in unique[a_pos + 1 :]:
            cols = np.flatnonzero(keys == key_b)
            value = similarity(
                _matrix_for_key(spec, int(key_a)), _matrix_for_key(spec, int(key_b))
            )
            out[np.ix_(rows, cols)] = value
            out[np.ix_(cols, rows)] = value
    return out


@dataclass(frozen=True)
class StudySettings:
    """Estimator configuration for the Monte Carlo study."""

    window_length: int = 50
    top_s: int = 300
    method: str = "pearson"
    unweighted_window: int = 300
    ewma_n: int = 300
    ewma_lambda: float = 0.94

    def __post_init__(self):
        if self.unweighted_window < 2:
            raise InvalidParameterError("unweighted_window must be at least 2")
        # The remaining fields are validated where they are consumed.


ESTIMATORS = ("similarity", "unweighted", "exponential")


@dataclass(frozen=True)
class StudyRow:
    eval_day: int
    group: str
    true_value: float
    estimator: str
    mean: float
    std: float
    n_obs: int


@dataclass(frozen=True)
class RawRow:
    repetition: int
    eval_day: int
    group: str
    estimator: str
    value: float


@dataclass(frozen=True)
class SimulationReport:
    """Pooled estimator statistics per evaluation day and parameter group.

    Statistics pool every matrix entry sharing a true parameter across all
    completed repetitions. raw_rows carries per-repetition group means when
    requested. Aborted repetitions appear in diagnostics and contribute no
    statistics.
    """

    scenario_kind: str
    eval_days: tuple[int, ...]
    repetitions: int
    completed: int
    master_seed: int
    rows: tuple[StudyRow, ...]
    raw_rows: tuple[RawRow, ...] = ()
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        if any(row.std < 0.0 for row in self.rows):
            raise InvalidInputError("standard deviations must be nonnegative")
        if self.completed > self.repetitions:
            raise InvalidInputError("completed exceeds configured repetitions")

    def row(self, eval_day: int, group: str, estimator: str) -> StudyRow:
        for row in self.rows:
            if (row.eval_day, row.group, row.estimator) == (eval_day, group, estimator):
                return row
        raise KeyError((eval_day, group, estimator))


def _group_pairs(spec: ScenarioSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    n = spec.n_assets
    rows, cols = np.triu_indices(n, k=1)
    if spec.kind == "equicorrelation":
        return {"all": (rows, cols)}
    half = n // 2
    in1 = cols < half
    in2 = rows >= half
    cross = ~(in1 | in2)
    return {
        "block1": (rows[in1], cols[in1]),
        "cross": (rows[cross], cols[cross]),
        "block2": (rows[in2], cols[in2]),
    }


def run_study(
    spec: ScenarioSpec,
    eval_days: tuple[int, ...],
    repetitions: int,
    settings: StudySettings = StudySettings(),
    master_seed: int = 0,
    keep_raw: bool = False,
) -> SimulationReport:
    """Monte Carlo comparison of the three estimators on fresh panels.

    Each repetition simulates its own panel, evaluates every estimator at
    every evaluation day, and pools the estimated entries per true-parameter
    group. A repetition failing in any estimator is dropped whole, with a
    diagnostic, so all statistics cover the same draws.
    """
    eval_days = tuple(int(d) for d in eval_days)
    if not eval_days:
        raise InvalidParameterError("need at least one evaluation day")
    if max(eval_days) > spec.horizon:
        raise InvalidInputError("evaluation day beyond the scenario horizon")
    if repetitions < 2:
        raise InvalidParameterError("need at least two repetitions")
    lookback = max(settings.unweighted_window, settings.ewma_n, settings.window_length)
    if min(eval_days) < lookback:
        raise InvalidInputError(
            f"evaluation day {min(eval_days)} shorter than the {lookback}-day lookback"
        )

    groups = _group_pairs(spec)
    sim_settings = SimilaritySettings(
        window_length=settings.window_length,
        top_s=settings.top_s,
        horizon=None,
        method=settings.method,
    )
    pooled: dict[tuple[int, str, str], list[np.ndarray]] = {
        (day, group, est): []
        for day in eval_days
        for group in groups
        for est in ESTIMATORS
    }
    raw: list[RawRow] = []
    diagnostics: list[str] = []
    completed = 0

    children = np.random.SeedSequence(master_seed).spawn(repetitions)
    for rep, child in enumerate(children):
        try:
            panel = simulate_returns(spec, child)
            probes = build_probe_series(
                panel, settings.window_length, settings.method, with_cov=False
            )
            rep_entries = []
            for day in eval_days:
                estimates = {
                    "similarity": similarity_weighted_correlation(
                        probes, day, sim_settings
                    ),
                    "unweighted": pearson_correlation(
                        panel, (day - settings.unweighted_window + 1, day)
                    ),
                    "exponential": exponential_correlation(
                        panel, day, settings.ewma_n, settings.ewma_lambda
                    ),
                }
                for est, matrix in estimates.items():
                    for group, (rows, cols) in groups.items():
                        rep_entries.append(
                            ((day, group, est), matrix.values[rows, cols])
                        )
        except SimweightError as exc:
            diagnostics.append(f"repetition {rep}: {type(exc).__name__}: {exc}")
            continue
        completed += 1
        for key, entries in rep_entries:
            pooled[key].append(entries)
            if keep_raw:
                day, group, est = key
                raw.append(RawRow(rep, day, group, est, float(entries.mean())))

    rows = []
    for day in eval_days:
        truth = true_correlation(spec, day).values
        for group, (grows, gcols) in groups.items():
            true_value = float(truth[grows[0], gcols[0]])
            for est in ESTIMATORS:
                chunks = pooled[(day, group, est)]
                flat = np.concatenate(chunks) if chunks else np.array([])
                rows.append(
                    StudyRow(
                        eval_day=day,
                        group=group,
                        true_value=true_value,
                        estimator=est,
                        mean=float(flat.mean()) if flat.size else float("nan"),
                        std=float(flat.std(ddof=1)) if flat.size > 1 else 0.0,
                        n_obs=int(flat.size),
                    )
                )

    return SimulationReport(
        scenario_kind=spec.kind,
        eval_days=eval_days,
        repetitions=repetitions,
        completed=completed,
        master_seed=master_seed,
        rows=tuple(rows),
        raw_rows=tuple(raw),
        diagnostics=tuple(diagnostics),
    )
