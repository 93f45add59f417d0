"""Structural similarity of correlation snapshots and the weighted estimators.

The chain is: short rolling-window probe matrices -> spectral-norm distance
between each probe and the reference-time probe -> an order-reversed,
normalized similarity -> weights over history -> convex combinations of the
probe correlation/covariance matrices. An exponentially weighted benchmark
estimator lives here as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import spectral_norm, spectral_norms_batch
from .errors import (
    DegenerateColumnError,
    DegenerateRestrictionError,
    DegenerateSimilarityError,
    InvalidHorizonError,
    InvalidInputError,
    InvalidParameterError,
    InvalidWindowError,
)
from .matrices import (
    CorrelationMatrix,
    CovarianceMatrix,
    ReturnPanel,
    _corr_from_rows,
    _cov_from_rows,
    _rank_columns,
)

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ProbeSeries:
    """Rolling-window correlation/covariance snapshots over a panel.

    The probe at time t is estimated from panel rows [t-L+1, t] only, so it
    never looks ahead. corr_values[i] belongs to times[i]; cov_values is
    aligned the same way when present.
    """

    window_length: int
    times: np.ndarray
    corr_values: np.ndarray
    cov_values: np.ndarray | None
    assets: tuple[str, ...]
    method: str

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.int64)
        object.__setattr__(self, "times", times)
        if self.window_length < 2:
            raise InvalidInputError("window_length must be at least 2")
        if len(times) > 1 and not (np.diff(times) == 1).all():
            raise InvalidInputError("probe times must be contiguous")
        if self.corr_values.shape[0] != len(times):
            raise InvalidInputError("corr probes not aligned with times")
        if self.cov_values is not None and self.cov_values.shape != self.corr_values.shape:
            raise InvalidInputError("cov probes not aligned with corr probes")

    @property
    def dim(self) -> int:
        return self.corr_values.shape[1]

    def index_of(self, t: int) -> int:
        i = int(t) - int(self.times[0])
        if i < 0 or i >= len(self.times):
            raise InvalidInputError(f"no probe at time {t}")
        return i

    def corr_probe(self, t: int) -> CorrelationMatrix:
        return CorrelationMatrix(self.corr_values[self.index_of(t)].copy())

    def cov_probe(self, t: int) -> CovarianceMatrix:
        if self.cov_values is None:
            raise InvalidInputError("series was built without covariance probes")
        return CovarianceMatrix(self.cov_values[self.index_of(t)].copy())


def build_probe_series(
    panel: ReturnPanel,
    window_length: int,
    method: str = "pearson",
    with_cov: bool = True,
) -> ProbeSeries:
    """Estimate a probe at every panel time from window_length on.

    Probe correlations are the same bits pearson_correlation (or
    spearman_correlation) would produce on each window. Covariance probes
    always come from raw returns, also when correlations use ranks.
    """
    if method not in ("pearson", "spearman"):
        raise InvalidParameterError(f"unknown probe method {method!r}")
    length = int(window_length)
    if length < 2:
        raise InvalidWindowError("window_length must be at least 2")
    if panel.n_times < length:
        raise InvalidWindowError(
            f"panel has {panel.n_times} rows; window_length {length} is longer"
        )
    if len(panel.times) > 1 and not (np.diff(panel.times) == 1).all():
        raise InvalidInputError("panel times must be contiguous to build probes")

    n_probes = panel.n_times - length + 1
    n = panel.n_assets
    corr = np.empty((n_probes, n, n))
    cov = np.empty((n_probes, n, n)) if with_cov else None
    for i in range(n_probes):
        rows = panel.values[i : i + length]
        if method == "spearman":
            corr[i] = _corr_from_rows(_rank_columns(rows), panel.assets)
        else:
            corr[i] = _corr_from_rows(rows, panel.assets)
        if cov is not None:
            cov[i] = _cov_from_rows(rows)
    return ProbeSeries(
        window_length=length,
        times=panel.times[length - 1 :].copy(),
        corr_values=corr,
        cov_values=cov,
        assets=tuple(panel.assets),
        method=method,
    )


def similarity(c1, c2) -> float:
    """Spectral norm of the difference of two correlation matrices.

    Symmetric in its arguments, zero exactly when the matrices coincide,
    and a pseudometric on correlation matrices of a common dimension.
    """
    v1 = c1.values if hasattr(c1, "values") else np.asarray(c1, dtype=np.float64)
    v2 = c2.values if hasattr(c2, "values") else np.asarray(c2, dtype=np.float64)
    if v1.shape != v2.shape:
        raise InvalidInputError(f"dimension mismatch: {v1.shape} vs {v2.shape}")
    return spectral_norm(v1 - v2)


def pairwise_similarity_grid(probes: ProbeSeries) -> np.ndarray:
    """Raw distance between every pair of probes; symmetric, zero diagonal.

    Quadratic in the number of probes; intended for diagnostics and plot
    data, not for the estimation hot path.
    """
    m = len(probes.times)
    out = np.zeros((m, m))
    for i in range(m - 1):
        diffs = np.ascontiguousarray(probes.corr_values[i + 1 :] - probes.corr_values[i])
        norms = spectral_norms_batch(diffs)
        out[i, i + 1 :] = norms
        out[i + 1 :, i] = norms
    return out


@dataclass(frozen=True)
class SimilarityProfile:
    """Raw, adapted, and corrected similarity of history to a reference time.

    times spans [t0 - horizon, t0]. zeta holds the raw spectral-norm
    distances, zeta_tilde the order-reversed values in [0, 1], zeta_star the
    corrected values: on [t0 - window_length, t0] the probe windows overlap
    the reference window, so zeta_tilde is replaced by its maximum over the
    earlier, reliable range. clamp_events counts zeta_tilde values that had
    to be clamped into [0, 1]; anything nonzero means the 2(K-1) bound was
    exceeded, which is worth investigating upstream.
    """

    t0: int
    horizon: int
    window_length: int
    times: np.ndarray
    zeta: np.ndarray
    zeta_tilde: np.ndarray
    zeta_star: np.ndarray
    clamp_events: int = 0

    def __post_init__(self):
        k = self.horizon + 1
        if not (len(self.times) == len(self.zeta) == len(self.zeta_tilde) == k):
            raise InvalidInputError("profile arrays not aligned with horizon")
        if len(self.zeta_star) != k:
            raise InvalidInputError("profile arrays not aligned with horizon")
        if np.min(self.zeta) < 0.0:
            raise InvalidInputError("raw similarity values must be nonnegative")


def similarity_profile(
    probes: ProbeSeries, t0: int, horizon: int, k: int | None = None
) -> SimilarityProfile:
    """Distance of every probe in [t0 - horizon, t0] to the probe at t0.

    k is the matrix dimension used in the 2(k-1) normalization; it defaults
    to the probe dimension, which is where that bound comes from.
    """
    horizon = int(horizon)
    length = probes.window_length
    if horizon <= length:
        raise InvalidHorizonError(
            f"horizon {horizon} must exceed window_length {length}; the "
            "corrected values would have no reliable region"
        )
    if k is None:
        k = probes.dim
    if k < 2:
        raise InvalidParameterError("k must be at least 2")
    i0 = probes.index_of(t0)
    start = i0 - horizon
    if start < 0:
        raise InvalidInputError(
            f"probes start at {probes.times[0]}; cannot cover [{t0 - horizon}, {t0}]"
        )
    block = probes.corr_values[start : i0 + 1]
    diffs = np.ascontiguousarray(block - block[-1])
    zeta = spectral_norms_batch(diffs)
    zeta[-1] = 0.0

    zeta_tilde = 1.0 - zeta / (2.0 * (k - 1))
    clamped = np.clip(zeta_tilde, 0.0, 1.0)
    clamp_events = int(np.count_nonzero(clamped != zeta_tilde))

    # Windows ending in [t0-L, t0] share rows with the reference window,
    # which drags their distance down artificially; substitute the best
    # value seen outside that overlap.
    reliable = clamped[: horizon - length]
    zeta_star = clamped.copy()
    zeta_star[horizon - length :] = np.max(reliable)

    return SimilarityProfile(
        t0=int(t0),
        horizon=horizon,
        window_length=length,
        times=probes.times[start : i0 + 1].copy(),
        zeta=zeta,
        zeta_tilde=clamped,
        zeta_star=zeta_star,
        clamp_events=clamp_events,
    )


@dataclass(frozen=True)
class WeightScheme:
    """Nonnegative weights over past time steps, summing to one.

    times, when present, aligns each weight with a probe time; the plain
    exponential scheme carries no times and weights[0] belongs to the most
    recent observation.
    """

    weights: np.ndarray
    times: np.ndarray | None = None
    t0: int | None = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if weights.ndim != 1 or len(weights) == 0:
            raise InvalidInputError("weights must be a nonempty vector")
        if np.min(weights) < 0.0:
            raise InvalidInputError("weights must be nonnegative")
        if abs(float(np.sum(weights)) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError("weights must sum to 1")
        if self.times is not None and len(self.times) != len(weights):
            raise InvalidInputError("times not aligned with weights")


def weight_scheme(profile: SimilarityProfile) -> WeightScheme:
    """Normalize the corrected similarity values into weights."""
    total = float(np.sum(profile.zeta_star))
    if total <= 0.0:
        raise DegenerateSimilarityError(
            "all corrected similarity values are zero; no weighting possible"
        )
    return WeightScheme(
        weights=profile.zeta_star / total,
        times=profile.times,
        t0=profile.t0,
    )


def restrict_top_s(scheme: WeightScheme, s: int) -> WeightScheme:
    """Keep only the surplus above the s-th largest weight, renormalized.

    Entries exactly at the threshold get weight zero, so at most s-1 stay
    strictly positive when the threshold value is unique.
    """
    s = int(s)
    n = len(scheme.weights)
    if s < 1 or s > n:
        raise InvalidParameterError(f"s must be in [1, {n}], got {s}")
    threshold = np.partition(scheme.weights, n - s)[n - s]
    surplus = np.maximum(scheme.weights - threshold, 0.0)
    total = float(np.sum(surplus))
    if total <= 0.0:
        raise DegenerateRestrictionError(
            f"no weight exceeds the top-{s} threshold; all weights are equal"
        )
    return WeightScheme(weights=surplus / total, times=scheme.times, t0=scheme.t0)


def _aligned_indices(probes: ProbeSeries, scheme: WeightScheme) -> np.ndarray:
    if scheme.times is None:
        raise InvalidInputError("weight scheme carries no probe times")
    offsets = np.asarray(scheme.times, dtype=np.int64) - int(probes.times[0])
    if len(offsets) and (offsets.min() < 0 or offsets.max() >= len(probes.times)):
        raise InvalidInputError("weight times not covered by the probe series")
    return offsets


def _weighted_probe_sum(values: np.ndarray, offsets: np.ndarray, w: np.ndarray) -> np.ndarray:
    nz = w > 0.0
    return np.einsum("t,tij->ij", w[nz], values[offsets[nz]])


def weighted_correlation(probes: ProbeSeries, scheme: WeightScheme) -> CorrelationMatrix:
    """Convex combination of the probe correlation matrices."""
    offsets = _aligned_indices(probes, scheme)
    est = _weighted_probe_sum(probes.corr_values, offsets, scheme.weights)
    est = np.clip(est, -1.0, 1.0)
    np.fill_diagonal(est, 1.0)
    return CorrelationMatrix(est)


def weighted_covariance(probes: ProbeSeries, scheme: WeightScheme) -> CovarianceMatrix:
    """Convex combination of the probe covariance matrices."""
    if probes.cov_values is None:
        raise InvalidInputError("series was built without covariance probes")
    offsets = _aligned_indices(probes, scheme)
    return CovarianceMatrix(_weighted_probe_sum(probes.cov_values, offsets, scheme.weights))


@dataclass(frozen=True)
class SimilaritySettings:
    """Knobs for the similarity-weighted estimator.

    horizon None means all history available in the probe series. top_s
    None disables the restriction.
    """

    window_length: int = 50
    top_s: int | None = 300
    horizon: int | None = None
    method: str = "pearson"

    def __post_init__(self):
        if self.window_length < 2:
            raise InvalidParameterError("window_length must be at least 2")
        if self.top_s is not None and self.top_s < 1:
            raise InvalidParameterError("top_s must be at least 1")
        if self.horizon is not None and self.horizon <= self.window_length:
            raise InvalidParameterError("horizon must exceed window_length")
        if self.method not in ("pearson", "spearman"):
            raise InvalidParameterError(f"unknown probe method {self.method!r}")


def similarity_weights(
    probes: ProbeSeries, t0: int, settings: SimilaritySettings
) -> WeightScheme:
    """Profile -> normalized weights -> optional top-s restriction, at t0."""
    horizon = settings.horizon
    if horizon is None:
        horizon = int(t0) - int(probes.times[0])
    profile = similarity_profile(probes, t0, horizon)
    scheme = weight_scheme(profile)
    if settings.top_s is not None:
        scheme = restrict_top_s(scheme, settings.top_s)
    return scheme


def similarity_weighted_correlation(
    probes: ProbeSeries, t0: int, settings: SimilaritySettings
) -> CorrelationMatrix:
    return weighted_correlation(probes, similarity_weights(probes, t0, settings))


def similarity_weighted_covariance(
    probes: ProbeSeries, t0: int, settings: SimilaritySettings
) -> CovarianceMatrix:
    return weighted_covariance(probes, similarity_weights(probes, t0, settings))


def exponential_weights(n: int, lam: float) -> WeightScheme:
    """Geometric weights lam^(j-1), j=1 most recent, normalized to sum 1."""
    n = int(n)
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    if not 0.0 < lam < 1.0:
        raise InvalidParameterError(f"lambda must lie in (0, 1), got {lam}")
    j = np.arange(n, dtype=np.float64)
    weights = lam**j * (1.0 - lam) / (1.0 - lam**n)
    return WeightScheme(weights=weights / np.sum(weights))


def _exponential_window(panel: ReturnPanel, t0: int, n: int) -> np.ndarray:
    i0, i1 = panel.row_range(int(t0) - n + 1, int(t0))
    if i1 - i0 != n or panel.times[i1 - 1] != t0:
        raise InvalidWindowError(
            f"panel does not cover the {n} returns ending at time {t0}"
        )
    return panel.values[i0:i1]


def _exponential_moments(rows: np.ndarray, n: int, lam: float) -> np.ndarray:
    # weights[0] belongs to j=1, the most recent row, which sits last.
    w_asc = exponential_weights(n, lam).weights[::-1]
    mean = w_asc @ rows
    centered = rows - mean
    # A constant column has zero variance by definition; rounding in the
    # weighted mean must not manufacture a tiny nonzero one.
    constant = np.ptp(rows, axis=0) == 0.0
    if constant.any():
        centered[:, constant] = 0.0
    second = (centered * w_asc[:, None]).T @ centered
    return (second + second.T) / 2.0


def exponential_correlation(
    panel: ReturnPanel, t0: int, n: int = 300, lam: float = 0.94
) -> CorrelationMatrix:
    """Correlation from exponentially weighted moments about the weighted mean."""
    rows = _exponential_window(panel, t0, n)
    second = _exponential_moments(rows, n, lam)
    var = np.diag(second)
    for j, v in enumerate(var):
        if v == 0.0:
            raise DegenerateColumnError(panel.assets[j])
    scale = np.sqrt(var)
    corr = np.clip(second / np.outer(scale, scale), -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return CorrelationMatrix(corr)


def exponential_covariance(
    panel: ReturnPanel, t0: int, n: int = 300, lam: float = 0.94
) -> CovarianceMatrix:
    """Exponentially weighted covariance (no small-sample correction)."""
    rows = _exponential_window(panel, t0, n)
    return CovarianceMatrix(_exponential_moments(rows, n, lam))
