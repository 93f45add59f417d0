"""Return panels, symmetric matrix types, and the windowed estimators.

All estimators here are pure functions of their inputs. Values are
validated at construction and never mutated afterwards, so they are safe
to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DegenerateColumnError,
    InvalidInputError,
    InvalidWindowError,
)

CORR_DIAG_TOL = 1e-12
PSD_REL_TOL = 1e-8


@dataclass(frozen=True)
class ReturnPanel:
    """T x N panel of simple daily returns.

    times are integer trading-day steps, strictly increasing. labels, when
    present, carry the original date strings for file round-trips.
    """

    times: np.ndarray
    assets: list[str]
    values: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1:
            raise InvalidInputError("times must be one-dimensional")
        if values.ndim != 2 or values.shape != (len(times), len(self.assets)):
            raise InvalidInputError(
                f"values shape {values.shape} does not match "
                f"{len(times)} times x {len(self.assets)} assets"
            )
        if len(times) > 1 and not (np.diff(times) > 0).all():
            raise InvalidInputError("times must be strictly increasing")
        if len(set(self.assets)) != len(self.assets):
            raise InvalidInputError("duplicate asset identifiers")
        if not np.isfinite(values).all():
            raise InvalidInputError("panel contains non-finite returns")
        if self.labels is not None and len(self.labels) != len(times):
            raise InvalidInputError("labels length does not match times")

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def row_range(self, t_start: int, t_end: int) -> tuple[int, int]:
        """Row slice [i0, i1) covering panel times in [t_start, t_end]."""
        if t_end < t_start:
            raise InvalidWindowError(f"window [{t_start}, {t_end}] is reversed")
        i0 = int(np.searchsorted(self.times, t_start, side="left"))
        i1 = int(np.searchsorted(self.times, t_end, side="right"))
        return i0, i1

    def select_assets(self, indices: np.ndarray) -> "ReturnPanel":
        indices = np.asarray(indices, dtype=np.intp)
        return ReturnPanel(
            times=self.times,
            assets=[self.assets[i] for i in indices],
            values=self.values[:, indices],
            labels=self.labels,
        )


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix; storage is exactly symmetric and finite."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidInputError(f"expected square matrix, got {values.shape}")
        if not np.isfinite(values).all():
            raise InvalidInputError("matrix contains non-finite entries")
        if not np.array_equal(values, values.T):
            raise InvalidInputError("matrix is not exactly symmetric")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def symmetrized(cls, values: np.ndarray) -> "SymMatrix":
        values = np.asarray(values, dtype=np.float64)
        return cls((values + values.T) / 2.0)


def _min_eigenvalue(values: np.ndarray) -> float:
    # LAPACK here is validation plumbing; the similarity measure itself
    # goes through the Jacobi route in eigen.py.
    return float(np.linalg.eigvalsh(values)[0])


@dataclass(frozen=True)
class CorrelationMatrix(SymMatrix):
    """Symmetric, unit diagonal, entries in [-1, 1], PSD up to tolerance."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        n = v.shape[0]
        if np.max(np.abs(np.diag(v) - 1.0)) > CORR_DIAG_TOL:
            raise InvalidInputError("correlation diagonal deviates from 1")
        off = v[~np.eye(n, dtype=bool)]
        if off.size and (np.min(off) < -1.0 or np.max(off) > 1.0):
            raise InvalidInputError("correlation entries outside [-1, 1]")
        if _min_eigenvalue(v) < -PSD_REL_TOL * n:
            raise InvalidInputError("correlation matrix is not PSD within tolerance")


@dataclass(frozen=True)
class CovarianceMatrix(SymMatrix):
    """Symmetric, nonnegative diagonal, PSD up to a trace-relative tolerance."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        diag = np.diag(v)
        if np.min(diag) < 0.0:
            raise InvalidInputError("covariance diagonal has negative entries")
        if _min_eigenvalue(v) < -PSD_REL_TOL * max(float(np.sum(diag)), 0.0):
            raise InvalidInputError("covariance matrix is not PSD within tolerance")


def _window_rows(panel: ReturnPanel, window: tuple[int, int]) -> np.ndarray:
    t_start, t_end = window
    i0, i1 = panel.row_range(t_start, t_end)
    if i1 - i0 < 2:
        raise InvalidWindowError(
            f"window [{t_start}, {t_end}] covers {i1 - i0} rows; need at least 2"
        )
    return panel.values[i0:i1]


def _center_columns(rows: np.ndarray, assets: list[str]) -> np.ndarray:
    """Subtract column means; exactly zero out constant columns."""
    constant = np.ptp(rows, axis=0) == 0.0
    centered = rows - rows.mean(axis=0)
    if constant.any():
        centered[:, constant] = 0.0
    return centered


def _corr_from_rows(rows: np.ndarray, assets: list[str]) -> np.ndarray:
    centered = _center_columns(rows, assets)
    gram = centered.T @ centered
    gram = (gram + gram.T) / 2.0
    var = np.diag(gram)
    for j, v in enumerate(var):
        if v == 0.0:
            raise DegenerateColumnError(assets[j])
    scale = np.sqrt(var)
    corr = gram / np.outer(scale, scale)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def _cov_from_rows(rows: np.ndarray) -> np.ndarray:
    centered = _center_columns(rows, [])
    gram = centered.T @ centered
    gram = (gram + gram.T) / 2.0
    return gram / (rows.shape[0] - 1)


def _rank_columns(rows: np.ndarray) -> np.ndarray:
    ranked = np.empty_like(rows)
    for j in range(rows.shape[1]):
        ranked[:, j] = rankdata(rows[:, j], method="average")
    return ranked


def pearson_correlation(panel: ReturnPanel, window: tuple[int, int]) -> CorrelationMatrix:
    """Product-moment correlation of the panel rows inside the window.

    Raises DegenerateColumnError naming the asset if a column is constant
    in-window; zero-variance data is a caller problem, not something to
    patch silently.
    """
    rows = _window_rows(panel, window)
    return CorrelationMatrix(_corr_from_rows(rows, panel.assets))


def spearman_correlation(panel: ReturnPanel, window: tuple[int, int]) -> CorrelationMatrix:
    """Pearson correlation of in-window column ranks (ties get average rank)."""
    rows = _window_rows(panel, window)
    return CorrelationMatrix(_corr_from_rows(_rank_columns(rows), panel.assets))


def sample_covariance(panel: ReturnPanel, window: tuple[int, int]) -> CovarianceMatrix:
    """Unbiased sample covariance (denominator: window length - 1)."""
    rows = _window_rows(panel, window)
    return CovarianceMatrix(_cov_from_rows(rows))


def mean_pairwise_correlation(
    panel: ReturnPanel, window_length: int
) -> tuple[np.ndarray, np.ndarray]:
    """Rolling mean of pairwise Spearman coefficients.

    For every row position from window_length-1 on, computes the Spearman
    correlation over the trailing window and averages the N(N-1)/2 distinct
    off-diagonal entries. Returns (times, series) aligned with the window
    end rows.
    """
    length = int(window_length)
    if length < 2:
        raise InvalidWindowError("window_length must be at least 2")
    if panel.n_times < length:
        raise InvalidWindowError(
            f"panel has {panel.n_times} rows; window_length {length} is longer"
        )
    if panel.n_assets < 2:
        raise InvalidInputError("need at least two assets for pairwise correlation")
    n = panel.n_assets
    upper = np.triu_indices(n, k=1)
    out = np.empty(panel.n_times - length + 1)
    for pos in range(length - 1, panel.n_times):
        rows = panel.values[pos - length + 1 : pos + 1]
        corr = _corr_from_rows(_rank_columns(rows), panel.assets)
        out[pos - length + 1] = corr[upper].mean()
    return panel.times[length - 1 :].copy(), out
