"""Exception hierarchy for simweight.

Every error raised by the library derives from SimweightError, so callers
can catch one type at the boundary (the CLI does exactly that).
"""


class SimweightError(Exception):
    """Base class for all simweight errors."""


class InvalidInputError(SimweightError, ValueError):
    """Malformed input: wrong shape, non-finite entries, misaligned times."""


class InvalidWindowError(InvalidInputError):
    """Estimation window shorter than two rows or outside the panel."""


class DegenerateColumnError(SimweightError):
    """A column has zero sample variance inside the estimation window."""

    def __init__(self, asset: str, message: str | None = None):
        self.asset = asset
        super().__init__(message or f"zero sample variance in column {asset!r}")


class InvalidHorizonError(InvalidInputError):
    """Similarity horizon T does not exceed the probe window length."""


class InvalidParameterError(InvalidInputError):
    """Parameter outside its valid range (decay factor, top-s count, ...)."""


class DegenerateSimilarityError(SimweightError):
    """All corrected similarity values are zero; no weights can be formed."""


class DegenerateRestrictionError(SimweightError):
    """Top-s restriction left no surplus (all weights equal)."""


class SingularCovarianceError(SimweightError):
    """Covariance factorization failed or condition estimate is too large.

    Callers may retry with a small ridge added to the diagonal; the
    backtest does exactly that, once, and flags the retry in its report.
    """


class DegenerateFrontierError(SimweightError):
    """Expected returns are parallel to the ones vector; no unique frontier."""


class PanelParseError(SimweightError):
    """Returns file violates the input grammar. Carries the 1-based line."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")
