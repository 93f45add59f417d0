"""File formats: the returns table, flat config files, and report writers.

The returns table is comma-delimited text. The header row is
`date,<asset>,...`; every data row is an ISO-8601 date followed by one
decimal per asset. Rows must be strictly date-sorted, rectangular, and
complete; any violation is a parse error naming the 1-based line. With
prices=True cells are prices and returns are computed as S_t/S_(t-1) - 1,
dropping the first row; forward_fill additionally fills empty price cells
with the last seen price (never returns, and never a leading gap).

All machine-readable output uses 17 significant digits so float64 values
round-trip exactly; human tables round to 4 decimals. Writers are pure
functions of the report objects, so identical runs emit identical bytes.
"""

from __future__ import annotations

import datetime
import os

import numpy as np

from .errors import InvalidParameterError, PanelParseError
from .matrices import ReturnPanel
from .portfolio import BacktestReport
from .simulation import SimulationReport


def _machine(x: float) -> str:
    return f"{float(x):.17g}"


def _human(x: float) -> str:
    return f"{float(x):.4f}"


def _parse_date(cell: str, line: int):
    try:
        return datetime.date.fromisoformat(cell)
    except ValueError:
        raise PanelParseError(line, f"{cell!r} is not an ISO-8601 date") from None


def _parse_number(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise PanelParseError(
            line, f"column {column!r}: {cell!r} is not a decimal number"
        ) from None
    if not np.isfinite(value):
        raise PanelParseError(line, f"column {column!r}: non-finite value {cell!r}")
    return value


def parse_return_table(
    path, prices: bool = False, forward_fill: bool = False
) -> tuple[ReturnPanel, int]:
    """Parse a returns (or prices) table; also report how many gaps were filled."""
    if forward_fill and not prices:
        raise InvalidParameterError(
            "forward_fill fills price gaps; it needs prices input"
        )
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise PanelParseError(1, "empty file")

    header = lines[0].split(",")
    if header[0] != "date":
        raise PanelParseError(1, f"first header cell must be 'date', got {header[0]!r}")
    assets = [cell.strip() for cell in header[1:]]
    if not assets or any(not a for a in assets):
        raise PanelParseError(1, "header must name at least one nonempty asset")
    if len(set(assets)) != len(assets):
        raise PanelParseError(1, "duplicate asset identifiers in header")
    n = len(assets)

    dates: list[datetime.date] = []
    labels: list[str] = []
    rows: list[list[float]] = []
    fills = 0
    last_prices: list[float | None] = [None] * n
    for offset, raw in enumerate(lines[1:]):
        line = offset + 2
        cells = raw.split(",")
        if len(cells) != n + 1:
            raise PanelParseError(line, f"expected {n + 1} cells, found {len(cells)}")
        date = _parse_date(cells[0], line)
        if dates:
            if date == dates[-1]:
                raise PanelParseError(line, f"duplicate date {date.isoformat()}")
            if date < dates[-1]:
                raise PanelParseError(
                    line,
                    f"dates not ascending ({dates[-1].isoformat()} then {date.isoformat()})",
                )
        row = []
        for j, cell in enumerate(cells[1:]):
            cell = cell.strip()
            if cell == "" and forward_fill:
                if last_prices[j] is None:
                    raise PanelParseError(
                        line, f"column {assets[j]!r}: gap before any price"
                    )
                row.append(last_prices[j])
                fills += 1
                continue
            if cell == "":
                raise PanelParseError(line, f"column {assets[j]!r}: missing value")
            value = _parse_number(cell, line, assets[j])
            if prices and value <= 0.0:
                raise PanelParseError(
                    line, f"column {assets[j]!r}: nonpositive price {cell!r}"
                )
            row.append(value)
        if prices:
            last_prices = list(row)
        dates.append(date)
        labels.append(date.isoformat())
        rows.append(row)

    if not rows:
        raise PanelParseError(2, "no data rows")
    values = np.array(rows, dtype=np.float64)
    if prices:
        if len(rows) < 2:
            raise PanelParseError(2, "need at least two price rows to form returns")
        values = values[1:] / values[:-1] - 1.0
        labels = labels[1:]
    return (
        ReturnPanel(
            times=np.arange(len(labels)),
            assets=assets,
            values=values,
            labels=labels,
        ),
        fills,
    )


def ingest_returns(path, prices: bool = False, forward_fill: bool = False) -> ReturnPanel:
    """Strictly parsed panel; see parse_return_table for the fill count."""
    panel, _ = parse_return_table(path, prices=prices, forward_fill=forward_fill)
    return panel


def _panel_labels(panel: ReturnPanel) -> list[str]:
    if panel.labels is not None:
        return list(panel.labels)
    base = datetime.date(2000, 1, 1)
    return [(base + datetime.timedelta(days=int(t))).isoformat() for t in panel.times]


def write_returns(panel: ReturnPanel, path) -> None:
    """Emit a panel in the ingestible grammar with exact float round-trip."""
    labels = _panel_labels(panel)
    lines = ["date," + ",".join(panel.assets)]
    for label, row in zip(labels, panel.values):
        lines.append(label + "," + ",".join(_machine(v) for v in row))
    _write_lines(path, lines)


def _write_lines(path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def parse_config(path) -> dict:
    """Flat `key = value` config: comments with #, commas make lists.

    Scalars are typed as int, then float, then true/false, then string.
    """
    out: dict[str, object] = {}
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameterError(
                    f"config line {number}: expected 'key = value', got {line!r}"
                )
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise InvalidParameterError(f"config line {number}: empty key")
            if key in out:
                raise InvalidParameterError(f"config line {number}: duplicate key {key!r}")
            out[key] = _typed_value(value.strip(), number)
    return out


def _typed_value(text: str, line: int):
    if "," in text:
        return [_typed_scalar(part.strip(), line) for part in text.split(",")]
    return _typed_scalar(text, line)


def _typed_scalar(text: str, line: int):
    if text == "":
        raise InvalidParameterError(f"config line {line}: empty value")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def write_study_outputs(
    report: SimulationReport, out_dir, raw: bool = False
) -> list[str]:
    """Write the study table, the machine CSV, and optionally raw rows.

    Returns the paths written, for logging.
    """
    paths = []
    table = [
        f"scenario: {report.scenario_kind}   repetitions: {report.completed}/"
        f"{report.repetitions}   seed: {report.master_seed}",
        "",
        f"{'day':>6} {'group':>8} {'true':>8} {'estimator':>12} {'mean':>9} {'std':>9}",
    ]
    for row in report.rows:
        table.append(
            f"{row.eval_day:>6} {row.group:>8} {_human(row.true_value):>8} "
            f"{row.estimator:>12} {_human(row.mean):>9} {_human(row.std):>9}"
        )
    path = os.path.join(out_dir, "study_table.txt")
    _write_lines(path, table)
    paths.append(path)

    csv = ["scenario,seed,repetitions,completed,day,group,true_value,estimator,mean,std,n_obs"]
    for row in report.rows:
        csv.append(
            ",".join(
                [
                    report.scenario_kind,
                    str(report.master_seed),
                    str(report.repetitions),
                    str(report.completed),
                    str(row.eval_day),
                    row.group,
                    _machine(row.true_value),
                    row.estimator,
                    _machine(row.mean),
                    _machine(row.std),
                    str(row.n_obs),
                ]
            )
        )
    path = os.path.join(out_dir, "study_results.csv")
    _write_lines(path, csv)
    paths.append(path)

    if raw:
        lines = ["repetition,day,group,estimator,value"]
        for entry in report.raw_rows:
            lines.append(
                f"{entry.repetition},{entry.eval_day},{entry.group},"
                f"{entry.estimator},{_machine(entry.value)}"
            )
        path = os.path.join(out_dir, "study_raw.csv")
        _write_lines(path, lines)
        paths.append(path)

    if report.diagnostics:
        path = os.path.join(out_dir, "diagnostics.txt")
        _write_lines(path, list(report.diagnostics))
        paths.append(path)
    return paths


def write_backtest_outputs(
    reports: list[BacktestReport], out_dir, raw: bool = False
) -> list[str]:
    """Summary table plus per-horizon date series; optionally all records."""
    paths = []
    table = [
        f"{'strategy':>10} {'estimator':>12} {'horizon':>8} {'mean RV':>10} "
        f"{'mean return':>12} {'records':>8}"
    ]
    csv = [
        "strategy,estimator,seed,horizon,mean_realized_vol,mean_realized_return,"
        "n_records,ridge_events,diagnostics"
    ]
    for report in reports:
        for entry in report.summary:
            table.append(
                f"{report.strategy:>10} {report.estimator:>12} {entry.horizon:>8} "
                f"{_human(entry.mean_realized_vol):>10} "
                f"{_human(entry.mean_realized_return):>12} {entry.n_records:>8}"
            )
            csv.append(
                ",".join(
                    [
                        report.strategy,
                        report.estimator,
                        str(report.seed),
                        str(entry.horizon),
                        _machine(entry.mean_realized_vol),
                        _machine(entry.mean_realized_return),
                        str(entry.n_records),
                        str(report.ridge_events),
                        str(len(report.diagnostics)),
                    ]
                )
            )
    path = os.path.join(out_dir, "backtest_summary.txt")
    _write_lines(path, table)
    paths.append(path)
    path = os.path.join(out_dir, "backtest_summary.csv")
    _write_lines(path, csv)
    paths.append(path)

    for report in reports:
        for horizon in report.horizons:
            lines = ["date,mean_cumulative_return,mean_realized_vol"]
            for date in report.rebalance_dates:
                matching = [
                    r
                    for r in report.records
                    if r.horizon == horizon and r.date == date
                ]
                if not matching:
                    continue
                ret = float(np.mean([r.realized_return for r in matching]))
                vol = float(np.mean([r.realized_vol for r in matching]))
                lines.append(f"{date},{_machine(ret)},{_machine(vol)}")
            name = f"backtest_{report.strategy}_{report.estimator}_h{horizon}.csv"
            path = os.path.join(out_dir, name)
            _write_lines(path, lines)
            paths.append(path)

    if raw:
        lines = [
            "strategy,estimator,date,constellation,horizon,realized_vol,"
            "realized_return,ridged"
        ]
        for report in reports:
            for r in report.records:
                lines.append(
                    ",".join(
                        [
                            report.strategy,
                            report.estimator,
                            str(r.date),
                            str(r.constellation),
                            str(r.horizon),
                            _machine(r.realized_vol),
                            _machine(r.realized_return),
                            str(int(r.ridged)),
                        ]
                    )
                )
        path = os.path.join(out_dir, "backtest_records.csv")
        _write_lines(path, lines)
        paths.append(path)

    diagnostics = [d for report in reports for d in report.diagnostics]
    if diagnostics:
        path = os.path.join(out_dir, "diagnostics.txt")
        _write_lines(path, diagnostics)
        paths.append(path)
    return paths


def write_similarity_outputs(
    times: np.ndarray,
    grid: np.ndarray,
    series_times: np.ndarray,
    series: np.ndarray,
    out_dir,
) -> list[str]:
    """Dense raw-distance grid plus the mean pairwise correlation series."""
    paths = []
    lines = ["time," + ",".join(str(int(t)) for t in times)]
    for t, row in zip(times, grid):
        lines.append(str(int(t)) + "," + ",".join(_machine(v) for v in row))
    path = os.path.join(out_dir, "similarity_grid.csv")
    _write_lines(path, lines)
    paths.append(path)

    lines = ["time,mean_pairwise_correlation"]
    for t, v in zip(series_times, series):
        lines.append(f"{int(t)},{_machine(v)}")
    path = os.path.join(out_dir, "mean_correlation.csv")
    _write_lines(path, lines)
    paths.append(path)
    return paths
