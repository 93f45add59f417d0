"""Command-line interface: simulate, backtest, and similarity commands.

Each command reads a flat `key = value` config file, runs the matching
engine, and writes its reports into --out. Exit status is 0 only when no
error records were produced; per-record failures land in diagnostics.txt
and on stderr, never silently dropped.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import InvalidParameterError, SimweightError
from .io import (
    parse_config,
    parse_return_table,
    write_backtest_outputs,
    write_similarity_outputs,
    write_study_outputs,
)
from .matrices import mean_pairwise_correlation
from .portfolio import BacktestConfig, run_backtest
from .similarity import build_probe_series, pairwise_similarity_grid
from .simulation import (
    ScenarioSpec,
    StudySettings,
    run_study,
    simulate_returns,
    synthetic_market_panel,
)

SCENARIO_KEYS = {
    "scenario",
    "n_assets",
    "horizon",
    "rho",
    "regimes",
    "regime_length",
    "cross_rho",
    "base",
    "amplitude",
    "period",
    "phase",
}
PANEL_KEYS = SCENARIO_KEYS | {"returns_file", "vol_low", "vol_high"}
SIMULATE_KEYS = SCENARIO_KEYS | {
    "eval_days",
    "repetitions",
    "seed",
    "window_length",
    "top_s",
    "method",
    "unweighted_window",
    "ewma_lambda",
    "ewma_n",
}
BACKTEST_KEYS = PANEL_KEYS | {
    "seed",
    "strategy",
    "estimator",
    "rebalance_dates",
    "horizons",
    "window_length",
    "top_s",
    "sim_horizon",
    "method",
    "unweighted_window",
    "ewma_lambda",
    "ewma_n",
    "mu_window",
    "target_margin",
    "n_constellations",
    "constellation_size",
}
SIMILARITY_KEYS = PANEL_KEYS | {"seed", "window_length", "method"}


def _as_tuple(value) -> tuple:
    return tuple(value) if isinstance(value, list) else (value,)


def _int_tuple(value) -> tuple[int, ...]:
    return tuple(int(v) for v in _as_tuple(value))


def _check_keys(cfg: dict, allowed: set, command: str) -> None:
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise InvalidParameterError(f"unknown config keys for {command}: {unknown}")


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise InvalidParameterError(f"config is missing required key {key!r}")
    return cfg[key]


def _parse_regimes(value) -> tuple[tuple[float, float], ...]:
    pairs = []
    for part in _as_tuple(value):
        if not isinstance(part, str) or ":" not in part:
            raise InvalidParameterError(
                "regimes must be colon pairs, e.g. 0.7:0.3,0.5:0.5"
            )
        first, _, second = part.partition(":")
        pairs.append((float(first), float(second)))
    return tuple(pairs)


def _scenario_from_config(cfg: dict) -> ScenarioSpec:
    kind = _require(cfg, "scenario")
    kwargs = {}
    for key in (
        "n_assets",
        "horizon",
        "rho",
        "regime_length",
        "cross_rho",
        "base",
        "amplitude",
        "period",
        "phase",
    ):
        if key in cfg:
            kwargs[key] = cfg[key]
    if "regimes" in cfg:
        kwargs["regimes"] = _parse_regimes(cfg["regimes"])
    return ScenarioSpec(kind=str(kind), **kwargs)


def _method(cfg: dict, args) -> str:
    if args.spearman:
        return "spearman"
    return str(cfg.get("method", "pearson"))


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _panel_from_config(cfg: dict, seed: int, args):
    if "returns_file" in cfg:
        panel, fills = parse_return_table(
            str(cfg["returns_file"]),
            prices=args.prices,
            forward_fill=args.forward_fill,
        )
        if args.forward_fill:
            print(f"filled {fills} price gaps")
        return panel
    if "vol_low" in cfg or "vol_high" in cfg:
        return synthetic_market_panel(
            _scenario_from_config(cfg),
            seed,
            vol_low=float(cfg.get("vol_low", 0.01)),
            vol_high=float(cfg.get("vol_high", 0.03)),
        )
    return simulate_returns(_scenario_from_config(cfg), seed)


def _run_simulate(cfg: dict, args) -> int:
    _check_keys(cfg, SIMULATE_KEYS, "simulate")
    spec = _scenario_from_config(cfg)
    settings = StudySettings(
        window_length=int(cfg.get("window_length", 50)),
        top_s=int(cfg.get("top_s", 300)),
        method=_method(cfg, args),
        unweighted_window=int(cfg.get("unweighted_window", 300)),
        ewma_n=int(cfg.get("ewma_n", 300)),
        ewma_lambda=float(cfg.get("ewma_lambda", 0.94)),
    )
    report = run_study(
        spec,
        _int_tuple(_require(cfg, "eval_days")),
        int(_require(cfg, "repetitions")),
        settings,
        master_seed=_seed(cfg, args),
        keep_raw=args.raw,
    )
    for path in write_study_outputs(report, args.out, raw=args.raw):
        print(path)
    for diagnostic in report.diagnostics:
        print(diagnostic, file=sys.stderr)
    return 1 if report.diagnostics else 0


def _run_backtest(cfg: dict, args) -> int:
    _check_keys(cfg, BACKTEST_KEYS, "backtest")
    seed = _seed(cfg, args)
    panel = _panel_from_config(cfg, seed, args)
    strategies = tuple(str(s) for s in _as_tuple(cfg.get("strategy", "mvp")))
    estimators = tuple(str(e) for e in _as_tuple(cfg.get("estimator", "similarity")))
    common = dict(
        rebalance_dates=_int_tuple(_require(cfg, "rebalance_dates")),
        horizons=_int_tuple(cfg.get("horizons", [14, 28, 56])),
        window_length=int(cfg.get("window_length", 50)),
        top_s=(None if cfg.get("top_s") == "none" else int(cfg.get("top_s", 300))),
        sim_horizon=(int(cfg["sim_horizon"]) if "sim_horizon" in cfg else None),
        method=_method(cfg, args),
        unweighted_window=int(cfg.get("unweighted_window", 300)),
        ewma_lambda=float(cfg.get("ewma_lambda", 0.94)),
        ewma_n=int(cfg.get("ewma_n", 300)),
        mu_window=int(cfg.get("mu_window", 14)),
        target_margin=float(cfg.get("target_margin", 0.05)),
        n_constellations=int(cfg.get("n_constellations", 10)),
        constellation_size=int(cfg.get("constellation_size", 100)),
    )
    reports = []
    for strategy in strategies:
        for estimator in estimators:
            config = BacktestConfig(strategy=strategy, estimator=estimator, **common)
            reports.append(run_backtest(panel, config, seed))
    for path in write_backtest_outputs(reports, args.out, raw=args.raw):
        print(path)
    diagnostics = [d for report in reports for d in report.diagnostics]
    for diagnostic in diagnostics:
        print(diagnostic, file=sys.stderr)
    return 1 if diagnostics else 0


def _run_similarity(cfg: dict, args) -> int:
    _check_keys(cfg, SIMILARITY_KEYS, "similarity")
    seed = _seed(cfg, args)
    panel = _panel_from_config(cfg, seed, args)
    window_length = int(cfg.get("window_length", 50))
    probes = build_probe_series(panel, window_length, _method(cfg, args), with_cov=False)
    grid = pairwise_similarity_grid(probes)
    series_times, series = mean_pairwise_correlation(panel, window_length)
    for path in write_similarity_outputs(probes.times, grid, series_times, series, args.out):
        print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simweight",
        description=(
            "Similarity-weighted correlation/covariance estimation: Monte "
            "Carlo studies, portfolio backtests, and similarity profiles."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "Monte Carlo estimator comparison on a synthetic scenario"),
        ("backtest", "portfolio backtest on a returns file or synthetic market"),
        ("similarity", "pairwise similarity grid and mean-correlation series"),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="flat key = value config file")
        sub.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sub.add_argument("--out", default=".", help="output directory")
        sub.add_argument("--raw", action="store_true", help="also write per-repetition/record data")
        sub.add_argument("--spearman", action="store_true", help="rank-based probe correlations")
        sub.add_argument("--prices", action="store_true", help="returns_file holds prices")
        sub.add_argument(
            "--forward-fill",
            dest="forward_fill",
            action="store_true",
            help="fill price gaps with the last seen price",
        )
    args = parser.parse_args(argv)

    runners = {
        "simulate": _run_simulate,
        "backtest": _run_backtest,
        "similarity": _run_similarity,
    }
    try:
        cfg = parse_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return runners[args.command](cfg, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimweightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
