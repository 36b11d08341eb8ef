"""Command-line interface.

Subcommands: simulate, fit, select, backtest, experiment sim,
experiment finance, report.  Tables print to stdout unless --out names
a directory, in which case files are written there and their paths are
printed.  Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .arma import ArmaCoefficients, ArmaOrder, TimeSeries, simulate
from .criteria import CRITERIA, MmlConfig
from .estimation import FitConfig, fit
from .exceptions import ArmaError
from .experiments import (
    ingest_csv,
    load_finance_config,
    load_sim_config,
    run_financial_experiment,
    run_simulated_experiment,
)
from .report import FORMATS, emit_report, report_from_dict, table_lines
from .selection import CandidateGrid, rolling_forecast, select

logger = logging.getLogger(__name__)


def _parse_float_list(text):
    if text is None or text.strip() == "":
        return []
    return [float(tok) for tok in text.split(",")]


def _parse_span(token):
    if ".." in token:
        lo, hi = token.split("..", 1)
        return (int(lo), int(hi))
    v = int(token)
    return (v, v)


def _parse_grid_arg(text) -> CandidateGrid:
    """Grid syntax 'PLO..PHI,QLO..QHI', e.g. '1..5,0..5' (single ints allowed)."""
    try:
        p_tok, q_tok = text.split(",")
        return CandidateGrid(_parse_span(p_tok), _parse_span(q_tok))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad grid {text!r}; expected like '1..5,0..5'") from exc


def _join(values) -> str:
    return ";".join(repr(float(v)) for v in values)


def _emit_table(args, name: str, header, rows):
    text = table_lines(args.format, header, rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        ext = {"csv": "csv", "markdown": "md", "jsonl": "jsonl"}[args.format]
        path = os.path.join(args.out, f"{name}.{ext}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def _load_series(args) -> TimeSeries:
    return ingest_csv(args.input, args.column, args.date_column)


def _fit_config(args) -> FitConfig:
    return FitConfig(objective_kind=args.objective, seed=args.seed)


def _cmd_simulate(args) -> int:
    coeffs = ArmaCoefficients(
        _parse_float_list(args.phi), _parse_float_list(args.theta), args.sigma2
    )
    series = simulate(coeffs, args.n, seed=args.seed)
    rows = [[t, float(v)] for t, v in enumerate(series.values)]
    _emit_table(args, f"simulate_seed{args.seed}", ["t", "value"], rows)
    return 0


def _cmd_fit(args) -> int:
    series = _load_series(args)
    order = ArmaOrder(args.p, args.q, allow_white_noise=True)
    model = fit(series, order, _fit_config(args))
    header = ["p", "q", "phi", "theta", "sigma2", "loglik", "css", "converged", "n_obs"]
    row = [
        order.p,
        order.q,
        _join(model.coeffs.phi),
        _join(model.coeffs.theta),
        float(model.coeffs.sigma2),
        float(model.loglik),
        float(model.css),
        model.converged,
        model.n_obs,
    ]
    _emit_table(args, f"fit_p{order.p}q{order.q}", header, [row])
    return 0


def _cmd_select(args) -> int:
    series = _load_series(args)
    grid = _parse_grid_arg(args.grid)
    result = select(series, grid, _fit_config(args), MmlConfig(model_grid_size=len(grid)))
    score_rows = []
    for order in grid.orders():
        if order not in result.fits:
            continue
        score_rows.append([order.p, order.q] + [float(result.scores[c][order]) for c in CRITERIA])
    _emit_table(args, "select_scores", ["p", "q"] + list(CRITERIA), score_rows)
    chosen_rows = [[c, result.chosen[c].p, result.chosen[c].q] for c in CRITERIA]
    _emit_table(args, "select_chosen", ["criterion", "p", "q"], chosen_rows)
    if result.unscorable:
        rows = [[order.p, order.q, reason] for order, reason in result.unscorable]
        _emit_table(args, "select_unscorable", ["p", "q", "reason"], rows)
    return 0


def _cmd_backtest(args) -> int:
    series = _load_series(args)
    if not 0 < args.train < len(series):
        raise ValueError("train size must split the series")
    horizon = args.horizon or (len(series) - args.train)
    if args.train + horizon > len(series):
        raise ValueError("horizon exceeds available observations")
    train = series.slice(0, args.train)
    test = series.slice(args.train, args.train + horizon)
    cfg = _fit_config(args)
    model = fit(train, ArmaOrder(args.p, args.q, allow_white_noise=True), cfg)
    result = rolling_forecast(train, test, model, refit_each_step=args.refit, fit_cfg=cfg)
    header = ["p", "q", "n_train", "n_test", "refit_each_step", "mspe"]
    row = [args.p, args.q, args.train, horizon, args.refit, float(result.mspe)]
    _emit_table(args, f"backtest_p{args.p}q{args.q}", header, [row])
    if args.steps:
        step_rows = [
            [t, float(obs), float(fc), float(se)]
            for t, (obs, fc, se) in enumerate(
                zip(test.values, result.forecasts, result.squared_errors)
            )
        ]
        _emit_table(
            args,
            f"backtest_p{args.p}q{args.q}_steps",
            ["step", "observed", "forecast", "squared_error"],
            step_rows,
        )
    return 0


def _cmd_experiment_sim(args) -> int:
    cfg = load_sim_config(args.config, seed_override=args.seed, jobs_override=args.jobs)
    report = run_simulated_experiment(cfg)
    paths = emit_report(
        report, format=args.format, figure_data=args.figure_data, out_dir=args.out or "."
    )
    for path in paths:
        print(path)
    return 0


def _cmd_experiment_finance(args) -> int:
    cfg = load_finance_config(args.config, seed_override=args.seed, jobs_override=args.jobs)
    assets = []
    for name, path, value_column, date_column in cfg.assets:
        assets.append((name, ingest_csv(path, value_column, date_column)))
    report = run_financial_experiment(
        assets,
        cfg.segmentation,
        cfg.grid,
        fit_cfg=cfg.fit,
        mml_cfg=cfg.mml,
        log_of_mean=cfg.log_of_mean,
        use_log_returns=cfg.log_returns or args.log_returns,
        label=cfg.label,
        master_seed=cfg.master_seed,
        jobs=cfg.parallelism,
    )
    paths = emit_report(
        report, format=args.format, figure_data=args.figure_data, out_dir=args.out or "."
    )
    for path in paths:
        print(path)
    return 0


def _cmd_report(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        report = report_from_dict(json.load(fh))
    paths = emit_report(
        report, format=args.format, figure_data=args.figure_data, out_dir=args.out or "."
    )
    for path in paths:
        print(path)
    return 0


def _add_io_flags(parser, with_format=True):
    parser.add_argument("--out", metavar="DIR", default=None, help="directory for output files")
    if with_format:
        parser.add_argument("--format", choices=FORMATS, default="csv", help="table format")


def _add_series_flags(parser):
    parser.add_argument("--input", required=True, metavar="CSV", help="input series file")
    parser.add_argument("--column", default="value", help="value column name (default: value)")
    parser.add_argument("--date-column", default=None, help="optional date column for ordering")


def _add_fit_flags(parser):
    parser.add_argument(
        "--objective",
        choices=("css", "exact_likelihood"),
        default="exact_likelihood",
        help="estimation objective (default: exact_likelihood)",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for multi-start draws")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armasel",
        description="ARMA model selection by MML87 and penalized likelihood criteria",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an ARMA series to a CSV table")
    p.add_argument("--phi", default="", help="comma-separated AR coefficients")
    p.add_argument("--theta", default="", help="comma-separated MA coefficients")
    p.add_argument("--sigma2", type=float, default=1.0, help="innovation variance")
    p.add_argument("--n", type=int, required=True, help="series length")
    p.add_argument("--seed", type=int, default=0)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit one ARMA order to a series")
    _add_series_flags(p)
    p.add_argument("-p", type=int, required=True, help="AR order")
    p.add_argument("-q", type=int, required=True, help="MA order")
    _add_fit_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("select", help="score a candidate grid and pick per-criterion winners")
    _add_series_flags(p)
    p.add_argument("--grid", default="1..5,0..5", help="candidate orders, e.g. '1..5,0..5'")
    _add_fit_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("backtest", help="rolling one-step forecast over a train/test split")
    _add_series_flags(p)
    p.add_argument("-p", type=int, required=True)
    p.add_argument("-q", type=int, required=True)
    p.add_argument("--train", type=int, required=True, help="training window length")
    p.add_argument("--horizon", type=int, default=None, help="test length (default: remainder)")
    p.add_argument("--refit", action="store_true", help="re-estimate before every step")
    p.add_argument("--steps", action="store_true", help="also emit per-step forecasts")
    _add_fit_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_backtest)

    p = sub.add_parser("experiment", help="run a configured experiment protocol")
    ex = p.add_subparsers(dest="protocol", required=True)

    ps = ex.add_parser("sim", help="simulated-data criterion comparison")
    ps.add_argument("--config", required=True, metavar="FILE", help="YAML experiment config")
    ps.add_argument("--seed", type=int, default=None, help="override the config master seed")
    ps.add_argument("--jobs", type=int, default=None, help="override config parallelism")
    ps.add_argument("--figure-data", action="store_true", help="emit per-T mean-MSPE columns")
    _add_io_flags(ps)
    ps.set_defaults(func=_cmd_experiment_sim)

    pf = ex.add_parser("finance", help="segmented financial-series comparison")
    pf.add_argument("--config", required=True, metavar="FILE", help="YAML finance config")
    pf.add_argument("--seed", type=int, default=None, help="override the config master seed")
    pf.add_argument("--jobs", type=int, default=None, help="override config parallelism")
    pf.add_argument("--log-returns", action="store_true", help="model log returns, not levels")
    pf.add_argument("--figure-data", action="store_true", help="emit per-T mean-MSPE columns")
    _add_io_flags(pf)
    pf.set_defaults(func=_cmd_experiment_finance)

    p = sub.add_parser("report", help="re-emit tables from a saved report JSON")
    p.add_argument("--input", required=True, metavar="JSON", help="canonical report file")
    p.add_argument("--figure-data", action="store_true")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArmaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
