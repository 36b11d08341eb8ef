"""Order selection over a candidate grid and rolling-forecast comparison.

Every candidate is fitted once and scored under all five criteria; a
candidate that cannot be fitted or scored (fit failure, Fisher matrix
not positive definite, sample too small for a penalty) is dropped from
every criterion alike, so all five choose from the same candidate set.
The forecast comparison backtests each criterion's chosen model by
one-step rolling forecasts and counts, per dataset, which criteria
attained the minimum mean squared prediction error.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .arma import ArmaOrder, TimeSeries, residuals_css
from .criteria import CRITERIA, MmlConfig, message_length, penalized_criterion
from .estimation import FitConfig, FittedModel, fit
from .exceptions import ArmaError
from .report import ExperimentReport, build_scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BacktestResult:
    """Rolling-forecast outcome over one test window."""

    mspe: float
    squared_errors: np.ndarray
    forecasts: np.ndarray


@dataclass(frozen=True)
class CandidateGrid:
    """Inclusive order ranges; the default 1..5 x 0..5 grid has 30 candidates."""

    p_range: tuple = (1, 5)
    q_range: tuple = (0, 5)

    def __post_init__(self):
        for name, (lo, hi) in (("p_range", self.p_range), ("q_range", self.q_range)):
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi")
        object.__setattr__(self, "p_range", (int(self.p_range[0]), int(self.p_range[1])))
        object.__setattr__(self, "q_range", (int(self.q_range[0]), int(self.q_range[1])))

    def orders(self):
        out = []
        for p in range(self.p_range[0], self.p_range[1] + 1):
            for q in range(self.q_range[0], self.q_range[1] + 1):
                out.append(ArmaOrder(p, q, allow_white_noise=True))
        return out

    def __len__(self):
        return (self.p_range[1] - self.p_range[0] + 1) * (self.q_range[1] - self.q_range[0] + 1)


@dataclass
class SelectionResult:
    """Per-criterion choices and the full score table over the grid."""

    chosen: dict
    scores: dict
    fits: dict
    unscorable: list = field(default_factory=list)


def _tie_key(item):
    order, value = item
    return (value, order.p + order.q, order.p)


def select(
    series: TimeSeries,
    grid: CandidateGrid,
    fit_cfg: FitConfig = None,
    mml_cfg: MmlConfig = None,
) -> SelectionResult:
    """Fit and score every candidate order; pick the argmin per criterion.

    Ties break to the smaller p + q, then smaller p.  Candidates that
    error anywhere (fit, Fisher evaluation, penalty preconditions) are
    excluded from all five criteria and logged.

    Raises
    ------
    ValueError
        "no scorable model" when every candidate is excluded.
    """
    fit_cfg = fit_cfg or FitConfig()
    mml_cfg = mml_cfg or MmlConfig(model_grid_size=len(grid))
    fits = {}
    scores = {name: {} for name in CRITERIA}
    unscorable = []
    for order in grid.orders():
        try:
            model = fit(series, order, fit_cfg)
            candidate_scores = {"MML87": message_length(model, series, mml_cfg).value}
            for name in ("AIC", "AICc", "BIC", "HQ"):
                candidate_scores[name] = penalized_criterion(
                    name, model.loglik, order, 0, model.n_obs
                ).value
        except (ArmaError, ValueError) as exc:
            unscorable.append((order, str(exc)))
            logger.warning("candidate %s unscorable: %s", order, exc)
            continue
        fits[order] = model
        for name, value in candidate_scores.items():
            scores[name][order] = value
    if not fits:
        reasons = sorted({reason for _, reason in unscorable})
        detail = f" ({'; '.join(reasons)})" if reasons else ""
        raise ValueError(f"no scorable model{detail}")
    chosen = {name: min(scores[name].items(), key=_tie_key)[0] for name in CRITERIA}
    return SelectionResult(chosen=chosen, scores=scores, fits=fits, unscorable=unscorable)


def rolling_forecast(
    train: TimeSeries,
    test: TimeSeries,
    model: FittedModel,
    refit_each_step: bool = False,
    fit_cfg: FitConfig = None,
) -> BacktestResult:
    """One-step rolling forecasts over the test window.

    The default scheme freezes the fitted parameters and rolls only the
    information set: residuals are run over the concatenated
    train + test history, and the forecast of y_i is
    sum phi_j y_{i-j} - sum theta_j e_{i-j}, so the forecast error at
    step i is exactly the one-step residual e_i.  With refit_each_step,
    parameters are re-estimated on the trailing train-length window
    before each step (sensitivity analysis; much slower).
    """
    n_train = len(train)
    t_len = len(test)
    full = np.concatenate([train.values, test.values])
    if refit_each_step:
        forecasts = np.empty(t_len)
        errors = np.empty(t_len)
        cfg = fit_cfg or FitConfig()
        for i in range(t_len):
            lo = i  # trailing window of train length ending at n_train + i - 1
            window = TimeSeries(full[lo : n_train + i])
            step_model = fit(window, model.order, cfg)
            hist = TimeSeries(full[lo : n_train + i + 1])
            eps = residuals_css(step_model.coeffs, hist)
            errors[i] = eps[-1]
            forecasts[i] = full[n_train + i] - eps[-1]
    else:
        eps = residuals_css(model.coeffs, TimeSeries(full))
        errors = eps[n_train:]
        forecasts = test.values - errors
    sq = errors**2
    return BacktestResult(mspe=float(np.mean(sq)), squared_errors=sq, forecasts=forecasts)


def evaluate_dataset(index, train, test, grid, fit_cfg, mml_cfg) -> dict:
    """Select on train, backtest each chosen model on test; plain-dict record."""
    try:
        sel = select(train, grid, fit_cfg, mml_cfg)
        backtests = {}
        entry = {}
        for name in CRITERIA:
            order = sel.chosen[name]
            if order not in backtests:
                backtests[order] = rolling_forecast(train, test, sel.fits[order])
            entry[name] = {
                "order": [order.p, order.q],
                "score": float(sel.scores[name][order]),
                "mspe": float(backtests[order].mspe),
            }
        best = min(entry[name]["mspe"] for name in CRITERIA)
        winners = [name for name in CRITERIA if entry[name]["mspe"] == best]
        return {"index": int(index), "status": "ok", "winners": winners, "criteria": entry}
    except (ArmaError, ValueError) as exc:
        return {"index": int(index), "status": "failed", "reason": str(exc)}


def _evaluate_args(args):
    return evaluate_dataset(*args)


def compare_criteria(
    datasets,
    grid: CandidateGrid,
    fit_cfg: FitConfig = None,
    mml_cfg: MmlConfig = None,
    label: str = "comparison",
    metric: str = "mspe",
    context: dict = None,
    jobs: int = 1,
) -> ExperimentReport:
    """Run the selection-and-backtest loop over (train, test) datasets.

    Datasets failing end to end (e.g. no scorable model) are logged,
    excluded from the aggregates, and counted in the scenario row.
    Records are merged in dataset order, so results are independent of
    the parallelism degree.
    """
    datasets = list(datasets)
    if not datasets:
        raise ValueError("at least one dataset required")
    fit_cfg = fit_cfg or FitConfig()
    mml_cfg = mml_cfg or MmlConfig(model_grid_size=len(grid))
    tasks = [(i, train, test, grid, fit_cfg, mml_cfg) for i, (train, test) in enumerate(datasets)]
    if jobs > 1:
        chunk = max(1, len(tasks) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_evaluate_args, tasks, chunksize=chunk))
    else:
        records = [evaluate_dataset(*t) for t in tasks]
    failed = [r for r in records if r.get("status") != "ok"]
    for r in failed:
        logger.warning("dataset %d excluded: %s", r["index"], r.get("reason"))
    scenario = build_scenario(label, context or {}, metric, CRITERIA, records)
    return ExperimentReport(
        title=label,
        master_seed=(context or {}).get("master_seed", 0),
        criteria=CRITERIA,
        scenarios=[scenario],
        config_echo={},
        version=__version__,
    )
