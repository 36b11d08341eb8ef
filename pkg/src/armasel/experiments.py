"""Experiment harness: simulated protocols, financial segmentation, configs.

The simulated protocol draws data-generating parameters uniformly from
the stationary/invertible region under a master seed, simulates
replicated train/test datasets per scenario cell, and aggregates the
criterion comparison; every report echoes the drawn parameter values,
so a run is self-documenting.  The financial protocol cuts observed series into
consecutive train/test segments.  All randomness derives from the
master seed through fixed namespaces, so results are independent of
execution order and parallelism.
"""
from __future__ import annotations

import csv
import datetime
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import __version__
from .arma import ArmaCoefficients, TimeSeries, is_invertible, is_stationary, pacf_to_ar, simulate
from .criteria import MmlConfig
from .estimation import FitConfig
from .report import ExperimentReport, merge_reports
from .selection import CandidateGrid, compare_criteria

logger = logging.getLogger(__name__)

_SAMPLING_MODES = ("box", "pacf")
_MAX_DRAW_ATTEMPTS = 10**4

# Estimation profile used by the experiment protocols: sum-of-squares
# objective with a reduced start count and looser tolerance.  The exact
# likelihood is still evaluated once per candidate for the criteria; only
# the coefficient search runs on the cheaper objective.  Echoed in every
# report so each table documents how its numbers were produced.
EXPERIMENT_FIT_PROFILE = FitConfig(
    max_iterations=500,
    objective_tolerance=1e-7,
    restart_count=2,
    objective_kind="css",
)

# namespaces for seed derivation
_NS_DGP = 1
_NS_DATA = 2


@dataclass(frozen=True)
class DgpSpec:
    """Data-generating-process specification for simulated experiments.

    Either `fixed` lists explicit coefficient sets, or coefficient
    vectors are drawn per order: phi_draws AR vectors crossed with
    theta_draws MA vectors.  Sampling "box" draws uniformly over the
    stationary/invertible coefficient region by rejection from the
    bounding coefficient box; "pacf" draws uniformly in partial
    autocorrelations instead (never rejects, but is not uniform over
    the coefficient region).
    """

    orders: tuple = ((1, 1),)
    phi_draws: int = 1
    theta_draws: int = 1
    sampling: str = "box"
    sigma2: float = 1.0
    fixed: tuple = None

    def __post_init__(self):
        if self.sampling not in _SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {_SAMPLING_MODES}")
        if self.fixed is None:
            if not self.orders:
                raise ValueError("orders must be non-empty")
            if self.phi_draws < 1 or self.theta_draws < 1:
                raise ValueError("draw counts must be positive")
        if not (self.sigma2 > 0.0):
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """Simulated-experiment configuration; n_in/n_out may sweep several sizes."""

    label: str
    dgp: DgpSpec
    n_in: tuple
    n_out: tuple
    replications: int = 100
    grid: CandidateGrid = field(default_factory=CandidateGrid)
    master_seed: int = 0
    parallelism: int = 1
    fit: FitConfig = EXPERIMENT_FIT_PROFILE
    mml: MmlConfig = None

    def __post_init__(self):
        object.__setattr__(self, "n_in", _as_int_tuple(self.n_in, "n_in"))
        object.__setattr__(self, "n_out", _as_int_tuple(self.n_out, "n_out"))
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.parallelism < 1:
            raise ValueError("parallelism must be positive")


@dataclass(frozen=True)
class SegmentationSpec:
    """Financial segmentation: consecutive train windows with test tails."""

    segment_length: int = 30
    horizon: int = 10
    segment_count: int = 8
    centering: bool = True

    def __post_init__(self):
        if self.segment_length < 1 or self.horizon < 1 or self.segment_count < 1:
            raise ValueError("segmentation sizes must be positive")

    @property
    def required_length(self) -> int:
        return self.segment_count * self.segment_length + self.horizon


def _as_int_tuple(value, name):
    if isinstance(value, (int, np.integer)):
        value = (int(value),)
    out = tuple(int(v) for v in value)
    if not out or any(v < 1 for v in out):
        raise ValueError(f"{name} must contain positive integers")
    return out


def _rng(master_seed: int, *path) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.PCG64(ss))


def _coefficient_box(length: int) -> np.ndarray:
    # any stationary vector satisfies |c_i| <= C(length, i): coefficients of
    # prod (1 - r_j z) with all |r_j| < 1
    return np.array([math.comb(length, i) for i in range(1, length + 1)], dtype=float)


def draw_coefficients(length: int, rng: np.random.Generator, sampling: str) -> np.ndarray:
    """One stationary coefficient vector of the requested length."""
    if length == 0:
        return np.zeros(0)
    if sampling == "pacf":
        x = rng.uniform(-1.0, 1.0, size=length)
        np.clip(x, -(1.0 - 1e-12), 1.0 - 1e-12, out=x)
        return pacf_to_ar(x)
    bounds = _coefficient_box(length)
    for _ in range(_MAX_DRAW_ATTEMPTS):
        cand = rng.uniform(-bounds, bounds)
        if is_stationary(cand):
            return cand
    raise ValueError(
        f"cannot find stationary draw in {_MAX_DRAW_ATTEMPTS} attempts (length {length})"
    )


def draw_dgp_combos(dgp: DgpSpec, master_seed: int):
    """Labelled coefficient combinations, deterministic in the master seed.

    For sampled specs, each order gets phi_draws AR vectors crossed with
    theta_draws MA vectors, labelled "arma(p,q) phi{i},theta{j}".
    """
    if dgp.fixed is not None:
        combos = []
        for idx, coeffs in enumerate(dgp.fixed):
            combos.append((f"dgp{idx + 1}", coeffs))
        return combos
    combos = []
    for order_idx, (p, q) in enumerate(dgp.orders):
        phis = [
            draw_coefficients(p, _rng(master_seed, _NS_DGP, order_idx, 0, i), dgp.sampling)
            for i in range(dgp.phi_draws)
        ]
        thetas = [
            draw_coefficients(q, _rng(master_seed, _NS_DGP, order_idx, 1, j), dgp.sampling)
            for j in range(dgp.theta_draws if q > 0 else 1)
        ]
        for i, phi in enumerate(phis):
            for j, theta in enumerate(thetas):
                label = f"arma({p},{q}) phi{i + 1}"
                if q > 0:
                    label += f",theta{j + 1}"
                combos.append((label, ArmaCoefficients(phi, theta, dgp.sigma2)))
    return combos


def run_simulated_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Full simulated protocol: one scenario row per (combo, N, T) cell."""
    combos = draw_dgp_combos(cfg.dgp, cfg.master_seed)
    mml_cfg = cfg.mml or MmlConfig(model_grid_size=len(cfg.grid))
    rows = []
    for combo_idx, (combo_label, coeffs) in enumerate(combos):
        for n in cfg.n_in:
            for t in cfg.n_out:
                datasets = []
                for rep in range(cfg.replications):
                    rng = _rng(cfg.master_seed, _NS_DATA, combo_idx, n, t, rep)
                    y = simulate(coeffs, n + t, seed=rng)
                    datasets.append((y.slice(0, n), y.slice(n, n + t)))
                context = {
                    "dgp": _coeffs_dict(coeffs),
                    "combo": combo_label,
                    "n_in": n,
                    "n_out": t,
                    "replications": cfg.replications,
                    "master_seed": cfg.master_seed,
                }
                label = f"{combo_label} N={n} T={t}"
                rows.append(
                    compare_criteria(
                        datasets,
                        cfg.grid,
                        cfg.fit,
                        mml_cfg,
                        label=label,
                        context=context,
                        jobs=cfg.parallelism,
                    )
                )
    echo = config_echo(cfg, combos)
    return merge_reports(cfg.label, rows, config_echo=echo, master_seed=cfg.master_seed)


def config_echo(cfg: ExperimentConfig, combos) -> dict:
    return {
        "label": cfg.label,
        "n_in": list(cfg.n_in),
        "n_out": list(cfg.n_out),
        "replications": cfg.replications,
        "grid": {"p": list(cfg.grid.p_range), "q": list(cfg.grid.q_range)},
        "master_seed": cfg.master_seed,
        "sampling": cfg.dgp.sampling if cfg.dgp.fixed is None else "fixed",
        "dgp_values": [{"combo": lbl, **_coeffs_dict(c)} for lbl, c in combos],
        "fit": {
            "objective_kind": cfg.fit.objective_kind,
            "max_iterations": cfg.fit.max_iterations,
            "objective_tolerance": cfg.fit.objective_tolerance,
            "restart_count": cfg.fit.restart_count,
            "pacf_bound": cfg.fit.pacf_bound,
            "seed": cfg.fit.seed,
        },
        "version": __version__,
    }


def _coeffs_dict(coeffs: ArmaCoefficients) -> dict:
    return {
        "order": [len(coeffs.phi), len(coeffs.theta)],
        "phi": [float(x) for x in coeffs.phi],
        "theta": [float(x) for x in coeffs.theta],
        "sigma2": float(coeffs.sigma2),
    }


# ---------------------------------------------------------------------------
# financial protocol


def ingest_csv(path, value_column: str, date_column: str = None) -> TimeSeries:
    """Read one numeric column (optionally date-ordered) into a TimeSeries.

    Rows are kept in file order unless date_column is given, in which
    case rows sort by parsed ISO date.  A missing or unparseable value
    is an error naming the offending row (1-based file line numbers,
    header = line 1); an empty data section is an error.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or value_column not in reader.fieldnames:
            raise ValueError(f"column {value_column!r} not found in {path}")
        if date_column is not None and date_column not in reader.fieldnames:
            raise ValueError(f"column {date_column!r} not found in {path}")
        for row in reader:
            line_no = reader.line_num  # physical file line, header = line 1
            raw = row.get(value_column)
            if raw is None or raw.strip() == "":
                raise ValueError(f"missing value at row {line_no}, column {value_column!r}")
            try:
                value = float(raw)
            except ValueError as exc:
                raise ValueError(
                    f"unparseable number {raw!r} at row {line_no}, column {value_column!r}"
                ) from exc
            if date_column is not None:
                raw_date = (row.get(date_column) or "").strip()
                if not raw_date:
                    raise ValueError(f"missing value at row {line_no}, column {date_column!r}")
                try:
                    date = datetime.date.fromisoformat(raw_date)
                except ValueError as exc:
                    raise ValueError(
                        f"unparseable date {raw_date!r} at row {line_no}, column {date_column!r}"
                    ) from exc
                rows.append((date, value))
            else:
                rows.append((None, value))
    if not rows:
        raise ValueError(f"empty series in {path}")
    if date_column is not None:
        rows.sort(key=lambda r: r[0])
        labels = tuple(r[0].isoformat() for r in rows)
    else:
        labels = None
    return TimeSeries(np.array([r[1] for r in rows]), labels)


def log_returns(series: TimeSeries) -> TimeSeries:
    """Log-return transform of a positive level series (length n-1)."""
    values = series.values
    if len(values) < 2:
        raise ValueError("series too short")
    if np.any(values <= 0.0):
        raise ValueError("log returns require positive levels")
    out = np.diff(np.log(values))
    labels = series.labels[1:] if series.labels is not None else None
    return TimeSeries(out, labels)


def segment_series(series: TimeSeries, spec: SegmentationSpec):
    """Consecutive (train, test) segments from the start of the series.

    Train windows tile without overlap; each test window is the horizon
    immediately following its train window.  Centering subtracts the
    train-window mean from both train and test.  Raises ValueError
    "series too short" when the series cannot host all segments.
    """
    if len(series) < spec.required_length:
        raise ValueError("series too short")
    out = []
    n, t = spec.segment_length, spec.horizon
    for seg in range(spec.segment_count):
        lo = seg * n
        train = series.values[lo : lo + n].copy()
        test = series.values[lo + n : lo + n + t].copy()
        if spec.centering:
            center = float(np.mean(train))
            train -= center
            test -= center
        out.append((TimeSeries(train), TimeSeries(test)))
    return out


def run_financial_experiment(
    assets,
    spec: SegmentationSpec,
    grid: CandidateGrid,
    fit_cfg: FitConfig = None,
    mml_cfg: MmlConfig = None,
    log_of_mean: bool = False,
    use_log_returns: bool = False,
    label: str = "financial",
    master_seed: int = 0,
    jobs: int = 1,
) -> ExperimentReport:
    """Segment each asset and compare criteria across its segments.

    assets: iterable of (name, TimeSeries).  Per-asset rows report win
    counts over segments and the mean of log(MSPE) per criterion (the
    log-of-mean alternative sits behind log_of_mean).  Series are used
    in levels unless use_log_returns preprocesses them first.  Assets
    whose series is too short, or whose segments all fail (e.g.
    constant series), are skipped with a logged warning.
    """
    fit_cfg = fit_cfg or EXPERIMENT_FIT_PROFILE
    mml_cfg = mml_cfg or MmlConfig(model_grid_size=len(grid))
    metric = "log_of_mean_mspe" if log_of_mean else "log_mspe"
    rows = []
    skipped = []
    for name, series in assets:
        try:
            if use_log_returns:
                series = log_returns(series)
            datasets = segment_series(series, spec)
        except ValueError as exc:
            logger.warning("asset %s skipped: %s", name, exc)
            skipped.append({"asset": name, "reason": str(exc)})
            continue
        context = {
            "asset": name,
            "n_in": spec.segment_length,
            "n_out": spec.horizon,
            "segments": spec.segment_count,
            "centering": spec.centering,
            "master_seed": master_seed,
        }
        row = compare_criteria(
            datasets,
            grid,
            fit_cfg,
            mml_cfg,
            label=name,
            metric=metric,
            context=context,
            jobs=jobs,
        )
        scenario = row.scenarios[0]
        if scenario.failures == len(datasets):
            reason = scenario.failure_reasons[0] if scenario.failure_reasons else "all segments failed"
            logger.warning("asset %s skipped: %s", name, reason)
            skipped.append({"asset": name, "reason": reason})
            continue
        rows.append(row)
    if not rows:
        raise ValueError("no usable assets")
    echo = {
        "label": label,
        "segmentation": {
            "segment_length": spec.segment_length,
            "horizon": spec.horizon,
            "segment_count": spec.segment_count,
            "centering": spec.centering,
        },
        "grid": {"p": list(grid.p_range), "q": list(grid.q_range)},
        "metric": metric,
        "log_returns": use_log_returns,
        "master_seed": master_seed,
        "skipped_assets": skipped,
        "fit": {
            "objective_kind": fit_cfg.objective_kind,
            "max_iterations": fit_cfg.max_iterations,
            "objective_tolerance": fit_cfg.objective_tolerance,
            "restart_count": fit_cfg.restart_count,
            "pacf_bound": fit_cfg.pacf_bound,
            "seed": fit_cfg.seed,
        },
        "version": __version__,
    }
    return merge_reports(label, rows, config_echo=echo, master_seed=master_seed)


# ---------------------------------------------------------------------------
# config files


def _parse_grid(raw) -> CandidateGrid:
    if raw is None:
        return CandidateGrid()
    return CandidateGrid(tuple(raw["p"]), tuple(raw["q"]))


def _parse_fit(raw) -> FitConfig:
    if raw is None:
        return EXPERIMENT_FIT_PROFILE
    allowed = {
        "max_iterations",
        "objective_tolerance",
        "restart_count",
        "pacf_bound",
        "objective_kind",
        "seed",
    }
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown fit settings: {sorted(unknown)}")
    base = {
        "max_iterations": EXPERIMENT_FIT_PROFILE.max_iterations,
        "objective_tolerance": EXPERIMENT_FIT_PROFILE.objective_tolerance,
        "restart_count": EXPERIMENT_FIT_PROFILE.restart_count,
        "objective_kind": EXPERIMENT_FIT_PROFILE.objective_kind,
    }
    base.update(raw)
    return FitConfig(**base)


def _parse_mml(raw) -> MmlConfig:
    if raw is None:
        return None
    allowed = {"accuracy_quantum", "model_grid_size", "include_constant_terms"}
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown mml settings: {sorted(unknown)}")
    return MmlConfig(**raw)


def load_sim_config(path, seed_override: int = None, jobs_override: int = None) -> ExperimentConfig:
    """Parse a simulated-experiment YAML config (schema in the README)."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a mapping")
    dgp_raw = raw.get("dgp") or {}
    if "fixed" in dgp_raw:
        fixed = tuple(
            ArmaCoefficients(d.get("phi", []), d.get("theta", []), d.get("sigma2", 1.0))
            for d in dgp_raw["fixed"]
        )
        dgp = DgpSpec(fixed=fixed, sigma2=1.0)
    else:
        dgp = DgpSpec(
            orders=tuple(tuple(o) for o in dgp_raw.get("orders", [[1, 1]])),
            phi_draws=int(dgp_raw.get("phi_draws", 1)),
            theta_draws=int(dgp_raw.get("theta_draws", 1)),
            sampling=dgp_raw.get("sampling", "box"),
            sigma2=float(dgp_raw.get("sigma2", 1.0)),
        )
    return ExperimentConfig(
        label=str(raw.get("label", "experiment")),
        dgp=dgp,
        n_in=raw.get("n_in", 100),
        n_out=raw.get("n_out", 10),
        replications=int(raw.get("replications", 100)),
        grid=_parse_grid(raw.get("grid")),
        master_seed=int(raw["master_seed"] if seed_override is None else seed_override),
        parallelism=int(raw.get("parallelism", 1) if jobs_override is None else jobs_override),
        fit=_parse_fit(raw.get("fit")),
        mml=_parse_mml(raw.get("mml")),
    )


@dataclass(frozen=True)
class FinanceConfig:
    """Parsed financial-experiment configuration."""

    label: str
    assets: tuple  # of (name, path, value_column, date_column)
    segmentation: SegmentationSpec
    grid: CandidateGrid
    master_seed: int
    parallelism: int
    fit: FitConfig
    mml: MmlConfig
    log_of_mean: bool
    log_returns: bool


def load_finance_config(path, seed_override: int = None, jobs_override: int = None) -> FinanceConfig:
    """Parse a financial-experiment YAML config (schema in the README)."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a mapping")
    assets_raw = raw.get("assets")
    if not assets_raw:
        raise ValueError("finance config needs a non-empty 'assets' list")
    assets = tuple(
        (
            str(a.get("name") or a["path"]),
            str(a["path"]),
            str(a.get("value_column", "close")),
            a.get("date_column"),
        )
        for a in assets_raw
    )
    seg_raw = raw.get("segmentation") or {}
    seg = SegmentationSpec(
        segment_length=int(seg_raw.get("segment_length", 30)),
        horizon=int(seg_raw.get("horizon", 10)),
        segment_count=int(seg_raw.get("segment_count", 8)),
        centering=bool(seg_raw.get("centering", True)),
    )
    return FinanceConfig(
        label=str(raw.get("label", "financial")),
        assets=assets,
        segmentation=seg,
        grid=_parse_grid(raw.get("grid")),
        master_seed=int(raw.get("master_seed", 0) if seed_override is None else seed_override),
        parallelism=int(raw.get("parallelism", 1) if jobs_override is None else jobs_override),
        fit=_parse_fit(raw.get("fit")),
        mml=_parse_mml(raw.get("mml")),
        log_of_mean=bool(raw.get("log_of_mean", False)),
        log_returns=bool(raw.get("log_returns", False)),
    )
