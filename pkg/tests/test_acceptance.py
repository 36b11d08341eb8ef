"""End-to-end acceptance checks.

Eight criteria, each emitting one PASS/FAIL summary line (collected into
the terminal summary).  Statistical checks run on frozen seed sets; the
final criterion re-runs everything and checks byte-level reproducibility,
with the experiment protocols compared across --jobs 1 vs --jobs 8.
"""
import json
import math
import os
import shutil
import tempfile
import time

import numpy as np
import pytest

from armasel import (
    ArmaCoefficients,
    ArmaOrder,
    CandidateGrid,
    EXPERIMENT_FIT_PROFILE,
    MmlConfig,
    emit_report,
    exact_loglik,
    fisher_matrix,
    penalized_criterion,
    select,
    simulate,
)
from armasel.criteria import lattice_constant, stationarity_volume
from armasel.experiments import (
    DgpSpec,
    ExperimentConfig,
    load_sim_config,
    run_simulated_experiment,
)

from oracles import (
    innovations_loglik,
    mc_stationarity_volume,
    numeric_fisher,
    random_arma,
)


def record(request, line):
    request.config._acceptance_lines.append(line)
    print(line)


def _emit_to_bytes(report):
    out_dir = tempfile.mkdtemp(prefix="accept_")
    try:
        paths = emit_report(report, format="csv", out_dir=out_dir)
        files = {}
        for path in paths:
            with open(path, "rb") as fh:
                files[os.path.basename(path)] = fh.read()
        return files
    finally:
        shutil.rmtree(out_dir, ignore_errors=True)


# --- criterion runners (pure functions of frozen seeds) --------------------


def run_likelihood_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    pairs = []
    worst = 0.0
    for _ in range(500):
        p = int(rng.integers(0, 6))
        q = int(rng.integers(0, 6))
        coeffs = random_arma(rng, p, q)
        n = int(rng.integers(20, 201))
        y = simulate(coeffs, n, seed=rng)
        got = exact_loglik(coeffs, y).loglik
        want = innovations_loglik(coeffs, y)
        worst = max(worst, abs(got - want) / n)
        pairs.append((got, want))
    payload = np.array(pairs).tobytes()
    return payload, worst, time.perf_counter() - t0


FISHER_MODELS = (
    ArmaCoefficients([0.3], [], 1.0),
    ArmaCoefficients([0.5], [], 1.0),
    ArmaCoefficients([0.8], [], 1.0),
    ArmaCoefficients([], [0.3], 1.0),
    ArmaCoefficients([], [0.5], 1.0),
    ArmaCoefficients([], [0.8], 1.0),
    ArmaCoefficients([0.5], [0.4], 1.0),
)


def run_fisher_check():
    t0 = time.perf_counter()
    worst = 0.0
    blobs = []
    for idx, coeffs in enumerate(FISHER_MODELS):
        exact = fisher_matrix(coeffs, 300).entries
        numeric = numeric_fisher(coeffs, 300, 200, seed=2000 + idx)
        # scale-relative deviation: a ratio is meaningless on the exact-zero
        # cross entries, so each entry is judged against sqrt(I_ii * I_jj)
        scale = np.sqrt(np.outer(np.diag(exact), np.diag(exact)))
        worst = max(worst, float(np.max(np.abs(exact - numeric) / scale)))
        blobs.append(exact.tobytes())
        blobs.append(numeric.tobytes())
    return b"".join(blobs), worst, time.perf_counter() - t0


def run_volume_check():
    t0 = time.perf_counter()
    rows = []
    worst = 0.0
    for p in range(1, 5):
        vol = stationarity_volume(p)
        mc = mc_stationarity_volume(p, 10**7, seed=5000 + p)
        worst = max(worst, abs(vol - mc) / vol)
        rows.append((vol, mc))
    payload = np.array(rows).tobytes()
    return payload, worst, time.perf_counter() - t0


def run_criteria_check():
    t0 = time.perf_counter()
    loglik, n = -123.4, 150
    order = ArmaOrder(2, 1)
    m = 2 + 1 + 0 + 1
    g = -2.0 * loglik / n
    hand = {
        "AIC": g + 2.0 * m / n,
        "AICc": g + 2.0 * m / (n - m - 1),
        "BIC": g + m * math.log(n) / n,
        "HQ": g + 2.0 * m * math.log(math.log(n)) / n,
    }
    values = {}
    worst = 0.0
    for name, want in hand.items():
        got = penalized_criterion(name, loglik, order, 0, n).value
        worst = max(worst, abs(got - want))
        values[name] = got
    # white-noise point with zero loglik: penalty only
    aic0 = penalized_criterion("AIC", 0.0, ArmaOrder(1, 0), 0, 100).value
    worst = max(worst, abs(aic0 - 0.04))
    kappas = (lattice_constant(1), lattice_constant(2), lattice_constant(3))
    exact_kappas = (1.0 / 12.0, 5.0 / (36.0 * math.sqrt(3.0)), 19.0 / (192.0 * 2.0 ** (1.0 / 3.0)))
    kappa_exact = kappas == exact_kappas
    payload = repr((sorted(values.items()), aic0, kappas)).encode()
    return payload, worst, kappa_exact, time.perf_counter() - t0


RANKING_CONFIGS = (
    MmlConfig(model_grid_size=9),
    MmlConfig(accuracy_quantum=0.001, model_grid_size=9),
    MmlConfig(accuracy_quantum=0.05, model_grid_size=9),
    MmlConfig(model_grid_size=1000),
    MmlConfig(model_grid_size=9, include_constant_terms=False),
)


def run_ranking_invariance_check():
    t0 = time.perf_counter()
    grid = CandidateGrid(p_range=(1, 3), q_range=(0, 2))
    dgp = ArmaCoefficients([0.5], [0.4], 1.0)
    chosen_all = []
    invariant = True
    for i in range(20):
        y = simulate(dgp, 150, seed=1400 + i)
        picks = []
        for cfg in RANKING_CONFIGS:
            sel = select(y, grid, EXPERIMENT_FIT_PROFILE, cfg)
            picks.append((sel.chosen["MML87"].p, sel.chosen["MML87"].q))
        invariant = invariant and len(set(picks)) == 1
        chosen_all.append(picks)
    payload = repr(chosen_all).encode()
    return payload, invariant, time.perf_counter() - t0


def run_consistency_protocol(parallelism):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        label="consistency-ar2",
        dgp=DgpSpec(orders=(), fixed=(ArmaCoefficients([0.5, 0.3], [], 1.0),)),
        n_in=(50, 200, 800),
        n_out=10,
        replications=100,
        grid=CandidateGrid(),
        master_seed=20210906,
        parallelism=parallelism,
    )
    report = run_simulated_experiment(cfg)
    recovery = {"MML87": [], "BIC": []}
    for s in report.scenarios:
        for name in recovery:
            hits = sum(
                1
                for rec in s.records
                if rec["status"] == "ok" and rec["criteria"][name]["order"] == [2, 0]
            )
            recovery[name].append(hits)
    files = _emit_to_bytes(report)
    return files, recovery, time.perf_counter() - t0


def run_forecast_protocol(parallelism):
    t0 = time.perf_counter()
    cfg = load_sim_config("configs/sim_arma11.yaml", jobs_override=parallelism)
    report = run_simulated_experiment(cfg)
    by_n = {}
    for s in report.scenarios:
        n = s.context["n_in"]
        for rec in s.records:
            if rec["status"] != "ok":
                continue
            for name in ("MML87", "AIC"):
                by_n.setdefault(n, {}).setdefault(name, []).append(
                    rec["criteria"][name]["mspe"]
                )
    means = {
        n: {name: sum(vals) / len(vals) for name, vals in groups.items()}
        for n, groups in sorted(by_n.items())
    }
    wins = sum(1 for n in means if means[n]["MML87"] <= means[n]["AIC"])
    files = _emit_to_bytes(report)
    return files, means, wins, time.perf_counter() - t0


# --- fixtures (jobs=1 runs, shared with the determinism criterion) ----------


@pytest.fixture(scope="module")
def likelihood_run():
    return run_likelihood_check()


@pytest.fixture(scope="module")
def fisher_run():
    return run_fisher_check()


@pytest.fixture(scope="module")
def volume_run():
    return run_volume_check()


@pytest.fixture(scope="module")
def criteria_run():
    return run_criteria_check()


@pytest.fixture(scope="module")
def ranking_run():
    return run_ranking_invariance_check()


@pytest.fixture(scope="module")
def consistency_run():
    return run_consistency_protocol(1)


@pytest.fixture(scope="module")
def forecast_run():
    return run_forecast_protocol(1)


# --- the eight criteria ------------------------------------------------------


def test_criterion_1_likelihood_oracle(request, likelihood_run):
    _, worst, elapsed = likelihood_run
    ok = worst <= 1e-8 and elapsed < 120
    record(
        request,
        f"criterion 1 {'PASS' if ok else 'FAIL'}: exact loglik vs innovations oracle, "
        f"max |diff|/N = {worst:.3e} over 500 models (tol 1e-8), {elapsed:.1f}s (< 120s)",
    )
    assert worst <= 1e-8
    assert elapsed < 120


def test_criterion_2_fisher_matrix(request, fisher_run):
    _, worst, elapsed = fisher_run
    ok = worst <= 0.05 and elapsed < 600
    record(
        request,
        f"criterion 2 {'PASS' if ok else 'FAIL'}: fisher_matrix vs numeric Hessian "
        f"(N=300, 200 reps, 7 models), max scale-relative deviation = {worst:.4f} "
        f"(tol 0.05), {elapsed:.1f}s (< 600s)",
    )
    assert worst <= 0.05
    assert elapsed < 600


def test_criterion_3_stationarity_volumes(request, volume_run):
    _, worst, elapsed = volume_run
    exact_ok = stationarity_volume(1) == 2.0 and stationarity_volume(2) == 4.0
    ok = worst <= 0.02 and exact_ok and elapsed < 300
    record(
        request,
        f"criterion 3 {'PASS' if ok else 'FAIL'}: volumes vs 1e7-draw MC for p=1..4, "
        f"max rel dev = {worst:.4f} (tol 0.02); p=1 -> 2, p=2 -> 4 exact: {exact_ok}; "
        f"{elapsed:.1f}s (< 300s)",
    )
    assert worst <= 0.02
    assert exact_ok
    assert elapsed < 300


def test_criterion_4_criteria_units(request, criteria_run):
    _, worst, kappa_exact, elapsed = criteria_run
    ok = worst <= 1e-12 and kappa_exact
    record(
        request,
        f"criterion 4 {'PASS' if ok else 'FAIL'}: hand-computed penalties, "
        f"max |diff| = {worst:.2e} (tol 1e-12); kappa_1..3 exact: {kappa_exact}",
    )
    assert worst <= 1e-12
    assert kappa_exact
    assert elapsed < 60


def test_criterion_5_ranking_invariance(request, ranking_run):
    _, invariant, elapsed = ranking_run
    record(
        request,
        f"criterion 5 {'PASS' if invariant else 'FAIL'}: MML87 argmin unchanged under "
        f"quantum/model-prior changes on 20 seeded datasets ({len(RANKING_CONFIGS)} "
        f"configs), {elapsed:.1f}s",
    )
    assert invariant


def test_criterion_6_consistency_trend(request, consistency_run):
    # pilot at master_seed=20210906 realized MML87 (30, 62, 86) and
    # BIC (40, 73, 94) over N in {50, 200, 800}
    _, recovery, elapsed = consistency_run
    trend_ok = all(
        recovery[name][0] <= recovery[name][1] <= recovery[name][2] for name in recovery
    )
    final_ok = all(recovery[name][2] >= 60 for name in recovery)
    ok = trend_ok and final_ok and elapsed < 900
    record(
        request,
        f"criterion 6 {'PASS' if ok else 'FAIL'}: AR(2) recovery /100 over N=(50,200,800): "
        f"MML87 {tuple(recovery['MML87'])}, BIC {tuple(recovery['BIC'])}; "
        f"non-decreasing: {trend_ok}, >=60 at N=800: {final_ok}; "
        f"{elapsed:.0f}s (< 900s)",
    )
    assert trend_ok
    assert final_ok
    assert elapsed < 900


def test_criterion_7_forecast_pattern(request, forecast_run):
    # The shipped configs/sim_arma11.yaml protocol (master_seed=20210907)
    # realizes MML87 <= AIC at all six N values, per-N pooled means
    # (MML87, AIC): N=50 (1.1133, 1.1866), N=100 (1.0367, 1.0758),
    # N=150 (1.0236, 1.0679), N=200 (1.0163, 1.0476),
    # N=300 (0.9989, 1.0200), N=500 (1.0033, 1.0204); 0 of 6000
    # forecast records failed.  The contractual floor is 5 of 6.
    _, means, wins, elapsed = forecast_run
    ok = wins >= 5 and elapsed < 1800
    cells = ", ".join(
        f"N={n}: {v['MML87']:.4f} vs {v['AIC']:.4f}" for n, v in means.items()
    )
    record(
        request,
        f"criterion 7 {'PASS' if ok else 'FAIL'}: MML87 mean-MSPE <= AIC in {wins}/6 "
        f"N values (need >= 5) [{cells}]; {elapsed:.0f}s (< 1800s)",
    )
    assert wins >= 5
    assert elapsed < 1800


def test_criterion_8_determinism(
    request,
    likelihood_run,
    fisher_run,
    volume_run,
    criteria_run,
    ranking_run,
    consistency_run,
    forecast_run,
):
    reruns = {
        "likelihood": likelihood_run[0] == run_likelihood_check()[0],
        "fisher": fisher_run[0] == run_fisher_check()[0],
        "volumes": volume_run[0] == run_volume_check()[0],
        "criteria": criteria_run[0] == run_criteria_check()[0],
        "ranking": ranking_run[0] == run_ranking_invariance_check()[0],
    }
    files_6_jobs8, _, _ = run_consistency_protocol(8)
    files_7_jobs8, _, _, _ = run_forecast_protocol(8)
    reruns["consistency jobs1-vs-8"] = consistency_run[0] == files_6_jobs8
    reruns["forecast jobs1-vs-8"] = forecast_run[0] == files_7_jobs8
    ok = all(reruns.values())
    failing = sorted(name for name, good in reruns.items() if not good)
    record(
        request,
        f"criterion 8 {'PASS' if ok else 'FAIL'}: runs 1-7 byte-reproducible; "
        f"experiment protocols identical at --jobs 1 vs --jobs 8"
        + (f"; mismatches: {failing}" if failing else ""),
    )
    assert ok, f"non-deterministic outputs: {failing}"
