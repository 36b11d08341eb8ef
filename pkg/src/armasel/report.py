"""Experiment report assembly and deterministic file emission.

A report is a list of scenario rows, each carrying its aggregate tables
(win counts, per-criterion forecast-error mean/SD) together with the raw
per-dataset records the aggregates were computed from.  Emission is
byte-deterministic given the report, and every aggregate cell can be
recomputed from the emitted records.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field

FORMATS = ("csv", "markdown", "jsonl")
_EXT = {"csv": "csv", "markdown": "md", "jsonl": "jsonl"}


@dataclass
class ScenarioResult:
    """Aggregates plus raw records for one experiment cell."""

    label: str
    context: dict
    metric: str
    criteria: tuple
    win_counts: dict
    metric_mean: dict
    metric_sd: dict
    failures: int
    failure_reasons: list
    records: list


@dataclass
class ExperimentReport:
    """Full experiment output: scenario rows plus provenance."""

    title: str
    master_seed: int
    criteria: tuple
    scenarios: list
    config_echo: dict = field(default_factory=dict)
    version: str = ""


def metric_value(metric: str, mspe: float) -> float:
    """Transform a raw per-dataset MSPE into the reported metric scale."""
    if metric in ("mspe", "log_of_mean_mspe"):
        return mspe
    if metric == "log_mspe":
        return math.log(mspe)
    raise ValueError(f"unknown metric {metric!r}")


def aggregate_records(records, criteria, metric: str = "mspe"):
    """Win counts and per-criterion metric mean/SD from raw records.

    A record is either {"index", "status": "ok", "winners", "criteria":
    {name: {"order", "score", "mspe"}}} or {"index", "status": "failed",
    "reason"}.  Failed records are excluded from every aggregate and
    counted separately.  SD is the sample standard deviation (ddof 1),
    0.0 when only one record contributes.
    """
    win_counts = {c: 0 for c in criteria}
    values = {c: [] for c in criteria}
    failures = 0
    reasons = []
    for rec in records:
        if rec.get("status") != "ok":
            failures += 1
            reasons.append(str(rec.get("reason", "unknown")))
            continue
        for c in rec["winners"]:
            win_counts[c] += 1
        for c in criteria:
            values[c].append(metric_value(metric, rec["criteria"][c]["mspe"]))
    mean = {}
    sd = {}
    for c in criteria:
        vals = values[c]
        if not vals:
            mean[c] = float("nan")
            sd[c] = float("nan")
            continue
        n = len(vals)
        if metric == "log_of_mean_mspe":
            m = math.log(sum(vals) / n)
            # SD reported on the same scale: spread of per-dataset log values
            logs = [math.log(v) for v in vals]
            lm = sum(logs) / n
            s = math.sqrt(sum((v - lm) ** 2 for v in logs) / (n - 1)) if n > 1 else 0.0
        else:
            m = sum(vals) / n
            s = math.sqrt(sum((v - m) ** 2 for v in vals) / (n - 1)) if n > 1 else 0.0
        mean[c] = m
        sd[c] = s
    return win_counts, mean, sd, failures, reasons


def build_scenario(label, context, metric, criteria, records) -> ScenarioResult:
    win_counts, mean, sd, failures, reasons = aggregate_records(records, criteria, metric)
    return ScenarioResult(
        label=label,
        context=dict(context),
        metric=metric,
        criteria=tuple(criteria),
        win_counts=win_counts,
        metric_mean=mean,
        metric_sd=sd,
        failures=failures,
        failure_reasons=reasons,
        records=list(records),
    )


def merge_reports(title, reports, config_echo=None, master_seed=None) -> ExperimentReport:
    """Concatenate the scenario rows of several one-row reports."""
    if not reports:
        raise ValueError("no reports to merge")
    first = reports[0]
    scenarios = [s for r in reports for s in r.scenarios]
    return ExperimentReport(
        title=title,
        master_seed=first.master_seed if master_seed is None else master_seed,
        criteria=first.criteria,
        scenarios=scenarios,
        config_echo=dict(config_echo or first.config_echo),
        version=first.version,
    )


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "title": report.title,
        "master_seed": report.master_seed,
        "criteria": list(report.criteria),
        "version": report.version,
        "config_echo": report.config_echo,
        "scenarios": [
            {
                "label": s.label,
                "context": s.context,
                "metric": s.metric,
                "criteria": list(s.criteria),
                "win_counts": s.win_counts,
                "metric_mean": s.metric_mean,
                "metric_sd": s.metric_sd,
                "failures": s.failures,
                "failure_reasons": s.failure_reasons,
                "records": s.records,
            }
            for s in report.scenarios
        ],
    }


def report_from_dict(data: dict) -> ExperimentReport:
    scenarios = [
        ScenarioResult(
            label=s["label"],
            context=s["context"],
            metric=s["metric"],
            criteria=tuple(s["criteria"]),
            win_counts=s["win_counts"],
            metric_mean=s["metric_mean"],
            metric_sd=s["metric_sd"],
            failures=s["failures"],
            failure_reasons=s["failure_reasons"],
            records=s["records"],
        )
        for s in data["scenarios"]
    ]
    return ExperimentReport(
        title=data["title"],
        master_seed=data["master_seed"],
        criteria=tuple(data["criteria"]),
        scenarios=scenarios,
        config_echo=data.get("config_echo", {}),
        version=data.get("version", ""),
    )


def _slug(text: str) -> str:
    s = re.sub(r"[^A-Za-z0-9]+", "-", text.strip().lower()).strip("-")
    return s or "report"


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _metric_header(metric: str) -> str:
    return {"mspe": "mspe", "log_mspe": "log_mspe", "log_of_mean_mspe": "log_mean_mspe"}[metric]


def _write(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def table_lines(fmt, header, rows):
    """Render one table as csv (full-precision repr floats), markdown, or jsonl."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(c) for c in row])
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |"]
        lines.append("|" + "|".join([" --- "] * len(header)) + "|")
        for row in rows:
            cells = []
            for c in row:
                cells.append(f"{c:.6f}" if isinstance(c, float) else str(c))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    if fmt == "jsonl":
        lines = [_dumps(dict(zip(header, row))) for row in rows]
        return "\n".join(lines) + ("\n" if lines else "")
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report: ExperimentReport, format: str = "csv", figure_data: bool = False, out_dir: str = "."):
    """Write report files; returns the list of paths written.

    Files: the canonical JSON report, a win-count table, a metric
    (mean/SD) table, the raw per-dataset records as JSON lines, and
    optionally figure data (per-T mean MSPE curves).  Output bytes are a
    pure function of the report.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    os.makedirs(out_dir, exist_ok=True)
    stem = f"{_slug(report.title)}_seed{report.master_seed}"
    ext = _EXT[format]
    paths = []

    canonical = os.path.join(out_dir, f"{stem}_report.json")
    _write(canonical, json.dumps(report_to_dict(report), sort_keys=True, indent=1) + "\n")
    paths.append(canonical)

    crits = list(report.criteria)
    win_rows = [[s.label] + [s.win_counts[c] for c in crits] for s in report.scenarios]
    win_path = os.path.join(out_dir, f"{stem}_win_counts.{ext}")
    _write(win_path, table_lines(format, ["scenario"] + crits, win_rows))
    paths.append(win_path)

    metric_name = _metric_header(report.scenarios[0].metric) if report.scenarios else "mspe"
    header = ["scenario"]
    for c in crits:
        header += [f"{c}_{metric_name}_mean", f"{c}_{metric_name}_sd"]
    metric_rows = []
    for s in report.scenarios:
        row = [s.label]
        for c in crits:
            row += [s.metric_mean[c], s.metric_sd[c]]
        metric_rows.append(row)
    metric_path = os.path.join(out_dir, f"{stem}_{metric_name}.{ext}")
    _write(metric_path, table_lines(format, header, metric_rows))
    paths.append(metric_path)

    rec_path = os.path.join(out_dir, f"{stem}_records.jsonl")
    rec_lines = []
    for s in report.scenarios:
        for rec in s.records:
            rec_lines.append(_dumps({"scenario": s.label, **rec}))
    _write(rec_path, "\n".join(rec_lines) + ("\n" if rec_lines else ""))
    paths.append(rec_path)

    if figure_data:
        fig_path = os.path.join(out_dir, f"{stem}_figure_mspe_by_t.csv")
        by_t = {}
        for s in report.scenarios:
            t = s.context.get("n_out")
            for rec in s.records:
                if rec.get("status") != "ok":
                    continue
                for c in crits:
                    by_t.setdefault((t, c), []).append(rec["criteria"][c]["mspe"])
        rows = []
        for (t, c) in sorted(by_t, key=lambda k: (k[0], crits.index(k[1]))):
            vals = by_t[(t, c)]
            rows.append([t, c, sum(vals) / len(vals)])
        _write(fig_path, table_lines("csv", ["T", "criterion", "mean_mspe"], rows))
        paths.append(fig_path)
    return paths
