"""Tabular output: per-run records and the aggregate comparison table."""
from __future__ import annotations

import csv
import io
import math

from .simulation import METHODS, AggregateReport

RECORD_FIELDS = ("scenario", "run_id", "method", "outcome", "winner", "duration_days", "seed")


def money(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def pct(x: float) -> str:
    return f"{x:.1f}%"


def records_csv(report: AggregateReport) -> str:
    sc = report.scenario
    names = sc.names
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*RECORD_FIELDS, *(f"loss_{n}" for n in names)])
    for r in report.records:
        losses = r.final_losses or (None,) * len(names)
        w.writerow([
            sc.name, r.run_id, r.method, r.outcome.value,
            "" if r.winner is None else names[r.winner],
            r.duration_days, r.seed, *(money(x) for x in losses),
        ])
    return buf.getvalue()


def aggregate_rows(report: AggregateReport) -> list[tuple[str, ...]]:
    methods = [m for m in METHODS if m in report.summaries]
    sums = [report[m] for m in methods]
    rows = [("metric", *methods)]
    for label in sums[0].outcome_pct:
        rows.append((f"% {label}", *(pct(s.pct(label)) for s in sums)))
    rows.append(("% Correct decision", *(pct(s.correct_pct) for s in sums)))
    rows.append(("% False positive (total)", *(pct(s.false_positive_pct) for s in sums)))
    rows.append(("% Inconclusive (futility/timeout)", *(pct(s.inconclusive_pct) for s in sums)))
    rows.append(("Average duration, concluded runs (days)",
                 *("n/a" if math.isnan(s.avg_duration) else f"{s.avg_duration:.1f}" for s in sums)))
    rows.append(("Average duration, all runs (days)", *(f"{s.avg_duration_all:.1f}" for s in sums)))
    rows.append(("Runs", *(str(s.n_runs) for s in sums)))
    return rows


def aggregate_csv(report: AggregateReport) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(aggregate_rows(report))
    return buf.getvalue()


def aggregate_text(report: AggregateReport) -> str:
    rows = aggregate_rows(report)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    sc = report.scenario
    truth = ", ".join(f"{v.name}: RPV {v.true_rpv:.4f}" for v in sc.variants)
    out = [f"Scenario {sc.name} ({report.n_runs} runs; {truth})"]
    for j, r in enumerate(rows):
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        out.append("  ".join(cells).rstrip())
        if j == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
