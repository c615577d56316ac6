"""Aggregation of simulation runs: summary statistics, box-plot five-number
summaries, correlation matrices, and deterministic CSV/JSON export.

All statistics are computed over final-period values across runs unless noted;
quartiles use linear interpolation between order statistics and standard
deviations are population (ddof=0), so a single run reports zero spread.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .abm import METRIC_FIELDS, RunResult

CORRELATION_FIELDS = ("gmv", "sw", "active_restaurants", "active_workers")

SUMMARY_COLUMNS = (
    "strategy",
    "final_gmv_mean",
    "final_sw_mean",
    "active_restaurants_mean",
    "active_workers_mean",
    "final_gmv_std",
    "final_sw_std",
    "active_restaurants_std",
    "active_workers_std",
)


@dataclass(frozen=True)
class FiveNumber:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.q3, self.maximum)


@dataclass
class AggregateReport:
    strategies: list[str]
    runs_per_strategy: dict[str, int]
    periods: int
    # per-strategy, per-metric final-period mean and std across runs
    final_means: dict[str, dict[str, float]]
    final_stds: dict[str, dict[str, float]]
    # per-strategy, per-metric (periods,) mean series and std band across runs
    series_mean: dict[str, dict[str, np.ndarray]]
    series_std: dict[str, dict[str, np.ndarray]]
    # per-strategy five-number summaries of final GMV and SW
    boxplots: dict[str, dict[str, FiveNumber]]
    # per-strategy Pearson matrix over CORRELATION_FIELDS (None = undefined)
    correlations: dict[str, list[list[float | None]]]
    # cross-strategy correlations, runs paired by index; empty when not computed
    cross_correlations: dict[str, float | None] = field(default_factory=dict)


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson correlation; None when either series is constant."""
    sx = float(np.std(x))
    sy = float(np.std(y))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.mean((x - np.mean(x)) * (y - np.mean(y))) / (sx * sy))


def _group_by_strategy(results: list[RunResult]) -> dict[str, list[RunResult]]:
    groups: dict[str, list[RunResult]] = {}
    for r in results:
        groups.setdefault(r.strategy, []).append(r)
    for runs in groups.values():
        runs.sort(key=lambda r: r.run_index)
    return groups


def correlation_matrix(
    results: list[RunResult], fields: tuple[str, ...] = CORRELATION_FIELDS
) -> list[list[float | None]]:
    """Pearson matrix of final-period values across runs.

    Constant series yield None entries (with the diagonal pinned to 1.0)
    rather than propagating NaN.
    """
    if len(results) < 3:
        raise ValueError(f"correlation needs >= 3 runs, got {len(results)}")
    finals = {f: np.array([r.final(f) for r in results]) for f in fields}
    matrix: list[list[float | None]] = []
    for fi in fields:
        row: list[float | None] = []
        for fj in fields:
            if fi == fj:
                row.append(1.0)
            else:
                row.append(_pearson(finals[fi], finals[fj]))
        matrix.append(row)
    return matrix


def aggregate_runs(results: list[RunResult]) -> AggregateReport:
    """Aggregate runs (possibly several strategies) into one report.

    Runs must share a period count; aggregation is permutation-invariant over
    the input order.
    """
    if not results:
        raise ValueError("aggregate_runs needs at least one run")
    periods = len(results[0].metrics)
    for r in results:
        if len(r.metrics) != periods:
            raise ValueError(
                f"all runs must share a period count; got {len(r.metrics)} != {periods}"
            )
    groups = _group_by_strategy(results)
    # first-appearance order keeps output rows deterministic
    strategies: list[str] = []
    for r in results:
        if r.strategy not in strategies:
            strategies.append(r.strategy)

    final_means: dict[str, dict[str, float]] = {}
    final_stds: dict[str, dict[str, float]] = {}
    series_mean: dict[str, dict[str, np.ndarray]] = {}
    series_std: dict[str, dict[str, np.ndarray]] = {}
    boxplots: dict[str, dict[str, FiveNumber]] = {}
    correlations: dict[str, list[list[float | None]]] = {}

    for strategy in strategies:
        runs = groups[strategy]
        final_means[strategy] = {}
        final_stds[strategy] = {}
        series_mean[strategy] = {}
        series_std[strategy] = {}
        for name in METRIC_FIELDS:
            finals = np.array([r.final(name) for r in runs])
            final_means[strategy][name] = float(finals.mean())
            final_stds[strategy][name] = float(finals.std())
            stacked = np.stack([r.series(name) for r in runs])
            series_mean[strategy][name] = stacked.mean(axis=0)
            series_std[strategy][name] = stacked.std(axis=0)
        boxplots[strategy] = {}
        for name in ("gmv", "sw"):
            finals = np.array([r.final(name) for r in runs])
            q1, med, q3 = np.percentile(finals, [25.0, 50.0, 75.0])
            boxplots[strategy][name] = FiveNumber(
                minimum=float(finals.min()),
                q1=float(q1),
                median=float(med),
                q3=float(q3),
                maximum=float(finals.max()),
            )
        if len(runs) >= 3:
            correlations[strategy] = correlation_matrix(runs)

    cross: dict[str, float | None] = {}
    run_counts = {s: len(groups[s]) for s in strategies}
    if len(strategies) >= 2 and len(set(run_counts.values())) == 1 and min(run_counts.values()) >= 3:
        # pair runs across strategies by run index (same derived seed family)
        for i, si in enumerate(strategies):
            for sj in strategies[i + 1 :]:
                for fi in CORRELATION_FIELDS:
                    for fj in CORRELATION_FIELDS:
                        xi = np.array([r.final(fi) for r in groups[si]])
                        xj = np.array([r.final(fj) for r in groups[sj]])
                        cross[f"{si}.{fi}|{sj}.{fj}"] = _pearson(xi, xj)

    return AggregateReport(
        strategies=strategies,
        runs_per_strategy=run_counts,
        periods=periods,
        final_means=final_means,
        final_stds=final_stds,
        series_mean=series_mean,
        series_std=series_std,
        boxplots=boxplots,
        correlations=correlations,
        cross_correlations=cross,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _fmt(value: float | int | None) -> str:
    """Render a number with 6 significant digits; None becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".6g")


def _write_lines(path: Path, lines: list[str]) -> None:
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc}") from exc


def export(
    report: AggregateReport,
    results: list[RunResult],
    path: str | Path,
    fmt: str = "csv",
) -> list[Path]:
    """Write the report to ``path`` (a directory) as CSV tables or one JSON doc.

    CSV layout: timeseries.csv (strategy, run, period, every metric field),
    summary.csv (one row per strategy, documented column list), boxplot.csv,
    correlation.csv. Row order and number formatting are deterministic, so
    identical inputs produce byte-identical files.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    out_dir = Path(path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    if fmt == "json":
        doc = {
            "strategies": report.strategies,
            "runs_per_strategy": report.runs_per_strategy,
            "periods": report.periods,
            "final_means": report.final_means,
            "final_stds": report.final_stds,
            "series_mean": {
                s: {k: [float(format(x, ".6g")) for x in v] for k, v in d.items()}
                for s, d in report.series_mean.items()
            },
            "series_std": {
                s: {k: [float(format(x, ".6g")) for x in v] for k, v in d.items()}
                for s, d in report.series_std.items()
            },
            "boxplots": {
                s: {k: v.as_tuple() for k, v in d.items()}
                for s, d in report.boxplots.items()
            },
            "correlations": report.correlations,
            "cross_correlations": report.cross_correlations,
            "runs": [r.to_dict() for r in sorted(results, key=lambda r: (r.strategy, r.run_index))],
        }
        target = out_dir / "report.json"
        _write_lines(target, [json.dumps(doc, indent=2, sort_keys=True)])
        return [target]

    written: list[Path] = []

    lines = ["strategy,run,period," + ",".join(METRIC_FIELDS)]
    ordered = sorted(results, key=lambda r: (report.strategies.index(r.strategy), r.run_index))
    for r in ordered:
        for t, m in enumerate(r.metrics):
            row = [r.strategy, str(r.run_index), str(t + 1)]
            row += [_fmt(getattr(m, name)) for name in METRIC_FIELDS]
            lines.append(",".join(row))
    target = out_dir / "timeseries.csv"
    _write_lines(target, lines)
    written.append(target)

    lines = [",".join(SUMMARY_COLUMNS)]
    for s in report.strategies:
        lines.append(
            ",".join(
                [
                    s,
                    _fmt(report.final_means[s]["gmv"]),
                    _fmt(report.final_means[s]["sw"]),
                    _fmt(report.final_means[s]["active_restaurants"]),
                    _fmt(report.final_means[s]["active_workers"]),
                    _fmt(report.final_stds[s]["gmv"]),
                    _fmt(report.final_stds[s]["sw"]),
                    _fmt(report.final_stds[s]["active_restaurants"]),
                    _fmt(report.final_stds[s]["active_workers"]),
                ]
            )
        )
    target = out_dir / "summary.csv"
    _write_lines(target, lines)
    written.append(target)

    lines = ["strategy,metric,min,q1,median,q3,max"]
    for s in report.strategies:
        for name in ("gmv", "sw"):
            five = report.boxplots[s][name]
            lines.append(
                ",".join([s, name] + [_fmt(v) for v in five.as_tuple()])
            )
    target = out_dir / "boxplot.csv"
    _write_lines(target, lines)
    written.append(target)

    lines = ["scope,row,col,correlation"]
    for s in report.strategies:
        if s not in report.correlations:
            continue
        matrix = report.correlations[s]
        for i, fi in enumerate(CORRELATION_FIELDS):
            for j, fj in enumerate(CORRELATION_FIELDS):
                lines.append(",".join([s, fi, fj, _fmt(matrix[i][j])]))
    for key in sorted(report.cross_correlations):
        left, right = key.split("|")
        lines.append(",".join(["cross", left, right, _fmt(report.cross_correlations[key])]))
    target = out_dir / "correlation.csv"
    _write_lines(target, lines)
    written.append(target)

    return written


def save_runs(results: list[RunResult], path: str | Path) -> Path:
    """Persist raw run results as JSON for later re-aggregation."""
    target = Path(path)
    doc = [r.to_dict() for r in results]
    try:
        target.write_text(json.dumps(doc), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write runs file {target}: {exc}") from exc
    return target


def load_runs(path: str | Path) -> list[RunResult]:
    source = Path(path)
    try:
        doc = json.loads(source.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read runs file {source}: {exc}") from exc
    return [RunResult.from_dict(d) for d in doc]
