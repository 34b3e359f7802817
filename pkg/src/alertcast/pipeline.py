"""End-to-end pipeline steps shared by the CLI and in-process callers."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from alertcast import eda, svg
from alertcast.features import FeatureMatrix, assemble_dataset
from alertcast.forest import ForestModel, ForestParams, fit_forest
from alertcast.ingest import (
    DEFAULT_WINDOW_END,
    DEFAULT_WINDOW_START,
    AlertEvent,
    RegionRegistry,
    StudyWindow,
    normalize_events,
    parse_events,
    parse_timestamp,
)
from alertcast.metrics import DEFAULT_SPLIT, EvalReport, SplitSpec, evaluate_scores, time_split, write_roc_csv
from alertcast.timegrid import (
    StatusGrid,
    binary_correlation_matrix,
    cooccurrence_minutes,
    rasterize,
    total_alert_minutes,
)

log = logging.getLogger(__name__)

DEFAULT_REGIONS = ("Lvivska oblast", "Vinnytska oblast", "Kyivska oblast", "Kharkivska oblast")


class ConfigError(ValueError):
    """Bad configuration or input; the CLI maps it to exit code 2."""


@dataclass
class RunConfig:
    input: str | None = None
    out: str = "out"
    window_start: str = DEFAULT_WINDOW_START.isoformat(timespec="minutes")
    window_end: str = DEFAULT_WINDOW_END.isoformat(timespec="minutes")
    target_regions: list[str] = field(default_factory=lambda: list(DEFAULT_REGIONS))
    horizons: list[int] = field(default_factory=lambda: [5, 15])
    split: str = DEFAULT_SPLIT.isoformat(timespec="minutes")
    stride: int = 1
    target_mode: str = "at"
    ref_region: str = "Kharkivska oblast"
    n_trees: int = 500
    max_depth: int | None = None
    min_leaf: int = 50
    mtry: int | None = None
    seed: int = 0
    n_jobs: int = 1

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls().updated(payload)

    def updated(self, overrides: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @property
    def window(self) -> StudyWindow:
        try:
            return StudyWindow.from_strings(self.window_start, self.window_end)
        except ValueError as exc:
            raise ConfigError(f"bad study window: {exc}") from None

    @property
    def split_spec(self) -> SplitSpec:
        try:
            return SplitSpec(parse_timestamp(self.split))
        except ValueError as exc:
            raise ConfigError(f"bad split boundary {self.split!r}: {exc}") from None

    def forest_params(self) -> ForestParams:
        try:
            return ForestParams(
                n_trees=self.n_trees,
                max_depth=self.max_depth,
                min_samples_leaf=self.min_leaf,
                mtry=self.mtry,
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def out_dir(self, sub: str) -> Path:
        path = Path(self.out) / sub
        path.mkdir(parents=True, exist_ok=True)
        return path


@dataclass
class Loaded:
    registry: RegionRegistry
    events: list[AlertEvent]
    grid: StatusGrid


def load(config: RunConfig) -> Loaded:
    if not config.input:
        raise ConfigError("no input file given")
    path = Path(config.input)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    with path.open("rb") as fh:
        records = parse_events(fh)
    window = config.window
    registry, events = normalize_events(records, window)
    if registry.partial:
        log.info("regions with short history: %s", ", ".join(sorted(registry.partial)))
    grid = rasterize(events, registry, window)
    return Loaded(registry, events, grid)


def region_index(registry: RegionRegistry, name: str) -> int:
    try:
        return registry.index(name)
    except KeyError:
        raise ConfigError(f"region {name!r} not found in input; known: {', '.join(registry.names)}") from None


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v: float) -> str:
    return "nan" if not np.isfinite(v) else repr(float(v))


def run_eda(config: RunConfig, data: Loaded | None = None) -> list[Path]:
    """Write the six exploratory tables and their charts; returns the written paths."""
    data = data or load(config)
    grid, names = data.grid, list(data.registry.names)
    ref = region_index(data.registry, config.ref_region)
    out = config.out_dir("eda")
    written: list[Path] = []

    def emit(stem: str, header: list[str], rows: list[list[Any]], chart: str) -> None:
        _write_csv(out / f"{stem}.csv", header, rows)
        (out / f"{stem}.svg").write_text(chart, encoding="utf-8")
        written.extend([out / f"{stem}.csv", out / f"{stem}.svg"])

    totals = total_alert_minutes(grid)
    emit(
        "fig1_total_minutes",
        ["region", "total_minutes"],
        [[n, int(t)] for n, t in zip(names, totals)],
        svg.heatmap([[float(t)] for t in totals], names, ["total minutes"], "Total alert duration (minutes)"),
    )

    co = cooccurrence_minutes(grid, ref)
    emit(
        "fig2_cooccurrence",
        ["region", f"minutes_with_{slug(config.ref_region)}"],
        [[n, int(c)] for n, c in zip(names, co)],
        svg.heatmap(
            [[float(c)] for c in co], names, [config.ref_region], f"Alert minutes simultaneous with {config.ref_region}"
        ),
    )

    medians = eda.daily_median_durations(data.events, len(names), grid.window)
    origin = grid.window.start.date().toordinal()
    emit(
        "fig3_daily_median",
        ["region", "date", "median_minutes"],
        [[n, d.isoformat(), _fmt(v)] for n, series in zip(names, medians) for d, v in series],
        svg.line_chart(
            {n: [(d.toordinal() - origin, v) for d, v in s] for n, s in zip(names, medians)},
            "Daily median alert duration (minutes)",
            x_label=f"days since {grid.window.start.date().isoformat()}",
            y_label="minutes",
        ),
    )

    box_header = ["region", "n", "min", "q1", "median", "q3", "max", "whisker_low", "whisker_high", "n_outliers"]

    def box_rows(stats: list[eda.BoxStats | None]) -> list[list[Any]]:
        rows = []
        for n, s in zip(names, stats):
            if s is not None:
                rows.append([n, s.n, *map(_fmt, (s.min, s.q1, s.median, s.q3, s.max, s.whisker_low, s.whisker_high)), s.n_outliers])
        return rows

    durations = eda.event_durations(data.events, len(names))
    dur_stats = [eda.duration_boxstats(d) if d else None for d in durations]
    kept = [(n, s) for n, s in zip(names, dur_stats) if s is not None]
    emit(
        "fig4_duration_boxplot",
        box_header,
        box_rows(dur_stats),
        svg.boxplot([s for _, s in kept], [n for n, _ in kept], "Alert duration by region (minutes)"),
    )

    day_stats = eda.daily_total_stats(grid)
    emit(
        "fig5_daily_total_boxplot",
        box_header,
        box_rows(list(day_stats)),
        svg.boxplot(day_stats, names, "Total alert minutes per day by region"),
    )

    corr = binary_correlation_matrix(grid)
    emit(
        "fig6_correlation",
        ["region", *names],
        [[n, *map(_fmt, row)] for n, row in zip(names, corr)],
        svg.heatmap(corr.tolist(), names, names, "Correlation of binary alert series", fmt="{:.2f}"),
    )
    return written


@dataclass
class TrainedModel:
    region: str
    horizon: int
    model: ForestModel
    train: FeatureMatrix
    test: FeatureMatrix


def build_split(config: RunConfig, data: Loaded, region: str, horizon: int) -> tuple[FeatureMatrix, FeatureMatrix]:
    target = region_index(data.registry, region)
    try:
        matrix = assemble_dataset(data.grid, target, horizon, config.stride, config.target_mode)
        return time_split(matrix, config.split_spec)
    except ValueError as exc:
        raise ConfigError(f"{region} H={horizon}: {exc}") from None


def model_stem(region: str, horizon: int) -> str:
    return f"{slug(region)}_h{horizon}"


def train_one(config: RunConfig, data: Loaded, region: str, horizon: int) -> TrainedModel:
    train, test = build_split(config, data, region, horizon)
    if train.target.min() == train.target.max():
        raise RuntimeError(
            f"training target for {region} at horizon {horizon} has a single class ({int(train.target[0])})"
        )
    model = fit_forest(train, config.forest_params(), n_jobs=config.n_jobs)
    model.meta.update(
        stride=config.stride,
        target_mode=config.target_mode,
        split=config.split,
        window_start=config.window_start,
        window_end=config.window_end,
    )
    return TrainedModel(region, horizon, model, train, test)


def _loggable(config: RunConfig) -> dict[str, Any]:
    # paths and worker count do not affect the models
    d = asdict(config)
    for key in ("input", "out", "n_jobs"):
        d.pop(key)
    return d


def run_train(config: RunConfig, data: Loaded | None = None) -> list[TrainedModel]:
    data = data or load(config)
    for region in config.target_regions:
        region_index(data.registry, region)
    out = config.out_dir("models")
    results, log_rows = [], []
    for region in config.target_regions:
        for horizon in config.horizons:
            log.info("training %s, horizon %d", region, horizon)
            trained = train_one(config, data, region, horizon)
            stem = model_stem(region, horizon)
            (out / f"{stem}.json").write_text(trained.model.to_json(), encoding="utf-8")
            _write_csv(
                out / f"{stem}_importance.csv",
                ["feature", "importance"],
                [[n, repr(float(v))] for n, v in zip(trained.model.column_names, trained.model.importance)],
            )
            log_rows.append(
                {
                    "region": region,
                    "horizon": horizon,
                    "model": f"{stem}.json",
                    "n_train": len(trained.train),
                    "n_test": len(trained.test),
                    "train_positive_share": float(trained.train.target.mean()),
                    "n_trees": len(trained.model.trees),
                    "n_nodes": int(sum(t.n_nodes for t in trained.model.trees)),
                }
            )
            results.append(trained)
    (out / "train_log.json").write_text(
        json.dumps({"config": _loggable(config), "models": log_rows}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return results


def evaluate_model(model: ForestModel, test: FeatureMatrix) -> EvalReport:
    if tuple(model.column_names) != test.column_names:
        raise ConfigError(
            f"model columns {list(model.column_names)} do not match dataset columns {list(test.column_names)}"
        )
    scores = model.predict_proba(test.X)
    try:
        return evaluate_scores(test.target, scores)
    except ValueError as exc:
        raise RuntimeError(f"cannot evaluate {test.target_region} H={test.horizon}: {exc}") from None


def write_report(out: Path, stem: str, model: ForestModel, report: EvalReport, title: str) -> None:
    payload = report.to_dict()
    payload.update(model=f"{stem}.json", **{k: model.meta[k] for k in ("target_region", "horizon") if k in model.meta})
    (out / f"{stem}_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with (out / f"{stem}_roc.csv").open("w", encoding="utf-8") as fh:
        write_roc_csv(report.roc, fh)
    (out / f"{stem}_roc.svg").write_text(svg.roc_chart(report.roc, report.auc, f"ROC: {title}"), encoding="utf-8")
    (out / f"{stem}_importance.svg").write_text(
        svg.bar_chart(list(model.column_names), model.importance.tolist(), f"Feature importance: {title}"),
        encoding="utf-8",
    )


def run_evaluate(config: RunConfig, data: Loaded | None = None, models_dir: str | Path | None = None) -> dict[str, EvalReport]:
    data = data or load(config)
    models_dir = Path(models_dir) if models_dir else Path(config.out) / "models"
    paths = sorted(p for p in models_dir.glob("*.json") if p.name != "train_log.json")
    if not paths:
        raise ConfigError(f"no model files in {models_dir}")
    out = config.out_dir("reports")
    reports = {}
    for path in paths:
        try:
            model = ForestModel.from_json(path.read_text(encoding="utf-8"))
            region, horizon = model.meta["target_region"], int(model.meta["horizon"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path.name}: unreadable model ({exc})") from None
        cfg = replace(
            config,
            stride=int(model.meta.get("stride", config.stride)),
            target_mode=model.meta.get("target_mode", config.target_mode),
        )
        _, test = build_split(cfg, data, region, horizon)
        report = evaluate_model(model, test)
        stem = path.stem
        write_report(out, stem, model, report, f"{region}, {horizon} min horizon")
        log.info("%s: accuracy %.4f, AUC %.4f", stem, report.accuracy, report.auc)
        reports[stem] = report
    return reports


def run_in_process(config: RunConfig) -> dict[str, EvalReport]:
    """Train and evaluate without touching disk."""
    data = load(config)
    reports = {}
    for region in config.target_regions:
        for horizon in config.horizons:
            trained = train_one(config, data, region, horizon)
            reports[model_stem(region, horizon)] = evaluate_model(trained.model, trained.test)
    return reports

