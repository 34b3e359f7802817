"""``alertcast`` command line: eda, train, evaluate, synth.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from alertcast import pipeline
from alertcast.ingest import IngestError, write_events_csv
from alertcast.pipeline import ConfigError, RunConfig
from alertcast.synth import SynthSpec, generate_synthetic

log = logging.getLogger("alertcast")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


def _csv_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_run_flags(p: argparse.ArgumentParser, models: bool = True) -> None:
    p.add_argument("--input", help="alert intervals CSV (region,start,end)")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--window-start", dest="window_start", help="study window start, ISO minute")
    p.add_argument("--window-end", dest="window_end", help="study window end (exclusive), ISO minute")
    p.add_argument("--ref-region", dest="ref_region", help="reference region for the co-occurrence table")
    if not models:
        return
    p.add_argument("--regions", dest="target_regions", type=_csv_list, help="comma-separated target regions")
    p.add_argument("--horizons", type=_int_list, help="comma-separated horizons in minutes")
    p.add_argument("--split", help="train/test boundary timestamp (default 2024-07-01T00:00)")
    p.add_argument("--stride", type=int, help="keep every n-th minute as a row")
    p.add_argument("--target-mode", dest="target_mode", choices=("at", "within"))
    p.add_argument("--n-trees", dest="n_trees", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.add_argument("--min-leaf", dest="min_leaf", type=int)
    p.add_argument("--mtry", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", dest="n_jobs", type=int, help="worker processes for tree training")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alertcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("eda", help="exploratory tables and charts"), models=False)
    _add_run_flags(sub.add_parser("train", help="fit one forest per target region and horizon"))
    p = sub.add_parser("evaluate", help="score saved models on the test split")
    _add_run_flags(p)
    p.add_argument("--models", help="directory of model files (default: OUT/models)")

    s = sub.add_parser("synth", help="write a synthetic alert CSV with a planted lead-lag pattern")
    s.add_argument("--out", required=True, help="CSV file to write")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-regions", type=int, default=SynthSpec.n_regions)
    s.add_argument("--days", type=int, default=SynthSpec.days)
    s.add_argument("--lead-region", default=SynthSpec.lead_region)
    s.add_argument("--lag-region", default=SynthSpec.lag_region)
    s.add_argument("--lag-minutes", type=int, default=SynthSpec.lag_minutes)
    s.add_argument("--follow-prob", type=float, default=SynthSpec.follow_prob)
    s.add_argument("--jitter", type=int, default=SynthSpec.jitter)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    keys = {
        "input", "out", "window_start", "window_end", "ref_region", "target_regions", "horizons",
        "split", "stride", "target_mode", "n_trees", "max_depth", "min_leaf", "mtry", "seed", "n_jobs",
    }
    return config.updated({k: v for k, v in vars(args).items() if k in keys})


def _synth(args: argparse.Namespace) -> None:
    try:
        spec = SynthSpec(
            n_regions=args.n_regions,
            days=args.days,
            lead_region=args.lead_region,
            lag_region=args.lag_region,
            lag_minutes=args.lag_minutes,
            follow_prob=args.follow_prob,
            jitter=args.jitter,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        write_events_csv(generate_synthetic(args.seed, spec), fh)
    log.info("wrote %s", path)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            _synth(args)
            return EXIT_OK
        config = _config(args)
        if args.command == "eda":
            pipeline.run_eda(config)
        elif args.command == "train":
            pipeline.run_train(config)
        elif args.command == "evaluate":
            pipeline.run_evaluate(config, models_dir=args.models)
    except (ConfigError, IngestError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_RUNTIME
    except (RuntimeError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
