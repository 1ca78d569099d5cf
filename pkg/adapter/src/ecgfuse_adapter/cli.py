"""Adapter command line: embedding extraction and the raw-signal baseline."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .baseline import BaselineConfig, train_baseline
from .errors import AdapterError
from .extract import ExtractionJob, extract_embeddings


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecgfuse-adapter",
        description="Bridge pretrained ECG encoders and a raw-signal baseline "
                    "to the ecgfuse evaluation engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="embed a record directory through a checkpoint")
    p.add_argument("--model-kind", required=True, choices=("st_mem", "ecg_fm"))
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--records", required=True, type=Path)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--skip-bad-records", action="store_true",
                   help="log and skip unreadable records instead of failing")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train-baseline",
                       help="train/score the raw-signal baseline on an exported split")
    p.add_argument("--records", required=True, type=Path)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--split", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=_cmd_train_baseline)
    return parser


def _cmd_extract(args) -> int:
    job = ExtractionJob(
        model_kind=args.model_kind,
        checkpoint=args.checkpoint,
        records_dir=args.records,
        manifest=args.manifest,
        output=args.out,
        device=args.device,
        batch_size=args.batch_size,
        on_error="skip" if args.skip_bad_records else "fail",
    )
    out = extract_embeddings(job)
    print("wrote %s" % out)
    return 0


def _cmd_train_baseline(args) -> int:
    config = BaselineConfig(learning_rate=args.learning_rate,
                            batch_size=args.batch_size, epochs=args.epochs,
                            seed=args.seed, device=args.device)
    out = train_baseline(args.records, args.manifest, args.split, args.out, config)
    print("wrote %s" % out)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print("ecgfuse-adapter %s: error: %s" % (args.command, exc), file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
