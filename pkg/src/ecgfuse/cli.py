"""Command-line entry point wiring the library into reproducible workflows.

Commands: convert, synth, fuse, train, eval, benchmark, tsne.

Every command is deterministic given its inputs: all randomness flows from
seeds in the configuration file, output files are written atomically, and
report.json is byte-identical across reruns of the same config. Exit codes:
0 success, 1 runtime/module error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .ebf import align, read_csv, read_ebf, encode_ebf
from .errors import ConfigError, EcgfuseError
from .fusion import fit_minmax, fuse, scale_set
from .gbdt import GBDTConfig, load_model, model_to_json, predict_proba, train
from .metrics import evaluate
from .resampling import BenchmarkReport, ReshuffleSpec, run_benchmark
from .synth import SynthConfig, generate
from .tsne import TsneConfig, embed_set, export_coords_csv, export_scatter_svg, subsample_balanced

AUCPR_METHOD = "average_precision_steps"
REPORT_FORMAT = "fusion-benchmark-report/v1"
SPLIT_FORMAT = "split-plan/v1"


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    out_dir: Path
    arms: dict[str, Path] = field(default_factory=dict)
    fuse_pairs: list[tuple[str, str]] = field(default_factory=list)
    reshuffle: ReshuffleSpec = field(default_factory=ReshuffleSpec)
    gbdt: GBDTConfig = field(default_factory=GBDTConfig)
    tsne: TsneConfig = field(default_factory=TsneConfig)
    tsne_per_class: int = 250
    synth: SynthConfig = field(default_factory=SynthConfig)
    synth_out_a: str = "arm_a.ebf"
    synth_out_b: str = "arm_b.ebf"
    persist_artifacts: bool = True
    raw: dict = field(default_factory=dict)


def _build_section(cls, section: dict, what: str):
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError("bad %s section: %s" % (what, exc)) from exc


def load_run_config(path, require_arms: bool = False) -> RunConfig:
    """Parse and validate a run-config JSON file."""
    cfg_path = Path(path)
    try:
        raw = json.loads(cfg_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (cfg_path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (cfg_path, exc)) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    known = {"out_dir", "arms", "fuse_pairs", "reshuffle", "gbdt", "tsne",
             "synth", "persist_artifacts"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))

    base = cfg_path.parent
    out_dir = base / str(raw.get("out_dir", "ecgfuse_out"))

    arms: dict[str, Path] = {}
    for name, rel in dict(raw.get("arms", {})).items():
        arms[str(name)] = base / str(rel)
    fuse_pairs = []
    for pair in raw.get("fuse_pairs", []):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ConfigError("each fuse_pairs entry must name exactly two arms")
        fuse_pairs.append((str(pair[0]), str(pair[1])))

    tsne_section = dict(raw.get("tsne", {}))
    per_class = tsne_section.pop("per_class", 250)
    if not isinstance(per_class, int) or per_class < 1:
        raise ConfigError("tsne.per_class must be a positive integer")
    synth_section = dict(raw.get("synth", {}))
    out_a = str(synth_section.pop("out_a", "arm_a.ebf"))
    out_b = str(synth_section.pop("out_b", "arm_b.ebf"))

    cfg = RunConfig(
        out_dir=out_dir,
        arms=arms,
        fuse_pairs=fuse_pairs,
        reshuffle=_build_section(ReshuffleSpec, dict(raw.get("reshuffle", {})), "reshuffle"),
        gbdt=_build_section(GBDTConfig, dict(raw.get("gbdt", {})), "gbdt"),
        tsne=_build_section(TsneConfig, tsne_section, "tsne"),
        tsne_per_class=per_class,
        synth=_build_section(SynthConfig, synth_section, "synth"),
        synth_out_a=out_a,
        synth_out_b=out_b,
        persist_artifacts=bool(raw.get("persist_artifacts", True)),
        raw=raw,
    )
    if require_arms:
        if not cfg.arms:
            raise ConfigError("config declares no arms")
        for name, p in cfg.arms.items():
            if not p.exists():
                raise ConfigError("arm %r references missing file %s" % (name, p))
        for a, b in cfg.fuse_pairs:
            for end in (a, b):
                if end not in cfg.arms:
                    raise ConfigError("fuse pair references unknown arm %r" % end)
    return cfg


# ---------------------------------------------------------------------------
# small IO helpers


def _write_atomic(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path: Path, text: str) -> None:
    _write_atomic(path, text.encode("utf-8"))


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._+-]", "_", name)


def ids_digest(train_ids, test_ids) -> str:
    payload = "split-ids/v1\ntrain\n%s\ntest\n%s\n" % (
        "\n".join(train_ids), "\n".join(test_ids))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# report serialization (owned by the CLI)


def _summary_dict(summary) -> dict:
    return {"mean": summary.mean, "std": summary.std, "n": summary.n,
            "std_defined": summary.std_defined}


def report_to_dict(report: BenchmarkReport, config_echo: dict,
                   artifact_paths: dict | None = None) -> dict:
    arms_doc = {}
    for outcome in report.arms:
        entry = {
            "per_repeat": [
                {"auroc": r.auroc, "aucpr": r.aucpr, "n_pos": r.n_pos, "n_neg": r.n_neg}
                for r in outcome.results
            ],
            "auroc": _summary_dict(outcome.auroc_summary),
            "aucpr": _summary_dict(outcome.aucpr_summary),
        }
        if outcome.scalers is not None:
            entry["scalers"] = [
                {src: {"mins": sc.mins.tolist(), "maxs": sc.maxs.tolist()}
                 for src, sc in per_repeat.items()}
                for per_repeat in outcome.scalers
            ]
        if artifact_paths and outcome.name in artifact_paths:
            entry["artifacts"] = artifact_paths[outcome.name]
        arms_doc[outcome.name] = entry
    return {
        "format": REPORT_FORMAT,
        "version": __version__,
        "aucpr_method": AUCPR_METHOD,
        "std_method": "sample",
        "config": config_echo,
        "n_records": report.n_records,
        "arm_order": [o.name for o in report.arms],
        "split": {
            "test_fraction": report.reshuffle.test_fraction,
            "seeds": report.split_seeds,
            "plan_digests": report.plan_digests,
        },
        "arms": arms_doc,
    }


def render_markdown(report: BenchmarkReport) -> str:
    names = [o.name for o in report.arms]
    lines = [
        "# Benchmark report",
        "",
        "%d records, %d reshuffles, test fraction %s, mean±STD over repeats."
        % (report.n_records, report.reshuffle.n_repeats, report.reshuffle.test_fraction),
        "",
        "| metric | " + " | ".join(names) + " |",
        "| --- | " + " | ".join("---" for _ in names) + " |",
    ]
    for metric, pick in (("AUROC", lambda o: o.auroc_summary),
                         ("AUCPR", lambda o: o.aucpr_summary)):
        cells = ["%.3f±%.3f" % (pick(o).mean, pick(o).std) for o in report.arms]
        lines.append("| %s | %s |" % (metric, " | ".join(cells)))
    lines.append("")
    return "\n".join(lines)


def render_metrics_csv(report: BenchmarkReport) -> str:
    lines = ["arm,repeat,seed,auroc,aucpr,n_pos,n_neg"]
    for outcome in report.arms:
        for i, r in enumerate(outcome.results):
            lines.append("%s,%d,%d,%r,%r,%d,%d" % (
                outcome.name, i, report.split_seeds[i], r.auroc, r.aucpr,
                r.n_pos, r.n_neg))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    es = read_csv(args.input)
    _write_atomic(Path(args.output), encode_ebf(es))
    print("wrote %s (n=%d, d=%d)" % (args.output, es.n, es.dim))
    return 0


def cmd_synth(args) -> int:
    cfg = load_run_config(args.config)
    set_a, set_b = generate(cfg.synth)
    path_a = cfg.out_dir / cfg.synth_out_a
    path_b = cfg.out_dir / cfg.synth_out_b
    _write_atomic(path_a, encode_ebf(set_a))
    _write_atomic(path_b, encode_ebf(set_b))
    print("wrote %s (n=%d, d=%d)" % (path_a, set_a.n, set_a.dim))
    print("wrote %s (n=%d, d=%d)" % (path_b, set_b.n, set_b.dim))
    return 0


def cmd_fuse(args) -> int:
    set_a = read_ebf(args.input_a)
    set_b = read_ebf(args.input_b)
    set_a, set_b = align(set_a, set_b)
    # standalone utility: no split context, so each scaler sees all rows
    fused = fuse(scale_set(set_a, fit_minmax(set_a.features)),
                 scale_set(set_b, fit_minmax(set_b.features)))
    _write_atomic(Path(args.output), encode_ebf(fused))
    print("wrote %s (n=%d, d=%d)" % (args.output, fused.n, fused.dim))
    return 0


def cmd_train(args) -> int:
    config = load_run_config(args.config).gbdt if args.config else GBDTConfig()
    es = read_ebf(args.input)
    model = train(es.features, es.labels, config)
    _write_text(Path(args.output), model_to_json(model))
    print("wrote %s (%d trees)" % (args.output, len(model.trees)))
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    es = read_ebf(args.input)
    result = evaluate(predict_proba(model, es.features), es.labels)
    print(json.dumps({"auroc": result.auroc, "aucpr": result.aucpr,
                      "n_pos": result.n_pos, "n_neg": result.n_neg},
                     sort_keys=True))
    return 0


def _persist_benchmark_artifacts(cfg: RunConfig, report: BenchmarkReport,
                                 arm_ids: tuple[str, ...]) -> dict:
    """Write per-repeat models/test sets/split plans; return relative paths."""
    out = cfg.out_dir
    paths: dict[str, dict] = {}
    for i, plan in enumerate(report.plans):
        train_ids = [arm_ids[j] for j in plan.train_indices]
        test_ids = [arm_ids[j] for j in plan.test_indices]
        doc = {
            "format": SPLIT_FORMAT,
            "repeat": i,
            "seed": plan.seed,
            "test_fraction": report.reshuffle.test_fraction,
            "n": plan.n,
            "train_indices": plan.train_indices.tolist(),
            "test_indices": plan.test_indices.tolist(),
            "train_ids": train_ids,
            "test_ids": test_ids,
            "index_digest": plan.digest(),
            "ids_digest": ids_digest(train_ids, test_ids),
        }
        _write_text(out / "splits" / ("repeat_%02d.json" % i),
                    json.dumps(doc, sort_keys=True, indent=1))
    for outcome in report.arms:
        arm_dir = safe_name(outcome.name)
        model_paths = []
        test_paths = []
        for i, (model, test_set) in enumerate(zip(outcome.models, outcome.test_sets)):
            mp = Path("models") / arm_dir / ("repeat_%02d.json" % i)
            tp = Path("testsets") / arm_dir / ("repeat_%02d.ebf" % i)
            _write_text(out / mp, model_to_json(model))
            _write_atomic(out / tp, encode_ebf(test_set))
            model_paths.append(str(mp))
            test_paths.append(str(tp))
        paths[outcome.name] = {"models": model_paths, "test_sets": test_paths}
    return paths


def cmd_benchmark(args) -> int:
    cfg = load_run_config(args.config, require_arms=True)
    arms = {name: read_ebf(path) for name, path in cfg.arms.items()}
    report = run_benchmark(arms, cfg.reshuffle, cfg.gbdt,
                           fuse_pairs=cfg.fuse_pairs,
                           collect_artifacts=cfg.persist_artifacts)
    artifact_paths = None
    if cfg.persist_artifacts:
        reference = arms[next(iter(arms))]
        artifact_paths = _persist_benchmark_artifacts(cfg, report, reference.ids)

    config_echo = {
        "arms": {name: str(path) for name, path in cfg.arms.items()},
        "fuse_pairs": [list(p) for p in cfg.fuse_pairs],
        "reshuffle": asdict(report.reshuffle),
        "gbdt": asdict(report.classifier),
        "persist_artifacts": cfg.persist_artifacts,
    }
    doc = report_to_dict(report, config_echo, artifact_paths)
    _write_text(cfg.out_dir / "report.json", json.dumps(doc, sort_keys=True, indent=2))
    _write_text(cfg.out_dir / "report.md", render_markdown(report))
    _write_text(cfg.out_dir / "metrics.csv", render_metrics_csv(report))
    from .plots import save_benchmark_figure

    save_benchmark_figure(report, cfg.out_dir / "figures" / "benchmark.png")
    for outcome in report.arms:
        print("%-24s AUROC %.3f±%.3f  AUCPR %.3f±%.3f" % (
            outcome.name,
            outcome.auroc_summary.mean, outcome.auroc_summary.std,
            outcome.aucpr_summary.mean, outcome.aucpr_summary.std))
    print("wrote %s" % (cfg.out_dir / "report.json"))
    return 0


def cmd_tsne(args) -> int:
    cfg = load_run_config(args.config, require_arms=True)
    if args.arm not in cfg.arms:
        raise ConfigError("unknown arm %r; config declares: %s"
                          % (args.arm, ", ".join(cfg.arms)))
    es = read_ebf(cfg.arms[args.arm])
    sample = subsample_balanced(es, cfg.tsne_per_class, cfg.tsne.seed)
    emb = embed_set(sample, cfg.tsne)
    stem = safe_name(args.arm)
    svg_path = cfg.out_dir / ("%s_tsne.svg" % stem)
    csv_path = cfg.out_dir / ("%s_tsne.csv" % stem)
    png_path = cfg.out_dir / "figures" / ("%s_tsne.png" % stem)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    export_scatter_svg(emb, svg_path)
    export_coords_csv(emb, csv_path)
    from .plots import save_scatter_figure

    save_scatter_figure(emb, png_path, title=args.arm)
    for p in (svg_path, csv_path, png_path):
        print("wrote %s" % p)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecgfuse",
        description="Late-fusion evaluation engine for ECG embedding sets.",
    )
    parser.add_argument("--version", action="version", version="ecgfuse %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="CSV fixture to EBF")
    p.add_argument("input", help="input CSV path")
    p.add_argument("output", help="output EBF path")
    p.set_defaults(func=cmd_convert, strict_input=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding pair")
    p.add_argument("config", help="run-config JSON path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fuse", help="align, normalize and concatenate two EBF files")
    p.add_argument("input_a")
    p.add_argument("input_b")
    p.add_argument("output")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("train", help="train a classifier on one EBF file")
    p.add_argument("input", help="training EBF path")
    p.add_argument("output", help="output model JSON path")
    p.add_argument("--config", help="run-config JSON providing the gbdt section")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score an EBF file with a saved model")
    p.add_argument("model", help="model JSON path")
    p.add_argument("input", help="EBF path to score")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="paired reshuffle comparison of all arms")
    p.add_argument("config", help="run-config JSON path")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("tsne", help="balanced subsample + 2-D layout of one arm")
    p.add_argument("config", help="run-config JSON path")
    p.add_argument("arm", help="arm name from the config")
    p.set_defaults(func=cmd_tsne)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("ecgfuse %s: config error: %s" % (args.command, exc), file=sys.stderr)
        return 2
    except EcgfuseError as exc:
        print("ecgfuse %s: error: %s" % (args.command, exc), file=sys.stderr)
        # input validation on the convert path is a usage error
        return 2 if getattr(args, "strict_input", False) else 1
    except OSError as exc:
        print("ecgfuse %s: i/o error: %s" % (args.command, exc), file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
