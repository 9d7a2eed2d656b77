"""Command-line entry point: ``pcia <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if getattr(args, "set", None):
        text = cfg.dumps() + "\n".join(args.set) + "\n"
        cfg = ExperimentConfig.loads(text)
    if cfg.extra:
        known = ", ".join(sorted(cfg.extra))
        raise SystemExit(f"unknown config keys: {known}")
    return cfg


def cmd_prepare_data(args) -> int:
    from .data import io, splits

    result = io.load_dataset(args.root, args.benchmark, workers=args.workers, seed=args.seed)
    for err in result.errors[:20]:
        print(f"skipped {err.path}: {err.message}", file=sys.stderr)
    if len(result.errors) > 20:
        print(f"... and {len(result.errors) - 20} more", file=sys.stderr)
    path = io.write_cache(result.instances, args.out, args.benchmark)
    print(f"cached {len(result.instances)} instances to {path.parent}")
    for fold in range(splits.n_folds(args.benchmark)) if args.benchmark == splits.SCANOBJECTNN_FS else [0]:
        parts = splits.build_split(result.instances, args.benchmark, fold)
        train, test = parts.counts("train"), parts.counts("test")
        print(f"fold {fold}: train {len(train)} classes / {sum(train.values())} instances, "
              f"test {len(test)} classes / {sum(test.values())} instances")
        if parts.ignored_classes:
            print(f"  classes outside the benchmark: {', '.join(parts.ignored_classes)}")
    return 0


def cmd_inspect_split(args) -> int:
    from .data import io, splits

    counts = None
    if args.cache:
        bench, instances = io.read_cache(args.cache)
        if bench != args.benchmark:
            raise SystemExit(f"cache holds {bench}, not {args.benchmark}")
        parts = splits.build_split(instances, args.benchmark, args.fold)
        counts = {**parts.counts("train"), **parts.counts("test")}
    print(splits.describe_split(args.benchmark, args.fold, counts))
    return 0


def cmd_train(args) -> int:
    from .harness.training import train

    cfg = _load_config(args)
    result = train(cfg, out_dir=args.out)
    print(f"best epoch {result.best_epoch} (validation {result.best_val_acc:.2f}%), "
          f"{len(result.history)} epoch(s){' stopped early' if result.stopped_early else ''}")
    print(f"checkpoints: {result.best_path} {result.last_path}")
    return 0


def cmd_eval(args) -> int:
    import numpy as np
    import torch

    from .harness.datasets import partitioned
    from .harness.evaluation import evaluate_model
    from .harness.reporting import export_embeddings
    from .model import load_checkpoint

    cfg = _load_config(args)
    model, header = load_checkpoint(args.checkpoint, cfg)
    test = partitioned(cfg).test
    report = evaluate_model(model, test, cfg, args.episodes)
    report.meta["checkpoint"] = str(args.checkpoint)
    report.meta["checkpoint_fingerprint"] = header.get("config_fingerprint", "")
    print(report)
    if args.out:
        csv_path, json_path = report.save(args.out)
        print(f"wrote {csv_path} and {json_path}")
    if args.export_embeddings:
        rng = np.random.default_rng(cfg.eval_seed)
        from .data.episodes import sample_points

        feats = []
        with torch.no_grad():
            for start in range(0, len(test), 64):
                batch = np.stack([sample_points(x.points, cfg.n_points, rng) for x in test[start:start + 64]])
                feats.append(model.embed(torch.from_numpy(batch.astype(np.float32))).numpy())
        path = export_embeddings(np.concatenate(feats), [x.label for x in test], args.export_embeddings)
        print(f"wrote embeddings to {path}")
    return 0


def cmd_cross_validate(args) -> int:
    from .harness.crossval import cross_validate

    cfg = _load_config(args)
    folds = None if args.fold is None else [args.fold]
    report = cross_validate(cfg, folds, args.out)
    print(report.summary())
    return 0


def cmd_report(args) -> int:
    import numpy as np

    from .harness.reporting import load_reports, scatter_plot, write_report

    reports = load_reports([args.inp])
    out = Path(args.out)
    txt, csv_path = write_report(reports, out / "ablation")
    print(txt.read_text(), end="")
    for npz in sorted(Path(args.inp).rglob("*.npz")):
        blob = np.load(npz)
        if "features" in blob and "labels" in blob:
            png = scatter_plot(blob["features"], blob["labels"], out / f"{npz.stem}.png")
            if png:
                print(f"wrote {png}")
    print(f"wrote {txt} and {csv_path}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return run_selftest(verbose=args.verbose)


def cmd_show_config(args) -> int:
    print(_load_config(args).dumps(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .data.splits import BENCHMARKS

    parser = argparse.ArgumentParser(prog="pcia", description="Few-shot point cloud classification.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="key = value config file (defaults when omitted)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. spf.k_s=32")
        return p

    p = sub.add_parser("prepare-data", help="ingest a raw dataset into a point cache")
    p.add_argument("--benchmark", required=True, choices=BENCHMARKS)
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True, help="cache directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="seed for mesh surface sampling")
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("inspect-split", help="print class lists and instance counts")
    p.add_argument("--benchmark", required=True, choices=BENCHMARKS)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--cache", help="count instances in this cache instead of using published counts")
    p.set_defaults(func=cmd_inspect_split)

    p = with_config(sub.add_parser("train", help="meta-train one fold"))
    p.add_argument("--out", help="run directory (default: out_dir from the config)")
    p.set_defaults(func=cmd_train)

    p = with_config(sub.add_parser("eval", help="evaluate a checkpoint on fixed-seed test episodes"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, help="episode count (default: test.episodes)")
    p.add_argument("--out", help="write <out>.csv and <out>.json")
    p.add_argument("--export-embeddings", metavar="PATH", help="save test-set embeddings to PATH.npz")
    p.set_defaults(func=cmd_eval)

    p = with_config(sub.add_parser("cross-validate", help="train and evaluate every fold"))
    p.add_argument("--fold", type=int, help="run only this fold")
    p.add_argument("--out", help="output directory (default: out_dir from the config)")
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("report", help="ablation tables and embedding plots from stored reports")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run the built-in invariant and oracle checks")
    p.set_defaults(func=cmd_selftest)

    p = with_config(sub.add_parser("show-config", help="print the resolved configuration"))
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    from .data.io import CacheFormatError, DatasetNotFoundError
    from .data.splits import SplitError
    from .model import CheckpointError

    try:
        return args.func(args)
    except (DatasetNotFoundError, CacheFormatError, SplitError, CheckpointError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
