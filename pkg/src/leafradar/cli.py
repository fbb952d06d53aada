"""Command-line entry point.

Subcommands mirror the harness operations:

    leafradar simulate    --out data.lfds [--config cfg.json] [--seed N]
                          [--raw-dump capture.lfrd]
    leafradar train       --data data.lfds --out report.json
                          [--split kfold10|logo_distance] [--variant ...]
                          [--folds K] [--checkpoints DIR]
    leafradar angle-sweep --data data.lfds --counts 1,3,11 --out report.json
    leafradar ingest      --raw capture.lfrd --out data.lfds
    leafradar eval        --data data.lfds --checkpoint model.lfnn [--out r.json]

Success prints a one-line JSON summary on stdout and exits 0.  Failures
exit nonzero with a machine-readable JSON object on stderr:
{"error": "<ErrorClassName>", "message": "..."}.  The config file
schema ships with the package as leafradar/config_schema.json.
"""

import argparse
import json
import sys
from pathlib import Path

from . import dataset, experiments, net
from .errors import ConfigError, IoError, LeafRadarError


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _load_config(path):
    if path is None:
        return experiments.ExperimentConfig(), experiments.TrainConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"reading config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return experiments.config_from_dict(raw)


def _write(path, payload: bytes):
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise IoError(f"writing {path}: {exc}") from exc


def _cmd_simulate(args):
    config, _ = _load_config(args.config)
    manifest = experiments.cmd_simulate(config, args.seed, args.out,
                                        raw_path=args.raw_dump)
    _emit({"out": args.out, "samples": manifest.samples,
           "iota": manifest.iota, "leaf_type": manifest.leaf_type})
    return 0


def _cmd_train(args):
    _, tcfg = _load_config(args.config)
    samples, manifest = dataset.load_dataset(args.data)
    variants = tuple(args.variant.split(",")) if args.variant != "all" \
        else net.VARIANTS
    if args.checkpoints:
        Path(args.checkpoints).mkdir(parents=True, exist_ok=True)
    report, rows = experiments.cmd_train(
        samples, manifest, split=args.split, variants=variants, tcfg=tcfg,
        seed=args.seed, k=args.folds, checkpoint_dir=args.checkpoints)
    _write(args.out, experiments.report_json(report))
    _write(args.out + ".csv", experiments.predictions_csv(rows))
    _emit({"out": args.out, "overall_mae": report["overall_mae"],
           "ablation": report["ablation"]})
    return 0


def _cmd_angle_sweep(args):
    _, tcfg = _load_config(args.config)
    samples, manifest = dataset.load_dataset(args.data)
    try:
        counts = [int(c) for c in args.counts.split(",") if c.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --counts {args.counts!r}: {exc}") from exc
    if not counts:
        raise ConfigError("--counts must name at least one subset size")
    report = experiments.cmd_angle_sweep(samples, manifest, counts,
                                         tcfg=tcfg, seed=args.seed, k=args.folds)
    _write(args.out, experiments.report_json(report))
    _emit({"out": args.out, "angle_curve": report["angle_curve"]})
    return 0


def _cmd_ingest(args):
    samples, manifest = experiments.cmd_ingest(args.raw, out_path=args.out)
    _emit({"out": args.out, "samples": manifest.samples, "iota": manifest.iota})
    return 0


def _cmd_eval(args):
    samples, _ = dataset.load_dataset(args.data)
    report = experiments.cmd_eval(samples, args.checkpoint)
    if args.out:
        _write(args.out, experiments.report_json(report))
    _emit({"overall_mae": report["overall_mae"], "samples": report["samples"],
           "variant": report["variant"]})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="leafradar",
        description="Synthetic mmWave leaf-moisture sensing experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, config=True):
        if config:
            p.add_argument("--config", help="experiment config JSON "
                           "(schema: leafradar/config_schema.json)")
        p.add_argument("--seed", type=int, default=0,
                       help="experiment seed (default 0)")

    p = sub.add_parser("simulate", help="synthesize a feature dataset")
    common(p)
    p.add_argument("--out", required=True, help="output dataset path (.lfds)")
    p.add_argument("--raw-dump", help="also write raw frames here (.lfrd)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train", help="cross-validated training and metrics")
    common(p)
    p.add_argument("--data", required=True, help="dataset path (.lfds)")
    p.add_argument("--split", choices=experiments.SPLITS, default="kfold10")
    p.add_argument("--variant", default="Full",
                   help="comma list of RSS_only,RSS_plus_Ang,Full or 'all'")
    p.add_argument("--folds", type=int, default=10,
                   help="fold count for kfold10 (default 10)")
    p.add_argument("--checkpoints", help="directory for per-fold checkpoints")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("angle-sweep",
                       help="MAE versus number of steering angles")
    common(p)
    p.add_argument("--data", required=True, help="dataset path (.lfds)")
    p.add_argument("--counts", required=True,
                   help="comma list of angle-subset sizes, e.g. 1,3,11")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=_cmd_angle_sweep)

    p = sub.add_parser("ingest", help="raw capture file -> feature dataset")
    common(p, config=False)
    p.add_argument("--raw", required=True, help="raw capture path (.lfrd)")
    p.add_argument("--out", required=True, help="output dataset path (.lfds)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    common(p, config=False)
    p.add_argument("--data", required=True, help="dataset path (.lfds)")
    p.add_argument("--checkpoint", required=True, help="model path (.lfnn)")
    p.add_argument("--out", help="report JSON path (optional)")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LeafRadarError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    except OSError as exc:
        json.dump({"error": "IoError", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
