"""Command-line entry point: ``cechecg <stage> [options]``.

Exit codes: 0 success, 2 validation error, 3 numeric error, 4 dependency error.
"""
import argparse
import sys

from . import pipeline
from .config import PipelineConfig, load_config
from .errors import PipelineError


def _global_flags(p, default=None):
    # subcommand copies use SUPPRESS so they never clobber values given before the subcommand
    p.add_argument("--config", default=default, help="key=value pipeline configuration file")
    p.add_argument("--seed", type=int, default=default, help="random seed (overrides config)")
    p.add_argument("--jobs", type=int, default=default, help="parallel workers across subjects")
    p.add_argument("--out", default=default, help="run directory (overrides config)")


def build_parser():
    parser = argparse.ArgumentParser(prog="cechecg", description=__doc__.splitlines()[0])
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, denoise and segment ECG records")
    p.add_argument("paths", nargs="+")
    p.add_argument("--format", choices=["csv", "binary16"])
    p.add_argument("--label", help="class label for binary16 records")

    sub.add_parser("embed", help="project trial matrices to point clouds")

    p = sub.add_parser("complex", help="build filtrations and verify the nerve condition")
    p.add_argument("--kind", choices=["cech", "rips"])
    p.add_argument("--allow-rips", action="store_true",
                   help="record nerve-check violations without failing the run")
    p.add_argument("--clouds", nargs="+", help="point-cloud CSVs to use instead of the embed stage")

    p = sub.add_parser("persist", help="persistence diagrams and Betti curves")
    p.add_argument("--plot", action="store_true", help="also write SVG figures")

    sub.add_parser("features", help="assemble the feature table")
    sub.add_parser("train", help="cross-validated classifier evaluation")
    sub.add_parser("report", help="summary tables")

    for sp in sub.choices.values():
        _global_flags(sp, default=argparse.SUPPRESS)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else PipelineConfig()
    changes = {k: getattr(args, k) for k in ("seed", "jobs", "out") if getattr(args, k) is not None}
    return cfg.replace(**changes) if changes else cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        run = pipeline.Run(cfg.out, cfg)
        cmd = args.command
        if cmd == "ingest":
            subjects = pipeline.cmd_ingest(run, args.paths, args.format, args.label)
            print(f"ingested {len(subjects)} unit(s) into {run.out / 'ingest'}")
        elif cmd == "embed":
            pipeline.cmd_embed(run)
        elif cmd == "complex":
            pipeline.cmd_complex(run, args.kind, args.allow_rips, args.clouds)
        elif cmd == "persist":
            pipeline.cmd_persist(run, plot=args.plot)
        elif cmd == "features":
            pipeline.cmd_features(run)
        elif cmd == "train":
            report = pipeline.cmd_train(run)
            sys.stdout.write(report.summary_csv())
        elif cmd == "report":
            paths = pipeline.cmd_report(run)
            print(f"wrote {paths[0]}")
    except PipelineError as exc:
        print(f"cechecg {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
