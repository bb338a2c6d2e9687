"""
Quaternion infrared/visible image fusion
"""
import argparse
import os
import sys

from qivif.config import Config, load_run_config, render_config
from qivif.exceptions import QivifError
from qivif.utils.style import ANSI_BRIGHT_MAGENTA, ANSI_RED, ANSI_RESET


def _add_config_flags(parser):
    parser.add_argument(
        "--config",
        help="Configuration file of SECTION__FIELD=value lines",
        required=False,
    )
    parser.add_argument(
        "--set",
        help="Override one setting, e.g. --set qhbf.em_iters=6 (repeatable)",
        action="append",
        default=[],
        metavar="SECTION.FIELD=VALUE",
    )
    parser.add_argument(
        "--verbose",
        help="Print per-iteration solver progress",
        action="store_true",
    )
    parser.add_argument(
        "--print-config",
        help="Print the resolved configuration and exit",
        action="store_true",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qivif",
        description="Fuse a degraded visible image with an infrared image in the quaternion domain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fuse = sub.add_parser("fuse", help="Fuse one visible/infrared pair")
    fuse.add_argument("--vis", required=True, help="Visible PNG (colour)")
    fuse.add_argument("--ir", required=True, help="Infrared PNG (grayscale)")
    fuse.add_argument("--out", required=True, help="Output directory")
    fuse.add_argument("--dump-intermediates", action="store_true", help="Write per-stage layers and traces")
    fuse.add_argument("--metrics", action="store_true", help="Write metrics.csv for the fused image")
    _add_config_flags(fuse)

    batch = sub.add_parser("batch", help="Fuse every pair listed in a manifest")
    batch.add_argument("--manifest", required=True, help="Tab-separated visible/infrared pairs")
    batch.add_argument("--out", required=True, help="Output directory")
    batch.add_argument("--workers", type=int, default=None, help="Pairs fused concurrently")
    _add_config_flags(batch)

    ablate = sub.add_parser("ablate", help="Compare pipeline variants on one pair")
    ablate.add_argument("--vis", required=True)
    ablate.add_argument("--ir", required=True)
    ablate.add_argument("--out", required=True)
    ablate.add_argument("--variants", default=None, help="Comma-separated subset of variants")
    _add_config_flags(ablate)

    sweep = sub.add_parser("sweep", help="Vary one setting on one pair")
    sweep.add_argument("--vis", required=True)
    sweep.add_argument("--ir", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--param", required=True, help="section.field to vary")
    sweep.add_argument("--values", required=True, help="Comma-separated values")
    _add_config_flags(sweep)

    samples = sub.add_parser("samples", help="Write synthetic sample pairs and a manifest")
    samples.add_argument("--out", required=True)
    samples.add_argument("--count", type=int, default=3)
    samples.add_argument("--size", type=int, default=64)

    return parser


def run_command(args) -> int:
    config = Config()
    config.verbose = getattr(args, "verbose", False) or config.verbose

    if args.command == "samples":
        from qivif.samples import write_samples

        manifest = write_samples(args.out, count=args.count, size=args.size)
        print(f"[QIVIF] samples written, manifest {manifest}")
        return 0

    overrides = list(args.set)
    if args.command == "batch" and args.workers is not None:
        overrides.append(f"pipeline.workers={args.workers}")
    run = load_run_config(args.config, overrides)

    if args.print_config:
        sys.stdout.write(render_config(run))
        return 0

    if args.command == "fuse":
        from qivif.fusion import run_fuse

        run_fuse(
            args.vis,
            args.ir,
            args.out,
            run,
            dump=args.dump_intermediates,
            with_metrics=args.metrics,
        )
        return 0

    if args.command == "batch":
        from qivif.batch import run_batch

        return run_batch(args.manifest, args.out, run).exit_code

    from qivif.imgcodec import check_pair, read_png
    from qivif.metrics import write_metrics_csv

    visible = read_png(args.vis, mode="rgb")
    infrared = read_png(args.ir, mode="gray")
    check_pair(visible, infrared)

    if args.command == "ablate":
        from qivif.ablation import VARIANTS, run_ablation

        names = args.variants.split(",") if args.variants else list(VARIANTS)
        unknown = [n for n in names if n not in VARIANTS]
        if unknown:
            from qivif.exceptions import InvalidConfigError

            raise InvalidConfigError("unknown ablation variant", ",".join(unknown))
        rows = run_ablation(visible, infrared, run, names)
        target = os.path.join(args.out, "ablation.csv")
        write_metrics_csv(target, rows, mean_row=False, id_column="variant")
    else:
        from qivif.ablation import run_sweep

        rows = run_sweep(visible, infrared, args.param, args.values.split(","), run)
        target = os.path.join(args.out, "sweep.csv")
        write_metrics_csv(target, rows, mean_row=False, id_column="setting")
    print(f"[QIVIF] {len(rows)} rows written to {target}")
    return 0


def main_entry(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = run_command(args)
    except KeyboardInterrupt:
        print(f"\n{ANSI_BRIGHT_MAGENTA}Exiting...{ANSI_RESET}")
        code = 130
    except QivifError as e:
        print(f"{ANSI_RED}[QIVIF][error]{ANSI_RESET} {e}", file=sys.stderr)
        code = e.exit_code
    sys.exit(code)


if __name__ == "__main__":
    main_entry()
