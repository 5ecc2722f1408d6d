import argparse
import hashlib
import os
import sys
from loguru import logger

from ne_moea import (
    ConfigError,
    DimensionError,
    InstanceParseError,
    KnapsackInstance,
    NKInstance,
    RandomSource,
    ResultsParseError,
    load_config,
    load_preset,
    plot_fronts,
    read_front,
    read_results,
    report,
    run_experiment,
    write_instance,
)
from ne_moea.experiment import PRESETS, FAMILIES
from ne_moea.harness import BASELINE, REVERSAL_TOLERANCE


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ne_moea",
        description="Non-elitist multi-objective EA and baselines on knapsack and NK problems",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-instance", help="Generate a seeded problem instance file")
    gen.add_argument("--family", choices=FAMILIES, required=True, help="Problem family")
    gen.add_argument("--n", type=int, required=True, help="Genome length")
    gen.add_argument("--k", type=int, default=None, help="Epistasis degree, NK only")
    gen.add_argument("--m", type=int, default=2, help="Number of objectives. Default is 2")
    gen.add_argument("--seed", type=int, default=0, help="Instance seed. Default is 0")
    gen.add_argument(
        "--out", type=str, default=".", help="Directory to write the instance file to"
    )

    run = commands.add_parser("run", help="Run an experiment")
    source = run.add_mutually_exclusive_group()
    source.add_argument("--config", type=str, help="Path to an experiment YAML file")
    source.add_argument(
        "--preset",
        choices=PRESETS,
        default=None,
        help="Bundled experiment; 'desk' is used when no config is given",
    )
    run.add_argument("--out", type=str, default=None, help="Output directory override")
    run.add_argument("--workers", type=int, default=None, help="Worker process override")
    run.add_argument("--seed", type=int, default=None, help="Master seed override")

    rep = commands.add_parser("report", help="Summarize a results CSV")
    rep.add_argument("csv", type=str, help="Results CSV written by 'run'")
    rep.add_argument(
        "--out", type=str, default=None, help="Summary directory, defaults to the CSV's"
    )
    rep.add_argument(
        "--baseline",
        type=str,
        default=BASELINE,
        help=f"Algorithm the others are tested against. Default is '{BASELINE}'",
    )
    rep.add_argument(
        "--tolerance",
        type=float,
        default=REVERSAL_TOLERANCE,
        help=f"Margin for flagging a beaten baseline. Default is {REVERSAL_TOLERANCE}",
    )

    plot = commands.add_parser("plot", help="Scatter front dumps into an SVG file")
    plot.add_argument(
        "--series",
        nargs=2,
        action="append",
        metavar=("LABEL", "PATH"),
        required=True,
        help="A labelled front dump; repeat for up to four series",
    )
    plot.add_argument("--title", type=str, default=None, help="Plot title")
    plot.add_argument("--out", type=str, required=True, help="SVG file to write")
    return parser


def gen_instance(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if args.n < 1:
        parser.error(f"--n must be positive, got {args.n}")
    if args.m < 2:
        parser.error(f"--m must be at least 2, got {args.m}")
    if args.family == "nk":
        if args.k is None:
            parser.error("--k is required for --family nk")
        if not 0 <= args.k <= args.n - 1:
            parser.error(f"--k must satisfy 0 <= k <= n-1, got k={args.k}, n={args.n}")
        instance = NKInstance.generate(args.n, args.k, args.m, RandomSource(args.seed))
        name = f"nk_n{args.n}_k{args.k}_m{args.m}_s{args.seed}.txt"
    else:
        if args.k is not None:
            parser.error("--k applies to --family nk only")
        instance = KnapsackInstance.generate(args.n, args.m, RandomSource(args.seed))
        name = f"kp_n{args.n}_m{args.m}_s{args.seed}.txt"
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    write_instance(instance, path)
    with open(path, "rb") as file:
        digest = hashlib.sha256(file.read()).hexdigest()
    print(f"{path} sha256:{digest}")


def run_command(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if args.workers is not None and args.workers < 1:
        parser.error(f"--workers must be positive, got {args.workers}")
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = load_preset(args.preset or "desk")
    config = config.with_overrides(output=args.out, workers=args.workers, seed=args.seed)
    os.makedirs(config.output, exist_ok=True)
    sink = logger.add(os.path.join(config.output, "log.txt"), enqueue=True)
    try:
        logger.info(f"Running experiment '{config.source}' into '{config.output}'")
        run_experiment(config)
    finally:
        logger.remove(sink)


def report_command(args: argparse.Namespace) -> None:
    records = read_results(args.csv)
    if not records:
        raise ResultsParseError(f"'{args.csv}' holds no runs", 2)
    output = args.out if args.out is not None else os.path.dirname(os.path.abspath(args.csv))
    try:
        text = report(records, output, baseline=args.baseline, tolerance=args.tolerance)
    except ValueError as e:
        if isinstance(e, ResultsParseError):
            raise
        raise ResultsParseError(str(e), 1) from e
    print(text, end="")


def plot_command(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if len(args.series) > 4:
        parser.error(f"At most 4 --series can be plotted, got {len(args.series)}")
    series = [(label, read_front(path)) for label, path in args.series]
    plot_fronts(series, args.out, title=args.title)


def main(argv: list[str] | None = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-instance":
            gen_instance(args, parser)
        elif args.command == "run":
            run_command(args, parser)
        elif args.command == "report":
            report_command(args)
        elif args.command == "plot":
            plot_command(args, parser)
    except (ConfigError, DimensionError, InstanceParseError, ResultsParseError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
