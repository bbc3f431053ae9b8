"""Command-line entry point.

Usage::

    uv run dampedwave run --config src/dampedwave/presets/damped_cubic_small.toml
    uv run dampedwave sweep --config src/dampedwave/presets/amplitude_sweep.toml
    uv run dampedwave lemma-test --count 200 --seed 0
    uv run dampedwave linear-verify
    uv run dampedwave report runs/damped_cubic_small

Exit codes: 0 success or global run, 1 error, 2 blow-up detected.
"""

import argparse
import logging
from pathlib import Path
from typing import Sequence

from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from src.utils.env_vars import Configs
from src.utils.logging import set_up_logging
from src.utils.pretty_printing import to_json

from .config import RunConfig, load_run_config, load_sweep_config
from .diagnostics import read_samples_csv
from .errors import DampedWaveError
from .lemmas import DEFAULT_CATALOG_SIZE, run_lemma_catalog
from .runner import (
    EXIT_ERROR,
    EXIT_GLOBAL,
    LINEAR_VERIFY_TOLERANCE,
    execute_run,
    linear_verify_config,
    read_summary,
    run_linear_verify,
    sample_verdicts,
)
from .sweep import run_sweep


logger = logging.getLogger(__name__)


def _output_dir(flag: Path | None, fallback: Path, configs: Configs) -> Path:
    """``DAMPEDWAVE_OUT`` beats ``--out``, which beats the config."""
    return configs.out or flag or fallback


def _threads(args: argparse.Namespace, configs: Configs) -> int | None:
    return args.threads or configs.threads


def _overrides(args: argparse.Namespace) -> dict[str, object]:
    overrides: dict[str, object] = {}
    if getattr(args, "seed", None) is not None:
        overrides["initial.seed"] = args.seed
    if getattr(args, "dt_override", None) is not None:
        overrides["stepper.dt"] = args.dt_override
    return overrides


def _resolve(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    overrides = _overrides(args)
    return cfg.with_overrides(overrides) if overrides else cfg


def cmd_run(args: argparse.Namespace, configs: Configs) -> int:
    """Evolve one configuration."""
    cfg = _resolve(load_run_config(args.config), args)
    out_dir = _output_dir(args.out, cfg.outputs.directory, configs)
    summary = execute_run(
        cfg,
        out_dir,
        run_id=cfg.name,
        threads=_threads(args, configs),
        resume=args.resume,
    )
    print(f"{summary.outcome.kind} ({summary.outcome.reason}) at t={summary.outcome.t_final:.6g}")
    return summary.exit_code


def cmd_sweep(args: argparse.Namespace, configs: Configs) -> int:
    """Evolve every point of a sweep grid."""
    sweep_cfg = load_sweep_config(args.config)
    overrides = _overrides(args)
    if overrides:
        sweep_cfg = sweep_cfg.model_copy(
            update={"base": sweep_cfg.base.with_overrides(overrides)}
        )
    out_dir = _output_dir(args.out, sweep_cfg.base.outputs.directory, configs)
    summary = run_sweep(sweep_cfg, out_dir, threads=_threads(args, configs))
    print(
        f"{len(summary.runs)} runs: {summary.family.n_global} global, "
        f"{summary.family.n_blowup} blow-up"
    )
    return EXIT_GLOBAL if summary.all_completed else EXIT_ERROR


def cmd_lemma_test(args: argparse.Namespace, configs: Configs) -> int:
    """Check both ODE lemmas on the manufactured catalog."""
    report = run_lemma_catalog(count=args.count, seed=args.seed)
    out_dir = configs.out or args.out
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "lemma_report.json").write_text(to_json(report) + "\n")
    print(
        f"{report.n_cases} cases: {report.n_hypothesis_satisfied} satisfy their "
        f"hypothesis, {report.n_conclusion_failures} conclusion failures"
    )
    return EXIT_GLOBAL if report.passed else EXIT_ERROR


def cmd_linear_verify(args: argparse.Namespace, configs: Configs) -> int:
    """Compare a linear single-mode run with the damped-oscillator solution."""
    base = load_run_config(args.config) if args.config else linear_verify_config()
    cfg = _resolve(base, args)
    out_dir = _output_dir(args.out, cfg.outputs.directory, configs)
    summary = run_linear_verify(cfg, out_dir, threads=_threads(args, configs))
    error = summary.error_vs_closed_form
    print(f"error_vs_closed_form = {error:.3e} (tolerance {LINEAR_VERIFY_TOLERANCE:g})")
    return EXIT_GLOBAL if error is not None and error <= LINEAR_VERIFY_TOLERANCE else EXIT_ERROR


def cmd_report(args: argparse.Namespace, configs: Configs) -> int:
    """Recompute sample-based verdicts of a run or sweep directory and tabulate them."""
    directory = Path(args.directory)
    if (directory / "summary.json").exists():
        run_dirs = [directory]
    else:
        run_dirs = sorted(_p.parent for _p in directory.glob("*/summary.json"))
    if not run_dirs:
        raise FileNotFoundError(f"no summary.json under {directory}")

    table = Table(title=f"Verdicts in {directory}")
    for column in ("run", "outcome", "check", "holds", "margin", "details"):
        table.add_column(column)

    all_hold = True
    for run_dir in run_dirs:
        summary = read_summary(run_dir)
        samples = read_samples_csv(run_dir / "samples.csv")
        verdicts = sample_verdicts(
            samples,
            global_run=summary.outcome.kind == "global",
            h1_applicable=summary.hypothesis.p is None
            or summary.hypothesis.part_iii_applicable,
            i0=summary.i0,
            epsilon=summary.hypothesis.epsilon,
            damped=summary.family.gamma_inf > 0,
        )
        for verdict in verdicts:
            all_hold &= verdict.holds or verdict.informative
            table.add_row(
                summary.run_id,
                summary.outcome.kind,
                verdict.name,
                "yes" if verdict.holds else "[red]no[/red]",
                f"{verdict.margin:.3e}",
                verdict.details,
            )

    Console().print(table)
    return EXIT_GLOBAL if all_hold else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    """Parser with one sub-command per workflow."""
    parser = argparse.ArgumentParser(
        prog="dampedwave",
        description="Simulate and verify the damped focusing Klein-Gordon equation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser, config_required: bool) -> None:
        sub.add_argument("--config", type=Path, required=config_required)
        sub.add_argument("--out", type=Path, default=None)
        sub.add_argument("--threads", type=int, default=None)
        sub.add_argument("--dt-override", dest="dt_override", type=float, default=None)

    run = commands.add_parser("run", help="Evolve one configuration.")
    common(run, config_required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--resume", type=Path, default=None, help="Checkpoint to resume from.")
    run.set_defaults(handler=cmd_run)

    sweep = commands.add_parser("sweep", help="Evolve a parameter grid in parallel.")
    common(sweep, config_required=True)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.set_defaults(handler=cmd_sweep)

    lemma = commands.add_parser("lemma-test", help="Check the ODE lemmas on a catalog.")
    lemma.add_argument("--count", type=int, default=DEFAULT_CATALOG_SIZE)
    lemma.add_argument("--seed", type=int, default=0)
    lemma.add_argument("--out", type=Path, default=None)
    lemma.set_defaults(handler=cmd_lemma_test)

    linear = commands.add_parser(
        "linear-verify", help="Check a linear run against the closed-form mode solution."
    )
    common(linear, config_required=False)
    linear.set_defaults(handler=cmd_linear_verify)

    report = commands.add_parser("report", help="Tabulate verdicts of saved runs.")
    report.add_argument("directory", type=Path)
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the sub-command and map failures to exit code 1."""
    load_dotenv()
    configs = Configs()
    set_up_logging(configs.log_level)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args, configs)
    except (DampedWaveError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
