"""
Schur-sigma Toolkit Command Line

Commands:
    verify-theorem1   order, class and derived length of G_n
    pquotient         3-quotient of a presentation file
    descend           constrained descendant search from [3,3]
    sl2               SL_2(Z_3) truncation checks
    classgroup        3-class group scan of imaginary quadratic fields
    aqi               abelian quotient invariants of maximal subgroups
    report-all        everything above in one report

Exit codes: 0 all assertions passed, 1 an assertion failed, 2 usage or
configuration error.

Usage:
    python main.py verify-theorem1 --n 1-4 --json theorem1.json
    python main.py sl2 --check lemma3 --precision 4 --n 2
    python main.py classgroup --min -50000 --max -1 --sylow3 3,3 --csv scan.csv --threads 4
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import structlog

from cli import commands
from models.constraint_model import AQIConstraint
from models.report_model import Report, RunConfig
from services import metrics
from services.abelian import AbelianInvariants
from services.config import PROFILES, configure_logging, get_settings, override_settings
from services.errors import ConfigurationError, ToolkitError
from services.tracing import initialize_tracing

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def parse_n_range(text: str) -> list[int]:
    """'3', '1-4' or '1,2,4'"""
    values = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                values.extend(range(int(lo), int(hi) + 1))
            elif part:
                values.append(int(part))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad n range {text!r}") from e
    if not values:
        raise argparse.ArgumentTypeError("n range must not be empty")
    return values


def _power_int(text: str) -> int:
    try:
        if "**" in text or "^" in text:
            base, exp = text.replace("^", "**").split("**", 1)
            return int(base) ** int(exp)
        return int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer or power like 3^20, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=parse_n_range, help="n values: 3, 1-4 or 1,2,4")
    common.add_argument("--precision", type=int, default=4, help="3-adic precision M")
    common.add_argument("--max-order", type=_power_int, help="largest group order, e.g. 3^20")
    common.add_argument("--threads", type=int, help="worker processes for scans")
    common.add_argument("--json", dest="json_path", help="write the JSON report here")
    common.add_argument("--csv", "--out", dest="csv_path", help="write scan rows as CSV here")
    common.add_argument("--seed", type=int, help="seed for sampled checks")
    common.add_argument("--profile", choices=PROFILES, help="settings profile")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(prog="schur-sigma", description="Verification toolkit for the Schur-sigma 3-groups G_n")
    sub = parser.add_subparsers(dest="command", required=True)

    theorem = sub.add_parser("verify-theorem1", parents=[common], help="order, class and derived length of G_n")
    theorem.add_argument("--presentation-file", help="compute the 3-quotient of this presentation instead")
    theorem.add_argument("--max-class", type=int, default=12)

    pq = sub.add_parser("pquotient", parents=[common], help="3-quotient of a presentation file")
    pq.add_argument("--presentation-file", required=True)
    pq.add_argument("--max-class", type=int, default=12)
    pq.add_argument("--output", help="write the pc presentation here instead of stdout")

    descend = sub.add_parser("descend", parents=[common], help="constrained descendant search")
    descend.add_argument("--constraint", help="file with 'whole:' and 'max:' lines")
    descend.add_argument("--output", help="write terminal pc presentations here instead of stdout")

    sl2 = sub.add_parser("sl2", parents=[common], help="SL_2(Z_3) truncation checks")
    sl2.add_argument("--check", choices=commands.SL2_CHECKS, required=True)

    scan = sub.add_parser("classgroup", parents=[common], help="3-class group scan")
    scan.add_argument("--min", dest="dmin", type=int, default=-50000)
    scan.add_argument("--max", dest="dmax", type=int, default=-1)
    scan.add_argument("--sylow3", type=AbelianInvariants.parse, default=AbelianInvariants((3, 3)))

    sub.add_parser("aqi", parents=[common], help="AQI of maximal subgroups of G_n")
    sub.add_parser("report-all", parents=[common], help="run every command")
    return parser


def _apply_settings(args: argparse.Namespace):
    changes = {}
    if args.profile:
        changes["profile"] = args.profile
        if args.profile == "ci":
            changes["bfs_cap"] = min(get_settings().bfs_cap, 3**10)
    for field in ("max_order", "threads", "seed", "log_level"):
        value = getattr(args, field)
        if value is not None:
            changes[field] = value.upper() if field == "log_level" else value
    return override_settings(**changes) if changes else get_settings()


def _run_config(args: argparse.Namespace, settings) -> RunConfig:
    n_values = args.n or ([1, 2, 3, 4, 5] if settings.extended else [1, 2, 3, 4])
    extra = {}
    for key in ("check", "dmin", "dmax", "presentation_file", "constraint", "max_class"):
        if getattr(args, key, None) is not None:
            extra[key] = getattr(args, key)
    if getattr(args, "sylow3", None) is not None:
        extra["sylow3"] = str(args.sylow3)
    try:
        return RunConfig(
            command=args.command,
            n_values=n_values,
            precision=args.precision,
            max_order=settings.max_order,
            threads=settings.threads,
            json_path=args.json_path,
            csv_path=args.csv_path,
            seed=settings.seed,
            profile=settings.profile,
            extra=extra,
        )
    except ValueError as e:
        raise ConfigurationError(str(e)) from e


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e}") from e


def _emitter(path: Optional[str]):
    if not path:
        return lambda text: print(text, end="")
    Path(path).write_text("")

    def emit(text: str):
        with open(path, "a") as handle:
            handle.write(text + "\n")

    return emit


def dispatch(args: argparse.Namespace, config: RunConfig) -> Report:
    if args.command == "pquotient" or (args.command == "verify-theorem1" and args.presentation_file):
        return commands.cmd_pquotient(
            config, _read(args.presentation_file), args.max_class, _emitter(getattr(args, "output", None))
        )
    if args.command == "verify-theorem1":
        return commands.cmd_verify_theorem1(config)
    if args.command == "descend":
        constraint = AQIConstraint.from_text(_read(args.constraint)) if args.constraint else None
        return commands.cmd_descend(config, constraint, _emitter(args.output))
    if args.command == "sl2":
        return commands.cmd_sl2(config, args.check, args.precision, config.n_values[0])
    if args.command == "classgroup":
        return commands.cmd_classgroup(config, args.dmin, args.dmax, args.sylow3)
    if args.command == "aqi":
        return commands.cmd_aqi(config)
    return commands.cmd_report_all(config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = _apply_settings(args)
        configure_logging(settings.log_level)
        initialize_tracing("schur_sigma", settings.tracing_enabled)
        config = _run_config(args, settings)
        logger.info("command_started", command=args.command, n_values=config.n_values, profile=config.profile)
        report = dispatch(args, config)
    except (ConfigurationError, ValueError) as e:
        # ToolkitError subclasses that are also ValueError land here too
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ToolkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED

    for line in report.summary_lines():
        print(line, file=sys.stderr)
    if config.json_path:
        Path(config.json_path).write_text(report.to_json())
        logger.info("report_written", path=config.json_path)
    logger.debug("timings", summary=metrics.get_summary())
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
