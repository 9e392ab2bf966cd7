#!/usr/bin/env python3
# src/netalgebra/cli.py

"""
netalgebra command line

Sub-commands:
  check        parse + validate a case, print equation counts and divider checks
  equilibrium  solve and print the operating point
  run          simulate one model and write a CSV trajectory
  compare      compare two CSV trajectories signal by signal
  plot         overlay signals from one or more CSV trajectories into an SVG
  verify       run both models (in parallel) and compare all shared signals
  cases        list the shipped cases

Exit codes:
  0 - success
  1 - error (one line ``ERROR <kind>: <detail>`` on stderr)
  2 - interrupted / cleanup
  3 - comparison outside tolerance
"""

from __future__ import annotations
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.theme import Theme

# Try to import RichHelpFormatter for better help output
try:
    from rich_argparse import RichHelpFormatter
except ImportError:
    RichHelpFormatter = argparse.HelpFormatter

from . import __version__, engine
from .banner import print_logo
from .modules.case_io import resolve_case, shipped_case_names, shipped_case_text
from .modules.comparison import ComparisonReport, compare
from .modules.errors import NetAlgebraError, SemanticError
from .modules.plotting import emit_plot_svg
from .modules.signals import EXIT_INTERRUPTED, GracefulShutdown
from .modules.timeseries import partial_path, read_timeseries_csv, write_timeseries_csv

custom_theme = Theme(
    {
        "info": "cyan",
        "warning": "yellow",
        "error": "bold red",
        "success": "bold green",
        "command": "bold magenta",
    }
)
console = Console(theme=custom_theme)
err_console = Console(theme=custom_theme, stderr=True)

LOG = logging.getLogger("netalgebra")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_OUT_OF_TOLERANCE = 3
DEFAULT_COMPARE_TOL = 1e-6


# ---------------- helpers ----------------
def setup_logging(level: int = logging.INFO) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, rich_tracebacks=True)],
        force=True,
    )


def report_error(exc: NetAlgebraError) -> None:
    # soft_wrap keeps the error on one parseable line
    err_console.print(
        f"ERROR {exc.kind}: {exc.detail}", markup=False, highlight=False, soft_wrap=True
    )
    if isinstance(exc, SemanticError):
        for issue in exc.issues:
            err_console.print(f"  - {issue}", markup=False, highlight=False, soft_wrap=True)


def _signal_list(raw: Optional[str]) -> Optional[List[str]]:
    if raw is None:
        return None
    names = [s.strip() for s in raw.split(",") if s.strip()]
    return names or None


def _report_table(report: ComparisonReport, tol: float) -> Table:
    table = Table(title=f"Deviation per signal (tol {tol:g})")
    table.add_column("signal", style="command")
    table.add_column("max |a-b|", justify="right")
    table.add_column("rms", justify="right")
    table.add_column("t(max) [s]", justify="right")
    table.add_column("ok", justify="center")
    for name, dev in report.deviations.items():
        ok = "[success]yes[/success]" if dev.max_abs <= tol else "[error]NO[/error]"
        table.add_row(name, f"{dev.max_abs:.3e}", f"{dev.rms:.3e}", f"{dev.time_of_max:.6g}", ok)
    return table


def _finish_comparison(report: ComparisonReport, tol: float) -> int:
    console.print(_report_table(report, tol))
    failures = report.failures(tol)
    if failures:
        name, worst = report.worst()
        console.print(
            f"[error]{len(failures)} signal(s) outside tolerance; "
            f"worst {name} = {worst.max_abs:.3e}[/error]"
        )
        return EXIT_OUT_OF_TOLERANCE
    console.print(f"[success]All {len(report.deviations)} signals within {tol:g}[/success]")
    return EXIT_OK


def _write_guarded(series, dest: Path) -> Path:
    """Write a CSV; an interrupt during the write removes the partial file."""
    shutdown = GracefulShutdown()
    shutdown.register(lambda: partial_path(dest).unlink(missing_ok=True))
    with shutdown:
        return write_timeseries_csv(series, dest)


def _sim_config(case, args: argparse.Namespace):
    return engine.with_overrides(
        case.sim,
        dt=args.dt,
        t_end=args.t_end,
        stride=args.stride,
        wrap_phase=True if args.wrap_phase else None,
    )


# ---------------- sub-commands ----------------
def cmd_check(args: argparse.Namespace) -> int:
    case = resolve_case(args.case)
    report = engine.check_case(case)
    table = Table(title=f"Case {report.name}", show_header=False)
    table.add_column("property", style="info")
    table.add_column("value", justify="right")
    split = f"{report.n_source_nodes} / {report.n_intermediate_nodes}"
    table.add_row("nodes (source / intermediate)", split)
    table.add_row("branches", str(report.n_branches))
    for kind, count in report.device_counts.items():
        table.add_row(f"{kind} devices", str(count))
    table.add_row("differential equations", str(report.dae_counts[0]))
    table.add_row("algebraic equations", str(report.dae_counts[1]))
    for label, value in report.divider.as_dict().items():
        table.add_row(label, f"{value:.3e}")
    console.print(table)
    console.print(f"[success]{report.name}: valid[/success]")
    return EXIT_OK


def cmd_equilibrium(args: argparse.Namespace) -> int:
    case = resolve_case(args.case)
    eq = engine.equilibrium(case, after_events=args.after_events)
    states = Table(title=f"Equilibrium of {case.name}")
    states.add_column("state", style="command")
    states.add_column("value", justify="right")
    for name, value in eq.state.as_dict().items():
        states.add_row(name, f"{value:.12g}")
    console.print(states)
    volts = Table(title="Node voltages")
    volts.add_column("node", style="info")
    volts.add_column("u_x", justify="right")
    volts.add_column("u_y", justify="right")
    volts.add_column("|u|", justify="right")
    for node, u in eq.node_voltages.items():
        volts.add_row(node, f"{u.x:.12g}", f"{u.y:.12g}", f"{u.magnitude:.12g}")
    console.print(volts)
    console.print(f"residual {eq.residual:.3e} after {eq.iterations} Newton iteration(s)")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    case = resolve_case(args.case)
    config = _sim_config(case, args)
    series = engine.run_model(case, args.model, config)
    dest = Path(args.out) if args.out else Path(f"{case.name}_{args.model}.csv")
    _write_guarded(series, dest)
    console.print(
        f"[success]{args.model}: {series.n_samples} samples x "
        f"{len(series.columns)} signals -> {dest}[/success]"
    )
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    ts_a = read_timeseries_csv(args.a)
    ts_b = read_timeseries_csv(args.b)
    report = compare(ts_a, ts_b, _signal_list(args.signals))
    return _finish_comparison(report, args.tol)


def cmd_plot(args: argparse.Namespace) -> int:
    series = [read_timeseries_csv(p) for p in args.csv]
    labels = _signal_list(args.labels) or [Path(p).stem for p in args.csv]
    emit_plot_svg(series, _signal_list(args.signals) or [], args.out, labels, args.title)
    console.print(f"[success]Wrote {args.out}[/success]")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    case = resolve_case(args.case)
    config = _sim_config(case, args)
    report, reduced, reference = engine.verify_case(
        case, config, _signal_list(args.signals), parallel=not args.serial
    )
    if args.out_dir:
        out_dir = Path(args.out_dir)
        _write_guarded(reduced, out_dir / f"{case.name}_reduced.csv")
        _write_guarded(reference, out_dir / f"{case.name}_reference.csv")
    return _finish_comparison(report, args.tol)


def cmd_cases(args: argparse.Namespace) -> int:
    if args.show:
        console.print(
            shipped_case_text(args.show), markup=False, highlight=False, soft_wrap=True
        )
        return EXIT_OK
    for name in shipped_case_names():
        console.print(name)
    return EXIT_OK


# ---------------- parser ----------------
def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, default=None, help="Fixed step size in seconds")
    p.add_argument("--t-end", type=float, default=None, help="Simulated horizon in seconds")
    p.add_argument("--stride", type=int, default=None, help="Record every N-th step")
    p.add_argument(
        "--wrap-phase", action="store_true", help="Record phi wrapped to (-pi, pi]"
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="netalgebra",
        description="Algebraic-network dynamics of converter-dominated grids",
        formatter_class=RichHelpFormatter,
    )
    p.add_argument("--debug", action="store_true", help="Enable debug logging")
    p.add_argument("--no-banner", action="store_true", help="Do not print the logo")
    p.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
        help="Show program's version number and exit",
    )
    sub = p.add_subparsers(dest="command", metavar="<command>")
    case_help = "Case file path or shipped case name (see `netalgebra cases`)"

    s = sub.add_parser("check", help="Validate a case", formatter_class=RichHelpFormatter)
    s.add_argument("case", help=case_help)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser(
        "equilibrium", help="Solve the operating point", formatter_class=RichHelpFormatter
    )
    s.add_argument("case", help=case_help)
    s.add_argument(
        "--after-events",
        action="store_true",
        help="Apply every event first (post-step operating point)",
    )
    s.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("run", help="Simulate and write CSV", formatter_class=RichHelpFormatter)
    s.add_argument("case", help=case_help)
    s.add_argument("--model", choices=engine.MODELS, default="reduced")
    s.add_argument("--out", default=None, help="CSV path (default <case>_<model>.csv)")
    _add_sim_flags(s)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser(
        "compare", help="Compare two CSV trajectories", formatter_class=RichHelpFormatter
    )
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--signals", default=None, help="Comma-separated names (default: shared)")
    s.add_argument("--tol", type=float, default=DEFAULT_COMPARE_TOL)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser(
        "plot", help="Overlay signals into an SVG", formatter_class=RichHelpFormatter
    )
    s.add_argument("csv", nargs="+")
    s.add_argument("--signals", required=True, help="Comma-separated signal names")
    s.add_argument("--out", required=True, help="SVG path")
    s.add_argument("--labels", default=None, help="Comma-separated legend labels")
    s.add_argument("--title", default=None)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser(
        "verify", help="Run both models and compare", formatter_class=RichHelpFormatter
    )
    s.add_argument("case", help=case_help)
    s.add_argument("--signals", default=None, help="Comma-separated names (default: shared)")
    s.add_argument("--tol", type=float, default=engine.DEFAULT_VERIFY_TOL)
    s.add_argument("--out-dir", default=None, help="Also write both trajectories here")
    s.add_argument("--serial", action="store_true", help="Run the models one after another")
    _add_sim_flags(s)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("cases", help="List shipped cases", formatter_class=RichHelpFormatter)
    s.add_argument("--show", default=None, metavar="NAME", help="Print one case file")
    s.set_defaults(func=cmd_cases)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_OK

    setup_logging(logging.DEBUG if args.debug else logging.INFO)
    if not args.no_banner:
        print_logo(err_console)

    try:
        return args.func(args)
    except NetAlgebraError as exc:
        report_error(exc)
        return EXIT_ERROR
    except ValueError as exc:
        err_console.print(
            f"ERROR ValueError: {exc}", markup=False, highlight=False, soft_wrap=True
        )
        return EXIT_ERROR
    except KeyboardInterrupt:
        LOG.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except SystemExit as se:
        return int(se.code) if isinstance(se.code, int) else EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
