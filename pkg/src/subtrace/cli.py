"""Command-line front end.

Every subcommand writes one table (CSV by default, or JSON) to ``--out`` or
stdout.  Exit codes: 0 success, 1 verification failed, 2 bad arguments,
3 divergent trace, 4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .asymptotics import (
    RatioReport,
    ratio_table,
    subordinated_counting_asymptote,
    theorem_asymptote,
    weyl_asymptote,
)
from .bernstein import BernsteinFunction
from .errors import DivergentTrace, ResourceExceeded, SpecParseError
from .spectra import ManifoldSpectrum, counting, spectrum_arrays
from .trace_engine import counting_subordinated, trace

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGENT = 3
EXIT_RESOURCE = 4

COMMANDS = ("spectrum", "count", "trace", "asymptote", "verify")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    manifold: ManifoldSpectrum
    psi: BernsteinFunction | None = None
    max_eig: float = 0.0
    mode: str = "trace"
    t_start: float = 1.0
    t_factor: float = 0.5
    lambda_start: float = 10.0
    lambda_factor: float = 10.0
    points: int = 1
    eps: float | None = None
    tolerance: float = 0.02
    slope_tol: float = 0.05
    fmt: str = "csv"
    out: str | None = None
    figure: str | None = None

    def __post_init__(self) -> None:
        if self.points < 1:
            raise UsageError("--points must be at least 1")
        if not 0 < self.t_factor < 1:
            raise UsageError("--t-factor must lie in (0, 1)")
        if not self.lambda_factor > 1:
            raise UsageError("--lambda-factor must exceed 1")
        if not self.t_start > 0 or not self.lambda_start > 0:
            raise UsageError("grid starts must be positive")
        if self.eps is not None and not self.eps > 0:
            raise UsageError("--eps must be positive")
        if self.max_eig < 0:
            raise UsageError("--max-eig must be nonnegative")

    def t_grid(self) -> list[float]:
        return [self.t_start * self.t_factor**i for i in range(self.points)]

    def lambda_grid(self) -> list[float]:
        return [self.lambda_start * self.lambda_factor**i for i in range(self.points)]


def fmt_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_table(columns, rows, cfg: RunConfig, meta: dict) -> str:
    if cfg.fmt == "json":
        payload = {"meta": meta, "columns": list(columns), "rows": [list(r) for r in rows]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_value(v) for v in row])
    return buf.getvalue()


def _meta(cfg: RunConfig, started: float) -> dict:
    return {
        "command": cfg.command,
        "manifold": str(cfg.manifold),
        "psi": None if cfg.psi is None else str(cfg.psi),
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }


def cmd_spectrum(cfg: RunConfig) -> tuple[list[str], list[tuple], int]:
    lams, mults = spectrum_arrays(cfg.manifold, cfg.max_eig)
    rows, total = [], 0
    for lam, m in zip(lams, mults):
        total += int(m)
        rows.append((float(lam), int(m), total))
    if cfg.figure:
        from .report import plot_staircase

        plot_staircase(
            [r[0] for r in rows],
            [r[2] for r in rows],
            lambda x: weyl_asymptote(cfg.manifold, x),
            cfg.figure,
            title=str(cfg.manifold),
        )
    return ["lambda", "multiplicity", "N"], rows, EXIT_OK


def cmd_count(cfg: RunConfig) -> tuple[list[str], list[tuple], int]:
    rows = []
    for lam in cfg.lambda_grid():
        if cfg.psi is None:
            rows.append((lam, counting(cfg.manifold, lam), weyl_asymptote(cfg.manifold, lam)))
        else:
            rows.append(
                (
                    lam,
                    counting_subordinated(cfg.manifold, cfg.psi, lam),
                    subordinated_counting_asymptote(cfg.manifold, cfg.psi, lam),
                )
            )
    return ["lambda", "count", "asymptote"], rows, EXIT_OK


def cmd_trace(cfg: RunConfig) -> tuple[list[str], list[tuple], int]:
    rows, code = [], EXIT_OK
    for t in cfg.t_grid():
        try:
            cv = trace(cfg.manifold, cfg.psi, t, cfg.eps)
        except DivergentTrace:
            rows.append((t, None, None, False, "divergent"))
            code = max(code, EXIT_DIVERGENT)
            continue
        except ResourceExceeded:
            rows.append((t, None, None, False, "resource"))
            code = max(code, EXIT_RESOURCE)
            continue
        status = "ok" if cv.certified else "uncertified"
        rows.append((t, cv.value, cv.error_bound, cv.certified, status))
    return ["t", "trace", "truncation_bound", "certified", "status"], rows, code


def cmd_asymptote(cfg: RunConfig) -> tuple[list[str], list[tuple], int]:
    if cfg.mode == "counting":
        rows = [(lam, subordinated_counting_asymptote(cfg.manifold, cfg.psi, lam)) for lam in cfg.lambda_grid()]
        return ["lambda", "asymptote"], rows, EXIT_OK
    rows = [(t, theorem_asymptote(cfg.manifold, cfg.psi, t)) for t in cfg.t_grid()]
    return ["t", "asymptote"], rows, EXIT_OK


def verify_report(cfg: RunConfig) -> RatioReport:
    grid = cfg.t_grid() if cfg.mode == "trace" else cfg.lambda_grid()
    return ratio_table(cfg.manifold, cfg.psi, cfg.mode, grid, cfg.eps)


def verdict(report: RatioReport, cfg: RunConfig) -> int:
    if report.divergent or not report.rows:
        return EXIT_DIVERGENT
    if abs(report.final_ratio - 1.0) > cfg.tolerance:
        return EXIT_FAILED
    if report.target_slope is not None and report.fitted_slope is not None:
        if abs(report.fitted_slope - report.target_slope) > cfg.slope_tol:
            return EXIT_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subtrace", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, psi_required):
        p.add_argument("--manifold", required=True, help="torus:n=2,sides=a,b | sphere:n=3 | su2 | so3")
        p.add_argument(
            "--psi",
            required=psi_required,
            help="stable:alpha=1.0 | relativistic:alpha=1.0,m=1.0 | gamma | identity | levy:file=PATH",
        )
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="output path (default: stdout)")

    def t_grid(p):
        p.add_argument("--t-start", type=float, default=1.0)
        p.add_argument("--t-factor", type=float, default=0.5)
        p.add_argument("--points", type=int, default=1)

    def lam_grid(p):
        p.add_argument("--lambda-start", type=float, default=10.0)
        p.add_argument("--lambda-factor", type=float, default=10.0)

    p = sub.add_parser("spectrum", help="eigenvalues, multiplicities and N(lambda)")
    common(p, False)
    p.add_argument("--max-eig", type=float, required=True)
    p.add_argument("--figure", help="write a staircase plot to this path")

    p = sub.add_parser("count", help="N(lambda), or N^psi(lambda) with --psi")
    common(p, False)
    lam_grid(p)
    p.add_argument("--points", type=int, default=1)

    p = sub.add_parser("trace", help="certified Tr exp(-t psi(-Delta))")
    common(p, True)
    t_grid(p)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("asymptote", help="asymptotic formulas on a grid")
    common(p, True)
    t_grid(p)
    lam_grid(p)
    p.add_argument("--mode", choices=("trace", "counting"), default="trace")

    p = sub.add_parser("verify", help="ratio table against the asymptote, with a verdict")
    common(p, True)
    t_grid(p)
    lam_grid(p)
    p.add_argument("--mode", choices=("trace", "counting"), default="trace")
    p.add_argument("--eps", type=float)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.add_argument("--slope-tol", type=float, default=0.05)
    p.add_argument("--figure", help="write the ratio plot to this path")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    manifold = ManifoldSpectrum.parse(args.manifold)
    psi = BernsteinFunction.parse(args.psi) if getattr(args, "psi", None) else None
    fields = {k: v for k, v in vars(args).items() if k not in ("manifold", "psi", "command") and v is not None}
    return RunConfig(command=args.command, manifold=manifold, psi=psi, **fields)


def run(cfg: RunConfig) -> tuple[str, int]:
    started = time.perf_counter()
    if cfg.command == "verify":
        report = verify_report(cfg)
        if cfg.figure:
            from .report import plot_ratio_report

            plot_ratio_report(report, cfg.figure)
        code = verdict(report, cfg)
        if cfg.fmt == "json":
            payload = {"meta": _meta(cfg, started), "report": report.to_dict(), "exit_code": code}
            return json.dumps(payload, indent=2, sort_keys=True) + "\n", code
        rows = [tuple(r) for r in report.rows]
        return render_table(["parameter", "computed", "asymptote", "ratio"], rows, cfg, {}), code
    handler = {
        "spectrum": cmd_spectrum,
        "count": cmd_count,
        "trace": cmd_trace,
        "asymptote": cmd_asymptote,
    }[cfg.command]
    columns, rows, code = handler(cfg)
    return render_table(columns, rows, cfg, _meta(cfg, started)), code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        if cfg.command == "verify" and cfg.points < 4:
            raise UsageError("verify needs --points >= 4")
        text, code = run(cfg)
    except (SpecParseError, UsageError) as exc:
        print(f"subtrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergentTrace as exc:
        print(f"subtrace: divergent: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except ResourceExceeded as exc:
        print(f"subtrace: resource exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
