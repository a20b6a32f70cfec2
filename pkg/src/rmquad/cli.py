"""Command line front end.

Subcommands: strong-error, weak-error, noise-sweep, bench. A JSON config
file (--config) uses the same schema as the config echo embedded in every
report, so a report's first line can be fed back in to reproduce it.
Explicit flags override file values.

Exit codes: 0 success, 2 configuration or usage error, 3 resource limit
exceeded, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass

from .errors import (
    AlignmentError,
    ConfigError,
    ContractError,
    DomainError,
    ResourceLimitError,
)
from .experiments import (
    ErrorReport,
    ExperimentConfig,
    config_from_echo,
    noise_regime_sweep,
    replace,
    reports_equal_bits,
    strong_error,
    weak_error,
)
from .integrands import KINDS
from .noise import CATALOGUE

THREADS_ENV = "RMQUAD_THREADS"

_RUN_DEFAULTS = {
    "problem": "x1",
    "n_list": (4, 16, 64, 256),
    "replicates": 2048,
    "refine": 1000,
    "seed": 0,
    "horizon": 1.0,
    "moment": 2.0,
    "coupling": "none",
    "delta1": 0.0,
    "delta2": 0.0,
    "p_x": "one",
    "p_w": "one",
}


@dataclass(frozen=True)
class RunManifest:
    """Fully resolved invocation: config plus output routing."""

    command: str
    cfg: ExperimentConfig
    strike: float
    regime: str
    deltas: tuple
    thread_list: tuple
    out: str
    fmt: str


# --- number and report formatting -------------------------------------------


def format_float(v: float) -> str:
    """Shortest-exact decimal: 17 significant digits round-trip float64."""
    return format(float(v), ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits and nan/inf as null."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int,)) and not isinstance(obj, bool):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return "null"
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(inner + to_json(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            inner + json.dumps(str(k)) + ": " + to_json(v, indent + 1)
            for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json_line(obj) -> str:
    """Single-line variant for CSV header comments."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int) and not isinstance(obj, bool):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return "null"
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json_line(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ", ".join(
            json.dumps(str(k)) + ": " + to_json_line(v) for k, v in obj.items()
        ) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _report_csv(report: ErrorReport) -> str:
    head = {"mode": report.mode, "config": report.config_echo}
    lines = ["# " + to_json_line(head), "n,error,stderr,slope"]
    slope = format_float(report.fitted_slope)
    for le in report.per_n:
        lines.append(
            f"{le.n},{format_float(le.error)},{format_float(le.stderr)},{slope}"
        )
    return "\n".join(lines) + "\n"


def render_reports(reports, fmt: str) -> str:
    """Render one report or a list of them as csv or json text."""
    many = isinstance(reports, (list, tuple))
    if fmt == "csv":
        items = reports if many else [reports]
        return "".join(_report_csv(r) for r in items)
    if fmt == "json":
        payload = [r.to_dict() for r in reports] if many else reports.to_dict()
        return to_json(payload) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}")


def _write_text(text: str, out: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- benchmark ---------------------------------------------------------------


def bench(cfg: ExperimentConfig, thread_list) -> list:
    """Time the strong-error run at each worker count.

    Returns rows (threads, seconds, speedup vs threads=1). Every run must
    reproduce the single-worker report bit for bit; a mismatch raises.
    """
    counts = [int(t) for t in thread_list]
    if not counts or any(t < 1 for t in counts):
        raise ConfigError(f"thread list must be positive integers, got {thread_list}")
    order = counts if 1 in counts else [1] + counts
    reports = {}
    seconds = {}
    for th in order:
        if th in reports:
            continue
        t0 = time.perf_counter()
        reports[th] = strong_error(replace(cfg, threads=th))
        seconds[th] = time.perf_counter() - t0
    base = reports[1]
    for th in order:
        if not reports_equal_bits(base, reports[th]):
            raise RuntimeError(
                f"results at threads={th} differ from threads=1; "
                "worker-count independence is broken"
            )
    return [(th, seconds[th], seconds[1] / seconds[th]) for th in order]


def _bench_csv(cfg: ExperimentConfig, rows) -> str:
    from .experiments import config_echo

    head = {"mode": "bench", "config": config_echo(cfg)}
    lines = ["# " + to_json_line(head), "threads,seconds,speedup"]
    for th, sec, sp in rows:
        lines.append(f"{th},{format_float(sec)},{format_float(sp)}")
    return "\n".join(lines) + "\n"


# --- argument parsing ---------------------------------------------------------


def _csv_ints(text: str) -> tuple:
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {exc}")


def _csv_floats(text: str) -> tuple:
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {exc}")


def _add_run_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", default=None, metavar="FILE",
                    help="JSON config file (same schema as the report's config echo)")
    sp.add_argument("--problem", choices=KINDS, default=None)
    sp.add_argument("--n", dest="n_list", type=_csv_ints, default=None,
                    metavar="N1,N2,...", help="mesh sizes, strictly increasing")
    sp.add_argument("--replicates", "-M", type=int, default=None)
    sp.add_argument("--refine", "-L", type=int, default=None,
                    help="reference mesh refinement factor")
    sp.add_argument("--delta1", type=float, default=None, help="integrand noise level")
    sp.add_argument("--delta2", type=float, default=None, help="integrator noise level")
    sp.add_argument("--px", dest="p_x", choices=sorted(CATALOGUE), default=None,
                    help="integrand disturbance shape")
    sp.add_argument("--pw", dest="p_w", choices=sorted(CATALOGUE), default=None,
                    help="integrator disturbance shape")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--moment", type=float, default=None, help="error norm order r")
    sp.add_argument("--coupled", action="store_true",
                    help="tie both deltas to n^(-1/2) per mesh")
    sp.add_argument("--level", type=float, default=None,
                    help="value of the constant problem")
    sp.add_argument("--threads", type=int, default=None,
                    help=f"worker processes (default ${THREADS_ENV} or 1)")
    sp.add_argument("--out", default=None, metavar="PATH", help="output file (default stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rmquad",
        description="Monte Carlo error experiments for noisy Riemann-Maruyama quadrature.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("strong-error", help="pathwise r-th moment error across meshes")
    _add_run_flags(sp)

    sp = sub.add_parser("weak-error", help="payoff expectation error across meshes")
    _add_run_flags(sp)
    sp.add_argument("--strike", type=float, default=None, help="put payoff strike (default 2)")

    sp = sub.add_parser("noise-sweep", help="strong error across a noise regime")
    _add_run_flags(sp)
    sp.add_argument("--regime", choices=("floor", "coupled", "blowup"), required=True)
    sp.add_argument("--deltas", type=_csv_floats, default=None, metavar="D1,D2,...",
                    help="delta levels for the floor regime")

    sp = sub.add_parser("bench", help="scaling of the strong-error run over worker counts")
    _add_run_flags(sp)
    sp.add_argument("--threads-list", type=_csv_ints, default=(1, 2, 4),
                    metavar="T1,T2,...")
    return p


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        th = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if th < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {th}")
    return th


def parse_config(argv=None) -> RunManifest:
    """Resolve flags, config file, env, and defaults into a RunManifest."""
    args = build_parser().parse_args(argv)

    base = dict(_RUN_DEFAULTS)
    strike = None
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        # validate keys and shapes through the echo reader
        _, extras = config_from_echo(loaded, threads=1)
        base.update({k: v for k, v in loaded.items() if k not in ("strike", "payoff")})
        strike = extras.get("strike")

    for key in ("problem", "replicates", "refine", "seed", "horizon",
                "moment", "delta1", "delta2", "p_x", "p_w"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    if args.n_list is not None:
        base["n_list"] = args.n_list
    if args.coupled:
        base["coupling"] = "n^-1/2"
    # problem_params from a config file apply only to the problem they came with
    if args.problem is not None and args.config is not None:
        if args.problem != loaded.get("problem", "x1"):
            base.pop("problem_params", None)
    if args.level is not None:
        params = dict(base.get("problem_params", {}) or {})
        params["level"] = args.level
        base["problem_params"] = params

    threads = args.threads if args.threads is not None else _default_threads()
    cfg, _ = config_from_echo(base, threads=threads)

    if getattr(args, "strike", None) is not None:
        strike = args.strike
    if strike is None:
        strike = 2.0

    return RunManifest(
        command=args.command,
        cfg=cfg,
        strike=float(strike),
        regime=getattr(args, "regime", None),
        deltas=getattr(args, "deltas", None),
        thread_list=tuple(getattr(args, "threads_list", ()) or ()),
        out=args.out,
        fmt=args.format,
    )


def _dispatch(man: RunManifest) -> None:
    if man.command == "strong-error":
        text = render_reports(strong_error(man.cfg), man.fmt)
    elif man.command == "weak-error":
        text = render_reports(weak_error(man.cfg, strike=man.strike), man.fmt)
    elif man.command == "noise-sweep":
        reports = noise_regime_sweep(man.cfg, man.regime, man.deltas)
        text = render_reports(reports, man.fmt)
    elif man.command == "bench":
        rows = bench(man.cfg, man.thread_list)
        if man.fmt == "json":
            payload = [{"threads": th, "seconds": s, "speedup": sp} for th, s, sp in rows]
            text = to_json(payload) + "\n"
        else:
            text = _bench_csv(man.cfg, rows)
    else:  # unreachable with required=True
        raise ConfigError(f"unknown command {man.command!r}")
    _write_text(text, man.out)


def main(argv=None) -> int:
    try:
        man = parse_config(argv)
    except SystemExit as exc:  # argparse help (0) or usage error (2)
        code = exc.code
        return 0 if code is None else int(code)
    except (ConfigError, DomainError, ContractError) as exc:
        print(f"rmquad: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rmquad: i/o error: {exc}", file=sys.stderr)
        return 4
    try:
        _dispatch(man)
    except (ConfigError, DomainError, ContractError, AlignmentError) as exc:
        print(f"rmquad: config error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"rmquad: resource limit: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"rmquad: i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
