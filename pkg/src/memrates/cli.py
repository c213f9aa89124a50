"""Command line: ``memrates {rate,segments,ruin,tables,verify}``.

Every subcommand reads the same config document (see ``config.py``) and
writes its results to ``--out-dir`` as CSV and/or JSON, plus an optional
SVG figure. Result files are deterministic given config and seed; wall
clock data goes to the ``run_meta.json`` sidecar only.

Exit codes: 0 success, 1 configuration error, 2 numerical certification
failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import platform
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import CRITERIA, run_suite
from .config import Experiment, build, load_config
from .errors import CertificationError, ConfigError, ConfigurationError
from .limits import MARGIN, ruin_asymptote, segment_rate_bounds, table1_theta, table2_theta
from .model import FiniteLag
from .plotting import Figure, save
from .ruin import RuinSpec, _continuous_b, ruin_decay_fit, ruin_is, ruin_mc_grid
from .segments import growth_statistic
from .simulate import PathConfig, sample_paths

log = logging.getLogger("memrates")

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_ACCEPT = 0, 1, 2, 3

TOLERANCES = {
    "optimizer_grid_per_decade": 64,
    "optimizer_box": [1e-4, 1e4],
    "golden_tol": 1e-10,
    "set_margin": MARGIN,
    "quadrature_rtol": 1e-10,
}

SEGMENT_COLUMNS = ["m", "path_id", "R_m", "b_R", "statistic", "regime", "seed"]
RUIN_COLUMNS = ["u", "rho_hat", "se", "method", "horizon", "tail_bound", "n_paths", "seed", "regime"]
RATE_COLUMNS = ["quantity", "regime", "lower", "upper", "exact", "certified", "seed"]
TABLE_COLUMNS = ["table", "memory", "alpha", "beta", "omega", "theta", "theta_value"]
VERIFY_COLUMNS = ["criterion", "title", "passed"]


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def plain(obj):
    """JSON-safe copy: non-finite floats and fractions become strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _cell(v):
    v = plain(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


class Output:
    """Writes the artifacts of one subcommand into the output directory."""

    def __init__(self, out_dir, fmt: str, svg: bool):
        self.dir = Path(out_dir)
        self.fmt = fmt
        self.svg = svg
        self.written: list[str] = []

    def _write(self, name: str, text: str):
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text, encoding="utf-8")
        self.written.append(name)

    def table(self, stem: str, rows, columns, document: dict):
        if self.fmt in ("csv", "both"):
            self._write(f"{stem}.csv", _csv_text(rows, columns))
        if self.fmt in ("json", "both"):
            self._write(f"{stem}.json", json.dumps(plain(document), sort_keys=True, indent=2) + "\n")

    def figure(self, stem: str, fig: Figure):
        if self.svg:
            self.dir.mkdir(parents=True, exist_ok=True)
            save(fig, self.dir / f"{stem}.svg")
            self.written.append(f"{stem}.svg")

    def sidecar(self, meta: dict):
        self._write("run_meta.json", json.dumps(plain(meta), sort_keys=True, indent=2) + "\n")


def _provenance(exp: Experiment) -> dict:
    return {
        "regime": exp.regime.tag,
        "seed": exp.seed,
        "tolerances": TOLERANCES,
        "config": exp.raw,
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_rate(exp: Experiment, out: Output) -> int:
    seg = segment_rate_bounds(exp.family, exp.model, exp.regime, exp.A)
    ruin = ruin_asymptote(exp.family, exp.model, exp.regime, exp.mu, exp.A)
    tag, seed = exp.regime.tag, exp.seed
    rows = [
        {"quantity": "segment_rate", "regime": tag, "lower": seg.lower, "upper": seg.upper, "exact": None,
         "certified": True, "seed": seed},
        {"quantity": "ruin_exponent", "regime": tag, "lower": ruin.lower, "upper": ruin.upper, "exact": ruin.exact,
         "certified": ruin.certified, "seed": seed},
    ]
    doc = {"segment_rate": seg.as_dict(), "ruin_exponent": ruin.as_dict(), "provenance": _provenance(exp)}
    out.table("rate", rows, RATE_COLUMNS, doc)
    log.info("segment rate [%g, %g]; ruin exponent [%g, %g]", seg.lower, seg.upper, ruin.lower, ruin.upper)
    return EXIT_OK


def _segment_limits(exp: Experiment):
    """Limits of b_{R_m}/log m implied by the rate bracket, or None."""
    try:
        rb = segment_rate_bounds(exp.family, exp.model, exp.regime, exp.A)
    except (ConfigurationError, CertificationError) as exc:
        log.warning("no rate bracket for the limit lines: %s", exc)
        return None

    def inv(x):
        return math.inf if x == 0 else 1.0 / x

    return inv(rb.upper), inv(rb.lower)


def cmd_segments(exp: Experiment, out: Output) -> int:
    s = exp.settings["segments"]
    m = int(s["m"])
    cfg = PathConfig(m, exp.family, exp.model, exp.regime, seed=exp.seed, L=exp.lag)
    log.info("simulating %d paths of length %d", s["n_paths"], m)
    paths = sample_paths(cfg, int(s["n_paths"]), threads=exp.threads)
    table = growth_statistic(paths, exp.A, exp.regime, s["m_grid"])
    rows = [dict(r, regime=exp.regime.tag, seed=exp.seed) for r in table.rows]
    limits = _segment_limits(exp)
    doc = {
        "summary": table.as_records(),
        "limit_bracket": list(limits) if limits else None,
        "tau_err": cfg.tau_err,
        "truncation_lag": cfg.lag,
        "provenance": _provenance(exp),
    }
    out.table("segments", rows, SEGMENT_COLUMNS, doc)
    fig = Figure("Long strange segments", "m", "b(R_m) / log m", logx=True)
    fig.add(table.m, table.mean, "mean over paths")
    if limits:
        fig.hlines += [(limits[0], "lower limit"), (limits[1], "upper limit")]
    out.figure("segments", fig)
    for m_, mean, sd in zip(table.m, table.mean, table.std):
        log.info("m=%d statistic %.4f (sd %.4f)", m_, mean, sd)
    return EXIT_OK


def _ruin_method(exp: Experiment) -> str:
    method = exp.settings["ruin"]["method"]
    tiltable = isinstance(exp.family, FiniteLag) and exp.regime.tag in ("S1", "S2")
    if method == "auto":
        return "is" if tiltable else "plain"
    if method == "is" and not tiltable:
        raise ConfigError("experiment.ruin.method", "tilting needs a finite-lag family under S1 or S2")
    return method


def cmd_ruin(exp: Experiment, out: Output) -> int:
    r = exp.settings["ruin"]
    spec = RuinSpec(exp.family, exp.model, exp.regime, exp.mu, exp.A, exp.lag)
    us = [float(u) for u in r["u"]]
    n, M = int(r["n_paths"]), float(r["horizon_factor"])
    method = _ruin_method(exp)
    log.info("%s Monte Carlo, %d paths per u", method, n)
    if method == "is":
        est = [ruin_is(spec, u, n, seed=exp.seed, threads=exp.threads, M=M) for u in us]
    else:
        est = ruin_mc_grid(spec, us, n, M, seed=exp.seed, threads=exp.threads)
    theory, theory_error = None, None
    try:
        theory = ruin_asymptote(exp.family, exp.model, exp.regime, exp.mu, exp.A)
    except (ConfigurationError, CertificationError) as exc:
        theory_error = f"{type(exc).__name__}: {exc}"
        log.warning("no theory bracket: %s", theory_error)
    power = r["regressor_power"]
    regressor = None if power is None else (lambda u, p=float(power): u**p)
    fit, fit_error = None, None
    try:
        fit = ruin_decay_fit(est, exp.regime, theory.bracket if theory else None, regressor=regressor)
    except ConfigurationError as exc:
        fit_error = str(exc)
        log.warning("no decay fit: %s", exc)
    rows = [dict(e.as_dict(), regime=exp.regime.tag) for e in est]
    doc = {
        "estimates": [e.as_dict() for e in est],
        "fit": fit.as_dict() if fit else None,
        "fit_error": fit_error,
        "theory": theory.as_dict() if theory else None,
        "theory_error": theory_error,
        "regressor": "b(a^-1(u))" if power is None else f"u^{power}",
        "provenance": _provenance(exp),
    }
    out.table("ruin", rows, RUIN_COLUMNS, doc)
    if out.svg:
        out.figure("ruin", _ruin_figure(est, exp, regressor, fit, theory))
    if fit:
        log.info("slope %.5f (se %.2g), R^2 %.4f", fit.slope, fit.slope_se, fit.r2)
    return EXIT_OK


def _ruin_figure(est, exp, regressor, fit, theory) -> Figure:
    pts = [e for e in est if e.rho_hat > 0]
    u = np.array([e.u for e in pts])
    x = regressor(u) if regressor else _continuous_b(exp.regime, u)
    fig = Figure("Ruin probability", "regressor", "log rho_hat")
    fig.add(x, np.log([e.rho_hat for e in pts]), "estimate")
    if fit is not None:
        fig.add(x, fit.intercept + fit.slope * x, "least squares", markers=False)
        if theory is not None:
            fig.band = (list(x), list(fit.intercept + theory.lower * x), list(fit.intercept + theory.upper * x), "theory bracket")
    return fig


def cmd_tables(exp: Experiment, out: Output) -> int:
    t = exp.settings["tables"]
    alpha, beta = Fraction(str(t["alpha"])), Fraction(str(t["beta"]))
    rows = []
    for w in t["omega"]:
        omega = Fraction(str(w))
        for tab, fn in (("1", table1_theta), ("2", table2_theta)):
            for memory in ("short", "long"):
                try:
                    theta = fn(memory, omega, alpha, beta)
                except ConfigurationError as exc:
                    raise ConfigError("experiment.tables", str(exc)) from None
                rows.append({
                    "table": tab, "memory": memory, "alpha": str(alpha), "beta": str(beta), "omega": str(omega),
                    "theta": str(theta), "theta_value": float(theta),
                })
    out.table("tables", rows, TABLE_COLUMNS, {"cells": rows, "provenance": _provenance(exp)})
    for row in rows:
        log.info("table %s %-5s omega=%s theta=%s", row["table"], row["memory"], row["omega"], row["theta"])
    return EXIT_OK


def cmd_verify(exp: Experiment, out: Output, criteria=None) -> tuple[int, dict]:
    results = run_suite(criteria, threads=exp.threads, echo=print)
    rows = [{"criterion": r.number, "title": r.title, "passed": r.passed} for r in results]
    out.table("verify", rows, VERIFY_COLUMNS, {"criteria": rows, "suite": "primary"})
    details = {r.number: {"detail": r.detail, "seconds": r.seconds} for r in results}
    code = EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPT
    return code, details


COMMANDS = {"rate": cmd_rate, "segments": cmd_segments, "ruin": cmd_ruin, "tables": cmd_tables}


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def run(subcommand: str, config_path=None, overrides=(), *, out_dir="memrates-out", fmt="both", svg=False,
        criteria=None, argv=None) -> int:
    """Run one subcommand and return its exit code."""
    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat()
    try:
        exp = build(load_config(config_path, overrides))
        out = Output(out_dir, fmt, svg)
        extra = {}
        if subcommand == "verify":
            code, extra = cmd_verify(exp, out, criteria)
        elif subcommand in COMMANDS:
            code = COMMANDS[subcommand](exp, out)
        else:
            raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"certification failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CERT
    out.sidecar({
        "subcommand": subcommand,
        "started": started,
        "elapsed_seconds": time.perf_counter() - t0,
        "argv": list(argv or []),
        "python": platform.python_version(),
        "version": __version__,
        "files": sorted(out.written),
        "exit_code": code,
        "details": extra,
    })
    return code


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not argparse's default exit code 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"configuration error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config layered over the defaults")
    common.add_argument("--seed", type=int, help="override experiment.seed")
    common.add_argument("--threads", type=int, help="override experiment.threads")
    common.add_argument("--out-dir", default="memrates-out", help="where artifacts go (default: %(default)s)")
    common.add_argument("--format", choices=("csv", "json", "both"), default="both", dest="fmt")
    common.add_argument("--svg", action="store_true", help="also write an SVG figure")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config entry, e.g. experiment.ruin.n_paths=1000")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = _Parser(prog="memrates", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"memrates {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("rate", parents=[common], help="segment-rate and ruin-exponent bounds")
    sub.add_parser("segments", parents=[common], help="simulate paths and the segment growth statistic")
    sub.add_parser("ruin", parents=[common], help="ruin probability estimates and decay fit")
    sub.add_parser("tables", parents=[common], help="exponent tables for the configured alpha, beta and omegas")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--suite", choices=("primary",), default="primary")
    v.add_argument("--criteria", nargs="+", choices=sorted(CRITERIA), help="run only these criteria")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"experiment.seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"experiment.threads={args.threads}")
    return run(args.command, args.config, overrides, out_dir=args.out_dir, fmt=args.fmt, svg=args.svg,
               criteria=getattr(args, "criteria", None), argv=argv)


if __name__ == "__main__":
    sys.exit(main())
