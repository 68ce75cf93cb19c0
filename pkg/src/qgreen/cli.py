"""Command line entry point: validate, solve, sweep, selftest.

Exit codes: 0 success, 1 numerical or hypothesis failure, 2 configuration
error.  Data files are deterministic; timestamps and timings go to
manifest.json only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import apply_overrides, dump_json, load_config
from .errors import ConfigError, QGreenError
from .greenfn import validate_hypotheses
from .selftest import run_all
from .solver import GreenOperator, lambda_sweep, solve
from .verify import check_f_hypotheses

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(v):
    if v is None:
        return ""
    v = float(v)
    return "" if not np.isfinite(v) else repr(v)


def _write_table(path_base: Path, header, rows, fmt):
    if fmt == "json":
        path = path_base.with_suffix(".json")
        data = {"columns": list(header), "rows": [[None if c == "" else c for c in r] for r in rows]}
        dump_json(data, path)
        return path
    path = path_base.with_suffix(".csv")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())
    return path


def _prepare(args):
    cfg = load_config(args.config)
    cfg = apply_overrides(
        cfg,
        lam=getattr(args, "lam", None),
        tol=getattr(args, "tol", None),
        max_iter=getattr(args, "max_iter", None),
        out=getattr(args, "out", None),
        fmt=getattr(args, "format", None),
    )
    out = Path(cfg.output["dir"])
    out.mkdir(parents=True, exist_ok=True)
    dump_json(cfg.to_dict(), out / "effective_config.json")
    return cfg, out


def _manifest(out: Path, command, cfg, files, started, extra=None):
    data = {
        "command": command,
        "config_source": cfg.source,
        "qgreen_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "elapsed_s": round(time.time() - started, 3),
        "files": sorted(Path(f).name for f in files),
    }
    data.update(extra or {})
    dump_json(data, out / "manifest.json")


def _hypotheses(spec, x_max=10.0):
    hyp = validate_hypotheses(spec)
    fh = check_f_hypotheses(spec, x_max=x_max) if spec.f is not None else None
    return hyp, fh


def cmd_validate(args):
    started = time.time()
    cfg, out = _prepare(args)
    spec = cfg.spec()
    hyp, fh = _hypotheses(spec)
    files = [out / "effective_config.json", out / "hypotheses.json", out / "f_hypotheses.json"]
    dump_json(hyp.to_dict(), files[1])
    dump_json(fh.to_dict(), files[2])
    _manifest(out, "validate", cfg, files, started)
    c = hyp.constants
    print(f"delta={c.delta:.12g} cshift={c.cshift:.12g} sigma={c.sigma:.12g} B={c.B:.12g} rho={c.rho:.12g}")
    print(f"(H1): {'pass' if hyp.passed else 'FAIL'}   (H2)-(H4): {'pass' if fh.passed else 'FAIL'}")
    if not fh.passed:
        bad = {k: v for k, v in fh.violations.items() if v}
        print(f"  violations: {bad}")
    return EXIT_OK if hyp.passed and fh.passed else EXIT_FAIL


def solution_rows(report, op, eval_points):
    """(t, x, p, ratio) at uniform points plus every base-lattice node, sorted by t."""
    x = report.solution
    gc = op.gc
    pts = {}
    for t, v in zip(x.base_nodes, x.base_values):
        pts[float(t)] = float(v)
    for t in np.linspace(0.0, 1.0, eval_points):
        t = float(t)
        if t not in pts:
            pts[t] = float(x.evaluator(t))
    rows = []
    for t in sorted(pts):
        p = (t + gc.cshift) / gc.sigma
        ratio = pts[t] / p if p > 0 else None
        rows.append([_fmt(t), _fmt(pts[t]), _fmt(p), _fmt(ratio)])
    return rows


def cmd_solve(args):
    started = time.time()
    cfg, out = _prepare(args)
    spec = cfg.spec()
    num = cfg.numerics
    fmt = cfg.output["format"]
    hyp = validate_hypotheses(spec)
    if not hyp.passed:
        dump_json(hyp.to_dict(), out / "hypotheses.json")
        print("(H1) fails; see hypotheses.json", file=sys.stderr)
        return EXIT_FAIL
    op = GreenOperator(spec, hyp.constants, cap=num["lattice_cap"], quad_order=num["quad_order"])
    report = solve(
        spec, tol=num["tol"], max_iter=num["max_iter"], check_hypotheses=False, residuals=True, op=op
    )
    files = [out / "effective_config.json"]
    trace = [[str(i + 1), _fmt(c)] for i, c in enumerate(report.sup_changes)]
    files.append(_write_table(out / "trace", ["n", "sup_change"], trace, fmt))
    files.append(_write_table(out / "solution", ["t", "x", "p", "ratio"], solution_rows(report, op, cfg.output["eval_points"]), fmt))
    res = report.residuals.to_dict() if report.residuals is not None else {}
    res["fixed_point_residual"] = report.fixed_point_residual
    dump_json(res, out / "residuals.json")
    files.append(out / "residuals.json")
    fh = check_f_hypotheses(spec, x_max=max(2.0 * report.norm, 1e-12))
    summary = report.summary()
    summary["constants"] = hyp.to_dict()["constants"]
    summary["f_hypotheses"] = fh.to_dict()
    dump_json(summary, out / "summary.json")
    files.append(out / "summary.json")
    _manifest(out, "solve", cfg, files, started)
    status = "converged" if report.converged else "NOT converged"
    print(
        f"{status} after {report.n_iters} iterations; |x*|={report.norm:.12g}; "
        f"mu_hat={report.cone_certificate[0]:.6g} nu_hat={report.cone_certificate[1]:.6g}; "
        f"fixed-point residual={report.fixed_point_residual:.3e}"
    )
    if not fh.passed:
        print("warning: (H2)-(H4) sampling found violations; see summary.json", file=sys.stderr)
    return EXIT_OK if report.converged else EXIT_FAIL


def _parse_lambdas(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("lambdas", f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise ConfigError("lambdas", "empty list")
    if any(not v > 0 for v in vals):
        raise ConfigError("lambdas", "every lambda must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("lambdas", "lambdas must be strictly increasing")
    return vals


def cmd_sweep(args):
    started = time.time()
    if not args.lambdas:
        raise ConfigError("lambdas", "--lambdas is required for sweep")
    lambdas = _parse_lambdas(args.lambdas)
    cfg, out = _prepare(args)
    spec = cfg.spec()
    num = cfg.numerics
    sw = lambda_sweep(spec, lambdas, tol=num["tol"], max_iter=num["max_iter"])
    rows = []
    for i, (lam, r) in enumerate(zip(sw.lambdas, sw.reports)):
        order = "" if i == 0 else ("ok" if sw.ordering_ok[i - 1] else "VIOLATED")
        rows.append([_fmt(lam), _fmt(r.norm), str(r.converged).lower(), str(r.n_iters), order])
    files = [out / "effective_config.json"]
    files.append(
        _write_table(out / "sweep", ["lambda", "sup_norm", "converged", "n_iters", "ordering_vs_previous"], rows, cfg.output["format"])
    )
    verdict = {
        "lambdas": sw.lambdas,
        "norms": sw.norms,
        "ordering_ok": sw.ordering_ok,
        "norms_increasing": sw.norms_increasing,
        "monotone": sw.monotone,
        "all_converged": all(r.converged for r in sw.reports),
    }
    dump_json(verdict, out / "sweep_report.json")
    files.append(out / "sweep_report.json")
    _manifest(out, "sweep", cfg, files, started)
    for row in rows:
        print("  ".join(row))
    ok = sw.monotone and verdict["all_converged"]
    if not sw.monotone:
        print("monotonicity violation in lambda sweep", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_selftest(args):
    results = run_all(trunc_tol=args.trunc_tol)
    for r in results:
        print(r.row())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config path or preset name")
    common.add_argument("--lambda", dest="lam", type=float, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    parser = argparse.ArgumentParser(prog="qgreen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qgreen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check (H1)-(H4) for a config")
    sub.add_parser("solve", parents=[common], help="run the fixed-point iteration")
    sw = sub.add_parser("sweep", parents=[common], help="solve for several lambdas")
    sw.add_argument("--lambdas", default=None, help="comma-separated increasing values")
    st = sub.add_parser("selftest", help="run built-in invariant suites")
    st.add_argument("--trunc-tol", dest="trunc_tol", type=float, default=1e-14)
    return parser


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "sweep": cmd_sweep, "selftest": cmd_selftest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command != "selftest" and args.config is None:
        print("config error: --config: required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QGreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
