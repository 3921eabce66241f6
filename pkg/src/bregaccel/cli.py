"""Command-line front end: data ingestion, solver invocation, comparison
harness and report emission.

Subcommands: solve, compare, synth, metrics.  Exit codes are a stable
contract: 0 converged / success, 1 usage or input error, 2 non-convergence,
3 numerical failure.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import admm as admm_mod
from . import driver, model, portfolio, synth
from .errors import BregaccelError, InputError, NumericalError
from .prox import FistaConfig

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_OUTER = 2
EXIT_NUMERICAL = 3

ALL_MODES = ("sbsa", "sbsa_lsa", "sb", "admm")

# config-file keys and their parsers; names match the SolverConfig fields
_CONFIG_CASTS = {
    "lam": float,
    "tol_b": float,
    "max_outer": int,
    "warmstart_iters": int,
    "eta": float,
    "gamma0": float,
    "tol_cg": float,
    "tol_f": float,
    "fista_max_iters": int,
    "safeguard": str,
    "admm_max_outer": int,
}


class _Parser(argparse.ArgumentParser):
    """argparse flavor whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def read_panel(path, percent=False):
    """Parse a returns CSV: header 'date,ASSET1,...', one row per period."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read returns file {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0].strip().lower() != "date":
        raise InputError(f"{path}, line 1: header must be 'date,ASSET1,ASSET2,...'")
    names = tuple(h.strip() for h in header[1:])
    periods = []
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}, line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        periods.append(row[0].strip())
        try:
            data.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise InputError(f"{path}, line {lineno}: {exc}") from exc
    if not data:
        raise InputError(f"{path}: no data rows")
    returns = np.asarray(data, dtype=np.float64)
    if percent:
        returns = returns / 100.0
    return portfolio.ReturnPanel(asset_names=names, periods=tuple(periods),
                                 returns=returns)


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, line in enumerate(lines, start=1):
        bare = line.split("#", 1)[0].strip()
        if not bare:
            continue
        if "=" not in bare:
            raise InputError(f"{path}, line {lineno}: expected key = value")
        key, _, raw = bare.partition("=")
        key = key.strip()
        if key not in _CONFIG_CASTS:
            raise InputError(f"{path}, line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_CASTS[key](raw.strip())
        except ValueError as exc:
            raise InputError(f"{path}, line {lineno}: {exc}") from exc
    return values


def make_config(args, mode):
    """Defaults < config file < explicit command-line flags."""
    merged = {}
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config))
    for key in _CONFIG_CASTS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    fista = FistaConfig(
        tol_f=merged.pop("tol_f", 1e-5),
        max_iters=merged.pop("fista_max_iters", 5000),
    )
    try:
        return driver.SolverConfig(mode=mode, fista=fista, **merged)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def build_portfolio_model(args):
    """Assemble a PortfolioModel from --problem or --data plus window flags."""
    if getattr(args, "problem", None):
        return synth.load_problem(args.problem)
    if not getattr(args, "data", None):
        raise InputError("one of --problem or --data is required")
    panel = read_panel(args.data, percent=args.percent)
    if args.drop_volatile:
        panel = portfolio.drop_most_volatile(panel, args.drop_volatile)
    stride = args.stride
    m = args.periods
    if args.years is not None:
        if m is not None:
            raise InputError("--years and --periods are mutually exclusive")
        m = args.years
        if stride is None:
            stride = 12
    if m is None:
        raise InputError("one of --periods or --years is required with --data")
    if stride is None:
        stride = 12
    c_blocks, r = portfolio.estimate_moments(
        panel, window=args.window, rebalance_stride=stride, m=m,
        cov_divisor=args.cov_divisor, ridge=args.ridge,
    )
    xi_fin = args.xi_fin
    if xi_fin is None:
        xi_fin, _ = portfolio.naive_wealth(r, panel.n_assets, args.xi_ini)
    return portfolio.build_model(c_blocks, r, args.xi_ini, xi_fin,
                                 args.tau1, args.tau2)


def run_solver(pm, mode, cfg):
    if mode == "admm":
        return admm_mod.admm_solve(pm.problem, replace(cfg, mode="admm"))
    sp = model.stack(pm.problem)
    return driver.solve(sp, replace(cfg, mode=mode))


def solution_metrics(pm, report, eps1, eps2):
    u = report.x_final[: pm.problem.n]
    _, u_naive = portfolio.naive_wealth(pm.r, pm.n_assets, pm.xi_ini)
    return portfolio.compute_metrics(u, u_naive, pm.problem.C, pm.n_assets,
                                     eps1=eps1, eps2=eps2)


def _metrics_dict(metrics):
    def row(ms):
        return {
            "ratio": ms.ratio,
            "density_pct": ms.density_pct,
            "shorts": ms.shorts,
            "t_cost": ms.t_cost,
            "v_norm1": ms.v_norm1,
            "v_norm_inf": ms.v_norm_inf,
        }

    return {
        "eps1": metrics.eps1,
        "eps2": metrics.eps2,
        "thresholded": row(metrics.thresholded),
        "raw": row(metrics.raw),
    }


def report_document(pm, report, metrics):
    sp = model.stack(pm.problem)
    if np.isfinite(report.x_final).all():
        viol_a, viol_d = model.constraint_violations(sp, report.x_final)
    else:
        viol_a = viol_d = float("nan")
    doc = {
        "solver": report.solver,
        "termination": report.termination,
        "outer_iters": report.outer_iters,
        "accel_steps_taken": report.accel_steps_taken,
        "accel_steps_rejected": report.accel_steps_rejected,
        "inner_iter_totals": dict(report.inner_iter_totals),
        "wall_time_s": report.wall_time,
        "objective": report.objective,
        "viol_constraint": viol_a,
        "viol_split": viol_d,
        "n_assets": pm.n_assets,
        "periods": pm.n_periods,
        "u": report.x_final[: pm.problem.n].tolist(),
        "d": report.x_final[pm.problem.n :].tolist(),
        "metrics": _metrics_dict(metrics) if metrics is not None else None,
    }
    if report.details:
        doc["notes"] = {k: v for k, v in report.details.items()}
    return doc


def _format_text_report(doc):
    lines = []
    for key in ("solver", "termination", "outer_iters", "accel_steps_taken",
                "accel_steps_rejected", "objective", "viol_constraint",
                "viol_split", "wall_time_s", "n_assets", "periods"):
        lines.append(f"{key}: {_fmt(doc[key])}")
    for name, counts in doc["inner_iter_totals"].items():
        lines.append(f"inner_iters_{name}: {counts}")
    met = doc["metrics"]
    if met is not None:
        lines.append(f"eps1: {_fmt(met['eps1'])}")
        lines.append(f"eps2: {_fmt(met['eps2'])}")
        for kind in ("thresholded", "raw"):
            for key, val in met[kind].items():
                lines.append(f"{kind}_{key}: {_fmt(val)}")
    if "notes" in doc:
        for key, val in doc["notes"].items():
            lines.append(f"note_{key}: {val}")
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_trace_csv(report, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iter", "branch", "viol_constraint", "viol_split",
             "stacked_violation", "gamma", "inner_iters"]
        )
        for rec in report.trace or []:
            writer.writerow(
                [rec.k, rec.branch, f"{rec.viol_constraint:.12g}",
                 f"{rec.viol_split:.12g}", f"{rec.stacked_violation:.12g}",
                 f"{rec.gamma:.12g}", rec.inner_iters]
            )


def cmd_solve(args):
    pm = build_portfolio_model(args)
    cfg = make_config(args, args.mode)
    report = run_solver(pm, args.mode, cfg)
    metrics = None
    if report.termination != "numerical_error":
        metrics = solution_metrics(pm, report, args.eps1, args.eps2)
    doc = report_document(pm, report, metrics)
    if args.format == "json":
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(_format_text_report(doc), args.out)
    if args.plot:
        _write_trace_csv(report, args.plot)
    if report.termination == "converged":
        return EXIT_OK
    if report.termination == "max_outer":
        return EXIT_MAX_OUTER
    return EXIT_NUMERICAL


_TABLE_COLUMNS = ("solver", "time_s", "outit", "objective", "ratio",
                  "density_pct", "shorts", "t_cost", "v_norm1", "v_norm_inf")


def _compare_row(mode, pm, cfg, eps1, eps2):
    try:
        report = run_solver(pm, mode, cfg)
    except BregaccelError as exc:
        return {"solver": mode, "failed": True, "why": str(exc)}
    if report.termination != "converged":
        return {"solver": mode, "failed": True, "why": report.termination,
                "time_s": report.wall_time}
    metrics = solution_metrics(pm, report, eps1, eps2)
    thr, raw = metrics.thresholded, metrics.raw
    return {
        "solver": mode,
        "failed": False,
        "time_s": report.wall_time,
        "outit": report.outer_iters,
        "objective": report.objective,
        "ratio": thr.ratio,
        "density_pct": f"{thr.density_pct:.4g} [{raw.density_pct:.4g}]",
        "shorts": f"{thr.shorts} [{raw.shorts}]",
        "t_cost": f"{thr.t_cost} [{raw.t_cost}]",
        "v_norm1": f"{thr.v_norm1} [{raw.v_norm1}]",
        "v_norm_inf": f"{thr.v_norm_inf} [{raw.v_norm_inf}]",
    }


def _render_rows(rows):
    rendered = []
    for row in rows:
        if row["failed"]:
            cells = {c: "---" for c in _TABLE_COLUMNS}
            cells["solver"] = row["solver"]
        else:
            cells = {
                "solver": row["solver"],
                "time_s": f"{row['time_s']:.2f}",
                "outit": str(row["outit"]),
                "objective": f"{row['objective']:.10g}",
                "ratio": f"{row['ratio']:.4g}",
                "density_pct": row["density_pct"],
                "shorts": row["shorts"],
                "t_cost": row["t_cost"],
                "v_norm1": row["v_norm1"],
                "v_norm_inf": row["v_norm_inf"],
            }
        rendered.append(cells)
    return rendered


def _format_table_text(rendered):
    widths = {
        c: max(len(c), *(len(r[c]) for r in rendered)) for c in _TABLE_COLUMNS
    }
    lines = ["  ".join(c.ljust(widths[c]) for c in _TABLE_COLUMNS)]
    for r in rendered:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in _TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def _format_table_csv(rendered):
    lines = [",".join(_TABLE_COLUMNS)]
    for r in rendered:
        lines.append(",".join(f'"{r[c]}"' if "," in r[c] else r[c]
                              for c in _TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_compare(args):
    pm = build_portfolio_model(args)
    cfg = make_config(args, "sbsa")
    threads = os.environ.get("BREGACCEL_THREADS", "")
    try:
        max_workers = max(1, int(threads)) if threads else min(4, os.cpu_count() or 1)
    except ValueError as exc:
        raise InputError(f"BREGACCEL_THREADS: {exc}") from exc
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(
            pool.map(
                lambda mode: _compare_row(mode, pm, cfg, args.eps1, args.eps2),
                ALL_MODES,
            )
        )
    rendered = _render_rows(rows)
    if args.format == "csv":
        _emit(_format_table_csv(rendered), args.out)
    else:
        _emit(_format_table_text(rendered), args.out)
    return EXIT_OK if any(not r["failed"] for r in rows) else EXIT_MAX_OUTER


def cmd_synth(args):
    pm = synth.random_model(
        seed=args.seed, n_assets=args.n_assets, periods=args.periods,
        tau1=args.tau1, tau2=args.tau2, eig_min=args.eig_min,
        eig_max=args.eig_max, mean_return=args.mean_return,
        return_spread=args.return_spread, xi_ini=args.xi_ini,
    )
    synth.save_problem(pm, args.out, seed=args.seed)
    sys.stdout.write(
        f"wrote {args.out} (n_assets={pm.n_assets}, periods={pm.n_periods}, "
        f"n={pm.problem.n}, constraints={pm.problem.m})\n"
    )
    return EXIT_OK


def _load_solution_vector(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read solution file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc}") from exc
        if "u" not in doc:
            raise InputError(f"{path}: JSON solution must contain a 'u' array")
        return np.asarray(doc["u"], dtype=np.float64)
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        bare = line.strip()
        if not bare:
            continue
        try:
            values.append(float(bare))
        except ValueError as exc:
            raise InputError(f"{path}, line {lineno}: {exc}") from exc
    if not values:
        raise InputError(f"{path}: no values found")
    return np.asarray(values, dtype=np.float64)


def cmd_metrics(args):
    pm = build_portfolio_model(args)
    u = _load_solution_vector(args.solution)
    if u.shape[0] != pm.problem.n:
        raise InputError(
            f"solution has {u.shape[0]} entries, model expects {pm.problem.n}"
        )
    _, u_naive = portfolio.naive_wealth(pm.r, pm.n_assets, pm.xi_ini)
    metrics = portfolio.compute_metrics(u, u_naive, pm.problem.C, pm.n_assets,
                                        eps1=args.eps1, eps2=args.eps2)
    doc = _metrics_dict(metrics)
    if args.format == "json":
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = [f"eps1: {_fmt(doc['eps1'])}", f"eps2: {_fmt(doc['eps2'])}"]
        for kind in ("thresholded", "raw"):
            for key, val in doc[kind].items():
                lines.append(f"{kind}_{key}: {_fmt(val)}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _add_input_args(p):
    p.add_argument("--data", help="returns CSV (header: date,ASSET1,...)")
    p.add_argument("--problem", help="problem file written by 'synth'")
    p.add_argument("--percent", action="store_true",
                   help="returns are in percent; divide by 100")
    p.add_argument("--window", type=int, default=60,
                   help="estimation window in data periods (default 60)")
    p.add_argument("--stride", type=int, default=None,
                   help="periods between rebalances (default 12)")
    p.add_argument("--periods", type=int, default=None,
                   help="number of rebalancing periods m")
    p.add_argument("--years", type=int, default=None,
                   help="shorthand for --periods N with monthly data, stride 12")
    p.add_argument("--tau1", type=float, default=1e-2,
                   help="l1 weight on holdings (default 1e-2)")
    p.add_argument("--tau2", type=float, default=1e-2,
                   help="l1 weight on holding changes (default 1e-2)")
    p.add_argument("--xi-ini", dest="xi_ini", type=float, default=1.0,
                   help="initial wealth (default 1)")
    p.add_argument("--xi-fin", dest="xi_fin", type=float, default=None,
                   help="target wealth (default: naive benchmark wealth)")
    p.add_argument("--drop-volatile", dest="drop_volatile", type=int, default=0,
                   help="drop the k most volatile assets before estimation")
    p.add_argument("--cov-divisor", dest="cov_divisor",
                   choices=("unbiased", "biased"), default="unbiased",
                   help="covariance divisor: window-1 or window")
    p.add_argument("--ridge", type=float, default=0.0,
                   help="add ridge*I to each covariance block")


def _add_solver_args(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="constraint penalty (default 1)")
    p.add_argument("--tol-b", dest="tol_b", type=float, default=None,
                   help="outer stopping tolerance (default 1e-4)")
    p.add_argument("--max-outer", dest="max_outer", type=int, default=None,
                   help="outer iteration cap (default 10000)")
    p.add_argument("--warmstart", dest="warmstart_iters", type=int, default=None,
                   help="plain iterations before acceleration (default 5)")
    p.add_argument("--eta", type=float, default=None,
                   help="sufficient-decrease constant (default 0.1)")
    p.add_argument("--gamma0", type=float, default=None,
                   help="initial switching threshold (default 10)")
    p.add_argument("--tol-cg", dest="tol_cg", type=float, default=None,
                   help="CG relative residual tolerance (default 1e-2)")
    p.add_argument("--tol-f", dest="tol_f", type=float, default=None,
                   help="inner displacement tolerance (default 1e-5)")
    p.add_argument("--fista-max-iters", dest="fista_max_iters", type=int,
                   default=None, help="inner iteration cap (default 5000)")
    p.add_argument("--safeguard", choices=driver.SAFEGUARDS, default=None,
                   help="acceleration acceptance policy")
    p.add_argument("--admm-max-outer", dest="admm_max_outer", type=int,
                   default=None, help="ADMM iteration cap (default 25000)")


def _add_output_args(p, formats=("text", "json")):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=formats, default="text")
    p.add_argument("--eps1", type=float, default=1e-4,
                   help="threshold for active positions (default 1e-4)")
    p.add_argument("--eps2", type=float, default=1e-4,
                   help="threshold for weight variations (default 1e-4)")


def build_parser():
    parser = _Parser(prog="bregaccel",
                     description="Constrained fused-lasso solvers and the "
                                 "multi-period portfolio application")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one model with one solver")
    _add_input_args(p_solve)
    _add_solver_args(p_solve)
    _add_output_args(p_solve)
    p_solve.add_argument("--mode", choices=ALL_MODES, default="sbsa")
    p_solve.add_argument("--plot", help="write the per-iteration trace CSV here")
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="run all four solvers on one model")
    _add_input_args(p_cmp)
    _add_solver_args(p_cmp)
    _add_output_args(p_cmp, formats=("text", "csv"))
    p_cmp.set_defaults(func=cmd_compare)

    p_synth = sub.add_parser("synth", help="generate a random problem file")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--n-assets", dest="n_assets", type=int, required=True)
    p_synth.add_argument("--periods", type=int, required=True)
    p_synth.add_argument("--tau1", type=float, default=1e-2)
    p_synth.add_argument("--tau2", type=float, default=1e-2)
    p_synth.add_argument("--eig-min", dest="eig_min", type=float, default=2e-4)
    p_synth.add_argument("--eig-max", dest="eig_max", type=float, default=5e-2)
    p_synth.add_argument("--mean-return", dest="mean_return", type=float,
                         default=0.01)
    p_synth.add_argument("--return-spread", dest="return_spread", type=float,
                         default=0.03)
    p_synth.add_argument("--xi-ini", dest="xi_ini", type=float, default=1.0)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_met = sub.add_parser("metrics", help="metrics of a stored solution")
    _add_input_args(p_met)
    _add_output_args(p_met)
    p_met.add_argument("--solution", required=True,
                       help="JSON report with a 'u' array, or one value per line")
    p_met.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NumericalError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERICAL
    except BregaccelError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
