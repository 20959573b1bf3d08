"""Command-line driver: sensitivity sweeps, single points, verification.

Subcommands:

* ``sweep``    -- grid sweeps over endowment, risk aversion, or signal
  precision; emits a CSV plus a gnuplot script with the three-panel
  layout (price upper-left, volatility upper-right, MPR lower).
* ``point``    -- a single (t, x, h) evaluation, printed as text.
* ``verify``   -- the full identity-check harness.
* ``selftest`` -- fast invariant suite for the math kernels and solver.

Exit codes: 0 success, 1 solver or verification failure, 2 bad config.
The worker count for sweeps comes from the ARTIFACT_WORKERS environment
variable (unset or <2 means serial).
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .clearing_solver import solve_kappa_hat, solve_kappa_small_eta, solve_log_z
from .economy import (
    EconomyParams,
    derive_constants,
    h_quantiles,
    vartheta,
)
from .equilibrium import (
    equilibrium_point,
    price_limit_large_eta,
    price_limit_small_eta,
    risk_neutral_price,
)
from .preferences import crra
from .special_math import DEFAULT_QUAD_ORDER, gauss_hermite, lambert_w0, lambert_w_exp
from .verification import McConfig, run_full_verification

_CSV_COLUMNS = (
    "sweep_var",
    "h_quantile",
    "h_value",
    "price0",
    "volatility0",
    "rel_volatility0",
    "mpr0",
    "kappa_hat",
    "budget_residual",
)
_KINDS = ("endowment", "risk_aversion", "precision", "single_point", "verify")
_ECON_KEYS = tuple(f.name for f in dataclasses.fields(EconomyParams))
_EXTRA_KEYS = ("quad_order", "h_quantiles", "mc_seed")

_DEFAULT_GRIDS = {
    "endowment": (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6),
    "risk_aversion": (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0),
    "precision": tuple(float(v) for v in np.logspace(0.0, 2.0, 7)),
    "single_point": (0.0,),
    "verify": (0.0,),
}
_DEFAULT_QUANTILES = (0.1, 0.5, 0.9)


class ConfigError(ValueError):
    """Bad config file or bad flag combination (exit code 2)."""


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: what varies, over which grid, at which h-quantiles."""

    kind: str
    grid: tuple
    h_quantiles: tuple
    base: EconomyParams
    output_path: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if len(self.grid) == 0:
            raise ValueError("sweep grid must be non-empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if any(not 0 < q < 1 for q in self.h_quantiles):
            raise ValueError("h-quantiles must lie in (0, 1)")


@dataclass
class SweepResult:
    rows: list
    errors: list
    csv_path: str
    plot_path: str


def _cell_params(kind: str, value: float, base: EconomyParams) -> EconomyParams:
    if kind == "endowment":
        # x-axis is the weighted initial position omega_U * pi0_U
        return dataclasses.replace(base, pi0_U=value / base.omega_U)
    if kind == "risk_aversion":
        return dataclasses.replace(base, eta_U=value)
    if kind == "precision":
        # x-axis is the noise-signal precision P_N = 1 / C_N
        return dataclasses.replace(base, C_N=1.0 / value)
    return base


def _point_record(t, x, h, p, d, rule):
    """Solve the economy at signal h and evaluate the market at (t, x).

    quad_flag comes from the dual-order check in equilibrium_point; the
    CSV writer ignores it, but `point` prints a warning when it is set.
    """
    spec = crra(p.eta_U)
    cs = solve_kappa_hat(h, spec, d, p, rule)
    pt = equilibrium_point(t, x, h, cs, d, p, rule)
    return {
        "price": pt.price,
        "volatility": pt.volatility,
        "rel_volatility": pt.volatility / pt.price,
        "mpr": pt.mpr,
        "kappa_hat": cs.kappa_hat,
        "budget_residual": cs.budget_residual,
        "quad_flag": pt.quad_flag,
    }


def _sweep_cell(job):
    """One (grid value, quantile) cell; returns (error or None, row dict)."""
    kind, value, q, base, order = job
    row = {c: math.nan for c in _CSV_COLUMNS}
    row["sweep_var"] = value
    row["h_quantile"] = q
    try:
        p = _cell_params(kind, value, base)
        d = derive_constants(p)
        h = float(h_quantiles(d, (q,))[0])
        rule = gauss_hermite(order)
        rec = _point_record(0.0, p.x0, h, p, d, rule)
    except Exception as exc:
        return f"{kind}[{value:g}, q={q:g}]: {exc}", row
    row.update(
        h_value=h,
        price0=rec["price"],
        volatility0=rec["volatility"],
        rel_volatility0=rec["rel_volatility"],
        mpr0=rec["mpr"],
        kappa_hat=rec["kappa_hat"],
        budget_residual=rec["budget_residual"],
    )
    return None, row


def _limit_rows(spec: SweepSpec, order: int):
    """The two risk-aversion limit rows per quantile (price only)."""
    results = []
    p = spec.base
    d = derive_constants(p)
    rule = gauss_hermite(order)
    for q in spec.h_quantiles:
        h = float(h_quantiles(d, (q,))[0])
        for tag in (0.0, math.inf):
            row = {c: math.nan for c in _CSV_COLUMNS}
            row["sweep_var"] = tag
            row["h_quantile"] = q
            row["h_value"] = h
            try:
                if tag == 0.0:
                    kappa0 = solve_kappa_small_eta(h, d, p, rule)
                    row["price0"] = price_limit_small_eta(0.0, p.x0, h, kappa0, d, p, rule)
                    row["kappa_hat"] = kappa0
                else:
                    row["price0"] = price_limit_large_eta(0.0, p.x0, h, d, p, rule)
            except Exception as exc:
                results.append((f"{spec.kind}[limit {tag:g}, q={q:g}]: {exc}", row))
                continue
            results.append((None, row))
    return results


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def _write_csv(path: str, rows: list) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(_CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in _CSV_COLUMNS) + "\n")


_XLABELS = {
    "endowment": "omega_U * pi0_U",
    "risk_aversion": "eta_U",
    "precision": "P_N",
    "single_point": "sweep_var",
}


def _write_plot_script(spec: SweepSpec, csv_path: str, plot_path: str) -> None:
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    logx = spec.kind in ("risk_aversion", "precision")
    xlabel = _XLABELS.get(spec.kind, "sweep_var")

    def panel(title, col, origin, size):
        series = ", ".join(
            f'"{os.path.basename(csv_path)}" using 1:(abs($2-{q:g})<1e-9?${col}:1/0) '
            f'with linespoints title "h quantile {q:g}"'
            for q in spec.h_quantiles
        )
        return [
            f"set origin {origin[0]},{origin[1]}",
            f"set size {size[0]},{size[1]}",
            f'set title "{title}"',
            f'set xlabel "{xlabel}"',
            "plot " + series,
        ]

    lines = [
        'set datafile separator ","',
        'set datafile missing "nan"',
        "set terminal pngcairo size 1200,900",
        f'set output "{stem}.png"',
        "set key left top",
        "set logscale x" if logx else "unset logscale x",
        "set multiplot",
    ]
    lines += panel("price S(0, x0, h)", 4, (0.0, 0.5), (0.5, 0.5))
    lines += panel("volatility", 5, (0.5, 0.5), (0.5, 0.5))
    lines += panel("market price of risk", 7, (0.0, 0.0), (1.0, 0.5))
    lines += ["unset multiplot"]
    with open(plot_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_sweep(spec: SweepSpec, quad_order: int = DEFAULT_QUAD_ORDER) -> SweepResult:
    """Evaluate every grid x quantile cell and write the CSV + plot script.

    Cells are independent; with ARTIFACT_WORKERS >= 2 they run in a
    process pool.  Rows are written in grid-major order regardless of
    completion order, so the output is deterministic.  Solver failures
    become rows of nan and are reported in the result, not raised.
    """
    if spec.kind == "verify":
        report = run_full_verification(spec.base)
        with open(spec.output_path, "w") as fh:
            fh.write(report.format_table() + "\n")
        if not report.passed:
            raise RuntimeError("verification failed:\n" + report.format_table())
        return SweepResult([], [], spec.output_path, "")

    jobs = [
        (spec.kind, float(v), float(q), spec.base, quad_order)
        for v in spec.grid
        for q in spec.h_quantiles
    ]
    workers = int(os.environ.get("ARTIFACT_WORKERS", "0") or 0)
    if workers >= 2:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, jobs))
    else:
        outcomes = [_sweep_cell(job) for job in jobs]
    if spec.kind == "risk_aversion":
        outcomes += _limit_rows(spec, quad_order)

    rows = [row for _, row in outcomes]
    errors = [err for err, _ in outcomes if err is not None]
    _write_csv(spec.output_path, rows)
    plot_path = os.path.splitext(spec.output_path)[0] + ".gnuplot"
    _write_plot_script(spec, spec.output_path, plot_path)
    return SweepResult(rows, errors, spec.output_path, plot_path)


def run_point(t, x, h, p: EconomyParams, quad_order: int = DEFAULT_QUAD_ORDER, rn: bool = False):
    """Single-point evaluation; the same code path as a sweep cell."""
    if not 0.0 <= t <= p.T:
        raise ValueError("t must lie in [0, T]")
    d = derive_constants(p)
    rule = gauss_hermite(quad_order)
    rec = _point_record(t, x, h, p, d, rule)
    kappa0 = solve_kappa_small_eta(h, d, p, rule)
    rec["price_limit_small_eta"] = price_limit_small_eta(t, x, h, kappa0, d, p, rule)
    rec["price_limit_large_eta"] = price_limit_large_eta(t, x, h, d, p, rule)
    if rn:
        rec["risk_neutral_price"] = risk_neutral_price(t, x, h, d, p, rule)
    return rec


# ---------------------------------------------------------------------------
# config handling


def parse_config(path: str) -> dict:
    """Parse a line-oriented `key = value` config file.

    Keys are the economy parameter names plus quad_order, h_quantiles and
    mc_seed.  Unknown keys are a hard error so a misspelled parameter
    cannot silently fall back to its default.
    """
    cfg: dict = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}")
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in _ECON_KEYS:
                try:
                    cfg[key] = float(value)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad number for {key}: {value!r}")
            elif key in ("quad_order", "mc_seed"):
                try:
                    cfg[key] = int(value)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad integer for {key}: {value!r}")
            elif key == "h_quantiles":
                try:
                    cfg[key] = tuple(float(part) for part in value.split(","))
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad quantile list: {value!r}")
            else:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    return cfg


def _build_params(cfg: dict) -> EconomyParams:
    econ = {k: v for k, v in cfg.items() if k in _ECON_KEYS}
    try:
        return EconomyParams(**econ)
    except ValueError as exc:
        raise ConfigError(f"invalid economy parameters: {exc}")


def _parse_float_list(text: str, what: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"bad {what} list: {text!r}")


# ---------------------------------------------------------------------------
# selftest


def _selftest() -> int:
    failures = []

    def check(name, ok):
        print(f"selftest: {name:<32} {'ok' if ok else 'FAIL'}")
        if not ok:
            failures.append(name)

    y = np.concatenate([np.logspace(-8, 8, 200), [-0.3678, -0.25, -0.1, 0.0]])
    w = lambert_w0(y)
    check("lambert identity", float(np.max(np.abs(w * np.exp(w) - y))) < 1e-12 * (1 + np.max(np.abs(y))))
    u = np.linspace(-50.0, 800.0, 300)
    wu = lambert_w_exp(u)
    check("lambert exp identity", float(np.max(np.abs(wu + np.log(wu) - u))) < 1e-10)

    rule = gauss_hermite(40)
    moments = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]
    got = [float(np.dot(rule.weights, rule.nodes**k)) for k in range(7)]
    check("hermite moments", max(abs(a - b) for a, b in zip(got, moments)) < 1e-10)

    from .economy import baseline_params

    p = baseline_params()
    d = derive_constants(p)
    worst = 0.0
    xs = np.linspace(-2.0, 2.0, 21)
    for eta in (0.5, 1.0, 5.0):
        spec = crra(eta)
        for kappa in (-2.0, 0.0, 2.0):
            h = float(h_quantiles(d, (0.5,))[0])
            log_z = solve_log_z(xs, h, kappa, spec, d, p)
            iz = np.exp(-log_z / eta)
            resid = p.omega_U * iz - d.alpha_sum * log_z - (vartheta(xs, h, d, p) + kappa)
            worst = max(worst, float(np.max(np.abs(resid))))
    check("clearing residual", worst < 1e-10)

    h = float(h_quantiles(d, (0.5,))[0])
    cs = solve_kappa_hat(h, crra(p.eta_U), d, p, gauss_hermite(DEFAULT_QUAD_ORDER))
    check("budget root", abs(cs.budget_residual) < 1e-8)

    if failures:
        print(f"selftest: {len(failures)} failure(s)", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artifact",
        description="equilibrium prices under asymmetric information: sweeps, points, checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="grid sweep; writes CSV and a gnuplot script")
    sweep.add_argument("--kind", required=True, choices=[k for k in _KINDS if k != "verify"])
    sweep.add_argument("--grid", help="comma-separated grid values (default per kind)")
    sweep.add_argument("--quantiles", help="comma-separated h-quantiles (default 0.1,0.5,0.9)")
    sweep.add_argument("--config", help="key = value parameter file")
    sweep.add_argument("--order", type=int, help="quadrature order (default 100)")
    sweep.add_argument("--output", help="CSV path (default <kind>_sweep.csv)")

    point = sub.add_parser("point", help="evaluate one (t, x, h) market point")
    point.add_argument("--t", type=float, default=0.0)
    point.add_argument("--x", type=float, default=None, help="log factor state (default x0)")
    group = point.add_mutually_exclusive_group()
    group.add_argument("--h", type=float, default=None, help="signal value")
    group.add_argument("--quantile", type=float, default=None, help="signal quantile (default 0.5)")
    point.add_argument("--rn", action="store_true", help="also print the risk-neutral price")
    point.add_argument("--config", help="key = value parameter file")
    point.add_argument("--order", type=int, help="quadrature order (default 100)")

    verify = sub.add_parser("verify", help="run the full identity-check harness")
    verify.add_argument("--config", help="key = value parameter file")
    verify.add_argument("--paths", type=int, default=200_000, help="MC paths (default 200000)")
    verify.add_argument("--seed", type=int, default=None, help="MC seed (default 12345)")
    verify.add_argument("--antithetic", action="store_true")
    verify.add_argument("--output", help="also write the report table to this path")

    sub.add_parser("selftest", help="fast kernel and solver invariant suite")
    return parser


def _load(args) -> tuple:
    cfg = parse_config(args.config) if getattr(args, "config", None) else {}
    params = _build_params(cfg)
    order = getattr(args, "order", None) or cfg.get("quad_order", DEFAULT_QUAD_ORDER)
    if order < 1:
        raise ConfigError("quad_order must be >= 1")
    return cfg, params, order


def _cmd_sweep(args) -> int:
    cfg, params, order = _load(args)
    if args.grid is not None:
        grid = _parse_float_list(args.grid, "grid")
    else:
        grid = _DEFAULT_GRIDS[args.kind]
    if args.quantiles is not None:
        quantiles = _parse_float_list(args.quantiles, "quantile")
    else:
        quantiles = tuple(cfg.get("h_quantiles", _DEFAULT_QUANTILES))
    output = args.output or f"{args.kind}_sweep.csv"
    try:
        spec = SweepSpec(args.kind, tuple(grid), quantiles, params, output)
    except ValueError as exc:
        raise ConfigError(str(exc))
    result = run_sweep(spec, quad_order=order)
    print(f"wrote {result.csv_path} and {result.plot_path} ({len(result.rows)} rows)")
    for err in result.errors:
        print(f"error: {err}", file=sys.stderr)
    return 1 if result.errors else 0


def _cmd_point(args) -> int:
    cfg, params, order = _load(args)
    d = derive_constants(params)
    x = params.x0 if args.x is None else args.x
    if args.h is not None:
        h = args.h
        label = f"h = {_fmt(float(h))}"
    else:
        q = 0.5 if args.quantile is None else args.quantile
        if not 0 < q < 1:
            raise ConfigError("quantile must lie in (0, 1)")
        h = float(h_quantiles(d, (q,))[0])
        label = f"h = {_fmt(h)} (quantile {q:g})"
    rec = run_point(args.t, x, h, params, quad_order=order, rn=args.rn)
    print(f"t = {_fmt(float(args.t))}, x = {_fmt(float(x))}, {label}")
    for key in (
        "price",
        "volatility",
        "rel_volatility",
        "mpr",
        "kappa_hat",
        "budget_residual",
        "price_limit_small_eta",
        "price_limit_large_eta",
        "risk_neutral_price",
    ):
        if key in rec:
            print(f"{key:<22} = {_fmt(float(rec[key]))}")
    if rec["quad_flag"]:
        print(
            f"warning: order {order} disagrees with the doubled-order check; "
            "results may be under-resolved, try a larger --order",
            file=sys.stderr,
        )
    return 0


def _cmd_verify(args) -> int:
    cfg, params, _ = _load(args)
    seed = args.seed if args.seed is not None else cfg.get("mc_seed", 12345)
    mc = McConfig(n_paths=args.paths, seed=seed, antithetic=args.antithetic)
    report = run_full_verification(params, mc)
    table = report.format_table()
    print(table)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(table + "\n")
    return 0 if report.passed else 1


def main(argv=None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "point":
            return _cmd_point(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _selftest()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
