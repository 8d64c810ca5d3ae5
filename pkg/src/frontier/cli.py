"""Command line entry point.

Subcommands: simulate, speed, classify, flatten, accel, cstar, ladder,
apmean, lyapunov, lstar, check-kernel, sweep.  Runs write `series.csv`
(17-significant-digit decimals, so reruns are bitwise identical and
re-parsing reproduces the in-memory series exactly), per-time snapshot
CSVs, a key-value summary, and figures.  Exit codes: 0 success, 2 config
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import analysis, ap_ode, fb_solver, lyapunov, plots
from .config import load_config
from .errors import ConfigError, FrontierError, NumericsError
from .kernels import validate_h1


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_series_csv(record: fb_solver.RunRecord, path: Path):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,g,h,umax,mass\n")
        for row in zip(record.times, record.gs, record.hs, record.umaxes, record.masses):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_snapshot_csv(x: np.ndarray, u: np.ndarray, path: Path):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,u\n")
        for xv, uv in zip(x, u):
            fh.write(f"{_fmt(xv)},{_fmt(uv)}\n")


def _kv_block(pairs) -> str:
    return "\n".join(f"{k} = {v}" for k, v in pairs)


def _write_summary(record: fb_solver.RunRecord, path: Path):
    pairs = [
        ("final_t", _fmt(record.times[-1])),
        ("final_g", _fmt(record.gs[-1])),
        ("final_h", _fmt(record.hs[-1])),
        ("final_width", _fmt(record.widths[-1])),
        ("final_umax", _fmt(record.umaxes[-1])),
        ("final_mass", _fmt(record.masses[-1])),
        ("termination", record.termination),
        ("horizon", _fmt(record.config.horizon)),
        ("wall_time_s", f"{record.wall_time:.3f}"),
    ]
    path.write_text(_kv_block(pairs) + "\n", encoding="utf-8")


def load_series(run_dir: Path) -> fb_solver.RunRecord:
    """Rebuild a (series + snapshots) record from a simulate output directory."""
    series = np.genfromtxt(run_dir / "series.csv", delimiter=",", names=True)
    series = np.atleast_1d(series)
    summary = {}
    summary_path = run_dir / "summary.txt"
    if summary_path.exists():
        for line in summary_path.read_text(encoding="utf-8").splitlines():
            if " = " in line:
                key, val = line.split(" = ", 1)
                summary[key.strip()] = val.strip()
    snapshot_times = []
    snapshots = []
    x = np.array([])
    for snap in sorted(run_dir.glob("snapshot_*.csv"), key=lambda p: float(p.stem.split("_", 1)[1])):
        data = np.genfromtxt(snap, delimiter=",", names=True)
        x = np.asarray(data["x"], dtype=float)
        snapshot_times.append(float(snap.stem.split("_", 1)[1]))
        snapshots.append(np.asarray(data["u"], dtype=float))
    horizon = float(summary.get("horizon", series["t"][-1]))
    config = SimpleNamespace(horizon=horizon)
    return fb_solver.RunRecord(
        times=np.asarray(series["t"], dtype=float),
        gs=np.asarray(series["g"], dtype=float),
        hs=np.asarray(series["h"], dtype=float),
        umaxes=np.asarray(series["umax"], dtype=float),
        masses=np.asarray(series["mass"], dtype=float),
        snapshot_times=np.asarray(snapshot_times),
        snapshots=snapshots,
        x=x,
        config=config,
        termination=summary.get("termination", "horizon"),
        wall_time=float(summary.get("wall_time_s", 0.0)),
    )


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    record = fb_solver.run(cfg.run)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_series_csv(record, out / "series.csv")
    for t, u in zip(record.snapshot_times, record.snapshots):
        _write_snapshot_csv(record.x, u, out / f"snapshot_{t:g}.csv")
    _write_summary(record, out / "summary.txt")
    if not args.no_plots:
        target = None
        if math.isfinite(cfg.run.kernel.half_first_moment()):
            target = analysis.compute_cstar(cfg.run.mu, cfg.run.growth, cfg.run.kernel)
        plots.save_fronts(record, out / "fronts.png", target)
        plots.save_profiles(record, out / "profiles.png")
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")
    return 0


def _cmd_speed(args) -> int:
    record = load_series(Path(args.run))
    pairs = []
    for which in ("right", "left"):
        slope_fit, endpoint = analysis.estimate_speed(record, which, args.window_fraction)
        pairs += [
            (f"{which}_slope", _fmt(slope_fit.c_hat)),
            (f"{which}_slope_stderr", _fmt(slope_fit.stderr)),
            (f"{which}_endpoint", _fmt(endpoint.c_hat)),
            (f"{which}_window_lo", _fmt(slope_fit.window[0])),
            (f"{which}_window_hi", _fmt(slope_fit.window[1])),
        ]
    print(_kv_block(pairs))
    return 0


def _cmd_classify(args) -> int:
    record = load_series(Path(args.run))
    outcome = analysis.classify_outcome(record, args.width_threshold, args.decay_tol)
    print(
        _kv_block(
            [
                ("outcome", outcome.value),
                ("final_width", _fmt(record.widths[-1])),
                ("final_umax", _fmt(record.umaxes[-1])),
                ("width_threshold", _fmt(args.width_threshold)),
                ("decay_tol", _fmt(args.decay_tol)),
            ]
        )
    )
    return 0


def _cmd_flatten(args) -> int:
    cfg = load_config(args.config)
    record = load_series(Path(args.run))
    if not record.snapshots:
        raise NumericsError("run directory holds no snapshots")
    target = analysis.compute_cstar(cfg.run.mu, cfg.run.growth, cfg.run.kernel)
    ap = analysis.attractor_solution(cfg.run.growth, record.horizon)
    series = analysis.flattening_metric(record, target, args.eps_fraction, ap)
    out_csv = Path(args.out) if args.out else Path(args.run) / "flattening.csv"
    with out_csv.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,deviation\n")
        for t, dev in series:
            fh.write(f"{_fmt(t)},{_fmt(dev)}\n")
    plots.save_flattening(series, out_csv.with_suffix(".png"))
    print(
        _kv_block(
            [
                ("snapshots", len(series)),
                ("final_deviation", _fmt(series[-1][1])),
                ("eps_fraction", _fmt(args.eps_fraction)),
                ("csv", str(out_csv)),
            ]
        )
    )
    return 0


def _cmd_accel(args) -> int:
    record = load_series(Path(args.run))
    verdict, ratio = analysis.acceleration_check(record)
    print(_kv_block([("accelerated", verdict), ("ratio", _fmt(ratio))]))
    return 0


def _cmd_cstar(args) -> int:
    cfg = load_config(args.config)
    target = analysis.compute_cstar(cfg.run.mu, cfg.run.growth, cfg.run.kernel)
    print(
        _kv_block(
            [
                ("c_star", _fmt(target.c_star) if math.isfinite(target.c_star) else "infinite"),
                ("mu", _fmt(target.mu)),
                ("u_mean", _fmt(target.u_mean)),
                ("m1", _fmt(target.m1) if math.isfinite(target.m1) else "infinite"),
            ]
        )
    )
    return 0


def _cmd_ladder(args) -> int:
    cfg = load_config(args.config)
    cutoffs = [float(v) for v in args.cutoffs.split(",")]
    targets = analysis.truncation_ladder(cfg.run.mu, cfg.run.growth, cfg.run.kernel, cutoffs, args.width)
    for cut, target in zip(cutoffs, targets):
        print(f"cutoff_{cut:g} = {_fmt(target.c_star)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "ladder.csv").open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("cutoff,c_star\n")
            for cut, target in zip(cutoffs, targets):
                fh.write(f"{_fmt(cut)},{_fmt(target.c_star)}\n")
        plots.save_ladder(cutoffs, [t.c_star for t in targets], out / "ladder.png")
    return 0


def _cmd_apmean(args) -> int:
    cfg = load_config(args.config)
    sol = analysis.attractor_solution(cfg.run.growth, args.horizon)
    mean, converged = ap_ode.ap_mean(sol)
    print(
        _kv_block(
            [
                ("mean", _fmt(mean)),
                ("converged", converged),
                ("ci", _fmt(sol.mean_ci_width)),
                ("transient_cut", _fmt(sol.transient_cut)),
            ]
        )
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,u\n")
            for t, u in zip(sol.sample_times, sol.values):
                fh.write(f"{_fmt(t)},{_fmt(u)}\n")
    return 0


def _cmd_lyapunov(args) -> int:
    cfg = load_config(args.config)
    L = args.L if args.L is not None else cfg.lyap_L
    est = lyapunov.lyapunov_exponent(
        cfg.run.growth.a,
        cfg.run.d,
        cfg.run.kernel,
        L,
        horizon=cfg.lyap_horizon,
        renorm_every=cfg.lyap_renorm_every,
    )
    print(
        _kv_block(
            [
                ("L", _fmt(est.L)),
                ("lambda", _fmt(est.lam)),
                ("ci_width", _fmt(est.ci_width)),
                ("window_slopes", ",".join(_fmt(s) for s in est.window_slopes)),
            ]
        )
    )
    return 0


def _cmd_lstar(args) -> int:
    cfg = load_config(args.config)
    lstar = lyapunov.find_Lstar(cfg.run.growth.a, cfg.run.d, cfg.run.kernel, cfg.lstar_Lmax)
    print(_kv_block([("lstar", "none" if lstar is None else _fmt(lstar))]))
    return 0


def _cmd_check_kernel(args) -> int:
    cfg = load_config(args.config)
    print(validate_h1(cfg.run.kernel, samples=args.samples).as_text())
    return 0


def _sweep_one(payload):
    """Worker for one sweep row (executed in a separate process)."""
    exp, parameter, value, out_dir, width_threshold, decay_tol = payload
    row = {"value": value, "outcome": "error", "final_width": float("nan"), "c_hat": float("nan")}
    try:
        sub = exp.with_run_value(parameter, value)
        record = fb_solver.run(sub.run)
        outcome = analysis.classify_outcome(record, width_threshold, decay_tol)
        row["outcome"] = outcome.value
        row["final_width"] = float(record.widths[-1])
        if outcome is analysis.Outcome.SPREADING:
            row["c_hat"] = analysis.estimate_speed(record, "right", sub.window_fraction)[0].c_hat
        if out_dir:
            run_dir = Path(out_dir) / f"{parameter}_{value:g}"
            run_dir.mkdir(parents=True, exist_ok=True)
            _write_series_csv(record, run_dir / "series.csv")
            _write_summary(record, run_dir / "summary.txt")
    except FrontierError as exc:
        row["error"] = str(exc)
    return row


def _cmd_sweep(args) -> int:
    exp = load_config(args.config)
    if exp.sweep is None:
        raise ConfigError("config has no sweep table")
    parameter = exp.sweep.parameter
    jobs = args.jobs or int(os.environ.get("FRONTIER_JOBS", "0")) or min(len(exp.sweep.values), os.cpu_count() or 1)
    payloads = [
        (exp, parameter, value, args.out, exp.width_threshold, exp.decay_tol) for value in exp.sweep.values
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, payloads))
    else:
        rows = [_sweep_one(p) for p in payloads]

    print(f"{parameter},outcome,final_width,c_hat")
    for row in rows:
        print(
            f"{row['value']:g},{row['outcome']},{_fmt(row['final_width'])},"
            + (_fmt(row["c_hat"]) if math.isfinite(row["c_hat"]) else "")
        )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "sweep.csv").open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{parameter},outcome,final_width,c_hat\n")
            for row in rows:
                fh.write(
                    f"{_fmt(row['value'])},{row['outcome']},{_fmt(row['final_width'])},"
                    + (_fmt(row["c_hat"]) if math.isfinite(row["c_hat"]) else "")
                    + "\n"
                )
        plots.save_sweep(rows, parameter, out / "sweep.png")

    if parameter == "mu":
        seen_spreading = False
        for row in sorted(rows, key=lambda r: r["value"]):
            if row["outcome"] == "spreading":
                seen_spreading = True
            elif row["outcome"] == "vanishing" and seen_spreading:
                raise NumericsError("outcome not monotone along mu: vanishing above a spreading value")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frontier", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        return p

    p = add("simulate", _cmd_simulate, help="run the free-boundary solver")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")

    p = add("speed", _cmd_speed, help="front speed estimates from series.csv")
    p.add_argument("--run", required=True)
    p.add_argument("--window-fraction", type=float, default=0.5)

    p = add("classify", _cmd_classify, help="spreading/vanishing verdict")
    p.add_argument("--run", required=True)
    p.add_argument("--width-threshold", type=float, default=50.0)
    p.add_argument("--decay-tol", type=float, default=1e-4)

    p = add("flatten", _cmd_flatten, help="deviation from the attractor inside the cone")
    p.add_argument("--config", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--eps-fraction", type=float, default=0.5)
    p.add_argument("--out")

    p = add("accel", _cmd_accel, help="superlinear front growth check")
    p.add_argument("--run", required=True)

    p = add("cstar", _cmd_cstar, help="target spreading speed")
    p.add_argument("--config", required=True)

    p = add("ladder", _cmd_ladder, help="truncated-kernel speed ladder")
    p.add_argument("--config", required=True)
    p.add_argument("--cutoffs", required=True, help="comma separated, e.g. 10,20,40")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--out")

    p = add("apmean", _cmd_apmean, help="mean of the flat almost-periodic attractor")
    p.add_argument("--config", required=True)
    p.add_argument("--horizon", type=float, default=2200.0)
    p.add_argument("--csv")

    p = add("lyapunov", _cmd_lyapunov, help="principal Lyapunov exponent at one L")
    p.add_argument("--config", required=True)
    p.add_argument("--L", type=float)

    p = add("lstar", _cmd_lstar, help="threshold interval half-length")
    p.add_argument("--config", required=True)

    p = add("check-kernel", _cmd_check_kernel, help="kernel hypothesis report")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=1000)

    p = add("sweep", _cmd_sweep, help="run and classify along a parameter axis")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
