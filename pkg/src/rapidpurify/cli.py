"""Command-line front end: run simulations, figures and validation to CSV.

Commands: simulate, mean-entropy, first-passage, fig1, fig2, fig3, validate.
Options may come from flags or a flat JSON config file (flags win).  Output
CSVs are UTF-8 with a header row and 17-significant-digit values, so a fixed
seed reproduces them byte for byte at any worker count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .bloch import ModelParams
from .closedform import (
    L_feedback,
    mean_linear_entropy_nofeedback,
    time_to_L_feedback,
    wr_mean_time,
)
from .engine import IntegrationFault, SimConfig, simulate_trajectory
from .ensembles import (
    ensemble_mean_entropy,
    mean_first_passage,
    speedup_fig1,
    speedup_fig2,
    speedup_fig3,
)
from .protocols import parse_protocol
from .validation import full_checks, quick_checks

THREADS_ENV = "HOMODYNE_THREADS"

_CONFIG_KEYS = {
    "gamma": float, "eta": float, "protocol": str, "dt": float, "horizon": float,
    "n_traj": int, "seed": int, "record_stride": int, "threads": int, "out": str,
    "targets": str, "l_grid": str, "t_grid": str, "traj_id": int, "initial": str,
}


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: str, header: list[str], rows) -> None:
    """Write atomically; a failed run leaves no partial file behind."""
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError("l_grid must look like min:max:count") from None
    if not (0.0 < lo < hi < 0.5) or n < 2:
        raise ValueError("l_grid bounds must satisfy 0 < min < max < 0.5 and count >= 2")
    return np.geomspace(hi, lo, n)


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"{what} must be a comma-separated list of numbers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rapidpurify",
        description="Homodyne rapid-purification protocol simulations and figure data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, mc=True):
        p.add_argument("--config", help="flat JSON file with the option keys")
        p.add_argument("--gamma", type=float, default=None, help="decay rate (default 1)")
        p.add_argument("--eta", type=float, default=None, help="detector efficiency (default 1)")
        p.add_argument("--out", default=None, help="output CSV (default <command>_<eta>_<seed>.csv)")
        p.add_argument("--seed", type=int, default=None, help="base RNG seed (default 0)")
        if mc:
            p.add_argument("--dt", type=float, default=None, help="step (default 1e-3/gamma)")
            p.add_argument("--horizon", type=float, default=None, help="end time (default 8/gamma)")
            p.add_argument("--n-traj", type=int, default=None, help="trajectories (default 5000)")
            p.add_argument("--record-stride", type=int, default=None,
                           help="steps between recorded samples (default 10)")
            p.add_argument("--threads", type=int, default=None,
                           help=f"worker threads (default ${THREADS_ENV} or machine parallelism)")

    p = sub.add_parser("simulate", help="record a single trajectory")
    add_common(p)
    p.add_argument("--protocol", default=None, help="rapid | fixed:<theta0> | wr")
    p.add_argument("--traj-id", type=int, default=None, help="trajectory id (default 0)")
    p.add_argument("--initial", default=None, help="initial Bloch vector x,y,z (default 0,0,0)")

    p = sub.add_parser("mean-entropy", help="ensemble mean linear entropy over time")
    add_common(p)
    p.add_argument("--protocol", default=None)
    p.add_argument("--initial", default=None)
    p.add_argument("--t-grid", default=None, help="horizon:count override for the record grid")

    p = sub.add_parser("first-passage", help="mean first-passage times to entropy targets")
    add_common(p)
    p.add_argument("--protocol", default=None)
    p.add_argument("--targets", default=None, help="comma list of L targets (default 0.3,0.1,0.05)")

    for n in (1, 2, 3):
        p = sub.add_parser(f"fig{n}", help=f"speed-up curve data, figure {n}")
        add_common(p, mc=(n != 1))
        p.add_argument("--l-grid", default=None, help="entropy grid min:max:count (log spaced)")

    p = sub.add_parser("validate", help="run the cross-check suite")
    p.add_argument("--quick", action="store_true", help="closed-form checks only (< 10 s)")
    p.add_argument("--threads", type=int, default=None)
    return parser


def _load_config_file(path: str, parser) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file {path}: {exc}")
    if not isinstance(raw, dict):
        parser.error("config file must hold a flat JSON object")
    out = {}
    for key, value in raw.items():
        norm = key.replace("-", "_")
        if norm not in _CONFIG_KEYS:
            parser.error(f"unknown config key {key!r}")
        try:
            out[norm] = _CONFIG_KEYS[norm](value)
        except (TypeError, ValueError):
            parser.error(f"config key {key!r} has invalid value {value!r}")
    return out


def _resolve(args, parser) -> dict:
    """Merge defaults < config file < flags, then validate ranges."""
    opt = {k: None for k in _CONFIG_KEYS}
    if getattr(args, "config", None):
        opt.update(_load_config_file(args.config, parser))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            opt[key] = flag

    opt["gamma"] = 1.0 if opt["gamma"] is None else opt["gamma"]
    opt["eta"] = 1.0 if opt["eta"] is None else opt["eta"]
    if not opt["gamma"] > 0:
        parser.error("gamma must be > 0")
    if not 0.0 <= opt["eta"] <= 1.0:
        parser.error("eta must be in [0,1]")
    gamma = opt["gamma"]
    opt["dt"] = 1e-3 / gamma if opt["dt"] is None else opt["dt"]
    if not opt["dt"] > 0:
        parser.error("dt must be > 0")
    if opt["horizon"] is None:
        opt["horizon"] = 8.0 / gamma
        if args.command == "fig3" and opt["eta"] < 1.0:
            # excursions to low entropy are rare below unit efficiency
            opt["horizon"] = 60.0 / gamma
    if not opt["horizon"] >= opt["dt"]:
        parser.error("horizon must be at least dt")
    opt["n_traj"] = 5000 if opt["n_traj"] is None else opt["n_traj"]
    if opt["n_traj"] < 1:
        parser.error("n_traj must be >= 1")
    opt["seed"] = 0 if opt["seed"] is None else opt["seed"]
    if not 0 <= opt["seed"] < 2**64:
        parser.error("seed must fit in 64 bits")
    opt["record_stride"] = 10 if opt["record_stride"] is None else opt["record_stride"]
    if opt["record_stride"] < 1:
        parser.error("record_stride must be >= 1")
    if opt["threads"] is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        opt["threads"] = int(env) if env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    if opt["threads"] < 1:
        parser.error("threads must be >= 1")
    opt["traj_id"] = 0 if opt["traj_id"] is None else opt["traj_id"]

    if opt["protocol"] is None:
        opt["protocol"] = "rapid"
    try:
        opt["protocol_obj"] = parse_protocol(opt["protocol"])
    except ValueError as exc:
        parser.error(str(exc))

    if opt["initial"] is None:
        opt["initial"] = (0.0, 0.0, 0.0)
    else:
        vals = _parse_floats(opt["initial"], "initial")
        if len(vals) != 3:
            parser.error("initial must be three comma-separated numbers x,y,z")
        if sum(v * v for v in vals) > 1.0 + 1e-9:
            parser.error("initial must lie inside the unit ball")
        opt["initial"] = tuple(vals)

    if opt["targets"] is None:
        opt["targets"] = [0.3, 0.1, 0.05]
    elif isinstance(opt["targets"], str):
        try:
            opt["targets"] = _parse_floats(opt["targets"], "targets")
        except ValueError as exc:
            parser.error(str(exc))
    bad = [t for t in opt["targets"] if not 0.0 < t < 0.5]
    if bad:
        parser.error(f"targets must lie in (0, 0.5); got {bad[0]}")

    if opt["l_grid"] is not None and isinstance(opt["l_grid"], str):
        try:
            opt["l_grid"] = _parse_grid(opt["l_grid"])
        except ValueError as exc:
            parser.error(str(exc))

    if opt["t_grid"] is not None and args.command == "mean-entropy":
        try:
            horizon_s, count_s = opt["t_grid"].split(":")
            horizon, count = float(horizon_s), int(count_s)
        except ValueError:
            parser.error("t_grid must look like horizon:count")
        if horizon <= 0 or count < 1:
            parser.error("t_grid horizon and count must be positive")
        opt["horizon"] = horizon
        opt["record_stride"] = max(1, int(round(horizon / (opt["dt"] * count))))

    opt["out"] = opt["out"] or f"{args.command}_{opt['eta']:g}_{opt['seed']}.csv"
    return opt


def _sim_config(opt) -> SimConfig:
    return SimConfig(dt=opt["dt"], horizon=opt["horizon"], n_traj=opt["n_traj"],
                     seed=opt["seed"], record_stride=opt["record_stride"])


def _params(opt) -> ModelParams:
    return ModelParams(gamma=opt["gamma"], eta=opt["eta"])


def _cmd_simulate(opt) -> int:
    cfg = _sim_config(opt)
    tr = simulate_trajectory(_params(opt), opt["protocol_obj"], cfg, opt["traj_id"],
                             initial=opt["initial"])
    ent = tr.entropies()
    stride = opt["record_stride"]
    rows = []
    reduced = tr.states.ndim == 1
    for i, t in enumerate(tr.times):
        if reduced:
            x, y, z = tr.states[i], 0.0, 0.0
        else:
            x, y, z = tr.states[i]
        rows.append((i * stride, t, x, y, z, ent[i], tr.thetas[i], tr.record[i]))
    write_csv(opt["out"], ["step", "time", "x", "y", "z", "L", "theta", "dr"], rows)
    return 0


def _analytic_mean_entropy(opt, times) -> np.ndarray:
    kind = opt["protocol_obj"].kind
    if kind == "rapid":
        return L_feedback(times, opt["gamma"], opt["eta"])
    if kind == "fixed" and opt["eta"] > 0.0:
        return np.array([mean_linear_entropy_nofeedback(t, opt["gamma"], opt["eta"])
                         for t in times])
    return np.full(len(times), np.nan)


def _cmd_mean_entropy(opt) -> int:
    stats = ensemble_mean_entropy(_params(opt), opt["protocol_obj"], _sim_config(opt),
                                  initial=opt["initial"], threads=opt["threads"])
    analytic = _analytic_mean_entropy(opt, stats.times)
    rows = zip(stats.times, stats.mean_L, stats.stderr_L, analytic)
    write_csv(opt["out"], ["time", "mean_L", "stderr_L", "analytic_L"], rows)
    return 0


def _analytic_passage(opt, target: float) -> float:
    kind = opt["protocol_obj"].kind
    if kind == "rapid":
        return time_to_L_feedback(target, opt["gamma"], opt["eta"])
    if kind == "wr" and opt["eta"] == 1.0:
        return wr_mean_time(target, opt["gamma"])
    return math.nan


def _cmd_first_passage(opt) -> int:
    stats = mean_first_passage(_params(opt), opt["protocol_obj"], opt["targets"],
                               _sim_config(opt), initial=opt["initial"],
                               threads=opt["threads"])
    rows = []
    flagged = 0
    for st in stats:
        if st.all_censored:
            flagged += 1
        rows.append((st.target_L, st.mean_T, st.stderr_T, st.n_censored,
                     _analytic_passage(opt, st.target_L)))
    write_csv(opt["out"], ["target_L", "mean_T", "stderr_T", "censored", "analytic_T"], rows)
    if flagged:
        print(f"warning: {flagged} target(s) fully censored; no mean reported", file=sys.stderr)
    return 0


def _write_curve(opt, curve) -> int:
    header = ["L", "t_numerator", "t_denominator", "s"]
    cols = [curve.L, curve.t_numerator, curve.t_denominator, curve.s]
    if curve.stderr_s is not None:
        header.append("stderr_s")
        cols.append(curve.stderr_s)
    write_csv(opt["out"], header, zip(*cols))
    if curve.censored is not None and int(np.sum(curve.censored)) > 0:
        print(f"warning: {int(np.sum(curve.censored))} censored trajectories "
              "across the target grid", file=sys.stderr)
    return 0


def _cmd_fig(opt, n: int) -> int:
    gamma, eta = opt["gamma"], opt["eta"]
    if n == 1:
        curve = speedup_fig1(gamma, eta, opt["l_grid"])
    elif n == 2:
        curve = speedup_fig2(gamma, eta, opt["l_grid"], _sim_config(opt),
                             threads=opt["threads"])
    else:
        grid = opt["l_grid"]
        if grid is None and eta < 1.0:
            grid = np.geomspace(0.45, 0.01, 25)
        curve = speedup_fig3(gamma, eta, grid,
                             None if eta == 1.0 else _sim_config(opt),
                             threads=opt["threads"])
    return _write_curve(opt, curve)


def _cmd_validate(args) -> int:
    threads = args.threads or (os.cpu_count() or 1)
    results = quick_checks() if args.quick else full_checks(threads=threads)
    failed = [r.name for r in results if not r.passed]
    for r in results:
        mark = " ok " if r.passed else "FAIL"
        line = f"[{mark}] {r.name}"
        if r.detail:
            line += f": {r.detail}"
        print(line)
    if failed:
        json.dump({"failed": failed}, sys.stderr)
        print(file=sys.stderr)
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate":
        return _cmd_validate(args)
    opt = _resolve(args, parser)
    try:
        if args.command == "simulate":
            return _cmd_simulate(opt)
        if args.command == "mean-entropy":
            return _cmd_mean_entropy(opt)
        if args.command == "first-passage":
            return _cmd_first_passage(opt)
        return _cmd_fig(opt, int(args.command[3]))
    except IntegrationFault as exc:
        print(f"error: {exc} (trajectory {exc.trajectory_id}, step {exc.step_index})",
              file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
