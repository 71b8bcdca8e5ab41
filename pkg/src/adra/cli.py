"""Command-line front end: ``adra {solve,simulate,sweep-delta,optimize,compare,replay}``.

Every command that writes files also writes ``<prefix>_manifest.txt``;
``adra replay <manifest>`` reruns it and rewrites identical CSVs.
Exit codes: 0 ok, 2 bad arguments, 3 solver failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (NoSignChangeError, ProtocolConfig, average_aoi_aira,
                       solve_success_probability, stationary_distribution,
                       average_aoi_adra)
from .opt import SearchSpace, optimize, sweep_delta
from .sim import CapPolicy, SimConfig, default_pmf_cap, run

EXIT_OK, EXIT_ARGS, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "ADRA_OUTPUT_DIR"

SUMMARY_COLUMNS = [
    "n", "policy", "p", "delta", "horizon", "warmup", "replications", "seed",
    "network_avg_aoi", "avg_aoi_stderr", "analytic_avg_aoi",
    "success_rate", "collision_rate", "idle_rate",
    "empirical_q", "empirical_q_stderr", "analytic_q", "overflow_mass", "tv_distance",
]
PMF_COLUMNS = ["age", "analytic_pmf", "empirical_pmf"]
SWEEP_COLUMNS = ["n", "p", "delta", "analytic_q", "analytic_avg_aoi",
                 "sim_avg_aoi", "sim_stderr", "empirical_q"]
OPTIMUM_COLUMNS = ["n", "best_p", "best_delta", "best_q", "best_avg_aoi",
                   "regime_warning", "failed_points"]
SURFACE_COLUMNS = ["p", "delta", "avg_aoi"]
COMPARE_COLUMNS = ["n", "aira_p", "aira_avg_aoi", "adra_p", "adra_delta", "adra_q",
                   "adra_avg_aoi", "gap", "regime_warning"]

log = logging.getLogger("adra")


class UsageError(ValueError):
    pass


def parse_p(text: str, n: int) -> float:
    """Parse ``0.1`` or the per-device shorthand ``1.5/N``."""
    t = text.strip()
    if t.upper().endswith("/N"):
        head = t[:-2].strip() or "1"
        try:
            value = float(head) / n
        except ValueError:
            raise UsageError(f"bad probability {text!r}") from None
    else:
        try:
            value = float(t)
        except ValueError:
            raise UsageError(f"bad probability {text!r}") from None
    if not (0.0 < value <= 1.0) or math.isnan(value):
        raise UsageError(f"probability must lie in (0, 1], got {text!r} -> {value}")
    return value


def parse_int_range(text: str) -> list:
    """``1..100``, ``1..100:5`` or ``10,20,50``."""
    t = text.strip()
    try:
        if ".." in t:
            lo, rest = t.split("..", 1)
            hi, _, step = rest.partition(":")
            vals = list(range(int(lo), int(hi) + 1, int(step or 1)))
        else:
            vals = [int(x) for x in t.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad integer range {text!r}") from None
    if not vals:
        raise UsageError(f"empty range {text!r}")
    return vals


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])


def write_manifest(path: Path, command: str, argv, params: dict) -> None:
    lines = [
        f"command={command}",
        f"argv={json.dumps(list(argv))}",
        f"version={__version__}",
        f"numpy={np.__version__}",
        f"python={platform.python_version()}",
        f"timestamp={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}",
    ]
    lines += [f"{k}={fmt(v)}" for k, v in params.items()]
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def _sim_config(args, policy) -> SimConfig:
    return SimConfig(
        horizon=args.horizon,
        warmup=args.warmup,
        seed=args.seed,
        replications=args.replications,
        pmf_cap=args.pmf_cap or default_pmf_cap(policy),
        threads=args.threads,
    )


def cmd_solve(args, argv):
    cfg = ProtocolConfig(args.n, parse_p(args.p, args.n), args.delta)
    sol = solve_success_probability(cfg, args.tol)
    aoi = average_aoi_adra(cfg, sol)
    print(f"n={cfg.n_devices}")
    print(f"p={fmt(cfg.cap)}")
    print(f"delta={cfg.threshold}")
    print(f"q={sol.q:.12g}")
    print(f"eta={sol.eta:.12g}")
    print(f"avg_aoi={aoi.average_aoi:.12g}")
    print(f"iterations={sol.iterations}")
    print(f"residual={sol.residual:.3g}")
    print(f"regime_warning={fmt(sol.regime_warning)}")
    return EXIT_OK


def _policy_from_args(args):
    if args.policy == "general":
        if not args.table:
            raise UsageError("--table is required for --policy general")
        try:
            table = [float(x) for x in args.table.split(",")]
        except ValueError:
            raise UsageError(f"bad --table {args.table!r}") from None
        return CapPolicy.general(table), None
    if args.p is None:
        raise UsageError("--p is required")
    p = parse_p(args.p, args.n)
    if args.policy == "aira":
        return CapPolicy.aira(p), (ProtocolConfig(args.n, p, 1) if args.n >= 2 else None)
    return CapPolicy.adra(args.delta, p), (ProtocolConfig(args.n, p, args.delta) if args.n >= 2 else None)


def cmd_simulate(args, argv):
    policy, cfg = _policy_from_args(args)
    sim = _sim_config(args, policy)
    rep = run(args.n, policy, sim)

    cap = rep.pmf_cap
    analytic = None
    sol = None
    if cfg is not None:
        try:
            sol = solve_success_probability(cfg)
        except NoSignChangeError as exc:
            log.warning("no analytic overlay: %s", exc)
        if sol is not None and sol.q > 0:
            dist = stationary_distribution(cfg, sol)
            analytic = np.append(dist.pmf(np.arange(1, cap + 1)), dist.tail_mass(cap))
    empirical = np.append(rep.empirical_pmf[1:], rep.overflow_mass)
    tv = 0.5 * float(np.abs(empirical - analytic).sum()) if analytic is not None else None

    out = _out_dir(args)
    pmf_rows = [{"age": a, "analytic_pmf": None if analytic is None else analytic[a - 1],
                 "empirical_pmf": empirical[a - 1]} for a in range(1, cap + 1)]
    pmf_rows.append({"age": "overflow", "analytic_pmf": None if analytic is None else analytic[-1],
                     "empirical_pmf": empirical[-1]})
    summary = {
        "n": args.n, "policy": policy.kind,
        "p": None if policy.kind == "general" else policy.cap,
        "delta": policy.threshold if policy.kind != "general" else None,
        "horizon": sim.horizon, "warmup": sim.warmup, "replications": sim.replications,
        "seed": sim.seed, "network_avg_aoi": rep.network_avg_aoi,
        "avg_aoi_stderr": rep.avg_aoi_stderr,
        "analytic_avg_aoi": average_aoi_adra(cfg, sol).average_aoi if sol is not None and sol.q > 0 else None,
        "success_rate": rep.success_rate, "collision_rate": rep.collision_rate,
        "idle_rate": rep.idle_rate, "empirical_q": rep.conditional_success_rate,
        "empirical_q_stderr": rep.conditional_success_stderr,
        "analytic_q": sol.q if sol is not None else None,
        "overflow_mass": rep.overflow_mass, "tv_distance": tv,
    }
    try:
        write_csv(out / f"{args.prefix}_pmf.csv", PMF_COLUMNS, pmf_rows)
        write_csv(out / f"{args.prefix}_summary.csv", SUMMARY_COLUMNS, [summary])
        write_manifest(out / f"{args.prefix}_manifest.txt", "simulate", argv,
                       {**{k: summary[k] for k in ("n", "policy", "p", "delta", "horizon",
                                                    "warmup", "replications", "seed")},
                        "pmf_cap": cap, "table": args.table})
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"network_avg_aoi={rep.network_avg_aoi:.6g} stderr={rep.avg_aoi_stderr:.3g} "
          f"empirical_q={rep.conditional_success_rate:.6g}")
    print(f"wrote {out / (args.prefix + '_pmf.csv')} and {out / (args.prefix + '_summary.csv')}")
    return EXIT_OK


def cmd_sweep_delta(args, argv):
    p = parse_p(args.p, args.n)
    deltas = parse_int_range(args.delta)
    sim = _sim_config(args, CapPolicy.adra(max(deltas), p)) if args.simulate else None
    rows = sweep_delta(args.n, p, deltas, simulate=sim)
    out = _out_dir(args)
    try:
        write_csv(out / f"{args.prefix}.csv", SWEEP_COLUMNS, [vars(r) for r in rows])
        params = {"n": args.n, "p": p, "delta": args.delta, "simulate": bool(args.simulate)}
        if sim is not None:
            params.update(horizon=sim.horizon, warmup=sim.warmup,
                          replications=sim.replications, seed=sim.seed)
        write_manifest(out / f"{args.prefix}_manifest.txt", "sweep-delta", argv, params)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    best = min(rows, key=lambda r: (r.analytic_avg_aoi, r.delta))
    print(f"best_delta={best.delta} avg_aoi={best.analytic_avg_aoi:.6g}")
    print(f"wrote {out / (args.prefix + '.csv')}")
    return EXIT_OK


def _space(args, n):
    p_max = None if args.p_max is None else parse_p(args.p_max, n)
    return SearchSpace.default(n, n_p=args.n_p, delta_max=args.delta_max, p_max=p_max)


def cmd_optimize(args, argv):
    rep = optimize(args.n, _space(args, args.n), keep_surface=args.surface)
    out = _out_dir(args)
    row = {"n": args.n, "best_p": rep.best_p, "best_delta": rep.best_delta, "best_q": rep.best_q,
           "best_avg_aoi": rep.best_avg_aoi, "regime_warning": rep.regime_warning,
           "failed_points": len(rep.failures)}
    try:
        write_csv(out / f"{args.prefix}.csv", OPTIMUM_COLUMNS, [row])
        if args.surface:
            write_csv(out / f"{args.prefix}_surface.csv", SURFACE_COLUMNS,
                      [{"p": p, "delta": int(d), "avg_aoi": v} for p, d, v in rep.full_surface])
        write_manifest(out / f"{args.prefix}_manifest.txt", "optimize", argv,
                       {"n": args.n, "n_p": args.n_p, "delta_max": args.delta_max, "p_max": args.p_max})
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"best_p={rep.best_p:.6g} best_delta={rep.best_delta} avg_aoi={rep.best_avg_aoi:.6g}")
    return EXIT_OK


def cmd_compare(args, argv):
    rows = []
    for n in parse_int_range(args.n):
        if n < 2:
            raise UsageError("compare needs n >= 2")
        aira = average_aoi_aira(n, 1.0 / n).average_aoi
        rep = optimize(n, _space(args, n))
        rows.append({"n": n, "aira_p": 1.0 / n, "aira_avg_aoi": aira, "adra_p": rep.best_p,
                     "adra_delta": rep.best_delta, "adra_q": rep.best_q,
                     "adra_avg_aoi": rep.best_avg_aoi, "gap": aira - rep.best_avg_aoi,
                     "regime_warning": rep.regime_warning or n < 3})
    out = _out_dir(args)
    try:
        write_csv(out / f"{args.prefix}.csv", COMPARE_COLUMNS, rows)
        write_manifest(out / f"{args.prefix}_manifest.txt", "compare", argv,
                       {"n": args.n, "n_p": args.n_p, "delta_max": args.delta_max, "p_max": args.p_max})
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in rows:
        print(f"n={r['n']} aira={r['aira_avg_aoi']:.6g} adra={r['adra_avg_aoi']:.6g} gap={r['gap']:.6g}")
    return EXIT_OK


def cmd_replay(args, argv):
    try:
        man = read_manifest(args.manifest)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if "argv" not in man:
        raise UsageError(f"{args.manifest} has no argv entry")
    return main(json.loads(man["argv"]))


def _add_output(sp, prefix):
    sp.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or cwd)")
    sp.add_argument("--prefix", default=prefix, help="file name prefix")


def _add_sim(sp):
    sp.add_argument("--horizon", type=int, default=1_000_000, help="slots per replication, warmup included")
    sp.add_argument("--warmup", type=int, default=10_000, help="leading slots left out of the statistics")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replications", type=int, default=1)
    sp.add_argument("--pmf-cap", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)


def _add_grid(sp):
    sp.add_argument("--n-p", type=int, default=200, help="number of p grid points")
    sp.add_argument("--delta-max", type=int, default=None, help="largest threshold (default 5N)")
    sp.add_argument("--p-max", default=None, help="largest p, e.g. 3/N (default 2/N)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adra", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="fixed point q and average AoI")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", required=True, help="access probability, e.g. 0.1 or 1.5/N")
    sp.add_argument("--delta", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", help="Monte Carlo run with pmf overlay")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--policy", choices=("adra", "aira", "general"), default="adra")
    sp.add_argument("--p", help="access probability, e.g. 0.04 or 2/N")
    sp.add_argument("--delta", type=int, default=1)
    sp.add_argument("--table", help="comma separated access probabilities by age (general policy)")
    _add_sim(sp)
    _add_output(sp, "simulate")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep-delta", help="average AoI versus threshold")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", required=True)
    sp.add_argument("--delta", default=None, help="range such as 1..100 (default 1..5N)")
    sp.add_argument("--simulate", action="store_true")
    _add_sim(sp)
    _add_output(sp, "sweep_delta")
    sp.set_defaults(func=cmd_sweep_delta)

    sp = sub.add_parser("optimize", help="grid search over (p, delta)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--surface", action="store_true", help="also write the full surface")
    _add_grid(sp)
    _add_output(sp, "optimize")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("compare", help="optimised ADRA against AIRA at p=1/N")
    sp.add_argument("--n", default="10,20,50,100", help="list or range of network sizes")
    _add_grid(sp)
    _add_output(sp, "compare")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    sp.add_argument("manifest")
    sp.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ARGS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "command", None) == "sweep-delta" and args.delta is None:
        args.delta = f"1..{5 * args.n}"
    try:
        return args.func(args, argv)
    except NoSignChangeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (UsageError, ValueError, TypeError) as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
