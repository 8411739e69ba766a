"""Command-line interface.

Subcommands:
  solve        one scenario run per seed, from a JSON config
  sweep        sweep runs (tau / distance / antennas), optionally parallel
  table1       the fixed tau=0.5 benchmark-channel run (budgets vs powers)
  convergence  alternating-optimization traces for the two documented
               initializations on the benchmark channel

Exit codes: 0 success, 2 config error, 3 every point failed.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from .balancing import balancing_budgets
from .channel import paper_fixture
from .errors import ConvergenceError, InfeasibleError
from .experiments import (
    ConfigError,
    ExperimentReport,
    PointRecord,
    config_from_dict,
    emit_report,
    load_config,
    run_scenario,
    run_sweep,
)
from .joint import alternating_optimize
from .system import SystemParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_FAILED = 3

FIXTURE_SYSTEM = SystemParams(power_budget=1.0, noise_power=1e-8, harvest_efficiency=0.5)


def _add_common(sub):
    sub.add_argument("--out", default=None, help="output path prefix (no extension)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=None, help="override the config seeds")
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wpcn",
        description="Max-min throughput experiments for wireless-powered networks",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="run the configured scenario once per seed")
    solve.add_argument("--config", required=True)
    _add_common(solve)

    sweep = subs.add_parser("sweep", help="run the configured sweep")
    sweep.add_argument("--config", required=True)
    _add_common(sweep)

    table1 = subs.add_parser("table1", help="fixed tau=0.5 run on the benchmark channel")
    table1.add_argument("--convention", choices=("power", "energy"), default="power")
    _add_common(table1)

    conv = subs.add_parser("convergence", help="iteration traces on the benchmark channel")
    conv.add_argument("--tau", type=float, default=0.5)
    _add_common(conv)
    return parser


def _finish(report, out, fmt, num_users, plot_fn=None, no_plot=False):
    files = emit_report(report, out, fmt=fmt, num_users=num_users)
    if plot_fn is not None and not no_plot:
        try:
            files.append(plot_fn(f"{out}.png"))
        except Exception as exc:  # figures are best-effort companions
            print(f"warning: figure rendering failed: {exc}", file=sys.stderr)
    for f in files:
        print(f"wrote {f}")
    for err in report.errors:
        print(f"point failed: {err['scenario_id']} seed={err['seed']}: {err['error']}",
              file=sys.stderr)
    if report.records:
        return EXIT_OK
    return EXIT_ALL_FAILED if report.errors else EXIT_OK


def _cmd_solve(args, sweeping):
    try:
        cfg = load_config(args.config)
        if sweeping and cfg.sweep is None:
            raise ConfigError("sweep", "the sweep subcommand needs a sweep section")
        if not sweeping and cfg.sweep is not None:
            raise ConfigError("sweep", "use the sweep subcommand for sweep configs")
        if args.seed is not None:
            cfg = replace(cfg, seeds=(args.seed,))
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = run_sweep(cfg, workers=args.workers) if sweeping else run_scenario(cfg)
    out = args.out or cfg.output_path or "report"
    plot_fn = None
    if sweeping:
        from .figures import plot_sweep

        plot_fn = lambda path: plot_sweep(report, path)
    return _finish(report, out, args.format, cfg.num_users, plot_fn, args.no_plot)


def _cmd_table1(args):
    ch = paper_fixture()
    prm = FIXTURE_SYSTEM
    tau = 0.5
    try:
        alt = alternating_optimize(tau, ch, prm, convention=args.convention)
    except (ConvergenceError, InfeasibleError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    ul = alt.uplink
    budgets = balancing_budgets(alt.downlink.S, ch, prm, tau, args.convention)
    p = ul.p
    if args.convention == "energy":  # report transmit powers either way
        budgets = budgets / (1.0 - tau)
        p = p / (1.0 - tau)

    print(f"benchmark channel, tau=0.5, convention={args.convention}")
    print(f"balanced SINR {ul.gamma:.4f}, binding user {ul.k_star + 1}")
    print(f"{'user':>4} {'budget (mW)':>14} {'power (mW)':>14} {'tight':>6}")
    for k in range(ch.num_users):
        tight = "yes" if abs(p[k] - budgets[k]) <= 1e-6 * budgets[k] else "no"
        print(f"{k + 1:>4} {budgets[k] * 1e3:>14.4f} {p[k] * 1e3:>14.4f} {tight:>6}")

    record = PointRecord(
        scenario_id="fixture:table1",
        method="optimal",
        num_antennas=ch.num_antennas,
        num_users=ch.num_users,
        tau=tau,
        rate_bps_hz=float((1.0 - tau) * np.log2(1.0 + ul.gamma)),
        gamma=float(ul.gamma),
        k_star=int(ul.k_star),
        p=tuple(float(x) for x in p),
        budgets=tuple(float(x) for x in budgets),
        iters=len(alt.rho_trace) - 1,
        runtime_ms=0.0,
        seed=0,
    )
    report = ExperimentReport(records=[record], metadata={"command": "table1"})
    return _finish(report, args.out or "table1", args.format, ch.num_users,
                   None, args.no_plot)


def _cmd_convergence(args):
    ch = paper_fixture()
    prm = FIXTURE_SYSTEM
    inits = {
        "uniform": np.ones(ch.num_users),
        "near-far": None,  # default 1/(||h||^2 ||g||^2)
    }
    traces = {}
    for label, weights in inits.items():
        try:
            alt = alternating_optimize(args.tau, ch, prm, init_weights=weights)
        except (ConvergenceError, InfeasibleError) as exc:
            print(f"solver failed for init {label}: {exc}", file=sys.stderr)
            return EXIT_ALL_FAILED
        traces[label] = list(alt.rho_trace)
        gamma = 1.0 / alt.rho_trace[-1]
        print(f"init {label:>8}: iterations={len(alt.rho_trace) - 1} "
              f"final SINR={gamma:.6f}")

    out = args.out or "convergence"
    path = f"{out}.csv"
    with open(path, "w") as fh:
        fh.write("init,iteration,rho\n")
        for label, trace in traces.items():
            for i, rho in enumerate(trace, start=1):
                fh.write(f"{label},{i},{format(rho, '.12g')}\n")
    print(f"wrote {path}")
    if not args.no_plot:
        from .figures import plot_convergence

        print(f"wrote {plot_convergence(traces, f'{out}.png')}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args, sweeping=False)
    if args.command == "sweep":
        return _cmd_solve(args, sweeping=True)
    if args.command == "table1":
        return _cmd_table1(args)
    return _cmd_convergence(args)


if __name__ == "__main__":
    sys.exit(main())
