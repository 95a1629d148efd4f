"""Command-line harness: single trials, paired comparisons, scenario tooling."""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from dataclasses import replace

from .engine import run_trial
from .join_scored import ScoreWeights
from .metrics import (AggregateReport, Improvement, aggregate, compare,
                      delay_stats, is_saturated_branch, pdr)
from .scenario import (GenerationError, Scenario, ScenarioError,
                       gen_random_scenario, load_scenario, training11,
                       write_scenario)

CSV_COLUMNS = ("trial", "algo", "seed", "joined", "parent_id", "hops",
               "mu_d_ms", "sigma_d_ms", "pdr", "sat_branch", "eligible_sat",
               "avoided_sat")

WEIGHT_NAMES = ("w_m", "w_h", "w_b", "w_ci", "w_rl", "w_rn")


def _load(ref: str) -> Scenario:
    if ref == "training11":
        return training11()
    return load_scenario(ref)


def parse_weight_vector(text: str) -> dict:
    parts = text.split(",")
    if len(parts) != 6:
        raise ScenarioError(
            "weights: expected 6 comma-separated values (w_m,w_h,w_b,w_ci,w_rl,w_rn)")
    try:
        values = [float(p) for p in parts]
    except ValueError as e:
        raise ScenarioError(f"weights: {e}") from e
    return dict(zip(WEIGHT_NAMES, values))


def parse_weights_grid(spec: str) -> list[dict]:
    axes = []
    for part in spec.split(";"):
        name, sep, vals = part.partition("=")
        name = name.strip()
        if not sep or name not in WEIGHT_NAMES:
            raise ScenarioError(f"weights-grid: bad axis {part!r}")
        try:
            axes.append((name, [float(v) for v in vals.split(",")]))
        except ValueError as e:
            raise ScenarioError(f"weights-grid: {e}") from e
    return [dict(zip([n for n, _ in axes], combo))
            for combo in itertools.product(*[v for _, v in axes])]


def trial_row(index: int, trial) -> dict:
    ds = delay_stats(trial) if trial.joined else None
    p = pdr(trial) if trial.joined else None
    sat = is_saturated_branch(trial) if trial.joined else None
    return {
        "trial": index,
        "algo": trial.algo,
        "seed": trial.trial_seed,
        "joined": int(trial.joined),
        "parent_id": "" if trial.chosen_parent is None else trial.chosen_parent,
        "hops": "" if trial.hops_at_join is None else trial.hops_at_join,
        "mu_d_ms": "" if ds is None else ds[0],
        "sigma_d_ms": "" if ds is None else ds[1],
        "pdr": "" if p is None else p,
        "sat_branch": "" if sat is None else int(sat),
        "eligible_sat": int(trial.eligible_sat),
        "avoided_sat": int(trial.avoided_sat),
    }


def write_rows(rows: list[dict], path: str) -> None:
    rows = sorted(rows, key=lambda r: (r["trial"], r["algo"]))
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def cmd_compare(scenario: Scenario | None = None, random_nodes: int | None = None,
                trials: int = 1, seed_base: int = 0, area_m: float = 30.0,
                weights: dict | None = None, out: str | None = None,
                ) -> tuple[AggregateReport, AggregateReport, Improvement, list[dict]]:
    """Paired comparison: trial i runs both algorithms on the same scenario
    and seed (seed_base + i); random mode draws a fresh layout per trial."""
    if trials < 1:
        raise ScenarioError("trials must be >= 1")
    if (scenario is None) == (random_nodes is None):
        raise ScenarioError("exactly one of scenario / random_nodes is required")
    base_trials, prop_trials, rows = [], [], []
    for i in range(trials):
        seed = seed_base + i
        if random_nodes is not None:
            s = gen_random_scenario(n_nodes=random_nodes, seed=seed, area_m=area_m)
        else:
            s = scenario
        if weights:
            s = replace(s, weights=replace(s.weights, **weights))
        theta = s.thresholds.theta_sat
        for algo, bucket in (("baseline", base_trials), ("scored", prop_trials)):
            t = run_trial(s, algo, seed)
            bucket.append((t, theta))
            rows.append(trial_row(i, t))
    theta = base_trials[0][1]
    base_report = aggregate([t for t, _ in base_trials], theta)
    prop_report = aggregate([t for t, _ in prop_trials], theta)
    improvement = compare(base_report, prop_report)
    if out:
        write_rows(rows, out)
    return base_report, prop_report, improvement, rows


def format_summary(base: AggregateReport, prop: AggregateReport,
                   imp: Improvement) -> str:
    def fmt(r: AggregateReport) -> str:
        mu_d = "-" if r.mu_d_ms is None else f"{r.mu_d_ms:.1f}"
        sd = "-" if r.sigma_d_ms is None else f"{r.sigma_d_ms:.1f}"
        avoid = "-" if r.avoid_sat is None else f"{100 * r.avoid_sat:.0f}%"
        return (f"{r.algo:<10}{mu_d:>9}{sd:>10}"
                f"{r.mu_pdr:>8.2f}{r.sigma_pdr:>11.3f}"
                f"{100 * r.pct_sat:>6.0f}%{avoid:>11}{r.mean_hops:>8.1f}"
                f"{r.n_joined:>8}/{r.n_trials}")
    lines = [
        f"{'':<10}{'mu_d':>9}{'sigma_d':>10}{'mu_PDR':>8}{'sigma_PDR':>11}"
        f"{'%Sat':>7}{'avoid_Sat':>11}{'N_hops':>8}{'joined':>10}",
        fmt(prop),
        fmt(base),
        (f"delay_gain {100 * imp.delay_gain:.1f}%   "
         f"pdr_gain {100 * imp.pdr_gain:.1f}%   "
         f"sat_reduction {imp.sat_reduction_pp:.1f} pp"),
    ]
    return "\n".join(lines)


def _cmd_run(args) -> int:
    s = _load(args.scenario)
    if args.weights:
        s = replace(s, weights=replace(s.weights, **parse_weight_vector(args.weights)))
    t = run_trial(s, args.algo, args.seed)
    row = trial_row(0, t)
    if t.joined:
        print(f"joined parent={t.chosen_parent} hops={t.hops_at_join} "
              f"join_time={t.join_time_ms:.0f}ms")
        print(f"mu_d={row['mu_d_ms'] or float('nan'):.1f}ms "
              f"sigma_d={row['sigma_d_ms'] or 0:.1f}ms pdr={row['pdr']:.3f} "
              f"sat_branch={row['sat_branch']}")
    else:
        print("join failed: no usable neighbor before the wait budget expired")
    if args.out:
        write_rows([row], args.out)
    return 0


def _cmd_compare(args) -> int:
    scenario = _load(args.scenario) if args.scenario else None
    weights = parse_weight_vector(args.weights) if args.weights else None
    base, prop, imp, _ = cmd_compare(
        scenario=scenario,
        random_nodes=args.nodes if args.random else None,
        trials=args.trials, seed_base=args.seed_base, area_m=args.area,
        weights=weights, out=args.out)
    print(format_summary(base, prop, imp))
    return 0


def _cmd_gen(args) -> int:
    s = gen_random_scenario(n_nodes=args.nodes, seed=args.seed, area_m=args.area)
    write_scenario(s, args.out)
    print(f"wrote {args.out}: {len(s.nodes)} nodes, sink {s.sink_id}, "
          f"new node {s.new_node_id}")
    return 0


def _cmd_sweep(args) -> int:
    if not args.random:
        raise ScenarioError("sweep: only --random is supported")
    grid = parse_weights_grid(args.weights_grid)
    results = []
    for vector in grid:
        prop_trials = []
        for i in range(args.trials):
            seed = args.seed_base + i
            s = gen_random_scenario(n_nodes=args.nodes, seed=seed, area_m=args.area)
            s = replace(s, weights=replace(s.weights, **vector))
            prop_trials.append(run_trial(s, "scored", seed))
        report = aggregate(prop_trials)
        results.append((vector, report))
        label = ",".join(f"{k}={v:g}" for k, v in vector.items())
        mu_d = "-" if report.mu_d_ms is None else f"{report.mu_d_ms:.1f}"
        print(f"{label:<48} mu_d={mu_d}ms mu_pdr={report.mu_pdr:.3f} "
              f"pct_sat={100 * report.pct_sat:.0f}%")
    if args.out:
        with open(args.out, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(list(WEIGHT_NAMES) + ["mu_d_ms", "mu_pdr", "pct_sat"])
            defaults = ScoreWeights()
            for vector, report in results:
                full = {**{n: getattr(defaults, n) for n in WEIGHT_NAMES}, **vector}
                writer.writerow([full[n] for n in WEIGHT_NAMES]
                                + [report.mu_d_ms, report.mu_pdr, report.pct_sat])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatterjoin",
        description="Deterministic BLE-mesh scatternet joining simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one trial on a scenario")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON path, or the built-in 'training11'")
    p.add_argument("--algo", required=True, choices=("baseline", "scored"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="write the per-trial CSV row here")
    p.add_argument("--weights", help="w_m,w_h,w_b,w_ci,w_rl,w_rn override")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="paired baseline-vs-scored comparison")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scenario", help="scenario JSON path or 'training11'")
    g.add_argument("--random", action="store_true",
                   help="fresh random layout per trial")
    p.add_argument("--nodes", type=int, default=16)
    p.add_argument("--area", type=float, default=30.0)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--out", help="write per-trial CSV rows here")
    p.add_argument("--weights", help="w_m,w_h,w_b,w_ci,w_rl,w_rn override")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("gen", help="generate a random scenario file")
    p.add_argument("--nodes", type=int, default=16)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--area", type=float, default=30.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("sweep", help="grid sweep over scoring weights")
    p.add_argument("--random", action="store_true", required=True)
    p.add_argument("--nodes", type=int, default=16)
    p.add_argument("--area", type=float, default=30.0)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--weights-grid", required=True,
                   help="e.g. 'w_b=0.1,0.25,0.4;w_ci=0.1,0.2'")
    p.add_argument("--out", help="write one CSV row per weight vector")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as e:
        print(f"error at scenario stage: {e}", file=sys.stderr)
        return 1
    except GenerationError as e:
        print(f"error at generation stage: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error at io stage: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
