"""Sample runs of the expected-steps strategy on a benchmark grid and write belief traces.

One CSV per seed (step, state, action, belief size, ...) plus a summary CSV with
steps-to-goal per seed, ready for external plotting.

    python3 scripts/export_traces.py --config c --seeds 20 --out traces/
"""
import argparse
import csv
from pathlib import Path

from deceptra.gridworld import BOOLEAN, PRECISE, benchmark_scenario
from deceptra.planner import ssp_refine, synthesize_full
from deceptra.sim import REACHED, export_trace_csv, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", choices="abc", default="c")
    ap.add_argument("--sensor", choices=[BOOLEAN, PRECISE], default=BOOLEAN)
    ap.add_argument("--visible", action="store_true")
    ap.add_argument("--p", type=float, default=0.8)
    ap.add_argument("--start", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--seed0", type=int, default=0)
    ap.add_argument("--max-steps", type=int, default=10_000)
    ap.add_argument("--any-action", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("traces"))
    args = ap.parse_args()

    sc = benchmark_scenario(args.config, args.sensor, args.visible, args.p, start=args.start)
    syn = synthesize_full(sc.mdp, sc.observation, sc.user, sc.attacker, belief_kind="singleton",
                          any_action=args.any_action)
    if not syn.strategy.choice:
        raise SystemExit(f"{sc.name}: start cell {args.start} is losing, nothing to simulate")
    strat = ssp_refine(syn.strategy)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / f"{sc.name}-summary.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["seed", "status", "steps", "first_out_of_belief"])
        for seed in range(args.seed0, args.seed0 + args.seeds):
            t = simulate(syn.aug, strat, seed, args.max_steps, use_ssp=True)
            (args.out / f"{sc.name}-{seed}.csv").write_text(export_trace_csv(t))
            first = next((s.step for s in t.steps if not s.in_belief), "")
            w.writerow([seed, t.status, len(t) - 1 if t.status == REACHED else "", first])
    print(f"wrote {args.seeds} traces to {args.out}")


if __name__ == "__main__":
    main()
