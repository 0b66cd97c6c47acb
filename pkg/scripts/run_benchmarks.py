"""Benchmark table for the five sensor configurations, plus the expected-steps comparison.

Runs the default semantics and, with --variant, the invisible-mode variant in
which a belief state may be propagated through any enabled action.

    python3 scripts/run_benchmarks.py --out results/
"""
import argparse
import json
import math
from pathlib import Path

from deceptra.experiments import fallback_checks, mean_steps, row_diff, rows_markdown, run_benchmarks


def steps_table(any_action, n_seeds, p):
    rows = []
    for c in "abc":
        r = mean_steps(c, p=p, n_seeds=n_seeds, any_action=any_action)
        rows.append(r)
        mean = f"{r['mean_steps']:.2f}" if math.isfinite(r["mean_steps"]) else "losing"
        print(f"  {r['scenario']:<10} start={r['start']}  mean={mean:>8}  "
              f"reached={r['reached']}/{r['runs']}  out-of-belief runs={r['out_of_belief_runs']}")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=0.8)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--variant", action="store_true", help="also run the any-action invisible variant")
    ap.add_argument("--out", type=Path, help="directory for markdown and JSON output")
    args = ap.parse_args()

    variants = [("default", False)] + ([("any-action", True)] if args.variant else [])
    dump = {}
    for label, any_action in variants:
        reps = run_benchmarks(p=args.p, any_action=any_action)
        print(f"== {label} ==")
        print(rows_markdown(reps))
        print("fallback relations:", json.dumps(fallback_checks(reps)))
        print("mean steps to goal (expected-steps strategy):")
        steps = steps_table(any_action, args.seeds, args.p)
        dump[label] = {"rows": [json.loads(r.to_json()) | {"diff": row_diff(r)} for r in reps],
                       "steps": [{k: (None if v == math.inf else v) for k, v in s.items()} for s in steps]}
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"table-{label}.md").write_text(rows_markdown(reps))
    if args.out:
        (args.out / "benchmarks.json").write_text(json.dumps(dump, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
