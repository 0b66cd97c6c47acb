"""Stress the synthesis pipeline on random models against the brute-force oracles.

For each random model: ASW region vs. brute force, augmented graph vs. the
definition-level construction, and the sampled non-revealing check in both modes.

    python3 scripts/check_random.py --models 500
"""
import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from deceptra.asw import asw  # noqa: E402
from deceptra.belief import INVISIBLE, VISIBLE  # noqa: E402
from deceptra.mdp import ids_of  # noqa: E402
from deceptra.planner import synthesize_full  # noqa: E402
from deceptra.sim import check_non_revealing  # noqa: E402
from oracles import brute_force_asw, naive_augmented, random_model  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, default=200)
    ap.add_argument("--max-states", type=int, default=8)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    bad = 0
    for k in range(args.models):
        m, obs, user, att = random_model(rng, rng.randint(1, args.max_states), rng.randint(1, 3))
        if set(asw(m, user).region) != brute_force_asw(m, user):
            print(f"model {k}: ASW region disagrees with brute force")
            bad += 1
        for mode in (VISIBLE, INVISIBLE):
            o = obs.with_visibility(mode == VISIBLE)
            syn = synthesize_full(m, o, user, att, mode)
            am = syn.aug
            roots = [(s, frozenset(ids_of(b))) for s, b in (am.index[r] for r in am.initials)]
            states = naive_augmented(m, o, syn.allowed0, att, mode, roots)[0]
            if {(s, frozenset(ids_of(b))) for s, b in am.index} != states:
                print(f"model {k} {mode}: augmented states disagree with the definition")
                bad += 1
            if syn.strategy.choice:
                rep = check_non_revealing(am, syn.strategy, o, syn.allowed0, args.runs, 10, seed=k)
                if not rep.ok:
                    print(f"model {k} {mode}: {rep.counterexamples[0]}")
                    bad += 1
    print(f"{args.models} models, {bad} problems")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
