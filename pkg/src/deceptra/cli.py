"""Command-line entry point: ``deceptra <subcommand> ...``.

Every subcommand exits 0 exactly when it found no violations, counterexamples
or diffs. ``DECEPTRA_SEED`` overrides the default seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .asw import asw
from .belief import INVISIBLE, VISIBLE, export_dot, mdp_to_dot
from .experiments import (EXPECTED_ROWS, bundled, config_hash, fallback_checks, replicate_graphs,
                          run_benchmarks, row_diff, rows_markdown)
from .gridworld import BOOLEAN, PRECISE, GridSpec, build_scenario, load_scenario, sensor_config, scenario_tag
from .mdp import Model, ModelError, dump_model, load_model, model_from_dict, model_to_dict, validate
from .planner import FiniteMemoryStrategy, ssp_refine, synthesize_full
from .sim import check_non_revealing, cross_mode_replay, export_trace_csv, simulate

log = logging.getLogger("deceptra")
DEFAULT_SEED = 0


def default_seed() -> int:
    env = os.environ.get("DECEPTRA_SEED")
    return int(env) if env else DEFAULT_SEED


def _emit(obj, out=None):
    line = json.dumps(obj, sort_keys=True)
    if out:
        with open(out, "a") as f:
            f.write(line + "\n")
    print(line)


def _model(path):
    return load_model(path or bundled("illustrative.json"))


def _objectives(model, args):
    try:
        return model.objectives[args.user], model.objectives[args.attacker]
    except KeyError as e:
        raise ModelError(f"model has no objective named {e.args[0]!r}") from None


def _obs(model, mode):
    if model.observation is None:
        raise ModelError("model has no observation partition")
    if mode is None:
        return model.observation
    return model.observation.with_visibility(mode == VISIBLE)


def _belief_kind(model, args):
    return args.initial_belief or model.meta.get("initial_belief", "obs-class")


def _synth(model, args):
    user, att = _objectives(model, args)
    obs = _obs(model, args.mode)
    return obs, synthesize_full(model.mdp, obs, user, att, belief_kind=_belief_kind(model, args),
                                any_action=args.invisible_any_action)


# -- subcommands -----------------------------------------------------------------

def cmd_validate(args) -> int:
    model = _model(args.model)
    errs = validate(model.mdp, model.observation, model.objectives.values())
    for e in errs:
        print(e)
    if not errs:
        print(f"ok: {model.mdp.n_states} states, {len(model.mdp.actions)} actions")
    return 1 if errs else 0


def cmd_asw(args) -> int:
    model = _model(args.model)
    m = model.mdp
    res = asw(m, model.objectives[args.objective])
    out = {
        "objective": args.objective,
        "region": m.names(res.region),
        "levels": [m.names(x) for x in res.levels],
        "allowed": {m.states[s]: [m.actions[a] for a in sorted(v)] for s, v in sorted(res.allowed.items())},
        "prog": {m.states[s]: [m.actions[a] for a in sorted(v)] for s, v in sorted(res.prog.items())},
    }
    if args.dot:
        Path(args.dot).write_text(mdp_to_dot(m, res.region, args.objective))
    print(json.dumps(out, indent=1))
    return 0


def cmd_build_aug(args) -> int:
    model = _model(args.model)
    obs, syn = _synth(model, args)
    am = syn.aug
    A = am.mdp
    out = {
        "mode": am.mode,
        "states": list(A.states),
        "edges": sorted({(A.states[i], A.actions[a], A.states[t])
                         for (i, a), row in A.trans.items() for t, _ in row}),
        "asw": sorted(A.states[i] for i in syn.aug_asw.region),
    }
    if args.dot:
        Path(args.dot).write_text(export_dot(am, syn.aug_asw.region))
    if args.json:
        aug_model = Model(A, {"attacker": am.objective}, None, {"mode": am.mode})
        Path(args.json).write_text(json.dumps(model_to_dict(aug_model), indent=1) + "\n")
    print(json.dumps(out, indent=1))
    return 0


def cmd_synthesize(args) -> int:
    model = _model(args.model)
    obs, syn = _synth(model, args)
    strat = syn.strategy
    if strat.choice and not args.no_ssp:
        strat = ssp_refine(strat)
    rep = {
        "scenario": model.meta.get("id", Path(args.model).stem if args.model else "illustrative"),
        "mode": syn.aug.mode,
        "aug_size": syn.report.aug_size,
        "asw_size": syn.report.asw_size,
        "winning": bool(strat.choice),
        "version": __version__,
        "config_hash": config_hash({"model": model_to_dict(model), "mode": syn.aug.mode,
                                    "belief": _belief_kind(model, args),
                                    "any_action": args.invisible_any_action}),
    }
    if args.timing:
        rep["seconds"] = round(syn.report.seconds, 4)
    _emit(rep, args.report)
    if args.strategy:
        doc = {
            "version": __version__,
            "mode": syn.aug.mode,
            "initial_belief": _belief_kind(model, args),
            "invisible_any_action": args.invisible_any_action,
            "model": model_to_dict(model),
            "states": strat.to_dict(),
        }
        Path(args.strategy).write_text(json.dumps(doc, indent=1) + "\n")
    if args.dot:
        Path(args.dot).write_text(export_dot(syn.aug, syn.aug_asw.region))
    return 0 if strat.choice else 1


def load_strategy(path):
    """Rebuild the augmented MDP of a strategy file and attach its action choices."""
    doc = json.loads(Path(path).read_text())
    model = model_from_dict(doc["model"])
    m = model.mdp
    obs = model.observation.with_visibility(doc["mode"] == VISIBLE)
    syn = synthesize_full(m, obs, model.objectives["user"], model.objectives["attacker"],
                          belief_kind=doc.get("initial_belief", "obs-class"),
                          any_action=doc.get("invisible_any_action", False))
    names = {n: i for i, n in enumerate(syn.aug.mdp.states)}
    choice, ssp, value = {}, {}, {}
    for name, entry in doc["states"].items():
        if name not in names:
            raise ModelError(f"strategy state {name!r} is not reachable in the rebuilt model")
        i = names[name]
        choice[i] = frozenset(m.action_id(a) for a in entry["actions"])
        if "ssp_action" in entry:
            ssp[i] = m.action_id(entry["ssp_action"])
            value[i] = entry["value"]
    strat = FiniteMemoryStrategy(doc["mode"], syn.aug, choice, ssp, value)
    return model, obs, syn, strat


def cmd_simulate(args) -> int:
    model, obs, syn, strat = load_strategy(args.strategy)
    seed = default_seed() if args.seed is None else args.seed
    bad = 0
    for k in range(args.runs):
        t = simulate(syn.aug, strat, seed + k, args.max_steps, use_ssp=args.ssp)
        _emit({"seed": seed + k, "status": t.status, "steps": len(t) - 1,
               "min_belief": min(s.belief_size for s in t.steps)}, args.report)
        bad += t.status in ("revealed", "hit-U")
        if args.csv:
            path = Path(args.csv)
            if args.runs > 1:
                path = path.with_name(f"{path.stem}-{seed + k}{path.suffix}")
            path.write_text(export_trace_csv(t))
    return 1 if bad else 0


def cmd_check(args) -> int:
    model = _model(args.model)
    seed = default_seed() if args.seed is None else args.seed
    status = 0
    modes = [args.mode] if args.mode else [VISIBLE, INVISIBLE]
    for mode in modes:
        args.mode = mode
        obs, syn = _synth(model, args)
        if not syn.strategy.choice:
            _emit({"mode": mode, "error": "initial state is losing; nothing to check"}, args.report)
            status = 1
            continue
        rep = check_non_revealing(syn.aug, syn.strategy, obs, syn.allowed0, args.runs, args.depth, seed)
        out = {"mode": mode, **rep.to_dict()}
        if mode == VISIBLE:
            inv = obs.with_visibility(False)
            out["invisible_replay_empty_beliefs"] = cross_mode_replay(
                syn.aug, syn.strategy, inv, syn.allowed0, args.runs, args.depth, seed)
            if out["invisible_replay_empty_beliefs"]:
                status = 1
        _emit(out, args.report)
        if not rep.ok:
            status = 1
    return status


def cmd_scenario_grid(args) -> int:
    if args.spec:
        sc = load_scenario(args.spec)
    else:
        kind = PRECISE if args.sensor == "precise" else BOOLEAN
        sc = build_scenario(GridSpec(p=args.p), sensor_config(args.config, kind), args.visible,
                            scenario_tag(args.config, kind, args.visible), args.start)
    errs = validate(sc.mdp, sc.observation, sc.model.objectives.values())
    if errs:
        for e in errs:
            print(e, file=sys.stderr)
        return 1
    if args.out:
        dump_model(sc.model, args.out)
    else:
        json.dump(model_to_dict(sc.model), sys.stdout, indent=1)
        print()
    return 0


def cmd_table1(args) -> int:
    reports = run_benchmarks(p=args.p, any_action=args.invisible_any_action,
                             belief=args.initial_belief or "singleton")
    status = 0
    for r in reports:
        diff = row_diff(r)
        row = json.loads(r.to_json(args.timing))
        row["expected"] = EXPECTED_ROWS[r.scenario]
        row["diff"] = diff
        _emit(row, args.report)
        if diff:
            status = 1
    _emit({"fallback": fallback_checks(reports)}, args.report)
    if args.markdown:
        text = rows_markdown(reports)
        if args.markdown == "-":
            print(text, end="")
        else:
            Path(args.markdown).write_text(text)
    return status


def cmd_replicate_graphs(args) -> int:
    diffs = replicate_graphs(args.model, belief=args.initial_belief or "obs-class",
                             any_action=args.invisible_any_action)
    for name, d in diffs.items():
        _emit({"graph": name, "match": not d, "diff": d}, args.report)
    if args.dot_dir:
        model = _model(args.model)
        out = Path(args.dot_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, mode in ((VISIBLE, VISIBLE), (INVISIBLE, INVISIBLE)):
            args.mode = mode
            _, syn = _synth(model, args)
            (out / f"{name}.dot").write_text(export_dot(syn.aug, syn.aug_asw.region, name))
    return 0 if not any(diffs.values()) else 1


# -- parser ----------------------------------------------------------------------

def _planning_opts(p, mode=True):
    if mode:
        p.add_argument("--mode", choices=[VISIBLE, INVISIBLE], default=None,
                       help="defender type (default: the model's action visibility)")
    p.add_argument("--user", default="user", help="name of the legitimate objective")
    p.add_argument("--attacker", default="attacker", help="name of the attacker objective")
    p.add_argument("--initial-belief", choices=["obs-class", "singleton"], default=None)
    p.add_argument("--invisible-any-action", action="store_true",
                   help="let the attacker play any enabled action against an action-invisible defender")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deceptra", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("asw", help="almost-sure winning region of one objective")
    p.add_argument("model")
    p.add_argument("--objective", default="user")
    p.add_argument("--dot", help="write the MDP with the region highlighted")
    p.set_defaults(func=cmd_asw)

    p = sub.add_parser("build-aug", help="build the belief-augmented MDP")
    p.add_argument("model", nargs="?")
    _planning_opts(p)
    p.add_argument("--dot")
    p.add_argument("--json", help="write the augmented MDP in the model file format")
    p.set_defaults(func=cmd_build_aug)

    p = sub.add_parser("synthesize", help="synthesize a deceptive strategy")
    p.add_argument("model", nargs="?")
    _planning_opts(p)
    p.add_argument("--report")
    p.add_argument("--strategy")
    p.add_argument("--dot")
    p.add_argument("--no-ssp", action="store_true", help="skip the expected-steps refinement")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("scenario", help="generate benchmark models")
    ssub = p.add_subparsers(dest="kind", required=True)
    g = ssub.add_parser("grid", help="slip gridworld with a sensor scheduler")
    g.add_argument("--config", choices=["a", "b", "c"], default="a")
    g.add_argument("--sensor", choices=["boolean", "precise"], default="boolean")
    g.add_argument("--p", type=float, default=0.8)
    g.add_argument("--visible", action="store_true", help="defender observes actions")
    g.add_argument("--start", type=int, default=20)
    g.add_argument("--spec", help="JSON scenario spec for a custom grid (overrides the options above)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_scenario_grid)

    p = sub.add_parser("simulate", help="sample runs of a strategy file")
    p.add_argument("--strategy", required=True)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--ssp", action="store_true", help="follow the expected-steps actions")
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="sampled non-revealing check against the brute-force oracle")
    p.add_argument("model", nargs="?")
    _planning_opts(p)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("table1", help="run the five sensor-configuration benchmarks")
    p.add_argument("--p", type=float, default=0.8)
    p.add_argument("--report")
    p.add_argument("--markdown", nargs="?", const="-", default=None)
    p.add_argument("--timing", action="store_true", help="include wall times in the report rows")
    p.add_argument("--initial-belief", choices=["obs-class", "singleton"], default=None)
    p.add_argument("--invisible-any-action", action="store_true")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("replicate-figs", help="compare the illustrative augmented graphs to the goldens")
    p.add_argument("model", nargs="?")
    _planning_opts(p, mode=False)
    p.add_argument("--dot-dir")
    p.add_argument("--report")
    p.set_defaults(func=cmd_replicate_graphs)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ModelError, ValueError, OSError) as e:
        print(f"deceptra: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
