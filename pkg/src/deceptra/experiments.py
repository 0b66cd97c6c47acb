"""Benchmark runs: sensor-configuration sweeps, the illustrative graphs and timing."""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass
from importlib import resources

from . import __version__
from .belief import INVISIBLE, VISIBLE, aug_name
from .gridworld import BOOLEAN, PRECISE, benchmark_scenario
from .mdp import load_model
from .planner import ssp_refine, synthesize_full, winning_initial_sweep
from .sim import REACHED, simulate

# (config, sensor kind, action visible) for each benchmark row
BENCHMARK_ROWS = (
    ("a", BOOLEAN, False),
    ("b", BOOLEAN, False),
    ("c", BOOLEAN, False),
    ("c", PRECISE, False),
    ("c", PRECISE, True),
)

EXPECTED_ROWS = {
    "(a)-B-I": {"win": [20, 21, 22, 23, 24], "aug_size": 1091, "asw_size": 374},
    "(b)-B-I": {"win": [5, 10, 15, 20, 21, 22, 23, 24], "aug_size": 1339, "asw_size": 682},
    "(c)-B-I": {"win": [5, 10, 15, 20, 21, 22, 23, 24], "aug_size": 497, "asw_size": 340},
    "(c)-P-I": {"win": [20, 21, 22, 23, 24], "aug_size": 359, "asw_size": 170},
    "(c)-P-V": {"win": [], "aug_size": 519, "asw_size": 20},
}


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RunReport:
    scenario: str
    mode: str
    sensor: str
    win: list[int]
    aug_size: int
    asw_size: int
    seconds: float | None
    version: str
    config_hash: str

    def to_json(self, timing: bool = False) -> str:
        d = asdict(self)
        if not timing:
            d.pop("seconds")
        return json.dumps(d, sort_keys=True)


def benchmark_row(config: str, kind: str, visible: bool, p: float = 0.8, any_action: bool = False,
               belief: str = "singleton") -> RunReport:
    t0 = time.perf_counter()
    sc = benchmark_scenario(config, kind, visible, p)
    win, syn = winning_initial_sweep(sc, belief=belief, any_action=any_action)
    cfg = {"config": config, "sensor": kind, "visible": visible, "p": p, "any_action": any_action,
           "belief": belief, "version": __version__}
    return RunReport(sc.name, VISIBLE if visible else INVISIBLE, kind, win, syn.report.aug_size,
                     syn.report.asw_size, round(time.perf_counter() - t0, 3), __version__,
                     config_hash(cfg))


def run_benchmarks(**kw) -> list[RunReport]:
    return [benchmark_row(c, k, v, **kw) for c, k, v in BENCHMARK_ROWS]


def row_diff(rep: RunReport) -> dict:
    """Field-by-field mismatches against the reference row (empty when equal)."""
    want = EXPECTED_ROWS[rep.scenario]
    diff = {}
    for key, got in (("win", rep.win), ("aug_size", rep.aug_size), ("asw_size", rep.asw_size)):
        if got != want[key]:
            diff[key] = {"expected": want[key], "got": got}
    if "win" in diff:
        diff["win"]["missing"] = sorted(set(want["win"]) - set(rep.win))
        diff["win"]["extra"] = sorted(set(rep.win) - set(want["win"]))
    return diff


def fallback_checks(reports: list[RunReport]) -> dict[str, bool]:
    """Layout-robust inclusions between the rows' win sets."""
    w = {r.scenario: set(r.win) for r in reports}
    return {
        "win(c)-P-V is empty": not w["(c)-P-V"],
        "win(c)-P-I within win(c)-B-I": w["(c)-P-I"] <= w["(c)-B-I"],
        "win(a)-B-I within win(b)-B-I": w["(a)-B-I"] <= w["(b)-B-I"],
        "visible win sets within invisible": visible_within_invisible(reports),
    }


def visible_within_invisible(reports: list[RunReport]) -> bool:
    ok = True
    for r in reports:
        if r.mode != VISIBLE:
            continue
        twin = r.scenario[:-1] + "I"
        other = next((x for x in reports if x.scenario == twin), None)
        if other is None:
            # rerun the missing counterpart with the same settings
            cfg = r.scenario[1]
            other = benchmark_row(cfg, r.sensor, False)
        ok &= set(r.win) <= set(other.win)
    return ok


def rows_markdown(reports: list[RunReport]) -> str:
    lines = [
        "| Config | Win initial states | Aug. size | ASW size | Expected win | Expected aug | Expected ASW | Match |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for r in reports:
        want = EXPECTED_ROWS[r.scenario]
        ok = "yes" if not row_diff(r) else "no"
        lines.append(f"| {r.scenario} | {_cells(r.win)} | {r.aug_size} | {r.asw_size} | "
                     f"{_cells(want['win'])} | {want['aug_size']} | {want['asw_size']} | {ok} |")
    return "\n".join(lines) + "\n"


def _cells(c) -> str:
    return "{" + ",".join(map(str, c)) + "}" if c else "∅"


# -- illustrative example ------------------------------------------------------

def bundled(name: str):
    return resources.files("deceptra") / "data" / name


def load_golden(name: str) -> dict:
    return json.loads(bundled(name).read_text())


def graph_of(syn) -> dict:
    am = syn.aug
    A, base = am.mdp, am.base
    edges = sorted({(A.states[i], base.actions[a], A.states[t])
                    for (i, a), row in A.trans.items() for t, p in row if p > 0})
    return {
        "initial": aug_name(base, *am.index[am.initials[0]]),
        "states": sorted(A.states),
        "edges": [list(e) for e in edges],
        "asw": sorted(A.states[i] for i in syn.aug_asw.region),
    }


def compare_graph(got: dict, want: dict) -> dict:
    diff = {}
    for key in ("states", "asw"):
        miss = sorted(set(want[key]) - set(got[key]))
        extra = sorted(set(got[key]) - set(want[key]))
        if miss or extra:
            diff[key] = {"missing": miss, "extra": extra}
    ge = {tuple(e) for e in got["edges"]}
    we = {tuple(e) for e in want["edges"]}
    if ge != we:
        diff["edges"] = {"missing": sorted(map(list, we - ge)), "extra": sorted(map(list, ge - we))}
    if got["initial"] != want["initial"]:
        diff["initial"] = {"expected": want["initial"], "got": got["initial"]}
    return diff


def replicate_graphs(model_path=None, belief="obs-class", any_action=False) -> dict:
    """Rebuild both augmented graphs of the illustrative model and diff them against the goldens."""
    model = load_model(model_path or bundled("illustrative.json"))
    m = model.mdp
    out = {}
    for name, vis in (("visible", True), ("invisible", False)):
        want = load_golden(f"golden_{name}.json")
        obs = model.observation.with_visibility(vis)
        syn = synthesize_full(m, obs, model.objectives["user"], model.objectives["attacker"],
                              belief_kind=belief, any_action=any_action)
        diff = compare_graph(graph_of(syn), want)
        allowed = {m.states[s]: sorted(m.actions[a] for a in acts) for s, acts in syn.allowed0.items()}
        bad = {s: {"expected": v, "got": allowed.get(s, [])}
               for s, v in want["allowed0"].items() if allowed.get(s, []) != v}
        if bad:
            diff["allowed0"] = bad
        out[name] = diff
    return out


# -- timing ----------------------------------------------------------------------

def mean_steps(config: str, kind: str = BOOLEAN, visible: bool = False, p: float = 0.8,
               n_seeds: int = 200, start_cell: int = 20, max_steps: int = 10_000,
               seed0: int = 0, any_action: bool = False) -> dict:
    """Mean steps to the attacker's goal under the expected-steps strategy.

    Every run starts in ``start_cell`` with the first scheduler state. When that start
    is losing no run is possible and the mean is reported as infinite.
    """
    sc = benchmark_scenario(config, kind, visible, p, start=start_cell)
    syn = synthesize_full(sc.mdp, sc.observation, sc.user, sc.attacker, belief_kind="singleton",
                          any_action=any_action)
    res = {"scenario": sc.name, "start": start_cell, "winning": bool(syn.strategy.choice),
           "mean_steps": math.inf, "reached": 0, "out_of_belief_runs": 0, "runs": 0}
    if not syn.strategy.choice:
        return res
    strat = ssp_refine(syn.strategy)
    total, lost = 0, 0
    for k in range(n_seeds):
        t = simulate(syn.aug, strat, seed0 + k, max_steps, use_ssp=True)
        res["runs"] += 1
        if t.status == REACHED:
            res["reached"] += 1
            total += len(t) - 1
        if any(not st.in_belief for st in t.steps if st.status != REACHED):
            lost += 1
    res["mean_steps"] = total / res["reached"] if res["reached"] else math.inf
    res["out_of_belief_runs"] = lost
    return res
