"""Synthesis of non-revealing deceptive strategies.

Pipeline: the user's almost-sure winning region gives the permissible actions
``Allowed0``; the defender's belief is tracked in an augmented MDP built from
them; the attacker's strategy is the almost-sure winning strategy of that
augmented MDP for its own reach-avoid objective.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .asw import AswResult, asw
from .belief import INVISIBLE, VISIBLE, AugmentedMdp, aug_name, build_augmented, initial_belief
from .mdp import Mdp, ObservationModel, ReachAvoidObjective

SSP_TOL = 1e-9
SSP_MAX_ITER = 100_000


@dataclass
class FiniteMemoryStrategy:
    """Attacker strategy over augmented states; the belief is the memory.

    ``choice`` holds every action the augmented solve allows. Distributions
    are uniform over it unless an SSP pass pinned a single action.
    """

    mode: str
    aug: AugmentedMdp
    choice: dict[int, frozenset[int]]
    ssp_action: dict[int, int] = field(default_factory=dict)
    value: dict[int, float] = field(default_factory=dict)

    def defined_at(self, i: int) -> bool:
        return i in self.choice

    def dist(self, i: int, use_ssp: bool = False) -> dict[int, float]:
        if use_ssp and i in self.ssp_action:
            return {self.ssp_action[i]: 1.0}
        acts = sorted(self.choice[i])
        return {a: 1.0 / len(acts) for a in acts}

    def to_dict(self) -> dict:
        base = self.aug.base
        out = {}
        for i in sorted(self.choice):
            s, b = self.aug.index[i]
            entry = {"actions": [base.actions[a] for a in sorted(self.choice[i])]}
            if i in self.ssp_action:
                entry["ssp_action"] = base.actions[self.ssp_action[i]]
                entry["value"] = self.value[i]
            out[aug_name(base, s, b)] = entry
        return out


@dataclass
class PlanReport:
    aug_size: int
    asw_size: int
    winning_initial: list[int]
    seconds: float

    def __post_init__(self):
        assert self.asw_size <= self.aug_size


@dataclass
class Synthesis:
    """Everything produced by one synthesis run, kept for inspection and checks."""

    user: AswResult
    aug: AugmentedMdp
    aug_asw: AswResult
    strategy: FiniteMemoryStrategy
    report: PlanReport

    @property
    def allowed0(self) -> dict[int, frozenset[int]]:
        return self.user.allowed


def synthesize_full(
    m: Mdp,
    obs: ObservationModel,
    user_obj: ReachAvoidObjective,
    attacker_obj: ReachAvoidObjective,
    mode: str | None = None,
    initial=None,
    belief_kind="obs-class",
    any_action: bool = False,
) -> Synthesis:
    """Run the full pipeline.

    ``mode`` defaults to the observation model's action visibility. ``initial``
    is a list of (state, belief mask) roots; by default the single root is the
    model's initial state with a belief given by ``belief_kind``.
    """
    t0 = time.perf_counter()
    if mode is None:
        mode = VISIBLE if obs.action_visible else INVISIBLE
    user = asw(m, user_obj)
    if initial is None:
        initial = [(m.initial, initial_belief(m, obs, m.initial, belief_kind))]
    am = build_augmented(m, obs, user.allowed, attacker_obj, mode, initial, any_action)
    if attacker_obj.target and not am.target:
        # no goal state is reachable; an empty target would otherwise read as
        # a pure safety objective
        res = AswResult(frozenset(), (frozenset(),), {}, {})
    else:
        res = asw(am.mdp, am.objective)
    if any(r in res.region for r in am.initials):
        # a target state whose every action reveals is still terminal, so it
        # simply gets no entry
        choice = {i: res.allowed[i] for i in res.region if res.allowed[i]}
    else:
        choice = {}
    strat = FiniteMemoryStrategy(mode, am, choice)
    winning = sorted({am.index[r][0] for r in am.initials if r in res.region})
    report = PlanReport(len(am), len(res.region), winning, time.perf_counter() - t0)
    return Synthesis(user, am, res, strat, report)


def synthesize(m, obs, user_obj, attacker_obj, mode=None, **kw) -> tuple[FiniteMemoryStrategy, PlanReport]:
    s = synthesize_full(m, obs, user_obj, attacker_obj, mode, **kw)
    return s.strategy, s.report


def ssp_refine(strat: FiniteMemoryStrategy, tol: float = SSP_TOL,
               max_iter: int = SSP_MAX_ITER) -> FiniteMemoryStrategy:
    """Minimise expected steps to the attacker's target over the allowed actions.

    Value iteration from zero on the stacked (state, action) rows. Policies that
    loop inside the region forever have infinite cost, so the iteration
    settles on proper ones. Ties go to the smallest action id.
    """
    if not strat.choice:
        raise ValueError("ssp_refine needs a non-empty winning region")
    am = strat.aug
    target = am.target
    states = sorted(strat.choice)
    pos = {s: k for k, s in enumerate(states)}
    rows_s, rows_a = [], []
    data, ri, ci = [], [], []
    for s in states:
        if s in target:
            continue
        for a in sorted(strat.choice[s]):
            r = len(rows_s)
            rows_s.append(pos[s])
            rows_a.append(a)
            for t, p in am.mdp.trans[(s, a)]:
                if t not in target:
                    data.append(p)
                    ri.append(r)
                    ci.append(pos[t])
    n = len(states)
    V = np.zeros(n)
    if not rows_s:
        return FiniteMemoryStrategy(strat.mode, am, strat.choice,
                                    {s: min(strat.choice[s]) for s in states}, {s: 0.0 for s in states})
    P = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows_s), n))
    owner = np.asarray(rows_s)
    starts = np.flatnonzero(np.r_[True, owner[1:] != owner[:-1]])
    idx = owner[starts]
    for _ in range(max_iter):
        Q = 1.0 + P @ V
        newV = V.copy()
        newV[idx] = np.minimum.reduceat(Q, starts)
        delta = np.max(np.abs(newV - V))
        V = newV
        if delta < tol:
            break
    Q = 1.0 + P @ V
    action, value = {}, {}
    bounds = list(starts) + [len(rows_s)]
    for k in range(len(starts)):
        lo, hi = bounds[k], bounds[k + 1]
        best = min(Q[lo:hi])
        # rows are in ascending action order, so the first near-minimum wins ties
        j = next(r for r in range(lo, hi) if Q[r] <= best + 1e-9)
        s = states[owner[lo]]
        action[s] = rows_a[j]
    for s in states:
        value[s] = float(V[pos[s]])
        if s in target:
            action[s] = min(strat.choice[s])
    if not all(np.isfinite(list(value.values()))):
        raise ArithmeticError("expected-steps values diverged")
    return FiniteMemoryStrategy(strat.mode, am, strat.choice, action, value)


def sweep_roots(scenario, cells=None, belief="singleton") -> list[tuple[int, int]]:
    """Augmented roots (state, belief) for every (cell, q) in ``cells``."""
    m, obs = scenario.mdp, scenario.observation
    if cells is None:
        cells = default_start_cells(scenario)
    roots = []
    for c in cells:
        for q in range(scenario.sensor.n_modes):
            s = scenario.state(c, q)
            roots.append((s, initial_belief(m, obs, s, belief)))
    return roots


def default_start_cells(scenario) -> list[int]:
    """Cells that are neither obstacles nor either agent's goal."""
    g = scenario.grid
    skip = set(g.obstacles) | set(g.user_target) | set(g.attacker_target)
    return [c for c in range(g.n_cells) if c not in skip]


def winning_initial_sweep(scenario, mode: str | None = None, cells=None,
                          belief="singleton", any_action=False) -> tuple[list[int], Synthesis]:
    """Cells winning for the attacker from every scheduler state.

    All roots share one augmented MDP, so the reported sizes count the union
    of states reachable from any root.
    """
    roots = sweep_roots(scenario, cells, belief)
    syn = synthesize_full(scenario.mdp, scenario.observation, scenario.user, scenario.attacker,
                          mode, initial=roots, any_action=any_action)
    am, region = syn.aug, syn.aug_asw.region
    by_cell: dict[int, bool] = {}
    for r in am.initials:
        c = scenario.cell_of(am.index[r][0])
        by_cell[c] = by_cell.get(c, True) and r in region
    win = sorted(c for c, ok in by_cell.items() if ok)
    syn.report.winning_initial = win
    return win, syn
