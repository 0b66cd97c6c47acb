"""Monte-Carlo runs of deceptive strategies and brute-force equivalence oracles.

Randomness comes from numpy's PCG64 bit generator seeded with a 64-bit
integer, which gives identical streams on every platform. Actions are drawn
from the strategy distribution in ascending action order and successors in
ascending state order, so a seed fixes a trace completely.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .belief import INVISIBLE, VISIBLE, AugmentedMdp, belief_step
from .mdp import Mdp, ObservationModel, ids_of, mask_of

RUNNING = "running"
REACHED = "reached-F"
HIT_U = "hit-U"
REVEALED = "revealed"
CSV_HEADER = ("step", "state", "action", "belief_size", "in_belief", "revealed", "status")
MAX_ORACLE_DEPTH = 14


class StrategyError(RuntimeError):
    """The strategy was asked for an action at a state where it is undefined."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _draw(rng: np.random.Generator, items: Sequence[tuple[int, float]]) -> int:
    u = rng.random()
    acc = 0.0
    for x, p in items:
        acc += p
        if u < acc:
            return x
    return items[-1][0]


@dataclass(frozen=True)
class TraceStep:
    step: int
    state: int          # augmented id
    base: str
    action: str         # action chosen at this step, "" if none
    belief_size: int
    in_belief: bool
    revealed: bool
    status: str


@dataclass
class RunTrace:
    seed: int
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def status(self) -> str:
        return self.steps[-1].status if self.steps else RUNNING

    def __len__(self) -> int:
        return len(self.steps)

    def base_history(self, am: AugmentedMdp) -> list[int]:
        """Alternating base-state / action ids of the run."""
        h: list[int] = []
        for st in self.steps:
            h.append(am.index[st.state][0])
            if st.action:
                h.append(am.base.action_id(st.action))
        return h


def status_of(am: AugmentedMdp, i: int) -> str:
    s, b = am.index[i]
    if b == 0:
        return REVEALED
    if i in am.target:
        return REACHED
    if i in am.unsafe:
        return HIT_U
    return RUNNING


def simulate(am: AugmentedMdp, strat, seed: int, max_steps: int, start: int | None = None,
             use_ssp: bool = False) -> RunTrace:
    """Sample one run; stops at the target, an unsafe state, or after ``max_steps`` actions."""
    rng = make_rng(seed)
    i = am.initials[0] if start is None else start
    trace = RunTrace(seed)
    base = am.base
    for k in range(max_steps + 1):
        s, b = am.index[i]
        status = status_of(am, i)
        act = ""
        a = None
        if status == RUNNING and k < max_steps:
            if not strat.defined_at(i):
                raise StrategyError(f"strategy undefined at augmented state {am.mdp.states[i]}")
            a = _draw(rng, sorted(strat.dist(i, use_ssp).items()))
            act = base.actions[a]
        trace.steps.append(TraceStep(k, i, base.states[s], act, bin(b).count("1"),
                                     bool(b >> s & 1), b == 0, status))
        if a is None:
            break
        i = _draw(rng, am.mdp.trans[(i, a)])
    return trace


def export_trace_csv(t: RunTrace | None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for st in (t.steps if t is not None else ()):
        w.writerow([st.step, st.base, st.action, st.belief_size, int(st.in_belief),
                    int(st.revealed), st.status])
    return buf.getvalue()


def oracle_obs_equivalent(
    m: Mdp,
    obs: ObservationModel,
    allowed0: Mapping[int, Iterable[int]],
    h: Sequence[int],
    mode: str | None = None,
    initial: Iterable[int] | None = None,
    max_depth: int = MAX_ORACLE_DEPTH,
) -> list[int] | None:
    """A user history observation-equivalent to ``h`` with positive probability, or None.

    The user plays uniformly over ``allowed0``; ``initial`` restricts where the
    user may start (default: the observation class of ``h[0]``). The search
    runs layer by layer over the observation sequence and keeps one parent
    per reachable state, preferring the smallest ids, so witnesses are
    deterministic.
    """
    if mode is None:
        mode = VISIBLE if obs.action_visible else INVISIBLE
    depth = len(h) // 2
    if depth > max_depth:
        raise ValueError(f"history of depth {depth} exceeds the oracle bound {max_depth}")
    first = obs.classes[obs.class_index(h[0])]
    starts = sorted(first if initial is None else set(initial) & first)
    layers: list[dict[int, tuple[int, int] | None]] = [{s: None for s in starts}]
    for k in range(depth):
        a_obs = h[2 * k + 1]
        cls = obs.classes[obs.class_index(h[2 * k + 2])]
        nxt: dict[int, tuple[int, int]] = {}
        for s in sorted(layers[-1]):
            acts = sorted(allowed0.get(s, ()))
            if mode == VISIBLE:
                acts = [a_obs] if a_obs in acts else []
            for a in acts:
                for t in sorted(m.support(s, a)):
                    if t in cls and t not in nxt:
                        nxt[t] = (s, a)
        if not nxt:
            return None
        layers.append(nxt)
    s = min(layers[-1])
    out = [s]
    for k in range(depth, 0, -1):
        prev, a = layers[k][s]
        out = [prev, a] + out
        s = prev
    return out


def oracle_belief(m, obs, allowed0, h, mode=None, initial=None) -> int:
    """Set of end states over all witnesses, as a bitmask (0 when none exist)."""
    if mode is None:
        mode = VISIBLE if obs.action_visible else INVISIBLE
    first = obs.classes[obs.class_index(h[0])]
    cur = set(first if initial is None else set(initial) & first)
    for k in range(len(h) // 2):
        cls = obs.classes[obs.class_index(h[2 * k + 2])]
        nxt = set()
        for s in cur:
            acts = allowed0.get(s, ())
            if mode == VISIBLE:
                acts = [h[2 * k + 1]] if h[2 * k + 1] in acts else []
            for a in acts:
                nxt |= m.support(s, a) & cls
        cur = nxt
    return mask_of(cur)


@dataclass
class CheckReport:
    runs: int = 0
    prefixes: int = 0
    oracle_checks: int = 0
    reached: int = 0
    counterexamples: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict:
        return {"runs": self.runs, "prefixes": self.prefixes, "oracle_checks": self.oracle_checks,
                "reached": self.reached, "counterexamples": self.counterexamples}


def check_non_revealing(am: AugmentedMdp, strat, obs: ObservationModel, allowed0, n_runs: int,
                        max_len: int, seed: int = 0, oracle_every: int = 1,
                        start: int | None = None) -> CheckReport:
    """Sample runs and confirm the belief never empties before the target.

    Every ``oracle_every``-th run also has each prefix re-checked against the
    brute-force oracle: a witness must exist exactly when the belief is
    non-empty, and the oracle's end-state set must equal the tracked belief.
    """
    m = am.base
    rep = CheckReport()
    root = am.initials[0] if start is None else start
    init_states = ids_of(am.index[root][1])
    for k in range(n_runs):
        t = simulate(am, strat, seed + k, max_len, start=root)
        rep.runs += 1
        if t.status == REACHED:
            rep.reached += 1
        h = t.base_history(am)
        for j, st in enumerate(t.steps):
            rep.prefixes += 1
            _, b = am.index[st.state]
            hist = [m.states[x] if n % 2 == 0 else m.actions[x] for n, x in enumerate(h[:2 * j + 1])]
            if b == 0:
                rep.counterexamples.append({"seed": seed + k, "step": j, "kind": "revealed", "history": hist})
                break
            if st.status == HIT_U:
                rep.counterexamples.append({"seed": seed + k, "step": j, "kind": "hit-U", "history": hist})
                break
            if k % oracle_every:
                continue
            rep.oracle_checks += 1
            prefix = h[:2 * j + 1]
            w = oracle_obs_equivalent(m, obs, allowed0, prefix, am.mode, init_states)
            if w is None or oracle_belief(m, obs, allowed0, prefix, am.mode, init_states) != b:
                rep.counterexamples.append({"seed": seed + k, "step": j, "kind": "oracle-mismatch",
                                            "history": hist})
                break
    return rep


def replay_beliefs(m: Mdp, obs: ObservationModel, allowed0, h: Sequence[int], mode: str,
                   belief0: int) -> list[int]:
    """Beliefs along a base history under the given update rule."""
    out = [belief0]
    b = belief0
    for k in range(len(h) // 2):
        b = belief_step(m, obs, allowed0, b, h[2 * k + 1], h[2 * k + 2], mode)
        out.append(b)
    return out


def cross_mode_replay(am: AugmentedMdp, strat, obs: ObservationModel, allowed0, n_runs: int,
                      max_len: int, seed: int = 0, mode: str = INVISIBLE) -> int:
    """Replay runs of ``strat`` under another belief update; returns the number of empty-belief events."""
    events = 0
    for k in range(n_runs):
        t = simulate(am, strat, seed + k, max_len)
        h = t.base_history(am)
        bs = replay_beliefs(am.base, obs, allowed0, h, mode, am.index[am.initials[0]][1])
        events += sum(1 for b in bs if b == 0)
    return events
