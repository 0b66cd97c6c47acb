"""Almost-sure winning regions for reach-avoid objectives.

Nested fixpoint: the outer loop shrinks a candidate safe set ``Y`` (starting
from ``S \\ U``); the inner loop grows level sets ``X_0 = F, X_1, ...`` of
states that can make positive-probability progress into the previous level
while keeping every successor inside ``Y``. Iteration order is by ascending
state id so the level sets are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

from .mdp import Mdp, ReachAvoidObjective, mask_of


@dataclass(frozen=True)
class AswResult:
    region: frozenset[int]
    levels: tuple[frozenset[int], ...]
    allowed: dict[int, frozenset[int]]
    prog: dict[int, frozenset[int]]

    def level_of(self, s: int) -> int:
        for i, x in enumerate(self.levels):
            if s in x:
                return i
        raise KeyError(s)


def _inner(m: Mdp, target: frozenset[int], Y: set[int], y_mask: int) -> list[set[int]]:
    """Grow level sets inside Y; returns the list of *layers* X_i \\ X_{i-1}."""
    X = set(target & Y)
    layers = [set(X)]
    frontier = sorted(X)
    while frontier:
        cand: set[int] = set()
        for t in frontier:
            for s, a in m.predecessors.get(t, ()):
                if s in Y and s not in X:
                    sup = m.support_mask(s, a)
                    if sup & ~y_mask == 0:
                        cand.add(s)
        if not cand:
            break
        X |= cand
        layers.append(cand)
        frontier = sorted(cand)
    return layers


def _safety_region(m: Mdp, safe: set[int]) -> set[int]:
    Y = set(safe)
    while True:
        y_mask = mask_of(Y)
        keep = {
            s for s in Y
            if any(m.support_mask(s, a) & ~y_mask == 0 for a in m.enabled[s])
        }
        if keep == Y:
            return Y
        Y = keep


def asw(m: Mdp, obj: ReachAvoidObjective) -> AswResult:
    """Almost-sure winning region, level sets, Allowed and Prog for ``obj``."""
    safe = set(range(m.n_states)) - set(obj.unsafe)
    if not obj.target:
        region = _safety_region(m, safe)
        levels = (frozenset(),)
        layers: list[set[int]] = [set()]
    else:
        Y = safe
        while True:
            layers = _inner(m, obj.target, Y, mask_of(Y))
            X = set().union(*layers)
            if X == Y:
                break
            Y = X
        region = Y
        acc: set[int] = set()
        lv = []
        for layer in layers:
            acc |= layer
            lv.append(frozenset(acc))
        levels = tuple(lv)

    r_mask = mask_of(region)
    allowed = {}
    for s in sorted(region):
        allowed[s] = frozenset(a for a in m.enabled[s] if m.support_mask(s, a) & ~r_mask == 0)
    prog = {}
    for i in range(1, len(layers)):
        prev = mask_of(levels[i - 1])
        for s in sorted(layers[i]):
            prog[s] = frozenset(a for a in allowed[s] if m.support_mask(s, a) & prev)
    return AswResult(frozenset(region), levels, allowed, prog)


def asw_markov_strategy(r: AswResult) -> dict[int, dict[int, float]]:
    """Uniform distribution over Allowed(s) for every region state."""
    out = {}
    for s in sorted(r.region):
        acts = sorted(r.allowed[s])
        out[s] = {a: 1.0 / len(acts) for a in acts}
    return out


def permissible(r: AswResult, s: int, a: int) -> bool:
    """Whether some ASW strategy plays ``a`` at ``s`` with positive probability."""
    if s not in r.region:
        raise ValueError(f"state id {s} is outside the almost-sure winning region")
    return a in r.allowed[s]
