"""Belief-augmented MDPs for planning against a partially observing defender.

An augmented state ``(s, B)`` pairs the true state with the defender's belief
``B``, the set of states a legitimate user could be in given everything the
defender has observed. Beliefs are int bitmasks over base state ids. The
empty belief marks revelation: such states are absorbing and unsafe for the
attacker.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .mdp import Mdp, ModelError, ObservationModel, ReachAvoidObjective, ids_of, mask_of

VISIBLE = "visible"
INVISIBLE = "invisible"


@dataclass(frozen=True, eq=False)
class AugmentedMdp:
    mdp: Mdp
    unsafe: frozenset[int]
    target: frozenset[int]
    mode: str
    index: tuple[tuple[int, int], ...]  # aug id -> (base state, belief mask)
    initials: tuple[int, ...]
    base: Mdp

    @property
    def objective(self) -> ReachAvoidObjective:
        return ReachAvoidObjective(self.unsafe, self.target)

    def id_of(self, s: int, belief: int) -> int:
        return self._lookup[(s, belief)]

    def find(self, s: int, belief: int) -> int | None:
        return self._lookup.get((s, belief))

    @property
    def _lookup(self) -> dict[tuple[int, int], int]:
        try:
            return self.__dict__["_lookup_cache"]
        except KeyError:
            d = {k: i for i, k in enumerate(self.index)}
            self.__dict__["_lookup_cache"] = d
            return d

    def by_name(self, s: str, belief: Iterable[str]) -> int:
        b = mask_of(self.base.state_id(x) for x in belief)
        return self.id_of(self.base.state_id(s), b)

    def __len__(self) -> int:
        return len(self.index)


def aug_name(base: Mdp, s: int, belief: int) -> str:
    return f"{base.states[s]}|{{{','.join(base.states[b] for b in ids_of(belief))}}}"


def initial_belief(m: Mdp, obs: ObservationModel, s0: int, kind: str | Iterable[int] = "obs-class") -> int:
    """Initial defender belief: ``obs-class`` (DObs_S(s0)), ``singleton`` ({s0}) or explicit ids."""
    if kind == "obs-class":
        return obs.obs_mask(s0)
    if kind == "singleton":
        return 1 << s0
    if isinstance(kind, str):
        raise ValueError(f"unknown initial belief kind {kind!r}")
    return mask_of(kind)


def _post_tables(m: Mdp) -> list[dict[int, int]]:
    return [{a: m.support_mask(s, a) for a in m.enabled[s]} for s in range(m.n_states)]


def build_augmented(
    m: Mdp,
    obs: ObservationModel,
    allowed0: Mapping[int, Iterable[int]],
    attacker_obj: ReachAvoidObjective,
    mode: str = VISIBLE,
    initial: Sequence[tuple[int, int]] | None = None,
    any_action: bool = False,
) -> AugmentedMdp:
    """Breadth-first construction of the reachable augmented MDP.

    ``allowed0`` maps user-ASW states to their permissible actions (states
    outside the user's region have none). ``initial`` lists (state, belief)
    roots; the default is ``(s0, DObs_S(s0))``. With ``any_action`` the
    invisible-mode attacker may play every enabled action (experimental).
    """
    if mode not in (VISIBLE, INVISIBLE):
        raise ValueError(f"unknown mode {mode!r}")
    n = m.n_states
    allowed = [frozenset(allowed0.get(s, ())) for s in range(n)]
    posts = _post_tables(m)
    obs_mask = [obs.obs_mask(s) for s in range(n)]
    # Union over permissible actions, used by the invisible-mode update.
    perm_post = [0] * n
    for s in range(n):
        for a in allowed[s]:
            perm_post[s] |= posts[s].get(a, 0)

    if initial is None:
        initial = [(m.initial, obs.obs_mask(m.initial))]

    index: list[tuple[int, int]] = []
    lookup: dict[tuple[int, int], int] = {}
    trans: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
    enabled: list[tuple[int, ...]] = []
    queue: deque[int] = deque()

    def intern(key):
        i = lookup.get(key)
        if i is None:
            i = len(index)
            lookup[key] = i
            index.append(key)
            enabled.append(())
            queue.append(i)
        return i

    roots = tuple(intern(k) for k in initial)

    def check_class(s, belief):
        for b in ids_of(belief):
            if m.enabled[b] != m.enabled[s]:
                raise ModelError(
                    f"inconsistent observation: belief state {m.states[b]} and true state "
                    f"{m.states[s]} look alike but enable different actions"
                )

    while queue:
        i = queue.popleft()
        s, B = index[i]
        acts = m.enabled[s]
        if B == 0:
            enabled[i] = acts
            for a in acts:
                trans[(i, a)] = ((i, 1.0),)
            continue
        check_class(s, B)
        members = ids_of(B)
        row_acts: list[int] = []
        if mode == VISIBLE:
            for a in acts:
                contrib = 0
                for so in members:
                    if a in allowed[so]:
                        contrib |= posts[so].get(a, 0)
                row = []
                for t, p in m.trans[(s, a)]:
                    if p <= 0:
                        continue
                    nb = contrib & obs_mask[t] if contrib else 0
                    row.append((intern((t, nb)), p))
                trans[(i, a)] = _merge(row)
                row_acts.append(a)
        else:
            perm = set()
            for so in members:
                perm |= allowed[so]
            if not perm:
                for a in acts:
                    trans[(i, a)] = ((intern((s, 0)), 1.0),)
                    row_acts.append(a)
            else:
                contrib = 0
                for so in members:
                    contrib |= perm_post[so]
                playable = acts if any_action else [a for a in acts if a in perm]
                if not playable:
                    # Permissible actions exist only at belief states whose
                    # enabled set differs from the true state's.
                    playable = acts
                    for a in acts:
                        trans[(i, a)] = ((intern((s, 0)), 1.0),)
                else:
                    for a in playable:
                        row = []
                        for t, p in m.trans[(s, a)]:
                            if p > 0:
                                row.append((intern((t, contrib & obs_mask[t])), p))
                        trans[(i, a)] = _merge(row)
                row_acts = list(playable)
        enabled[i] = tuple(sorted(row_acts))

    names = tuple(aug_name(m, s, b) for s, b in index)
    aug = Mdp(names, m.actions, tuple(enabled), trans, roots[0] if roots else 0)
    unsafe = frozenset(
        i for i, (s, b) in enumerate(index) if b == 0 or s in attacker_obj.unsafe
    )
    target = frozenset(
        i for i, (s, b) in enumerate(index) if b != 0 and s in attacker_obj.target
    )
    return AugmentedMdp(aug, unsafe, target, mode, tuple(index), roots, m)


def _merge(row: list[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
    acc: dict[int, float] = {}
    for t, p in row:
        acc[t] = acc.get(t, 0.0) + p
    return tuple(sorted(acc.items()))


def build_visible(m, obs, allowed0, attacker_obj, initial=None) -> AugmentedMdp:
    if not obs.action_visible:
        raise ValueError("build_visible needs an action-visible observation model")
    return build_augmented(m, obs, allowed0, attacker_obj, VISIBLE, initial)


def build_invisible(m, obs, allowed0, attacker_obj, initial=None, any_action=False) -> AugmentedMdp:
    if obs.action_visible:
        raise ValueError("build_invisible needs an action-invisible observation model")
    return build_augmented(m, obs, allowed0, attacker_obj, INVISIBLE, initial, any_action)


def belief_step(
    m: Mdp,
    obs: ObservationModel,
    allowed0: Mapping[int, Iterable[int]],
    belief: int,
    action: int,
    reached: int,
    mode: str,
) -> int:
    """One defender belief update after observing ``action`` (if visible) and ``reached``."""
    if belief == 0:
        return 0
    contrib = 0
    for so in ids_of(belief):
        acts = allowed0.get(so, ())
        if mode == VISIBLE:
            if action in acts:
                contrib |= m.support_mask(so, action)
        else:
            for ao in acts:
                contrib |= m.support_mask(so, ao)
    return contrib & obs.obs_mask(reached)


def export_dot(am: AugmentedMdp, highlight: Iterable[int] = (), name: str = "augmented") -> str:
    """Deterministic DOT rendering; highlighted states are filled."""
    return mdp_to_dot(am.mdp, highlight, name, initials=am.initials)


def mdp_to_dot(m: Mdp, highlight: Iterable[int] = (), name: str = "mdp", initials=None) -> str:
    hl = set(highlight)
    init = set(initials if initials is not None else [m.initial])
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", "  node [shape=ellipse];"]
    for i, label in enumerate(m.states):
        attrs = [f'label="{_esc(label)}"']
        if i in hl:
            attrs.append('style=filled, fillcolor="#f4b6b6"')
        if i in init:
            attrs.append("penwidth=2")
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    edges: dict[tuple[int, int], list[str]] = {}
    for (s, a), row in sorted(m.trans.items()):
        for t, p in row:
            if p > 0:
                edges.setdefault((s, t), []).append(m.actions[a])
    for (s, t), acts in sorted(edges.items()):
        lines.append(f'  n{s} -> n{t} [label="{_esc(",".join(acts))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
