"""Finite MDPs, reach-avoid objectives and the defender's observation model.

States and actions carry string names at the boundary and are interned to
dense integer ids. Every qualitative algorithm in the package consumes only
transition supports; probabilities are kept for simulation and the
expected-steps refinement.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

PROB_TOL = 1e-9
INVISIBLE_ACTION = "⊤"


class ModelError(ValueError):
    """Raised for structurally malformed models (unknown names, bad schema)."""


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def ids_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True, eq=False)
class Mdp:
    """Finite MDP over interned ids.

    ``trans[(s, a)]`` lists ``(successor, probability)`` pairs and is defined
    exactly for ``a in enabled[s]``.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    enabled: tuple[tuple[int, ...], ...]
    trans: Mapping[tuple[int, int], tuple[tuple[int, float], ...]]
    initial: int = 0
    state_index: dict[str, int] = field(init=False, repr=False)
    action_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "state_index", {n: i for i, n in enumerate(self.states)})
        object.__setattr__(self, "action_index", {n: i for i, n in enumerate(self.actions)})
        if len(self.state_index) != len(self.states):
            raise ModelError("duplicate state names")
        if len(self.action_index) != len(self.actions):
            raise ModelError("duplicate action names")
        if len(self.enabled) != len(self.states):
            raise ModelError("enabled must list one action tuple per state")
        if not 0 <= self.initial < len(self.states):
            raise ModelError(f"initial state id {self.initial} out of range")

    @classmethod
    def from_names(
        cls,
        states: Sequence[str],
        actions: Sequence[str],
        enabled: Mapping[str, Iterable[str]],
        trans: Mapping[tuple[str, str], Mapping[str, float]],
        initial: str,
    ) -> "Mdp":
        sidx = {n: i for i, n in enumerate(states)}
        aidx = {n: i for i, n in enumerate(actions)}

        def sid(name):
            try:
                return sidx[name]
            except KeyError:
                raise ModelError(f"unknown state {name!r}") from None

        def aid(name):
            try:
                return aidx[name]
            except KeyError:
                raise ModelError(f"unknown action {name!r}") from None

        en = []
        for s in states:
            en.append(tuple(sorted({aid(a) for a in enabled.get(s, ())})))
        tr = {}
        for (s, a), dist in trans.items():
            tr[(sid(s), aid(a))] = tuple(sorted((sid(t), float(p)) for t, p in dist.items()))
        return cls(tuple(states), tuple(actions), tuple(en), tr, sid(initial))

    @property
    def n_states(self) -> int:
        return len(self.states)

    @cached_property
    def _supports(self) -> dict[tuple[int, int], int]:
        return {
            k: mask_of(t for t, p in row if p > 0) for k, row in self.trans.items()
        }

    def support_mask(self, s: int, a: int) -> int:
        """Bitmask of ``Post({s}, a)``; 0 when ``a`` is not enabled at ``s``."""
        return self._supports.get((s, a), 0)

    def support(self, s: int, a: int) -> frozenset[int]:
        return frozenset(ids_of(self.support_mask(s, a)))

    @cached_property
    def predecessors(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """successor -> ((s, a), ...) with P(successor | s, a) > 0."""
        pre: dict[int, list[tuple[int, int]]] = {}
        for (s, a), row in self.trans.items():
            for t, p in row:
                if p > 0:
                    pre.setdefault(t, []).append((s, a))
        return {t: tuple(sorted(v)) for t, v in pre.items()}

    def state_ids(self, names: Iterable[str]) -> frozenset[int]:
        try:
            return frozenset(self.state_index[n] for n in names)
        except KeyError as e:
            raise ModelError(f"unknown state {e.args[0]!r}") from None

    def state_id(self, name: str) -> int:
        try:
            return self.state_index[name]
        except KeyError:
            raise ModelError(f"unknown state {name!r}") from None

    def action_id(self, name: str) -> int:
        try:
            return self.action_index[name]
        except KeyError:
            raise ModelError(f"unknown action {name!r}") from None

    def names(self, ids: Iterable[int]) -> list[str]:
        return [self.states[i] for i in sorted(ids)]


def post(m: Mdp, X: Iterable[int], a: int) -> frozenset[int]:
    """States reachable with positive probability from some state in X under a.

    States of X where ``a`` is not enabled contribute nothing.
    """
    mask = 0
    for s in X:
        mask |= m.support_mask(s, a)
    return frozenset(ids_of(mask))


@dataclass(frozen=True)
class ReachAvoidObjective:
    """Reach ``target`` without visiting ``unsafe`` first (state ids)."""

    unsafe: frozenset[int]
    target: frozenset[int]

    @classmethod
    def from_names(cls, m: Mdp, unsafe: Iterable[str] = (), target: Iterable[str] = ()):
        return cls(m.state_ids(unsafe), m.state_ids(target))


@dataclass(frozen=True, eq=False)
class ObservationModel:
    """Partition of the state space into observation classes plus action visibility."""

    classes: tuple[frozenset[int], ...]
    action_visible: bool = True

    @classmethod
    def from_names(cls, m: Mdp, classes: Iterable[Iterable[str]], action_visible: bool = True):
        return cls(tuple(m.state_ids(c) for c in classes), action_visible)

    @classmethod
    def full(cls, m: Mdp, action_visible: bool = True):
        return cls(tuple(frozenset([s]) for s in range(m.n_states)), action_visible)

    @cached_property
    def class_of(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for k, c in enumerate(self.classes):
            for s in c:
                out.setdefault(s, k)
        return out

    @cached_property
    def class_masks(self) -> tuple[int, ...]:
        return tuple(mask_of(c) for c in self.classes)

    def class_index(self, s: int) -> int:
        try:
            return self.class_of[s]
        except KeyError:
            raise ModelError(f"state id {s} is not covered by the observation partition") from None

    def obs_mask(self, s: int) -> int:
        """Bitmask of DObs_S(s)."""
        return self.class_masks[self.class_index(s)]

    def with_visibility(self, action_visible: bool) -> "ObservationModel":
        return ObservationModel(self.classes, action_visible)


def validate(m: Mdp, obs: ObservationModel | None = None,
             objs: Iterable[ReachAvoidObjective] = ()) -> list[str]:
    """Collect every invariant violation; an empty list means the inputs are valid."""
    errs: list[str] = []
    n = m.n_states
    for s in range(n):
        if not m.enabled[s]:
            errs.append(f"state {m.states[s]}: no enabled actions")
        for a in m.enabled[s]:
            if (s, a) not in m.trans:
                errs.append(f"({m.states[s]},{m.actions[a]}): enabled but no transition row")
    for (s, a), row in sorted(m.trans.items()):
        tag = f"({m.states[s]},{m.actions[a]})"
        if a not in m.enabled[s]:
            errs.append(f"{tag}: transition row for an action not enabled")
        total = 0.0
        for t, p in row:
            if not p > 0:
                errs.append(f"{tag}: non-positive probability {p} to {m.states[t]}")
            total += p
        if abs(total - 1.0) > PROB_TOL:
            errs.append(f"{tag}: probabilities sum to {total!r}, not 1")

    if obs is not None:
        seen: dict[int, int] = {}
        for k, c in enumerate(obs.classes):
            if not c:
                errs.append(f"observation class #{k} is empty")
            for s in sorted(c):
                if not 0 <= s < n:
                    errs.append(f"observation class #{k}: unknown state id {s}")
                elif s in seen:
                    errs.append(
                        f"state {m.states[s]}: in observation classes #{seen[s]} and #{k}"
                    )
                else:
                    seen[s] = k
        for s in range(n):
            if s not in seen:
                errs.append(f"state {m.states[s]}: not covered by any observation class")
        for k, c in enumerate(obs.classes):
            members = sorted(x for x in c if 0 <= x < n)
            if members:
                ref = set(m.enabled[members[0]])
                for s in members[1:]:
                    if set(m.enabled[s]) != ref:
                        errs.append(
                            f"observation class #{k}: enabled actions of {m.states[s]} "
                            f"differ from {m.states[members[0]]}; states that look alike must offer the same actions"
                        )
    for i, o in enumerate(objs):
        bad = sorted(x for x in o.unsafe | o.target if not 0 <= x < n)
        if bad:
            errs.append(f"objective #{i}: unknown state ids {bad}")
        both = o.unsafe & o.target
        if both:
            errs.append(f"objective #{i}: states both unsafe and target: {m.names(both)}")
    return errs


# -- histories -----------------------------------------------------------------

def check_history(m: Mdp, h: Sequence[int]) -> None:
    """Raise ModelError unless ``h = s0 a0 s1 ... sn`` is a positive-probability history."""
    if len(h) % 2 != 1:
        raise ModelError("history must alternate states and actions and end in a state")
    for i in range(0, len(h) - 2, 2):
        s, a, t = h[i], h[i + 1], h[i + 2]
        if a not in m.enabled[s]:
            raise ModelError(f"action {m.actions[a]} not enabled at {m.states[s]}")
        if not m.support_mask(s, a) >> t & 1:
            raise ModelError(f"P({m.states[t]} | {m.states[s]}, {m.actions[a]}) = 0")


def parse_history(m: Mdp, names: Sequence[str]) -> list[int]:
    out = []
    for i, n in enumerate(names):
        if i % 2 == 0:
            out.append(m.state_id(n))
        else:
            out.append(m.action_id(n))
    return out


def observe_history(obs: ObservationModel, h: Sequence[int]) -> tuple:
    """Defender's view of a history: class ids interleaved with action observations.

    Invisible actions all map to the single symbol ``INVISIBLE_ACTION``.
    """
    out: list = []
    for i, x in enumerate(h):
        if i % 2 == 0:
            out.append(obs.class_index(x))
        else:
            out.append(x if obs.action_visible else INVISIBLE_ACTION)
    return tuple(out)


def occ(h: Sequence[int]) -> frozenset[int]:
    return frozenset(h[0::2])


# -- JSON model files ----------------------------------------------------------

MODEL_KEYS = {"states", "actions", "enabled", "trans", "initial", "objectives", "observation"}


@dataclass
class Model:
    """A loaded model file: MDP plus named objectives and an observation model."""

    mdp: Mdp
    objectives: dict[str, ReachAvoidObjective]
    observation: ObservationModel | None
    meta: dict = field(default_factory=dict)


def model_from_dict(d: dict) -> Model:
    unknown = set(d) - MODEL_KEYS - {"meta"}
    if unknown:
        raise ModelError(f"unknown keys in model: {sorted(unknown)}")
    for k in ("states", "actions", "enabled", "trans", "initial"):
        if k not in d:
            raise ModelError(f"model is missing {k!r}")
    trans = {}
    for key, dist in d["trans"].items():
        s, sep, a = key.rpartition(",")
        if not sep:
            raise ModelError(f"transition key {key!r} is not 's,a'")
        trans[(s, a)] = dist
    m = Mdp.from_names(d["states"], d["actions"], d["enabled"], trans, d["initial"])
    objectives = {}
    for name, o in d.get("objectives", {}).items():
        extra = set(o) - {"unsafe", "target"}
        if extra:
            raise ModelError(f"unknown keys in objective {name!r}: {sorted(extra)}")
        objectives[name] = ReachAvoidObjective.from_names(m, o.get("unsafe", ()), o.get("target", ()))
    observation = None
    if "observation" in d:
        o = d["observation"]
        extra = set(o) - {"classes", "action_visible"}
        if extra:
            raise ModelError(f"unknown keys in observation: {sorted(extra)}")
        observation = ObservationModel.from_names(m, o["classes"], bool(o.get("action_visible", True)))
    return Model(m, objectives, observation, dict(d.get("meta", {})))


def model_to_dict(model: Model) -> dict:
    m = model.mdp
    d: dict = {
        "states": list(m.states),
        "actions": list(m.actions),
        "enabled": {m.states[s]: [m.actions[a] for a in m.enabled[s]] for s in range(m.n_states)},
        "trans": {
            f"{m.states[s]},{m.actions[a]}": {m.states[t]: p for t, p in row}
            for (s, a), row in sorted(m.trans.items())
        },
        "initial": m.states[m.initial],
    }
    if model.objectives:
        d["objectives"] = {
            k: {"unsafe": m.names(o.unsafe), "target": m.names(o.target)}
            for k, o in model.objectives.items()
        }
    if model.observation is not None:
        d["observation"] = {
            "classes": [m.names(c) for c in model.observation.classes],
            "action_visible": model.observation.action_visible,
        }
    if model.meta:
        d["meta"] = model.meta
    return d


def load_model(path) -> Model:
    with open(path) as f:
        return model_from_dict(json.load(f))


def dump_model(model: Model, path) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=1, sort_keys=False)
        f.write("\n")
