"""Slip gridworld composed with a probabilistic sensor scheduler.

Cells are numbered row-major from the top-left corner. A move succeeds with
probability ``p``; otherwise the agent slips to one of the two perpendicular
neighbours with probability ``(1 - p) / 2`` each. Moves into the outer wall
leave the agent in place. Obstacles trap the agent forever.

The defender sees the scheduler state and the active sensor's reading. A
Boolean sensor reports whether the agent is inside the active coverage; a
precise sensor reports the covered cell itself.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .mdp import Mdp, Model, ModelError, ObservationModel, ReachAvoidObjective

MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}
PERPENDICULAR = {
    "up": ("left", "right"),
    "down": ("left", "right"),
    "left": ("up", "down"),
    "right": ("up", "down"),
}
BOOLEAN = "boolean"
PRECISE = "precise"


@dataclass(frozen=True)
class GridSpec:
    rows: int = 5
    cols: int = 5
    obstacles: frozenset[int] = frozenset({1, 7, 16, 17})
    p: float = 0.8
    user_unsafe: frozenset[int] = frozenset({1, 4, 7, 16, 17})
    user_target: frozenset[int] = frozenset({0})
    attacker_unsafe: frozenset[int] = frozenset({1, 7, 16, 17})
    attacker_target: frozenset[int] = frozenset({4})

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ModelError(f"slip parameter p must lie in (0, 1], got {self.p}")
        n = self.rows * self.cols
        for name in ("obstacles", "user_unsafe", "user_target", "attacker_unsafe", "attacker_target"):
            bad = [c for c in getattr(self, name) if not 0 <= c < n]
            if bad:
                raise ModelError(f"{name} references cells outside the grid: {sorted(bad)}")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def step(self, cell: int, move: str) -> int:
        r, c = divmod(cell, self.cols)
        dr, dc = MOVES[move]
        r2, c2 = r + dr, c + dc
        if 0 <= r2 < self.rows and 0 <= c2 < self.cols:
            return r2 * self.cols + c2
        return cell

    def move_dist(self, cell: int, move: str) -> dict[int, float]:
        """Distribution over the next cell for ``move`` taken at ``cell``."""
        if cell in self.obstacles:
            return {cell: 1.0}
        out: dict[int, float] = {}
        out[self.step(cell, move)] = self.p
        slip = (1.0 - self.p) / 2
        if slip > 0:
            for side in PERPENDICULAR[move]:
                t = self.step(cell, side)
                out[t] = out.get(t, 0.0) + slip
        return out


@dataclass(frozen=True)
class SensorSpec:
    """Markov scheduler over sensor states and the coverage active in each."""

    coverage: tuple[frozenset[int], ...]
    scheduler: tuple[tuple[float, ...], ...] | None = None
    kind: str = BOOLEAN

    def __post_init__(self):
        if self.kind not in (BOOLEAN, PRECISE):
            raise ModelError(f"unknown sensor kind {self.kind!r}")
        if self.scheduler is None:
            object.__setattr__(self, "scheduler", cyclic_scheduler(len(self.coverage)))
        if len(self.scheduler) != len(self.coverage):
            raise ModelError("scheduler and coverage disagree on the number of sensor states")
        for q, row in enumerate(self.scheduler):
            if len(row) != len(self.coverage) or abs(sum(row) - 1.0) > 1e-9 or min(row) < 0:
                raise ModelError(f"scheduler row {q} is not a distribution")

    @property
    def n_modes(self) -> int:
        return len(self.coverage)

    def reading(self, q: int, cell: int):
        if cell not in self.coverage[q]:
            return "out"
        return "in" if self.kind == BOOLEAN else cell


def cyclic_scheduler(n: int, stay: float = 0.5) -> tuple[tuple[float, ...], ...]:
    """Scheduler that stays put with probability ``stay`` and otherwise advances cyclically."""
    if n == 1:
        return ((1.0,),)
    rows = []
    for q in range(n):
        row = [0.0] * n
        row[q] += stay
        row[(q + 1) % n] += 1.0 - stay
        rows.append(tuple(row))
    return tuple(rows)


# Sensor coverages for the three benchmark configurations, indexed by scheduler
# state (state names count from 1, indices from 0).
COVERAGES = {
    "a": ({0, 1, 2, 3, 4}, {3, 8, 13, 18, 23}, {15, 16, 17, 18, 19}, {1, 6, 11, 16, 21}),
    "b": ({5, 6, 7, 8, 9}, {3, 8, 13, 18, 23}, {5, 6, 7, 8, 9}, {3, 8, 13, 18, 23}),
    "c": ({0, 1, 2, 5, 6, 7}, {22, 23, 24}, {0, 1, 2, 5, 6, 7}, {22, 23, 24}),
}


def sensor_config(config: str, kind: str = BOOLEAN) -> SensorSpec:
    try:
        cov = COVERAGES[config]
    except KeyError:
        raise ModelError(f"unknown sensor configuration {config!r}") from None
    return SensorSpec(tuple(frozenset(c) for c in cov), kind=kind)


def state_name(cell: int, q: int) -> str:
    return f"{cell}.{q + 1}"


@dataclass
class Scenario:
    grid: GridSpec
    sensor: SensorSpec
    model: Model
    name: str = "grid"

    @property
    def mdp(self) -> Mdp:
        return self.model.mdp

    @property
    def observation(self) -> ObservationModel:
        return self.model.observation

    @property
    def user(self) -> ReachAvoidObjective:
        return self.model.objectives["user"]

    @property
    def attacker(self) -> ReachAvoidObjective:
        return self.model.objectives["attacker"]

    def state(self, cell: int, q: int) -> int:
        return cell * self.sensor.n_modes + q

    def cell_of(self, s: int) -> int:
        return s // self.sensor.n_modes

    def mode_of(self, s: int) -> int:
        return s % self.sensor.n_modes


def build_scenario(g: GridSpec, sensor: SensorSpec, action_visible: bool = False,
                   name: str = "grid", start: int | None = None) -> Scenario:
    """Product of grid and scheduler, with observation classes keyed by (q, reading).

    ``start`` is the initial cell (scheduler state 1); by default the first
    cell that is neither an obstacle nor a goal.
    """
    for q, cov in enumerate(sensor.coverage):
        bad = sorted(c for c in cov if not 0 <= c < g.n_cells)
        if bad:
            raise ModelError(f"coverage of sensor state {q + 1} references unknown cells {bad}")
    nq = sensor.n_modes
    actions = tuple(MOVES)
    states = tuple(state_name(c, q) for c in range(g.n_cells) for q in range(nq))
    trans = {}
    for c in range(g.n_cells):
        for q in range(nq):
            s = c * nq + q
            for a, move in enumerate(actions):
                row = []
                for c2, pc in sorted(g.move_dist(c, move).items()):
                    for q2, pq in enumerate(sensor.scheduler[q]):
                        if pq > 0 and pc > 0:
                            row.append((c2 * nq + q2, pc * pq))
                trans[(s, a)] = tuple(row)
    enabled = tuple(tuple(range(len(actions))) for _ in states)
    if start is None:
        skip = g.obstacles | g.user_target | g.attacker_target
        start = next((c for c in range(g.n_cells) if c not in skip), 0)
    if not 0 <= start < g.n_cells:
        raise ModelError(f"start cell {start} is outside the grid")
    m = Mdp(states, actions, enabled, trans, start * nq)

    classes: dict[tuple, set[int]] = {}
    for c in range(g.n_cells):
        for q in range(nq):
            classes.setdefault((q, sensor.reading(q, c)), set()).add(c * nq + q)
    keys = sorted(classes, key=lambda k: (k[0], str(k[1])))
    obs = ObservationModel(tuple(frozenset(classes[k]) for k in keys), action_visible)

    def lift(cells):
        return frozenset(c * nq + q for c in cells for q in range(nq))

    objectives = {
        "user": ReachAvoidObjective(lift(g.user_unsafe), lift(g.user_target)),
        "attacker": ReachAvoidObjective(lift(g.attacker_unsafe), lift(g.attacker_target)),
    }
    meta = {
        "id": name,
        "grid": {"rows": g.rows, "cols": g.cols, "p": g.p, "obstacles": sorted(g.obstacles)},
        "sensor": {"kind": sensor.kind, "coverage": [sorted(c) for c in sensor.coverage]},
        # the defender knows where the agent starts
        "initial_belief": "singleton",
    }
    return Scenario(g, sensor, Model(m, objectives, obs, meta), name)


def scenario_tag(config: str, kind: str, action_visible: bool) -> str:
    return f"({config})-{'B' if kind == BOOLEAN else 'P'}-{'V' if action_visible else 'I'}"


def benchmark_scenario(config: str, kind: str = BOOLEAN, action_visible: bool = False,
                   p: float = 0.8, start: int = 20) -> Scenario:
    tag = scenario_tag(config, kind, action_visible)
    return build_scenario(GridSpec(p=p), sensor_config(config, kind), action_visible, tag, start)


def scenario_from_dict(d: dict) -> Scenario:
    """Custom scenario spec (JSON): grid geometry, objectives, coverages, scheduler."""
    allowed = {"rows", "cols", "obstacles", "p", "user", "attacker", "sensor", "action_visible",
               "name", "start"}
    extra = set(d) - allowed
    if extra:
        raise ModelError(f"unknown keys in scenario spec: {sorted(extra)}")
    user = d.get("user", {})
    att = d.get("attacker", {})
    g = GridSpec(
        rows=int(d.get("rows", 5)),
        cols=int(d.get("cols", 5)),
        obstacles=frozenset(d.get("obstacles", ())),
        p=float(d.get("p", 0.8)),
        user_unsafe=frozenset(user.get("unsafe", ())),
        user_target=frozenset(user.get("target", ())),
        attacker_unsafe=frozenset(att.get("unsafe", ())),
        attacker_target=frozenset(att.get("target", ())),
    )
    sd = d.get("sensor", {})
    sched = sd.get("scheduler")
    sensor = SensorSpec(
        tuple(frozenset(c) for c in sd.get("coverage", [[]])),
        tuple(tuple(r) for r in sched) if sched is not None else None,
        sd.get("kind", BOOLEAN),
    )
    return build_scenario(g, sensor, bool(d.get("action_visible", False)), d.get("name", "custom"),
                          d.get("start"))


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return scenario_from_dict(json.load(f))
