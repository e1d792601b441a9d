"""Escape-room simulator: radial levers, schema-driven locks, attempts and trials.

The room has 7 levers on radial tracks plus a door. Grey levers carry causal
roles in the door's locking mechanism; white levers are permanently locked.
An attempt is exactly 3 actions, after which all fluents reset; a trial is a
budget of attempts in one room, over when every solution has been found or
the budget is spent.
"""
from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, replace

import numpy as np

NUM_LEVERS = 7
ACTIONS_PER_ATTEMPT = 3
DEFAULT_ATTEMPT_BUDGET = 30


class ConfigurationError(ValueError):
    """Invalid trial configuration (duplicate positions, arity mismatch...)."""


class ProtocolError(RuntimeError):
    """Action applied to an exhausted attempt or finished trial."""


class Position(enum.IntEnum):
    """Radial lever slots; index 0 is upper-right, proceeding counter-clockwise."""

    UPPER_RIGHT = 0
    UPPER = 1
    UPPER_LEFT = 2
    LEFT = 3
    LOWER_LEFT = 4
    LOWER = 5
    LOWER_RIGHT = 6


class Color(enum.Enum):
    GREY = "GREY"
    WHITE = "WHITE"


class Verb(enum.Enum):
    PUSH = "push"
    PULL = "pull"


# Fluent value labels used in observations and causal-event transitions.
PUSHED, PULLED = "PUSHED", "PULLED"
LOCKED, UNLOCKED = "LOCKED", "UNLOCKED"
OPEN, CLOSED = "OPEN", "CLOSED"
DOOR = "door"


@dataclass(frozen=True)
class Action:
    """Push/pull on a lever position, or a push on the door (target=None)."""

    verb: Verb
    target: Position | None = None

    def __post_init__(self):
        if self.target is None and self.verb is not Verb.PUSH:
            raise ConfigurationError("the door can only be pushed")

    @property
    def is_door(self) -> bool:
        return self.target is None

    def __str__(self) -> str:
        name = DOOR if self.target is None else self.target.name
        return f"{self.verb.value}:{name}"

    @classmethod
    def parse(cls, text: str) -> "Action":
        verb, _, name = text.partition(":")
        target = None if name == DOOR else Position[name]
        return cls(Verb(verb), target)


def push(position: Position) -> Action:
    return Action(Verb.PUSH, position)


def pull(position: Position) -> Action:
    return Action(Verb.PULL, position)


PUSH_DOOR = Action(Verb.PUSH, None)

#: The full action space: 7 levers x {push, pull} plus the door push.
ALL_ACTIONS: tuple[Action, ...] = tuple(
    Action(verb, pos) for pos in Position for verb in (Verb.PUSH, Verb.PULL)
) + (PUSH_DOOR,)


class SchemaKind(enum.Enum):
    """Locking-mechanism topology and arity.

    CC: one shared cause unlocks every child lever, any pushed child unlocks
    the door. CE: any pushed root lever unlocks the shared effect lever,
    which alone unlocks the door.
    """

    CC3 = "CC3"
    CE3 = "CE3"
    CC4 = "CC4"
    CE4 = "CE4"

    @property
    def n_roles(self) -> int:
        return int(self.value[2])

    @property
    def n_solutions(self) -> int:
        return self.n_roles - 1

    @property
    def is_common_cause(self) -> bool:
        return self.value.startswith("CC")


ROLE_NAMES = ("L0", "L1", "L2", "L3")


@dataclass(frozen=True)
class TrialConfig:
    """One room: a schema plus the assignment of causal roles to positions."""

    schema: SchemaKind
    roles: tuple[Position, ...]  # roles[i] is the position of role Li
    trial_id: str = ""

    def __post_init__(self):
        if len(self.roles) != self.schema.n_roles:
            raise ConfigurationError(
                f"{self.schema.value} needs {self.schema.n_roles} roles, "
                f"got {len(self.roles)}"
            )
        if len(set(self.roles)) != len(self.roles):
            raise ConfigurationError(f"duplicate role positions: {self.roles}")

    def color(self, position: Position) -> Color:
        return Color.GREY if position in self.roles else Color.WHITE

    @property
    def grey_positions(self) -> frozenset[Position]:
        return frozenset(self.roles)

    @property
    def levers(self) -> tuple[tuple[Position, Color], ...]:
        return tuple((pos, self.color(pos)) for pos in Position)

    def to_json_dict(self) -> dict:
        return {
            "schema": self.schema.value,
            "role_map": {ROLE_NAMES[i]: pos.name for i, pos in enumerate(self.roles)},
            "trial_id": self.trial_id,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrialConfig":
        schema = SchemaKind(doc["schema"])
        role_map = doc["role_map"]
        roles = tuple(
            Position[role_map[ROLE_NAMES[i]]] for i in range(len(role_map))
        )
        return cls(schema=schema, roles=roles, trial_id=doc.get("trial_id", ""))


@dataclass(frozen=True)
class Transition:
    """One fluent change produced by an action: (entity, fluent, before, after)."""

    entity: str
    fluent: str
    before: str
    after: str

    def to_json_dict(self) -> dict:
        return {
            "entity": self.entity,
            "fluent": self.fluent,
            "before": self.before,
            "after": self.after,
        }


@dataclass(frozen=True)
class CausalEvent:
    """An executed action plus the fluent transitions it produced.

    An empty transition tuple means the action caused no event.
    """

    action: Action
    transitions: tuple[Transition, ...] = ()
    door_opened: bool = False
    solution: tuple[Action, ...] | None = None  # recorded only when novel
    already_found: bool = False

    @property
    def occurred(self) -> bool:
        return bool(self.transitions)

    def to_json_dict(self) -> dict:
        return {
            "action": str(self.action),
            "transitions": [t.to_json_dict() for t in self.transitions],
            "door_opened": self.door_opened,
            "solution": [str(a) for a in self.solution] if self.solution else None,
            "already_found": self.already_found,
        }


def _locked_mask(config: TrialConfig, pushed: tuple[bool, ...]) -> tuple[bool, ...]:
    """Lock status of every lever as a pure function of lever statuses.

    White levers are permanently locked; grey locks follow the schema graph.
    """
    locked = [True] * NUM_LEVERS
    roles = config.roles
    if config.schema.is_common_cause:
        locked[roles[0]] = False
        children_unlocked = pushed[roles[0]]
        for child in roles[1:]:
            locked[child] = not children_unlocked
    else:
        effect = roles[-1]
        for root in roles[:-1]:
            locked[root] = False
        locked[effect] = not any(pushed[root] for root in roles[:-1])
    return tuple(locked)


def _door_locked(config: TrialConfig, pushed: tuple[bool, ...]) -> bool:
    roles = config.roles
    if config.schema.is_common_cause:
        return not any(pushed[child] for child in roles[1:])
    return not pushed[roles[-1]]


@dataclass(frozen=True)
class EnvState:
    """Immutable simulator state; `step` returns a new value."""

    config: TrialConfig
    pushed: tuple[bool, ...] = (False,) * NUM_LEVERS
    door_open: bool = False
    actions_left: int = ACTIONS_PER_ATTEMPT
    attempts_left: int = DEFAULT_ATTEMPT_BUDGET
    found_solutions: tuple[tuple[Action, ...], ...] = ()
    attempt_actions: tuple[Action, ...] = ()

    @property
    def locked(self) -> tuple[bool, ...]:
        return _locked_mask(self.config, self.pushed)

    @property
    def door_locked(self) -> bool:
        return _door_locked(self.config, self.pushed)

    @property
    def trial_complete(self) -> bool:
        return len(self.found_solutions) == self.config.schema.n_solutions

    @property
    def trial_over(self) -> bool:
        return self.trial_complete or self.attempts_left == 0


def new_trial(config: TrialConfig, attempt_budget: int = DEFAULT_ATTEMPT_BUDGET) -> EnvState:
    """Fresh room: all levers pulled, locks derived from the schema, door shut."""
    if attempt_budget < 1:
        raise ConfigurationError("attempt budget must be positive")
    return EnvState(config=config, attempts_left=attempt_budget)


def _reset_fluents(state: EnvState) -> EnvState:
    return replace(
        state,
        pushed=(False,) * NUM_LEVERS,
        door_open=False,
        actions_left=ACTIONS_PER_ATTEMPT,
        attempt_actions=(),
    )


def step(state: EnvState, action: Action) -> tuple[EnvState, CausalEvent]:
    """Apply one action; the attempt auto-resets after its third action.

    The returned event captures every fluent transition the action produced,
    including lock recomputations. The returned state is post-reset if the
    action exhausted the attempt.
    """
    if state.trial_complete:
        raise ProtocolError("trial already complete")
    if state.attempts_left <= 0:
        raise ProtocolError("attempt budget exhausted")
    if state.actions_left <= 0:  # unreachable under auto-reset; guards misuse
        raise ProtocolError("attempt has no actions left")

    locked_before = state.locked
    door_locked_before = state.door_locked
    transitions: list[Transition] = []
    pushed = list(state.pushed)
    door_open = state.door_open
    door_opened = False
    solution: tuple[Action, ...] | None = None
    already_found = False
    executed = state.attempt_actions + (action,)

    if action.is_door:
        if not door_locked_before and not door_open:
            door_open = True
            door_opened = True
            transitions.append(Transition(DOOR, "open_status", CLOSED, OPEN))
            if executed in state.found_solutions:
                already_found = True
            else:
                solution = executed
    else:
        idx = int(action.target)
        if not locked_before[idx]:
            if action.verb is Verb.PUSH and not pushed[idx]:
                pushed[idx] = True
                transitions.append(
                    Transition(action.target.name, "lever_status", PULLED, PUSHED)
                )
            elif action.verb is Verb.PULL and pushed[idx]:
                pushed[idx] = False
                transitions.append(
                    Transition(action.target.name, "lever_status", PUSHED, PULLED)
                )

    pushed_t = tuple(pushed)
    locked_after = _locked_mask(state.config, pushed_t)
    for pos in Position:
        if locked_before[pos] != locked_after[pos]:
            before, after = (
                (LOCKED, UNLOCKED) if locked_before[pos] else (UNLOCKED, LOCKED)
            )
            transitions.append(Transition(pos.name, "lock_status", before, after))
    door_locked_after = _door_locked(state.config, pushed_t)
    if door_locked_before != door_locked_after:
        before, after = (
            (LOCKED, UNLOCKED) if door_locked_before else (UNLOCKED, LOCKED)
        )
        transitions.append(Transition(DOOR, "lock_status", before, after))

    found = state.found_solutions + ((solution,) if solution else ())
    next_state = replace(
        state,
        pushed=pushed_t,
        door_open=door_open,
        actions_left=state.actions_left - 1,
        attempt_actions=executed,
        found_solutions=found,
    )
    if next_state.actions_left == 0:
        next_state = _reset_fluents(
            replace(next_state, attempts_left=state.attempts_left - 1)
        )

    event = CausalEvent(
        action=action,
        transitions=tuple(transitions),
        door_opened=door_opened,
        solution=solution,
        already_found=already_found,
    )
    return next_state, event


def run_sequence(
    state: EnvState, actions: list[Action] | tuple[Action, ...]
) -> tuple[EnvState, list[CausalEvent]]:
    """Convenience: apply actions in order, collecting events."""
    events = []
    for action in actions:
        state, event = step(state, action)
        events.append(event)
    return state, events


def encode_observation(state: EnvState) -> np.ndarray:
    """16-bit observation: 7 lever statuses, 7 colors, door open, door lock.

    Bit order is part of the public contract: indices 0-6 are lever statuses
    (PUSHED=1) by position index, 7-13 lever colors (GREY=1), 14 door open
    (OPEN=1), 15 the door lock indicator (LOCKED=1).
    """
    obs = np.zeros(16, dtype=np.int8)
    for pos in Position:
        obs[int(pos)] = int(state.pushed[pos])
        obs[NUM_LEVERS + int(pos)] = int(state.config.color(pos) is Color.GREY)
    obs[14] = int(state.door_open)
    obs[15] = int(state.door_locked)
    return obs


def solution_oracle(config: TrialConfig) -> tuple[tuple[Action, ...], ...]:
    """Ground-truth solutions, ordered by the varying role index.

    CC-k: push the shared cause, then any child, then the door.
    CE-k: push any root, then the shared effect, then the door.
    """
    roles = config.roles
    if config.schema.is_common_cause:
        pairs = [(roles[0], child) for child in roles[1:]]
    else:
        pairs = [(root, roles[-1]) for root in roles[:-1]]
    return tuple((push(a), push(b), PUSH_DOOR) for a, b in pairs)


class SequenceKind(enum.Enum):
    TRAINING3 = "TRAINING3"
    TRANSFER4 = "TRANSFER4"


_TRIALS_PER_SEQUENCE = {SequenceKind.TRAINING3: 6, SequenceKind.TRANSFER4: 5}

# Canonical seed-0 room layouts (role positions by index). The original
# human-study layouts were never published, so these fixed lists define the
# reference rooms; other seeds sample fresh layouts.
_CANONICAL_ROLES_3 = (
    (1, 3, 5),
    (0, 2, 4),
    (2, 5, 0),
    (3, 6, 1),
    (4, 0, 3),
    (5, 1, 6),
)
_CANONICAL_ROLES_4 = (
    (1, 3, 5, 0),
    (2, 4, 6, 1),
    (0, 3, 6, 2),
    (4, 1, 5, 3),
    (6, 2, 0, 5),
)


def standard_trial_sequence(
    kind: SequenceKind, schema: SchemaKind, seed: int = 0
) -> list[TrialConfig]:
    """Deterministic, seed-reproducible room list for one condition phase."""
    expected_roles = 3 if kind is SequenceKind.TRAINING3 else 4
    if schema.n_roles != expected_roles:
        raise ConfigurationError(
            f"{kind.value} requires a {expected_roles}-lever schema, got {schema.value}"
        )
    count = _TRIALS_PER_SEQUENCE[kind]
    if seed == 0:
        canonical = _CANONICAL_ROLES_3 if expected_roles == 3 else _CANONICAL_ROLES_4
        role_tuples = canonical[:count]
    else:
        rng = random.Random(seed)
        pool = list(itertools.permutations(Position, expected_roles))
        role_tuples = rng.sample(pool, count)
    return [
        TrialConfig(
            schema=schema,
            roles=tuple(Position(i) for i in roles),
            trial_id=f"{schema.value}-s{seed}-t{index}",
        )
        for index, roles in enumerate(role_tuples)
    ]
