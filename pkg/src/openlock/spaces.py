"""Causal hypothesis spaces: chains, schema hierarchy structures, graph edits.

Chains are goal-directed three-step hypotheses (two distinct lever moves then
the door). Schema structures come in three granularities: atomic topologies,
abstract role structures sized to the trial's solution count, and abstract
structures bound to concrete lever positions.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .environment import (
    CLOSED,
    DOOR,
    LOCKED,
    OPEN,
    PULLED,
    PUSHED,
    UNLOCKED,
    Action,
    Color,
    Position,
    TrialConfig,
    Verb,
    push,
    PUSH_DOOR,
)

Lever = tuple[Position, Color]


class CapabilityError(ValueError):
    """Inputs exceed what the exact brute-force algorithms support."""


@dataclass(frozen=True)
class Subchain:
    """One hypothesised action step: action, target identity, fluent relations.

    ``cr_action`` is the transition the action drives on its target's primary
    fluent; ``cr_lock`` is the transition induced on the target's lock by the
    preceding step (already-unlocked for the opening step of a chain).
    """

    action: Action
    attributes: Lever | None  # (position, color), None for the door
    cr_action: tuple[str, str]
    cr_lock: tuple[str, str]


def lever_subchain(verb: Verb, lever: Lever, index: int) -> Subchain:
    cr_action = (PULLED, PUSHED) if verb is Verb.PUSH else (PUSHED, PULLED)
    cr_lock = (UNLOCKED, UNLOCKED) if index == 0 else (LOCKED, UNLOCKED)
    return Subchain(Action(verb, lever[0]), lever, cr_action, cr_lock)


def door_subchain() -> Subchain:
    return Subchain(PUSH_DOOR, None, (CLOSED, OPEN), (LOCKED, UNLOCKED))


@dataclass(frozen=True)
class CausalChain:
    """A full three-step goal hypothesis, door-terminated."""

    subchains: tuple[Subchain, Subchain, Subchain]

    @property
    def actions(self) -> tuple[Action, Action, Action]:
        return tuple(sc.action for sc in self.subchains)

    def matches_prefix(self, actions: tuple[Action, ...]) -> bool:
        return self.actions[: len(actions)] == actions


@dataclass
class ChainSpace:
    """Enumerated goal chains with per-chain alive/pruned flags."""

    chains: list[CausalChain]
    alive: np.ndarray  # bool per chain; pruned chains never revive in-trial
    index_by_actions: dict[tuple[Action, ...], int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index_by_actions:
            self.index_by_actions = {
                chain.actions: i for i, chain in enumerate(self.chains)
            }

    def __len__(self) -> int:
        return len(self.chains)

    @property
    def alive_count(self) -> int:
        return int(self.alive.sum())

    def chain_index(self, actions: tuple[Action, ...]) -> int | None:
        return self.index_by_actions.get(tuple(actions))

    def to_json_lines(self) -> list[str]:
        import json

        lines = []
        for i, chain in enumerate(self.chains):
            lines.append(
                json.dumps(
                    {
                        "index": i,
                        "actions": [str(a) for a in chain.actions],
                        "alive": bool(self.alive[i]),
                    }
                )
            )
        return lines


def enumerate_chains(trial: TrialConfig) -> ChainSpace:
    """All door-terminated chains over the trial's levers (168 for 7 levers)."""
    return enumerate_chains_over(trial.levers)


def enumerate_chains_over(levers: tuple[Lever, ...]) -> ChainSpace:
    chains = []
    door = door_subchain()
    for first, second in itertools.permutations(levers, 2):
        for verb0 in (Verb.PUSH, Verb.PULL):
            for verb1 in (Verb.PUSH, Verb.PULL):
                chains.append(
                    CausalChain(
                        (
                            lever_subchain(verb0, first, 0),
                            lever_subchain(verb1, second, 1),
                            door,
                        )
                    )
                )
    return ChainSpace(chains=chains, alive=np.ones(len(chains), dtype=bool))


def prune_failures(space: ChainSpace, failed_actions: tuple[Action, ...]) -> int:
    """Mark every alive chain whose action prefix equals the failed sequence.

    Returns the number of chains newly pruned. Idempotent.
    """
    if not failed_actions:
        raise ValueError("failed action sequence must be nonempty")
    pruned = 0
    for i, chain in enumerate(space.chains):
        if space.alive[i] and chain.matches_prefix(tuple(failed_actions)):
            space.alive[i] = False
            pruned += 1
    return pruned


# ---------------------------------------------------------------------------
# Directed graphs and exact graph edit distance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Digraph:
    """A small directed graph on hashable node labels."""

    nodes: frozenset
    edges: frozenset  # of (u, v) pairs

    def __post_init__(self):
        for u, v in self.edges:
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge ({u}, {v}) references unknown node")

    @classmethod
    def from_edges(cls, edges, extra_nodes=()) -> "Digraph":
        edges = frozenset(tuple(e) for e in edges)
        nodes = frozenset(itertools.chain(extra_nodes, *((u, v) for u, v in edges)))
        return cls(nodes=nodes, edges=edges)

    def without_node(self, node) -> "Digraph":
        return Digraph(
            nodes=self.nodes - {node},
            edges=frozenset(e for e in self.edges if node not in e),
        )


_GED_NODE_LIMIT = 8


def graph_edit_distance(g1: Digraph, g2: Digraph) -> int:
    """Exact minimal edit cost between unlabeled digraphs.

    Node insert/delete and edge insert/delete each cost 1; node substitution
    is free. Brute force over all partial injective node mappings; exact but
    only feasible for small graphs.
    """
    if len(g1.nodes) > _GED_NODE_LIMIT or len(g2.nodes) > _GED_NODE_LIMIT:
        raise CapabilityError(
            f"graphs above {_GED_NODE_LIMIT} nodes exceed the brute-force bound"
        )
    n1, n2 = sorted((g1, g2), key=lambda g: len(g.nodes))
    nodes1, nodes2 = list(n1.nodes), list(n2.nodes)
    best = len(nodes1) + len(nodes2) + len(n1.edges) + len(n2.edges)
    for k in range(len(nodes1) + 1):
        node_cost = (len(nodes1) - k) + (len(nodes2) - k)
        if node_cost >= best:
            continue
        for subset in itertools.combinations(nodes1, k):
            for image in itertools.permutations(nodes2, k):
                mapping = dict(zip(subset, image))
                matched = sum(
                    1
                    for (u, v) in n1.edges
                    if u in mapping and v in mapping and (mapping[u], mapping[v]) in n2.edges
                )
                cost = node_cost + (len(n1.edges) - matched) + (len(n2.edges) - matched)
                if cost < best:
                    best = cost
    return best


def solution_structure(found_solutions) -> Digraph:
    """Union graph of the discovered solutions: lever -> lever -> door edges."""
    if not found_solutions:
        raise ValueError("needs at least one discovered solution")
    edges = set()
    for seq in found_solutions:
        first, second = seq[0].target, seq[1].target
        edges.add((first.name, second.name))
        edges.add((second.name, "D"))
    return Digraph.from_edges(edges)


def role_structure(structure: Digraph) -> Digraph:
    """Solution structure with the door node stripped, for schema comparison."""
    return structure.without_node("D")


# ---------------------------------------------------------------------------
# Atomic, abstract and instantiated schema structures
# ---------------------------------------------------------------------------


class AtomicSchema(enum.Enum):
    CHAIN = "CHAIN"
    CC = "CC"
    CE = "CE"

    @property
    def graph(self) -> Digraph:
        return _ATOMIC_GRAPHS[self]


_ATOMIC_GRAPHS = {
    AtomicSchema.CHAIN: Digraph.from_edges([("A", "B"), ("B", "C")]),
    AtomicSchema.CC: Digraph.from_edges([("A", "B"), ("A", "C")]),
    AtomicSchema.CE: Digraph.from_edges([("A", "C"), ("B", "C")]),
}

ATOMIC_ORDER = (AtomicSchema.CHAIN, AtomicSchema.CC, AtomicSchema.CE)


@dataclass(frozen=True)
class AbstractSchema:
    """N role trajectories (cause slot, effect slot) feeding the door.

    Roles are canonical integers; a role id is used in only one slot across
    the whole schema, so the role graph is bipartite cause->effect.
    """

    trajectories: tuple[tuple[int, int], ...]

    @property
    def n_solutions(self) -> int:
        return len(self.trajectories)

    @property
    def role_graph(self) -> Digraph:
        return Digraph.from_edges(self.trajectories)

    @property
    def n_roles(self) -> int:
        return len({r for traj in self.trajectories for r in traj})

    def is_shared_cause(self) -> bool:
        return len({a for a, _ in self.trajectories}) == 1

    def is_shared_effect(self) -> bool:
        return len({b for _, b in self.trajectories}) == 1


def _canonical_schema(trajectories) -> AbstractSchema:
    ordered = sorted(trajectories)
    renamed: dict[int, int] = {}
    out = []
    for a, b in ordered:
        for r in (a, b):
            if r not in renamed:
                renamed[r] = len(renamed)
        out.append((renamed[a], renamed[b]))
    return AbstractSchema(trajectories=tuple(sorted(out)))


def _set_partitions(items: tuple[int, ...]):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for partial in _set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [partial[i] | {head}] + partial[i + 1 :]
        yield partial + [{head}]


def enumerate_abstract_schemas(n_solutions: int) -> list[AbstractSchema]:
    """All role structures with N distinct trajectories, up to role renaming.

    Cause-slot and effect-slot role sharing are chosen independently (a lever
    role keeps its structural position across trajectories); labelings whose
    sharing patterns would duplicate a trajectory are dropped.
    """
    if n_solutions not in (2, 3):
        raise CapabilityError(f"unsupported solution count {n_solutions}")
    slots = tuple(range(n_solutions))
    schemas = set()
    for cause_blocks in _set_partitions(slots):
        for effect_blocks in _set_partitions(slots):
            cause_role = {s: i for i, block in enumerate(cause_blocks) for s in block}
            offset = len(cause_blocks)
            effect_role = {
                s: offset + i for i, block in enumerate(effect_blocks) for s in block
            }
            trajectories = [(cause_role[s], effect_role[s]) for s in slots]
            if len(set(trajectories)) != n_solutions:
                continue
            schemas.add(_canonical_schema(trajectories))
    return sorted(schemas, key=lambda s: s.trajectories)


#: Ordered pair of lever positions; with the implicit trailing door push it
#: names one candidate solution.
Trajectory = tuple[Position, Position]


@dataclass(frozen=True)
class InstantiatedSchema:
    """An abstract schema bound injectively to this room's lever positions."""

    abstract_index: int
    trajectories: frozenset[Trajectory]

    def contains(self, trajectory: Trajectory) -> bool:
        return trajectory in self.trajectories


def instantiate_schemas(
    schema: AbstractSchema,
    trial: TrialConfig,
    found_solutions=(),
    abstract_index: int = 0,
) -> list[InstantiatedSchema]:
    """All injective role bindings whose trajectory set covers the found ones."""
    required = frozenset(solution_to_trajectory(seq) for seq in found_solutions)
    positions = tuple(p for p, _ in trial.levers)
    out = []
    for inst in _instantiations(schema.trajectories, positions, abstract_index):
        if required <= inst.trajectories:
            out.append(inst)
    return out


def _instantiations(
    trajectories: tuple[tuple[int, int], ...],
    positions: tuple[Position, ...],
    abstract_index: int,
) -> list[InstantiatedSchema]:
    roles = sorted({r for traj in trajectories for r in traj})
    seen = set()
    out = []
    for binding in itertools.permutations(positions, len(roles)):
        bound = {role: pos for role, pos in zip(roles, binding)}
        traj_set = frozenset((bound[a], bound[b]) for a, b in trajectories)
        if len(traj_set) != len(trajectories) or traj_set in seen:
            continue
        seen.add(traj_set)
        out.append(
            InstantiatedSchema(abstract_index=abstract_index, trajectories=traj_set)
        )
    return out


def solution_to_trajectory(seq) -> Trajectory:
    return (seq[0].target, seq[1].target)


def trajectory_to_actions(traj: Trajectory) -> tuple[Action, Action, Action]:
    return (push(traj[0]), push(traj[1]), PUSH_DOOR)


@dataclass(frozen=True)
class InstantiationTable:
    """Every instantiation of every abstract schema for one solution count.

    Trial-independent over a fixed position set: trajectories mention only
    positions, never colors. ``membership[i, t]`` says instantiation ``i``
    contains trajectory id ``t``; trajectory ids index ``trajectory_list``.
    """

    schemas: tuple[AbstractSchema, ...]
    trajectory_list: tuple[Trajectory, ...]
    trajectory_id: dict[Trajectory, int]
    membership: np.ndarray  # (n_instantiations, n_trajectories) bool
    parent: np.ndarray  # (n_instantiations,) abstract schema index
    instantiations: tuple[InstantiatedSchema, ...]


@lru_cache(maxsize=8)
def instantiation_table(
    n_solutions: int, positions: tuple[Position, ...] = tuple(Position)
) -> InstantiationTable:
    schemas = tuple(enumerate_abstract_schemas(n_solutions))
    trajectory_list = tuple(itertools.permutations(positions, 2))
    trajectory_id = {traj: t for t, traj in enumerate(trajectory_list)}
    instantiations: list[InstantiatedSchema] = []
    parents: list[int] = []
    for s, schema in enumerate(schemas):
        for inst in _instantiations(schema.trajectories, positions, s):
            instantiations.append(inst)
            parents.append(s)
    membership = np.zeros((len(instantiations), len(trajectory_list)), dtype=bool)
    for i, inst in enumerate(instantiations):
        for traj in inst.trajectories:
            membership[i, trajectory_id[traj]] = True
    return InstantiationTable(
        schemas=schemas,
        trajectory_list=trajectory_list,
        trajectory_id=trajectory_id,
        membership=membership,
        parent=np.asarray(parents, dtype=np.int64),
        instantiations=tuple(instantiations),
    )
