"""World state: agents, traits, resources, relations, memory, events, seeded RNG.

All resource quantities are exact rationals (``fractions.Fraction``) so the
conservation invariants hold exactly: total land never changes, and per-day
food totals satisfy start + farm yields - actual consumption, with transfers
cancelling to zero. Floats only appear at the display/serialization boundary.

Randomness comes from a single ``random.Random(seed)`` stream per world,
consumed strictly in event order: disposition draws at init (aggressiveness,
covetousness, strength, decoding per agent, in agent order), then farm yields
and battle draws as events resolve, plus the optional per-day turn shuffle.
Identical seed + identical decisions therefore reproduce the run exactly.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Iterable

from .config import ConfigError, IntelligenceConfig, SimConfig, TraitDist

if TYPE_CHECKING:
    from .actions import PendingAction

Qty = Fraction

FOOD = "food"
LAND = "land"
RESOURCE_TYPES = (FOOD, LAND)

# event kinds
FARM = "farm"
ROB = "rob"
TRADE = "trade"
DONATE = "donate"
CONCEDE = "concede"
CONSUME = "consume"
ADMIN = "admin"
EVENT_KINDS = (FARM, ROB, TRADE, DONATE, CONCEDE, CONSUME, ADMIN)

# response tokens (lowercased in events)
RESP_RESIST = "resist"
RESP_CONCEDE = "concede"
RESP_ACCEPT = "accept"
RESP_REJECT = "reject"

# survival threshold from the world rules: below this an agent is starving
STARVATION_THRESHOLD = Fraction(1)


class EngineInvariantError(RuntimeError):
    """An internal engine invariant was violated; the run must abort."""


def qty(value: float | int | str | Fraction) -> Qty:
    """Coerce a number to the exact Fraction representation used internally."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def fmt_qty(value: Qty) -> str:
    """Render a quantity the way logs and prompts show it (float repr)."""
    return repr(float(value))


@dataclass(frozen=True, slots=True)
class DecodingParams:
    """Per-agent sampling parameters, fixed for the whole run."""

    temperature: float = 1.0
    top_p: float = 1.0


@dataclass(slots=True)
class Disposition:
    """Psychological parameters driving an agent's decisions.

    Mutable only through live edits applied between turns; the day loop never
    touches these.
    """

    aggressiveness: float
    covetousness: float
    strength: float
    desire_for_peace: float = 1.0
    desire_for_glory: float = 1.0
    decoding: DecodingParams = field(default_factory=DecodingParams)


@dataclass(frozen=True, slots=True)
class BattleRecord:
    """One resisted robbery from this agent's point of view."""

    opponent: int
    won: bool


@dataclass(frozen=True, slots=True)
class MemoryEntry:
    line: str
    battle: BattleRecord | None = None


class MemoryBuffer:
    """Bounded log of rendered memory lines; eviction is strictly oldest-first."""

    __slots__ = ("_entries",)

    def __init__(self, capacity: int, entries: Iterable[MemoryEntry] = ()) -> None:
        if capacity < 1:
            raise ConfigError(f"memory capacity must be >= 1, got {capacity}")
        self._entries: deque[MemoryEntry] = deque(entries, maxlen=capacity)

    @property
    def capacity(self) -> int:
        return self._entries.maxlen or 0

    @property
    def lines(self) -> tuple[str, ...]:
        return tuple(entry.line for entry in self._entries)

    @property
    def entries(self) -> tuple[MemoryEntry, ...]:
        return tuple(self._entries)

    def push(self, entry: MemoryEntry | str) -> "MemoryBuffer":
        if isinstance(entry, str):
            entry = MemoryEntry(entry)
        self._entries.append(entry)
        return self

    def set_capacity(self, capacity: int) -> None:
        """Resize; when shrinking, the oldest entries are dropped first."""
        if capacity < 1:
            raise ConfigError(f"memory capacity must be >= 1, got {capacity}")
        self._entries = deque(list(self._entries)[-capacity:], maxlen=capacity)

    def clear(self) -> None:
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


class RelationGraph:
    """Superior/subordinate contracts: at most one superior, depth exactly 1.

    Concession is permanent; entries are never deleted. When an agent that
    already has subordinates concedes, its subordinates are re-pointed to the
    new superior so the graph stays flat and a single sovereign is reachable.
    """

    __slots__ = ("_superior_of",)

    def __init__(self, superior_of: dict[int, int] | None = None) -> None:
        self._superior_of: dict[int, int] = dict(superior_of or {})

    def superior_of(self, agent: int) -> int | None:
        return self._superior_of.get(agent)

    def subordinates_of(self, agent: int) -> tuple[int, ...]:
        return tuple(sorted(a for a, s in self._superior_of.items() if s == agent))

    def has_superior(self, agent: int) -> bool:
        return agent in self._superior_of

    def has_subordinates(self, agent: int) -> bool:
        return any(s == agent for s in self._superior_of.values())

    def effective_superior(self, agent: int) -> int:
        """The contract root a new concession to ``agent`` actually binds to."""
        return self._superior_of.get(agent, agent)

    def concede(self, subordinate: int, superior: int) -> tuple[int, ...]:
        """Record a concession; returns the ids re-pointed by flattening.

        ``superior`` must already be a contract root (the caller resolves
        ``effective_superior`` first); the subordinate must be free.
        """
        if subordinate == superior:
            raise EngineInvariantError(f"agent {subordinate} cannot be its own superior")
        if subordinate in self._superior_of:
            raise EngineInvariantError(f"agent {subordinate} already has a superior")
        if superior in self._superior_of:
            raise EngineInvariantError(f"agent {superior} is not a contract root")
        reassigned = tuple(sorted(a for a, s in self._superior_of.items() if s == subordinate))
        for agent in reassigned:
            self._superior_of[agent] = superior
        self._superior_of[subordinate] = superior
        return reassigned

    def sovereign(self, population: int) -> int | None:
        """The agent every other agent has conceded to, if any."""
        if len(self._superior_of) != population - 1:
            return None
        superiors = set(self._superior_of.values())
        if len(superiors) != 1:
            return None
        (candidate,) = superiors
        return candidate if candidate not in self._superior_of else None

    def as_dict(self) -> dict[int, int]:
        return dict(self._superior_of)

    def copy(self) -> "RelationGraph":
        return RelationGraph(self._superior_of)

    def __len__(self) -> int:
        return len(self._superior_of)


@dataclass(frozen=True, slots=True)
class Outcome:
    """Resolved effect of one event: exact resource deltas plus social shifts."""

    food: dict[int, Qty] = field(default_factory=dict)
    land: dict[int, Qty] = field(default_factory=dict)
    social: dict[int, int] = field(default_factory=dict)
    concession: tuple[int, int] | None = None  # (subordinate, superior)
    detail: str = ""


@dataclass(frozen=True, slots=True)
class Event:
    """One resolved happening; ``sequence`` is globally monotone within a run."""

    day: int
    sequence: int
    actor: int
    kind: str
    target: int | None = None
    payload: dict[str, object] = field(default_factory=dict)
    response: str | None = None
    outcome: Outcome = field(default_factory=Outcome)
    reason: str | None = None


@dataclass(slots=True)
class Agent:
    id: int
    name: str
    disposition: Disposition
    food: Qty
    land: Qty
    memory: MemoryBuffer
    social_position: int = 0

    @property
    def starving(self) -> bool:
        return self.food < STARVATION_THRESHOLD

    def holdings(self, resource: str) -> Qty:
        if resource == FOOD:
            return self.food
        if resource == LAND:
            return self.land
        raise EngineInvariantError(f"unknown resource type {resource!r}")


@dataclass
class WorldState:
    """Single source of truth for a run; mutated only on the simulation thread."""

    config: SimConfig
    seed: int
    rng: random.Random
    agents: list[Agent]
    relations: RelationGraph
    day: int = 0
    events: list[Event] = field(default_factory=list)
    pending: dict[int, deque["PendingAction"]] = field(default_factory=dict)
    next_sequence: int = 0
    commonwealth_day: int | None = None
    sovereign: int | None = None
    fallback_count: int = 0
    on_event: Callable[["WorldState", Event], None] | None = None

    @property
    def population(self) -> int:
        return len(self.agents)

    def agent(self, agent_id: int) -> Agent:
        return self.agents[agent_id]

    def next_seq(self) -> int:
        seq = self.next_sequence
        self.next_sequence += 1
        return seq

    def total_food(self) -> Qty:
        return sum((a.food for a in self.agents), Qty(0))

    def total_land(self) -> Qty:
        return sum((a.land for a in self.agents), Qty(0))

    def queue_pending(self, action: "PendingAction") -> None:
        self.pending.setdefault(action.intent.target, deque()).append(action)

    def pop_pending(self, target: int) -> "PendingAction | None":
        queue = self.pending.get(target)
        if not queue:
            return None
        action = queue.popleft()
        if not queue:
            del self.pending[target]
        return action

    def has_pending(self) -> bool:
        return bool(self.pending)


def sample_trait(rng: random.Random, dist: TraitDist) -> float:
    """One trait draw: normal (spread = std or variance) or uniform, then clamp."""
    if dist.spread <= 0:
        raise ConfigError(f"trait spread must be > 0, got {dist.spread}")
    if dist.family == "uniform":
        value = rng.uniform(dist.mean - dist.spread, dist.mean + dist.spread)
    else:
        sigma = dist.spread if dist.spread_is == "std" else math.sqrt(dist.spread)
        value = rng.gauss(dist.mean, sigma)
    if dist.clamp is not None:
        lo, hi = dist.clamp
        value = min(hi, max(lo, value))
    return value


def sample_decoding(rng: random.Random, intelligence: IntelligenceConfig) -> DecodingParams:
    if intelligence.beta_a <= 0 or intelligence.beta_b <= 0:
        raise ConfigError("Beta parameters must be > 0")
    draw = rng.betavariate(intelligence.beta_a, intelligence.beta_b)
    if intelligence.mode == "top_p":
        return DecodingParams(temperature=1.0, top_p=max(draw, 1e-9))
    return DecodingParams(temperature=2.0 * draw, top_p=1.0)


def sample_disposition(rng: random.Random, config: SimConfig) -> Disposition:
    """Draw one agent's traits; consumes exactly four draws from the stream."""
    return Disposition(
        aggressiveness=sample_trait(rng, config.traits.aggressiveness),
        covetousness=sample_trait(rng, config.traits.covetousness),
        strength=sample_trait(rng, config.traits.strength),
        desire_for_peace=config.desires.peace,
        desire_for_glory=config.desires.glory,
        decoding=sample_decoding(rng, config.intelligence),
    )


def init_world(config: SimConfig, seed: int | None = None) -> WorldState:
    """Create a fresh world: equal holdings, empty memory, no relations."""
    config.validate()
    run_seed = config.seed if seed is None else seed
    rng = random.Random(run_seed)
    agents = [
        Agent(
            id=i,
            name=f"Agent {i}",
            disposition=sample_disposition(rng, config),
            food=qty(config.initial_food),
            land=qty(config.initial_land),
            memory=MemoryBuffer(config.memory_depth),
        )
        for i in range(config.population)
    ]
    return WorldState(config=config, seed=run_seed, rng=rng, agents=agents, relations=RelationGraph())


def apply_deltas(world: WorldState, event: Event) -> WorldState:
    """Apply a resolved event: resources, social positions, contracts, log, memory.

    Land may never go negative (that is an engine bug, not a game state);
    food clamps at zero as a guard, though resolvers pre-cap transfers so the
    clamp is never expected to fire.
    """
    from . import narration

    for agent_id, delta in event.outcome.land.items():
        agent = world.agent(agent_id)
        new_land = agent.land + delta
        if new_land < 0:
            raise EngineInvariantError(
                f"event {event.sequence} drives agent {agent_id} land negative ({float(new_land)})"
            )
        agent.land = new_land
    for agent_id, delta in event.outcome.food.items():
        agent = world.agent(agent_id)
        agent.food = max(Qty(0), agent.food + delta)
    for agent_id, delta in event.outcome.social.items():
        world.agent(agent_id).social_position += delta
    if event.outcome.concession is not None:
        subordinate, superior = event.outcome.concession
        world.relations.concede(subordinate, superior)
    world.events.append(event)
    for agent_id, entry in narration.memory_entries(event, world).items():
        world.agent(agent_id).memory.push(entry)
    if world.on_event is not None:
        world.on_event(world, event)
    return world
