"""Decision context: the slice of world state a provider may see for one agent."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from .state import MemoryEntry

if TYPE_CHECKING:
    from .state import WorldState


@dataclass(frozen=True, slots=True)
class RosterEntry:
    """Public facts about another agent: holdings plus contract status."""

    id: int
    name: str
    food: float
    land: float
    superior: int | None


@dataclass(frozen=True, slots=True)
class DecisionContext:
    """Everything a decision provider may condition on.

    Mirrors what the prompts expose: own attributes and holdings, the public
    roster, contract facts, and the rendered memory window. Contract facts
    for roster agents are public (the rob-target rules and the operator UI
    both reference who is whose subordinate).
    """

    day: int
    self_id: int
    name: str
    aggressiveness: float
    covetousness: float
    strength: float
    desire_for_peace: float
    desire_for_glory: float
    temperature: float
    top_p: float
    food: float
    land: float
    social_position: int
    starving: bool
    daily_need: float
    superior: int | None
    subordinates: tuple[int, ...]
    others: tuple[RosterEntry, ...]
    memory: tuple[MemoryEntry, ...]

    @property
    def memory_lines(self) -> tuple[str, ...]:
        return tuple(entry.line for entry in self.memory)

    def with_memory(self, memory: tuple[MemoryEntry, ...]) -> "DecisionContext":
        return replace(self, memory=memory)


def build_context(world: "WorldState", agent_id: int) -> DecisionContext:
    """Snapshot one agent's decision context from live world state."""
    agent = world.agent(agent_id)
    d = agent.disposition
    others = tuple(
        RosterEntry(
            id=o.id,
            name=o.name,
            food=float(o.food),
            land=float(o.land),
            superior=world.relations.superior_of(o.id),
        )
        for o in world.agents
        if o.id != agent_id
    )
    return DecisionContext(
        day=world.day,
        self_id=agent_id,
        name=agent.name,
        aggressiveness=d.aggressiveness,
        covetousness=d.covetousness,
        strength=d.strength,
        desire_for_peace=d.desire_for_peace,
        desire_for_glory=d.desire_for_glory,
        temperature=d.decoding.temperature,
        top_p=d.decoding.top_p,
        food=float(agent.food),
        land=float(agent.land),
        social_position=agent.social_position,
        starving=agent.starving,
        daily_need=float(world.config.daily_consumption),
        superior=world.relations.superior_of(agent_id),
        subordinates=world.relations.subordinates_of(agent_id),
        others=others,
        memory=agent.memory.entries,
    )
