"""Action engine: intents and pure resolution of farm, rob, trade, and donate.

Resolution functions compute outcomes from a world snapshot without mutating
it; the day loop turns outcomes into events and applies them through
``state.apply_deltas``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .state import (
    DONATE,
    FARM,
    FOOD,
    LAND,
    RESP_CONCEDE,
    RESP_REJECT,
    RESP_RESIST,
    ROB,
    TRADE,
    Agent,
    EngineInvariantError,
    Outcome,
    Qty,
    RelationGraph,
    WorldState,
)


@dataclass(frozen=True, slots=True)
class FarmIntent:
    reason: str | None = None

    kind = FARM
    target = None


@dataclass(frozen=True, slots=True)
class RobIntent:
    target: int
    resource: str
    amount: Qty
    reason: str | None = None

    kind = ROB


@dataclass(frozen=True, slots=True)
class TradeIntent:
    """``pay_*`` is what the initiator gives; ``gain_*`` is what it receives."""

    target: int
    pay_type: str
    pay_amount: Qty
    gain_type: str
    gain_amount: Qty
    reason: str | None = None

    kind = TRADE


@dataclass(frozen=True, slots=True)
class DonateIntent:
    target: int
    resource: str
    amount: Qty
    reason: str | None = None

    kind = DONATE


ActionIntent = Union[FarmIntent, RobIntent, TradeIntent, DonateIntent]


@dataclass(frozen=True, slots=True)
class PendingAction:
    """A rob or trade awaiting the target's response on its next turn."""

    day: int
    actor: int
    intent: RobIntent | TradeIntent


@dataclass(frozen=True, slots=True)
class RobOutcome:
    """Resolution of one robbery: who won, what moved, who it now binds."""

    winner: int
    resource: str
    transfer: Qty
    social: dict[int, int]
    new_concession: tuple[int, int] | None
    detail: str


def win_probability(strength_a: float, strength_b: float) -> float:
    """Chance that A beats B in a resisted robbery: logistic of the strength gap.

    Always strictly inside (0, 1): huge gaps clamp to the nearest
    representable neighbour instead of underflowing to a certainty.
    """
    diff = strength_a - strength_b
    if diff >= 0:
        p = 1.0 / (1.0 + math.exp(-diff))
        return min(p, math.nextafter(1.0, 0.0))
    e = math.exp(diff)
    return max(e / (1.0 + e), 5e-324)


def legal_rob_targets(world: WorldState, actor: int) -> set[int]:
    """Robbable agents: independents, superiors, and the actor's own subordinates.

    Another agent's subordinate is protected by its contract and is never a
    legal target for a third party.
    """
    relations = world.relations
    targets: set[int] = set()
    for agent in world.agents:
        if agent.id == actor:
            continue
        superior = relations.superior_of(agent.id)
        if superior is None or superior == actor:
            targets.add(agent.id)
    return targets


def resolve_rob(
    world: WorldState,
    robber: int,
    intent: RobIntent,
    response: str | None,
    rng: random.Random,
) -> RobOutcome:
    """Resolve a robbery against its response.

    Own subordinates yield automatically with no fame at stake; a CONCEDE
    response transfers and creates the permanent contract; RESIST draws a
    battle where the robber wins iff a uniform draw falls below
    ``win_probability(robber, target)``. Transfers cap at the target's
    holdings at resolution time, and a resisted loss costs the robber only
    social position.
    """
    if intent.amount <= 0:
        raise EngineInvariantError("rob amount must be positive")
    target = world.agent(intent.target)
    capped = min(intent.amount, target.holdings(intent.resource))

    if world.relations.superior_of(target.id) == robber:
        return RobOutcome(
            winner=robber,
            resource=intent.resource,
            transfer=capped,
            social={},
            new_concession=None,
            detail="subordinate",
        )

    if response == RESP_CONCEDE:
        if world.relations.superior_of(robber) == target.id:
            raise EngineInvariantError(
                f"agent {target.id} cannot concede to its own subordinate {robber}"
            )
        return RobOutcome(
            winner=robber,
            resource=intent.resource,
            transfer=capped,
            social={},
            new_concession=(target.id, robber),
            detail="concede",
        )

    if response != RESP_RESIST:
        raise EngineInvariantError(f"rob response must be resist or concede, got {response!r}")

    p_win = win_probability(world.agent(robber).disposition.strength, target.disposition.strength)
    if rng.random() < p_win:
        return RobOutcome(
            winner=robber,
            resource=intent.resource,
            transfer=capped,
            social={robber: 1, target.id: -1},
            new_concession=None,
            detail="win",
        )
    return RobOutcome(
        winner=target.id,
        resource=intent.resource,
        transfer=Qty(0),
        social={robber: -1, target.id: 1},
        new_concession=None,
        detail="loss",
    )


def rob_outcome_to_deltas(robber: int, target: int, rob: RobOutcome) -> Outcome:
    """Convert a RobOutcome into the event-outcome delta form."""
    food: dict[int, Qty] = {}
    land: dict[int, Qty] = {}
    if rob.transfer > 0 and rob.winner == robber:
        book = food if rob.resource == FOOD else land
        book[robber] = rob.transfer
        book[target] = -rob.transfer
    return Outcome(
        food=food,
        land=land,
        social=dict(rob.social),
        concession=None,  # contract lands in a dedicated concede event
        detail=rob.detail,
    )


def apply_concession(world: WorldState, subordinate: int, superior: int) -> RelationGraph:
    """Record a permanent concession, flattening so the graph stays depth-1.

    A concession "to" an agent that itself has a superior binds to that
    superior (the contract root), and any subordinates the conceding agent
    held are re-pointed along with it.
    """
    root = world.relations.effective_superior(superior)
    if root == subordinate:
        raise EngineInvariantError(
            f"agent {subordinate} cannot concede to its own subordinate {superior}"
        )
    world.relations.concede(subordinate, root)
    return world.relations


def resolve_trade(world: WorldState, initiator: int, intent: TradeIntent, response: str) -> Outcome:
    """Resolve a trade offer against the target's response.

    ACCEPT swaps atomically when both sides are solvent at resolution time;
    an accepted trade either side cannot cover voids loudly instead of
    executing partially. REJECT moves nothing.
    """
    if intent.pay_amount <= 0 or intent.gain_amount <= 0:
        raise EngineInvariantError("trade amounts must be positive")
    target = world.agent(intent.target)
    payer = world.agent(initiator)
    if response == RESP_REJECT:
        return Outcome(detail="reject")
    if payer.holdings(intent.pay_type) < intent.pay_amount or target.holdings(intent.gain_type) < intent.gain_amount:
        return Outcome(detail="void")
    food: dict[int, Qty] = {}
    land: dict[int, Qty] = {}
    for resource, amount, frm, to in (
        (intent.pay_type, intent.pay_amount, initiator, target.id),
        (intent.gain_type, intent.gain_amount, target.id, initiator),
    ):
        book = food if resource == FOOD else land
        book[frm] = book.get(frm, Qty(0)) - amount
        book[to] = book.get(to, Qty(0)) + amount
    return Outcome(food=food, land=land, detail="accept")


def resolve_farm(agent: Agent, rng: random.Random) -> Qty:
    """Food produced by one day of farming: land times a uniform draw."""
    return agent.land * Fraction(rng.random())


def resolve_donate(world: WorldState, donor: int, intent: DonateIntent) -> Outcome:
    """Gift resources; the engine supports it even though self-centered agents never pick it."""
    if intent.amount <= 0:
        raise EngineInvariantError("donate amount must be positive")
    giver = world.agent(donor)
    if giver.holdings(intent.resource) < intent.amount:
        raise EngineInvariantError(
            f"agent {donor} cannot donate {float(intent.amount)} {intent.resource}: insufficient holdings"
        )
    book_key = FOOD if intent.resource == FOOD else LAND
    deltas = {donor: -intent.amount, intent.target: intent.amount}
    if book_key == FOOD:
        return Outcome(food=deltas, detail="donate")
    return Outcome(land=deltas, detail="donate")


def validate_intent(world: WorldState, actor: int, intent: ActionIntent) -> str | None:
    """Reject reasons for an intent, or None when it may be initiated now.

    Used by the decision pipeline so malformed-but-parseable choices (illegal
    target, overdrawn donation) trigger the retry/fallback path instead of
    reaching the resolvers.
    """
    if isinstance(intent, FarmIntent):
        return None
    if not 0 <= intent.target < world.population:
        return f"target {intent.target} does not exist"
    if intent.target == actor:
        return "target may not be the actor"
    if isinstance(intent, RobIntent):
        if intent.resource not in (FOOD, LAND):
            return f"unknown resource {intent.resource!r}"
        if intent.amount <= 0:
            return "amount must be positive"
        if intent.target not in legal_rob_targets(world, actor):
            return f"agent {intent.target} is another agent's subordinate and is protected"
        return None
    if isinstance(intent, TradeIntent):
        if intent.pay_type not in (FOOD, LAND) or intent.gain_type not in (FOOD, LAND):
            return "trade resource types must be food or land"
        if intent.pay_amount <= 0 or intent.gain_amount <= 0:
            return "trade amounts must be positive"
        return None
    if isinstance(intent, DonateIntent):
        if intent.resource not in (FOOD, LAND):
            return f"unknown resource {intent.resource!r}"
        if intent.amount <= 0:
            return "amount must be positive"
        if world.agent(actor).holdings(intent.resource) < intent.amount:
            return "insufficient holdings to donate"
        return None
    return f"unknown intent {intent!r}"
