"""Day loop: consumption, turns, pending responses, contracts, commonwealth.

A day: every agent consumes one ration, then agents take turns in a fixed
order. On its turn an agent first answers every pending action aimed at it,
then initiates its one action of the day. The day ends when the queue is
empty and everyone has initiated; a trailing drain pass answers anything
launched by late movers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .actions import (
    DonateIntent,
    FarmIntent,
    PendingAction,
    RobIntent,
    TradeIntent,
    resolve_donate,
    resolve_farm,
    resolve_rob,
    resolve_trade,
    rob_outcome_to_deltas,
)
from .analytics import MetricsReport, build_metrics_report
from .config import AGGRESSIVENESS_RANGE, COVETOUSNESS_RANGE, ConfigError, SimConfig
from .providers import DecisionService, ProviderHardFailure
from .state import (
    ADMIN,
    CONCEDE,
    CONSUME,
    DONATE,
    FARM,
    FOOD,
    RESP_RESIST,
    ROB,
    TRADE,
    EngineInvariantError,
    Event,
    Outcome,
    Qty,
    RelationGraph,
    WorldState,
    apply_deltas,
    init_world,
)


def detect_commonwealth(relations: RelationGraph, population: int) -> int | None:
    """The sovereign id once every other agent has it as superior, else None."""
    return relations.sovereign(population)


def _role(world: WorldState, agent_id: int) -> tuple[bool, bool]:
    rel = world.relations
    return (rel.has_superior(agent_id), rel.has_subordinates(agent_id))


def reset_memory_on_role_change(world: WorldState, agent_id: int) -> WorldState:
    """Blank-slate an agent that just changed social role (flag-gated by caller)."""
    world.agent(agent_id).memory.clear()
    return world


def _emit(world: WorldState, **kwargs) -> Event:
    event = Event(day=world.day, sequence=world.next_seq(), **kwargs)
    apply_deltas(world, event)
    return event


def _consume(world: WorldState, agent_id: int) -> None:
    demand = Qty(world.config.daily_consumption)
    agent = world.agent(agent_id)
    actual = min(demand, agent.food)
    _emit(
        world,
        actor=agent_id,
        kind=CONSUME,
        payload={"resource": FOOD, "amount": demand},
        outcome=Outcome(food={agent_id: -actual}, detail="clamped" if actual < demand else ""),
    )


def _record_concession(world: WorldState, subordinate: int, conceded_to: int) -> None:
    """Emit the contract event for a fresh concession, honoring depth-1.

    A concession "to" an agent that itself has a superior binds to that
    contract root, and the conceder's own subordinates move with it.
    """
    effective = world.relations.effective_superior(conceded_to)
    if effective == subordinate:
        raise EngineInvariantError("concession would loop back to the conceder")
    reassigned = world.relations.subordinates_of(subordinate)
    watch = {subordinate, effective, *reassigned}
    roles_before = {a: _role(world, a) for a in watch}
    payload: dict[str, object] = {"reassigned": list(reassigned)}
    if effective != conceded_to:
        payload["conceded_to"] = conceded_to
    _emit(
        world,
        actor=subordinate,
        kind=CONCEDE,
        target=effective,
        payload=payload,
        outcome=Outcome(concession=(subordinate, effective), detail="contract"),
    )
    if world.config.erase_memory_on_role_change:
        for agent_id in watch:
            if _role(world, agent_id) != roles_before[agent_id]:
                reset_memory_on_role_change(world, agent_id)
    if world.commonwealth_day is None:
        sovereign = detect_commonwealth(world.relations, world.population)
        if sovereign is not None:
            world.commonwealth_day = world.day
            world.sovereign = sovereign
            _emit(
                world,
                actor=sovereign,
                kind=ADMIN,
                payload={"admin": "commonwealth", "sovereign": sovereign, "day": world.day},
            )


def _resolve_rob_now(world: WorldState, decisions: DecisionService, actor: int, intent: RobIntent) -> None:
    target = intent.target
    superior_of_target = world.relations.superior_of(target)

    if superior_of_target is not None and superior_of_target != actor:
        # The target conceded to someone else after this rob was launched;
        # protection says a third-party rob never resolves.
        _emit(
            world,
            actor=actor,
            kind=ROB,
            target=target,
            payload={
                "resource": intent.resource,
                "amount": intent.amount,
                "protector": superior_of_target,
            },
            outcome=Outcome(detail="protected"),
            reason=intent.reason,
        )
        return

    if superior_of_target == actor:
        response = None  # subordinates cannot refuse; no prompt is issued
    elif world.relations.superior_of(actor) == target:
        response = RESP_RESIST  # a superior never concedes to its own subordinate
    else:
        response = decisions.rob_response(world, target, actor, intent)

    rob = resolve_rob(world, actor, intent, response, world.rng)
    _emit(
        world,
        actor=actor,
        kind=ROB,
        target=target,
        payload={"resource": intent.resource, "amount": intent.amount},
        response=response if rob.detail != "subordinate" else None,
        outcome=rob_outcome_to_deltas(actor, target, rob),
        reason=intent.reason,
    )
    if rob.new_concession is not None:
        _record_concession(world, rob.new_concession[0], rob.new_concession[1])


def _resolve_trade_now(world: WorldState, decisions: DecisionService, actor: int, intent: TradeIntent) -> None:
    response = decisions.trade_response(world, intent.target, actor, intent)
    outcome = resolve_trade(world, actor, intent, response)
    _emit(
        world,
        actor=actor,
        kind=TRADE,
        target=intent.target,
        payload={
            "pay_type": intent.pay_type,
            "pay_amount": intent.pay_amount,
            "gain_type": intent.gain_type,
            "gain_amount": intent.gain_amount,
        },
        response=response,
        outcome=outcome,
        reason=intent.reason,
    )


def _initiate(world: WorldState, decisions: DecisionService, actor: int) -> None:
    intent = decisions.initiative(world, actor)
    if isinstance(intent, FarmIntent):
        yielded = resolve_farm(world.agent(actor), world.rng)
        _emit(
            world,
            actor=actor,
            kind=FARM,
            payload={"resource": FOOD, "amount": yielded},
            outcome=Outcome(food={actor: yielded}, detail="yield"),
            reason=intent.reason,
        )
    elif isinstance(intent, DonateIntent):
        outcome = resolve_donate(world, actor, intent)
        _emit(
            world,
            actor=actor,
            kind=DONATE,
            target=intent.target,
            payload={"resource": intent.resource, "amount": intent.amount},
            outcome=outcome,
            reason=intent.reason,
        )
    elif isinstance(intent, RobIntent):
        if world.relations.superior_of(intent.target) == actor:
            # Robbing one's own subordinate needs no response: resolve in place.
            _resolve_rob_now(world, decisions, actor, intent)
        else:
            world.queue_pending(PendingAction(day=world.day, actor=actor, intent=intent))
    elif isinstance(intent, TradeIntent):
        world.queue_pending(PendingAction(day=world.day, actor=actor, intent=intent))
    else:
        raise EngineInvariantError(f"unknown intent from provider: {intent!r}")


def _respond_all(world: WorldState, decisions: DecisionService, agent_id: int) -> None:
    while True:
        pending = world.pop_pending(agent_id)
        if pending is None:
            return
        if isinstance(pending.intent, RobIntent):
            _resolve_rob_now(world, decisions, pending.actor, pending.intent)
        else:
            _resolve_trade_now(world, decisions, pending.actor, pending.intent)


def run_day(
    world: WorldState,
    decisions: DecisionService,
    on_turn: Callable[[WorldState], None] | None = None,
) -> WorldState:
    """Advance the world by one full day.

    ``on_turn`` runs between turns (and before the day starts); the service
    layer uses it to drain operator commands at safe points.
    """
    if on_turn is not None:
        on_turn(world)
    for agent in world.agents:
        _consume(world, agent.id)

    order = [a.id for a in world.agents]
    if world.config.shuffle_turn_order:
        world.rng.shuffle(order)

    acted: set[int] = set()
    rounds = 0
    while True:
        for agent_id in order:
            if on_turn is not None:
                on_turn(world)
            _respond_all(world, decisions, agent_id)
            if agent_id not in acted:
                _initiate(world, decisions, agent_id)
                acted.add(agent_id)
        if len(acted) == world.population and not world.has_pending():
            break
        rounds += 1
        if rounds > world.population + 2:
            raise EngineInvariantError("day failed to terminate: pending queue is not draining")
    world.day += 1
    return world


EDITABLE_RANGES: dict[str, tuple[float, float] | None] = {
    "aggressiveness": AGGRESSIVENESS_RANGE,
    "covetousness": COVETOUSNESS_RANGE,
    "strength": None,
    "desire_for_peace": None,
    "desire_for_glory": None,
}


class LiveEditError(ValueError):
    """Rejected live edit; the message names the legal range."""


def live_edit(world: WorldState, agent_id: int, fieldname: str, value: float | int) -> WorldState:
    """Apply an operator edit between turns; logs an administrative event."""
    if not 0 <= agent_id < world.population:
        raise LiveEditError(f"agent {agent_id} does not exist")
    if fieldname == "memory_capacity":
        capacity = int(value)
        if capacity < 1:
            raise LiveEditError("memory_capacity must be an integer >= 1")
        world.agent(agent_id).memory.set_capacity(capacity)
    elif fieldname in EDITABLE_RANGES:
        bounds = EDITABLE_RANGES[fieldname]
        number = float(value)
        if bounds is not None and not bounds[0] <= number <= bounds[1]:
            raise LiveEditError(f"{fieldname} must be within [{bounds[0]}, {bounds[1]}]")
        setattr(world.agent(agent_id).disposition, fieldname, number)
    else:
        editable = ", ".join([*EDITABLE_RANGES, "memory_capacity"])
        raise LiveEditError(f"field {fieldname!r} is not editable (editable: {editable})")
    _emit(
        world,
        actor=agent_id,
        kind=ADMIN,
        payload={"admin": "live_edit", "field": fieldname, "value": value},
    )
    return world


@dataclass
class TrialReport:
    """Everything one trial produced, ready for export."""

    seed: int
    days_run: int
    commonwealth_day: int | None
    sovereign: int | None
    events: list[Event]
    day_snapshots: list[dict]
    metrics: MetricsReport
    fallbacks: int
    aborted: bool = False
    abort_reason: str | None = None


def day_snapshot(world: WorldState) -> dict:
    """Compact end-of-day record used by reports and charts."""
    return {
        "day": world.day - 1,
        "food": [float(a.food) for a in world.agents],
        "land": [float(a.land) for a in world.agents],
        "social": [a.social_position for a in world.agents],
        "superior": [world.relations.superior_of(a.id) for a in world.agents],
        "total_food": float(world.total_food()),
        "total_land": float(world.total_land()),
        "commonwealth_day": world.commonwealth_day,
    }


def run_trial(
    config: SimConfig,
    decisions: DecisionService,
    seed: int | None = None,
    max_days: int | None = None,
    on_turn: Callable[[WorldState], None] | None = None,
    world: WorldState | None = None,
) -> TrialReport:
    """Run one trial to max_days (continuing past commonwealth) and report.

    A provider hard failure aborts the trial; the partial log is kept and
    flagged incomplete.
    """
    days = config.max_days if max_days is None else max_days
    if days < 1:
        raise ConfigError(f"max_days must be >= 1, got {days}")
    if world is None:
        world = init_world(config, seed)
    snapshots: list[dict] = []
    aborted = False
    abort_reason: str | None = None
    for _ in range(days):
        try:
            run_day(world, decisions, on_turn=on_turn)
        except ProviderHardFailure as exc:
            aborted = True
            abort_reason = str(exc)
            break
        snapshots.append(day_snapshot(world))
    return TrialReport(
        seed=world.seed,
        days_run=world.day,
        commonwealth_day=world.commonwealth_day,
        sovereign=world.sovereign,
        events=world.events,
        day_snapshots=snapshots,
        metrics=build_metrics_report(world.events, world.commonwealth_day),
        fallbacks=world.fallback_count,
        aborted=aborted,
        abort_reason=abort_reason,
    )
