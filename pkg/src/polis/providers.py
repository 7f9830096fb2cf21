"""Decision providers: prompt-built LLM decisions, a scripted heuristic, replay.

Providers answer "what does this agent do now". Text-based providers (llm,
replay) run prompt -> completion -> parse with a bounded retry loop that
appends a one-line format reminder; exhaustion falls back to the least
committal legal choice (farm / RESIST / REJECT), which never creates a
contract or moves resources by itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Protocol

from .actions import (
    ActionIntent,
    FarmIntent,
    RobIntent,
    TradeIntent,
    validate_intent,
)
from .config import HeuristicConfig, SimConfig
from .context import DecisionContext, RosterEntry, build_context
from .llm import CompletionRequest, LlmClient, TransportError
from .parsing import ILLEGAL, ParseError, parse_initiative, parse_rob_response, parse_trade_response
from .prompts import (
    build_initiative_prompt,
    build_rob_response_prompt,
    build_trade_response_prompt,
    fit_to_budget,
)
from .state import (
    ADMIN,
    FOOD,
    LAND,
    RESP_ACCEPT,
    RESP_CONCEDE,
    RESP_REJECT,
    RESP_RESIST,
    Event,
    WorldState,
    apply_deltas,
)

log = logging.getLogger(__name__)

DECIDE_INITIATIVE = "initiative"
DECIDE_ROB = "rob_response"
DECIDE_TRADE = "trade_response"

_REMINDERS = {
    DECIDE_INITIATIVE: (
        "Format reminder: reply with exactly one JSON object "
        '{"action": "<farm, rob, trade or donate>", "payload": <payload or null>, "reason": "..."}.'
    ),
    DECIDE_ROB: "Format reminder: reply exactly with either CONCEDE or RESIST.",
    DECIDE_TRADE: "Format reminder: reply exactly with either ACCEPT or REJECT.",
}


class ProviderHardFailure(RuntimeError):
    """Transport gave up and the run is configured to abort on that."""


class TextProvider(Protocol):
    """A provider that turns a finished prompt into raw model text."""

    kind: str

    def complete(self, ctx: DecisionContext, build_prompt: Callable[[DecisionContext], str], decision: str) -> str: ...


class LlmProvider:
    """Chat-completion backed provider; also drives replay transcripts.

    Applies the agent's fixed decoding parameters to every request and drops
    memory lines oldest-first when a prompt overruns the character budget.
    """

    def __init__(self, client: LlmClient, config: SimConfig, kind: str = "llm") -> None:
        self.client = client
        self.config = config
        self.kind = kind
        self.truncations = 0

    def complete(self, ctx: DecisionContext, build_prompt, decision: str) -> str:
        cfg = self.config.llm
        prompt, dropped = fit_to_budget(build_prompt, ctx, cfg.prompt_char_budget)
        if dropped:
            self.truncations += 1
            log.warning(
                "prompt for agent %d exceeded %d chars; dropped %d oldest memory line(s)",
                ctx.self_id,
                cfg.prompt_char_budget,
                dropped,
            )
        max_tokens = cfg.max_tokens_initiative if decision == DECIDE_INITIATIVE else cfg.max_tokens_response
        request = CompletionRequest(
            model=cfg.model,
            prompt=prompt,
            temperature=ctx.temperature,
            top_p=ctx.top_p,
            max_tokens=max_tokens,
        )
        return self.client.complete(request)


@dataclass(frozen=True, slots=True)
class HeuristicProvider:
    """Marker for agents driven by the scripted rules below."""

    params: HeuristicConfig

    kind = "heuristic"


def estimated_win_rate(ctx: DecisionContext, opponent: int) -> float:
    """Laplace-smoothed win fraction from remembered battles with that opponent.

    (wins + 1) / (battles + 2); with no remembered battles the prior is 0.5.
    Bounded by memory depth on purpose: a short memory forgets its losses.
    """
    battles = [e.battle for e in ctx.memory if e.battle is not None and e.battle.opponent == opponent]
    if not battles:
        return 0.5
    wins = sum(1 for b in battles if b.won)
    return (wins + 1) / (len(battles) + 2)


def heuristic_rob_response(ctx: DecisionContext, robber: int) -> str:
    """RESIST while the glory-weighted win estimate beats the even-odds peace bar.

    Resist iff estimate * glory >= 0.5 * peace: with no history (estimate
    0.5) that reduces to glory >= peace, so an agent that has never lost to
    this robber stands its ground; repeated losses push the estimate low
    enough that conceding wins out.
    """
    if robber in ctx.subordinates:
        return RESP_RESIST  # never yield to one's own subordinate
    estimate = estimated_win_rate(ctx, robber)
    if estimate * ctx.desire_for_glory >= 0.5 * ctx.desire_for_peace:
        return RESP_RESIST
    return RESP_CONCEDE


def heuristic_trade_response(ctx: DecisionContext, intent: TradeIntent, params: HeuristicConfig) -> str:
    """Accept when the asked-for resource comes out of genuine surplus."""
    food_floor = ctx.covetousness * ctx.daily_need * params.food_reserve_days
    if intent.gain_type == FOOD:
        return RESP_ACCEPT if ctx.food - float(intent.gain_amount) >= food_floor else RESP_REJECT
    return RESP_ACCEPT if ctx.land - float(intent.gain_amount) >= 1.0 else RESP_REJECT


def _legal_targets(ctx: DecisionContext) -> list[RosterEntry]:
    return [o for o in ctx.others if o.superior is None or o.superior == ctx.self_id]


def heuristic_initiative(ctx: DecisionContext, params: HeuristicConfig) -> ActionIntent:
    """Scripted daily choice: rob when starving or temperamentally aggressive,
    trade against a visible surplus when coveting, otherwise farm.

    Robbers go after food first: a starving agent hits whoever has the most
    food (falling back to its own fields, then to land grabs, when nobody has
    any), and an aggressive one skims food from the richest target unless
    only land is worth taking. Land moves rarely, which keeps farm capacity
    spread out instead of piling up with the winners.
    """
    legal = _legal_targets(ctx)
    food_target = ctx.covetousness * ctx.daily_need * params.food_reserve_days

    if ctx.starving and legal:
        fed = max(legal, key=lambda o: (o.food, -o.id))
        if fed.food > 0:
            return RobIntent(
                target=fed.id,
                resource=FOOD,
                amount=Fraction(params.rob_amount),
                reason="I am starving, so I take food where I can.",
            )
        if ctx.land <= 0:
            landed = max(legal, key=lambda o: (o.land, -o.id))
            if landed.land > 0:
                return RobIntent(
                    target=landed.id,
                    resource=LAND,
                    amount=Fraction(params.rob_amount),
                    reason="No one has food, so I take land to farm it.",
                )
        return FarmIntent(reason="Nothing worth robbing; I farm to survive.")

    if ctx.aggressiveness > params.rob_aggressiveness_threshold and legal:
        target = max(legal, key=lambda o: (o.food + o.land, -o.id))
        resource = FOOD if target.food > 0 else LAND
        return RobIntent(
            target=target.id,
            resource=resource,
            amount=Fraction(params.rob_amount),
            reason="Taking from the richest target feeds my position.",
        )

    amount = Fraction(params.trade_amount)
    if ctx.food < food_target and ctx.land >= params.trade_amount and ctx.others:
        partner = max(ctx.others, key=lambda o: (o.food, -o.id))
        if partner.food > food_target:
            return TradeIntent(
                target=partner.id,
                pay_type=LAND,
                pay_amount=amount,
                gain_type=FOOD,
                gain_amount=amount,
                reason="I need food more than land right now.",
            )

    mean_land = (ctx.land + sum(o.land for o in ctx.others)) / (len(ctx.others) + 1)
    if ctx.land < ctx.covetousness * mean_land and ctx.food - params.trade_amount >= food_target and ctx.others:
        partner = max(ctx.others, key=lambda o: (o.land, -o.id))
        if partner.land > mean_land:
            return TradeIntent(
                target=partner.id,
                pay_type=FOOD,
                pay_amount=amount,
                gain_type=LAND,
                gain_amount=amount,
                reason="Spare food buys land that keeps feeding me.",
            )

    return FarmIntent(reason="Farming my land keeps me fed.")


def heuristic_decide(
    ctx: DecisionContext,
    decision: str,
    *,
    params: HeuristicConfig,
    incoming_actor: int | None = None,
    incoming: TradeIntent | RobIntent | None = None,
) -> ActionIntent | str:
    """Total, deterministic policy for every decision kind."""
    if decision == DECIDE_INITIATIVE:
        return heuristic_initiative(ctx, params)
    if decision == DECIDE_ROB:
        assert incoming_actor is not None
        return heuristic_rob_response(ctx, incoming_actor)
    if decision == DECIDE_TRADE:
        assert isinstance(incoming, TradeIntent)
        return heuristic_trade_response(ctx, incoming, params)
    raise ValueError(f"unknown decision kind {decision!r}")


class DecisionService:
    """Routes one decision at a time to the right provider, with retry/fallback.

    Synchronous by design: one decision in flight preserves deterministic
    event ordering. Emits an administrative event whenever a fallback fires.
    """

    def __init__(
        self,
        providers: dict[int, LlmProvider | HeuristicProvider],
        config: SimConfig,
    ) -> None:
        self.providers = providers
        self.config = config
        self.fallbacks = 0

    def provider_for(self, agent_id: int):
        return self.providers[agent_id]

    # -- public decision entry points ---------------------------------------

    def initiative(self, world: WorldState, actor: int) -> ActionIntent:
        provider = self.provider_for(actor)
        ctx = build_context(world, actor)
        if isinstance(provider, HeuristicProvider):
            intent = heuristic_initiative(ctx, provider.params)
            problem = validate_intent(world, actor, intent)
            if problem is not None:  # heuristic is total; treat as engine bug
                raise RuntimeError(f"heuristic produced an invalid intent: {problem}")
            return intent
        return self._decide_text(
            world,
            actor,
            ctx,
            provider,
            DECIDE_INITIATIVE,
            build_prompt=build_initiative_prompt,
            parse=lambda text: parse_initiative(text, actor=actor, population=world.population),
            validate=lambda intent: validate_intent(world, actor, intent),
            fallback=FarmIntent(reason="fallback after unusable replies"),
        )

    def rob_response(self, world: WorldState, target: int, actor: int, intent: RobIntent) -> str:
        provider = self.provider_for(target)
        ctx = build_context(world, target)
        if isinstance(provider, HeuristicProvider):
            return heuristic_rob_response(ctx, actor)
        return self._decide_text(
            world,
            target,
            ctx,
            provider,
            DECIDE_ROB,
            build_prompt=lambda c: build_rob_response_prompt(c, actor, intent),
            parse=parse_rob_response,
            validate=lambda _: None,
            fallback=RESP_RESIST,
        )

    def trade_response(self, world: WorldState, target: int, actor: int, intent: TradeIntent) -> str:
        provider = self.provider_for(target)
        ctx = build_context(world, target)
        if isinstance(provider, HeuristicProvider):
            return heuristic_trade_response(ctx, intent, provider.params)
        return self._decide_text(
            world,
            target,
            ctx,
            provider,
            DECIDE_TRADE,
            build_prompt=lambda c: build_trade_response_prompt(c, actor, intent),
            parse=parse_trade_response,
            validate=lambda _: None,
            fallback=RESP_REJECT,
        )

    # -- text pipeline -------------------------------------------------------

    def _decide_text(self, world, agent_id, ctx, provider, decision, *, build_prompt, parse, validate, fallback):
        attempts = self.config.parse_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt == 0:
                builder = build_prompt
            else:
                reminder = _REMINDERS[decision]
                builder = lambda c, _b=build_prompt, _r=reminder: _b(c) + "\n\n" + _r
            try:
                text = provider.complete(ctx, builder, decision)
            except TransportError as exc:
                if self.config.llm.transport_failure == "fallback":
                    last_error = exc
                    break
                raise ProviderHardFailure(str(exc)) from exc
            try:
                result = parse(text)
            except ParseError as exc:
                last_error = exc
                log.info("agent %d %s reply unusable (%s): %s", agent_id, decision, exc.kind, exc)
                continue
            problem = validate(result)
            if problem is not None:
                last_error = ParseError(ILLEGAL, problem)
                log.info("agent %d %s intent rejected: %s", agent_id, decision, problem)
                continue
            return result
        self._log_fallback(world, agent_id, decision, attempts, last_error)
        return fallback

    def _log_fallback(self, world, agent_id, decision, attempts, error) -> None:
        self.fallbacks += 1
        world.fallback_count += 1
        event = Event(
            day=world.day,
            sequence=world.next_seq(),
            actor=agent_id,
            kind=ADMIN,
            payload={
                "admin": "fallback",
                "decision": decision,
                "attempts": attempts,
                "error": str(error) if error else "",
            },
        )
        apply_deltas(world, event)


def build_decision_service(
    config: SimConfig,
    *,
    client: LlmClient | None = None,
    replay_client: LlmClient | None = None,
) -> DecisionService:
    """Wire one provider per agent from config.

    ``client`` backs llm agents (recording attached by the runner);
    ``replay_client`` backs replay agents.
    """
    providers: dict[int, LlmProvider | HeuristicProvider] = {}
    for agent_id in range(config.population):
        kind = config.provider_per_agent.get(agent_id, config.provider)
        if kind == "heuristic":
            providers[agent_id] = HeuristicProvider(config.heuristic)
        elif kind == "llm":
            if client is None:
                raise ValueError("llm provider requested but no client supplied")
            providers[agent_id] = LlmProvider(client, config, kind="llm")
        else:
            if replay_client is None:
                raise ValueError("replay provider requested but no replay client supplied")
            providers[agent_id] = LlmProvider(replay_client, config, kind="replay")
    return DecisionService(providers, config)
