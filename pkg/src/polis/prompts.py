"""Prompt assembly from versioned plain-text templates.

Templates live in ``templates/`` with ``{placeholder}`` slots. Builders are
pure: the same context yields a byte-identical prompt. Relation-dependent
wording (the rob-target rules, relation facts) is the only conditional text;
everything else in the templates is emitted verbatim every time.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from typing import TYPE_CHECKING

from .narration import describe_incoming_rob, describe_incoming_trade
from .state import EngineInvariantError

if TYPE_CHECKING:
    from .actions import RobIntent, TradeIntent
    from .context import DecisionContext

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")

_ROB_RULES_FREE = (
    "You can rob those who are not subordinates in commonwealth. You can rob superiors "
    "in the commonwealth or independent individuals like you."
)
_ROB_RULES_SUBORDINATE = (
    _ROB_RULES_FREE
    + " You have conceded to agent {superior}, your superior: you cannot refuse your superior's "
    "rob actions, and your superior protects you against robbery from others."
)
_ROB_RULES_SUPERIOR = (
    _ROB_RULES_FREE
    + " Agents {subordinates} have conceded to you and are your subordinates; they cannot refuse "
    "your rob actions, and no one else may rob them."
)


class TemplateError(KeyError):
    """A placeholder in a template has no value (or a value has no slot)."""


@lru_cache(maxsize=None)
def template_text(name: str) -> str:
    return resources.files("polis.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def render(template: str, values: dict[str, str]) -> str:
    """Substitute ``{placeholder}`` slots; any missing key is an error."""
    missing = sorted(set(_PLACEHOLDER.findall(template)) - set(values))
    if missing:
        raise TemplateError(f"template is missing value(s) for: {', '.join(missing)}")
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def _fmt_trait(value: float) -> str:
    return f"{value:.4g}"


def _attributes_text(ctx: "DecisionContext") -> str:
    return (
        "{"
        f"aggressiveness: {_fmt_trait(ctx.aggressiveness)}, "
        f"covetousness: {_fmt_trait(ctx.covetousness)}, "
        f"strength: {_fmt_trait(ctx.strength)}, "
        f"desire for peace: {_fmt_trait(ctx.desire_for_peace)}, "
        f"desire for glory: {_fmt_trait(ctx.desire_for_glory)}, "
        f"social position: {ctx.social_position}, "
        f"food: {repr(ctx.food)}, "
        f"land: {repr(ctx.land)}"
        "}"
    )


def _memory_text(ctx: "DecisionContext") -> str:
    if not ctx.memory:
        return "[]"
    return "\n" + "\n".join(ctx.memory_lines)


def _rob_target_rules(ctx: "DecisionContext") -> str:
    if ctx.superior is not None:
        return _ROB_RULES_SUBORDINATE.format(superior=ctx.superior)
    if ctx.subordinates:
        subs = ", ".join(str(s) for s in ctx.subordinates)
        return _ROB_RULES_SUPERIOR.format(subordinates=subs)
    return _ROB_RULES_FREE


def _relation_facts(ctx: "DecisionContext") -> str:
    if ctx.superior is not None:
        return f"Your superior is agent {ctx.superior}."
    if ctx.subordinates:
        subs = ", ".join(str(s) for s in ctx.subordinates)
        return f"Your subordinates are agents {subs}."
    return "You currently have no superior and no subordinates."


def build_general_prompt(ctx: "DecisionContext") -> str:
    """The world/psychology preamble included in every request."""
    values = {
        "name": ctx.name,
        "attributes": _attributes_text(ctx),
        "memory": _memory_text(ctx),
        "other_names": ", ".join(o.name for o in ctx.others),
        "food_roster": ", ".join(f"{o.name}: {repr(o.food)}" for o in ctx.others),
        "land_roster": " " + ", ".join(f"{o.name}: {repr(o.land)}" for o in ctx.others),
        "rob_target_rules": _rob_target_rules(ctx),
        "relation_facts": _relation_facts(ctx),
    }
    return render(template_text("general"), values)


def build_initiative_prompt(ctx: "DecisionContext") -> str:
    """General preamble plus the daily action menu and output format rules."""
    return build_general_prompt(ctx) + "\n" + template_text("initiative")


def build_rob_response_prompt(ctx: "DecisionContext", actor: int, intent: "RobIntent") -> str:
    """Prompt for a rob target choosing CONCEDE or RESIST.

    Never issued when the robber is the target's superior: subordinates
    cannot refuse, so the engine bypasses the provider entirely.
    """
    if ctx.superior == actor:
        raise EngineInvariantError("no rob-response prompt for a superior's rob: auto-concede path")
    values = {
        "incoming_action": describe_incoming_rob(actor, intent.resource, intent.amount),
        "desire_for_glory": _fmt_trait(ctx.desire_for_glory),
        "desire_for_peace": _fmt_trait(ctx.desire_for_peace),
    }
    return build_general_prompt(ctx) + "\n" + render(template_text("rob_response"), values)


def build_trade_response_prompt(ctx: "DecisionContext", actor: int, intent: "TradeIntent") -> str:
    """Prompt for a trade target choosing ACCEPT or REJECT."""
    values = {
        "incoming_action": describe_incoming_trade(
            actor, intent.pay_type, intent.pay_amount, intent.gain_type, intent.gain_amount
        ),
    }
    return build_general_prompt(ctx) + "\n" + render(template_text("trade_response"), values)


def fit_to_budget(build, ctx: "DecisionContext", char_budget: int | None) -> tuple[str, int]:
    """Build a prompt, dropping memory lines oldest-first until it fits.

    Returns (prompt, dropped_line_count). Mirrors running into a hard token
    limit: rather than dying mid-run, the oldest memory goes first.
    """
    prompt = build(ctx)
    if char_budget is None or len(prompt) <= char_budget:
        return prompt, 0
    dropped = 0
    trimmed = ctx
    while len(prompt) > char_budget and trimmed.memory:
        trimmed = trimmed.with_memory(trimmed.memory[1:])
        dropped += 1
        prompt = build(trimmed)
    return prompt, dropped
