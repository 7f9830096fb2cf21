"""Shared fixtures: config factories, scripted providers, synthetic model."""

from __future__ import annotations

import hashlib
import json
import re
from fractions import Fraction

import pytest

from polis.actions import ActionIntent, FarmIntent, RobIntent, TradeIntent
from polis.config import SimConfig, set_config_value
from polis.state import RESP_REJECT, RESP_RESIST, WorldState, init_world


def make_config(**dotted: object) -> SimConfig:
    """Baseline config with dotted-path overrides, e.g. make_config(seed=3,
    **{"traits.strength.mean": 1.0})."""
    config = SimConfig()
    for path, value in dotted.items():
        config = set_config_value(config, path, value)
    return config


class ScriptedService:
    """Stand-in decision service driven by explicit scripts.

    ``initiatives`` maps agent id to a list of intents consumed one per day
    (falling back to farm when exhausted); responses may be per-agent lists
    or a single default token.
    """

    def __init__(
        self,
        initiatives: dict[int, list[ActionIntent]] | None = None,
        rob_responses: dict[int, list[str]] | str = RESP_RESIST,
        trade_responses: dict[int, list[str]] | str = RESP_REJECT,
    ) -> None:
        self._initiatives = {k: list(v) for k, v in (initiatives or {}).items()}
        self._rob = rob_responses
        self._trade = trade_responses
        self.fallbacks = 0

    def initiative(self, world: WorldState, actor: int) -> ActionIntent:
        queue = self._initiatives.get(actor)
        if queue:
            return queue.pop(0)
        return FarmIntent()

    def _pop(self, table, agent: int, default: str) -> str:
        if isinstance(table, str):
            return table
        queue = table.get(agent)
        if queue:
            return queue.pop(0)
        return default

    def rob_response(self, world: WorldState, target: int, actor: int, intent: RobIntent) -> str:
        return self._pop(self._rob, target, RESP_RESIST)

    def trade_response(self, world: WorldState, target: int, actor: int, intent: TradeIntent) -> str:
        return self._pop(self._trade, target, RESP_REJECT)


class ScriptedTransport:
    """Returns canned responses in order; raises listed exceptions in place."""

    def __init__(self, responses: list) -> None:
        self.responses = list(responses)
        self.calls = 0

    def send(self, request) -> str:
        self.calls += 1
        if not self.responses:
            raise AssertionError("scripted transport exhausted")
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class SyntheticLlm:
    """Deterministic fake model: plausible, occasionally sloppy replies.

    Decisions are a pure function of the prompt text, so recording a run and
    replaying its transcript exercises the exact same request sequence.
    """

    def __init__(self, population: int = 9, misbehave: bool = True) -> None:
        self.population = population
        self.misbehave = misbehave
        self.calls = 0

    def send(self, request) -> str:
        self.calls += 1
        prompt = request.prompt
        digest = int(hashlib.sha256(prompt.encode("utf-8")).hexdigest(), 16)
        if "CONCEDE or RESIST" in prompt:
            return "I choose to CONCEDE." if digest % 3 == 0 else "RESIST"
        if "ACCEPT or REJECT" in prompt:
            return "ACCEPT" if digest % 2 == 0 else "I must REJECT this offer."
        match = re.search(r"You are Agent (\d+)", prompt)
        actor = int(match.group(1)) if match else 0
        target = (actor + 1 + digest % (self.population - 1)) % self.population
        if target == actor:
            target = (target + 1) % self.population
        choice = digest % 8
        if self.misbehave and choice == 7:
            return "I choose to inherit the land from my previous self."
        if choice in (0, 1, 2):
            return json.dumps({"action": "farm", "payload": None, "reason": "steady food"})
        if choice in (3, 4):
            return json.dumps(
                {
                    "action": "rob",
                    "payload": {"RobPayload": {"TargetId": target, "ResourceType": "food", "Amount": 2}},
                    "reason": "they look weak",
                }
            )
        if choice == 5:
            return json.dumps(
                {
                    "action": "trade",
                    "payload": {
                        "TradePayload": {
                            "TargetId": target,
                            "PayType": "land",
                            "PayAmount": 1,
                            "GainType": "food",
                            "GainAmount": 1,
                        }
                    },
                    "reason": "food for land",
                }
            )
        return json.dumps(
            {
                "action": "donate",
                "payload": {"DonatePayload": {"TargetId": target, "ResourceType": "food", "Amount": 1}},
                "reason": "goodwill",
            }
        )


@pytest.fixture
def baseline_config() -> SimConfig:
    return SimConfig()


@pytest.fixture
def small_world() -> WorldState:
    return init_world(make_config(population=3, seed=11))


def set_agent(world: WorldState, agent_id: int, **fields) -> None:
    """Poke agent state directly for fixture setups."""
    agent = world.agent(agent_id)
    for name, value in fields.items():
        if name in ("food", "land"):
            setattr(agent, name, Fraction(value))
        elif name == "social_position":
            agent.social_position = value
        else:
            setattr(agent.disposition, name, value)
