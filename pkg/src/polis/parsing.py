"""Parsing of model replies into action intents and response tokens."""

from __future__ import annotations

import json
import re
from fractions import Fraction

from .actions import ActionIntent, DonateIntent, FarmIntent, RobIntent, TradeIntent
from .state import FOOD, LAND, RESP_ACCEPT, RESP_CONCEDE, RESP_REJECT, RESP_RESIST, Qty

NONSENSICAL = "nonsensical"
MALFORMED = "malformed"
ILLEGAL = "illegal"
AMBIGUOUS = "ambiguous"

ACTION_NAMES = ("farm", "rob", "trade", "donate")


class ParseError(ValueError):
    """A model reply that cannot be turned into a usable intent."""

    def __init__(self, kind: str, message: str) -> None:
        super().__init__(message)
        self.kind = kind


def extract_json_object(text: str) -> dict | None:
    """First JSON object in free text that carries an ``action`` key."""
    decoder = json.JSONDecoder()
    for start in range(len(text)):
        if text[start] != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and "action" in obj:
            return obj
        if isinstance(obj, dict):
            continue
    return None


def _payload_dict(payload: object, wrapper: str) -> dict:
    """Unwrap ``{"RobPayload": {...}}`` or accept the inner object directly."""
    if not isinstance(payload, dict):
        raise ParseError(MALFORMED, f"payload must be an object carrying {wrapper}")
    inner = payload.get(wrapper, payload)
    if not isinstance(inner, dict):
        raise ParseError(MALFORMED, f"{wrapper} must be an object")
    return inner


def _field(inner: dict, key: str) -> object:
    for candidate in (key, key[0].lower() + key[1:]):
        if candidate in inner:
            return inner[candidate]
    raise ParseError(MALFORMED, f"payload is missing {key}")


def _target_id(inner: dict, *, actor: int, population: int) -> int:
    raw = _field(inner, "TargetId")
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
        raise ParseError(MALFORMED, f"TargetId must be an integer, got {raw!r}")
    target = int(raw)
    if not 0 <= target < population:
        raise ParseError(ILLEGAL, f"TargetId {target} does not exist")
    if target == actor:
        raise ParseError(ILLEGAL, "TargetId may not be yourself")
    return target


def _amount(inner: dict, key: str) -> Qty:
    raw = _field(inner, key)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(MALFORMED, f"{key} must be a number, got {raw!r}")
    value = Fraction(raw)
    if value <= 0:
        raise ParseError(ILLEGAL, f"{key} must be positive, got {raw!r}")
    return value


def _resource(inner: dict, key: str) -> str:
    raw = _field(inner, key)
    value = str(raw).strip().lower()
    if value not in (FOOD, LAND):
        raise ParseError(MALFORMED, f"{key} must be 'food' or 'land', got {raw!r}")
    return value


def parse_initiative(text: str, *, actor: int, population: int) -> ActionIntent:
    """Extract the daily action object from a model reply.

    Unknown action names (the model inventing "inherit" or "party") are
    nonsensical; structural problems are malformed; bad targets or amounts
    are illegal. All three surface as ParseError for the retry path.
    """
    obj = extract_json_object(text)
    if obj is None:
        raise ParseError(MALFORMED, "no JSON action object found in reply")
    action = str(obj.get("action", "")).strip().lower()
    if action not in ACTION_NAMES:
        raise ParseError(NONSENSICAL, f"unknown action {action!r}")
    reason_raw = obj.get("reason")
    reason = str(reason_raw) if reason_raw is not None else None
    payload = obj.get("payload")

    if action == "farm":
        return FarmIntent(reason=reason)
    if action == "rob":
        inner = _payload_dict(payload, "RobPayload")
        return RobIntent(
            target=_target_id(inner, actor=actor, population=population),
            resource=_resource(inner, "ResourceType"),
            amount=_amount(inner, "Amount"),
            reason=reason,
        )
    if action == "trade":
        inner = _payload_dict(payload, "TradePayload")
        return TradeIntent(
            target=_target_id(inner, actor=actor, population=population),
            pay_type=_resource(inner, "PayType"),
            pay_amount=_amount(inner, "PayAmount"),
            gain_type=_resource(inner, "GainType"),
            gain_amount=_amount(inner, "GainAmount"),
            reason=reason,
        )
    inner = _payload_dict(payload, "DonatePayload")
    return DonateIntent(
        target=_target_id(inner, actor=actor, population=population),
        resource=_resource(inner, "ResourceType"),
        amount=_amount(inner, "Amount"),
        reason=reason,
    )


def _parse_two_token(text: str, token_a: str, token_b: str, value_a: str, value_b: str) -> str:
    """Case-insensitive token match, preferring a reply that is exactly the token."""
    lines = [line.strip().rstrip(".!").lower() for line in text.splitlines()]
    exact_a = token_a.lower() in lines
    exact_b = token_b.lower() in lines
    if exact_a and not exact_b:
        return value_a
    if exact_b and not exact_a:
        return value_b
    has_a = re.search(rf"\b{token_a}\b", text, re.IGNORECASE) is not None
    has_b = re.search(rf"\b{token_b}\b", text, re.IGNORECASE) is not None
    if has_a and has_b:
        raise ParseError(AMBIGUOUS, f"reply contains both {token_a} and {token_b}")
    if has_a:
        return value_a
    if has_b:
        return value_b
    raise ParseError(MALFORMED, f"reply contains neither {token_a} nor {token_b}")


def parse_rob_response(text: str) -> str:
    """CONCEDE or RESIST, found anywhere in the reply."""
    return _parse_two_token(text, "CONCEDE", "RESIST", RESP_CONCEDE, RESP_RESIST)


def parse_trade_response(text: str) -> str:
    """ACCEPT or REJECT, found anywhere in the reply."""
    return _parse_two_token(text, "ACCEPT", "REJECT", RESP_ACCEPT, RESP_REJECT)


def intent_to_payload_json(intent: ActionIntent) -> str:
    """Serialize an intent back into the reply shape the parser accepts.

    Round-trip partner of ``parse_initiative``; used by fixtures and the
    transcript tooling.
    """
    if isinstance(intent, FarmIntent):
        body: dict[str, object] = {"action": "farm", "payload": None}
    elif isinstance(intent, RobIntent):
        body = {
            "action": "rob",
            "payload": {
                "RobPayload": {
                    "TargetId": intent.target,
                    "ResourceType": intent.resource,
                    "Amount": float(intent.amount),
                }
            },
        }
    elif isinstance(intent, TradeIntent):
        body = {
            "action": "trade",
            "payload": {
                "TradePayload": {
                    "TargetId": intent.target,
                    "PayType": intent.pay_type,
                    "PayAmount": float(intent.pay_amount),
                    "GainType": intent.gain_type,
                    "GainAmount": float(intent.gain_amount),
                }
            },
        }
    elif isinstance(intent, DonateIntent):
        body = {
            "action": "donate",
            "payload": {
                "DonatePayload": {
                    "TargetId": intent.target,
                    "ResourceType": intent.resource,
                    "Amount": float(intent.amount),
                }
            },
        }
    else:
        raise TypeError(f"unknown intent {intent!r}")
    if intent.reason is not None:
        body["reason"] = intent.reason
    return json.dumps(body)
