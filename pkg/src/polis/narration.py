"""First-person memory lines pushed to agents after each resolved event.

Line wording is frozen: prompts must be byte-stable, and the scripted
provider reads battle records attached to these entries.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .state import (
    CONCEDE,
    DONATE,
    FARM,
    RESP_ACCEPT,
    RESP_CONCEDE,
    RESP_REJECT,
    RESP_RESIST,
    ROB,
    TRADE,
    BattleRecord,
    MemoryEntry,
    fmt_qty,
)

if TYPE_CHECKING:
    from .state import Event, WorldState


def _transfer_text(event: "Event") -> str:
    resource = str(event.payload.get("resource", ""))
    deltas = event.outcome.food if resource == "food" else event.outcome.land
    gained = deltas.get(event.actor)
    amount = fmt_qty(gained) if gained is not None else fmt_qty(event.payload.get("amount", 0))  # type: ignore[arg-type]
    return f"{amount} units of {resource}"


def memory_entries(event: "Event", world: "WorldState") -> dict[int, MemoryEntry]:
    """Render the lines each involved agent remembers about this event.

    Consumption and administrative records produce no memory: the agents'
    log keeps only the actions they initiated or received.
    """
    day = event.day
    actor = event.actor
    target = event.target
    out: dict[int, MemoryEntry] = {}

    if event.kind == FARM:
        gained = event.outcome.food.get(actor, 0)
        out[actor] = MemoryEntry(f"Day {day}. I farmed and gained {fmt_qty(gained)} units of food.")

    elif event.kind == ROB and target is not None:
        detail = event.outcome.detail
        took = _transfer_text(event)
        if detail == "subordinate":
            out[actor] = MemoryEntry(f"Day {day}. I robbed my subordinate agent {target} and took {took}.")
            out[target] = MemoryEntry(f"Day {day}. My superior agent {actor} robbed me and took {took}.")
        elif detail == "protected":
            protector = event.payload.get("protector")
            out[actor] = MemoryEntry(
                f"Day {day}. I tried to rob agent {target}, but agent {target} is under agent "
                f"{protector}'s protection, so nothing happened."
            )
            out[target] = MemoryEntry(
                f"Day {day}. Agent {actor} tried to rob me, but my superior agent {protector} "
                "protects me, so nothing happened."
            )
        elif event.response == RESP_CONCEDE:
            out[actor] = MemoryEntry(
                f"Day {day}. I tried to rob agent {target}, who conceded to me and became my "
                f"subordinate. I took {took}."
            )
            out[target] = MemoryEntry(
                f"Day {day}. Agent {actor} tried to rob me and I conceded. Agent {actor} became "
                f"my superior and took {took}."
            )
        elif event.response == RESP_RESIST:
            robber_won = detail == "win"
            if robber_won:
                out[actor] = MemoryEntry(
                    f"Day {day}. I tried to rob agent {target}, who resisted and I won. I took "
                    f"{took} and my social position rose 1 unit.",
                    battle=BattleRecord(opponent=target, won=True),
                )
                out[target] = MemoryEntry(
                    f"Day {day}. Agent {actor} tried to rob me, I resisted and lost. I lost {took} "
                    "and my social position dropped 1 unit.",
                    battle=BattleRecord(opponent=actor, won=False),
                )
            else:
                out[actor] = MemoryEntry(
                    f"Day {day}. I tried to rob agent {target}, who resisted and I lost. I did not "
                    "gain anything and my social position dropped 1 unit.",
                    battle=BattleRecord(opponent=target, won=False),
                )
                out[target] = MemoryEntry(
                    f"Day {day}. Agent {actor} tried to rob me, I resisted and won. I kept my "
                    "resources and my social position rose 1 unit.",
                    battle=BattleRecord(opponent=actor, won=True),
                )

    elif event.kind == TRADE and target is not None:
        pay_type = event.payload.get("pay_type")
        gain_type = event.payload.get("gain_type")
        pay = fmt_qty(event.payload.get("pay_amount", 0))  # type: ignore[arg-type]
        gain = fmt_qty(event.payload.get("gain_amount", 0))  # type: ignore[arg-type]
        offer = (
            f"Day {day}. I initiated a trade to agent {target}, which is to exchange {pay} units "
            f"of my {pay_type} for {gain} units of its {gain_type}."
        )
        received = (
            f"Day {day}. Agent {actor} initiated a trade to me, offering {pay} units of its "
            f"{pay_type} for {gain} units of my {gain_type}."
        )
        if event.response == RESP_REJECT:
            out[actor] = MemoryEntry(
                offer + " But it rejected it so I gained nothing and exhausted my action "
                "opportunity for today."
            )
            out[target] = MemoryEntry(received + " I rejected it.")
        elif event.outcome.detail == "void":
            failed = " but one of us lacked the resources, so the trade failed and nothing was exchanged."
            out[actor] = MemoryEntry(offer + " It accepted it" + failed)
            out[target] = MemoryEntry(received + " I accepted it" + failed)
        else:
            out[actor] = MemoryEntry(
                offer + f" It accepted it so I paid {pay} units of {pay_type} and gained {gain} "
                f"units of {gain_type}."
            )
            out[target] = MemoryEntry(
                received + f" I accepted it so I gained {pay} units of {pay_type} and paid {gain} "
                f"units of {gain_type}."
            )

    elif event.kind == DONATE and target is not None:
        resource = event.payload.get("resource")
        given = fmt_qty(event.payload.get("amount", 0))  # type: ignore[arg-type]
        out[actor] = MemoryEntry(f"Day {day}. I donated {given} units of {resource} to agent {target}.")
        out[target] = MemoryEntry(f"Day {day}. Agent {actor} donated {given} units of {resource} to me.")

    elif event.kind == CONCEDE and target is not None:
        # The rob lines already cover both parties; only re-pointed third
        # parties learn their contract moved.
        for agent_id in event.payload.get("reassigned", ()):  # type: ignore[union-attr]
            out[int(agent_id)] = MemoryEntry(
                f"Day {day}. My superior agent {actor} conceded to agent {target}, so agent "
                f"{target} is now my superior."
            )

    return out


def describe_incoming_rob(actor: int, resource: str, amount: object) -> str:
    """Sentence substituted into the rob-response prompt."""
    return f"agent {actor} is robbing you, attempting to take {fmt_qty(amount)} units of your {resource}"  # type: ignore[arg-type]


def describe_incoming_trade(actor: int, pay_type: str, pay_amount: object, gain_type: str, gain_amount: object) -> str:
    """Sentence substituted into the trade-response prompt."""
    return (
        f"agent {actor} initiated a trade with you: it offers {fmt_qty(pay_amount)} units of its "  # type: ignore[arg-type]
        f"{pay_type} in exchange for {fmt_qty(gain_amount)} units of your {gain_type}"  # type: ignore[arg-type]
    )
