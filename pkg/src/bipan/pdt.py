"""Per-physical-instance product twin: health map plus append-only event log.

An instance binds a serial number to one model version (by digest) and records
component health at model-node granularity. Instances are immutable values;
mutating operations return an updated copy with an event appended. No operation
reads the clock: timestamps always arrive from the caller, which keeps twins
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum

from bipan.canon import model_digest
from bipan.errors import BiPanError
from bipan.model import COMPONENT_KINDS, BiPanModel
from bipan.plan import Plan, SkillInversion, repair_plan
from bipan.validate import ensure_valid


class Health(Enum):
    OK = "Ok"
    DEGRADED = "Degraded"
    BROKEN = "Broken"
    UNKNOWN = "Unknown"


def parse_timestamp(value: str) -> datetime:
    """Strict ISO-8601 UTC timestamp ('...Z' or '...+00:00')."""
    text = value[:-1] + "+00:00" if value.endswith("Z") else value
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise BiPanError("invalid-timestamp", f"not an ISO-8601 timestamp: {value!r}") from exc
    if parsed.tzinfo is None or parsed.utcoffset() != timezone.utc.utcoffset(None):
        raise BiPanError("invalid-timestamp", f"timestamp must be UTC: {value!r}")
    return parsed


@dataclass(frozen=True)
class Event:
    timestamp: str
    kind: str
    payload: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        parse_timestamp(self.timestamp)
        object.__setattr__(self, "payload", dict(self.payload))


@dataclass(frozen=True)
class PdtInstance:
    """Digital twin of one physical product, bound to a model version."""

    instance_id: str
    model_id: str
    model_digest: str
    health: dict[str, Health]
    events: tuple[Event, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "health", dict(self.health))
        last: datetime | None = None
        for event in self.events:
            current = parse_timestamp(event.timestamp)
            if last is not None and current < last:
                raise BiPanError(
                    "time-regression",
                    f"event log timestamps decrease at {event.timestamp!r}",
                )
            last = current

    def last_timestamp(self) -> datetime | None:
        return parse_timestamp(self.events[-1].timestamp) if self.events else None

    def broken_components(self) -> tuple[str, ...]:
        return tuple(sorted(c for c, h in self.health.items() if h is Health.BROKEN))

    def file_name(self) -> str:
        return f"{self.instance_id}.pdt.json"


def create_instance(instance_id: str, model: BiPanModel) -> PdtInstance:
    """Fresh twin: every replaceable component Unknown, event log empty."""
    if not instance_id:
        raise BiPanError("empty-id", "instance id must be non-empty")
    ensure_valid(model)
    health = {p.id: Health.UNKNOWN for p in model.products if p.kind in COMPONENT_KINDS}
    return PdtInstance(
        instance_id=instance_id,
        model_id=model.id,
        model_digest=model_digest(model),
        health=health,
        events=(),
    )


def _append_event(pdt: PdtInstance, timestamp: str, kind: str, payload: dict[str, str]) -> PdtInstance:
    when = parse_timestamp(timestamp)
    last = pdt.last_timestamp()
    if last is not None and when < last:
        raise BiPanError(
            "time-regression",
            f"timestamp {timestamp!r} is earlier than the last event",
        )
    return replace(pdt, events=(*pdt.events, Event(timestamp, kind, payload)))


def set_health(pdt: PdtInstance, component: str, health: Health, timestamp: str) -> PdtInstance:
    """Record a component health observation; always appends to the audit log."""
    if component not in pdt.health:
        raise BiPanError(
            "unknown-component",
            f"'{component}' is not a tracked component of instance '{pdt.instance_id}'",
        )
    updated = replace(pdt, health={**pdt.health, component: health})
    return _append_event(
        updated, timestamp, "health-update", {"component": component, "health": health.value}
    )


def plan_repair_for(
    pdt: PdtInstance,
    model: BiPanModel,
    replacements: dict[str, str],
    timestamp: str,
    inv: SkillInversion | None = None,
) -> tuple[PdtInstance, Plan]:
    """Repair plan for all currently Broken components; logs a plan-created event.

    Returns the updated instance together with the plan (instances are values,
    so the event-carrying copy must be handed back to the caller).
    """
    digest = model_digest(model)
    if digest != pdt.model_digest:
        raise BiPanError(
            "digest-mismatch",
            f"instance '{pdt.instance_id}' is bound to digest {pdt.model_digest[:12]}..., "
            f"model '{model.id}' has {digest[:12]}...",
        )
    broken = pdt.broken_components()
    if not broken:
        raise BiPanError("nothing-broken", f"instance '{pdt.instance_id}' has no Broken component")
    plan = repair_plan(model, broken, replacements, inv)
    payload = {
        "broken": ",".join(broken),
        "replacements": ",".join(f"{b}={replacements[b]}" for b in broken),
        "steps": str(len(plan.steps)),
    }
    return _append_event(pdt, timestamp, "plan-created", payload), plan
