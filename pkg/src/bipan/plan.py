"""Directional plan extraction from a bidirectional model, plus resource feasibility.

One model yields assembly, full or partial disassembly, and component-swap
repair plans. Every plan is a pure view: the model is never mutated, and
identical inputs always produce identical plans (ties broken by ascending id).
Plans replay in :mod:`bipan.execute`, which acts as the independent oracle and
deliberately shares no traversal code with the planners here.

Repair plans descend from the final product, swapping each broken component the
moment its enclosing stage is the topmost present assembly, and reassemble on
the way back up. Once a component has been swapped, later steps consume and
produce its replacement id instead of the original.

Swap steps need a skill scope. If a fastens link names the broken component,
the scope is "manipulation" plus the skills attributable to its securing
fasteners: a fastener's ``skill`` attribute when set, otherwise all of the
process's direction-changing skills. Without fastens coverage the scope is
every skill of the consuming process (a safe over-approximation). Either way
each scoped skill contributes both its forward and its inverted label.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from bipan.canon import model_digest
from bipan.errors import BiPanError
from bipan.model import COMPONENT_KINDS, BiPanModel, ProductKind
from bipan.validate import ensure_valid


class Direction(Enum):
    FORWARD = "Forward"
    REVERSE = "Reverse"
    SWAP = "Swap"


class DisassemblyMode(Enum):
    EXPOSE = "Expose"
    EXTRACT = "Extract"


#: Default assembly-to-disassembly skill relabeling; unmapped labels invert to themselves.
DEFAULT_INVERSION: dict[str, str] = {
    "screwing": "unscrewing",
    "connecting-cables": "disconnecting-cables",
    "manipulation": "manipulation",
}


@dataclass(frozen=True)
class SkillInversion:
    """Relabeling of skills when a process runs in disassembly direction."""

    mapping: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", dict(self.mapping))

    @classmethod
    def default(cls) -> SkillInversion:
        return cls(dict(DEFAULT_INVERSION))

    @classmethod
    def identity(cls) -> SkillInversion:
        return cls({})

    def apply(self, label: str) -> str:
        return self.mapping.get(label, label)

    def apply_all(self, labels: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted({self.apply(label) for label in labels}))

    def extended_with_inverses(self) -> SkillInversion:
        """The mapping closed under inverse pairs, making it an involution."""
        extended = dict(self.mapping)
        for fwd, rev in self.mapping.items():
            extended.setdefault(rev, fwd)
        return SkillInversion(extended)


@dataclass(frozen=True)
class PlanStep:
    """One directed process application with resolved inventory effect and skills."""

    process: str
    direction: Direction
    consumed: tuple[str, ...]
    produced: tuple[str, ...]
    required_skills: tuple[str, ...]
    swap_target: str | None = None
    swap_replacement: str | None = None


@dataclass(frozen=True)
class Plan:
    """Ordered steps bound to one model version via its digest."""

    model_id: str
    model_digest: str
    steps: tuple[PlanStep, ...]

    def process_sequence(self) -> tuple[str, ...]:
        return tuple(step.process for step in self.steps)

    def replacement_ids(self) -> tuple[str, ...]:
        return tuple(
            sorted(
                {
                    step.swap_replacement
                    for step in self.steps
                    if step.swap_replacement is not None
                }
            )
        )


@dataclass(frozen=True)
class Resource:
    id: str
    skills: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "skills", frozenset(self.skills))


@dataclass(frozen=True)
class ResourceRegistry:
    resources: tuple[Resource, ...]

    def __post_init__(self) -> None:
        by_id: dict[str, Resource] = {}
        for res in self.resources:
            if res.id in by_id:
                raise BiPanError("duplicate-id", f"duplicate resource id '{res.id}'")
            by_id[res.id] = res
        object.__setattr__(self, "resources", tuple(by_id[i] for i in sorted(by_id)))

    def available_skills(self) -> frozenset[str]:
        skills: set[str] = set()
        for res in self.resources:
            skills |= res.skills
        return frozenset(skills)

    @classmethod
    def from_obj(cls, obj: Any) -> ResourceRegistry:
        if not isinstance(obj, dict) or not isinstance(obj.get("resources"), list):
            raise BiPanError("parse-error", "registry document must be {\"resources\": [...]}")
        resources = []
        for i, entry in enumerate(obj["resources"]):
            if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
                raise BiPanError("parse-error", f"registry resource [{i}] must have a string id")
            skills = entry.get("skills", [])
            if not isinstance(skills, list) or not all(isinstance(s, str) for s in skills):
                raise BiPanError(
                    "parse-error", f"registry resource '{entry['id']}' skills must be strings"
                )
            resources.append(Resource(entry["id"], frozenset(skills)))
        return cls(tuple(resources))

    def to_obj(self) -> dict[str, Any]:
        return {
            "resources": [{"id": r.id, "skills": sorted(r.skills)} for r in self.resources]
        }


@dataclass(frozen=True)
class StepFeasibility:
    index: int
    missing_skills: tuple[str, ...]


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    per_step: tuple[StepFeasibility, ...]

    def to_obj(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "per_step": [
                {"index": s.index, "missing_skills": list(s.missing_skills)}
                for s in self.per_step
            ],
        }


# -- plan extraction ---------------------------------------------------------


def assembly_order(model: BiPanModel) -> tuple[str, ...]:
    """Topological order of processes in assembly direction, least id first among ready."""
    dependents: dict[str, list[str]] = {p.id: [] for p in model.processes}
    indegree: dict[str, int] = {p.id: 0 for p in model.processes}
    for proc in model.processes:
        for inp in model.inputs_of(proc.id):
            upstream = model.producer_of(inp)
            if upstream is not None:
                dependents[upstream].append(proc.id)
                indegree[proc.id] += 1
    ready = [pid for pid, deg in sorted(indegree.items()) if deg == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        pid = heapq.heappop(ready)
        order.append(pid)
        for follower in dependents[pid]:
            indegree[follower] -= 1
            if indegree[follower] == 0:
                heapq.heappush(ready, follower)
    if len(order) != len(model.processes):
        raise BiPanError("invalid-model", f"model '{model.id}' flow graph is cyclic")
    return tuple(order)


def _forward_step(model: BiPanModel, process_id: str) -> PlanStep:
    output = model.output_of(process_id)
    assert output is not None  # guaranteed by validation (V001)
    return PlanStep(
        process=process_id,
        direction=Direction.FORWARD,
        consumed=model.inputs_of(process_id),
        produced=(output,),
        required_skills=model.skill_labels_of(process_id),
    )


def _reverse_step(model: BiPanModel, process_id: str, inv: SkillInversion) -> PlanStep:
    output = model.output_of(process_id)
    assert output is not None
    return PlanStep(
        process=process_id,
        direction=Direction.REVERSE,
        consumed=(output,),
        produced=model.inputs_of(process_id),
        required_skills=inv.apply_all(model.skill_labels_of(process_id)),
    )


def assembly_recipe(model: BiPanModel) -> Plan:
    """Forward steps over all processes, in assembly topological order."""
    ensure_valid(model)
    steps = tuple(_forward_step(model, pid) for pid in assembly_order(model))
    return Plan(model.id, model_digest(model), steps)


def full_disassembly(model: BiPanModel, inv: SkillInversion | None = None) -> Plan:
    """Reverse steps over all processes: assembly order backwards, skills inverted."""
    ensure_valid(model)
    inv = inv if inv is not None else SkillInversion.default()
    steps = tuple(_reverse_step(model, pid, inv) for pid in reversed(assembly_order(model)))
    return Plan(model.id, model_digest(model), steps)


def disassembly_to(
    model: BiPanModel,
    target: str,
    mode: DisassemblyMode,
    inv: SkillInversion | None = None,
) -> Plan:
    """Partial disassembly toward one product.

    Expose reverses from the root down to (excluding) the target's consuming
    process, so the stage containing the target becomes a free inventory item;
    Extract additionally reverses that process, freeing the target itself.
    """
    ensure_valid(model)
    inv = inv if inv is not None else SkillInversion.default()
    if model.product(target).kind is ProductKind.FINAL:
        raise BiPanError("target-is-final", f"cannot plan disassembly to final product '{target}'")
    spine = model.spine(target)
    root_first = tuple(reversed(spine))
    selected = root_first if mode is DisassemblyMode.EXTRACT else root_first[:-1]
    steps = tuple(_reverse_step(model, pid, inv) for pid in selected)
    return Plan(model.id, model_digest(model), steps)


def _swap_skills(model: BiPanModel, site: str, broken: str, inv: SkillInversion) -> tuple[str, ...]:
    labels = set(model.skill_labels_of(site))
    site_inputs = set(model.inputs_of(site))
    securing = sorted(
        {
            link.fastener
            for link in model.fastens
            if link.fastener in site_inputs and broken in link.secures
        }
    )
    if securing:
        scope = {"manipulation"}
        directional = {label for label in labels if inv.apply(label) != label}
        for fastener_id in securing:
            declared = model.product(fastener_id).attributes.get("skill")
            if declared:
                scope.add(declared)
            else:
                scope |= directional
    else:
        scope = set(labels)
    return tuple(sorted(scope | {inv.apply(label) for label in scope}))


def _swap_step(
    model: BiPanModel, site: str, broken: str, replacement: str, inv: SkillInversion
) -> PlanStep:
    return PlanStep(
        process=site,
        direction=Direction.SWAP,
        consumed=(replacement,),
        produced=(broken,),
        required_skills=_swap_skills(model, site, broken, inv),
        swap_target=broken,
        swap_replacement=replacement,
    )


def repair_plan(
    model: BiPanModel,
    broken: Iterable[str],
    replacements: Mapping[str, str],
    inv: SkillInversion | None = None,
) -> Plan:
    """Single descend/ascend pass replacing every broken component.

    The plan reverses each process strictly above a swap site (root first),
    emits the swap the moment the site's output stage is topmost, then runs the
    reversed processes forward again. Swap steps consume the replacement and
    produce the broken component as a free, removed item.
    """
    ensure_valid(model)
    inv = inv if inv is not None else SkillInversion.default()
    broken_ids = sorted(set(broken))

    used_replacements: dict[str, str] = {}
    for component in broken_ids:
        node = model.product(component)  # raises unknown-node
        if node.kind not in COMPONENT_KINDS:
            raise BiPanError(
                "broken-kind-not-replaceable",
                f"cannot replace '{component}' of kind {node.kind.value}",
            )
        if component not in replacements:
            raise BiPanError("missing-replacement", f"no replacement id for '{component}'")
        replacement = replacements[component]
        if model.has_node(replacement):
            raise BiPanError(
                "replacement-exists",
                f"replacement id '{replacement}' already names a node in model '{model.id}'",
            )
        if replacement in used_replacements:
            raise BiPanError(
                "replacement-exists",
                f"replacement id '{replacement}' assigned to more than one broken component",
            )
        used_replacements[replacement] = component

    # Swap site per broken component, and the set of processes strictly above any site.
    sites: dict[str, list[str]] = {}
    to_reverse: set[str] = set()
    for component in broken_ids:
        spine = model.spine(component)  # raises detached-node for dangling components
        sites.setdefault(spine[0], []).append(component)
        to_reverse.update(spine[1:])

    def depth(process_id: str) -> int:
        output = model.output_of(process_id)
        assert output is not None
        return len(model.spine(output))

    reversal = sorted(to_reverse, key=lambda pid: (depth(pid), pid))

    substitution: dict[str, str] = {}
    steps: list[PlanStep] = []
    swapped: set[str] = set()

    def emit_swaps_at(site: str) -> None:
        swapped.add(site)
        for component in sorted(sites[site]):
            steps.append(_swap_step(model, site, component, replacements[component], inv))
            substitution[component] = replacements[component]

    def resolve(ids: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(substitution.get(i, i) for i in ids))

    # Sites whose output is already topmost (the final product) swap before any reversal.
    for site in sorted(sites):
        if not model.spine(model.output_of(site)):
            emit_swaps_at(site)

    for process_id in reversal:
        output = model.output_of(process_id)
        assert output is not None
        steps.append(
            PlanStep(
                process=process_id,
                direction=Direction.REVERSE,
                consumed=(output,),
                produced=resolve(model.inputs_of(process_id)),
                required_skills=inv.apply_all(model.skill_labels_of(process_id)),
            )
        )
        freed = set(model.inputs_of(process_id))
        for site in sorted(sites):
            if site not in swapped and model.output_of(site) in freed:
                emit_swaps_at(site)

    for process_id in reversed(reversal):
        output = model.output_of(process_id)
        assert output is not None
        steps.append(
            PlanStep(
                process=process_id,
                direction=Direction.FORWARD,
                consumed=resolve(model.inputs_of(process_id)),
                produced=(output,),
                required_skills=model.skill_labels_of(process_id),
            )
        )

    return Plan(model.id, model_digest(model), tuple(steps))


def check_feasibility(plan: Plan, registry: ResourceRegistry) -> FeasibilityReport:
    """Per-step skill gap against the union of registry skills."""
    available = registry.available_skills()
    per_step = tuple(
        StepFeasibility(i, tuple(sorted(set(step.required_skills) - available)))
        for i, step in enumerate(plan.steps)
    )
    return FeasibilityReport(all(not s.missing_skills for s in per_step), per_step)
