"""Structural well-formedness checking with coded, machine-readable diagnostics.

``validate`` never raises: findings are the result. The check list is fixed
(V001-V012); V009 and V010 are warnings, everything else is an error. Cascading
findings are reported, not suppressed, and the output order is deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any

from bipan.errors import BiPanError
from bipan.model import BiPanModel, FlowRole, ProductKind


class Severity(Enum):
    ERROR = "Error"
    WARNING = "Warning"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: Severity
    nodes: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class Diagnostics:
    """All findings for one model, sorted by (code, first node id)."""

    items: tuple[Diagnostic, ...]

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.items if d.severity is Severity.ERROR)

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.items if d.severity is Severity.WARNING)

    @property
    def has_errors(self) -> bool:
        return any(d.severity is Severity.ERROR for d in self.items)

    @property
    def ok(self) -> bool:
        return not self.items

    def codes(self) -> tuple[str, ...]:
        return tuple(sorted({d.code for d in self.items}))

    def to_obj(self) -> dict[str, Any]:
        return {
            "items": [
                {
                    "code": d.code,
                    "message": d.message,
                    "nodes": list(d.nodes),
                    "severity": d.severity.value,
                }
                for d in self.items
            ],
            "summary": {"errors": len(self.errors), "warnings": len(self.warnings)},
        }


def _d(code: str, severity: Severity, nodes: tuple[str, ...], message: str) -> Diagnostic:
    return Diagnostic(code, severity, nodes, message)


def _check_processes(model: BiPanModel, found: list[Diagnostic]) -> None:
    for proc in model.processes:
        outs = model.outputs_of(proc.id)
        if len(outs) != 1:
            found.append(
                _d(
                    "V001",
                    Severity.ERROR,
                    (proc.id, *outs),
                    f"process '{proc.id}' must have exactly one output product (found {len(outs)})",
                )
            )
        if not model.inputs_of(proc.id):
            found.append(
                _d("V002", Severity.ERROR, (proc.id,), f"process '{proc.id}' has no input products")
            )
        if not model.skill_ids_of(proc.id):
            found.append(
                _d("V009", Severity.WARNING, (proc.id,), f"process '{proc.id}' has no skill edges")
            )


def _check_products(model: BiPanModel, found: list[Diagnostic]) -> None:
    for prod in model.products:
        producers = model.producers_of(prod.id)
        consumers = model.consumers_of(prod.id)

        parts = []
        involved: set[str] = set()
        if len(producers) > 1:
            parts.append(f"{len(producers)} producers ({', '.join(producers)})")
            involved.update(producers)
        if len(consumers) > 1:
            parts.append(f"{len(consumers)} consumers ({', '.join(consumers)})")
            involved.update(consumers)
        if parts:
            found.append(
                _d(
                    "V003",
                    Severity.ERROR,
                    (prod.id, *sorted(involved)),
                    f"product '{prod.id}' has " + " and ".join(parts),
                )
            )

        if prod.kind is ProductKind.FINAL:
            issues = []
            if consumers:
                issues.append(f"has a consumer ('{consumers[0]}')")
            if not producers:
                issues.append("has no producer")
            if issues:
                found.append(
                    _d(
                        "V005",
                        Severity.ERROR,
                        (prod.id,),
                        f"final product '{prod.id}' " + " and ".join(issues),
                    )
                )
        elif prod.kind is ProductKind.STAGE:
            issues = []
            if not producers:
                issues.append("has no producer")
            if not consumers:
                issues.append("has no consumer")
            if issues:
                found.append(
                    _d(
                        "V006",
                        Severity.ERROR,
                        (prod.id,),
                        f"stage '{prod.id}' " + " and ".join(issues),
                    )
                )
        elif producers:
            found.append(
                _d(
                    "V007",
                    Severity.ERROR,
                    (prod.id, *producers),
                    f"{prod.kind.value} product '{prod.id}' must not have a producer "
                    f"(produced by '{producers[0]}')",
                )
            )

        if not prod.has_finite_position():
            found.append(
                _d(
                    "V012",
                    Severity.ERROR,
                    (prod.id,),
                    f"product '{prod.id}' has a non-finite position component",
                )
            )


def _check_final_count(model: BiPanModel, found: list[Diagnostic]) -> None:
    finals = model.final_products()
    if len(finals) != 1:
        listing = f": {', '.join(finals)}" if finals else ""
        found.append(
            _d(
                "V004",
                Severity.ERROR,
                finals,
                f"model must contain exactly one Final product (found {len(finals)}{listing})",
            )
        )


def _check_cycles(model: BiPanModel, found: list[Diagnostic]) -> None:
    # Flow graph in assembly direction: input product -> process -> output product.
    adjacency: dict[str, list[str]] = {p.id: [] for p in model.products}
    adjacency.update({p.id: [] for p in model.processes})
    for flow in model.flows:
        if flow.role is FlowRole.INPUT:
            adjacency[flow.product].append(flow.process)
        else:
            adjacency[flow.process].append(flow.product)
    for targets in adjacency.values():
        targets.sort()

    # Iterative Tarjan SCC.
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    sccs: list[list[str]] = []

    for root in sorted(adjacency):
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, edge_idx = work.pop()
            if edge_idx == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            targets = adjacency[node]
            for i in range(edge_idx, len(targets)):
                target = targets[i]
                if target not in index:
                    work.append((node, i + 1))
                    work.append((target, 0))
                    advanced = True
                    break
                if target in on_stack:
                    low[node] = min(low[node], index[target])
            if advanced:
                continue
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1:
                    sccs.append(sorted(component))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    for component in sorted(sccs):
        found.append(
            _d(
                "V008",
                Severity.ERROR,
                tuple(component),
                "flow graph contains a cycle involving: " + ", ".join(component),
            )
        )


def _check_reachability(model: BiPanModel, found: list[Diagnostic]) -> None:
    # Reverse traversal from the final product(s); if none exist, fall back to
    # sink products so that a merely re-kinded root does not mark everything.
    roots = list(model.final_products())
    if not roots:
        roots = [p.id for p in model.products if not model.consumers_of(p.id)]
    visited: set[str] = set()
    queue = deque(roots)
    while queue:
        node = queue.popleft()
        if node in visited:
            continue
        visited.add(node)
        if model.has_product(node):
            queue.extend(model.producers_of(node))
        elif model.has_process(node):
            queue.extend(model.inputs_of(node))
            queue.extend(model.skill_ids_of(node))
    all_ids = (
        [p.id for p in model.products]
        + [p.id for p in model.processes]
        + [s.id for s in model.skills]
    )
    for node_id in all_ids:
        if node_id not in visited:
            found.append(
                _d(
                    "V010",
                    Severity.WARNING,
                    (node_id,),
                    f"'{node_id}' is unreachable from the final product",
                )
            )


def _check_fastens(model: BiPanModel, found: list[Diagnostic]) -> None:
    for link in model.fastens:
        nodes = (link.fastener, *sorted(link.secures))
        fastener = model.product(link.fastener)
        if fastener.kind is not ProductKind.FASTENER:
            found.append(
                _d(
                    "V011",
                    Severity.ERROR,
                    nodes,
                    f"fastens link fastener '{link.fastener}' has kind {fastener.kind.value}, "
                    "expected Fastener",
                )
            )
            continue
        members = set(nodes)
        host = next(
            (
                proc.id
                for proc in model.processes
                if members <= set(model.inputs_of(proc.id))
            ),
            None,
        )
        if host is None:
            found.append(
                _d(
                    "V011",
                    Severity.ERROR,
                    nodes,
                    f"fastens link '{link.fastener}' -> {{{', '.join(sorted(link.secures))}}} "
                    "members are not all inputs of one common process",
                )
            )


def validate(model: BiPanModel) -> Diagnostics:
    """Run the full fixed check list; an empty result means the model is valid."""
    found: list[Diagnostic] = []
    _check_processes(model, found)
    _check_products(model, found)
    _check_final_count(model, found)
    _check_cycles(model, found)
    _check_reachability(model, found)
    _check_fastens(model, found)
    found.sort(key=lambda d: (d.code, d.nodes[0] if d.nodes else "", d.message))
    return Diagnostics(tuple(found))


def ensure_valid(model: BiPanModel) -> None:
    """Raise ``invalid-model`` if validation reports any Error findings."""
    diags = validate(model)
    if diags.has_errors:
        codes = sorted({d.code for d in diags.errors})
        raise BiPanError(
            "invalid-model",
            f"model '{model.id}' fails validation: {', '.join(codes)}",
        )
