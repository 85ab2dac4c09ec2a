"""Core bidirectional product-process-resource graph and read-only structural queries.

A model is an immutable value holding three node families (products, processes,
resource skills), flow edges tying products to processes, skill edges tying
processes to the skills they require, and optional fastens links that record
which fastener secures which sibling components. Flow edges carry no direction
of their own: assembly and disassembly are directions of *extracted plans*, not
of the stored graph.

Construction enforces referential integrity (unique ids, resolvable edge
endpoints); the structural rules beyond that (V-codes) live in
:mod:`bipan.validate`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from bipan.errors import BiPanError

_ID_RE = re.compile(r"[A-Za-z0-9_.-]+\Z")


def check_id(value: object) -> str:
    """Return ``value`` if it is a well-formed node id, else raise ``invalid-id``."""
    if not isinstance(value, str) or not _ID_RE.fullmatch(value):
        raise BiPanError(
            "invalid-id",
            f"node id {value!r} must be a non-empty string matching [A-Za-z0-9_.-]+",
        )
    return value


class ProductKind(Enum):
    """Role a product plays in the assembly/disassembly flow."""

    ELEMENTARY = "Elementary"
    SUB_PRODUCT = "SubProduct"
    FASTENER = "Fastener"
    FINAL = "Final"
    STAGE = "Stage"


#: Kinds that may carry a health state and be replaced during repair.
COMPONENT_KINDS = (ProductKind.ELEMENTARY, ProductKind.SUB_PRODUCT, ProductKind.FASTENER)


class FlowRole(Enum):
    INPUT = "Input"
    OUTPUT = "Output"


@dataclass(frozen=True)
class ProductNode:
    """A concrete product instance (not a part type; shared types go in ``type_ref``)."""

    id: str
    label: str
    kind: ProductKind
    type_ref: str | None = None
    position: tuple[float, float, float] | None = None
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        check_id(self.id)
        if self.position is not None:
            try:
                pos = tuple(float(c) for c in self.position)
            except (TypeError, ValueError) as exc:
                raise BiPanError(
                    "invalid-position", f"product '{self.id}': position components must be numbers"
                ) from exc
            if len(pos) != 3:
                raise BiPanError(
                    "invalid-position",
                    f"product '{self.id}': position must have exactly three components",
                )
            object.__setattr__(self, "position", pos)
        object.__setattr__(self, "attributes", dict(self.attributes))

    def has_finite_position(self) -> bool:
        return self.position is None or all(math.isfinite(c) for c in self.position)


@dataclass(frozen=True)
class ProcessNode:
    id: str
    label: str

    def __post_init__(self) -> None:
        check_id(self.id)


@dataclass(frozen=True)
class SkillNode:
    """An abstract resource capability, e.g. "manipulation" or "screwing"."""

    id: str
    label: str

    def __post_init__(self) -> None:
        check_id(self.id)


@dataclass(frozen=True)
class FlowEdge:
    """Ties a product to a process, as consumed input or produced output."""

    product: str
    process: str
    role: FlowRole

    def __post_init__(self) -> None:
        check_id(self.product)
        check_id(self.process)


@dataclass(frozen=True)
class SkillEdge:
    process: str
    skill: str

    def __post_init__(self) -> None:
        check_id(self.process)
        check_id(self.skill)


@dataclass(frozen=True)
class FastensLink:
    """Optional refinement: a fastener product and the sibling inputs it secures."""

    fastener: str
    secures: frozenset[str]

    def __post_init__(self) -> None:
        check_id(self.fastener)
        secures = frozenset(check_id(s) for s in self.secures)
        object.__setattr__(self, "secures", secures)


def _sorted_unique_nodes(nodes, family: str):
    by_id: dict[str, object] = {}
    for node in nodes:
        if node.id in by_id:
            raise BiPanError("duplicate-id", f"duplicate {family} id '{node.id}'")
        by_id[node.id] = node
    return tuple(by_id[i] for i in sorted(by_id))


@dataclass(frozen=True)
class BiPanModel:
    """Immutable bidirectional product-process-resource network.

    Node and edge collections are normalized on construction: sorted by id,
    exact duplicate edges dropped, and all edge endpoints checked to resolve.
    """

    id: str
    products: tuple[ProductNode, ...] = ()
    processes: tuple[ProcessNode, ...] = ()
    skills: tuple[SkillNode, ...] = ()
    flows: tuple[FlowEdge, ...] = ()
    skill_edges: tuple[SkillEdge, ...] = ()
    fastens: tuple[FastensLink, ...] = ()

    def __post_init__(self) -> None:
        products = _sorted_unique_nodes(self.products, "product")
        processes = _sorted_unique_nodes(self.processes, "process")
        skills = _sorted_unique_nodes(self.skills, "skill")

        seen: dict[str, str] = {}
        for family, nodes in (("product", products), ("process", processes), ("skill", skills)):
            for node in nodes:
                if node.id in seen:
                    raise BiPanError(
                        "duplicate-id",
                        f"id '{node.id}' used by both a {seen[node.id]} and a {family}",
                    )
                seen[node.id] = family

        product_ids = {p.id for p in products}
        process_ids = {p.id for p in processes}
        skill_ids = {s.id for s in skills}

        for flow in self.flows:
            if flow.product not in product_ids:
                raise BiPanError(
                    "dangling-reference", f"flow references unknown product '{flow.product}'"
                )
            if flow.process not in process_ids:
                raise BiPanError(
                    "dangling-reference", f"flow references unknown process '{flow.process}'"
                )
        for edge in self.skill_edges:
            if edge.process not in process_ids:
                raise BiPanError(
                    "dangling-reference", f"skill edge references unknown process '{edge.process}'"
                )
            if edge.skill not in skill_ids:
                raise BiPanError(
                    "dangling-reference", f"skill edge references unknown skill '{edge.skill}'"
                )
        for link in self.fastens:
            for pid in (link.fastener, *sorted(link.secures)):
                if pid not in product_ids:
                    raise BiPanError(
                        "dangling-reference", f"fastens link references unknown product '{pid}'"
                    )

        flows = tuple(
            sorted(set(self.flows), key=lambda f: (f.process, f.role.value, f.product))
        )
        skill_edges = tuple(sorted(set(self.skill_edges), key=lambda e: (e.process, e.skill)))
        fastens = tuple(sorted(set(self.fastens), key=lambda l: (l.fastener, sorted(l.secures))))

        object.__setattr__(self, "products", products)
        object.__setattr__(self, "processes", processes)
        object.__setattr__(self, "skills", skills)
        object.__setattr__(self, "flows", flows)
        object.__setattr__(self, "skill_edges", skill_edges)
        object.__setattr__(self, "fastens", fastens)

    # -- indices -------------------------------------------------------------

    @cached_property
    def _product_map(self) -> dict[str, ProductNode]:
        return {p.id: p for p in self.products}

    @cached_property
    def _process_map(self) -> dict[str, ProcessNode]:
        return {p.id: p for p in self.processes}

    @cached_property
    def _skill_map(self) -> dict[str, SkillNode]:
        return {s.id: s for s in self.skills}

    @cached_property
    def _inputs(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, list[str]] = {p.id: [] for p in self.processes}
        for f in self.flows:
            if f.role is FlowRole.INPUT:
                acc[f.process].append(f.product)
        return {pid: tuple(sorted(v)) for pid, v in acc.items()}

    @cached_property
    def _outputs(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, list[str]] = {p.id: [] for p in self.processes}
        for f in self.flows:
            if f.role is FlowRole.OUTPUT:
                acc[f.process].append(f.product)
        return {pid: tuple(sorted(v)) for pid, v in acc.items()}

    @cached_property
    def _producers(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, list[str]] = {p.id: [] for p in self.products}
        for f in self.flows:
            if f.role is FlowRole.OUTPUT:
                acc[f.product].append(f.process)
        return {pid: tuple(sorted(v)) for pid, v in acc.items()}

    @cached_property
    def _consumers(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, list[str]] = {p.id: [] for p in self.products}
        for f in self.flows:
            if f.role is FlowRole.INPUT:
                acc[f.product].append(f.process)
        return {pid: tuple(sorted(v)) for pid, v in acc.items()}

    @cached_property
    def _skill_ids(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, list[str]] = {p.id: [] for p in self.processes}
        for e in self.skill_edges:
            acc[e.process].append(e.skill)
        return {pid: tuple(sorted(v)) for pid, v in acc.items()}

    # -- lookups ---------------------------------------------------------------

    def product(self, product_id: str) -> ProductNode:
        try:
            return self._product_map[product_id]
        except KeyError:
            raise BiPanError("unknown-node", f"no product '{product_id}' in model '{self.id}'") from None

    def process(self, process_id: str) -> ProcessNode:
        try:
            return self._process_map[process_id]
        except KeyError:
            raise BiPanError("unknown-node", f"no process '{process_id}' in model '{self.id}'") from None

    def has_product(self, product_id: str) -> bool:
        return product_id in self._product_map

    def has_process(self, process_id: str) -> bool:
        return process_id in self._process_map

    def has_node(self, node_id: str) -> bool:
        return (
            node_id in self._product_map
            or node_id in self._process_map
            or node_id in self._skill_map
        )

    # -- structural queries ------------------------------------------------------

    def inputs_of(self, process_id: str) -> tuple[str, ...]:
        """Products consumed by a process in assembly direction, ascending id."""
        self.process(process_id)
        return self._inputs[process_id]

    def outputs_of(self, process_id: str) -> tuple[str, ...]:
        self.process(process_id)
        return self._outputs[process_id]

    def output_of(self, process_id: str) -> str | None:
        """The process output, or None; the least id if the model is malformed."""
        outs = self.outputs_of(process_id)
        return outs[0] if outs else None

    def producers_of(self, product_id: str) -> tuple[str, ...]:
        self.product(product_id)
        return self._producers[product_id]

    def consumers_of(self, product_id: str) -> tuple[str, ...]:
        self.product(product_id)
        return self._consumers[product_id]

    def producer_of(self, product_id: str) -> str | None:
        """The process producing this product, or None for leaves.

        Unique in validated models; the least id is returned otherwise.
        """
        procs = self.producers_of(product_id)
        return procs[0] if procs else None

    def consumer_of(self, product_id: str) -> str | None:
        """The process consuming this product, or None for the final product."""
        procs = self.consumers_of(product_id)
        return procs[0] if procs else None

    def skill_ids_of(self, process_id: str) -> tuple[str, ...]:
        self.process(process_id)
        return self._skill_ids[process_id]

    def skill_labels_of(self, process_id: str) -> tuple[str, ...]:
        """Sorted, de-duplicated labels of the skills linked to a process."""
        return tuple(sorted({self._skill_map[s].label for s in self.skill_ids_of(process_id)}))

    def final_products(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.products if p.kind is ProductKind.FINAL)

    def leaf_products(self) -> tuple[str, ...]:
        """Products with no producer, ascending id."""
        return tuple(p.id for p in self.products if not self._producers[p.id])

    def spine(self, product_id: str) -> tuple[str, ...]:
        """Chain of processes from this product's consumer up to the final producer.

        Empty for the final product itself. Assumes a validated model; on a
        cyclic graph the walk aborts with ``invalid-model``.
        """
        node = self.product(product_id)
        if self.consumer_of(product_id) is None:
            if node.kind is ProductKind.FINAL:
                return ()
            raise BiPanError(
                "detached-node",
                f"product '{product_id}' has no consumer and is not the final product",
            )
        chain: list[str] = []
        seen: set[str] = set()
        proc = self.consumer_of(product_id)
        while proc is not None:
            if proc in seen:
                raise BiPanError("invalid-model", f"flow cycle at process '{proc}'")
            seen.add(proc)
            chain.append(proc)
            out = self.output_of(proc)
            proc = self.consumer_of(out) if out is not None else None
        return tuple(chain)
