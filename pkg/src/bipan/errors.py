"""Single exception type for the package; every failure carries a stable kebab-case code."""

from __future__ import annotations

from collections.abc import Sequence


class BiPanError(Exception):
    """Contract violation with a machine-readable ``code`` and human ``detail``.

    ``nodes`` optionally names the graph nodes involved, in deterministic order.
    """

    def __init__(self, code: str, detail: str, nodes: Sequence[str] = ()) -> None:
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail
        self.nodes = tuple(nodes)
