#!/usr/bin/env python3
"""Regenerate the generated golden files under tests/fixtures/.

Everything written here is deterministic; rerunning must be a no-op on a clean
checkout. battery.aml is a hand-authored input fixture and is not touched.
"""

from __future__ import annotations

from pathlib import Path

from bipan import io
from bipan.fixtures import battery_model
from bipan.plan import Resource, ResourceRegistry, assembly_recipe, repair_plan

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main() -> None:
    model = battery_model()
    FIXTURES.mkdir(parents=True, exist_ok=True)

    (FIXTURES / "f1.bipan.json").write_bytes(io.save_model(model))
    (FIXTURES / "f1_assembly.plan.json").write_bytes(io.save_plan(assembly_recipe(model)))
    (FIXTURES / "f1_repair_mod8.plan.json").write_bytes(
        io.save_plan(repair_plan(model, ["mod8"], {"mod8": "mod8r"}))
    )
    (FIXTURES / "f1.dot").write_bytes(io.export_dot(model).encode("utf-8"))

    full = ResourceRegistry(
        (
            Resource(
                "flex-cell-1",
                frozenset(
                    {
                        "manipulation",
                        "screwing",
                        "unscrewing",
                        "connecting-cables",
                        "disconnecting-cables",
                    }
                ),
            ),
        )
    )
    no_cables = ResourceRegistry(
        (Resource("station-a", frozenset({"manipulation", "screwing", "unscrewing"})),)
    )
    (FIXTURES / "registry_full.json").write_bytes(io.save_registry(full))
    (FIXTURES / "registry_no_cables.json").write_bytes(io.save_registry(no_cables))

    for name in sorted(p.name for p in FIXTURES.iterdir()):
        print(f"wrote {name}")


if __name__ == "__main__":
    main()
