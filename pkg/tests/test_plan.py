import dataclasses

import pytest
from hypothesis import given

from bipan.errors import BiPanError
from bipan.execute import ExecState, initial_inventory, run
from bipan.model import (
    BiPanModel,
    FastensLink,
    FlowEdge,
    FlowRole,
    ProcessNode,
    ProductKind,
    ProductNode,
    SkillEdge,
    SkillNode,
)
from bipan.plan import (
    Direction,
    DisassemblyMode,
    Resource,
    ResourceRegistry,
    SkillInversion,
    assembly_recipe,
    check_feasibility,
    disassembly_to,
    full_disassembly,
    repair_plan,
)
from bipan import io
from mutations import MUTANTS
from strategies import models


def directions(plan):
    return [(step.direction, step.process) for step in plan.steps]


def single_process_model():
    return BiPanModel(
        id="single",
        products=(
            ProductNode("a", "A", ProductKind.ELEMENTARY),
            ProductNode("b", "B", ProductKind.ELEMENTARY),
            ProductNode("fin", "Fin", ProductKind.FINAL),
        ),
        processes=(ProcessNode("q", "Q"),),
        skills=(SkillNode("manipulation", "manipulation"),),
        flows=(
            FlowEdge("a", "q", FlowRole.INPUT),
            FlowEdge("b", "q", FlowRole.INPUT),
            FlowEdge("fin", "q", FlowRole.OUTPUT),
        ),
        skill_edges=(SkillEdge("q", "manipulation"),),
    )


class TestAssembly:
    def test_battery_recipe(self, f1):
        plan = assembly_recipe(f1)
        assert plan.process_sequence() == ("p1", "p2", "p3", "p4", "p5")
        assert all(step.direction is Direction.FORWARD for step in plan.steps)
        assert plan.steps[1].required_skills == ("connecting-cables", "manipulation", "screwing")
        assert plan.steps[0].consumed == ("box", "cooling", "screws1")
        assert plan.steps[0].produced == ("stage1",)

    def test_single_process(self):
        plan = assembly_recipe(single_process_model())
        assert directions(plan) == [(Direction.FORWARD, "q")]

    def test_order_is_structural_not_lexicographic(self, f1):
        # Swap the ids of the third and fourth process: the chain still forces
        # the same structural order, so "p4" now comes before "p3".
        renames = {"p3": "p4", "p4": "p3"}
        model = BiPanModel(
            id=f1.id,
            products=f1.products,
            processes=tuple(
                dataclasses.replace(p, id=renames.get(p.id, p.id)) for p in f1.processes
            ),
            skills=f1.skills,
            flows=tuple(
                dataclasses.replace(f, process=renames.get(f.process, f.process))
                for f in f1.flows
            ),
            skill_edges=tuple(
                dataclasses.replace(e, process=renames.get(e.process, e.process))
                for e in f1.skill_edges
            ),
        )
        assert assembly_recipe(model).process_sequence() == ("p1", "p2", "p4", "p3", "p5")

    def test_invalid_model_rejected(self, f1):
        with pytest.raises(BiPanError) as err:
            assembly_recipe(MUTANTS["V006"][0](f1))
        assert err.value.code == "invalid-model"


class TestDisassembly:
    def test_full(self, f1):
        plan = full_disassembly(f1)
        assert plan.process_sequence() == ("p5", "p4", "p3", "p2", "p1")
        assert all(step.direction is Direction.REVERSE for step in plan.steps)
        p2 = plan.steps[3]
        assert p2.required_skills == ("disconnecting-cables", "manipulation", "unscrewing")
        assert p2.consumed == ("stage2",)

    def test_identity_inversion_keeps_labels(self, f1):
        plan = full_disassembly(f1, SkillInversion.identity())
        forward = assembly_recipe(f1)
        by_process = {step.process: step.required_skills for step in forward.steps}
        for step in plan.steps:
            assert step.required_skills == by_process[step.process]

    def test_single_process(self):
        plan = full_disassembly(single_process_model())
        assert directions(plan) == [(Direction.REVERSE, "q")]

    def test_expose_and_extract(self, f1):
        expose = disassembly_to(f1, "mod5", DisassemblyMode.EXPOSE)
        extract = disassembly_to(f1, "mod5", DisassemblyMode.EXTRACT)
        assert expose.process_sequence() == ("p5", "p4", "p3")
        assert extract.process_sequence() == ("p5", "p4", "p3", "p2")

    def test_expose_of_topmost_input_is_empty(self, f1):
        assert disassembly_to(f1, "cover", DisassemblyMode.EXPOSE).steps == ()

    def test_target_errors(self, f1):
        with pytest.raises(BiPanError) as err:
            disassembly_to(f1, "battery", DisassemblyMode.EXPOSE)
        assert err.value.code == "target-is-final"
        with pytest.raises(BiPanError) as err:
            disassembly_to(f1, "warp-coil", DisassemblyMode.EXPOSE)
        assert err.value.code == "unknown-node"

    @given(models())
    def test_extract_is_expose_plus_one(self, model):
        (final,) = model.final_products()
        for product in model.products:
            if product.kind is ProductKind.FINAL:
                continue
            expose = disassembly_to(model, product.id, DisassemblyMode.EXPOSE)
            extract = disassembly_to(model, product.id, DisassemblyMode.EXTRACT)
            assert extract.steps[: len(expose.steps)] == expose.steps
            assert len(extract.steps) == len(expose.steps) + 1
            assert extract.steps[-1].process == model.consumer_of(product.id)


class TestRepair:
    def test_single_swap_site(self, f1):
        plan = repair_plan(f1, ["mod8"], {"mod8": "mod8r"})
        assert directions(plan) == [
            (Direction.REVERSE, "p5"),
            (Direction.REVERSE, "p4"),
            (Direction.REVERSE, "p3"),
            (Direction.SWAP, "p2"),
            (Direction.FORWARD, "p3"),
            (Direction.FORWARD, "p4"),
            (Direction.FORWARD, "p5"),
        ]
        swap = plan.steps[3]
        assert swap.consumed == ("mod8r",)
        assert swap.produced == ("mod8",)
        assert swap.swap_target == "mod8"
        assert swap.swap_replacement == "mod8r"
        assert swap.required_skills == (
            "connecting-cables",
            "disconnecting-cables",
            "manipulation",
            "screwing",
            "unscrewing",
        )

    def test_swap_at_final(self, f1):
        plan = repair_plan(f1, ["cover"], {"cover": "coverr"})
        assert directions(plan) == [(Direction.SWAP, "p5")]

    def test_two_sites_single_pass(self, f1):
        plan = repair_plan(f1, ["mod2", "blanket"], {"mod2": "mod2r", "blanket": "blanketr"})
        assert directions(plan) == [
            (Direction.REVERSE, "p5"),
            (Direction.SWAP, "p4"),
            (Direction.REVERSE, "p4"),
            (Direction.REVERSE, "p3"),
            (Direction.SWAP, "p2"),
            (Direction.FORWARD, "p3"),
            (Direction.FORWARD, "p4"),
            (Direction.FORWARD, "p5"),
        ]
        # Once blanket is swapped, later steps speak of its replacement.
        reverse_p4 = plan.steps[2]
        assert "blanketr" in reverse_p4.produced and "blanket" not in reverse_p4.produced
        forward_p4 = plan.steps[6]
        assert "blanketr" in forward_p4.consumed

    def test_nested_sites(self, f1):
        plan = repair_plan(f1, ["mod2", "cooling"], {"mod2": "mod2r", "cooling": "coolingr"})
        assert [d.value for d, _ in directions(plan)] == [
            "Reverse", "Reverse", "Reverse", "Swap", "Reverse", "Swap",
            "Forward", "Forward", "Forward", "Forward",
        ]
        assert plan.process_sequence() == ("p5", "p4", "p3", "p2", "p2", "p1", "p2", "p3", "p4", "p5")

    def test_two_broken_at_same_site(self, f1):
        plan = repair_plan(f1, ["mod3", "mod7"], {"mod3": "m3r", "mod7": "m7r"})
        swaps = [s for s in plan.steps if s.direction is Direction.SWAP]
        assert [(s.swap_target, s.swap_replacement) for s in swaps] == [("mod3", "m3r"), ("mod7", "m7r")]
        assert len(plan.steps) == 8

    def test_empty_broken_set_is_empty_plan(self, f1):
        assert repair_plan(f1, [], {}).steps == ()

    def test_errors(self, f1):
        with pytest.raises(BiPanError) as err:
            repair_plan(f1, ["stage2"], {"stage2": "x"})
        assert err.value.code == "broken-kind-not-replaceable"
        with pytest.raises(BiPanError) as err:
            repair_plan(f1, ["mod8"], {})
        assert err.value.code == "missing-replacement"
        with pytest.raises(BiPanError) as err:
            repair_plan(f1, ["mod8"], {"mod8": "mod1"})
        assert err.value.code == "replacement-exists"
        with pytest.raises(BiPanError) as err:
            repair_plan(f1, ["mod8", "mod7"], {"mod8": "r", "mod7": "r"})
        assert err.value.code == "replacement-exists"
        with pytest.raises(BiPanError) as err:
            repair_plan(f1, ["ghost"], {"ghost": "g"})
        assert err.value.code == "unknown-node"

    def test_fastens_narrow_swap_scope(self, f1):
        bolted = dataclasses.replace(
            f1,
            products=tuple(
                dataclasses.replace(p, attributes={"skill": "screwing"}) if p.id == "bolts1" else p
                for p in f1.products
            ),
            fastens=(FastensLink("bolts1", frozenset(f"mod{i}" for i in range(1, 9))),),
        )
        plan = repair_plan(bolted, ["mod8"], {"mod8": "mod8r"})
        swap = next(s for s in plan.steps if s.direction is Direction.SWAP)
        assert swap.required_skills == ("manipulation", "screwing", "unscrewing")
        # Components no fastens link mentions keep the full over-approximation.
        plan_bms = repair_plan(bolted, ["bms"], {"bms": "bmsr"})
        swap_bms = next(s for s in plan_bms.steps if s.direction is Direction.SWAP)
        assert swap_bms.required_skills == (
            "connecting-cables",
            "disconnecting-cables",
            "manipulation",
            "screwing",
            "unscrewing",
        )

    def test_fastens_without_declared_skill_falls_back_to_directional(self, f1):
        bolted = dataclasses.replace(
            f1, fastens=(FastensLink("bolts1", frozenset({"mod8"})),)
        )
        plan = repair_plan(bolted, ["mod8"], {"mod8": "mod8r"})
        swap = next(s for s in plan.steps if s.direction is Direction.SWAP)
        assert swap.required_skills == (
            "connecting-cables",
            "disconnecting-cables",
            "manipulation",
            "screwing",
            "unscrewing",
        )


class TestFeasibility:
    def test_disassembly_missing_cables(self, f1):
        report = check_feasibility(
            full_disassembly(f1),
            ResourceRegistry((Resource("r1", frozenset({"manipulation", "unscrewing"})),)),
        )
        assert not report.feasible
        missing = {s.index: s.missing_skills for s in report.per_step if s.missing_skills}
        assert missing == {3: ("disconnecting-cables",)}

    def test_superset_is_feasible(self, f1):
        everything = ResourceRegistry(
            (
                Resource("r1", frozenset({"manipulation", "screwing", "connecting-cables"})),
                Resource("r2", frozenset({"unscrewing", "disconnecting-cables"})),
            )
        )
        for plan in (assembly_recipe(f1), full_disassembly(f1),
                     repair_plan(f1, ["mod8"], {"mod8": "mod8r"})):
            assert check_feasibility(plan, everything).feasible

    def test_exact_assembly_skills(self, f1):
        registry = ResourceRegistry(
            (Resource("r1", frozenset({"manipulation", "screwing", "connecting-cables"})),)
        )
        assert check_feasibility(assembly_recipe(f1), registry).feasible

    def test_skills_pool_union_across_resources(self, f1):
        split = ResourceRegistry(
            (
                Resource("arm", frozenset({"manipulation"})),
                Resource("driver", frozenset({"screwing"})),
                Resource("plugger", frozenset({"connecting-cables"})),
            )
        )
        assert check_feasibility(assembly_recipe(f1), split).feasible


class TestInversion:
    def test_default_pairs(self):
        inv = SkillInversion.default()
        assert inv.apply("screwing") == "unscrewing"
        assert inv.apply("connecting-cables") == "disconnecting-cables"
        assert inv.apply("manipulation") == "manipulation"
        assert inv.apply("gluing") == "gluing"

    def test_extended_is_involution(self, f1):
        ext = SkillInversion.default().extended_with_inverses()
        labels = {s.label for s in f1.skills} | {"unscrewing", "disconnecting-cables"}
        for label in labels:
            assert ext.apply(ext.apply(label)) == label

    def test_double_inversion_restores_forward_sets(self, f1):
        ext = SkillInversion.default().extended_with_inverses()
        forward = assembly_recipe(f1)
        for step in forward.steps:
            once = ext.apply_all(step.required_skills)
            assert ext.apply_all(once) == step.required_skills


class TestDeterminismAndSoundness:
    def test_serialized_plans_are_byte_identical(self, f1):
        one = io.save_plan(repair_plan(f1, ["mod8"], {"mod8": "mod8r"}))
        two = io.save_plan(repair_plan(f1, ["mod8"], {"mod8": "mod8r"}))
        assert one == two

    @given(models())
    def test_assembly_round_trip(self, model):
        start = initial_inventory(model)
        after_assembly = run(assembly_recipe(model), start, model).final
        assert after_assembly.present == frozenset(model.final_products())
        after_teardown = run(full_disassembly(model), after_assembly, model).final
        assert after_teardown.present == start.present

    @given(models())
    def test_every_plan_replays(self, model):
        (final,) = model.final_products()
        run(assembly_recipe(model), initial_inventory(model), model)
        final_state = ExecState(frozenset({final}), {})
        run(full_disassembly(model), final_state, model)
        components = [
            p.id for p in model.products
            if p.kind not in (ProductKind.FINAL, ProductKind.STAGE)
        ]
        for product in model.products:
            if product.kind is ProductKind.FINAL:
                continue
            for mode in DisassemblyMode:
                run(disassembly_to(model, product.id, mode), final_state, model)
        broken = components[: max(1, len(components) // 3)]
        replacements = {b: f"{b}.new" for b in broken}
        plan = repair_plan(model, broken, replacements)
        start = ExecState(frozenset({final, *replacements.values()}), {})
        end = run(plan, start, model).final
        assert end.present == frozenset({final, *broken})
        assert end.substitutions == replacements
