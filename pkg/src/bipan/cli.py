"""Command-line surface: validate, plan, exec, import-aml, export-dot, pdt.

Exit codes: 0 success, 1 validation errors or an infeasible result, 2 usage or
parse errors, 3 runtime failures (I/O, digest mismatch, replay failure). Every
error path prints one machine-parsable line to stderr: ``error: <code>: <detail>``.
Payloads go to stdout, diagnostics to stderr, and nothing ever reads the clock:
twin mutations require an explicit ``--at`` timestamp.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from bipan import io
from bipan.canon import canonical_bytes
from bipan.errors import BiPanError
from bipan.execute import ExecState, initial_inventory, run
from bipan.model import BiPanModel
from bipan.pdt import Health, create_instance, plan_repair_for, set_health
from bipan.plan import (
    DisassemblyMode,
    Plan,
    assembly_recipe,
    check_feasibility,
    disassembly_to,
    full_disassembly,
    repair_plan,
)
from bipan.validate import validate

_USAGE_CODES = {
    "usage",
    "unreadable",
    "parse-error",
    "xml-parse-error",
    "unsupported-root",
    "non-numeric-position",
    "dangling-reference",
    "duplicate-id",
    "invalid-id",
    "invalid-position",
    "invalid-timestamp",
    "time-regression",
    "unknown-node",
    "unknown-component",
    "detached-node",
    "target-is-final",
    "broken-kind-not-replaceable",
    "missing-replacement",
    "replacement-exists",
    "empty-id",
    "kind-conflict",
    "label-conflict",
}
_RESULT_CODES = {"invalid-model", "infeasible", "nothing-broken"}


def _exit_code_for(code: str) -> int:
    if code in _USAGE_CODES:
        return 2
    if code in _RESULT_CODES:
        return 1
    return 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise BiPanError("unreadable", f"{path}: {exc}") from exc


def _load_model(path: str) -> BiPanModel:
    return io.load_model(_read_bytes(path))


def _emit(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        Path(out).write_bytes(data)


def _parse_replacements(text: str) -> dict[str, str]:
    replacements: dict[str, str] = {}
    for chunk in text.split(","):
        if not chunk:
            continue
        old, sep, new = chunk.partition("=")
        if not sep or not old or not new:
            raise BiPanError("usage", f"--replace entries must be old=new, got {chunk!r}")
        replacements[old] = new
    if not replacements:
        raise BiPanError("usage", "--replace must name at least one old=new pair")
    return replacements


def _feasibility_lines(plan: Plan, report) -> list[str]:
    lines = []
    for step_report in report.per_step:
        if step_report.missing_skills:
            step = plan.steps[step_report.index]
            lines.append(
                f"step {step_report.index} ({step.direction.value} '{step.process}'): "
                f"missing {', '.join(step_report.missing_skills)}"
            )
    return lines


# -- commands ---------------------------------------------------------------


def _cmd_validate(args: argparse.Namespace) -> int:
    diags = validate(_load_model(args.model))
    if args.format == "json":
        sys.stdout.write(canonical_bytes(diags.to_obj()).decode("utf-8"))
    else:
        for d in diags.items:
            nodes = f" [{', '.join(d.nodes)}]" if d.nodes else ""
            print(f"{d.code} {d.severity.value.lower()}{nodes}: {d.message}")
        print(f"{'OK' if not diags.has_errors else 'FAIL'} "
              f"({len(diags.errors)} errors, {len(diags.warnings)} warnings)")
    if diags.has_errors:
        print(f"error: invalid-model: {len(diags.errors)} validation errors", file=sys.stderr)
        return 1
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    if args.action == "assemble":
        plan = assembly_recipe(model)
    elif args.action == "disassemble":
        if args.target is None:
            plan = full_disassembly(model)
        else:
            mode = DisassemblyMode.EXTRACT if args.mode == "extract" else DisassemblyMode.EXPOSE
            plan = disassembly_to(model, args.target, mode)
    else:
        if args.broken is None or args.replace is None:
            raise BiPanError("usage", "plan repair requires --broken and --replace")
        broken = [b for b in args.broken.split(",") if b]
        plan = repair_plan(model, broken, _parse_replacements(args.replace))

    payload = io.save_plan(plan)
    if args.out is not None:
        _emit(payload, args.out)

    if args.registry is not None:
        registry = io.load_registry(_read_bytes(args.registry))
        report = check_feasibility(plan, registry)
        if args.out is not None:
            sys.stdout.write(canonical_bytes(report.to_obj()).decode("utf-8"))
        if not report.feasible:
            for line in _feasibility_lines(plan, report):
                print(line, file=sys.stderr)
            missing = sorted({s for r in report.per_step for s in r.missing_skills})
            print(f"error: infeasible: missing skills: {', '.join(missing)}", file=sys.stderr)
            if args.out is None:
                _emit(payload, None)
            return 1

    if args.out is None:
        _emit(payload, None)
    return 0


def _cmd_exec(args: argparse.Namespace) -> int:
    plan = io.load_plan(_read_bytes(args.plan))
    model = _load_model(args.model)
    if args.inventory == "initial":
        state = initial_inventory(model)
    elif args.inventory == "final":
        finals = model.final_products()
        state = ExecState(frozenset((*finals, *plan.replacement_ids())), {})
    else:
        state = io.load_state(_read_bytes(args.inventory))
    trace = run(plan, state, model)
    if args.format == "json":
        sys.stdout.write(canonical_bytes(io.trace_to_obj(trace)).decode("utf-8"))
    else:
        for entry in trace.entries:
            step = plan.steps[entry.index]
            print(f"step {entry.index}: {step.direction.value} '{step.process}' -> "
                  f"present: {', '.join(sorted(entry.state.present))}")
        final = trace.final
        print(f"final: {', '.join(sorted(final.present))}")
        if final.substitutions:
            subs = ", ".join(f"{k}->{v}" for k, v in sorted(final.substitutions.items()))
            print(f"substitutions: {subs}")
    return 0


def _cmd_import_aml(args: argparse.Namespace) -> int:
    fragment = io.import_aml(_read_bytes(args.aml))
    if args.merge is not None:
        model = io.merge(fragment, _load_model(args.merge))
        _emit(io.save_model(model), args.out)
    else:
        _emit(canonical_bytes(fragment.to_obj()), args.out)
    return 0


def _cmd_export_dot(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    plan = io.load_plan(_read_bytes(args.plan)) if args.plan is not None else None
    _emit(io.export_dot(model, plan).encode("utf-8"), args.out)
    return 0


def _cmd_pdt_new(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    pdt = create_instance(args.instance_id, model)
    target = Path(args.dir) / pdt.file_name()
    if target.exists():
        raise BiPanError("io-error", f"instance file already exists: {target}")
    path = io.write_instance_file(pdt, args.dir)
    print(f"created {path}", file=sys.stderr)
    return 0


def _cmd_pdt_set_health(args: argparse.Namespace) -> int:
    pdt = io.read_instance_file(args.dir, args.instance_id)
    try:
        health = Health(args.health.capitalize())
    except ValueError:
        raise BiPanError(
            "usage", f"health must be one of ok, degraded, broken, unknown; got {args.health!r}"
        ) from None
    updated = set_health(pdt, args.component, health, args.at)
    io.write_instance_file(updated, args.dir)
    return 0


def _cmd_pdt_log(args: argparse.Namespace) -> int:
    pdt = io.read_instance_file(args.dir, args.instance_id)
    if args.format == "json":
        sys.stdout.write(canonical_bytes(io.instance_to_obj(pdt)["events"]).decode("utf-8"))
    else:
        for event in pdt.events:
            payload = " ".join(f"{k}={v}" for k, v in sorted(event.payload.items()))
            print(f"{event.timestamp} {event.kind} {payload}".rstrip())
    return 0


def _cmd_pdt_plan_repair(args: argparse.Namespace) -> int:
    pdt = io.read_instance_file(args.dir, args.instance_id)
    model = _load_model(args.model)
    replacements = _parse_replacements(args.replace)
    updated, plan = plan_repair_for(pdt, model, replacements, args.at)
    io.write_instance_file(updated, args.dir)
    _emit(io.save_plan(plan), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bipan", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p_validate = commands.add_parser("validate", help="check a model's structural rules")
    p_validate.add_argument("model")
    p_validate.add_argument("--format", choices=["human", "json"], default="human")
    p_validate.set_defaults(func=_cmd_validate)

    p_plan = commands.add_parser("plan", help="extract a directional plan")
    p_plan.add_argument("action", choices=["assemble", "disassemble", "repair"])
    p_plan.add_argument("model")
    p_plan.add_argument("--target", help="product to disassemble toward")
    p_plan.add_argument("--mode", choices=["expose", "extract"], default="expose")
    p_plan.add_argument("--broken", help="comma-separated broken component ids")
    p_plan.add_argument("--replace", help="comma-separated old=new replacement ids")
    p_plan.add_argument("--out", help="write the plan document here instead of stdout")
    p_plan.add_argument("--registry", help="resource registry file; infeasible plans exit 1")
    p_plan.set_defaults(func=_cmd_plan)

    p_exec = commands.add_parser("exec", help="replay a plan against an inventory")
    p_exec.add_argument("plan")
    p_exec.add_argument("model")
    p_exec.add_argument(
        "--inventory",
        default="initial",
        help="'initial' (leaves), 'final' (final product plus replacements), or a state file",
    )
    p_exec.add_argument("--format", choices=["human", "json"], default="human")
    p_exec.set_defaults(func=_cmd_exec)

    p_import = commands.add_parser("import-aml", help="import CAEX product structure")
    p_import.add_argument("aml")
    p_import.add_argument("--merge", help="model file to enrich with the imported products")
    p_import.add_argument("--out")
    p_import.set_defaults(func=_cmd_import_aml)

    p_dot = commands.add_parser("export-dot", help="render a model (and plan overlay) as DOT")
    p_dot.add_argument("model")
    p_dot.add_argument("--plan", help="plan file to overlay as numbered red edges")
    p_dot.add_argument("--out")
    p_dot.set_defaults(func=_cmd_export_dot)

    p_pdt = commands.add_parser("pdt", help="manage product twin instances")
    pdt_commands = p_pdt.add_subparsers(dest="pdt_command", required=True)

    p_new = pdt_commands.add_parser("new", help="create an instance file for a model")
    p_new.add_argument("instance_id")
    p_new.add_argument("model")
    p_new.add_argument("--dir", default=".")
    p_new.set_defaults(func=_cmd_pdt_new)

    p_health = pdt_commands.add_parser("set-health", help="record a component health state")
    p_health.add_argument("instance_id")
    p_health.add_argument("component")
    p_health.add_argument("health")
    p_health.add_argument("--at", required=True, help="ISO-8601 UTC timestamp")
    p_health.add_argument("--dir", default=".")
    p_health.set_defaults(func=_cmd_pdt_set_health)

    p_log = pdt_commands.add_parser("log", help="print an instance's event log")
    p_log.add_argument("instance_id")
    p_log.add_argument("--format", choices=["human", "json"], default="human")
    p_log.add_argument("--dir", default=".")
    p_log.set_defaults(func=_cmd_pdt_log)

    p_repair = pdt_commands.add_parser(
        "plan-repair", help="plan replacement of all Broken components"
    )
    p_repair.add_argument("instance_id")
    p_repair.add_argument("--model", required=True, help="model file the instance is bound to")
    p_repair.add_argument("--replace", required=True, help="comma-separated old=new ids")
    p_repair.add_argument("--at", required=True, help="ISO-8601 UTC timestamp")
    p_repair.add_argument("--out")
    p_repair.add_argument("--dir", default=".")
    p_repair.set_defaults(func=_cmd_pdt_plan_repair)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except BiPanError as exc:
        print(f"error: {exc.code}: {exc.detail}", file=sys.stderr)
        return _exit_code_for(exc.code)
    except OSError as exc:
        print(f"error: io-error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
