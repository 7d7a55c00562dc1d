"""Cross-level consistency checks.

Rule ids are stable and part of the public contract:

    S1  flow edge outside the action successor relation        error
    S2  solid flow into a create node                           error
    S3  transfer -> transfer inside a single thimac             warning
    S4  action node with no incident flow or trigger            warning
    S5  trigger guard names an unknown store                    error
    D1  event region member is not a declared action            error
    D2  event region is empty                                   error
    D3  action node covered by no event region                  warning
    D4  event time window with start > end                      error
    D5  cancel target undeclared or the event itself            error
    B1  behavior edge without a static justification            error
    B2  event unreachable from every source event               warning
    B3  behavior edge names an undeclared event                 error
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .model import CANCEL_ALL, ActionKind, Model, successor_allowed

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    rule: str
    subjects: tuple[str, ...]
    message: str

    def to_line(self, color: bool = False) -> str:
        sev = self.severity.upper()
        if color:
            sev = ("\x1b[31m" if self.severity == ERROR else "\x1b[33m") + sev + "\x1b[0m"
        return f"{sev} {self.rule} {' '.join(self.subjects)}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "rule": self.rule,
            "subjects": list(self.subjects),
            "message": self.message,
        }


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == ERROR)

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == WARNING)

    @property
    def ok(self) -> bool:
        return not self.errors

    def rules(self, severity: str | None = None) -> list[str]:
        return [d.rule for d in self.diagnostics if severity is None or d.severity == severity]

    def to_text(self, color: bool | None = None) -> str:
        if color is None:
            color = os.environ.get("TM_COLOR", "0") == "1"
        lines = [d.to_line(color) for d in self.diagnostics]
        lines.append(f"{len(self.errors)} error(s), {len(self.warnings)} warning(s)")
        return "\n".join(lines) + "\n"

    def to_dicts(self) -> list[dict]:
        return [d.to_dict() for d in self.diagnostics]


def validate_static(model: Model) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    actions = model.action_map
    for f in model.flows:
        src, dst = actions[f.src], actions[f.dst]
        if dst.kind is ActionKind.CREATE:
            continue  # reported as S2
        if not successor_allowed(src.kind, dst.kind):
            out.append(
                Diagnostic(ERROR, "S1", (f.src, f.dst), f"flow {src.kind.value} -> {dst.kind.value} is not a legal succession")
            )
    for f in model.flows:
        if actions[f.dst].kind is ActionKind.CREATE:
            out.append(Diagnostic(ERROR, "S2", (f.src, f.dst), f"create node {f.dst} has an incoming flow"))
    for f in model.flows:
        src, dst = actions[f.src], actions[f.dst]
        if src.kind is dst.kind is ActionKind.TRANSFER and src.owner == dst.owner:
            out.append(
                Diagnostic(WARNING, "S3", (f.src, f.dst), f"transfer -> transfer stays inside thimac {src.owner}")
            )
    touched = set()
    for e in (*model.flows, *model.triggers):
        touched.add(e.src)
        touched.add(e.dst)
    for a in model.actions:
        if a.id not in touched:
            out.append(Diagnostic(WARNING, "S4", (a.id,), "action node has no incident flow or trigger"))
    for t in model.triggers:
        if t.guard is not None and t.guard.store not in model.store_map:
            out.append(
                Diagnostic(ERROR, "S5", (t.src, t.dst, t.guard.store), f"guard references unknown store {t.guard.store}")
            )
    return out


def validate_dynamic(model: Model) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for e in model.events:
        for n in e.region:
            if n not in model.action_map:
                out.append(Diagnostic(ERROR, "D1", (e.id, n), f"region member {n} is not a declared action"))
    for e in model.events:
        if not e.region:
            out.append(Diagnostic(ERROR, "D2", (e.id,), "event region is empty"))
    if model.events:
        covered = {n for e in model.events for n in e.region}
        for a in model.actions:
            if a.id not in covered:
                out.append(Diagnostic(WARNING, "D3", (a.id,), "action node is covered by no event region"))
    for e in model.events:
        if e.window is not None and e.window[0] > e.window[1]:
            out.append(
                Diagnostic(ERROR, "D4", (e.id,), f"time window {e.window[0]}..{e.window[1]} starts after it ends")
            )
    for e in model.events:
        if e.cancels is None or e.cancels == CANCEL_ALL:
            continue
        for target in e.cancels:
            if target == e.id:
                out.append(Diagnostic(ERROR, "D5", (e.id, target), "event cancels itself"))
            elif target not in model.event_map:
                out.append(Diagnostic(ERROR, "D5", (e.id, target), f"cancel target {target} is not a declared event"))
    return out


def behavior_justified(model: Model, src_event: str, dst_event: str) -> bool:
    """A flow or trigger leads from one region into the other, or the regions share a node."""
    a = set(model.event_map[src_event].region)
    b = set(model.event_map[dst_event].region)
    if a & b:
        return True
    return any(e.src in a and e.dst in b for e in (*model.flows, *model.triggers))


def validate_behavior(model: Model) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    events = model.event_map
    for src, dst in model.behavior:
        if src in events and dst in events and not behavior_justified(model, src, dst):
            out.append(
                Diagnostic(ERROR, "B1", (src, dst), f"no flow, trigger or shared node links {src} to {dst}")
            )
    incoming = {e: 0 for e in events}
    succ: dict[str, list[str]] = {e: [] for e in events}
    for src, dst in model.behavior:
        if src in events and dst in events:
            incoming[dst] += 1
            succ[src].append(dst)
    reached = set()
    stack = [e for e in events if incoming[e] == 0]
    while stack:
        cur = stack.pop()
        if cur in reached:
            continue
        reached.add(cur)
        stack.extend(succ[cur])
    for e in model.events:
        if e.id not in reached:
            out.append(Diagnostic(WARNING, "B2", (e.id,), "event is unreachable from every source event"))
    for src, dst in model.behavior:
        for end in (src, dst):
            if end not in events:
                out.append(Diagnostic(ERROR, "B3", (src, dst), f"behavior edge names undeclared event {end}"))
    return out


def validate_all(model: Model) -> ValidationReport:
    """Run the static, dynamic and behavioral passes in that order."""
    problems = model.dangling_references()
    if problems:
        return ValidationReport(
            tuple(Diagnostic(ERROR, "M0", (), p) for p in problems)
        )
    return ValidationReport(
        tuple(validate_static(model) + validate_dynamic(model) + validate_behavior(model))
    )
