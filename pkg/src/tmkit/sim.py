"""Deterministic discrete-tick simulation of TM models.

Each tick runs five phases in a fixed order:

1. inject the tick's stimuli as fresh tokens;
2. execute every token (ascending id) at its current node, write stores,
   and advance it along one outgoing flow, or retire it at a sink;
3. fire the outgoing triggers of every execution whose guard holds;
   injected tokens first execute on the following tick;
4. mark the executed nodes in the coverage map of each event;
5. complete every fully covered event (declaration order), resetting its
   coverage and applying its cancellations.

A labeled create node manifests a new thing: the arriving token is retired
and a fresh token carrying the node's label takes its place.

Cancellation removes tokens from the target regions, resets their coverage
and disables their nodes for the rest of the run. Tokens that later reach a
disabled node are discarded without executing, and triggers into disabled
nodes do not fire.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import ActionKind, Event, Model
from .validate import ERROR, WARNING, Diagnostic, ValidationReport, validate_all


class SimulationError(ValueError):
    def __init__(self, message: str, report: Optional[ValidationReport] = None):
        super().__init__(message)
        self.report = report


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Stimulus:
    tick: int
    node: str
    label: str = ""


@dataclass
class Token:
    id: int
    label: str
    at: str


@dataclass
class TickReport:
    tick: int
    executions: list[tuple[int, str, int]] = field(default_factory=list)
    completions: list[tuple[int, str]] = field(default_factory=list)
    labels: dict[int, str] = field(default_factory=dict)
    alive_before: int = 0
    alive_after: int = 0
    injected: int = 0
    trigger_fired: int = 0
    manifested: int = 0
    retired: int = 0
    cancelled: int = 0

    @property
    def created(self) -> int:
        return self.injected + self.trigger_fired + self.manifested

    @property
    def removed(self) -> int:
        return self.retired + self.cancelled


@dataclass
class SimState:
    tick: int = 0
    tokens: list[Token] = field(default_factory=list)
    stores: dict[str, str] = field(default_factory=dict)
    history: dict[str, list[tuple[int, str]]] = field(default_factory=dict)
    coverage: dict[str, dict[str, bool]] = field(default_factory=dict)
    disabled: set[str] = field(default_factory=set)
    completions: list[tuple[int, str]] = field(default_factory=list)
    schedule: list[Stimulus] = field(default_factory=list)
    next_token: int = 1

    def new_token(self, label: str, at: str) -> Token:
        tok = Token(self.next_token, label, at)
        self.next_token += 1
        return tok

    def active_events(self) -> list[str]:
        """Events partially covered since their last reset."""
        return [e for e, cov in self.coverage.items() if any(cov.values()) and not all(cov.values())]


@dataclass
class Trace:
    executions: list[tuple[int, str, int]] = field(default_factory=list)
    completions: list[tuple[int, str]] = field(default_factory=list)
    labels: dict[int, str] = field(default_factory=dict)
    final: dict = field(default_factory=dict)
    budget_exhausted: bool = False
    reports: list[TickReport] = field(default_factory=list, repr=False)

    def completion_ids(self) -> list[str]:
        return [e for _, e in self.completions]

    def store_writes(self, store: str) -> list[tuple[int, str]]:
        return list(self.final.get("history", {}).get(store, []))

    def to_log(self) -> str:
        by_tick: dict[int, list[str]] = {}
        for tick, node, token in self.executions:
            by_tick.setdefault(tick, []).append(f"{tick} {node} {token} {self.labels.get(token, '')}".rstrip())
        for tick, event in self.completions:
            by_tick.setdefault(tick, []).append(f"{tick} COMPLETE {event}")
        lines = [line for tick in sorted(by_tick) for line in by_tick[tick]]
        if self.budget_exhausted:
            lines.append("BUDGET EXHAUSTED")
        return "".join(line + "\n" for line in lines)

    def to_dict(self) -> dict:
        return {
            "executions": [list(x) for x in self.executions],
            "completions": [list(x) for x in self.completions],
            "budget_exhausted": self.budget_exhausted,
        }


# --------------------------------------------------------------------------- schedules


def parse_schedule(text: str, file: str = "<schedule>") -> list[Stimulus]:
    """Read ``tick node label`` lines; ``#`` starts a comment, label may hold spaces."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 2)
        if len(parts) < 2:
            raise ScheduleError(f"{file}:{lineno}: expected 'tick node label', got {raw.strip()!r}")
        try:
            tick = int(parts[0])
        except ValueError:
            raise ScheduleError(f"{file}:{lineno}: tick must be an integer, got {parts[0]!r}") from None
        if tick < 0:
            raise ScheduleError(f"{file}:{lineno}: tick must be non-negative")
        out.append(Stimulus(tick, parts[1], parts[2] if len(parts) > 2 else ""))
    return out


def format_schedule(schedule: Iterable[Stimulus]) -> str:
    return "".join(f"{s.tick} {s.node} {s.label}".rstrip() + "\n" for s in schedule)


# --------------------------------------------------------------------------- engine


def init_sim(model: Model, schedule: Iterable[Stimulus]) -> SimState:
    report = validate_all(model)
    if not report.ok:
        raise SimulationError(f"model {model.name} has {len(report.errors)} validation error(s)", report)
    schedule = list(schedule)
    for s in schedule:
        if s.node not in model.action_map:
            raise SimulationError(f"stimulus at tick {s.tick} targets unknown node {s.node}")
        if model.kind(s.node) not in (ActionKind.TRANSFER, ActionKind.CREATE):
            raise SimulationError(
                f"stimulus at tick {s.tick} targets {s.node}, a {model.kind(s.node).value} node; "
                "only transfer and create nodes accept stimuli"
            )
        if s.tick < 0:
            raise SimulationError(f"stimulus for {s.node} has negative tick {s.tick}")
    # stable: ties keep declaration order
    schedule.sort(key=lambda s: s.tick)
    return SimState(
        stores={s.id: "" for s in model.stores},
        history={s.id: [] for s in model.stores},
        coverage={e.id: {n: False for n in e.region} for e in model.events},
        schedule=schedule,
    )


def _choose_flow(model: Model, node: str, stores: dict[str, str]) -> Optional[str]:
    """First outgoing flow whose target's trigger guards all hold, else the first declared."""
    outs = model.out_flows.get(node, ())
    if not outs:
        return None
    for f in outs:
        guards = [t.guard for t in model.out_triggers.get(f.dst, ()) if t.guard is not None]
        if all(g.holds(stores) for g in guards):
            return f.dst
    return outs[0].dst


def apply_cancellation(state: SimState, event: Event, model: Model, report: Optional[TickReport] = None) -> SimState:
    own = set(event.region)
    for target_id in event.cancel_targets(e.id for e in model.events):
        target = model.event_map.get(target_id)
        if target is None:
            continue
        region = set(target.region)
        kept = [t for t in state.tokens if t.at not in region]
        if report is not None:
            report.cancelled += len(state.tokens) - len(kept)
        state.tokens = kept
        state.coverage[target_id] = {n: False for n in target.region}
        state.disabled |= region - own
    return state


def step(state: SimState, model: Model) -> tuple[SimState, TickReport]:
    tick = state.tick
    rep = TickReport(tick, alive_before=len(state.tokens))

    # 1. stimuli
    while state.schedule and state.schedule[0].tick <= tick:
        s = state.schedule.pop(0)
        state.tokens.append(state.new_token(s.label, s.node))
        rep.injected += 1

    # 2. execute and advance
    executed: list[tuple[str, str]] = []  # (node, label after execution)
    survivors: list[Token] = []
    for tok in sorted(state.tokens, key=lambda t: t.id):
        if tok.at in state.disabled:
            rep.cancelled += 1
            continue
        node = model.action_map[tok.at]
        rep.executions.append((tick, node.id, tok.id))
        rep.labels[tok.id] = tok.label
        if node.kind is ActionKind.CREATE and node.label is not None:
            rep.retired += 1
            rep.manifested += 1
            tok = state.new_token(node.label, node.id)
        if node.store is not None and node.kind in (ActionKind.CREATE, ActionKind.RECEIVE):
            state.stores[node.store] = tok.label
            state.history[node.store].append((tick, tok.label))
        executed.append((node.id, tok.label))
        nxt = _choose_flow(model, node.id, state.stores)
        if nxt is None:
            rep.retired += 1
        else:
            tok.at = nxt
            survivors.append(tok)
    state.tokens = survivors

    # 3. triggers
    for node_id, label in executed:
        for t in model.out_triggers.get(node_id, ()):
            if t.dst in state.disabled:
                continue
            if t.guard is None or t.guard.holds(state.stores):
                state.tokens.append(state.new_token(label, t.dst))
                rep.trigger_fired += 1

    # 4. coverage
    for node_id, _ in executed:
        for e in model.events:
            cov = state.coverage[e.id]
            if node_id in cov:
                cov[node_id] = True

    # 5. completions and cancellation
    for e in model.events:
        cov = state.coverage[e.id]
        if cov and all(cov.values()):
            state.completions.append((tick, e.id))
            rep.completions.append((tick, e.id))
            state.coverage[e.id] = {n: False for n in e.region}
            if e.cancels is not None:
                apply_cancellation(state, e, model, rep)

    state.tokens.sort(key=lambda t: t.id)
    rep.alive_after = len(state.tokens)
    state.tick += 1
    return state, rep


def run(model: Model, schedule: Iterable[Stimulus], max_ticks: int = 1000) -> Trace:
    """Step until quiescent (no tokens, no pending stimuli) or ``max_ticks`` ticks ran."""
    if max_ticks < 1:
        raise ValueError("max_ticks must be at least 1")
    state = init_sim(model, schedule)
    trace = Trace()
    while state.tokens or state.schedule:
        if state.tick >= max_ticks:
            trace.budget_exhausted = True
            break
        state, rep = step(state, model)
        trace.executions.extend(rep.executions)
        trace.completions.extend(rep.completions)
        trace.labels.update(rep.labels)
        trace.reports.append(rep)
    trace.final = {
        "tick": state.tick,
        "tokens": [(t.id, t.label, t.at) for t in state.tokens],
        "stores": dict(state.stores),
        "history": {k: list(v) for k, v in state.history.items()},
        "disabled": sorted(state.disabled),
    }
    return trace



# --------------------------------------------------------------------------- conformance


@dataclass(frozen=True)
class ConformanceReport:
    violations: tuple[Diagnostic, ...] = ()
    warnings: tuple[Diagnostic, ...] = ()

    @property
    def conformant(self) -> bool:
        return not self.violations

    @property
    def diagnostics(self) -> tuple[Diagnostic, ...]:
        return self.violations + self.warnings


def conformance(trace: Trace, model: Model) -> ConformanceReport:
    """Check each completion against the behavior graph and the event time windows.

    A completion of an event with predecessors is licensed when at least one
    predecessor completed at the same or an earlier tick.
    """
    preds: dict[str, list[str]] = {}
    for src, dst in model.behavior:
        preds.setdefault(dst, []).append(src)
    first_done: dict[str, int] = {}
    for tick, event in trace.completions:
        first_done.setdefault(event, tick)
    violations, warnings = [], []
    for tick, event in trace.completions:
        ps = preds.get(event)
        if ps and not any(p in first_done and first_done[p] <= tick for p in ps):
            violations.append(
                Diagnostic(
                    ERROR,
                    "C1",
                    (event,),
                    f"{event} completed at tick {tick} before any predecessor ({', '.join(ps)})",
                )
            )
        ev = model.event_map.get(event)
        if ev is not None and ev.window is not None:
            start, end = ev.window
            if not start <= tick <= end:
                warnings.append(
                    Diagnostic(
                        WARNING, "C2", (event,), f"{event} completed at tick {tick} outside window {start}..{end}"
                    )
                )
    return ConformanceReport(tuple(violations), tuple(warnings))
