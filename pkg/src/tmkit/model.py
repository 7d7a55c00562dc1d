"""Core data types for thinging-machine (TM) models.

A model has three levels. The static level is a forest of thimacs holding
action nodes, stores, solid flow edges and dashed trigger edges. The dynamic
level is a list of events, each an explicit region of static nodes plus an
optional time window. The behavioral level is a succession graph over events.

Models are immutable once built; use :class:`ModelBuilder` to assemble one.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional


class ModelError(ValueError):
    """Raised for structurally unusable models or bad arguments."""


class UnknownNodeError(ModelError):
    def __init__(self, node: str):
        super().__init__(f"unknown action node {node!r}")
        self.node = node


class ActionKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    def __str__(self) -> str:
        return self.value


_SUCCESSORS = frozenset(
    {
        (ActionKind.CREATE, ActionKind.PROCESS),
        (ActionKind.CREATE, ActionKind.RELEASE),
        (ActionKind.RECEIVE, ActionKind.PROCESS),
        (ActionKind.RECEIVE, ActionKind.RELEASE),
        (ActionKind.PROCESS, ActionKind.RELEASE),
        (ActionKind.RELEASE, ActionKind.TRANSFER),
        (ActionKind.TRANSFER, ActionKind.RECEIVE),
        (ActionKind.TRANSFER, ActionKind.TRANSFER),
    }
)


def successor_allowed(src: ActionKind, dst: ActionKind) -> bool:
    """Return True if a solid flow may go from a ``src`` action to a ``dst`` action."""
    return (src, dst) in _SUCCESSORS


def natural_key(text: str) -> tuple:
    """Sort key that orders embedded integers numerically (E2 before E10)."""
    parts = re.split(r"(\d+)", text)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts)), text


@dataclass(frozen=True)
class Thimac:
    id: str
    name: str
    parent: Optional[str] = None
    children: tuple[str, ...] = ()
    actions: tuple[str, ...] = ()
    stores: tuple[str, ...] = ()


@dataclass(frozen=True)
class Store:
    id: str
    owner: str


@dataclass(frozen=True)
class ActionNode:
    id: str
    kind: ActionKind
    owner: str
    store: Optional[str] = None
    label: Optional[str] = None


@dataclass(frozen=True)
class Guard:
    store: str
    op: str  # "==" or "!="
    operand: str

    def __post_init__(self):
        if self.op not in ("==", "!="):
            raise ModelError(f"guard operator must be '==' or '!=', not {self.op!r}")

    def holds(self, stores: dict[str, str]) -> bool:
        value = stores.get(self.store, "")
        return (value == self.operand) if self.op == "==" else (value != self.operand)


@dataclass(frozen=True)
class FlowEdge:
    src: str
    dst: str
    ordinal: int = 0


@dataclass(frozen=True)
class TriggerEdge:
    src: str
    dst: str
    guard: Optional[Guard] = None
    ordinal: int = 0


CANCEL_ALL = "all"


@dataclass(frozen=True)
class Event:
    id: str
    name: str
    region: tuple[str, ...]
    window: Optional[tuple[int, int]] = None
    # None, CANCEL_ALL, or a tuple of event ids
    cancels: object = None

    def cancel_targets(self, event_ids: Iterable[str]) -> tuple[str, ...]:
        if self.cancels is None:
            return ()
        if self.cancels == CANCEL_ALL:
            return tuple(e for e in event_ids if e != self.id)
        return tuple(self.cancels)


@dataclass(frozen=True)
class Region:
    nodes: tuple[str, ...]
    flows: tuple[FlowEdge, ...]
    triggers: tuple[TriggerEdge, ...]

    @property
    def edge_count(self) -> int:
        return len(self.flows) + len(self.triggers)


@dataclass(frozen=True)
class Model:
    name: str
    thimacs: tuple[Thimac, ...] = ()
    actions: tuple[ActionNode, ...] = ()
    stores: tuple[Store, ...] = ()
    flows: tuple[FlowEdge, ...] = ()
    triggers: tuple[TriggerEdge, ...] = ()
    events: tuple[Event, ...] = ()
    behavior: tuple[tuple[str, str], ...] = ()
    doc: tuple[str, ...] = field(default=(), compare=False)

    @cached_property
    def action_map(self) -> dict[str, ActionNode]:
        return {a.id: a for a in self.actions}

    @cached_property
    def thimac_map(self) -> dict[str, Thimac]:
        return {t.id: t for t in self.thimacs}

    @cached_property
    def store_map(self) -> dict[str, Store]:
        return {s.id: s for s in self.stores}

    @cached_property
    def event_map(self) -> dict[str, Event]:
        return {e.id: e for e in self.events}

    @cached_property
    def out_flows(self) -> dict[str, tuple[FlowEdge, ...]]:
        out: dict[str, list[FlowEdge]] = {a.id: [] for a in self.actions}
        for f in self.flows:
            out.setdefault(f.src, []).append(f)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def out_triggers(self) -> dict[str, tuple[TriggerEdge, ...]]:
        out: dict[str, list[TriggerEdge]] = {a.id: [] for a in self.actions}
        for t in self.triggers:
            out.setdefault(t.src, []).append(t)
        return {k: tuple(v) for k, v in out.items()}

    def kind(self, node: str) -> ActionKind:
        return self._action(node).kind

    def _action(self, node: str) -> ActionNode:
        try:
            return self.action_map[node]
        except KeyError:
            raise UnknownNodeError(node) from None

    def roots(self) -> tuple[Thimac, ...]:
        return tuple(t for t in self.thimacs if t.parent is None)

    def dangling_references(self) -> list[str]:
        """Static-level references that do not resolve, as readable strings.

        Event regions, cancel targets, behavior endpoints and guard stores are
        left to the validator and are not reported here.
        """
        problems = []
        for t in self.thimacs:
            if t.parent is not None and t.parent not in self.thimac_map:
                problems.append(f"thimac {t.id}: unknown parent {t.parent}")
        for s in self.stores:
            if s.owner not in self.thimac_map:
                problems.append(f"store {s.id}: unknown owner {s.owner}")
        for a in self.actions:
            if a.owner not in self.thimac_map:
                problems.append(f"action {a.id}: unknown owner {a.owner}")
            if a.store is not None and a.store not in self.store_map:
                problems.append(f"action {a.id}: unknown store {a.store}")
        for kind, edges in (("flow", self.flows), ("trigger", self.triggers)):
            for e in edges:
                for end in (e.src, e.dst):
                    if end not in self.action_map:
                        problems.append(f"{kind} {e.src} -> {e.dst}: unknown node {end}")
        seen = set()
        for t in self.thimacs:
            # parent chains must terminate
            chain, cur = set(), t.id
            while cur is not None and cur not in seen:
                if cur in chain:
                    problems.append(f"thimac {t.id}: containment cycle")
                    break
                chain.add(cur)
                parent = self.thimac_map.get(cur)
                cur = parent.parent if parent else None
            seen |= chain
        return problems


class ModelBuilder:
    """Incremental construction of a :class:`Model` in declaration order.

    Children, action and store lists of each thimac are derived from the
    order in which elements are added. Identifier clashes raise
    :class:`ModelError` immediately.
    """

    def __init__(self, name: str, doc: Iterable[str] = ()):
        self.name = name
        self.doc = tuple(doc)
        self._thimacs: dict[str, tuple[str, Optional[str]]] = {}
        self._actions: dict[str, ActionNode] = {}
        self._stores: dict[str, Store] = {}
        self._flows: list[tuple[str, str]] = []
        self._triggers: list[tuple[str, str, Optional[Guard]]] = []
        self._events: dict[str, Event] = {}
        self._behavior: list[tuple[str, str]] = []

    def thimac(self, id: str, name: Optional[str] = None, parent: Optional[str] = None) -> "ModelBuilder":
        if id in self._thimacs:
            raise ModelError(f"duplicate thimac id {id!r}")
        self._thimacs[id] = (name if name is not None else id, parent)
        return self

    def store(self, id: str, owner: str) -> "ModelBuilder":
        if id in self._stores:
            raise ModelError(f"duplicate store id {id!r}")
        self._stores[id] = Store(id, owner)
        return self

    def action(
        self,
        id: str,
        kind,
        owner: str,
        store: Optional[str] = None,
        label: Optional[str] = None,
    ) -> "ModelBuilder":
        if id in self._actions:
            raise ModelError(f"duplicate action id {id!r}")
        self._actions[id] = ActionNode(id, ActionKind(kind), owner, store, label)
        return self

    def flow(self, src: str, dst: str) -> "ModelBuilder":
        if src == dst:
            raise ModelError(f"flow {src} -> {dst} is a self-loop")
        self._flows.append((src, dst))
        return self

    def trigger(self, src: str, dst: str, guard: Optional[Guard] = None) -> "ModelBuilder":
        if src == dst:
            raise ModelError(f"trigger {src} -> {dst} is a self-loop")
        self._triggers.append((src, dst, guard))
        return self

    def event(
        self,
        id: str,
        name: str,
        region: Iterable[str],
        window: Optional[tuple[int, int]] = None,
        cancels=None,
    ) -> "ModelBuilder":
        if id in self._events:
            raise ModelError(f"duplicate event id {id!r}")
        if cancels is not None and cancels != CANCEL_ALL:
            cancels = tuple(cancels)
        # keep first occurrence of repeated members
        members = tuple(dict.fromkeys(region))
        self._events[id] = Event(id, name, members, window, cancels)
        return self

    def behavior(self, src: str, dst: str) -> "ModelBuilder":
        if src == dst:
            raise ModelError(f"behavior edge {src} -> {dst} is a self-loop")
        self._behavior.append((src, dst))
        return self

    def build(self) -> Model:
        children: dict[str, list[str]] = {t: [] for t in self._thimacs}
        actions: dict[str, list[str]] = {t: [] for t in self._thimacs}
        stores: dict[str, list[str]] = {t: [] for t in self._thimacs}
        for tid, (_, parent) in self._thimacs.items():
            if parent is not None:
                children.setdefault(parent, []).append(tid)
        for a in self._actions.values():
            actions.setdefault(a.owner, []).append(a.id)
        for s in self._stores.values():
            stores.setdefault(s.owner, []).append(s.id)
        thimacs = tuple(
            Thimac(tid, name, parent, tuple(children[tid]), tuple(actions[tid]), tuple(stores[tid]))
            for tid, (name, parent) in self._thimacs.items()
        )
        return Model(
            name=self.name,
            thimacs=thimacs,
            actions=tuple(self._actions.values()),
            stores=tuple(self._stores.values()),
            flows=tuple(FlowEdge(s, d, i) for i, (s, d) in enumerate(self._flows)),
            triggers=tuple(TriggerEdge(s, d, g, i) for i, (s, d, g) in enumerate(self._triggers)),
            events=tuple(self._events.values()),
            behavior=tuple(self._behavior),
            doc=self.doc,
        )


def induced_region(model: Model, nodes: Iterable[str]) -> Region:
    """The sub-diagram spanned by ``nodes``: the nodes plus every edge inside them."""
    members = tuple(dict.fromkeys(nodes))
    if not members:
        raise ModelError("a region must contain at least one node")
    for n in members:
        if n not in model.action_map:
            raise UnknownNodeError(n)
    inside = set(members)
    return Region(
        nodes=members,
        flows=tuple(f for f in model.flows if f.src in inside and f.dst in inside),
        triggers=tuple(t for t in model.triggers if t.src in inside and t.dst in inside),
    )


def flow_reachable(model: Model, src: str, dst: str) -> bool:
    """True if a path of flow and/or trigger edges leads from ``src`` to ``dst``."""
    for n in (src, dst):
        if n not in model.action_map:
            raise UnknownNodeError(n)
    succ: dict[str, list[str]] = {}
    for e in (*model.flows, *model.triggers):
        succ.setdefault(e.src, []).append(e.dst)
    seen = {src}
    stack = [src]
    while stack:
        cur = stack.pop()
        if cur == dst:
            return True
        for nxt in succ.get(cur, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def _sorted(items) -> tuple:
    return tuple(sorted(items, key=repr))


def canonical_form(model: Model) -> tuple:
    """Order-insensitive summary of a model; equal forms mean equal models."""

    def guard(g: Optional[Guard]):
        return None if g is None else (g.store, g.op, g.operand)

    def cancels(e: Event):
        if e.cancels is None or e.cancels == CANCEL_ALL:
            return e.cancels
        return tuple(sorted(set(e.cancels)))

    return (
        model.name,
        _sorted((t.id, t.name, t.parent) for t in model.thimacs),
        _sorted((a.id, a.kind.value, a.owner, a.store, a.label) for a in model.actions),
        _sorted((s.id, s.owner) for s in model.stores),
        _sorted(Counter((f.src, f.dst) for f in model.flows).items()),
        _sorted(Counter((t.src, t.dst, guard(t.guard)) for t in model.triggers).items()),
        _sorted(
            (e.id, e.name, tuple(sorted(set(e.region))), e.window, cancels(e)) for e in model.events
        ),
        _sorted(Counter(model.behavior).items()),
    )


def structural_eq(a: Model, b: Model) -> bool:
    """Equality up to declaration order (header comments are ignored)."""
    return canonical_form(a) == canonical_form(b)
