"""Redraft deterministic finite-state machines as TM models.

The current state lives in a store named ``state``. Each state becomes a
labeled create node writing the state name to that store; each input symbol
becomes a release/transfer pair in the environment feeding a
transfer/receive/process chain in the machine. A transition ``(s, a, s2)``
is a trigger from the process node of ``a`` to the create node of ``s2``
guarded by ``state == "s"``.

Inputs are replayed with :func:`fsm_schedule`: the initial state is set by a
tick-0 stimulus at its create node, then one symbol every
:data:`SYMBOL_SPACING` ticks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Guard, Model, ModelBuilder
from .sim import Stimulus

# executions from a symbol's injection to the store write: env transfer,
# machine transfer, receive, process, then the triggered create
CHAIN_LENGTH = 5
SYMBOL_SPACING = CHAIN_LENGTH + 2
STATE_STORE = "state"

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class FsmError(ValueError):
    pass


@dataclass(frozen=True)
class FsmSpec:
    states: tuple[str, ...]
    initial: str
    alphabet: tuple[str, ...]
    transitions: tuple[tuple[str, str, str], ...]

    def check(self) -> None:
        for kind, names in (("state", self.states), ("symbol", self.alphabet)):
            if len(set(names)) != len(names):
                raise FsmError(f"duplicate {kind} name")
            for n in names:
                if not _IDENT.match(n):
                    raise FsmError(f"{kind} name {n!r} is not an identifier")
        if not self.states:
            raise FsmError("an FSM needs at least one state")
        if self.initial not in self.states:
            raise FsmError(f"initial state {self.initial!r} is not declared")
        seen = set()
        for src, sym, dst in self.transitions:
            for s in (src, dst):
                if s not in self.states:
                    raise FsmError(f"transition {src} {sym} {dst}: unknown state {s!r}")
            if sym not in self.alphabet:
                raise FsmError(f"transition {src} {sym} {dst}: unknown symbol {sym!r}")
            if (src, sym) in seen:
                raise FsmError(f"nondeterministic: two transitions from {src!r} on {sym!r}")
            seen.add((src, sym))


def parse_fsm(text: str) -> FsmSpec:
    """Read the line-oriented ``.fsm`` format (``states:``, ``initial:``, ``alphabet:``, ``trans:``)."""
    states: list[str] = []
    alphabet: list[str] = []
    initial = None
    transitions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise FsmError(f"line {lineno}: expected 'key: value'")
        key, words = key.strip(), rest.split()
        if key == "states":
            states.extend(words)
        elif key == "alphabet":
            alphabet.extend(words)
        elif key == "initial":
            if len(words) != 1:
                raise FsmError(f"line {lineno}: 'initial' takes exactly one state")
            initial = words[0]
        elif key == "trans":
            if len(words) != 3:
                raise FsmError(f"line {lineno}: 'trans' takes 'from symbol to'")
            transitions.append(tuple(words))
        else:
            raise FsmError(f"line {lineno}: unknown key {key!r}")
    if initial is None:
        raise FsmError("missing 'initial' line")
    spec = FsmSpec(tuple(states), initial, tuple(alphabet), tuple(transitions))
    spec.check()
    return spec


def format_fsm(spec: FsmSpec) -> str:
    lines = [
        "states: " + " ".join(spec.states),
        f"initial: {spec.initial}",
        "alphabet: " + " ".join(spec.alphabet),
    ]
    lines += [f"trans: {s} {a} {d}" for s, a, d in spec.transitions]
    return "\n".join(lines) + "\n"


def state_node(state: str) -> str:
    return f"state_{state}"


def symbol_entry(symbol: str) -> str:
    return f"env_{symbol}_transfer"


def import_fsm(spec: FsmSpec, name: str = "Fsm") -> Model:
    spec.check()
    b = ModelBuilder(
        name,
        doc=(
            f"Imported from a finite-state machine; initial state {spec.initial}.",
            f"Replay: stimulus at tick 0 on {state_node(spec.initial)} labeled {spec.initial},",
            f"then symbol i at tick 1 + {SYMBOL_SPACING}*i on env_<symbol>_transfer.",
        ),
    )
    b.thimac("Environment")
    b.thimac("Machine")
    b.thimac("State", parent="Machine")
    b.store(STATE_STORE, "State")
    for s in spec.states:
        b.action(state_node(s), "create", "State", store=STATE_STORE, label=s)
    for a in spec.alphabet:
        b.action(f"env_{a}_release", "release", "Environment", label=a)
        b.action(symbol_entry(a), "transfer", "Environment", label=a)
        b.action(f"in_{a}_transfer", "transfer", "Machine", label=a)
        b.action(f"in_{a}_receive", "receive", "Machine", label=a)
        b.action(f"in_{a}_process", "process", "Machine", label=a)
    for a in spec.alphabet:
        b.flow(f"env_{a}_release", symbol_entry(a))
        b.flow(symbol_entry(a), f"in_{a}_transfer")
        b.flow(f"in_{a}_transfer", f"in_{a}_receive")
        b.flow(f"in_{a}_receive", f"in_{a}_process")
    for src, sym, dst in spec.transitions:
        b.trigger(f"in_{sym}_process", state_node(dst), Guard(STATE_STORE, "==", src))

    b.event("init", f"The machine starts in {spec.initial}", [state_node(spec.initial)])
    for s in spec.states:
        b.event(f"enter_{s}", f"Enter state {s}", [state_node(s)])
    for a in spec.alphabet:
        b.event(
            f"consume_{a}",
            f"Symbol {a} is consumed",
            [symbol_entry(a), f"in_{a}_transfer", f"in_{a}_receive", f"in_{a}_process"],
        )
    b.behavior("init", f"enter_{spec.initial}")
    induced = []
    for _, sym, dst in spec.transitions:
        edge = (f"consume_{sym}", f"enter_{dst}")
        if edge not in induced:
            induced.append(edge)
    for src, dst in induced:
        b.behavior(src, dst)
    return b.build()


def fsm_schedule(spec: FsmSpec, word: Sequence[str]) -> list[Stimulus]:
    out = [Stimulus(0, state_node(spec.initial), spec.initial)]
    for i, sym in enumerate(word):
        if sym not in spec.alphabet:
            raise FsmError(f"symbol {sym!r} is not in the alphabet")
        out.append(Stimulus(1 + SYMBOL_SPACING * i, symbol_entry(sym), sym))
    return out


def state_sequence(writes: Iterable[tuple[int, str]]) -> list[str]:
    """Values of a store's write history, in order."""
    return [value for _, value in writes]
