"""Textual ``.tm`` syntax: parser and canonical serializer.

Grammar::

    file      := "model" IDENT stmt*
    stmt      := thimac | flow | trigger | event | behavior
    thimac    := "thimac" IDENT STRING? "{" (thimac | store | action)* "}"
    store     := "store" IDENT
    action    := "action" IDENT KIND ("@" "store" "(" IDENT ")")? STRING?
    flow      := "flow" IDENT "->" IDENT
    trigger   := "trigger" IDENT "->" IDENT ("if" IDENT ("==" | "!=") STRING)?
    event     := "event" IDENT STRING "region" "{" IDENT* "}"
                 ("time" INT ".." INT)? ("cancels" ("all" | "{" IDENT+ "}"))?
    behavior  := "behavior" IDENT "->" IDENT

``//`` starts a comment running to end of line. Comment lines directly after
the ``model`` header are kept as the model's doc block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    CANCEL_ALL,
    ActionKind,
    Guard,
    Model,
    ModelBuilder,
    natural_key,
)

STATEMENT_KEYWORDS = frozenset({"model", "thimac", "store", "action", "flow", "trigger", "event", "behavior"})
KEYWORDS = STATEMENT_KEYWORDS | {"region", "time", "cancels", "all", "if"} | {k.value for k in ActionKind}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    expected: str
    found: str

    @property
    def message(self) -> str:
        return f"{self.span}: expected {self.expected}, found {self.found}"

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class DuplicateIdError(ParseError):
    previous: Optional[SourceSpan] = None

    @property
    def message(self) -> str:
        return f"{self.span}: duplicate {self.expected} {self.found} (first declared at {self.previous})"


class TMSyntaxError(ValueError):
    """Raised by :func:`parse` with every error collected from the source."""

    def __init__(self, errors: list[ParseError]):
        self.errors = list(errors)
        super().__init__("\n".join(e.message for e in self.errors))


class DanglingReferenceError(ValueError):
    pass


# --------------------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str  # ident, string, int, punct, eof
    value: str
    line: int
    column: int

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of file"
        if self.kind == "string":
            return f'"{self.value}"'
        return f"'{self.value}'"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<int>\d+(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>->|\.\.|==|!=|[{}()@])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, file: str, errors: list[ParseError]) -> tuple[list[Token], list[tuple[int, str]]]:
    tokens: list[Token] = []
    comments: list[tuple[int, str]] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            ch = text[pos]
            found = "unterminated string" if ch == '"' else repr(ch)
            errors.append(ParseError(SourceSpan(file, line, col, 1), "a token", found))
            if ch == '"':
                end = text.find("\n", pos)
                pos = len(text) if end < 0 else end
            else:
                pos += 1
            continue
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "comment":
            comments.append((line, value[2:].strip()))
        elif kind == "string":
            tokens.append(Token("string", value[1:-1], line, col))
        elif kind != "ws":
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens, comments


# --------------------------------------------------------------------------- parser


class _Bail(Exception):
    pass


class _Parser:
    def __init__(self, text: str, file: str):
        self.file = file
        self.errors: list[ParseError] = []
        self.tokens, self.comments = _tokenize(text, file, self.errors)
        self.pos = 0
        self.name: Optional[str] = None
        # deferred declarations, resolved once the whole file is read
        self.thimacs: list[tuple[str, Optional[str], Optional[str], SourceSpan]] = []
        self.stores: list[tuple[str, str, SourceSpan]] = []
        self.actions: list[tuple[str, ActionKind, str, Optional[str], Optional[str], SourceSpan, Optional[SourceSpan]]] = []
        self.flows: list[tuple[str, str, SourceSpan, SourceSpan]] = []
        self.triggers: list[tuple[str, str, Optional[Guard], SourceSpan, SourceSpan]] = []
        self.events: list[tuple[str, str, tuple[str, ...], Optional[tuple[int, int]], object, SourceSpan]] = []
        self.behavior: list[tuple[str, str]] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def span(self, tok: Token) -> SourceSpan:
        length = len(tok.value) + (2 if tok.kind == "string" else 0)
        return SourceSpan(self.file, tok.line, tok.column, length)

    def fail(self, expected: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        self.errors.append(ParseError(self.span(tok), expected, tok.describe()))
        raise _Bail

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, value: str) -> bool:
        return self.tok.kind in ("ident", "punct") and self.tok.value == value

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.fail(f"'{value}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        tok = self.tok
        if tok.kind != "ident" or tok.value in KEYWORDS:
            self.fail(what)
        return self.advance()

    def string(self, what: str = "quoted string") -> Token:
        if self.tok.kind != "string":
            self.fail(what)
        return self.advance()

    def integer(self) -> int:
        if self.tok.kind != "int":
            self.fail("integer")
        return int(self.advance().value)

    def sync(self, start: int, stop_at_brace: bool) -> None:
        if self.pos == start:
            self.advance()
        while self.tok.kind != "eof":
            if self.tok.kind == "ident" and self.tok.value in STATEMENT_KEYWORDS:
                return
            if stop_at_brace and self.at("}"):
                return
            self.advance()

    # grammar
    def parse(self) -> None:
        if self.at("model"):
            self.advance()
            try:
                self.name = self.ident("model name").value
            except _Bail:
                self.sync(self.pos, False)
        else:
            self.errors.append(ParseError(self.span(self.tok), "'model' header", self.tok.describe()))
        while self.tok.kind != "eof":
            start = self.pos
            try:
                self.top_statement()
            except _Bail:
                self.sync(start, False)

    def top_statement(self) -> None:
        tok = self.tok
        if self.at("thimac"):
            self.thimac(None)
        elif self.at("flow"):
            self.flow()
        elif self.at("trigger"):
            self.trigger()
        elif self.at("event"):
            self.event()
        elif self.at("behavior"):
            self.behavior_stmt()
        elif self.at("model"):
            self.fail("a single 'model' header")
        else:
            self.fail("'thimac', 'flow', 'trigger', 'event' or 'behavior'", tok)

    def thimac(self, parent: Optional[str]) -> None:
        self.expect("thimac")
        id_tok = self.ident("thimac id")
        name = self.advance().value if self.tok.kind == "string" else None
        self.expect("{")
        self.thimacs.append((id_tok.value, name, parent, self.span(id_tok)))
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("'}'")
            start = self.pos
            try:
                if self.at("thimac"):
                    self.thimac(id_tok.value)
                elif self.at("store"):
                    self.advance()
                    s = self.ident("store id")
                    self.stores.append((s.value, id_tok.value, self.span(s)))
                elif self.at("action"):
                    self.action(id_tok.value)
                else:
                    self.fail("'thimac', 'store', 'action' or '}'")
            except _Bail:
                self.sync(start, True)
                if self.tok.kind == "ident" and self.tok.value not in ("thimac", "store", "action"):
                    # a top-level keyword: the closing brace is missing
                    self.errors.append(ParseError(self.span(self.tok), "'}'", self.tok.describe()))
                    raise _Bail
        self.advance()

    def action(self, owner: str) -> None:
        self.expect("action")
        id_tok = self.ident("action id")
        kind_tok = self.tok
        try:
            kind = ActionKind(kind_tok.value) if kind_tok.kind == "ident" else None
        except ValueError:
            kind = None
        if kind is None:
            self.fail("action kind (create, process, release, transfer, receive)")
        self.advance()
        store = store_span = None
        if self.at("@"):
            self.advance()
            self.expect("store")
            self.expect("(")
            s = self.ident("store id")
            store, store_span = s.value, self.span(s)
            self.expect(")")
        label = self.advance().value if self.tok.kind == "string" else None
        self.actions.append((id_tok.value, kind, owner, store, label, self.span(id_tok), store_span))

    def edge_ends(self) -> tuple[Token, Token]:
        src = self.ident("node id")
        self.expect("->")
        dst = self.ident("node id")
        if src.value == dst.value:
            self.fail("distinct endpoints", dst)
        return src, dst

    def flow(self) -> None:
        self.expect("flow")
        src, dst = self.edge_ends()
        self.flows.append((src.value, dst.value, self.span(src), self.span(dst)))

    def trigger(self) -> None:
        self.expect("trigger")
        src, dst = self.edge_ends()
        guard = None
        if self.at("if"):
            self.advance()
            store = self.ident("store id").value
            if not (self.at("==") or self.at("!=")):
                self.fail("'==' or '!='")
            op = self.advance().value
            guard = Guard(store, op, self.string().value)
        self.triggers.append((src.value, dst.value, guard, self.span(src), self.span(dst)))

    def event(self) -> None:
        self.expect("event")
        id_tok = self.ident("event id")
        name = self.string("quoted event name").value
        self.expect("region")
        self.expect("{")
        region = []
        while not self.at("}"):
            region.append(self.ident("node id or '}'").value)
        self.advance()
        window = None
        if self.at("time"):
            self.advance()
            a = self.integer()
            self.expect("..")
            window = (a, self.integer())
        cancels = None
        if self.at("cancels"):
            self.advance()
            if self.at("all"):
                self.advance()
                cancels = CANCEL_ALL
            else:
                self.expect("{")
                targets = [self.ident("event id").value]
                while not self.at("}"):
                    targets.append(self.ident("event id or '}'").value)
                self.advance()
                cancels = tuple(targets)
        self.events.append((id_tok.value, name, tuple(region), window, cancels, self.span(id_tok)))

    def behavior_stmt(self) -> None:
        self.expect("behavior")
        src, dst = self.edge_ends()
        self.behavior.append((src.value, dst.value))

    # resolution
    def resolve(self) -> Optional[Model]:
        seen: dict[tuple[str, str], SourceSpan] = {}

        def declare(ns: str, id: str, span: SourceSpan) -> bool:
            if (ns, id) in seen:
                self.errors.append(DuplicateIdError(span, f"{ns} id", id, seen[(ns, id)]))
                return False
            seen[(ns, id)] = span
            return True

        thimacs = [t for t in self.thimacs if declare("thimac", t[0], t[3])]
        stores = [s for s in self.stores if declare("store", s[0], s[2])]
        actions = [a for a in self.actions if declare("action", a[0], a[5])]
        events = [e for e in self.events if declare("event", e[0], e[5])]
        action_ids = {a[0] for a in actions}
        store_ids = {s[0] for s in stores}
        for a in actions:
            if a[3] is not None and a[3] not in store_ids:
                self.errors.append(ParseError(a[6], "declared store", a[3]))
        for src, dst, *rest in (*self.flows, *self.triggers):
            for end, span in ((src, rest[-2]), (dst, rest[-1])):
                if end not in action_ids:
                    self.errors.append(ParseError(span, "declared action", end))
        if self.errors:
            return None
        b = ModelBuilder(self.name or "", doc=self.doc_block())
        for tid, name, parent, _ in thimacs:
            b.thimac(tid, name, parent)
        for sid, owner, _ in stores:
            b.store(sid, owner)
        for aid, kind, owner, store, label, *_ in actions:
            b.action(aid, kind, owner, store, label)
        for src, dst, *_ in self.flows:
            b.flow(src, dst)
        for src, dst, guard, *_ in self.triggers:
            b.trigger(src, dst, guard)
        for eid, name, region, window, cancels, _ in events:
            b.event(eid, name, region, window, cancels)
        for src, dst in self.behavior:
            b.behavior(src, dst)
        return b.build()

    def doc_block(self) -> list[str]:
        first_stmt_line = self.tokens[2].line if len(self.tokens) > 2 else None
        header_line = self.tokens[0].line
        doc = []
        for line, text in self.comments:
            if line <= header_line:
                continue
            if first_stmt_line is not None and self.tokens[2].kind != "eof" and line >= first_stmt_line:
                break
            doc.append(text)
        return doc


def parse(text: str, file: str = "<string>") -> Model:
    """Parse ``.tm`` source into a :class:`Model`.

    Raises :class:`TMSyntaxError` carrying every error found; recovery skips
    to the next statement keyword so later statements are still checked.
    """
    if text.startswith("﻿"):
        text = text[1:]
    p = _Parser(text.replace("\r\n", "\n"), file)
    p.parse()
    model = p.resolve()
    if model is None:
        raise TMSyntaxError(p.errors)
    return model


def parse_file(path) -> Model:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse(fh.read(), str(path))


# --------------------------------------------------------------------------- serializer


def _q(text: str) -> str:
    if '"' in text or "\n" in text or "\r" in text:
        raise ValueError(f"cannot serialize string containing quote or newline: {text!r}")
    return f'"{text}"'


def _by_id(items):
    return sorted(items, key=lambda x: natural_key(x.id))


def _stable_by_src(edges):
    return sorted(edges, key=lambda e: natural_key(e.src))


def serialize(model: Model) -> str:
    """Canonical text for ``model``.

    Thimacs, stores, actions and events are emitted in natural id order.
    Flows and triggers are grouped by source node while keeping the
    declaration order among edges sharing a source, since that order drives
    branch choice and trigger firing in simulation.
    """
    problems = model.dangling_references()
    if problems:
        raise DanglingReferenceError("; ".join(problems))
    out = [f"model {model.name}"]
    out.extend(f"// {line}".rstrip() for line in model.doc)

    def emit_thimac(tid: str, depth: int) -> None:
        t = model.thimac_map[tid]
        pad = "  " * depth
        head = f"{pad}thimac {t.id}" + ("" if t.name == t.id else f" {_q(t.name)}")
        out.append(head + " {")
        for s in sorted(t.stores, key=natural_key):
            out.append(f"{pad}  store {s}")
        for aid in sorted(t.actions, key=natural_key):
            a = model.action_map[aid]
            line = f"{pad}  action {a.id} {a.kind.value}"
            if a.store is not None:
                line += f" @store({a.store})"
            if a.label is not None:
                line += f" {_q(a.label)}"
            out.append(line)
        for child in sorted(t.children, key=natural_key):
            emit_thimac(child, depth + 1)
        out.append(f"{pad}}}")

    sections: list[list[str]] = []
    start = len(out)
    for i, t in enumerate(_by_id(model.roots())):
        if i:
            out.append("")
        emit_thimac(t.id, 0)
    sections.append(out[start:])
    del out[start:]

    sections.append([f"flow {f.src} -> {f.dst}" for f in _stable_by_src(model.flows)])
    triggers = []
    for t in _stable_by_src(model.triggers):
        line = f"trigger {t.src} -> {t.dst}"
        if t.guard is not None:
            line += f" if {t.guard.store} {t.guard.op} {_q(t.guard.operand)}"
        triggers.append(line)
    sections.append(triggers)

    events = []
    for e in _by_id(model.events):
        region = " ".join(sorted(e.region, key=natural_key))
        line = f"event {e.id} {_q(e.name)} region {{ {region} }}" if region else f"event {e.id} {_q(e.name)} region {{ }}"
        if e.window is not None:
            line += f" time {e.window[0]}..{e.window[1]}"
        if e.cancels == CANCEL_ALL:
            line += " cancels all"
        elif e.cancels:
            line += " cancels { " + " ".join(sorted(dict.fromkeys(e.cancels), key=natural_key)) + " }"
        events.append(line)
    sections.append(events)
    sections.append(
        [f"behavior {s} -> {d}" for s, d in sorted(model.behavior, key=lambda p: (natural_key(p[0]), natural_key(p[1])))]
    )

    for sec in sections:
        if sec:
            out.append("")
            out.extend(sec)
    return "\n".join(out) + "\n"

