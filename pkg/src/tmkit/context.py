"""Redraft structured-analysis context diagrams as static TM models."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import Model, ModelBuilder

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ContextError(ValueError):
    pass


@dataclass(frozen=True)
class ContextSpec:
    system: str
    entities: tuple[str, ...]
    flows: tuple[tuple[str, str, str], ...]  # (from, to, label)

    def check(self) -> None:
        names = (self.system, *self.entities)
        if len(set(names)) != len(names):
            raise ContextError("entity names must be unique and differ from the system name")
        for n in names:
            if not _IDENT.match(n):
                raise ContextError(f"name {n!r} is not an identifier")
        for src, dst, label in self.flows:
            for end in (src, dst):
                if end not in names:
                    raise ContextError(f"flow {src} -> {dst}: unknown participant {end!r}")
            if (src == self.system) == (dst == self.system):
                raise ContextError(f"flow {src} -> {dst} {label!r}: exactly one endpoint must be the system")
            if '"' in label:
                raise ContextError(f"flow label {label!r} contains a quote")


def parse_ctx(text: str) -> ContextSpec:
    """Read ``system: S``, ``entity: E`` and ``flow: E -> S label`` lines."""
    system = None
    entities: list[str] = []
    flows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise ContextError(f"line {lineno}: expected 'key: value'")
        key, rest = key.strip(), rest.strip()
        if key == "system":
            system = rest
        elif key == "entity":
            entities.append(rest)
        elif key == "flow":
            m = re.match(r"(\S+)\s*->\s*(\S+)\s*(.*)\Z", rest)
            if m is None:
                raise ContextError(f"line {lineno}: expected 'flow: FROM -> TO label'")
            flows.append((m.group(1), m.group(2), m.group(3).strip()))
        else:
            raise ContextError(f"line {lineno}: unknown key {key!r}")
    if system is None:
        raise ContextError("missing 'system' line")
    spec = ContextSpec(system, tuple(entities), tuple(flows))
    spec.check()
    return spec


def import_context(spec: ContextSpec, name: str = "Context") -> Model:
    """One thimac per participant; each labeled flow becomes release, transfer, transfer, receive."""
    spec.check()
    b = ModelBuilder(name)
    b.thimac(spec.system)
    for e in spec.entities:
        b.thimac(e)
    for i, (src, dst, label) in enumerate(spec.flows, 1):
        prefix = f"flow{i}"
        b.action(f"{prefix}_release", "release", src, label=label)
        b.action(f"{prefix}_out", "transfer", src, label=label)
        b.action(f"{prefix}_in", "transfer", dst, label=label)
        b.action(f"{prefix}_receive", "receive", dst, label=label)
        b.flow(f"{prefix}_release", f"{prefix}_out")
        b.flow(f"{prefix}_out", f"{prefix}_in")
        b.flow(f"{prefix}_in", f"{prefix}_receive")
    return b.build()
