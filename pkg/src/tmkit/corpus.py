"""Acceptance harness over a directory of fixtures.

Each fixture is a triple ``NAME.tm``, ``NAME.sched`` and ``NAME.expected``;
the last lists the expected event completions as ``tick event`` lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dsl import TMSyntaxError, parse_file
from .sim import ScheduleError, SimulationError, conformance, parse_schedule, run
from .validate import validate_all

MAX_TICKS = 1000
FIXTURE_NAMES = ("entry_mask", "leave_request", "order", "route", "turnstile")


class CorpusError(ValueError):
    pass


@dataclass
class FixtureResult:
    name: str
    ok: bool
    details: list[str] = field(default_factory=list)
    completions: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class CorpusReport:
    results: list[FixtureResult]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failures(self) -> list[FixtureResult]:
        return [r for r in self.results if not r.ok]

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            lines.append(f"{'PASS' if r.ok else 'FAIL'} {r.name}")
            lines.extend(f"  {d}" for d in r.details)
        lines.append(f"{len(self.results) - len(self.failures)}/{len(self.results)} fixtures passed")
        return "\n".join(lines) + "\n"


def bundled_corpus() -> Path:
    """Directory of the fixtures shipped with the package."""
    return Path(str(resources.files("tmkit") / "corpus"))


def parse_expected(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit():
            raise CorpusError(f"line {lineno}: expected 'tick event', got {raw.strip()!r}")
        out.append((int(parts[0]), parts[1]))
    return out


def format_expected(completions) -> str:
    return "".join(f"{tick} {event}\n" for tick, event in completions)


def check_fixture(tm_path: Path) -> FixtureResult:
    name = tm_path.stem
    res = FixtureResult(name, ok=False)
    sched_path = tm_path.with_suffix(".sched")
    expected_path = tm_path.with_suffix(".expected")
    for p in (sched_path, expected_path):
        if not p.exists():
            res.details.append(f"missing {p.name}")
    if res.details:
        return res
    try:
        model = parse_file(tm_path)
    except TMSyntaxError as exc:
        res.details.extend(f"parse: {e.message}" for e in exc.errors)
        return res
    report = validate_all(model)
    if not report.ok:
        res.details.extend(d.to_line() for d in report.errors)
        return res
    try:
        schedule = parse_schedule(sched_path.read_text(encoding="utf-8"), str(sched_path))
        expected = parse_expected(expected_path.read_text(encoding="utf-8"))
        trace = run(model, schedule, MAX_TICKS)
    except (ScheduleError, SimulationError, CorpusError) as exc:
        res.details.append(str(exc))
        return res
    res.completions = list(trace.completions)
    if trace.budget_exhausted:
        res.details.append(f"simulation budget of {MAX_TICKS} ticks exhausted")
    conf = conformance(trace, model)
    res.details.extend(d.to_line() for d in conf.violations)
    if trace.completions != expected:
        res.details.append(
            "completions differ: expected "
            + " ".join(f"{t}:{e}" for t, e in expected)
            + " got "
            + " ".join(f"{t}:{e}" for t, e in trace.completions)
        )
    res.ok = not res.details
    return res


def run_corpus(fixtures_dir) -> CorpusReport:
    """Parse, validate, simulate and conformance-check every fixture, sorted by name."""
    root = Path(fixtures_dir)
    if not root.is_dir():
        raise CorpusError(f"{root} is not a directory")
    fixtures = sorted(root.glob("*.tm"))
    if not fixtures:
        raise CorpusError("no fixtures found")
    return CorpusReport([check_fixture(p) for p in fixtures])
