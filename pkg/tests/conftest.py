from pathlib import Path

import pytest
from hypothesis import strategies as st

from tmkit.corpus import bundled_corpus
from tmkit.dsl import KEYWORDS, parse_file
from tmkit.model import CANCEL_ALL, ActionKind, Guard, ModelBuilder
from tmkit.sim import parse_schedule

CORPUS = bundled_corpus()
RULES_DIR = Path(__file__).parent / "fixtures" / "rules"
FIXTURES = ("turnstile", "entry_mask", "route", "order", "leave_request")


def load_fixture(name):
    return parse_file(CORPUS / f"{name}.tm")


def load_schedule(name):
    return parse_schedule((CORPUS / f"{name}.sched").read_text())


@pytest.fixture
def turnstile():
    return load_fixture("turnstile")


@pytest.fixture(params=FIXTURES)
def fixture_name(request):
    return request.param


idents = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True).filter(lambda s: s not in KEYWORDS)
labels = st.text(
    alphabet=st.characters(blacklist_characters='"\n\r', blacklist_categories=("Cs",)), max_size=12
)


@st.composite
def models(draw, max_actions=8):
    """Random models that are reference-consistent at the static level."""
    ids = draw(st.lists(idents, min_size=1, max_size=16, unique=True))
    pool = iter(ids)
    n_thimacs = draw(st.integers(1, min(4, len(ids))))
    thimac_ids = [next(pool) for _ in range(n_thimacs)]
    rest = list(pool)
    b = ModelBuilder(draw(idents))
    for i, tid in enumerate(thimac_ids):
        parent = draw(st.sampled_from([None] + thimac_ids[:i])) if i else None
        name = draw(st.one_of(st.none(), labels))
        b.thimac(tid, name, parent)
    n_stores = draw(st.integers(0, min(2, len(rest))))
    store_ids = rest[:n_stores]
    for s in store_ids:
        b.store(s, draw(st.sampled_from(thimac_ids)))
    action_ids = rest[n_stores : n_stores + max_actions]
    for a in action_ids:
        b.action(
            a,
            draw(st.sampled_from(list(ActionKind))),
            draw(st.sampled_from(thimac_ids)),
            store=draw(st.one_of(st.none(), st.sampled_from(store_ids))) if store_ids else None,
            label=draw(st.one_of(st.none(), labels)),
        )
    if len(action_ids) >= 2:
        pairs = st.tuples(st.sampled_from(action_ids), st.sampled_from(action_ids)).filter(lambda p: p[0] != p[1])
        for src, dst in draw(st.lists(pairs, max_size=8)):
            b.flow(src, dst)
        for src, dst in draw(st.lists(pairs, max_size=5)):
            guard = None
            if store_ids and draw(st.booleans()):
                guard = Guard(draw(st.sampled_from(store_ids)), draw(st.sampled_from(["==", "!="])), draw(labels))
            b.trigger(src, dst, guard)
    event_ids = draw(st.lists(idents, max_size=4, unique=True))
    for eid in event_ids:
        region = draw(st.lists(st.sampled_from(action_ids), min_size=1, max_size=4)) if action_ids else []
        window = None
        if draw(st.booleans()):
            a, c = draw(st.integers(0, 50)), draw(st.integers(0, 50))
            window = (min(a, c), max(a, c))
        cancels = draw(
            st.one_of(
                st.none(),
                st.just(CANCEL_ALL),
                st.lists(st.sampled_from(event_ids), min_size=1, max_size=3),
            )
        )
        b.event(eid, draw(labels), region, window, cancels)
    if len(event_ids) >= 2:
        for src, dst in draw(
            st.lists(
                st.tuples(st.sampled_from(event_ids), st.sampled_from(event_ids)).filter(lambda p: p[0] != p[1]),
                max_size=5,
            )
        ):
            b.behavior(src, dst)
    return b.build()


@st.composite
def total_fsms(draw):
    """Deterministic FSMs with a transition for every (state, symbol) pair."""
    from tmkit.fsm import FsmSpec

    names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True)
    states = draw(st.lists(names, min_size=1, max_size=5, unique=True))
    alphabet = draw(st.lists(names, min_size=1, max_size=3, unique=True))
    transitions = tuple((s, a, draw(st.sampled_from(states))) for s in states for a in alphabet)
    return FsmSpec(tuple(states), draw(st.sampled_from(states)), tuple(alphabet), transitions)


@st.composite
def fsm_cases(draw):
    spec = draw(total_fsms())
    word = draw(st.lists(st.sampled_from(spec.alphabet), max_size=10))
    return spec, word


def simulate_fsm(spec, word):
    """States written by the imported model when replaying ``word``."""
    from tmkit.fsm import STATE_STORE, fsm_schedule, import_fsm, state_sequence
    from tmkit.sim import run

    trace = run(import_fsm(spec), fsm_schedule(spec, word))
    return state_sequence(trace.store_writes(STATE_STORE)), trace
