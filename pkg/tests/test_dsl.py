import pytest
from hypothesis import given, settings

from tmkit.dsl import DanglingReferenceError, DuplicateIdError, TMSyntaxError, parse, parse_file, serialize
from tmkit.model import Guard, ModelBuilder, structural_eq
from tmkit.validate import validate_all

from .conftest import CORPUS, FIXTURES, load_fixture, models


def test_turnstile_shape(turnstile):
    assert [t.id for t in turnstile.roots()] == ["Customer", "Turnstile"]
    assert turnstile.thimac_map["Turnstile"].children == ("Slot", "Lock", "Arms")
    coin_trigger = [t for t in turnstile.triggers if t.src == "coin_process"]
    assert [(t.dst, t.guard) for t in coin_trigger] == [("lock_open", None)]
    assert turnstile.thimac_map["Slot"].name == "Coin slot"


def test_declaration_order_kept(turnstile):
    assert [a.id for a in turnstile.actions][:4] == ["coin_release", "coin_out", "push_release", "push_out"]
    assert [e.id for e in turnstile.events] == ["E1", "E2", "E3", "E4"]


def test_header_only_model():
    m = parse("model M\n")
    assert m.name == "M" and not m.thimacs and not m.events
    assert validate_all(m).diagnostics == ()


def test_self_loop_flow_is_parse_error():
    src = "model M\nthimac T {\n  action p1 process\n}\nflow p1 -> p1\n"
    with pytest.raises(TMSyntaxError) as info:
        parse(src)
    [err] = info.value.errors
    assert err.span.line == 5
    assert "p1" in err.message


def test_duplicate_reports_both_spans():
    src = "model M\nthimac T {\n  action a process\n  action a release\n}\n"
    with pytest.raises(TMSyntaxError) as info:
        parse(src, "dup.tm")
    [err] = info.value.errors
    assert isinstance(err, DuplicateIdError)
    assert (err.previous.line, err.span.line) == (3, 4)
    assert "dup.tm:4:" in err.message and "dup.tm:3:" in err.message


def test_recovery_reports_every_bad_statement():
    bad = [
        "flow a ->",
        "thimac {",
        "event E1 region { a }",
        "trigger a b",
        "behavior E1 E2",
        "store",
    ]
    src = "model M\nthimac T {\n  action a process\n  action b release\n}\n" + "\n".join(bad) + "\nflow a -> b\n"
    with pytest.raises(TMSyntaxError) as info:
        parse(src)
    assert len(info.value.errors) >= len(bad)


def test_error_message_is_deterministic():
    src = "model M\nthimac T {\n  action a frobnicate\n}\n"
    messages = set()
    for _ in range(3):
        with pytest.raises(TMSyntaxError) as info:
            parse(src, "x.tm")
        messages.add(str(info.value))
    assert len(messages) == 1
    assert messages.pop().startswith("x.tm:3:")


def test_unresolved_edge_endpoint():
    with pytest.raises(TMSyntaxError) as info:
        parse("model M\nthimac T {\n  action a process\n}\nflow a -> ghost\n")
    assert "ghost" in info.value.errors[0].message


def test_keyword_cannot_be_id():
    with pytest.raises(TMSyntaxError):
        parse("model M\nthimac flow {\n}\n")


def test_crlf_and_bom_accepted():
    text = (CORPUS / "turnstile.tm").read_text()
    m = parse("﻿" + text.replace("\n", "\r\n"))
    assert structural_eq(m, load_fixture("turnstile"))


def test_comments_and_labels_with_slashes():
    m = parse('model M // trailing\nthimac T { // opens\n  action a process "http://x // y"\n}\n')
    assert m.action_map["a"].label == "http://x // y"


def test_event_syntax_full():
    m = parse(
        "model M\nthimac T {\n  action a process\n}\n"
        'event E1 "first" region { a } time 2..9 cancels { E2 }\n'
        'event E2 "second" region { a } cancels all\n'
    )
    e1, e2 = m.events
    assert e1.window == (2, 9) and e1.cancels == ("E2",)
    assert e2.cancels == "all"


def test_entry_mask_serializes_nine_events():
    text = serialize(load_fixture("entry_mask"))
    assert sum(1 for line in text.splitlines() if line.startswith("event ")) == 9


@pytest.mark.parametrize("name", FIXTURES)
def test_corpus_fixed_point(name):
    once = serialize(parse_file(CORPUS / f"{name}.tm"))
    reparsed = parse(once)
    assert serialize(reparsed) == once
    assert structural_eq(reparsed, load_fixture(name))


def _twin(order):
    b = ModelBuilder("Twin").thimac("A").thimac("B")
    b.store("s", "B")
    decl = {
        "a1": lambda: b.action("a1", "create", "A", label="x"),
        "a2": lambda: b.action("a2", "release", "A"),
        "a3": lambda: b.action("a3", "transfer", "A"),
        "b1": lambda: b.action("b1", "transfer", "B"),
        "b2": lambda: b.action("b2", "receive", "B", store="s"),
    }
    for key in order:
        decl[key]()
    flows = [("a1", "a2"), ("a2", "a3"), ("a3", "b1"), ("b1", "b2")]
    for src, dst in flows if order[0] == "a1" else flows[::-1]:
        b.flow(src, dst)
    b.trigger("b2", "a1", Guard("s", "!=", "done"))
    events = [("E2", ["b1", "b2"]), ("E1", ["a2", "a3", "a1"])]
    for eid, region in events if order[0] == "a1" else events[::-1]:
        b.event(eid, eid.lower(), region)
    b.behavior("E1", "E2")
    return b.build()


def test_shuffled_twin_serializes_identically():
    canonical = _twin(["a1", "a2", "a3", "b1", "b2"])
    shuffled = _twin(["b2", "a3", "b1", "a1", "a2"])
    assert serialize(shuffled) == serialize(canonical)


def test_same_source_edge_order_is_kept():
    b = ModelBuilder("M").thimac("T")
    for n, k in [("r", "receive"), ("p", "process"), ("q", "release")]:
        b.action(n, k, "T")
    m = b.flow("r", "q").flow("r", "p").build()
    text = serialize(m)
    assert text.index("flow r -> q") < text.index("flow r -> p")


def test_dangling_model_refuses_to_serialize():
    m = ModelBuilder("M").thimac("T").action("a", "process", "T").flow("a", "ghost").build()
    with pytest.raises(DanglingReferenceError):
        serialize(m)


def test_serialize_layout(turnstile):
    text = serialize(turnstile)
    assert text.startswith("model Turnstile\n// Coin-operated subway turnstile.\n")
    assert "\r" not in text and text.endswith("\n")
    assert '  thimac Slot "Coin slot" {' in text
    assert "    action lock_open create @store(position) \"unlocked\"" in text


@settings(max_examples=250, deadline=None)
@given(models())
def test_round_trip(model):
    text = serialize(model)
    back = parse(text)
    assert structural_eq(back, model)
    assert serialize(back) == text
