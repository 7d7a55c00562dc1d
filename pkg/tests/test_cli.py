import json
import shutil

import pytest

from tmkit.cli import main
from tmkit.dsl import parse_file

from .conftest import CORPUS, FIXTURES, RULES_DIR

LOOP = """model Loop
thimac T {
  action s create
  action a process
  action b process
}

trigger s -> a
trigger a -> b
trigger b -> a
"""

SKIPPER = """model Skipper
thimac Out {
  action t1 transfer
  action t2 transfer
}

thimac In {
  action r1 receive
  action r2 receive
}

flow t1 -> r1
flow t2 -> r2

trigger r1 -> r2

event E1 "first" region { t1 r1 }
event E2 "second" region { t2 r2 }

behavior E1 -> E2
"""


def tm(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_prints_canonical_text(capsys):
    code, out, _ = tm(capsys, "parse", CORPUS / "turnstile.tm")
    assert code == 0 and out.startswith("model Turnstile\n")


def test_validate_exit_codes(capsys):
    assert tm(capsys, "validate", CORPUS / "entry_mask.tm")[:2] == (0, "0 error(s), 0 warning(s)\n")
    code, out, _ = tm(capsys, "validate", RULES_DIR / "S1.tm")
    assert code == 1 and out.startswith("ERROR S1 p r:")


def test_validate_json(capsys):
    code, out, _ = tm(capsys, "validate", "--json", RULES_DIR / "D4.tm")
    doc = json.loads(out)
    assert code == 1 and doc["model"] == "D4"
    assert doc["diagnostics"] == [
        {"severity": "error", "rule": "D4", "subjects": ["E1"], "message": "time window 5..2 starts after it ends"}
    ]


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.tm"
    bad.write_text("model M\nthimac T {\n  action a wobble\n}\n")
    code, _, err = tm(capsys, "validate", bad)
    assert code == 2 and f"{bad}:3:" in err


def test_sim_reference(capsys):
    code, out, _ = tm(capsys, "sim", CORPUS / "turnstile.tm", "--schedule", CORPUS / "turnstile.sched")
    assert code == 0
    assert [line for line in out.splitlines() if "COMPLETE" in line] == [
        "4 COMPLETE E1",
        "6 COMPLETE E2",
        "6 COMPLETE E3",
        "7 COMPLETE E4",
    ]


def test_sim_json(capsys):
    code, out, _ = tm(capsys, "sim", CORPUS / "order.tm", "--schedule", CORPUS / "order.sched", "--json")
    doc = json.loads(out)
    assert code == 0
    assert set(doc) == {"model", "diagnostics", "trace"}
    assert set(doc["trace"]) == {"executions", "completions", "budget_exhausted"}
    assert doc["trace"]["completions"][-1] == [12, "E7"]
    assert all(len(x) == 3 for x in doc["trace"]["executions"])


def test_sim_budget_exit(capsys, tmp_path):
    (tmp_path / "loop.tm").write_text(LOOP)
    (tmp_path / "loop.sched").write_text("0 s\n")
    code, out, _ = tm(capsys, "sim", tmp_path / "loop.tm", "--schedule", tmp_path / "loop.sched", "--max-ticks", 10)
    assert code == 3 and out.endswith("BUDGET EXHAUSTED\n")


def test_sim_conformance_exit(capsys, tmp_path):
    (tmp_path / "skip.tm").write_text(SKIPPER)
    (tmp_path / "skip.sched").write_text("0 t2 jump\n")
    code, out, _ = tm(capsys, "sim", tmp_path / "skip.tm", "--schedule", tmp_path / "skip.sched")
    assert code == 4 and "ERROR C1 E2:" in out


def test_sim_invalid_model(capsys):
    code, _, _ = tm(capsys, "sim", RULES_DIR / "S1.tm", "--schedule", CORPUS / "turnstile.sched")
    assert code == 1


def test_sim_bad_stimulus_is_usage_error(capsys, tmp_path):
    (tmp_path / "s.sched").write_text("0 coin_process coin\n")
    code, _, err = tm(capsys, "sim", CORPUS / "turnstile.tm", "--schedule", tmp_path / "s.sched")
    assert code == 64 and "coin_process" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        [],
        ["sim", "x.tm"],
        ["render", "x.tm", "--level", "cosmic"],
        ["import", "-o", "out.tm"],
        ["validate", "does/not/exist.tm"],
    ],
)
def test_usage_errors(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse exits on its own
        code = exc.code
    assert code == 64


def test_import_fsm_and_ctx(capsys, tmp_path):
    out = tmp_path / "fsm.tm"
    assert tm(capsys, "import", "--fsm", CORPUS / "turnstile.fsm", "-o", out)[0] == 0
    assert parse_file(out).name == "Turnstile"
    out = tmp_path / "ctx.tm"
    assert tm(capsys, "import", "--ctx", CORPUS / "mining.ctx", "-o", out, "--name", "EarlyWarning")[0] == 0
    assert len(parse_file(out).actions) == 20


def test_import_bad_source(capsys, tmp_path):
    (tmp_path / "bad.fsm").write_text("states: a\n")
    code, _, err = tm(capsys, "import", "--fsm", tmp_path / "bad.fsm", "-o", tmp_path / "o.tm")
    assert code == 64 and "initial" in err


def test_render_to_file(capsys, tmp_path):
    out = tmp_path / "t.dot"
    code, stdout, _ = tm(capsys, "render", CORPUS / "turnstile.tm", "--level", "dynamic", "--highlight", "E1", "-o", out)
    assert code == 0 and stdout == ""
    assert out.read_text().startswith('digraph "Turnstile" {')


def test_render_invalid_model(capsys):
    code, _, err = tm(capsys, "render", RULES_DIR / "B1.tm", "--level", "static")
    assert code == 1 and "B1" in err


def test_corpus_bundled(capsys):
    code, out, _ = tm(capsys, "corpus", CORPUS)
    assert code == 0 and out.endswith("5/5 fixtures passed\n")


def test_corpus_detects_drift(capsys, tmp_path):
    corpus = tmp_path / "corpus"
    shutil.copytree(CORPUS, corpus)
    (corpus / "turnstile.expected").write_text("4 E1\n6 E3\n6 E2\n7 E4\n")
    code, out, _ = tm(capsys, "corpus", corpus)
    assert code == 1
    assert [line for line in out.splitlines() if line.startswith("FAIL")] == ["FAIL turnstile"]
    assert out.endswith("4/5 fixtures passed\n")


def test_corpus_empty_dir(capsys, tmp_path):
    code, _, err = tm(capsys, "corpus", tmp_path)
    assert code == 1 and "no fixtures found" in err


@pytest.mark.parametrize("name", FIXTURES)
def test_outputs_are_byte_identical(capsys, name):
    sim = ["sim", CORPUS / f"{name}.tm", "--schedule", CORPUS / f"{name}.sched", "--json"]
    render = ["render", CORPUS / f"{name}.tm", "--level", "dynamic", "--elide-rtr"]
    for argv in (sim, render):
        assert tm(capsys, *argv) == tm(capsys, *argv)
