"""Acceptance gate: one test per criterion, one printed line each.

Run with  pytest tests/test_acceptance.py -s  to see the PASS lines live.
All criteria run headless; no frontend is involved.
"""

import contextlib
import io
import json
import os
import random
import shutil
import time

import pytest

from isynth import cli
from isynth.editor_form import EditorBinding, EditorValue
from isynth.evaluator import Budget, apply_function
from isynth.kernel import Kernel
from isynth.objects import send_instance
from isynth.runtime import (Session, is_fallback, persist_instance,
                            run_event_script)
from isynth.values import VOID, Symbol, equal_values
from tests.conftest import SAMPLES, corpus_files

GOLDEN = os.path.join(os.path.dirname(__file__), "golden",
                      "simple-expansion.json")


def announce(number, text):
    print(f"PASS criterion {number}: {text}")


@pytest.fixture
def ws(tmp_path):
    dest = tmp_path / "ws"
    shutil.copytree(SAMPLES, dest)
    return dest


def run_cli(*args):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = cli.main(list(args))
    return code, out.getvalue()


def test_criterion_1_tsuro_transcript(ws):
    start = time.monotonic()
    kernel = Kernel(root=str(ws))
    session = Session(kernel, f"{ws}/tile-demo.rkt").open()
    with open(f"{ws}/scripts/tile-connect.jsonl") as fh:
        text = run_event_script(session, fh.read().splitlines())
    (ws / "tile-demo.rkt").write_text(text)
    kernel2 = Kernel(root=str(ws))
    ns = kernel2.instantiate_run(kernel2.load_module("tile-demo.rkt"))
    t = ns.lookup("t")
    assert t[Symbol("A")] is Symbol("G")
    assert t[Symbol("G")] is Symbol("A")
    elapsed = time.monotonic() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"
    announce(1, "tsuro event script connects A-G; (hash-ref t 'A) = 'G and "
                f"(hash-ref t 'G) = 'A in {elapsed * 1000:.0f} ms")


def test_criterion_2_golden_expansion_split():
    start = time.monotonic()
    kernel = Kernel(root=SAMPLES)
    module = kernel.load_module("simple.rkt")
    with open(GOLDEN) as fh:
        golden = json.load(fh)
    structure = json.loads(json.dumps(module.golden_structure(),
                                      sort_keys=True))
    assert structure == golden
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    announce(2, "expansion split matches the frozen golden structure "
                "(compile-phase elaborator, rebound editor, edit submodule)")


def test_criterion_3_five_step_editor_expansion():
    total_editors = 0
    for path in corpus_files():
        kernel = Kernel(root=SAMPLES)
        module = kernel.load_module(path)
        per_editor = {}
        for key, step in module.trace:
            per_editor.setdefault(key, []).append(step)
        for key, steps in per_editor.items():
            assert steps == ["recognize", "deserialize", "locate", "invoke",
                             "splice"], f"{key}: {steps}"
        total_editors += len(per_editor)
    assert total_editors >= 10
    announce(3, f"all {total_editors} corpus editors expand by exactly "
                "recognize->deserialize->locate->invoke->splice")


def test_criterion_4_submodule_semantics(ws):
    code, out = run_cli("run", f"{ws}/inc.rkt")
    assert code == 0 and out == ""
    code, out = run_cli("test", f"{ws}/inc.rkt")
    assert code == 0 and out.strip() == "2 tests passed"
    announce(4, "running the inc module produces no test output; "
                "its test submodule reports '2 tests passed'")


def test_criterion_5_phase_isolation():
    for path in corpus_files():
        rel = os.path.relpath(path, SAMPLES)
        kernel = Kernel(root=SAMPLES)
        kernel.instantiate_run(kernel.load_module(rel))
        assert kernel.effects_for("edit") == [], rel
        # run never touches named submodules either (their markers are absent)
        assert Symbol("test-side") not in [v for _, v in kernel.effect_log]
        kernel2 = Kernel(root=SAMPLES)
        session = Session(kernel2, path).open()
        assert kernel2.effects_for("run") == [], rel
        assert not session.diagnostics, (rel, session.diagnostics)
    announce(5, "across the corpus, run evaluation logs zero edit-phase "
                "effects and edit evaluation logs zero run-phase effects")


PRELUDE_STATES = {
    "label$": lambda rng: {"text": rng_text(rng)},
    "text-field$": lambda rng: {"text": rng_text(rng)},
    "button$": lambda rng: {"text": rng_text(rng)},
    "widget$": lambda rng: {},
    "vertical-block$": lambda rng: {},
    "horizontal-block$": lambda rng: {},
    "labeled-option$": lambda rng: {"label": rng_text(rng)},
    "table-base$": lambda rng: {"values": {
        rng_text(rng) or "k": rng_text(rng)
        for _ in range(rng.randrange(3))}},
}


def rng_text(rng):
    return "".join(rng.choice("abcXYZ 0123$-?") for _ in range(rng.randrange(9)))


def test_criterion_6_persistence_roundtrip(tmp_path):
    rng = random.Random(1848)
    kernel = Kernel(root=str(tmp_path))
    path = tmp_path / "host.rkt"
    path.write_text("(define x 1)\n")
    session = Session(kernel, str(path)).open()
    names = sorted(PRELUDE_STATES)
    for i in range(1000):
        name = names[i % len(names)]
        state = PRELUDE_STATES[name](rng)
        value = EditorValue(EditorBinding(None, name), state)
        inst = session.instantiate(value)
        assert not is_fallback(inst), inst.diagnostic
        out = persist_instance(session.context(), inst)
        for key, v in state.items():
            assert equal_values(out.state[key], v), (name, key)
        file_fields = {s.name for s, _ in inst.definition.all_state_specs()
                       if s.persistence == "file"}
        assert set(out.state) == file_fields, name
        session_fields = {s.name for s, _ in inst.definition.all_state_specs()
                          if s.persistence != "file"}
        assert not (set(out.state) & session_fields)
    announce(6, "1000 fuzzed prelude editor values: instantiate->persist is "
                "identity on file fields; session/ephemeral never serialized")


def test_criterion_7_fallback_totality(ws):
    rng = random.Random(93)
    kernel = Kernel(root=str(ws))
    session = Session(kernel, f"{ws}/simple.rkt").open()

    def junk(depth=0):
        pick = rng.randrange(8 if depth < 2 else 5)
        if pick == 0:
            return rng.randrange(-10**6, 10**6)
        if pick == 1:
            return rng.random() * 1e3
        if pick == 2:
            return "".join(rng.choice('az{}[]",:\\#$') for _ in range(5))
        if pick == 3:
            return rng.choice([True, False])
        if pick == 4:
            return VOID
        if pick == 5:
            return [junk(depth + 1) for _ in range(rng.randrange(3))]
        if pick == 6:
            return {f"k{i}": junk(depth + 1) for i in range(rng.randrange(3))}
        return EditorValue(EditorBinding("nowhere.rkt", "ghost$"),
                           {"x": junk(depth + 1)})

    names = ["simple$", "label$", "text-field$", "ghost$", "", "a b",
             "tsuro-tile$", "vertical-block$"]
    paths = [None, "missing.rkt", "simple.rkt", "../escape.rkt", "lib", ""]
    for i in range(1000):
        binding = EditorBinding(rng.choice(paths), rng.choice(names))
        state = {f"s{j}": junk() for j in range(rng.randrange(4))}
        inst = session.instantiate(EditorValue(binding, state))
        assert inst is not None  # never a crash

    # the broken form-builder scenario: fix the path, reinitialize, succeed
    (ws / "broken.rkt").write_text(
        '(define b\n  #editor { binding: ["lib/form-bilder.rkt", '
        '"form-builder$"], state: { name: "person$", keys: ["Name", "Age"] } })\n')
    s2 = Session(kernel, f"{ws}/broken.rkt").open()
    slot = s2.slots[0]
    assert is_fallback(slot.instance)
    fixed = s2.reinitialize(
        slot, binding=EditorBinding("lib/form-builder.rkt", "form-builder$"))
    assert not is_fallback(fixed)
    assert fixed.fields["name"] == "person$"
    announce(7, "1000 corrupted editor blocks all load as fallback or live "
                "instance without a crash; scripted fix reinitializes")


def test_criterion_8_sandbox_interruption(tmp_path):
    (tmp_path / "evil.rkt").write_text("""
(define-interactive-syntax spin$ widget$
  (super-new)
  (define/override (on-event event)
    (let loop () (loop))))

#editor { binding: [null, "spin$"], state: {} }

#editor { binding: [null, "text-field$"], state: { text: "ok" } }
""")
    budget = Budget(wall_ms=100)
    kernel = Kernel(root=str(tmp_path), budget=budget)
    session = Session(kernel, str(tmp_path / "evil.rkt")).open()
    start = time.monotonic()
    result = session.dispatch({"kind": "mouse-down", "target": "e0",
                               "x": 1, "y": 1})
    elapsed = time.monotonic() - start
    assert elapsed <= 2 * 0.100, f"interrupted after {elapsed * 1000:.0f} ms"
    assert result.fallback == "e0"
    sibling = session.dispatch({"kind": "text-input", "target": "e1",
                                "text": "!"})
    assert session.slots[1].instance.fields["text"] == "ok!"
    assert not sibling.diagnostics
    announce(8, f"infinite-loop handler interrupted in {elapsed * 1000:.0f} ms "
                "(budget 100 ms, limit 2x); sibling editor still responds")


def test_criterion_9_form_builder_meta(ws):
    kernel = Kernel(root=str(ws))
    module = kernel.load_module("student-course.rkt")
    assert "student-form$" in module.editor_defs  # builder generated it
    session = Session(kernel, f"{ws}/student-course.rkt").open()
    diags = []
    with open(f"{ws}/scripts/student-bad-entry.jsonl") as fh:
        for line in fh.read().splitlines():
            event = json.loads(line)
            if event.get("op"):
                break
            diags.extend(session.dispatch(event).diagnostics)
    joined = " | ".join(diags)
    assert 'Invalid "Student ID", expected an: id?' in joined
    ns = kernel.instantiate_run(module)
    assert ns.lookup("assignment2")[Symbol("score")] == 55
    announce(9, "builder generates student-form$; bad entry produces the "
                "edit-time diagnostic; valid form answers (dict-ref ... 'score)")


def test_criterion_10_red_black_equivalence(ws):
    kernel = Kernel(root=str(ws))
    ns = kernel.instantiate_run(kernel.load_module("rb-tree.rkt"))
    ctx = kernel.run_context()
    ctor = ns.lookup("tree")
    balance_text = ns.lookup("balance-text")
    balance_vis = ns.lookup("balance-vis")
    label = [0]

    def gen(depth):
        yield Symbol("leaf")
        if depth == 0:
            return
        for color in (Symbol("red"), Symbol("black")):
            for left in gen(depth - 1):
                for right in gen(depth - 1):
                    label[0] += 1
                    yield apply_function(ctor,
                                         [label[0], color, left, right], ctx)

    total = 0
    for t in gen(3):
        total += 1
        assert equal_values(apply_function(balance_text, [t], ctx),
                            apply_function(balance_vis, [t], ctx))
    assert total == 723
    announce(10, f"editor-pattern balance agrees with the textual oracle on "
                 f"all {total} trees of depth <= 3")


def test_criterion_11_byte_identity(ws):
    empty = str(ws / "scripts" / "empty.jsonl")
    checked = 0
    for path in corpus_files():
        rel = os.path.relpath(path, SAMPLES)
        target = str(ws / rel)
        code, out = run_cli("script", "--root", str(ws), target, empty)
        assert code == 0, rel
        with open(target, encoding="utf-8") as fh:
            original = fh.read()
        assert out == original, f"{rel} not reproduced byte-for-byte"
        checked += 1
    assert checked >= 10
    announce(11, f"empty event script reproduces all {checked} corpus files "
                 "byte-for-byte")
