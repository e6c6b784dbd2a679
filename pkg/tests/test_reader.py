import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isynth.editor_form import EditorBinding, EditorValue
from isynth.errors import LexError, ParseError
from isynth.printer import write_form, write_module
from isynth.reader import read_form, read_module
from isynth.syntax import structurally_equal
from isynth.values import VOID


def test_minimal_definition_shape():
    tree = read_module("(define (f x) x)")
    assert len(tree.children) == 1
    form = tree.children[0]
    assert form.kind == "list"
    assert len(form.children) == 3
    assert form.children[0].is_symbol("define")


def test_editor_block_parses_to_editor_value():
    text = ('#editor { binding: ["lib/form-builder.rkt", "form-builder$"], '
            'state: { name: "person$", keys: ["Name", "Age"] } }')
    tree = read_module(text)
    node = tree.children[0]
    assert node.kind == "editor"
    ev = node.value
    assert ev.binding == EditorBinding("lib/form-builder.rkt", "form-builder$")
    assert ev.state == {"name": "person$", "keys": ["Name", "Age"]}


def test_unbalanced_input_position():
    with pytest.raises(ParseError) as exc:
        read_module("(f")
    assert exc.value.span.start == 2  # where the input ran out
    assert exc.value.span.line == 1


def test_reading_never_runs_user_code():
    from isynth.kernel import Kernel
    kernel = Kernel(root=".")
    read_module('(define-interactive-syntax evil$ base$ (super-new) '
                '(define-elaborator this (log-effect! (quote boom)) '
                "#'(void)))\n"
                '#editor { binding: [null, "evil$"], state: {} }\n')
    assert kernel.effect_log == []


@pytest.mark.parametrize("text,error", [
    ('"abc', LexError),
    ('#q', LexError),
    ('(]', ParseError),
    (')', ParseError),
    ('#editor { binding: [null "x"], state: {} }', ParseError),
    ('#editor { state: {}, binding: [null, "x"] }', ParseError),
    ('#editor { binding: [null, "x"], state: { a: 1, a: 2 } }', ParseError),
    ('9223372036854775808', LexError),
])
def test_reader_errors(text, error):
    with pytest.raises(error):
        read_module(text)


@pytest.mark.parametrize("text,value", [
    ("42", 42),
    ("-7", -7),
    ("2.5", 2.5),
    ("1e3", 1000.0),
    ("#t", True),
    ("#f", False),
])
def test_atoms(text, value):
    node = read_form(text)
    assert node.value == value


def test_quote_sugar():
    form = read_form("'(a b)")
    assert form.children[0].is_symbol("quote")
    assert write_form(form) == "'(a b)"
    assert write_form(read_form("#'(void)")) == "#'(void)"
    assert write_form(read_form("#`(f #,x)")) == "#`(f #,x)"


def test_comments_dropped():
    tree = read_module("; hello\n(define x 1) ; tail\n")
    assert len(tree.children) == 1


def test_brackets_accepted_and_canonicalized():
    form = read_form("[a b]")
    assert form.kind == "list"
    assert write_form(form) == "(a b)"


def test_spans_cover_tokens():
    tree = read_module("(define x 1)\n(define y 2)\n")
    a, b = tree.children
    assert a.span.start == 0 and a.span.end == 12
    assert b.span.line == 2 and b.span.col == 1


def test_state_values():
    text = ('#editor { binding: [null, "x$"], state: '
            '{ a: null, b: true, c: -2, d: 1.5, e: {}, f: [1, [2]] } }')
    ev = read_form(text).value
    assert ev.state["a"] is VOID
    assert ev.state["b"] is True
    assert ev.state["c"] == -2
    assert ev.state["d"] == 1.5
    assert ev.state["e"] == {}
    assert ev.state["f"] == [1, [2]]


def test_nested_editor_in_state():
    text = ('#editor { binding: [null, "a$"], state: '
            '{ inner: #editor { binding: [null, "b$"], state: {} } } }')
    ev = read_form(text).value
    inner = ev.state["inner"]
    assert isinstance(inner, EditorValue)
    assert inner.binding == EditorBinding(None, "b$")


def test_empty_module_writes_single_newline():
    assert write_module(read_module("")) == "\n"


def test_empty_state_prints():
    text = '#editor { binding: [null, "x$"], state: {} }\n'
    assert write_module(read_module(text)) == text


# -- round-trip property ------------------------------------------------------

symbols = st.sampled_from(["f", "x", "lst", "hash-ref", "tsuro-tile$",
                           "set!", "a-b?", "%tmp", "when", "..."])
atoms = st.one_of(
    symbols.map(lambda s: ("symbol", s)),
    st.integers(min_value=-2**62, max_value=2**62).map(lambda n: ("number", n)),
    st.floats(allow_nan=False, allow_infinity=False, width=64)
    .map(lambda f: ("number", f)),
    st.text(max_size=8).map(lambda s: ("string", s)),
    st.booleans().map(lambda b: ("boolean", b)),
)

state_values = st.recursive(
    st.one_of(st.booleans(), st.integers(min_value=-2**62, max_value=2**62),
              st.text(max_size=6), st.just(None)),
    lambda inner: st.one_of(
        st.lists(inner, max_size=3),
        st.dictionaries(st.text(min_size=1, max_size=5), inner, max_size=3)),
    max_leaves=8)


def to_source(node, depth=0):
    kind = node[0]
    if kind == "symbol":
        return node[1]
    if kind == "string":
        from isynth.printer import escape_string
        return escape_string(node[1])
    if kind == "number":
        return repr(node[1]) if isinstance(node[1], float) else str(node[1])
    if kind == "boolean":
        return "#t" if node[1] else "#f"
    if kind == "list":
        return "(" + " ".join(to_source(c, depth + 1) for c in node[1]) + ")"
    raise AssertionError(kind)


trees = st.recursive(atoms,
                     lambda inner: st.lists(inner, max_size=4)
                     .map(lambda cs: ("list", cs)),
                     max_leaves=20)


@given(st.lists(trees, max_size=5))
@settings(max_examples=200, deadline=None)
def test_write_read_roundtrip(forms):
    text = "\n".join(to_source(f) for f in forms)
    tree = read_module(text)
    printed = write_module(tree)
    tree2 = read_module(printed)
    assert structurally_equal(tree, tree2)
    assert write_module(tree2) == printed  # canonical fixed point


@given(st.dictionaries(
    st.from_regex(r"[A-Za-z_][A-Za-z0-9_-]{0,6}", fullmatch=True),
    state_values, max_size=4))
@settings(max_examples=100, deadline=None)
def test_editor_state_roundtrip(state):
    from isynth.editor_form import state_from_json
    host_state = {k: state_from_json(v) for k, v in state.items()}
    ev = EditorValue(EditorBinding("lib/x.rkt", "x$"), host_state)
    from isynth.syntax import Syntax
    node = Syntax("editor", ev)
    text = write_module(Syntax("list", "module", (node,)))
    again = read_module(text).children[0].value
    assert again == ev
    assert write_module(read_module(text)) == text
