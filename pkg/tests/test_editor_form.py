import pytest

from isynth.editor_form import (EditorBinding, EditorValue, check_state_shape,
                                state_from_json, state_to_json)
from isynth.errors import (DuplicateState, StateTypeError, UnknownField,
                           UnresolvedBinding, UnserializableValue)
from isynth.kernel import Kernel, resolve_binding
from isynth.runtime import Session, deserialize_state, persist_instance
from isynth.values import VOID, Symbol
from tests.conftest import write_module_file


TILE_DEF = """
(define-interactive-syntax tile-ish$ base$
  (super-new)
  (define-state pairs (hash) #:elaborator #t #:getter #t)
  (define-elaborator this
    #'(void)))
"""


def load(tmp_path, text, name="m.rkt", **kw):
    kernel = Kernel(root=str(tmp_path), **kw)
    path = write_module_file(tmp_path, name, text)
    return kernel, kernel.load_module(path)


def test_binding_equality_and_json():
    b = EditorBinding(None, "simple$")
    assert b == EditorBinding(None, "simple$")
    assert b != EditorBinding("x.rkt", "simple$")
    assert b.to_json() == [None, "simple$"]


def test_state_json_roundtrip():
    state = {"a": VOID, "b": [1, "x", True],
             "c": {"k": 2.5},
             "d": EditorValue(EditorBinding(None, "e$"), {"n": 1})}
    encoded = state_to_json(state["d"])
    assert state_from_json(encoded) == state["d"]
    for key, value in state.items():
        assert state_from_json(state_to_json(value)) == value \
            or (value is VOID and state_from_json(state_to_json(value)) is VOID)


def test_resolve_binding_to_module_export(tmp_path):
    write_module_file(tmp_path, "lib/form.rkt", TILE_DEF)
    kernel, m = load(tmp_path, "(define x 1)")
    locator = resolve_binding(kernel,
                              EditorBinding("lib/form.rkt", "tile-ish$"), m)
    assert locator.name == "tile-ish$"
    assert locator.module_id == "lib/form.rkt"


def test_resolve_binding_local(tmp_path):
    kernel, m = load(tmp_path, TILE_DEF)
    locator = resolve_binding(kernel, EditorBinding(None, "tile-ish$"), m)
    assert locator.local


def test_resolve_binding_missing_file(tmp_path):
    kernel, m = load(tmp_path, "(define x 1)")
    with pytest.raises(UnresolvedBinding):
        resolve_binding(kernel, EditorBinding("missing.rkt", "x$"), m)


def test_resolve_binding_missing_export(tmp_path):
    write_module_file(tmp_path, "lib/form.rkt", TILE_DEF)
    kernel, m = load(tmp_path, "(define x 1)")
    with pytest.raises(UnresolvedBinding):
        resolve_binding(kernel, EditorBinding("lib/form.rkt", "other$"), m)


def session_for(tmp_path, text, **kw):
    kernel = Kernel(root=str(tmp_path), **kw)
    path = write_module_file(tmp_path, "mod.rkt", text)
    return Session(kernel, path).open()


def test_deserialize_defaults_apply(tmp_path):
    s = session_for(tmp_path, TILE_DEF + """
#editor { binding: [null, "tile-ish$"], state: {} }
""")
    inst = s.slots[0].instance
    assert inst.fields["pairs"] == {}


def test_deserialize_type_mismatch(tmp_path):
    kernel, m = load(tmp_path, TILE_DEF)
    definition = kernel.find_definition(EditorBinding(None, "tile-ish$"), m)
    ctx = kernel.run_context("edit")
    with pytest.raises(StateTypeError, match="pairs"):
        deserialize_state(kernel, ctx, {"pairs": 7}, definition)


def test_unknown_key_lenient_warns(tmp_path):
    s = session_for(tmp_path, TILE_DEF + """
#editor { binding: [null, "tile-ish$"], state: { mystery: 1 } }
""")
    assert any("mystery" in d for d in s.diagnostics)
    assert not any(hasattr(sl.instance, "diagnostic") for sl in s.slots)


def test_unknown_key_strict_fails_to_fallback(tmp_path):
    s = session_for(tmp_path, TILE_DEF + """
#editor { binding: [null, "tile-ish$"], state: { mystery: 1 } }
""", strict_state=True)
    from isynth.runtime import is_fallback
    assert is_fallback(s.slots[0].instance)
    assert "mystery" in s.slots[0].instance.diagnostic


PERSIST_DEF = """
(define-interactive-syntax doc$ base$
  (super-new)
  (define-state text "" #:getter #t #:setter #t)
  (define-state cursor 0 #:persist session #:getter #t #:setter #t)
  (define-state scratch (list) #:persist ephemeral))
"""


def test_session_fields_never_serialized(tmp_path):
    s = session_for(tmp_path, PERSIST_DEF + """
#editor { binding: [null, "doc$"], state: { text: "prose" } }
""")
    inst = s.slots[0].instance
    ctx = s.context()
    from isynth.objects import send_instance
    send_instance(ctx, inst, "set-cursor!", [42])
    value = persist_instance(ctx, inst)
    assert set(value.state) == {"text"}
    assert value.state["text"] == "prose"


def test_zero_state_definition_serializes_empty(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax unit$ base$
  (super-new))

#editor { binding: [null, "unit$"], state: {} }
""")
    value = persist_instance(s.context(), s.slots[0].instance)
    assert value.state == {}


def test_marshal_hooks_roundtrip(tmp_path):
    s = session_for(tmp_path, """
(begin-for-interactive-syntax
  (struct pt (x y))
  (define (pt->list p) (list (pt-x p) (pt-y p)))
  (define (list->pt l) (pt (first l) (second l))))

(define-interactive-syntax anchor$ base$
  (super-new)
  (define-state origin (pt 0 0) #:marshal (pt->list list->pt) #:getter #t))

#editor { binding: [null, "anchor$"], state: { origin: [3, 4] } }
""")
    inst = s.slots[0].instance
    origin = inst.fields["origin"]
    assert origin.rtype.name == "pt"
    assert origin.values == [3, 4]
    value = persist_instance(s.context(), inst)
    assert value.state == {"origin": [3, 4]}


def test_unserializable_without_marshal(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax holder$ base$
  (super-new)
  (define-state fn #f #:getter #t #:setter #t))

#editor { binding: [null, "holder$"], state: {} }
""")
    inst = s.slots[0].instance
    inst.fields["fn"] = lambda: None
    with pytest.raises(UnserializableValue, match="marshal"):
        persist_instance(s.context(), inst)


def test_nested_editor_field_roundtrip(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax inner$ base$
  (super-new)
  (define-state n 0 #:getter #t))

(define-interactive-syntax outer$ base$
  (super-new)
  (define-state child #f #:getter #t #:setter #t))

#editor { binding: [null, "outer$"], state: { child: #editor { binding: [null, "inner$"], state: { n: 7 } } } }
""")
    inst = s.slots[0].instance
    child_value = inst.fields["child"]
    assert isinstance(child_value, EditorValue)
    value = persist_instance(s.context(), inst)
    assert value.state["child"].state == {"n": 7}
    # a live nested instance persists as a nested editor value
    inst.fields["child"] = s.instantiate(child_value)
    value2 = persist_instance(s.context(), inst)
    assert value2 == value


def test_persistence_key_set_matches_file_fields(tmp_path):
    s = session_for(tmp_path, PERSIST_DEF + """
#editor { binding: [null, "doc$"], state: {} }
""")
    value = persist_instance(s.context(), s.slots[0].instance)
    assert set(value.state) == {"text"}


def test_shape_check_table():
    check_state_shape("f", [1], [])        # list for list default
    check_state_shape("f", "x", "")        # string for string default
    check_state_shape("f", 5, False)       # #f default accepts anything
    with pytest.raises(StateTypeError):
        check_state_shape("f", 7, {})
    with pytest.raises(StateTypeError):
        check_state_shape("f", "x", [])
