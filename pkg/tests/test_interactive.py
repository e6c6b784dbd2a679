import pytest

from isynth.errors import BadProperty, DuplicateState, EvaluationError
from isynth.kernel import Kernel
from isynth.objects import send_instance
from isynth.runtime import Session
from isynth.values import Symbol
from tests.conftest import write_module_file


def load(tmp_path, text, name="m.rkt"):
    kernel = Kernel(root=str(tmp_path))
    path = write_module_file(tmp_path, name, text)
    return kernel, kernel.load_module(path)


def session_for(tmp_path, text):
    kernel = Kernel(root=str(tmp_path))
    path = write_module_file(tmp_path, "mod.rkt", text)
    return Session(kernel, path).open()


def test_base_is_mandatory(tmp_path):
    with pytest.raises(EvaluationError, match="base is required"):
        load(tmp_path, "(define-interactive-syntax lonely$)")


def test_split_run_side_has_no_method_bodies(tmp_path):
    kernel, m = load(tmp_path, """
(define-interactive-syntax split$ base$
  (super-new)
  (define/public (poke) 'edit-only)
  (define-elaborator this
    #'(quote run-only)))

(define result #editor { binding: [null, "split$"], state: {} })
""")
    run_text = " ".join(__import__("isynth.printer", fromlist=["write_form"])
                        .write_form(f) for f in m.run_forms)
    assert "edit-only" not in run_text
    edit_text = " ".join(__import__("isynth.printer", fromlist=["write_form"])
                         .write_form(f) for f in m.edit_forms)
    assert "run-only" not in edit_text


def test_define_state_properties(tmp_path):
    kernel, m = load(tmp_path, """
(define-interactive-syntax stateful$ base$
  (super-new)
  (define-state pairs (hash) #:elaborator #t #:getter #t)
  (define-state text "")
  (define-state temp 0 #:persist session #:setter #t))
""")
    specs = {s.name: s for s in m.editor_defs["stateful$"].state_specs}
    assert specs["pairs"].elaborator_visible and specs["pairs"].getter
    assert specs["pairs"].persistence == "file"
    assert not specs["text"].getter and specs["text"].persistence == "file"
    assert specs["temp"].persistence == "session" and specs["temp"].setter


def test_generated_getter_only_when_requested(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax g$ base$
  (super-new)
  (define-state a 1 #:getter #t)
  (define-state b 2))

#editor { binding: [null, "g$"], state: {} }
""")
    inst = s.slots[0].instance
    ctx = s.context()
    assert send_instance(ctx, inst, "get-a", []) == 1
    with pytest.raises(EvaluationError, match="no method get-b"):
        send_instance(ctx, inst, "get-b", [])


def test_bad_property(tmp_path):
    with pytest.raises(BadProperty):
        load(tmp_path, """
(define-interactive-syntax bad$ base$
  (super-new)
  (define-state a 1 #:wat #t))
""")


def test_duplicate_state_same_body(tmp_path):
    with pytest.raises(DuplicateState):
        load(tmp_path, """
(define-interactive-syntax dup$ base$
  (super-new)
  (define-state a 1)
  (define-state a 2))
""")


def test_duplicate_state_across_chain(tmp_path):
    s_kernel, m = load(tmp_path, """
(define-interactive-syntax parent$ base$
  (super-new)
  (define-state a 1))

(define-interactive-syntax child$ parent$
  (super-new)
  (define-state a 2))
""")
    session = Session(s_kernel,
                      write_module_file(
                          tmp_path, "use.rkt",
                          open(f"{tmp_path}/m.rkt").read()
                          + '\n#editor { binding: [null, "child$"], state: {} }\n'))
    session.open()
    from isynth.runtime import is_fallback
    assert is_fallback(session.slots[0].instance)
    assert "a" in session.slots[0].instance.diagnostic


def test_mixin_composition_and_augment_order(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax-mixin trace-a$$
  (super-new)
  (define-state a-log "" #:getter #t)
  (define/augment (on-event e)
    (set! order (append order (list 'a)))))

(define-interactive-syntax-mixin trace-b$$
  (super-new)
  (define-state b-log "" #:getter #t)
  (define/augment (on-event e)
    (set! order (append order (list 'b)))))

(define-interactive-syntax traced$ (trace-b$$ (trace-a$$ widget$))
  (super-new)
  (define-state order (list) #:getter #t))

#editor { binding: [null, "traced$"], state: {} }
""")
    inst = s.slots[0].instance
    ctx = s.context()
    send_instance(ctx, inst, "on-event", [{}])
    # base runs first, then augmentations inside-out: a (inner) before b (outer)
    assert [v.name for v in inst.fields["order"]] == ["a", "b"]
    names = {spec.name for spec, _ in inst.definition.all_state_specs()}
    assert {"a-log", "b-log", "order"} <= names


def test_identity_mixin_preserves_behavior(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax-mixin id$$
  (super-new))

(define-interactive-syntax plain$ widget$
  (super-new)
  (define-state n 5 #:getter #t))

(define-interactive-syntax wrapped$ (id$$ plain$)
  (super-new))

#editor { binding: [null, "plain$"], state: {} }

#editor { binding: [null, "wrapped$"], state: {} }
""")
    ctx = s.context()
    a, b = s.slots[0].instance, s.slots[1].instance
    assert send_instance(ctx, a, "get-n", []) == send_instance(ctx, b, "get-n", [])
    assert send_instance(ctx, a, "preferred-size", []) == \
        send_instance(ctx, b, "preferred-size", [])


def test_mixin_cannot_define_elaborator(tmp_path):
    with pytest.raises(BadProperty, match="mixin"):
        load(tmp_path, """
(define-interactive-syntax-mixin bad$$
  (super-new)
  (define-elaborator this #'(void)))
""")


def test_override_shadows_augment_composes(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax base-draw$ widget$
  (super-new)
  (define-state log (list) #:getter #t)
  (define/override (preferred-size) (list 10 10))
  (define/public (record x) (set! log (append log (list x)))))

(define-interactive-syntax child-draw$ base-draw$
  (super-new)
  (define/override (preferred-size) (list 20 20))
  (define/augment (on-event e) (record 'child)))

#editor { binding: [null, "child-draw$"], state: {} }
""")
    inst = s.slots[0].instance
    ctx = s.context()
    assert send_instance(ctx, inst, "preferred-size", []) == [20, 20]
    send_instance(ctx, inst, "on-event", [{}])
    assert [v.name for v in inst.fields["log"]] == ["child"]


def test_super_new_required_position_runs_base_ctor_first(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax parent-ctor$ widget$
  (super-new)
  (define-state trail (list) #:getter #t #:setter #t)
  (set! trail (append trail (list 'parent))))

(define-interactive-syntax child-ctor$ parent-ctor$
  (super-new)
  (set! trail (append trail (list 'child))))

#editor { binding: [null, "child-ctor$"], state: {} }
""")
    inst = s.slots[0].instance
    assert [v.name for v in inst.fields["trail"]] == ["parent", "child"]


def test_meta_closure_generated_definition_expands(tmp_path):
    kernel, m = load(tmp_path, """
(begin-for-syntax
  (define (make-class-code name)
    (datum->syntax
     (list 'define-interactive-syntax (string->symbol name) 'base$
           (list 'super-new)
           (list 'define-elaborator 'me (list 'syntax 99))))))

(define-interactive-syntax maker$ base$
  (super-new)
  (define-state name "" #:elaborator #t)
  (define-elaborator this
    (make-class-code (send this get-name))))

#editor { binding: [null, "maker$"], state: { name: "made$" } }

(define result #editor { binding: [null, "made$"], state: {} })
""")
    assert "made$" in m.editor_defs
    ns = kernel.instantiate_run(m)
    assert ns.lookup("result") == 99


def test_methods_resolve_along_chain(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax speak$ widget$
  (super-new)
  (define/public (greeting) "hello"))

(define-interactive-syntax loud$ speak$
  (super-new)
  (define/public (exclaim) (string-append (greeting) "!")))

#editor { binding: [null, "loud$"], state: {} }
""")
    inst = s.slots[0].instance
    assert send_instance(s.context(), inst, "exclaim", []) == "hello!"


def test_class_body_scoping_is_mutually_recursive(tmp_path):
    s = session_for(tmp_path, """
(define-interactive-syntax recur$ widget$
  (super-new)
  (define/public (use-later) (later-helper))
  (define (later-helper) 'found))

#editor { binding: [null, "recur$"], state: {} }
""")
    inst = s.slots[0].instance
    assert send_instance(s.context(), inst, "use-later", []) == Symbol("found")
