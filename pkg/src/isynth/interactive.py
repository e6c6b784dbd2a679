"""Expansion rules for the interactive-syntax surface forms.

A definition splits into two halves: a compile-phase elaborator named
``<name>:elaborator`` that turns persisted state into code, and an
edit-phase class placed in the module's edit submodule (and provided from
it).  Mixins are edit-phase functions from definitions to definitions.
"""

from .errors import BadProperty, DuplicateState, EvaluationError
from .expander import Elaborator, EditorDefMeta
from .objects import ClassSpec, MethodSpec, MixinSpec, StateFieldSpec
from .syntax import DATUM, LIST, SYMBOL, Syntax, slist, sym

_METHOD_KINDS = {
    "define/public": "public",
    "define/override": "override",
    "define/augment": "augment",
}

_PERSISTENCE = ("file", "session", "ephemeral")


def analyze_base(stx):
    """Innermost base identifier and the mixin names wrapped around it."""
    mixins = []
    cur = stx
    while (cur.kind == LIST and len(cur.children) == 2
           and cur.children[0].kind == SYMBOL):
        mixins.append(cur.children[0].value)
        cur = cur.children[1]
    if cur.kind != SYMBOL:
        raise EvaluationError(
            "editor definition: base must be an identifier or a mixin "
            "application", stx.span)
    return cur.value, mixins


def pre_register(expander, form):
    """Pass 1: make the definition's elaborator and metadata known by name."""
    head = form.head_name()
    if len(form.children) < 2 or form.children[1].kind != SYMBOL:
        raise EvaluationError(f"{head}: a name is required", form.span)
    name = form.children[1].value
    if head == "define-interactive-syntax-mixin":
        specs = _scan_state_specs(expander, form.children[2:], expand=False)
        expander.out.editor_defs[name] = EditorDefMeta(
            name, None, specs, expander.out.module_id)
        return
    if len(form.children) < 3:
        raise EvaluationError(
            f"{head}: a base is required: ({head} {name} base$ ...)", form.span)
    base_name, mixin_names = analyze_base(form.children[2])
    specs = _scan_state_specs(expander, form.children[3:], expand=False)
    elab_clause = next((c for c in form.children[3:]
                        if c.head_name() in ("define-elaborator",
                                             "define-elaborate")), None)
    this_param, raw_body = _parse_elaborator_clause(elab_clause)
    elab = Elaborator(name, base_name, this_param, raw_body,
                      expander.compile_env(1),
                      collect_visible_specs(expander, name, base_name,
                                            mixin_names, specs),
                      expander.out.module_id)
    if raw_body is not None:
        elab.pending_expander = expander
    expander.out.elaborators[name] = elab
    expander.out.editor_defs[name] = EditorDefMeta(
        name, base_name, specs, expander.out.module_id)


def _parse_elaborator_clause(clause):
    if clause is None:
        return "this", None
    if len(clause.children) < 3 or clause.children[1].kind != SYMBOL:
        raise EvaluationError(
            "define-elaborator: (define-elaborator this body ...)", clause.span)
    return clause.children[1].value, list(clause.children[2:])


def _scan_state_specs(expander, clauses, expand):
    specs = []
    for clause in clauses:
        if clause.head_name() == "define-state":
            specs.append(parse_define_state(expander, clause, expand))
    return specs


def parse_define_state(expander, clause, expand=True, level="edit"):
    children = clause.children
    if len(children) < 3 or children[1].kind != SYMBOL:
        raise EvaluationError(
            "define-state: (define-state name default properties ...)",
            clause.span)
    name = children[1].value
    default = children[2]
    if expand:
        default = expander.expand_expr(default, level)
    spec = StateFieldSpec(name, default)
    i = 3
    while i < len(children):
        prop = children[i]
        if prop.kind != SYMBOL or not prop.value.startswith("#:"):
            raise BadProperty(f"define-state: expected a property keyword, "
                              f"got {prop.value!r}", prop.span)
        if i + 1 >= len(children):
            raise BadProperty(f"define-state: property {prop.value} needs a "
                              f"value", prop.span)
        arg = children[i + 1]
        key = prop.value
        if key in ("#:getter", "#:setter", "#:elaborator"):
            if arg.kind != "boolean":
                raise BadProperty(f"define-state: {key} expects #t or #f",
                                  arg.span)
            if key == "#:getter":
                spec.getter = arg.value
            elif key == "#:setter":
                spec.setter = arg.value
            else:
                spec.elaborator_visible = arg.value
        elif key == "#:persist":
            if arg.kind != SYMBOL or arg.value not in _PERSISTENCE:
                raise BadProperty(
                    "define-state: #:persist expects file, session or "
                    "ephemeral", arg.span)
            spec.persistence = arg.value
        elif key == "#:marshal":
            if arg.kind != LIST or len(arg.children) != 2:
                raise BadProperty(
                    "define-state: #:marshal expects (to-serializable "
                    "from-serializable)", arg.span)
            to_stx, from_stx = arg.children
            if expand:
                to_stx = expander.expand_expr(to_stx, level)
                from_stx = expander.expand_expr(from_stx, level)
            spec.marshal = (to_stx, from_stx)
        else:
            raise BadProperty(f"define-state: unknown property {key}", prop.span)
        i += 2
    return spec


def collect_visible_specs(expander, name, base_name, mixin_names, own_specs):
    """Elaborator-visible fields along the whole inheritance chain."""
    visible = [s for s in own_specs if s.elaborator_visible]
    seen = {name}
    queue = list(mixin_names)
    cur = base_name
    while cur and cur not in seen:
        seen.add(cur)
        meta = expander_meta(expander, cur)
        if meta is None:
            break
        visible.extend(s for s in meta.state_specs if s.elaborator_visible)
        queue.extend(getattr(meta, "mixin_names", ()))
        cur = meta.base_name
    for mname in queue:
        if mname in seen:
            continue
        seen.add(mname)
        meta = expander_meta(expander, mname)
        if meta is not None:
            visible.extend(s for s in meta.state_specs if s.elaborator_visible)
    return visible


def expander_meta(expander, name):
    meta = expander.out.editor_defs.get(name)
    if meta is not None:
        return meta
    prelude = expander.kernel.prelude_module
    if prelude is not None and prelude is not expander.out:
        return prelude.editor_defs.get(name)
    return None


def expand_interactive_form(expander, form):
    """Pass 2: full processing of one definition or mixin form."""
    head = form.head_name()
    name = form.children[1].value
    if head == "define-interactive-syntax-mixin":
        spec = parse_body(expander, name, form.children[2:],
                          allow_elaborator=False)
        mixin = MixinSpec(name, spec["state"], spec["methods"], spec["ctor"])
        define = slist([sym("define"), sym(name),
                        slist([sym("%mixin"), Syntax(DATUM, mixin)])], form.span)
        expander.out.edit_forms.append(define)
        expander.out.edit_provides.append(name)
        meta = expander.out.editor_defs[name]
        meta.state_specs = spec["state"]
        return

    base_syntax = expander.expand_expr(form.children[2], "edit")
    base_name, mixin_names = analyze_base(form.children[2])
    spec = parse_body(expander, name, form.children[3:], allow_elaborator=True)
    cls = ClassSpec(name, base_syntax, spec["state"], spec["methods"],
                    tuple(spec["ctor"]))
    define = slist([sym("define"), sym(name),
                    slist([sym("%class"), Syntax(DATUM, cls)])], form.span)
    expander.out.edit_forms.append(define)
    expander.out.edit_provides.append(name)

    elab = expander.out.elaborators[name]
    this_param, raw_body = spec["elaborator"]
    if raw_body is not None:
        elab.this_param = this_param
        elab.body = [expander.expand_expr(b, 1) for b in raw_body]
        elab.pending_expander = None
    else:
        elab.body = None
    elab.visible_specs = collect_visible_specs(
        expander, name, base_name, mixin_names, spec["state"])
    meta = expander.out.editor_defs[name]
    meta.state_specs = spec["state"]
    meta.base_name = base_name
    meta.mixin_names = mixin_names


def parse_body(expander, name, clauses, allow_elaborator):
    state, methods, ctor = [], [], []
    elaborator = ("this", None)
    seen_fields = set()
    for clause in clauses:
        clause = expander.partial_expand(clause)
        head = clause.head_name()
        if head == "define-state":
            spec = parse_define_state(expander, clause)
            if spec.name in seen_fields:
                raise DuplicateState(
                    f"state field '{spec.name}' defined twice in {name}",
                    clause.span)
            seen_fields.add(spec.name)
            state.append(spec)
            continue
        if head in _METHOD_KINDS:
            methods.append(parse_method(expander, clause))
            continue
        if head in ("define-elaborator", "define-elaborate"):
            if not allow_elaborator:
                raise BadProperty(
                    "a mixin cannot define an elaborator", clause.span)
            elaborator = _parse_elaborator_clause(clause)
            continue
        ctor.append(expander.expand_expr(clause, "edit"))
    return {"state": state, "methods": methods, "ctor": ctor,
            "elaborator": elaborator}


def parse_method(expander, clause):
    kind = _METHOD_KINDS[clause.head_name()]
    if (len(clause.children) < 3 or clause.children[1].kind != LIST
            or not clause.children[1].children
            or clause.children[1].children[0].kind != SYMBOL):
        raise EvaluationError(
            f"{clause.head_name()}: ({clause.head_name()} (name params ...) "
            f"body ...)", clause.span)
    header = clause.children[1]
    mname = header.children[0].value
    params = []
    for p in header.children[1:]:
        if p.kind != SYMBOL:
            raise EvaluationError("method parameters must be identifiers",
                                  p.span)
        params.append(p.value)
    body = tuple(expander.expand_expr(b, "edit") for b in clause.children[2:])
    return MethodSpec(mname, kind, params, body)
