"""Edit-time object model: definitions, mixins and live instances.

This is a deliberately small dispatch system: named methods, single
inheritance, define/public introduces, define/override shadows, and
define/augment composes so the base behavior runs first.  State fields are
plain variables of the instance frame so method bodies can read and set!
them directly.
"""

from .errors import DuplicateState, EvaluationError
from .evaluator import Env, eval_body, eval_syntax, special
from .syntax import DATUM
from .values import VOID


class StateFieldSpec:
    __slots__ = ("name", "default_syntax", "persistence", "getter", "setter",
                 "elaborator_visible", "marshal")

    def __init__(self, name, default_syntax, persistence="file", getter=False,
                 setter=False, elaborator_visible=False, marshal=None):
        self.name = name
        self.default_syntax = default_syntax
        self.persistence = persistence
        self.getter = getter
        self.setter = setter
        self.elaborator_visible = elaborator_visible
        self.marshal = marshal  # (to_syntax, from_syntax) or None

    def describe(self):
        return {"name": self.name, "persistence": self.persistence,
                "getter": self.getter, "setter": self.setter,
                "elaborator": self.elaborator_visible}


class MethodSpec:
    __slots__ = ("name", "kind", "params", "body")

    def __init__(self, name, kind, params, body):
        self.name = name
        self.kind = kind  # public | override | augment
        self.params = params
        self.body = body


def _clause_syntax(state, methods, ctor):
    from .syntax import satom, slist, sym
    out = []
    for spec in state:
        clause = [sym("define-state"), sym(spec.name)]
        clause.append(spec.default_syntax if spec.default_syntax is not None
                      else slist([sym("void")]))
        if spec.persistence != "file":
            clause += [sym("#:persist"), sym(spec.persistence)]
        if spec.getter:
            clause += [sym("#:getter"), satom(True)]
        if spec.setter:
            clause += [sym("#:setter"), satom(True)]
        if spec.elaborator_visible:
            clause += [sym("#:elaborator"), satom(True)]
        out.append(slist(clause))
    for m in methods:
        header = slist([sym(m.name)] + [sym(p) for p in m.params])
        out.append(slist([sym(f"define/{m.kind}"), header] + list(m.body)))
    out.extend(ctor)
    return out


class ClassSpec:
    """Expansion-time description of a definition body."""

    __slots__ = ("name", "base_syntax", "state", "methods", "ctor")

    def __init__(self, name, base_syntax, state, methods, ctor):
        self.name = name
        self.base_syntax = base_syntax
        self.state = state
        self.methods = methods
        self.ctor = ctor

    def render_syntax(self):
        from .syntax import slist, sym
        return slist([sym("class"), self.base_syntax]
                     + _clause_syntax(self.state, self.methods, self.ctor))


class MixinSpec:
    __slots__ = ("name", "state", "methods", "ctor")

    def __init__(self, name, state, methods, ctor):
        self.name = name
        self.state = state
        self.methods = methods
        self.ctor = ctor

    def render_syntax(self):
        from .syntax import slist, sym
        return slist([sym("mixin")]
                     + _clause_syntax(self.state, self.methods, self.ctor))


class EditorDefinition:
    """A runtime editor class: spec contents bound to their defining scope."""

    __slots__ = ("name", "base", "state", "methods", "ctor", "env")

    def __init__(self, name, base, state, methods, ctor, env):
        self.name = name
        self.base = base
        self.state = state
        self.methods = methods
        self.ctor = ctor
        self.env = env
        self._check_duplicates()

    def __repr__(self):
        return f"#<editor-definition:{self.name}>"

    def chain(self):
        """Inheritance chain, root first."""
        out = []
        d = self
        while d is not None:
            out.append(d)
            d = d.base
        out.reverse()
        return out

    def _check_duplicates(self):
        seen = {}
        for cls in self.chain():
            for spec in cls.state:
                if spec.name in seen:
                    raise DuplicateState(
                        f"state field '{spec.name}' defined by both "
                        f"{seen[spec.name]} and {cls.name}")
                seen[spec.name] = cls.name

    def all_state_specs(self):
        out = []
        for cls in self.chain():
            for spec in cls.state:
                out.append((spec, cls))
        return out

    def find_spec(self, name):
        for spec, cls in self.all_state_specs():
            if spec.name == name:
                return spec, cls
        return None, None

    def method_pipeline(self, name):
        pipeline = []
        for cls in self.chain():
            for m in cls.methods:
                if m.name != name:
                    continue
                if m.kind in ("public", "override"):
                    pipeline = [(m, cls)]
                else:  # augment
                    pipeline.append((m, cls))
        return pipeline

    def has_method(self, name):
        return bool(self.method_pipeline(name))


class Mixin:
    __slots__ = ("spec", "env")

    def __init__(self, spec, env):
        self.spec = spec
        self.env = env

    def __repr__(self):
        return f"#<editor-mixin:{self.spec.name}>"

    def apply(self, ctx, base):
        if not isinstance(base, EditorDefinition):
            raise EvaluationError(
                f"{self.spec.name}: expected an editor definition, got {base!r}")
        return EditorDefinition(f"{self.spec.name}:{base.name}", base,
                                self.spec.state, self.spec.methods,
                                self.spec.ctor, self.env)


class EditorInstance:
    __slots__ = ("definition", "fields", "children", "parent", "dirty",
                 "instance_id", "session", "source_binding")

    def __init__(self, definition):
        self.definition = definition
        self.fields = {"this": self}
        self.children = []
        self.parent = None
        self.dirty = False
        self.instance_id = None
        self.session = None
        self.source_binding = None

    def __repr__(self):
        return f"#<editor:{self.definition.name}>"

    def bridge_env(self, cls):
        """Scope seen by cls's code: instance frame over the class's env."""
        return Env(cls.env, self.fields)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def build_definition(ctx, spec, env):
    base = eval_syntax(spec.base_syntax, env, ctx)
    if not isinstance(base, EditorDefinition):
        raise EvaluationError(
            f"{spec.name}: base of an editor definition must be an editor "
            f"definition, got {base!r}", spec.base_syntax.span)
    return EditorDefinition(spec.name, base, spec.state, spec.methods,
                            spec.ctor, env)


@special("%class")
def _class_form(stx, env, ctx, tail):
    spec_node = stx.children[1]
    if spec_node.kind != DATUM or not isinstance(spec_node.value, ClassSpec):
        raise EvaluationError("%class: malformed", stx.span)
    return build_definition(ctx, spec_node.value, env)


@special("%mixin")
def _mixin_form(stx, env, ctx, tail):
    spec_node = stx.children[1]
    if spec_node.kind != DATUM or not isinstance(spec_node.value, MixinSpec):
        raise EvaluationError("%mixin: malformed", stx.span)
    return Mixin(spec_node.value, env)


def root_definition(env):
    """The kernel-provided root class every editor ultimately extends."""
    from .syntax import satom, slist, sym
    default_size = slist([sym("list"), satom(24), satom(16)])
    return EditorDefinition("base$", None, [], [
        MethodSpec("draw", "public", ["dc"], ()),
        MethodSpec("on-event", "public", ["event"], ()),
        MethodSpec("preferred-size", "public", [], (default_size,)),
    ], (), env)


def instantiate_definition(ctx, definition, inits):
    from .values import Builtin
    inst = EditorInstance(definition)
    if ctx.session is not None:
        inst.session = ctx.session
    # methods are callable directly from class-body code
    for cls in definition.chain():
        for m in cls.methods:
            def bound(call_ctx, *args, _name=m.name, _inst=inst):
                return send_instance(call_ctx, _inst, _name, list(args))
            inst.fields.setdefault(m.name,
                                   Builtin(m.name, bound, wants_ctx=True))
    specs = definition.all_state_specs()
    known = {spec.name for spec, _ in specs}
    init_map = {}
    for name, value in inits:
        if name == "parent":
            if not isinstance(value, EditorInstance):
                raise EvaluationError("new: parent must be an editor instance")
            inst.parent = value
            value.children.append(inst)
            continue
        if name not in known:
            raise EvaluationError(
                f"new: {definition.name} has no field '{name}'")
        init_map[name] = value
    for spec, cls in specs:
        if spec.name in init_map:
            inst.fields[spec.name] = init_map[spec.name]
        elif spec.default_syntax is not None:
            inst.fields[spec.name] = eval_syntax(spec.default_syntax,
                                                 inst.bridge_env(cls), ctx)
        else:
            inst.fields[spec.name] = VOID
    run_constructors(ctx, inst)
    return inst


def run_constructors(ctx, inst):
    chain = inst.definition.chain()
    frame = {"inst": inst, "chain": chain, "next": len(chain) - 2}
    ctx.ctor_stack.append(frame)
    try:
        _run_ctor_of(ctx, inst, chain[-1])
        while frame["next"] >= 0:
            cls = chain[frame["next"]]
            frame["next"] -= 1
            _run_ctor_of(ctx, inst, cls)
    finally:
        ctx.ctor_stack.pop()


def _run_ctor_of(ctx, inst, cls):
    if cls.ctor:
        eval_body(list(cls.ctor), inst.bridge_env(cls), ctx)


def super_new(ctx, span):
    if not ctx.ctor_stack:
        raise EvaluationError("super-new: only allowed inside a constructor",
                              span)
    frame = ctx.ctor_stack[-1]
    i = frame["next"]
    if i < 0:
        return VOID
    frame["next"] = i - 1
    _run_ctor_of(ctx, frame["inst"], frame["chain"][i])
    return VOID


def send_instance(ctx, inst, method, args, span=None):
    definition = inst.definition
    # generated accessors
    if method.startswith("get-"):
        spec, _ = definition.find_spec(method[4:])
        if spec is not None and spec.getter:
            return inst.fields[spec.name]
    if method.startswith("set-") and method.endswith("!"):
        spec, _ = definition.find_spec(method[4:-1])
        if spec is not None and spec.setter:
            if len(args) != 1:
                raise EvaluationError(f"{method}: one argument expected", span)
            inst.fields[spec.name] = args[0]
            if spec.persistence == "file":
                inst.dirty = True
            if ctx.session is not None:
                ctx.session.note_change(inst, spec.name)
            return VOID
    pipeline = definition.method_pipeline(method)
    if not pipeline:
        raise EvaluationError(
            f"send: {definition.name} has no method {method}", span)
    result = VOID
    for mspec, cls in pipeline:
        if len(args) != len(mspec.params):
            raise EvaluationError(
                f"{definition.name}.{method}: expected {len(mspec.params)} "
                f"arguments, got {len(args)}", span)
        env = Env(inst.bridge_env(cls), dict(zip(mspec.params, args)))
        result = eval_body(list(mspec.body), env, ctx)
    return result
