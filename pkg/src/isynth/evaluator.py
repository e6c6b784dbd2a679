"""Tree-walking evaluator for the host language.

The evaluator only ever sees fully expanded code: special forms here are the
core forms the expander targets.  Evaluation is phase-aware (run, compile
levels, edit) so that effects can be logged per phase and budgets enforced
per call.  Proper tail calls are supported for closure applications so a
runaway loop is stopped by the step/time budget, not by the Python stack.
"""

import time

from .errors import EvaluationError, PhaseViolation, SandboxViolation
from .syntax import (BOOLEAN, DATUM, EDITOR, LIST, NUMBER, STRING, SYMBOL,
                     datum_to_syntax, syntax_to_datum)
from .values import (VOID, Builtin, Closure, NativeObject, Record,
                     RecordConstructor, RecordType, Symbol, is_true)

_TIME_CHECK_MASK = 0xFF


def phase_name(phase):
    if isinstance(phase, tuple):
        level = phase[1]
        return "compile" if level == 1 else f"compile-{level}"
    return phase


class Env:
    __slots__ = ("vars", "parent")

    def __init__(self, parent=None, vars=None):
        self.parent = parent
        self.vars = vars if vars is not None else {}

    def lookup(self, key):
        env = self
        while env is not None:
            if key in env.vars:
                return env.vars[key]
            env = env.parent
        raise KeyError(key)

    def has(self, key):
        env = self
        while env is not None:
            if key in env.vars:
                return True
            env = env.parent
        return False

    def define(self, key, value):
        self.vars[key] = value

    def set(self, key, value):
        env = self
        while env is not None:
            if key in env.vars:
                env.vars[key] = value
                return
            env = env.parent
        raise KeyError(key)


class Budget:
    """Resource limits for one sandboxed call."""

    __slots__ = ("wall_ms", "step_limit", "alloc_limit")

    def __init__(self, wall_ms=100, step_limit=10_000_000, alloc_limit=64 * 1024 * 1024):
        if wall_ms <= 0 or step_limit <= 0 or alloc_limit <= 0:
            raise ValueError("budget limits must be positive")
        self.wall_ms = wall_ms
        self.step_limit = step_limit
        self.alloc_limit = alloc_limit


class Capabilities:
    __slots__ = ("fs_read_root", "fs_write", "network")

    def __init__(self, fs_read_root=None, fs_write=False, network=False):
        self.fs_read_root = fs_read_root
        self.fs_write = fs_write
        self.network = network


class EvalContext:
    __slots__ = ("kernel", "phase", "budget", "caps", "steps", "allocs",
                 "deadline", "ctor_stack", "session", "phase_fallback",
                 "expander")

    def __init__(self, kernel, phase="run", budget=None, caps=None,
                 session=None, phase_fallback=None):
        self.kernel = kernel
        self.phase = phase
        self.budget = budget
        self.caps = caps or Capabilities()
        self.steps = 0
        self.allocs = 0
        self.deadline = (time.monotonic() + budget.wall_ms / 1000.0) if budget else None
        self.ctor_stack = []
        self.session = session
        self.phase_fallback = phase_fallback
        self.expander = None

    def with_phase(self, phase, phase_fallback=None):
        ctx = EvalContext(self.kernel, phase, self.budget, self.caps,
                          self.session, phase_fallback)
        ctx.deadline = self.deadline
        return ctx

    def tick(self):
        self.steps += 1
        if self.budget is not None:
            if self.steps > self.budget.step_limit:
                raise SandboxViolation("evaluation step limit exceeded")
            if (self.steps & _TIME_CHECK_MASK) == 0 and time.monotonic() > self.deadline:
                raise SandboxViolation("wall-clock budget exceeded")

    def charge(self, n):
        self.allocs += n
        if self.budget is not None and self.allocs > self.budget.alloc_limit:
            raise SandboxViolation("allocation budget exceeded")


class _TailCall:
    __slots__ = ("fn", "args")

    def __init__(self, fn, args):
        self.fn = fn
        self.args = args


def key_for(stx):
    if stx.scopes:
        return stx.value + "\x00" + ",".join(str(m) for m in sorted(stx.scopes))
    return stx.value


def lookup_symbol(stx, env, ctx):
    key = key_for(stx)
    try:
        return env.lookup(key)
    except KeyError:
        pass
    if stx.scopes:
        try:
            return env.lookup(stx.value)
        except KeyError:
            pass
    if ctx.phase_fallback is not None and ctx.phase_fallback.has(stx.value):
        raise PhaseViolation(
            f"run-phase binding '{stx.value}' referenced at "
            f"{phase_name(ctx.phase)} phase", stx.span)
    raise EvaluationError(f"unbound variable: {stx.value}", stx.span)


SPECIAL_FORMS = {}


def special(name):
    def reg(fn):
        SPECIAL_FORMS[name] = fn
        return fn
    return reg


def eval_syntax(stx, env, ctx, tail=False):
    ctx.tick()
    kind = stx.kind
    if kind == SYMBOL:
        return lookup_symbol(stx, env, ctx)
    if kind in (NUMBER, STRING, BOOLEAN):
        return stx.value
    if kind == DATUM:
        return stx.value
    if kind == EDITOR:
        raise EvaluationError("editor literal reached evaluation unexpanded",
                              stx.span)
    # list form
    if not stx.children:
        raise EvaluationError("cannot evaluate empty form ()", stx.span)
    head = stx.children[0]
    if head.kind == SYMBOL and not env.has(key_for(head)):
        form = SPECIAL_FORMS.get(head.value)
        if form is not None:
            result = form(stx, env, ctx, tail)
            if isinstance(result, _TailCall) and not tail:
                result = apply_function(result.fn, result.args, ctx)
            return result
    fn = eval_syntax(head, env, ctx)
    args = [eval_syntax(a, env, ctx) for a in stx.children[1:]]
    if tail and isinstance(fn, Closure):
        return _TailCall(fn, args)
    try:
        return apply_function(fn, args, ctx)
    except (EvaluationError, SandboxViolation) as e:
        if e.span is None:
            e.span = stx.span
        raise


def eval_body(forms, env, ctx, tail=False):
    """Evaluate a body sequence; the last form is in tail position."""
    result = VOID
    for i, f in enumerate(forms):
        last = i == len(forms) - 1
        result = eval_syntax(f, env, ctx, tail and last)
    return result


def apply_function(fn, args, ctx):
    while True:
        ctx.tick()
        if isinstance(fn, Closure):
            if len(args) != len(fn.params):
                raise EvaluationError(
                    f"{fn.name}: expected {len(fn.params)} arguments, got {len(args)}")
            frame = Env(fn.env, dict(zip(fn.params, args)))
            result = eval_body(fn.body, frame, ctx, tail=True)
            if isinstance(result, _TailCall):
                fn, args = result.fn, result.args
                continue
            return result
        if isinstance(fn, Builtin):
            return fn.fn(ctx, *args) if fn.wants_ctx else fn.fn(*args)
        if isinstance(fn, RecordConstructor):
            if len(args) != len(fn.rtype.fields):
                raise EvaluationError(
                    f"{fn.rtype.name}: expected {len(fn.rtype.fields)} fields, "
                    f"got {len(args)}")
            ctx.charge(len(args) + 1)
            return Record(fn.rtype, args)
        from .objects import Mixin
        if isinstance(fn, Mixin):
            return fn.apply(ctx, *args)
        raise EvaluationError(f"not a procedure: {fn!r}")


def eval_value(result, ctx):
    if isinstance(result, _TailCall):
        return apply_function(result.fn, result.args, ctx)
    return result


# -- core special forms -----------------------------------------------------


@special("quote")
def _quote(stx, env, ctx, tail):
    if len(stx.children) != 2:
        raise EvaluationError("quote: one subform expected", stx.span)
    return syntax_to_datum(stx.children[1])


@special("if")
def _if(stx, env, ctx, tail):
    n = len(stx.children)
    if n not in (3, 4):
        raise EvaluationError("if: bad shape", stx.span)
    test = eval_syntax(stx.children[1], env, ctx)
    if is_true(test):
        return eval_syntax(stx.children[2], env, ctx, tail)
    if n == 4:
        return eval_syntax(stx.children[3], env, ctx, tail)
    return VOID


@special("begin")
def _begin(stx, env, ctx, tail):
    if len(stx.children) == 1:
        return VOID
    result = VOID
    for i, f in enumerate(stx.children[1:], 1):
        last = i == len(stx.children) - 1
        result = eval_syntax(f, env, ctx, tail and last)
        if last:
            return result
    return result


@special("define")
def _define(stx, env, ctx, tail):
    if len(stx.children) < 3:
        raise EvaluationError("define: bad shape", stx.span)
    target = stx.children[1]
    if target.kind == SYMBOL:
        if len(stx.children) != 3:
            raise EvaluationError("define: one value expression expected", stx.span)
        value = eval_syntax(stx.children[2], env, ctx)
        if isinstance(value, Closure) and value.name == "lambda":
            value.name = target.value
        env.define(key_for(target), value)
        return VOID
    if target.kind == LIST and target.children and target.children[0].kind == SYMBOL:
        name = target.children[0]
        params = parse_params(target.children[1:])
        fn = Closure(params, None, stx.children[2:], env, name.value)
        env.define(key_for(name), fn)
        return VOID
    raise EvaluationError("define: bad target", stx.span)


def parse_params(children):
    params = []
    for p in children:
        if p.kind != SYMBOL:
            raise EvaluationError("bad parameter", p.span)
        params.append(key_for(p))
    return params


@special("lambda")
def _lambda(stx, env, ctx, tail):
    if len(stx.children) < 3 or stx.children[1].kind != LIST:
        raise EvaluationError("lambda: bad shape", stx.span)
    params = parse_params(stx.children[1].children)
    return Closure(params, None, stx.children[2:], env)


@special("set!")
def _set(stx, env, ctx, tail):
    if len(stx.children) != 3 or stx.children[1].kind != SYMBOL:
        raise EvaluationError("set!: bad shape", stx.span)
    target = stx.children[1]
    value = eval_syntax(stx.children[2], env, ctx)
    key = key_for(target)
    try:
        env.set(key, value)
    except KeyError:
        try:
            env.set(target.value, value)
        except KeyError:
            raise EvaluationError(f"set!: unbound variable: {target.value}",
                                  stx.span) from None
    return VOID


@special("let")
def _let(stx, env, ctx, tail):
    children = stx.children
    if len(children) >= 3 and children[1].kind == SYMBOL:
        # named let
        name, bindings, body = children[1], children[2], children[3:]
        names, exprs = parse_bindings(bindings)
        args = [eval_syntax(e, env, ctx) for e in exprs]
        loop_env = Env(env)
        fn = Closure(names, None, body, loop_env, name.value)
        loop_env.define(key_for(name), fn)
        if tail:
            return _TailCall(fn, args)
        return apply_function(fn, args, ctx)
    bindings, body = children[1], children[2:]
    names, exprs = parse_bindings(bindings)
    frame = Env(env, {n: eval_syntax(e, env, ctx) for n, e in zip(names, exprs)})
    return eval_body(body, frame, ctx, tail)


@special("let*")
def _let_star(stx, env, ctx, tail):
    bindings, body = stx.children[1], stx.children[2:]
    names, exprs = parse_bindings(bindings)
    frame = Env(env)
    for n, e in zip(names, exprs):
        frame.define(n, eval_syntax(e, frame, ctx))
    return eval_body(body, frame, ctx, tail)


def parse_bindings(stx):
    if stx.kind != LIST:
        raise EvaluationError("bad binding list", stx.span)
    names, exprs = [], []
    for b in stx.children:
        if b.kind != LIST or len(b.children) != 2 or b.children[0].kind != SYMBOL:
            raise EvaluationError("bad binding", b.span)
        names.append(key_for(b.children[0]))
        exprs.append(b.children[1])
    return names, exprs


@special("and")
def _and(stx, env, ctx, tail):
    if len(stx.children) == 1:
        return True
    result = True
    for i, f in enumerate(stx.children[1:], 1):
        last = i == len(stx.children) - 1
        result = eval_syntax(f, env, ctx, tail and last)
        if not last and not is_true(result):
            return result
    return result


@special("or")
def _or(stx, env, ctx, tail):
    if len(stx.children) == 1:
        return False
    result = False
    for i, f in enumerate(stx.children[1:], 1):
        last = i == len(stx.children) - 1
        result = eval_syntax(f, env, ctx, tail and last)
        if not last and is_true(result):
            return result
    return result


@special("struct")
def _struct(stx, env, ctx, tail):
    if (len(stx.children) != 3 or stx.children[1].kind != SYMBOL
            or stx.children[2].kind != LIST):
        raise EvaluationError("struct: bad shape", stx.span)
    name = stx.children[1].value
    fields = [f.value for f in stx.children[2].children if f.kind == SYMBOL]
    if len(fields) != len(stx.children[2].children):
        raise EvaluationError("struct: field names must be symbols", stx.span)
    rtype = RecordType(name, fields)
    ctor = RecordConstructor(rtype)
    env.define(key_for(stx.children[1]), ctor)

    def predicate(v, rtype=rtype):
        return isinstance(v, Record) and v.rtype is rtype

    env.define(name + "?", Builtin(name + "?", predicate))
    for i, f in enumerate(fields):
        def accessor(v, i=i, name=name, f=f, rtype=rtype):
            if not (isinstance(v, Record) and v.rtype is rtype):
                raise EvaluationError(f"{name}-{f}: not a {name}: {v!r}")
            return v.values[i]
        env.define(f"{name}-{f}", Builtin(f"{name}-{f}", accessor))
    return VOID


@special("quasiquote")
def _quasiquote(stx, env, ctx, tail):
    if len(stx.children) != 2:
        raise EvaluationError("quasiquote: one subform expected", stx.span)
    return qq_value(stx.children[1], env, ctx, 1)


def qq_value(stx, env, ctx, depth):
    if stx.kind == LIST and stx.children:
        head = stx.children[0]
        if head.is_symbol("unquote") and len(stx.children) == 2:
            if depth == 1:
                return eval_syntax(stx.children[1], env, ctx)
            return [Symbol("unquote"), qq_value(stx.children[1], env, ctx, depth - 1)]
        if head.is_symbol("quasiquote") and len(stx.children) == 2:
            return [Symbol("quasiquote"),
                    qq_value(stx.children[1], env, ctx, depth + 1)]
        out = []
        for c in stx.children:
            if (c.kind == LIST and c.children
                    and c.children[0].is_symbol("unquote-splicing")
                    and len(c.children) == 2 and depth == 1):
                spliced = eval_syntax(c.children[1], env, ctx)
                if not isinstance(spliced, list):
                    raise EvaluationError("unquote-splicing: expected a list",
                                          c.span)
                out.extend(spliced)
            else:
                out.append(qq_value(c, env, ctx, depth))
        return out
    return syntax_to_datum(stx)


@special("syntax")
def _syntax(stx, env, ctx, tail):
    if len(stx.children) != 2:
        raise EvaluationError("syntax: one subform expected", stx.span)
    return stx.children[1]


@special("quasisyntax")
def _quasisyntax(stx, env, ctx, tail):
    if len(stx.children) != 2:
        raise EvaluationError("quasisyntax: one subform expected", stx.span)
    return qs_fill(stx.children[1], env, ctx, 1)


def qs_fill(stx, env, ctx, depth):
    if stx.kind != LIST or not stx.children:
        return stx
    head = stx.children[0]
    if head.is_symbol("unsyntax") and len(stx.children) == 2:
        if depth == 1:
            value = eval_syntax(stx.children[1], env, ctx)
            return datum_to_syntax(value, stx.span)
        return stx.with_children((head, qs_fill(stx.children[1], env, ctx, depth - 1)))
    if head.is_symbol("quasisyntax") and len(stx.children) == 2:
        return stx.with_children((head, qs_fill(stx.children[1], env, ctx, depth + 1)))
    out = []
    for c in stx.children:
        if (c.kind == LIST and c.children
                and c.children[0].is_symbol("unsyntax-splicing")
                and len(c.children) == 2 and depth == 1):
            spliced = eval_syntax(c.children[1], env, ctx)
            if not isinstance(spliced, list):
                raise EvaluationError("unsyntax-splicing: expected a list", c.span)
            out.extend(datum_to_syntax(v, c.span) for v in spliced)
        else:
            out.append(qs_fill(c, env, ctx, depth))
    return stx.with_children(tuple(out))


@special("new")
def _new(stx, env, ctx, tail):
    from .objects import EditorDefinition, instantiate_definition
    if len(stx.children) < 2:
        raise EvaluationError("new: class expression expected", stx.span)
    cls = eval_syntax(stx.children[1], env, ctx)
    if not isinstance(cls, EditorDefinition):
        raise EvaluationError(f"new: not an editor definition: {cls!r}", stx.span)
    inits = []
    for init in stx.children[2:]:
        if (init.kind != LIST or len(init.children) != 2
                or init.children[0].kind != SYMBOL):
            raise EvaluationError("new: bad initialization argument", init.span)
        inits.append((init.children[0].value,
                      eval_syntax(init.children[1], env, ctx)))
    return instantiate_definition(ctx, cls, inits)


@special("send")
def _send(stx, env, ctx, tail):
    from .objects import EditorInstance, send_instance
    if len(stx.children) < 3 or stx.children[2].kind != SYMBOL:
        raise EvaluationError("send: (send obj method arg ...)", stx.span)
    obj = eval_syntax(stx.children[1], env, ctx)
    method = stx.children[2].value
    args = [eval_syntax(a, env, ctx) for a in stx.children[3:]]
    if isinstance(obj, EditorInstance):
        return send_instance(ctx, obj, method, args, stx.span)
    if isinstance(obj, NativeObject):
        fn = obj.methods.get(method)
        if fn is None:
            raise EvaluationError(f"send: {obj.kind} has no method {method}",
                                  stx.span)
        return fn(ctx, *args)
    raise EvaluationError(f"send: not an object: {obj!r}", stx.span)


@special("super-new")
def _super_new(stx, env, ctx, tail):
    from .objects import super_new
    return super_new(ctx, stx.span)
