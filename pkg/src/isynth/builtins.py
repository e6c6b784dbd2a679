"""Builtin procedures of the host language.

One shared table serves every phase; a handful of entries behave differently
per phase (effect logging is tagged, capability probes consult the active
context).  Builtins that allocate charge the context so sandbox budgets see
them.
"""

from .editor_form import EditorValue
from .errors import EvaluationError, SandboxViolation, SyntaxDiagnostic
from .evaluator import Env, apply_function, phase_name
from .syntax import Syntax, datum_to_syntax, gensym, syntax_to_datum
from .values import (VOID, Box, Builtin, Closure, MultipleValues,
                     Record, RecordConstructor, Symbol, check_arity,
                     display_str, equal_values, is_true, write_str)

REGISTRY = {}


def builtin(name, wants_ctx=False):
    def reg(fn):
        REGISTRY[name] = Builtin(name, fn, wants_ctx)
        return fn
    return reg


def alias(name, target):
    REGISTRY[name] = Builtin(name, REGISTRY[target].fn, REGISTRY[target].wants_ctx)


def base_environment():
    return Env(None, dict(REGISTRY))


def _num(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise EvaluationError(f"{name}: expected a number, got {write_str(v)}")
    return v


def _string(name, v):
    if not isinstance(v, str):
        raise EvaluationError(f"{name}: expected a string, got {write_str(v)}")
    return v


def _list(name, v):
    if not isinstance(v, list):
        raise EvaluationError(f"{name}: expected a list, got {write_str(v)}")
    return v


def _hash(name, v):
    if not isinstance(v, dict):
        raise EvaluationError(f"{name}: expected a hash, got {write_str(v)}")
    return v


# -- numbers -----------------------------------------------------------------


@builtin("+")
def _add(*args):
    return sum(_num("+", a) for a in args)


@builtin("-")
def _sub(*args):
    check_arity("-", args, 1, -1)
    if len(args) == 1:
        return -_num("-", args[0])
    out = _num("-", args[0])
    for a in args[1:]:
        out -= _num("-", a)
    return out


@builtin("*")
def _mul(*args):
    out = 1
    for a in args:
        out *= _num("*", a)
    return out


@builtin("/")
def _div(*args):
    check_arity("/", args, 2, -1)
    out = _num("/", args[0])
    for a in args[1:]:
        d = _num("/", a)
        if d == 0:
            raise EvaluationError("/: division by zero")
        if isinstance(out, int) and isinstance(d, int) and out % d == 0:
            out //= d
        else:
            out /= d
    return out


@builtin("quotient")
def _quotient(a, b):
    if b == 0:
        raise EvaluationError("quotient: division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


@builtin("remainder")
def _remainder(a, b):
    if b == 0:
        raise EvaluationError("remainder: division by zero")
    return a - b * REGISTRY["quotient"].fn(a, b)


@builtin("modulo")
def _modulo(a, b):
    if b == 0:
        raise EvaluationError("modulo: division by zero")
    return a % b


for _name, _op in [("=", lambda a, b: a == b), ("<", lambda a, b: a < b),
                   ("<=", lambda a, b: a <= b), (">", lambda a, b: a > b),
                   (">=", lambda a, b: a >= b)]:
    def _cmp(*args, _op=_op, _name=_name):
        check_arity(_name, args, 2, -1)
        vals = [_num(_name, a) for a in args]
        return all(_op(x, y) for x, y in zip(vals, vals[1:]))
    REGISTRY[_name] = Builtin(_name, _cmp)


@builtin("min")
def _min(*args):
    check_arity("min", args, 1, -1)
    return min(_num("min", a) for a in args)


@builtin("max")
def _max(*args):
    check_arity("max", args, 1, -1)
    return max(_num("max", a) for a in args)


@builtin("abs")
def _abs(a):
    return abs(_num("abs", a))


@builtin("add1")
def _add1(a):
    return _num("add1", a) + 1


@builtin("sub1")
def _sub1(a):
    return _num("sub1", a) - 1


@builtin("zero?")
def _zerop(a):
    return _num("zero?", a) == 0


@builtin("even?")
def _evenp(a):
    return _num("even?", a) % 2 == 0


@builtin("odd?")
def _oddp(a):
    return _num("odd?", a) % 2 == 1


# -- predicates and equality --------------------------------------------------


@builtin("not")
def _not(v):
    return v is False


@builtin("eq?")
def _eqp(a, b):
    if isinstance(a, (int, float)) and not isinstance(a, bool):
        return (isinstance(b, (int, float)) and not isinstance(b, bool)
                and a == b and type(a) is type(b))
    return a is b


alias("eqv?", "eq?")


@builtin("equal?")
def _equalp(a, b):
    return equal_values(a, b)


@builtin("boolean?")
def _booleanp(v):
    return isinstance(v, bool)


@builtin("number?")
def _numberp(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@builtin("integer?")
def _integerp(v):
    return isinstance(v, int) and not isinstance(v, bool)


@builtin("real?")
def _realp(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@builtin("string?")
def _stringp(v):
    return isinstance(v, str)


@builtin("symbol?")
def _symbolp(v):
    return isinstance(v, Symbol)


@builtin("list?")
def _listp(v):
    return isinstance(v, list)


@builtin("hash?")
def _hashp(v):
    return isinstance(v, dict)


@builtin("void?")
def _voidp(v):
    return v is VOID


@builtin("box?")
def _boxp(v):
    return isinstance(v, Box)


@builtin("procedure?")
def _procedurep(v):
    from .objects import Mixin
    return isinstance(v, (Closure, Builtin, RecordConstructor, Mixin))


# -- lists --------------------------------------------------------------------


@builtin("list", wants_ctx=True)
def _list_ctor(ctx, *args):
    ctx.charge(len(args) + 1)
    return list(args)


@builtin("cons", wants_ctx=True)
def _cons(ctx, x, lst):
    ctx.charge(len(_list("cons", lst)) + 1)
    return [x] + lst


@builtin("first")
def _first(lst):
    lst = _list("first", lst)
    if not lst:
        raise EvaluationError("first: empty list")
    return lst[0]


@builtin("rest")
def _rest(lst):
    lst = _list("rest", lst)
    if not lst:
        raise EvaluationError("rest: empty list")
    return lst[1:]


alias("car", "first")
alias("cdr", "rest")


@builtin("second")
def _second(lst):
    lst = _list("second", lst)
    if len(lst) < 2:
        raise EvaluationError("second: list too short")
    return lst[1]


@builtin("third")
def _third(lst):
    lst = _list("third", lst)
    if len(lst) < 3:
        raise EvaluationError("third: list too short")
    return lst[2]


@builtin("last")
def _last(lst):
    lst = _list("last", lst)
    if not lst:
        raise EvaluationError("last: empty list")
    return lst[-1]


@builtin("null?")
def _nullp(v):
    return isinstance(v, list) and not v


alias("empty?", "null?")


@builtin("length")
def _length(lst):
    return len(_list("length", lst))


@builtin("append", wants_ctx=True)
def _append(ctx, *args):
    out = []
    for a in args:
        out.extend(_list("append", a))
    ctx.charge(len(out) + 1)
    return out


@builtin("reverse", wants_ctx=True)
def _reverse(ctx, lst):
    lst = _list("reverse", lst)
    ctx.charge(len(lst) + 1)
    return list(reversed(lst))


@builtin("list-ref")
def _list_ref(lst, i):
    lst = _list("list-ref", lst)
    if not (0 <= i < len(lst)):
        raise EvaluationError(f"list-ref: index {i} out of range")
    return lst[i]


@builtin("member")
def _member(x, lst):
    lst = _list("member", lst)
    for i, v in enumerate(lst):
        if equal_values(x, v):
            return lst[i:]
    return False


@builtin("assoc")
def _assoc(k, lst):
    for entry in _list("assoc", lst):
        if isinstance(entry, list) and entry and equal_values(entry[0], k):
            return entry
    return False


@builtin("map", wants_ctx=True)
def _map(ctx, fn, *lists):
    check_arity("map", lists, 1, -1)
    lists = [_list("map", l) for l in lists]
    out = [apply_function(fn, list(args), ctx) for args in zip(*lists)]
    ctx.charge(len(out) + 1)
    return out


@builtin("for-each", wants_ctx=True)
def _for_each(ctx, fn, *lists):
    check_arity("for-each", lists, 1, -1)
    lists = [_list("for-each", l) for l in lists]
    for args in zip(*lists):
        apply_function(fn, list(args), ctx)
    return VOID


@builtin("filter", wants_ctx=True)
def _filter(ctx, fn, lst):
    out = [v for v in _list("filter", lst)
           if is_true(apply_function(fn, [v], ctx))]
    ctx.charge(len(out) + 1)
    return out


@builtin("foldl", wants_ctx=True)
def _foldl(ctx, fn, init, lst):
    acc = init
    for v in _list("foldl", lst):
        acc = apply_function(fn, [v, acc], ctx)
    return acc


@builtin("foldr", wants_ctx=True)
def _foldr(ctx, fn, init, lst):
    acc = init
    for v in reversed(_list("foldr", lst)):
        acc = apply_function(fn, [v, acc], ctx)
    return acc


@builtin("andmap", wants_ctx=True)
def _andmap(ctx, fn, lst):
    result = True
    for v in _list("andmap", lst):
        result = apply_function(fn, [v], ctx)
        if not is_true(result):
            return False
    return result


@builtin("ormap", wants_ctx=True)
def _ormap(ctx, fn, lst):
    for v in _list("ormap", lst):
        result = apply_function(fn, [v], ctx)
        if is_true(result):
            return result
    return False


@builtin("range", wants_ctx=True)
def _range(ctx, *args):
    check_arity("range", args, 1, 2)
    lo, hi = (0, args[0]) if len(args) == 1 else args
    out = list(range(lo, hi))
    ctx.charge(len(out) + 1)
    return out


@builtin("apply", wants_ctx=True)
def _apply(ctx, fn, lst):
    return apply_function(fn, list(_list("apply", lst)), ctx)


@builtin("sort", wants_ctx=True)
def _sort(ctx, lst, less):
    import functools
    lst = _list("sort", lst)
    ctx.charge(len(lst) + 1)

    def cmp(a, b):
        if is_true(apply_function(less, [a, b], ctx)):
            return -1
        if is_true(apply_function(less, [b, a], ctx)):
            return 1
        return 0

    return sorted(lst, key=functools.cmp_to_key(cmp))


# -- strings -------------------------------------------------------------------


@builtin("string-append", wants_ctx=True)
def _string_append(ctx, *args):
    out = "".join(_string("string-append", a) for a in args)
    ctx.charge(len(out) + 1)
    return out


@builtin("string-length")
def _string_length(s):
    return len(_string("string-length", s))


@builtin("substring")
def _substring(s, start, end=None):
    s = _string("substring", s)
    end = len(s) if end is None else end
    if not (0 <= start <= end <= len(s)):
        raise EvaluationError("substring: index out of range")
    return s[start:end]


@builtin("string-ref")
def _string_ref(s, i):
    s = _string("string-ref", s)
    if not (0 <= i < len(s)):
        raise EvaluationError("string-ref: index out of range")
    return s[i]


@builtin("string->symbol")
def _string_to_symbol(s):
    return Symbol(_string("string->symbol", s))


@builtin("symbol->string")
def _symbol_to_string(s):
    if not isinstance(s, Symbol):
        raise EvaluationError("symbol->string: expected a symbol")
    return s.name


@builtin("string->number")
def _string_to_number(s):
    from .reader import parse_number
    n = parse_number(_string("string->number", s).strip())
    return n if n is not None else False


@builtin("number->string")
def _number_to_string(n):
    _num("number->string", n)
    return repr(n) if isinstance(n, float) else str(n)


@builtin("string-upcase")
def _string_upcase(s):
    return _string("string-upcase", s).upper()


@builtin("string-downcase")
def _string_downcase(s):
    return _string("string-downcase", s).lower()


@builtin("string-split")
def _string_split(s, sep=" "):
    return [p for p in _string("string-split", s).split(sep) if p]


@builtin("string-join")
def _string_join(parts, sep=" "):
    return sep.join(_string("string-join", p) for p in _list("string-join", parts))


@builtin("string-contains?")
def _string_containsp(s, sub):
    return _string("string-contains?", sub) in _string("string-contains?", s)


@builtin("string=?")
def _string_eqp(a, b):
    return _string("string=?", a) == _string("string=?", b)


@builtin("string<?")
def _string_ltp(a, b):
    return _string("string<?", a) < _string("string<?", b)


def format_string(fmt, args):
    out = []
    it = iter(args)
    i = 0
    while i < len(fmt):
        ch = fmt[i]
        if ch == "~" and i + 1 < len(fmt):
            d = fmt[i + 1]
            if d == "a":
                out.append(display_str(next(it, "")))
            elif d in ("s", "v"):
                out.append(write_str(next(it, "")))
            elif d == "%" or d == "n":
                out.append("\n")
            elif d == "~":
                out.append("~")
            else:
                raise EvaluationError(f"format: unknown directive ~{d}")
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


@builtin("format")
def _format(fmt, *args):
    return format_string(_string("format", fmt), list(args))


# -- hash tables ---------------------------------------------------------------


def _hash_key(k):
    if isinstance(k, (str, Symbol, int, float, bool)):
        return k
    raise EvaluationError(f"hash: unusable key: {write_str(k)}")


@builtin("hash", wants_ctx=True)
def _hash_ctor(ctx, *args):
    if len(args) % 2 != 0:
        raise EvaluationError("hash: expected an even number of arguments")
    out = {}
    for i in range(0, len(args), 2):
        out[_hash_key(args[i])] = args[i + 1]
    ctx.charge(len(out) + 1)
    return out


@builtin("hash-ref")
def _hash_ref(h, k, *default):
    h = _hash("hash-ref", h)
    k = _hash_key(k)
    if k in h:
        return h[k]
    if default:
        return default[0]
    raise EvaluationError(f"hash-ref: no value for key {write_str(k)}")


alias("dict-ref", "hash-ref")


@builtin("hash-set", wants_ctx=True)
def _hash_set(ctx, h, k, v):
    h = _hash("hash-set", h)
    ctx.charge(len(h) + 1)
    out = dict(h)
    out[_hash_key(k)] = v
    return out


@builtin("hash-set*", wants_ctx=True)
def _hash_set_star(ctx, h, *kvs):
    h = _hash("hash-set*", h)
    if len(kvs) % 2 != 0:
        raise EvaluationError("hash-set*: expected key/value pairs")
    ctx.charge(len(h) + len(kvs) + 1)
    out = dict(h)
    for i in range(0, len(kvs), 2):
        out[_hash_key(kvs[i])] = kvs[i + 1]
    return out


@builtin("hash-remove", wants_ctx=True)
def _hash_remove(ctx, h, k):
    h = _hash("hash-remove", h)
    ctx.charge(len(h) + 1)
    out = dict(h)
    out.pop(_hash_key(k), None)
    return out


@builtin("hash-has-key?")
def _hash_has_keyp(h, k):
    return _hash_key(k) in _hash("hash-has-key?", h)


@builtin("hash-keys", wants_ctx=True)
def _hash_keys(ctx, h):
    out = list(_hash("hash-keys", h).keys())
    ctx.charge(len(out) + 1)
    return out


@builtin("hash-values", wants_ctx=True)
def _hash_values(ctx, h):
    out = list(_hash("hash-values", h).values())
    ctx.charge(len(out) + 1)
    return out


@builtin("hash-count")
def _hash_count(h):
    return len(_hash("hash-count", h))


@builtin("hash-empty?")
def _hash_emptyp(h):
    return len(_hash("hash-empty?", h)) == 0


@builtin("hash->list", wants_ctx=True)
def _hash_to_list(ctx, h):
    out = [[k, v] for k, v in _hash("hash->list", h).items()]
    ctx.charge(len(out) + 1)
    return out


@builtin("values")
def _values(*args):
    return MultipleValues(list(args)) if len(args) != 1 else args[0]


@builtin("%pairs->hash", wants_ctx=True)
def _pairs_to_hash(ctx, pairs):
    out = {}
    for p in _list("%pairs->hash", pairs):
        if not isinstance(p, MultipleValues) or len(p.items) != 2:
            raise EvaluationError("for/hash: body must produce (values key val)")
        out[_hash_key(p.items[0])] = p.items[1]
    ctx.charge(len(out) + 1)
    return out


# -- boxes ---------------------------------------------------------------------


@builtin("box")
def _box(v):
    return Box(v)


@builtin("unbox")
def _unbox(b):
    if not isinstance(b, Box):
        raise EvaluationError("unbox: expected a box")
    return b.value


@builtin("set-box!")
def _set_box(b, v):
    if not isinstance(b, Box):
        raise EvaluationError("set-box!: expected a box")
    b.value = v
    return VOID


# -- io and diagnostics ----------------------------------------------------------


@builtin("display", wants_ctx=True)
def _display(ctx, v):
    ctx.kernel.write_output(display_str(v))
    return VOID


@builtin("displayln", wants_ctx=True)
def _displayln(ctx, v):
    ctx.kernel.write_output(display_str(v) + "\n")
    return VOID


alias("println", "displayln")


@builtin("write", wants_ctx=True)
def _write(ctx, v):
    ctx.kernel.write_output(write_str(v))
    return VOID


@builtin("newline", wants_ctx=True)
def _newline(ctx):
    ctx.kernel.write_output("\n")
    return VOID


@builtin("printf", wants_ctx=True)
def _printf(ctx, fmt, *args):
    ctx.kernel.write_output(format_string(_string("printf", fmt), list(args)))
    return VOID


@builtin("error")
def _error(*args):
    if args and isinstance(args[0], Symbol):
        who, rest = args[0].name + ": ", args[1:]
    else:
        who, rest = "", args
    if rest and isinstance(rest[0], str) and "~" in rest[0]:
        raise EvaluationError(who + format_string(rest[0], list(rest[1:])))
    raise EvaluationError(who + " ".join(display_str(a) for a in rest))


@builtin("syntax-error")
def _syntax_error(*args):
    raise SyntaxDiagnostic(" ".join(display_str(a) for a in args))


@builtin("void")
def _void(*_args):
    return VOID


@builtin("identity")
def _identity(v):
    return v


@builtin("log-effect!", wants_ctx=True)
def _log_effect(ctx, value):
    ctx.kernel.log_effect(phase_name(ctx.phase), value)
    return VOID


@builtin("check-equal?", wants_ctx=True)
def _check_equal(ctx, actual, expected):
    ctx.kernel.record_check(equal_values(actual, expected), actual, expected)
    return VOID


@builtin("check-true", wants_ctx=True)
def _check_true(ctx, actual):
    ctx.kernel.record_check(is_true(actual), actual, True)
    return VOID


# -- capability probes -----------------------------------------------------------


@builtin("read-file", wants_ctx=True)
def _read_file(ctx, path):
    import os
    path = _string("read-file", path)
    root = ctx.caps.fs_read_root
    if root is None:
        raise SandboxViolation("read-file: filesystem access not permitted")
    full = os.path.realpath(os.path.join(root, path))
    if not full.startswith(os.path.realpath(root) + os.sep):
        raise SandboxViolation("read-file: path escapes the project root")
    try:
        with open(full, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise EvaluationError(f"read-file: {e}") from None


@builtin("write-file", wants_ctx=True)
def _write_file(ctx, path, text):
    if not ctx.caps.fs_write:
        raise SandboxViolation("write-file: filesystem writes not permitted")
    raise SandboxViolation("write-file: filesystem writes not permitted")


@builtin("open-socket", wants_ctx=True)
def _open_socket(ctx, host, port):
    if not ctx.caps.network:
        raise SandboxViolation("open-socket: network access not permitted")
    raise SandboxViolation("open-socket: network access not permitted")


# -- syntax helpers (compile phase) ------------------------------------------------


@builtin("gensym")
def _gensym(base="g"):
    name = base.name if isinstance(base, Symbol) else str(base)
    return Symbol(gensym(name))


@builtin("datum->syntax")
def _datum_to_syntax(v):
    return datum_to_syntax(v)


@builtin("syntax->datum")
def _syntax_to_datum(stx):
    if not isinstance(stx, Syntax):
        raise EvaluationError("syntax->datum: expected syntax")
    return syntax_to_datum(stx)


@builtin("syntax->list")
def _syntax_to_list(stx):
    if isinstance(stx, Syntax) and stx.kind == "list":
        return list(stx.children)
    return False


@builtin("identifier?")
def _identifierp(stx):
    return isinstance(stx, Syntax) and stx.kind == "symbol"


@builtin("syntax?")
def _syntaxp(v):
    return isinstance(v, Syntax)


# -- match support -------------------------------------------------------------------


@builtin("%record?")
def _record_check(v, ctor, arity):
    if not isinstance(ctor, RecordConstructor):
        raise EvaluationError("match: constructor pattern head is not a "
                              "record constructor")
    return (isinstance(v, Record) and v.rtype is ctor.rtype
            and len(v.values) == arity)


@builtin("%record-ref")
def _record_ref(v, i):
    if not isinstance(v, Record):
        raise EvaluationError("%record-ref: not a record")
    return v.values[i]


# -- validators --------------------------------------------------------------------


VALIDATORS = {
    "id?": lambda s: isinstance(s, str) and len(s) > 0 and s.isdigit(),
    "number?": lambda s: isinstance(s, str)
    and REGISTRY["string->number"].fn(s) is not False,
    "string?": lambda s: isinstance(s, str),
    "nonempty?": lambda s: isinstance(s, str) and len(s) > 0,
}


@builtin("validate-field")
def _validate_field(pred_name, value):
    name = pred_name.name if isinstance(pred_name, Symbol) else pred_name
    pred = VALIDATORS.get(name)
    if pred is None:
        raise EvaluationError(f"validate-field: unknown validator {name}")
    return bool(pred(value))


# -- editor runtime hooks ------------------------------------------------------------


@builtin("children", wants_ctx=True)
def _children(ctx, inst):
    from .objects import EditorInstance
    if not isinstance(inst, EditorInstance):
        raise EvaluationError("children: expected an editor instance")
    return list(inst.children)


@builtin("parent", wants_ctx=True)
def _parent(ctx, inst):
    from .objects import EditorInstance
    if not isinstance(inst, EditorInstance):
        raise EvaluationError("parent: expected an editor instance")
    return inst.parent if inst.parent is not None else False


@builtin("editor-instance?")
def _editor_instancep(v):
    from .objects import EditorInstance
    return isinstance(v, EditorInstance)


@builtin("take-focus!", wants_ctx=True)
def _take_focus(ctx, inst):
    if ctx.session is not None:
        ctx.session.set_focus(inst)
    return VOID


@builtin("test-window", wants_ctx=True)
def _test_window(ctx, inst):
    if ctx.session is not None:
        ctx.session.windows.append(inst)
    elif ctx.kernel is not None:
        ctx.kernel.test_windows.append(inst)
    return VOID


@builtin("clear-children!", wants_ctx=True)
def _clear_children(ctx, inst):
    from .objects import EditorInstance
    if not isinstance(inst, EditorInstance):
        raise EvaluationError("clear-children!: expected an editor instance")
    for c in inst.children:
        c.parent = None
    inst.children = []
    return VOID


@builtin("remove-child!", wants_ctx=True)
def _remove_child(ctx, parent, child):
    from .objects import EditorInstance
    if not isinstance(parent, EditorInstance):
        raise EvaluationError("remove-child!: expected an editor instance")
    if child in parent.children:
        parent.children.remove(child)
        child.parent = None
    return VOID


@builtin("elaborate-editor-value", wants_ctx=True)
def _elaborate_editor_value(ctx, ev):
    from .syntax import EDITOR
    if ctx.expander is None:
        raise EvaluationError(
            "elaborate-editor-value: only available during expansion")
    if not isinstance(ev, EditorValue):
        raise EvaluationError("elaborate-editor-value: expected an editor value")
    return ctx.expander.expand_editor(Syntax(EDITOR, ev), 0)


@builtin("parse-code")
def _parse_code(text):
    from .reader import read_form
    return read_form(_string("parse-code", text), "<code-slot>")


@builtin("editor-value")
def _editor_value(*args):
    from .editor_form import EditorBinding
    check_arity("editor-value", args, 2, 3)
    if len(args) == 2:
        path, (name, state) = None, args
    else:
        path, name, state = args
        path = None if path is False else _string("editor-value", path)
    state = _hash("editor-value", state)
    if not all(isinstance(k, str) for k in state):
        raise EvaluationError("editor-value: state keys must be strings")
    return EditorValue(EditorBinding(path, _string("editor-value", name)),
                       dict(state))


@builtin("editor-value?")
def _editor_valuep(v):
    return isinstance(v, EditorValue)
