"""Runtime values of the host language.

Host values map onto Python ones where that is faithful: numbers are int or
float, strings are str, booleans are bool, proper lists are Python lists and
hash tables are dicts.  Everything else gets a small dedicated class.
"""

from .errors import EvaluationError


class Symbol:
    """Interned symbol; identity equality is symbol equality."""

    __slots__ = ("name",)
    _table = {}

    def __new__(cls, name):
        sym = cls._table.get(name)
        if sym is None:
            sym = object.__new__(cls)
            object.__setattr__(sym, "name", name)
            cls._table[name] = sym
        return sym

    def __setattr__(self, k, v):
        raise AttributeError("symbols are immutable")

    def __repr__(self):
        return self.name

    def __hash__(self):
        return hash(self.name)

    def __reduce__(self):
        return (Symbol, (self.name,))


class _Void:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = object.__new__(cls)
        return cls._instance

    def __repr__(self):
        return "#<void>"


VOID = _Void()


class Box:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"#&{write_str(self.value)}"


class RecordType:
    __slots__ = ("name", "fields")

    def __init__(self, name, fields):
        self.name = name
        self.fields = tuple(fields)

    def __repr__(self):
        return f"#<record-type {self.name}>"


class Record:
    __slots__ = ("rtype", "values")

    def __init__(self, rtype, values):
        self.rtype = rtype
        self.values = list(values)

    def __repr__(self):
        return write_str(self)


class MultipleValues:
    """Result of (values a b ...); consumed by e.g. for/hash."""

    __slots__ = ("items",)

    def __init__(self, items):
        self.items = list(items)


class Closure:
    __slots__ = ("params", "rest", "body", "env", "name")

    def __init__(self, params, rest, body, env, name="lambda"):
        self.params = params
        self.rest = rest
        self.body = body
        self.env = env
        self.name = name

    def __repr__(self):
        return f"#<procedure:{self.name}>"


class Builtin:
    __slots__ = ("name", "fn", "wants_ctx")

    def __init__(self, name, fn, wants_ctx=False):
        self.name = name
        self.fn = fn
        self.wants_ctx = wants_ctx

    def __repr__(self):
        return f"#<procedure:{self.name}>"


class RecordConstructor:
    __slots__ = ("rtype",)

    def __init__(self, rtype):
        self.rtype = rtype

    def __repr__(self):
        return f"#<procedure:{self.rtype.name}>"


class NativeObject:
    """Host-provided object reachable from user code through (send obj m ...).

    Methods are Python callables taking (ctx, *args)."""

    __slots__ = ("kind", "methods")

    def __init__(self, kind, methods):
        self.kind = kind
        self.methods = methods

    def __repr__(self):
        return f"#<{self.kind}>"


def is_true(v):
    return v is not False


def equal_values(a, b):
    if a is b:
        return True
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(equal_values(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        if len(a) != len(b):
            return False
        for k, v in a.items():
            if k not in b or not equal_values(v, b[k]):
                return False
        return True
    if isinstance(a, Record) and isinstance(b, Record):
        return a.rtype is b.rtype and all(
            equal_values(x, y) for x, y in zip(a.values, b.values)
        )
    if isinstance(a, Box) and isinstance(b, Box):
        return equal_values(a.value, b.value)
    return a == b if type(a) is type(b) else False


def display_str(v):
    """Human-facing rendering: strings without quotes (format ~a)."""
    if isinstance(v, str):
        return v
    return write_str(v)


def write_str(v):
    """Machine-facing rendering: strings quoted (format ~s)."""
    if v is True:
        return "#t"
    if v is False:
        return "#f"
    if v is VOID:
        return "#<void>"
    if isinstance(v, Symbol):
        return v.name
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, list):
        return "(" + " ".join(write_str(x) for x in v) + ")"
    if isinstance(v, dict):
        inner = " ".join(f"({write_str(k)} . {write_str(x)})" for k, x in v.items())
        return "#hash(" + inner + ")"
    if isinstance(v, Record):
        return "#(" + v.rtype.name + " " + " ".join(write_str(x) for x in v.values) + ")"
    return repr(v)


def check_arity(name, args, low, high=None):
    n = len(args)
    if high is None:
        high = low
    if high >= 0 and not (low <= n <= high):
        raise EvaluationError(f"{name}: expected {low}..{high} arguments, got {n}")
    if high < 0 and n < low:
        raise EvaluationError(f"{name}: expected at least {low} arguments, got {n}")
