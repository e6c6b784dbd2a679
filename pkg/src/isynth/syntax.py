"""Syntax trees: the currency of reading, expansion and printing.

A node is an atom (symbol, string, number, boolean), a list, an editor
literal carrying an EditorValue payload, or a datum node wrapping an
arbitrary host value produced by an elaborator template.  Nodes carry a
source span and a set of scope marks used for light hygiene.
"""

from .values import Symbol, equal_values

SYMBOL = "symbol"
STRING = "string"
NUMBER = "number"
BOOLEAN = "boolean"
LIST = "list"
EDITOR = "editor"
DATUM = "datum"

EMPTY_SCOPES = frozenset()


class SourceSpan:
    __slots__ = ("file", "start", "end", "line", "col")

    def __init__(self, file, start, end, line, col):
        self.file = file
        self.start = start
        self.end = end
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.file}:{self.line}:{self.col}"

    def to_json(self):
        return {"file": self.file, "start": self.start, "end": self.end,
                "line": self.line, "col": self.col}


SYNTHETIC = SourceSpan("<synthetic>", 0, 0, 1, 1)


class Syntax:
    __slots__ = ("kind", "value", "children", "span", "scopes")

    def __init__(self, kind, value=None, children=(), span=SYNTHETIC,
                 scopes=EMPTY_SCOPES):
        self.kind = kind
        self.value = value
        self.children = tuple(children)
        self.span = span
        self.scopes = scopes

    def __repr__(self):
        from .printer import write_form
        return f"#<syntax {write_form(self)}>"

    def is_symbol(self, name=None):
        return self.kind == SYMBOL and (name is None or self.value == name)

    def head_name(self):
        """Name of the leading symbol of a list form, or None."""
        if self.kind == LIST and self.children and self.children[0].kind == SYMBOL:
            return self.children[0].value
        return None

    def with_children(self, children):
        return Syntax(self.kind, self.value, children, self.span, self.scopes)


def sym(name, span=SYNTHETIC, scopes=EMPTY_SCOPES):
    return Syntax(SYMBOL, name, (), span, scopes)


def slist(children, span=SYNTHETIC):
    return Syntax(LIST, None, tuple(children), span)


def satom(value, span=SYNTHETIC):
    if isinstance(value, bool):
        return Syntax(BOOLEAN, value, (), span)
    if isinstance(value, (int, float)):
        return Syntax(NUMBER, value, (), span)
    if isinstance(value, str):
        return Syntax(STRING, value, (), span)
    raise TypeError(f"not an atom payload: {value!r}")


_gensym_counter = [0]


def gensym(base="g"):
    _gensym_counter[0] += 1
    return f"%{base}{_gensym_counter[0]}"


def mark(stx, m):
    """Toggle scope mark m across a whole tree (XOR semantics)."""
    scopes = stx.scopes ^ {m}
    children = tuple(mark(c, m) for c in stx.children)
    return Syntax(stx.kind, stx.value, children, stx.span, scopes)


def reskin(stx, span):
    """Copy a tree, replacing unknown synthetic spans by a carrier span."""
    sp = stx.span if stx.span is not SYNTHETIC else span
    return Syntax(stx.kind, stx.value,
                  tuple(reskin(c, span) for c in stx.children), sp, stx.scopes)


def structurally_equal(a, b):
    """Equality up to spans and scope marks."""
    if a.kind != b.kind:
        return False
    if a.kind == LIST:
        return len(a.children) == len(b.children) and all(
            structurally_equal(x, y) for x, y in zip(a.children, b.children))
    if a.kind == EDITOR:
        return a.value == b.value
    if a.kind == DATUM:
        return equal_values(a.value, b.value)
    if a.kind == NUMBER and (isinstance(a.value, bool) != isinstance(b.value, bool)):
        return False
    return a.value == b.value and type(a.value) is type(b.value)


def syntax_to_datum(stx):
    """Strip syntax structure down to a plain host value."""
    if stx.kind == SYMBOL:
        return Symbol(stx.value)
    if stx.kind in (STRING, NUMBER, BOOLEAN):
        return stx.value
    if stx.kind == DATUM:
        return stx.value
    if stx.kind == LIST:
        return [syntax_to_datum(c) for c in stx.children]
    if stx.kind == EDITOR:
        return stx.value
    raise TypeError(f"cannot convert {stx.kind} to datum")


def datum_to_syntax(value, span=SYNTHETIC):
    """Lift a host value into syntax.

    Symbols, atoms and lists become ordinary nodes; anything else (hashes,
    records, editor instances) rides along as an opaque datum node."""
    from .editor_form import EditorValue
    if isinstance(value, Syntax):
        return value
    if isinstance(value, Symbol):
        return sym(value.name, span)
    if isinstance(value, bool):
        return Syntax(BOOLEAN, value, (), span)
    if isinstance(value, (int, float)):
        return Syntax(NUMBER, value, (), span)
    if isinstance(value, str):
        return Syntax(STRING, value, (), span)
    if isinstance(value, list):
        return Syntax(LIST, None, tuple(datum_to_syntax(v, span) for v in value), span)
    if isinstance(value, EditorValue):
        return Syntax(EDITOR, value, (), span)
    return Syntax(DATUM, value, (), span)
