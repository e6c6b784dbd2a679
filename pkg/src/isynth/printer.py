"""Canonical printer: syntax trees back to module text.

The layout is deterministic so that printing, re-reading and printing again
is byte-stable.  A form prints on one line when it fits in the width budget;
otherwise the head keeps the opening line (greedily packing short leading
arguments) and the remaining children each take an indented line.  Editor
literals print in the block grammar with the same fit rule.
"""

import re

from .editor_form import EditorValue
from .syntax import BOOLEAN, DATUM, EDITOR, LIST, NUMBER, STRING, SYMBOL
from .values import VOID, Box, Record, Symbol

WIDTH = 80

_SUGAR_NAMES = {
    "quote": "'",
    "quasiquote": "`",
    "unquote": ",",
    "unquote-splicing": ",@",
    "syntax": "#'",
    "quasisyntax": "#`",
    "unsyntax": "#,",
    "unsyntax-splicing": "#,@",
}

_BARE_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_?!$-]*$")


def escape_string(s):
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def atom_text(stx):
    if stx.kind == SYMBOL:
        return stx.value
    if stx.kind == STRING:
        return escape_string(stx.value)
    if stx.kind == NUMBER:
        return repr(stx.value) if isinstance(stx.value, float) else str(stx.value)
    if stx.kind == BOOLEAN:
        return "#t" if stx.value else "#f"
    raise TypeError(f"not an atom: {stx.kind}")


def datum_text(value):
    """Print an opaque datum as the expression that rebuilds it."""
    if value is VOID:
        return "(void)"
    if isinstance(value, bool):
        return "#t" if value else "#f"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return escape_string(value)
    if isinstance(value, Symbol):
        return "'" + value.name
    if isinstance(value, list):
        return "(list " + " ".join(datum_text(v) for v in value) + ")" \
            if value else "(list)"
    if isinstance(value, dict):
        parts = []
        for k, v in value.items():
            parts.append(datum_text(k))
            parts.append(datum_text(v))
        return "(hash" + ("".join(" " + p for p in parts)) + ")"
    if isinstance(value, Record):
        inner = " ".join(datum_text(v) for v in value.values)
        return "(" + value.rtype.name + (" " + inner if inner else "") + ")"
    if isinstance(value, Box):
        return "(box " + datum_text(value.value) + ")"
    if isinstance(value, EditorValue):
        return flat_editor(value)
    if hasattr(value, "render_syntax"):
        return flat_form(value.render_syntax())
    raise TypeError(f"unprintable datum: {value!r}")


def _has_opaque(stx):
    if stx.kind in (DATUM, EDITOR):
        return True
    return any(_has_opaque(c) for c in stx.children)


def flat_form(stx):
    if stx.kind == LIST:
        sugar = _sugar_prefix(stx)
        if sugar is not None:
            return sugar + flat_form(stx.children[1])
        return "(" + " ".join(flat_form(c) for c in stx.children) + ")"
    if stx.kind == EDITOR:
        return flat_editor(stx.value)
    if stx.kind == DATUM:
        return datum_text(stx.value)
    return atom_text(stx)


def _sugar_prefix(stx):
    """Sugar marker for 2-element (quote x)-family lists, or None."""
    if (stx.kind == LIST and len(stx.children) == 2
            and stx.children[0].kind == SYMBOL):
        name = stx.children[0].value
        if name in _SUGAR_NAMES:
            if name == "quote" and _has_opaque(stx.children[1]):
                return None  # opaque payloads print as constructor expressions
            return _SUGAR_NAMES[name]
    return None


def _quote_of_opaque(stx):
    if (stx.kind == LIST and len(stx.children) == 2
            and stx.children[0].is_symbol("quote")
            and _has_opaque(stx.children[1])):
        return stx.children[1]
    return None


def pp(stx, indent=0):
    quoted = _quote_of_opaque(stx)
    if quoted is not None:
        from .syntax import syntax_to_datum
        return datum_text(syntax_to_datum(quoted))
    if stx.kind == DATUM and hasattr(stx.value, "render_syntax"):
        return pp(stx.value.render_syntax(), indent)
    flat = flat_form(stx)
    if indent + len(flat) <= WIDTH or stx.kind not in (LIST, EDITOR):
        return flat
    if stx.kind == EDITOR:
        return pp_editor(stx.value, indent)
    sugar = _sugar_prefix(stx)
    if sugar is not None:
        return sugar + pp(stx.children[1], indent + len(sugar))
    children = stx.children
    if not children:
        return "()"
    line = "(" + pp(children[0], indent + 1)
    body_indent = indent + 2
    parts = [line]
    i = 1
    # greedily keep short leading arguments on the head line
    while i < len(children) - 1 and "\n" not in parts[0]:
        piece = flat_form(children[i])
        if len(parts[0]) + 1 + len(piece) + indent > WIDTH:
            break
        parts[0] = parts[0] + " " + piece
        i += 1
    rest = [" " * body_indent + pp(c, body_indent) for c in children[i:]]
    return "\n".join(parts + rest) + ")"


# -- editor blocks ---------------------------------------------------------


def _key_text(k):
    return k if _BARE_KEY.match(k) else escape_string(k)


def flat_state_value(v):
    if v is VOID:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return escape_string(v)
    if isinstance(v, list):
        return "[" + ", ".join(flat_state_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return flat_state_object(v)
    if isinstance(v, EditorValue):
        return flat_editor(v)
    raise TypeError(f"not a state value: {v!r}")


def flat_state_object(obj):
    if not obj:
        return "{}"
    inner = ", ".join(f"{_key_text(k)}: {flat_state_value(v)}"
                      for k, v in obj.items())
    return "{ " + inner + " }"


def flat_binding(binding):
    path = "null" if binding.module_path is None else escape_string(binding.module_path)
    return f"[{path}, {escape_string(binding.name)}]"


def flat_editor(ev):
    return ("#editor { binding: " + flat_binding(ev.binding)
            + ", state: " + flat_state_object(ev.state) + " }")


def pp_state_value(v, indent):
    flat = flat_state_value(v)
    if indent + len(flat) <= WIDTH:
        return flat
    inner = indent + 2
    if isinstance(v, list) and v:
        rows = [" " * inner + pp_state_value(x, inner) for x in v]
        return "[\n" + ",\n".join(rows) + "\n" + " " * indent + "]"
    if isinstance(v, dict) and v:
        return pp_state_object(v, indent)
    if isinstance(v, EditorValue):
        return pp_editor(v, indent)
    return flat


def pp_state_object(obj, indent):
    flat = flat_state_object(obj)
    if indent + len(flat) <= WIDTH or not obj:
        return flat
    inner = indent + 2
    rows = []
    for k, v in obj.items():
        key = _key_text(k)
        rows.append(" " * inner + key + ": "
                    + pp_state_value(v, inner + len(key) + 2))
    return "{\n" + ",\n".join(rows) + "\n" + " " * indent + "}"


def pp_editor(ev, indent):
    flat = flat_editor(ev)
    if indent + len(flat) <= WIDTH:
        return flat
    inner = indent + 2
    state = pp_state_object(ev.state, inner + len("state: "))
    return ("#editor {\n"
            + " " * inner + "binding: " + flat_binding(ev.binding) + ",\n"
            + " " * inner + "state: " + state + "\n"
            + " " * indent + "}")


def write_form(stx):
    return pp(stx, 0)


def write_module(tree):
    """Canonical module text: forms separated by blank lines, trailing newline."""
    if not tree.children:
        return "\n"
    return "\n\n".join(pp(f, 0) for f in tree.children) + "\n"
