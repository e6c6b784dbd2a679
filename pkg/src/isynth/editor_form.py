"""The editor value model: a binding plus a state map.

An editor value is the textual payload of an ``#editor`` block.  Like a
closure it pairs a code pointer (the binding: module path + exported name,
or a local name) with data (the state map).  State values are restricted to
a JSON-compatible subset plus nested editor values so that persistence is
always possible.
"""

from .errors import StateTypeError, UnserializableValue
from .values import VOID, equal_values


class EditorBinding:
    """module_path is None for locally defined editors."""

    __slots__ = ("module_path", "name")

    def __init__(self, module_path, name):
        self.module_path = module_path
        self.name = name

    def __eq__(self, other):
        return (isinstance(other, EditorBinding)
                and self.module_path == other.module_path
                and self.name == other.name)

    def __hash__(self):
        return hash((self.module_path, self.name))

    def __repr__(self):
        return f"EditorBinding({self.module_path!r}, {self.name!r})"

    def to_json(self):
        return [self.module_path, self.name]


class EditorValue:
    """binding + ordered state map; the persistable form of an editor."""

    __slots__ = ("binding", "state")

    def __init__(self, binding, state=None):
        self.binding = binding
        self.state = dict(state or {})

    def __eq__(self, other):
        if not isinstance(other, EditorValue):
            return NotImplemented
        if self.binding != other.binding:
            return False
        if set(self.state) != set(other.state):
            return False
        return all(state_equal(v, other.state[k]) for k, v in self.state.items())

    def __hash__(self):
        return hash(self.binding)

    def __repr__(self):
        return f"EditorValue({self.binding!r}, {self.state!r})"

    def to_json(self):
        return {"binding": self.binding.to_json(),
                "state": {k: state_to_json(v) for k, v in self.state.items()}}


def state_equal(a, b):
    if isinstance(a, EditorValue) or isinstance(b, EditorValue):
        return a == b
    return equal_values(a, b)


def is_state_value(v):
    if v is VOID or isinstance(v, (bool, str, EditorValue)):
        return True
    if isinstance(v, int):
        return -(2 ** 63) <= v < 2 ** 63
    if isinstance(v, float):
        return True
    if isinstance(v, list):
        return all(is_state_value(x) for x in v)
    if isinstance(v, dict):
        return all(isinstance(k, str) and is_state_value(x) for k, x in v.items())
    return False


def state_to_json(v):
    """State value -> plain JSON value (editors become tagged objects)."""
    if v is VOID:
        return None
    if isinstance(v, (bool, int, float, str)):
        return v
    if isinstance(v, list):
        return [state_to_json(x) for x in v]
    if isinstance(v, EditorValue):
        return {"$editor": v.to_json()}
    if isinstance(v, dict):
        return {k: state_to_json(x) for k, x in v.items()}
    raise UnserializableValue(f"not a state value: {v!r}")


def state_from_json(v):
    if v is None:
        return VOID
    if isinstance(v, (bool, int, float, str)):
        return v
    if isinstance(v, list):
        return [state_from_json(x) for x in v]
    if isinstance(v, dict):
        if set(v) == {"$editor"}:
            inner = v["$editor"]
            mp, name = inner["binding"]
            return EditorValue(EditorBinding(mp, name),
                               {k: state_from_json(x) for k, x in inner["state"].items()})
        return {k: state_from_json(x) for k, x in v.items()}
    raise StateTypeError(f"not a state value: {v!r}")


def classify(v):
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "list"
    if isinstance(v, dict):
        return "map"
    if isinstance(v, EditorValue):
        return "editor"
    if v is VOID:
        return "void"
    return type(v).__name__


def check_state_shape(field, raw, default):
    """Shape check: a raw value must look like the field's default.

    A default of #f or void puts no constraint on the field (the common
    'optional slot' idiom); otherwise the broad categories must agree."""
    if default is False or default is VOID or raw is VOID:
        return
    want, got = classify(default), classify(raw)
    if isinstance(default, EditorValue) or want == "editor":
        return  # nested editors may be replaced by any serialized editor
    if want == got:
        return
    if want == "number" and got == "number":
        return
    raise StateTypeError(
        f"field '{field}' expects a {want}, got {got} ({raw!r})")


class DefinitionLocator:
    """Where an editor definition lives: a module id plus an exported name."""

    __slots__ = ("module_id", "name", "local")

    def __init__(self, module_id, name, local=False):
        self.module_id = module_id
        self.name = name
        self.local = local

    def __repr__(self):
        where = "local" if self.local else self.module_id
        return f"<{self.name} @ {where}>"
