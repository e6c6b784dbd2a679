"""Edit-time runtime: live editor instances inside a sandboxed session.

A session owns one open module: its tree, its (tolerantly) expanded form,
a session-scoped edit namespace and one live instance per editor literal.
Every user-code call (constructor, draw, event handler) runs under the
session budget; failures never crash the session, they produce fallback
editors or diagnostics.  Field writes during an event are transactional:
an interrupted handler leaves the tree exactly as it was.
"""

import json
import math
import os

from .editor_form import (EditorBinding, EditorValue, check_state_shape,
                          is_state_value, state_from_json, state_to_json)
from .errors import (EvaluationError, IsynthError, SandboxViolation,
                     SyntaxDiagnostic, UnknownField, UnserializableValue)
from .evaluator import Capabilities, EvalContext, apply_function, eval_syntax
from .objects import EditorInstance, instantiate_definition, send_instance
from .printer import write_module
from .reader import read_module
from .syntax import EDITOR, Syntax
from .values import VOID, NativeObject, Symbol


# -- display lists -----------------------------------------------------------


class DisplayListBuilder:
    """Collects retained drawing commands; push/pop groups carry transforms."""

    def __init__(self):
        self.commands = []
        self.depth = 0
        self.offset = (0, 0)
        self.geometry = []  # [(instance, x, y, w, h)] in absolute coords
        self._stack = []

    def _coord(self, v, what):
        if isinstance(v, bool) or not isinstance(v, (int, float)) \
                or not math.isfinite(v):
            raise EvaluationError(f"draw: {what} must be a finite number")
        return v

    def text(self, text, x, y):
        self.commands.append({"op": "text", "text": str(text),
                              "x": self._coord(x, "x"), "y": self._coord(y, "y")})

    def rect(self, x, y, w, h, style="stroke"):
        self.commands.append({"op": "rect", "x": self._coord(x, "x"),
                              "y": self._coord(y, "y"), "w": self._coord(w, "w"),
                              "h": self._coord(h, "h"), "style": style})

    def line(self, x1, y1, x2, y2):
        self.commands.append({"op": "line", "x1": self._coord(x1, "x1"),
                              "y1": self._coord(y1, "y1"),
                              "x2": self._coord(x2, "x2"),
                              "y2": self._coord(y2, "y2")})

    def image(self, name, x, y, w, h):
        self.commands.append({"op": "image", "name": str(name),
                              "x": self._coord(x, "x"), "y": self._coord(y, "y"),
                              "w": self._coord(w, "w"), "h": self._coord(h, "h")})

    def push(self, dx, dy, w, h, instance=None):
        self.commands.append({"op": "push", "dx": self._coord(dx, "dx"),
                              "dy": self._coord(dy, "dy"),
                              "w": self._coord(w, "w"), "h": self._coord(h, "h")})
        self._stack.append(self.offset)
        ox, oy = self.offset
        self.offset = (ox + dx, oy + dy)
        self.depth += 1
        if instance is not None:
            self.geometry.append((instance, ox + dx, oy + dy, w, h))

    def pop(self):
        if self.depth == 0:
            raise EvaluationError("draw: unbalanced pop-group")
        self.commands.append({"op": "pop"})
        self.offset = self._stack.pop()
        self.depth -= 1

    def finish(self):
        if self.depth != 0:
            raise EvaluationError("draw: unbalanced push-group")
        return self.commands


def make_dc(builder, ctx):
    def draw_text(_ctx, text, x, y):
        builder.text(text, x, y)
        return VOID

    def draw_rect(_ctx, x, y, w, h, style=None):
        name = style.name if isinstance(style, Symbol) else "stroke"
        builder.rect(x, y, w, h, name)
        return VOID

    def draw_line(_ctx, x1, y1, x2, y2):
        builder.line(x1, y1, x2, y2)
        return VOID

    def draw_image(_ctx, name, x, y, w, h):
        builder.image(name, x, y, w, h)
        return VOID

    def draw_child(call_ctx, child, x, y, w, h):
        if not isinstance(child, EditorInstance):
            raise EvaluationError("draw-child: expected an editor instance")
        builder.push(x, y, w, h, child)
        send_instance(call_ctx, child, "draw", [dc])
        builder.pop()
        return VOID

    dc = NativeObject("drawing-context", {
        "draw-text": draw_text,
        "draw-rect": draw_rect,
        "draw-line": draw_line,
        "draw-image": draw_image,
        "draw-child": draw_child,
    })
    return dc


# -- fallback editors ------------------------------------------------------------


class FallbackEditor:
    """Shown when binding resolution, deserialization or construction fails.

    It renders the raw binding and state, persists the original value
    unchanged, and supports another initialization attempt."""

    def __init__(self, value, diagnostic):
        self.value = value
        self.diagnostic = str(diagnostic)
        self.instance_id = None
        self.session = None
        self.children = []
        self.parent = None
        self.dirty = False

    def __repr__(self):
        return f"#<fallback-editor:{self.value.binding.name}>"

    def walk(self):
        yield self

    def draw_display_list(self):
        b = DisplayListBuilder()
        w = 260
        rows = 3 + len(self.value.state)
        h = 20 * rows + 28
        b.push(0, 0, w, h, self)
        b.rect(0, 0, w, h, "stroke")
        b.text("editor could not start", 4, 14)
        path = self.value.binding.module_path
        b.text(f"module: {path if path is not None else '(local)'}", 4, 34)
        b.text(f"name: {self.value.binding.name}", 4, 54)
        y = 74
        for k, v in self.value.state.items():
            b.text(f"{k}: {json.dumps(state_to_json(v))}", 4, y)
            y += 20
        b.rect(4, y - 10, 90, 18, "stroke")
        b.text("reinitialize", 8, y + 3)
        b.pop()
        return b.finish(), [(self, 0, 0, w, h)]


def is_fallback(inst):
    return isinstance(inst, FallbackEditor)


# -- state <-> instance ------------------------------------------------------------


def deserialize_state(kernel, ctx, raw, definition, strict=False):
    """Map a raw state map onto a definition's fields.

    Returns (init list, warnings).  Fields absent from the raw map keep
    their declared defaults; unknown keys warn (or error when strict)."""
    warnings = []
    inits = []
    specs = definition.all_state_specs()
    known = {}
    for spec, cls in specs:
        known[spec.name] = (spec, cls)
    for key, raw_value in raw.items():
        if key not in known:
            if strict:
                raise UnknownField(f"unknown state key '{key}' for "
                                   f"{definition.name}")
            warnings.append(f"ignoring unknown state key '{key}' for "
                            f"{definition.name}")
            continue
        spec, cls = known[key]
        if spec.marshal is not None:
            from_fn = eval_syntax(spec.marshal[1],
                                  definition_scope(definition, cls), ctx)
            inits.append((key, apply_function(from_fn, [raw_value], ctx)))
            continue
        default = None
        if spec.default_syntax is not None:
            default = eval_syntax(spec.default_syntax,
                                  definition_scope(definition, cls), ctx)
        check_state_shape(key, raw_value, default)
        inits.append((key, raw_value))
    return inits, warnings


def definition_scope(definition, cls):
    return cls.env


def serialize_state(ctx, inst):
    """State map of exactly the file-persistent fields, in definition order."""
    out = {}
    for spec, cls in inst.definition.all_state_specs():
        if spec.persistence != "file":
            continue
        value = inst.fields.get(spec.name, VOID)
        if spec.marshal is not None:
            to_fn = eval_syntax(spec.marshal[0], cls.env, ctx)
            value = apply_function(to_fn, [value], ctx)
        out[spec.name] = value_to_state(ctx, value, spec.name)
    return out


def value_to_state(ctx, value, field):
    if isinstance(value, EditorInstance):
        return persist_instance(ctx, value)
    if isinstance(value, FallbackEditor):
        return value.value
    if isinstance(value, list):
        return [value_to_state(ctx, v, field) for v in value]
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise UnserializableValue(
                    f"field '{field}': hash keys must be strings to persist, "
                    f"got {k!r}")
            out[k] = value_to_state(ctx, v, field)
        return out
    if is_state_value(value):
        return value
    raise UnserializableValue(
        f"field '{field}' holds an unserializable value: {value!r} "
        f"(attach a #:marshal hook)")


def persist_instance(ctx, inst):
    if is_fallback(inst):
        return inst.value
    binding = inst.source_binding or EditorBinding(None, inst.definition.name)
    return EditorValue(binding, serialize_state(ctx, inst))


# -- session -------------------------------------------------------------------------


class EditorSlot:
    """One editor literal of the open module and its live instance."""

    __slots__ = ("index", "node", "instance")

    def __init__(self, index, node, instance):
        self.index = index
        self.node = node
        self.instance = instance

    @property
    def editor_id(self):
        return f"e{self.index}"


class DispatchResult:
    def __init__(self):
        self.fields_changed = []     # [(instance id, field name)]
        self.dirty = False           # file-persistent state changed
        self.display_invalidated = False
        self.diagnostics = []
        self.fallback = None         # editor id that fell back, if any

    def to_json(self):
        return {"fields-changed": [list(t) for t in self.fields_changed],
                "state-dirty": self.dirty,
                "display-invalidated": self.display_invalidated,
                "diagnostics": self.diagnostics,
                "fallback": self.fallback}


class Session:
    """A headless edit session over one module file."""

    def __init__(self, kernel, path, budget=None):
        self.kernel = kernel
        self.path = os.path.realpath(path)
        self.budget = budget or kernel.budget
        self.text = None
        self.tree = None
        self.module = None
        self.edit_ns = None
        self.slots = []
        self.focus = None
        self.diagnostics = []
        self.windows = []
        self.changed = set()        # (instance, field) noted during a call
        self.geometry = {}          # editor id -> [(instance, x, y, w, h)]
        self.display = {}           # editor id -> commands

    # -- lifecycle ------------------------------------------------------------

    def open(self):
        with open(self.path, encoding="utf-8") as fh:
            self.text = fh.read()
        self.load_text(self.text)
        return self

    def load_text(self, text):
        self.text = text
        try:
            self.tree = read_module(text, self.kernel.module_id(self.path))
        except IsynthError as e:
            # the file stays viewable as plain text
            self.tree = None
            self.module = None
            self.slots = []
            self.diagnostics = [e.render()]
            return
        self.refresh()

    def refresh(self):
        """(Re)expand the module and re-instantiate every editor from its
        persisted state; session-class state does not survive."""
        self.kernel.forget_module(self.path)
        self.diagnostics = []
        try:
            self.module = self.kernel.expand_text(self.text, self.path,
                                                  tolerant=True)
        except IsynthError as e:
            self.module = None
            self.diagnostics.append(e.render())
            self.slots = []
            return
        self.diagnostics.extend(d.render() for d in self.module.diagnostics)
        self.windows = []
        try:
            self.edit_ns = self.kernel.edit_namespace(self.module, session=self)
        except IsynthError as e:
            self.edit_ns = None
            self.diagnostics.append(e.render())
        nodes = editor_nodes(self.tree)
        self.slots = []
        for i, node in enumerate(nodes):
            inst = self.instantiate(node.value)
            slot = EditorSlot(i, node, inst)
            self.slots.append(slot)
            self.assign_ids(slot)
        self.draw_all()

    def assign_ids(self, slot):
        def walk(inst, ident):
            inst.instance_id = ident
            inst.session = self
            for i, c in enumerate(inst.children):
                walk(c, f"{ident}.{i}")
        walk(slot.instance, slot.editor_id)

    # -- plumbing ---------------------------------------------------------------

    def context(self, budget=None):
        caps = Capabilities(fs_read_root=self.kernel.root)
        return EvalContext(self.kernel, phase="edit",
                           budget=budget or self.budget, caps=caps,
                           session=self)

    def note_change(self, inst, field):
        self.changed.add((inst, field))

    def set_focus(self, inst):
        self.focus = inst

    def find_instance(self, ident):
        for slot in self.slots:
            for inst in slot.instance.walk():
                if inst.instance_id == ident:
                    return inst
        return None

    def slot_of(self, inst):
        top = ident_root(inst.instance_id)
        for slot in self.slots:
            if slot.editor_id == top:
                return slot
        return None

    # -- the four runtime operations -----------------------------------------------

    def instantiate(self, ev):
        """EditorValue -> live instance, or a FallbackEditor on any failure."""
        ctx = self.context()
        try:
            definition = self.kernel.find_definition(
                ev.binding, self.module, session=self, edit_ns=self.edit_ns)
            inits, warnings = deserialize_state(
                self.kernel, ctx, ev.state, definition,
                strict=self.kernel.strict_state)
            self.diagnostics.extend(warnings)
            inst = instantiate_definition(ctx, definition, inits)
            inst.source_binding = ev.binding
            inst.session = self
            return inst
        except (IsynthError, RecursionError) as e:
            msg = e.render() if isinstance(e, IsynthError) else \
                "instantiation recursed too deep"
            fb = FallbackEditor(ev, msg)
            fb.session = self
            return fb

    def draw_instance(self, slot):
        inst = slot.instance
        if is_fallback(inst):
            commands, geometry = inst.draw_display_list()
            self.display[slot.editor_id] = commands
            self.geometry[slot.editor_id] = geometry
            return commands
        ctx = self.context()
        builder = DisplayListBuilder()
        try:
            size = send_instance(ctx, inst, "preferred-size", [])
            w, h = _size_pair(size)
            builder.push(0, 0, w, h, inst)
            send_instance(ctx, inst, "draw", [make_dc(builder, ctx)])
            builder.pop()
            commands = builder.finish()
        except (IsynthError, RecursionError) as e:
            return self._substitute_fallback(slot, e)
        self.display[slot.editor_id] = commands
        self.geometry[slot.editor_id] = builder.geometry
        return commands

    def draw_all(self):
        for slot in self.slots:
            self.draw_instance(slot)

    def _substitute_fallback(self, slot, err):
        ctx = self.context()
        try:
            value = persist_instance(ctx, slot.instance)
        except IsynthError:
            value = EditorValue(
                slot.instance.source_binding
                or EditorBinding(None, slot.instance.definition.name), {})
        msg = err.render() if isinstance(err, IsynthError) else str(err)
        fb = FallbackEditor(value, msg)
        fb.session = self
        slot.instance = fb
        self.assign_ids(slot)
        commands, geometry = fb.draw_display_list()
        self.display[slot.editor_id] = commands
        self.geometry[slot.editor_id] = geometry
        return commands

    def dispatch(self, event):
        """Route one UI event, run handlers transactionally, sync state."""
        result = DispatchResult()
        target_id = event.get("target")
        target = self.find_instance(target_id) if target_id else None
        if target is None:
            raise EvaluationError(f"no such editor instance: {target_id}")
        slot = self.slot_of(target)
        if is_fallback(target):
            result.diagnostics.append(target.diagnostic)
            result.fallback = slot.editor_id
            return result
        receiver = self.route(slot, target, event)
        if receiver is None:
            return result
        snapshot = self._snapshot()
        persisted_before = self._persisted_values()
        self.changed = set()
        ctx = self.context()
        try:
            send_instance(ctx, receiver, "on-event", [event_to_hash(event)])
        except SyntaxDiagnostic as e:
            result.diagnostics.append(e.message)
        except (SandboxViolation, RecursionError) as e:
            self._restore(snapshot)
            msg = e.message if isinstance(e, SandboxViolation) else \
                "event handler recursed too deep"
            self._substitute_fallback(slot, SandboxViolation(msg))
            result.fallback = slot.editor_id
            result.diagnostics.append(msg)
            result.display_invalidated = True
            return result
        except IsynthError as e:
            self._restore(snapshot)
            result.diagnostics.append(e.render())
            return result
        changed = self._diff(snapshot)
        result.fields_changed = [(i.instance_id, f) for i, f in changed]
        result.display_invalidated = bool(changed)
        # dirty means the persisted form of some editor actually changed
        result.dirty = persisted_before != self._persisted_values()
        if result.dirty:
            for inst, _ in changed:
                inst.dirty = True
            self.sync_from_instances()
            result.display_invalidated = True
        elif changed:
            self.draw_all()
        return result

    def _persisted_values(self):
        ctx = self.context()
        out = []
        for slot in self.slots:
            try:
                out.append(persist_instance(ctx, slot.instance))
            except IsynthError:
                out.append(None)
        return out

    def route(self, slot, target, event):
        kind = event.get("kind")
        if kind in ("mouse-down", "mouse-up", "mouse-move"):
            x, y = event.get("x", 0), event.get("y", 0)
            hit = self.hit_test(slot, x, y, within=target)
            return hit or target
        if kind in ("key", "text-input"):
            if self.focus is not None and self._within(self.focus, target):
                return self.focus
            return target
        if kind in ("focus-in",):
            self.set_focus(target)
            return target
        if kind in ("focus-out",):
            if self.focus is target:
                self.focus = None
            return target
        return target

    def _within(self, inst, ancestor):
        while inst is not None:
            if inst is ancestor:
                return True
            inst = inst.parent
        return False

    def hit_test(self, slot, x, y, within=None):
        """Deepest instance whose box contains (x, y); last drawn wins."""
        best = None
        for inst, gx, gy, w, h in self.geometry.get(slot.editor_id, []):
            if gx <= x < gx + w and gy <= y < gy + h:
                if within is None or self._within(inst, within):
                    best = inst
        return best

    def _snapshot(self):
        snap = {}
        for slot in self.slots:
            for inst in slot.instance.walk():
                if is_fallback(inst):
                    continue
                snap[id(inst)] = (inst, dict(inst.fields), list(inst.children),
                                  inst.dirty)
        return snap

    def _restore(self, snapshot):
        for inst, fields, children, dirty in snapshot.values():
            inst.fields.clear()
            inst.fields.update(fields)
            inst.children = children
            inst.dirty = dirty

    def _diff(self, snapshot):
        changed = []
        for slot in self.slots:
            for inst in slot.instance.walk():
                if is_fallback(inst):
                    continue
                old = snapshot.get(id(inst))
                if old is None:
                    continue  # created during the call; fields are "new", not changes
                _, old_fields, old_children, _ = old
                for name, value in inst.fields.items():
                    if name == "this":
                        continue
                    if name not in old_fields or old_fields[name] is not value:
                        changed.append((inst, name))
                if old_children != inst.children:
                    changed.append((inst, "%children"))
        return changed

    # -- persistence ------------------------------------------------------------------

    def persist_slot(self, slot):
        ctx = self.context()
        return persist_instance(ctx, slot.instance)

    def sync_from_instances(self):
        """Write persisted editor state back into the tree, then rebuild the
        whole edit side from text (definitions may have changed)."""
        values = [self.persist_slot(slot) for slot in self.slots]
        self.tree = replace_editor_values(self.tree, values)
        self.text = write_module(self.tree)
        focus_id = self.focus.instance_id if self.focus is not None else None
        self.refresh()
        if focus_id is not None:
            self.focus = self.find_instance(focus_id)

    def module_text(self):
        values = [self.persist_slot(slot) for slot in self.slots]
        tree = replace_editor_values(self.tree, values)
        return write_module(tree)

    def save(self):
        text = self.module_text()
        with open(self.path, "w", encoding="utf-8") as fh:
            fh.write(text)
        self.load_text(text)
        return text

    def recompose(self, segments):
        """Rebuild the module from client text segments interleaved with the
        live editors' persisted blocks (textarea-grade text editing)."""
        from .printer import pp_editor
        parts = []
        for i, slot in enumerate(self.slots):
            parts.append(segments[i])
            value = self.persist_slot(slot)
            parts.append(pp_editor(value, 0))
        parts.append(segments[-1])
        text = "".join(parts)
        read_module(text, self.kernel.module_id(self.path))  # must re-parse
        self.load_text(text)

    def reinitialize(self, slot, binding=None, state=None):
        """Another attempt at starting a fallback editor, with edited values."""
        inst = slot.instance
        base = inst.value if is_fallback(inst) else self.persist_slot(slot)
        new_value = EditorValue(binding or base.binding,
                                state if state is not None else base.state)
        replacement = self.instantiate(new_value)
        slot.instance = replacement
        self.assign_ids(slot)
        self.draw_instance(slot)
        return replacement

    # -- descriptors for the protocol ---------------------------------------------------

    def descriptors(self):
        out = []
        for slot in self.slots:
            node = slot.node
            out.append({
                "id": slot.editor_id,
                "span": [node.span.start, node.span.end],
                "fallback": is_fallback(slot.instance),
                "definition": (slot.instance.value.binding.name
                               if is_fallback(slot.instance)
                               else slot.instance.definition.name),
                "display": self.display.get(slot.editor_id, []),
            })
        return out


def _size_pair(size):
    if (isinstance(size, list) and len(size) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in size)):
        return size[0], size[1]
    raise EvaluationError("preferred-size must return (list width height)")


def ident_root(ident):
    return ident.split(".")[0] if ident else ident


def editor_nodes(tree):
    """Every editor literal in the module, in textual order."""
    out = []

    def walk(stx):
        if stx.kind == EDITOR:
            out.append(stx)
            return
        for c in stx.children:
            walk(c)

    for form in tree.children:
        walk(form)
    return out


def replace_editor_values(tree, values):
    """Replace editor payloads in textual order; spans untouched."""
    it = iter(values)

    def walk(stx):
        if stx.kind == EDITOR:
            return Syntax(EDITOR, next(it), (), stx.span, stx.scopes)
        if not stx.children:
            return stx
        return Syntax(stx.kind, stx.value, tuple(walk(c) for c in stx.children),
                      stx.span, stx.scopes)

    return Syntax(tree.kind, tree.value, tuple(walk(f) for f in tree.children),
                  tree.span, tree.scopes)


def event_to_hash(event):
    out = {}
    for key, value in event.items():
        if key in ("kind",):
            out[Symbol(key)] = Symbol(str(value))
        elif key in ("x", "y"):
            out[Symbol(key)] = value
        else:
            out[Symbol(key)] = value
    return out


def event_from_json(obj):
    kinds = {"mouse-down", "mouse-up", "mouse-move", "key", "text-input",
             "focus-in", "focus-out"}
    kind = obj.get("kind")
    if kind not in kinds:
        raise EvaluationError(f"unknown event kind: {kind!r}")
    return obj


def run_event_script(session, lines):
    """Apply a JSON-lines event script; a final persist directive returns
    the re-persisted module text."""
    for i, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise EvaluationError(f"event script line {i}: {e}") from None
        if obj.get("op") == "persist":
            return session.module_text()
        if obj.get("op") == "reinitialize":
            target = obj.get("target")
            slot = next((s for s in session.slots
                         if s.editor_id == target), None)
            if slot is None:
                raise EvaluationError(f"no such editor instance: {target}")
            binding = None
            if "binding" in obj:
                mp, name = obj["binding"]
                binding = EditorBinding(mp, name)
            state = None
            if "state" in obj:
                state = {k: state_from_json(v)
                         for k, v in obj["state"].items()}
            session.reinitialize(slot, binding, state)
            continue
        session.dispatch(event_from_json(obj))
    return session.module_text()
