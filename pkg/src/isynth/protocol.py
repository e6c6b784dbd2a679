"""Session protocol: the wire contract between the kernel and any frontend.

Messages are JSON objects, one per line.  Every client request carries a
monotonically increasing seq and receives exactly one response (ok or error)
with the same seq; display-update is the only unsolicited server message.
The full schema is documented in docs/protocol.md; the version field "v": 1
is mandatory in both directions.
"""

import json
import os
import threading

from .editor_form import EditorBinding, state_from_json
from .errors import IsynthError
from .kernel import Kernel
from .runtime import Session, event_from_json, ident_root

PROTOCOL_VERSION = 1


class ProtocolError(Exception):
    def __init__(self, message, where=None):
        super().__init__(message)
        self.message = message
        self.where = where


class OpenSession:
    def __init__(self, sid, session):
        self.sid = sid
        self.session = session
        self.last_seq = 0
        self.lock = threading.Lock()


class ProtocolHandler:
    """Transport-independent protocol endpoint over one kernel root."""

    def __init__(self, root, strict_state=False, budget=None):
        self.root = os.path.realpath(root)
        self.strict_state = strict_state
        self.budget = budget
        self.sessions = {}
        self.counter = 0
        self.lock = threading.Lock()

    # -- plumbing ---------------------------------------------------------

    def handle_line(self, line):
        """One request line -> [response, unsolicited...] message dicts."""
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            return [error_message(None, None, None, f"bad JSON: {e}")]
        op = msg.get("op")
        seq = msg.get("seq")
        sid = msg.get("session")
        if msg.get("v") != PROTOCOL_VERSION:
            return [error_message(op, seq, sid, "missing or unsupported "
                                                "protocol version (want v:1)")]
        if not isinstance(seq, int):
            return [error_message(op, seq, sid, "seq must be an integer")]
        handler = getattr(self, "op_" + str(op).replace("-", "_"), None)
        if handler is None:
            return [error_message(op, seq, sid, f"unknown op: {op!r}")]
        try:
            if op == "open":
                return handler(msg)
            entry = self.session_for(msg)
            with entry.lock:
                if seq <= entry.last_seq:
                    return [error_message(
                        op, seq, sid,
                        f"seq {seq} out of order (last was {entry.last_seq})")]
                entry.last_seq = seq
                return handler(entry, msg)
        except ProtocolError as e:
            return [error_message(op, seq, sid, e.message, e.where)]
        except IsynthError as e:
            return [error_message(op, seq, sid, e.render())]

    def session_for(self, msg):
        sid = msg.get("session")
        entry = self.sessions.get(sid)
        if entry is None:
            raise ProtocolError(f"no such session: {sid!r}")
        return entry

    def payload(self, msg, *required):
        payload = msg.get("payload")
        if not isinstance(payload, dict):
            raise ProtocolError("payload object required")
        for field in required:
            if field not in payload:
                raise ProtocolError(f"payload field {field!r} required")
        return payload

    # -- operations ---------------------------------------------------------

    def op_open(self, msg):
        payload = self.payload(msg, "path")
        path = os.path.realpath(os.path.join(self.root, payload["path"]))
        if not (path.startswith(self.root + os.sep) or path == self.root):
            raise ProtocolError("path escapes the project root")
        if not os.path.isfile(path):
            raise ProtocolError(f"no such file: {payload['path']}")
        kernel = Kernel(root=self.root, strict_state=self.strict_state,
                        budget=self.budget)
        session = Session(kernel, path).open()
        with self.lock:
            self.counter += 1
            sid = f"s{self.counter}"
        entry = OpenSession(sid, session)
        entry.last_seq = msg["seq"]
        self.sessions[sid] = entry
        return [ok_message("open", msg["seq"], sid, {
            "text": session.text,
            "editors": session.descriptors(),
            "diagnostics": session.diagnostics,
        })]

    def op_close(self, entry, msg):
        self.sessions.pop(entry.sid, None)
        return [ok_message("close", msg["seq"], entry.sid, {})]

    def op_editor_list(self, entry, msg):
        session = entry.session
        out = []
        seen = set()
        modules = []
        if session.module is not None:
            modules.append((session.module, None))
        if session.kernel.prelude_module is not None:
            modules.append((session.kernel.prelude_module, None))
        for module, _ in modules:
            for name, meta in module.editor_defs.items():
                if name in seen or name.endswith("$$"):
                    continue
                seen.add(name)
                out.append({
                    "name": name,
                    "base": meta.base_name,
                    "fields": [s.describe() for s in meta.state_specs],
                })
        return [ok_message("editor-list", msg["seq"], entry.sid,
                           {"definitions": out})]

    def op_diagnostics(self, entry, msg):
        return [ok_message("diagnostics", msg["seq"], entry.sid,
                           {"diagnostics": entry.session.diagnostics})]

    def op_event(self, entry, msg):
        payload = self.payload(msg, "kind", "target")
        session = entry.session
        if payload.get("kind") == "reinitialize":
            return self._reinitialize(entry, msg, payload)
        event = event_from_json(payload)
        result = session.dispatch(event)
        messages = [ok_message("event", msg["seq"], entry.sid, {
            "result": result.to_json(),
            "editors": session.descriptors(),
        })]
        if result.dirty:
            messages.append(display_update(entry.sid, session))
        return messages

    def _reinitialize(self, entry, msg, payload):
        session = entry.session
        target = ident_root(payload["target"])
        slot = next((s for s in session.slots if s.editor_id == target), None)
        if slot is None:
            raise ProtocolError(f"no such editor instance: {payload['target']}")
        binding = None
        if payload.get("binding") is not None:
            mp, name = payload["binding"]
            binding = EditorBinding(mp, name)
        state = None
        if payload.get("state") is not None:
            state = {k: state_from_json(v)
                     for k, v in payload["state"].items()}
        session.reinitialize(slot, binding, state)
        return [ok_message("event", msg["seq"], entry.sid, {
            "result": {"reinitialized": target,
                       "fallback": session.slots[slot.index].instance
                       .__class__.__name__ == "FallbackEditor"},
            "editors": session.descriptors(),
        })]

    def op_insert_editor(self, entry, msg):
        payload = self.payload(msg, "position", "name")
        session = entry.session
        name = payload["name"]
        module = session.module
        known = module is not None and name in module.editor_defs
        prelude = session.kernel.prelude_module
        if not known and (prelude is None or name not in prelude.editor_defs):
            raise ProtocolError(f"no editor definition named {name}")
        from .editor_form import EditorValue
        from .printer import write_module
        from .runtime import is_fallback, persist_instance
        from .syntax import EDITOR, Syntax
        value = EditorValue(EditorBinding(None, name), {})
        probe = session.instantiate(value)
        if not is_fallback(probe):
            # bake the declared defaults into the persisted block
            value = persist_instance(session.context(), probe)
        position = payload["position"]
        index = 0
        for i, form in enumerate(session.tree.children):
            if form.span.start <= position:
                index = i + 1
        forms = list(session.tree.children)
        forms.insert(index, Syntax(EDITOR, value))
        session.tree = session.tree.with_children(tuple(forms))
        session.text = write_module(session.tree)
        session.load_text(session.text)
        new_slot = None
        for slot in session.slots:
            if slot.node.value == value:
                new_slot = slot
        descriptor = None
        if new_slot is not None:
            for d in session.descriptors():
                if d["id"] == new_slot.editor_id:
                    descriptor = d
        return [ok_message("insert-editor", msg["seq"], entry.sid, {
            "editor": descriptor,
            "text": session.text,
            "editors": session.descriptors(),
        })]

    def op_save(self, entry, msg):
        session = entry.session
        payload = msg.get("payload") or {}
        segments = payload.get("segments")
        if segments is not None:
            if (not isinstance(segments, list)
                    or len(segments) != len(session.slots) + 1
                    or not all(isinstance(s, str) for s in segments)):
                raise ProtocolError(
                    f"segments must be {len(session.slots) + 1} strings "
                    "interleaving the editor blocks")
            session.recompose(segments)
        text = session.save()
        return [ok_message("save", msg["seq"], entry.sid, {
            "bytes": len(text.encode("utf-8")),
            "text": text,
            "editors": session.descriptors(),
        })]

    def op_expand(self, entry, msg):
        session = entry.session
        kernel = session.kernel
        kernel.forget_module(session.path)
        try:
            module = kernel.expand_text(session.text, session.path)
        except IsynthError as e:
            raise ProtocolError(e.render())
        finally:
            kernel.forget_module(session.path)
        return [ok_message("expand", msg["seq"], entry.sid,
                           {"text": module.render_text()})]


def ok_message(op, seq, sid, payload):
    return {"v": PROTOCOL_VERSION, "op": op, "seq": seq, "session": sid,
            "ok": True, "payload": payload}


def error_message(op, seq, sid, message, where=None):
    err = {"message": message}
    if where:
        err["where"] = where
    return {"v": PROTOCOL_VERSION, "op": op, "seq": seq, "session": sid,
            "ok": False, "error": err}


def display_update(sid, session):
    return {"v": PROTOCOL_VERSION, "op": "display-update", "session": sid,
            "payload": {"editors": session.descriptors()}}
