import json
import shutil
import socket
import threading

import pytest

from isynth.protocol import ProtocolHandler
from isynth.server import make_tcp_server, make_ws_server, ws_accept_key
from tests.conftest import SAMPLES


@pytest.fixture
def ws_dir(tmp_path):
    dest = tmp_path / "proj"
    shutil.copytree(SAMPLES, dest)
    return dest


@pytest.fixture
def handler(ws_dir):
    return ProtocolHandler(str(ws_dir))


def req(handler, op, seq, session=None, payload=None, v=1):
    msg = {"v": v, "op": op, "seq": seq}
    if session:
        msg["session"] = session
    if payload is not None:
        msg["payload"] = payload
    return handler.handle_line(json.dumps(msg))


def open_session(handler, path="simple.rkt"):
    out = req(handler, "open", 1, payload={"path": path})
    assert out[0]["ok"], out[0]
    return out[0]["session"], out[0]


def test_open_lists_editor_descriptors(handler):
    sid, msg = open_session(handler)
    editors = msg["payload"]["editors"]
    assert [e["id"] for e in editors] == ["e0"]
    assert editors[0]["definition"] == "simple$"
    span = editors[0]["span"]
    text = msg["payload"]["text"]
    assert text[span[0]:span[1]].startswith("#editor")


def test_open_editor_free_module(handler):
    sid, msg = open_session(handler, "inc.rkt")
    assert msg["payload"]["editors"] == []


def test_open_unparsable_file_still_returns_text(ws_dir, handler):
    (ws_dir / "broken.rkt").write_text("(oops\n")
    out = req(handler, "open", 1, payload={"path": "broken.rkt"})
    assert out[0]["ok"]
    payload = out[0]["payload"]
    assert payload["text"] == "(oops\n"
    assert payload["editors"] == []
    assert any("not closed" in d for d in payload["diagnostics"])


def test_open_missing_file_is_error(handler):
    out = req(handler, "open", 1, payload={"path": "missing.rkt"})
    assert not out[0]["ok"]
    assert "missing.rkt" in out[0]["error"]["message"]


def test_version_field_mandatory(handler):
    out = req(handler, "open", 1, payload={"path": "simple.rkt"}, v=None)
    assert not out[0]["ok"]
    assert "version" in out[0]["error"]["message"]


def test_seq_order_enforced(handler):
    sid, _ = open_session(handler)
    ok = req(handler, "diagnostics", 5, session=sid)
    assert ok[0]["ok"]
    stale = req(handler, "diagnostics", 5, session=sid)
    assert not stale[0]["ok"]
    assert "out of order" in stale[0]["error"]["message"]


def test_event_to_closed_session_is_error(handler):
    sid, _ = open_session(handler)
    req(handler, "close", 2, session=sid)
    out = req(handler, "event", 3, session=sid,
              payload={"kind": "key", "target": "e0", "key": "x"})
    assert not out[0]["ok"]
    assert "no such session" in out[0]["error"]["message"]


def test_insert_editor_local_definition(handler):
    sid, msg = open_session(handler)
    text = msg["payload"]["text"]
    out = req(handler, "insert-editor", 2, session=sid,
              payload={"position": len(text), "name": "simple$"})
    assert out[0]["ok"]
    descriptor = out[0]["payload"]["editor"]
    assert descriptor is not None
    assert 'binding: [null, "simple$"]' in out[0]["payload"]["text"]


def test_insert_editor_prelude_definition_default_state(handler):
    sid, msg = open_session(handler, "inc.rkt")
    out = req(handler, "insert-editor", 2, session=sid,
              payload={"position": 0, "name": "tsuro-board$"})
    # board$ lives in another module: not visible here
    assert not out[0]["ok"]
    out = req(handler, "insert-editor", 3, session=sid,
              payload={"position": 0, "name": "text-field$"})
    assert out[0]["ok"]
    assert out[0]["payload"]["editor"]["definition"] == "text-field$"


def test_insert_tile_defaults_to_empty_pairs(ws_dir, handler):
    sid, msg = open_session(handler, "tsuro-tile.rkt")
    out = req(handler, "insert-editor", 2, session=sid,
              payload={"position": len(msg["payload"]["text"]),
                       "name": "tsuro-tile$"})
    assert out[0]["ok"], out[0]
    assert 'state: { pairs: {} }' in out[0]["payload"]["text"]
    descriptor = out[0]["payload"]["editor"]
    assert descriptor["definition"] == "tsuro-tile$"
    assert not descriptor["fallback"]


def test_insert_unknown_name_is_error(handler):
    sid, _ = open_session(handler)
    out = req(handler, "insert-editor", 2, session=sid,
              payload={"position": 0, "name": "ghost$"})
    assert not out[0]["ok"]


def test_event_updates_display(ws_dir, handler):
    sid, _ = open_session(handler, "tile-demo.rkt")
    out = req(handler, "event", 2, session=sid,
              payload={"kind": "text-input", "target": "e0.1.0.1",
                       "text": "G"})
    assert out[0]["ok"]
    result = out[0]["payload"]["result"]
    assert result["state-dirty"]
    # dirtying state also pushes an unsolicited display-update
    assert out[1]["op"] == "display-update"
    assert "seq" not in out[1]
    texts = [c.get("text") for e in out[1]["payload"]["editors"]
             for c in e["display"]]
    assert "G" in texts


def test_save_roundtrip_byte_identity(ws_dir, handler):
    before = (ws_dir / "simple.rkt").read_text()
    sid, _ = open_session(handler)
    out = req(handler, "save", 2, session=sid)
    assert out[0]["ok"]
    after = (ws_dir / "simple.rkt").read_text()
    assert after == before
    assert out[0]["payload"]["bytes"] == len(before.encode())


def test_save_after_connect_writes_state(ws_dir, handler):
    sid, _ = open_session(handler, "tile-demo.rkt")
    req(handler, "event", 2, session=sid,
        payload={"kind": "text-input", "target": "e0.1.0.1", "text": "G"})
    out = req(handler, "save", 3, session=sid)
    assert out[0]["ok"]
    text = (ws_dir / "tile-demo.rkt").read_text()
    assert 'pairs: { G: "A", A: "G" }' in text


def test_descriptor_spans_cover_editor_blocks_after_save(ws_dir, handler):
    sid, _ = open_session(handler, "tile-demo.rkt")
    req(handler, "event", 2, session=sid,
        payload={"kind": "text-input", "target": "e0.1.0.1", "text": "G"})
    out = req(handler, "save", 3, session=sid)
    text = out[0]["payload"]["text"]
    for d in out[0]["payload"]["editors"]:
        start, end = d["span"]
        block = text[start:end]
        assert block.startswith("#editor")
        assert block.rstrip().endswith("}")


def test_save_with_client_text_segments(ws_dir, handler):
    sid, msg = open_session(handler, "tile-demo.rkt")
    editors = msg["payload"]["editors"]
    text = msg["payload"]["text"]
    start, end = editors[0]["span"]
    before, after = text[:start], text[end:]
    out = req(handler, "save", 2, session=sid,
              payload={"segments": [before + "(define extra 7)\n\n", after]})
    assert out[0]["ok"], out[0]
    saved = (ws_dir / "tile-demo.rkt").read_text()
    assert "(define extra 7)" in saved
    assert "#editor" in saved  # the widget block survived the text edit
    assert out[0]["payload"]["text"] == saved


def test_save_with_wrong_segment_count_is_error(handler):
    sid, _ = open_session(handler, "tile-demo.rkt")
    out = req(handler, "save", 2, session=sid, payload={"segments": ["x"] * 5})
    assert not out[0]["ok"]
    assert "segments" in out[0]["error"]["message"]


def test_reinitialize_event_fixes_fallback(ws_dir, handler):
    (ws_dir / "broken-binding.rkt").write_text(
        '(define b\n  #editor { binding: ["lib/form-bilder.rkt", '
        '"form-builder$"], state: { name: "person$", keys: ["Name", "Age"] } })\n')
    sid, msg = open_session(handler, "broken-binding.rkt")
    assert msg["payload"]["editors"][0]["fallback"]
    out = req(handler, "event", 2, session=sid,
              payload={"kind": "reinitialize", "target": "e0",
                       "binding": ["lib/form-builder.rkt", "form-builder$"]})
    assert out[0]["ok"]
    assert out[0]["payload"]["editors"][0]["fallback"] is False


def test_two_sessions_are_independent(ws_dir, handler):
    sid1, _ = open_session(handler, "tile-demo.rkt")
    sid2, msg2 = open_session(handler, "simple.rkt")
    assert sid1 != sid2
    out = req(handler, "event", 2, session=sid1,
              payload={"kind": "text-input", "target": "e0.1.0.1",
                       "text": "G"})
    assert out[0]["ok"]
    diag = req(handler, "diagnostics", 2, session=sid2)
    assert diag[0]["ok"]
    assert diag[0]["payload"]["diagnostics"] == []


def test_interleaved_sessions_keep_state(ws_dir, handler):
    sid1, _ = open_session(handler, "tile-demo.rkt")
    sid2, _ = open_session(handler, "student-course.rkt")
    req(handler, "event", 2, session=sid1,
        payload={"kind": "text-input", "target": "e0.1.0.1", "text": "G"})
    req(handler, "event", 2, session=sid2,
        payload={"kind": "text-input", "target": "e1.0.1", "text": "7"})
    save1 = req(handler, "save", 3, session=sid1)
    save2 = req(handler, "save", 3, session=sid2)
    assert 'pairs: { G: "A", A: "G" }' in save1[0]["payload"]["text"]
    assert '"Student ID": "427"' in save2[0]["payload"]["text"]


def test_identical_event_sequences_give_identical_display_lists(ws_dir):
    """Server-authoritative rendering: any client sees the same pixels."""
    events = [{"kind": "text-input", "target": "e0.1.0.1", "text": "G"},
              {"kind": "text-input", "target": "e0.1.2.1", "text": "D"}]
    displays = []
    for _ in range(2):
        handler = ProtocolHandler(str(ws_dir))
        sid, _ = open_session(handler, "tile-demo.rkt")
        reply = None
        for i, ev in enumerate(events, start=2):
            reply = req(handler, "event", i, session=sid, payload=dict(ev))
        displays.append(json.dumps(reply[0]["payload"]["editors"],
                                   sort_keys=True))
    assert displays[0] == displays[1]


def test_editor_list_includes_local_and_prelude(handler):
    sid, _ = open_session(handler)
    out = req(handler, "editor-list", 2, session=sid)
    names = {d["name"] for d in out[0]["payload"]["definitions"]}
    assert "simple$" in names
    assert "text-field$" in names
    assert "text$$" not in names  # mixins are not insertable


def test_expand_op_returns_expansion(handler):
    sid, _ = open_session(handler)
    out = req(handler, "expand", 2, session=sid)
    assert out[0]["ok"]
    assert "(void)" in out[0]["payload"]["text"]


# -- transports -----------------------------------------------------------------


def test_tcp_transport(ws_dir):
    handler = ProtocolHandler(str(ws_dir))
    server = make_tcp_server(handler, 0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            f = sock.makefile("rw", encoding="utf-8")
            f.write(json.dumps({"v": 1, "op": "open", "seq": 1,
                                "payload": {"path": "simple.rkt"}}) + "\n")
            f.flush()
            reply = json.loads(f.readline())
            assert reply["ok"]
            assert reply["payload"]["editors"][0]["id"] == "e0"
    finally:
        server.shutdown()


def test_ws_accept_key_rfc_example():
    assert ws_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == \
        "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="


def test_websocket_bridge(ws_dir):
    handler = ProtocolHandler(str(ws_dir))
    server = make_ws_server(handler, 0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            handshake = ("GET / HTTP/1.1\r\nHost: localhost\r\n"
                         "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                         "Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
                         "Sec-WebSocket-Version: 13\r\n\r\n")
            sock.sendall(handshake.encode())
            response = b""
            while b"\r\n\r\n" not in response:
                response += sock.recv(4096)
            assert b"101" in response.split(b"\r\n")[0]
            assert b"s3pPLMBiTxaQ9kYGzzhZRbK+xOo=" in response
            payload = json.dumps({"v": 1, "op": "open", "seq": 1,
                                  "payload": {"path": "simple.rkt"}}).encode()
            mask = b"\x01\x02\x03\x04"
            masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            frame = bytes([0x81])
            assert len(payload) < 65536
            if len(payload) < 126:
                frame += bytes([0x80 | len(payload)])
            else:
                frame += bytes([0x80 | 126]) + len(payload).to_bytes(2, "big")
            frame += mask + masked
            sock.sendall(frame)
            head = sock.recv(2)
            assert head[0] & 0x0F == 1
            length = head[1] & 0x7F
            if length == 126:
                length = int.from_bytes(sock.recv(2), "big")
            data = b""
            while len(data) < length:
                data += sock.recv(length - len(data))
            reply = json.loads(data)
            assert reply["ok"] and reply["payload"]["editors"]
    finally:
        server.shutdown()
