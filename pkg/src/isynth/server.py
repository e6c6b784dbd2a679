"""Transports for the session protocol: TCP, stdio and a WebSocket bridge.

The wire format is newline-delimited JSON.  The WebSocket bridge speaks the
same messages in text frames so a browser frontend needs no TCP socket.
"""

import base64
import hashlib
import json
import socketserver
import struct
import sys
import threading

from .protocol import ProtocolHandler

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def serve(root, port, stdio=False, ws=False, strict_state=False, budget=None):
    handler = ProtocolHandler(root, strict_state=strict_state, budget=budget)
    if stdio:
        return serve_stdio(handler)
    servers = [make_tcp_server(handler, port)]
    if ws:
        servers.append(make_ws_server(handler, port + 1))
    threads = []
    for srv in servers:
        t = threading.Thread(target=srv.serve_forever, daemon=True)
        t.start()
        threads.append(t)
    host = servers[0].server_address
    print(f"isynth protocol server on tcp port {host[1]}"
          + (f", websocket on {port + 1}" if ws else ""), flush=True)
    try:
        for t in threads:
            t.join()
    except KeyboardInterrupt:
        pass
    return 0


def serve_stdio(handler):
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        for msg in handler.handle_line(line):
            sys.stdout.write(json.dumps(msg) + "\n")
            sys.stdout.flush()
    return 0


def make_tcp_server(handler, port):
    class LineHandler(socketserver.StreamRequestHandler):
        def handle(self):
            while True:
                line = self.rfile.readline()
                if not line:
                    return
                line = line.decode("utf-8").strip()
                if not line:
                    continue
                for msg in handler.handle_line(line):
                    self.wfile.write((json.dumps(msg) + "\n").encode("utf-8"))

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server(("127.0.0.1", port), LineHandler)


# -- minimal WebSocket endpoint (RFC 6455, text frames only) -----------------


def ws_accept_key(key):
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_read_frame(rfile):
    head = rfile.read(2)
    if len(head) < 2:
        return None, None
    b1, b2 = head
    opcode = b1 & 0x0F
    masked = b2 & 0x80
    length = b2 & 0x7F
    if length == 126:
        length = struct.unpack(">H", rfile.read(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", rfile.read(8))[0]
    mask = rfile.read(4) if masked else None
    data = rfile.read(length)
    if mask:
        data = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
    return opcode, data


def ws_write_frame(wfile, opcode, data):
    length = len(data)
    head = bytes([0x80 | opcode])
    if length < 126:
        head += bytes([length])
    elif length < 1 << 16:
        head += bytes([126]) + struct.pack(">H", length)
    else:
        head += bytes([127]) + struct.pack(">Q", length)
    wfile.write(head + data)
    wfile.flush()


def make_ws_server(handler, port):
    class WsHandler(socketserver.StreamRequestHandler):
        def handle(self):
            if not self._handshake():
                return
            while True:
                try:
                    opcode, data = ws_read_frame(self.rfile)
                except (OSError, struct.error):
                    return
                if opcode is None or opcode == 0x8:
                    return
                if opcode == 0x9:  # ping
                    ws_write_frame(self.wfile, 0xA, data)
                    continue
                if opcode != 0x1:
                    continue
                line = data.decode("utf-8").strip()
                if not line:
                    continue
                for msg in handler.handle_line(line):
                    ws_write_frame(self.wfile, 0x1,
                                   json.dumps(msg).encode("utf-8"))

        def _handshake(self):
            request = b""
            while b"\r\n\r\n" not in request:
                chunk = self.rfile.readline()
                if not chunk:
                    return False
                request += chunk
            headers = {}
            for raw in request.decode("latin-1").split("\r\n")[1:]:
                if ":" in raw:
                    k, v = raw.split(":", 1)
                    headers[k.strip().lower()] = v.strip()
            key = headers.get("sec-websocket-key")
            if key is None:
                self.wfile.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
                return False
            response = (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {ws_accept_key(key)}\r\n\r\n")
            self.wfile.write(response.encode("latin-1"))
            return True

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server(("127.0.0.1", port), WsHandler)
