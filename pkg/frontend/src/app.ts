// Browser IDE: a code buffer whose editor regions are live canvases fed by
// server display lists. The frontend holds no authoritative editor state;
// everything re-renders from descriptors.

import { absoluteOffset, Segment, segmentBuffer } from "./buffer.js";
import { displaySize, MalformedCommand, paintDisplayList } from "./display.js";
import { keyboardEvent, mouseEvent } from "./events.js";
import { Descriptor, ProtocolClient, webSocketTransport } from "./protocol.js";

const $ = (id: string) => document.getElementById(id)!;

class BufferView {
  segments: Segment[] = [];
  canvases = new Map<string, HTMLCanvasElement>();
  focusedEditor: string | null = null;
  lastCaret = 0;

  constructor(private client: ProtocolClient,
              private container: HTMLElement,
              private status: HTMLElement) {}

  render(text: string, editors: Descriptor[]): void {
    this.segments = segmentBuffer(text, editors);
    this.container.textContent = "";
    this.canvases.clear();
    this.segments.forEach((segment, index) => {
      if (segment.kind === "text") {
        this.container.appendChild(this.textArea(segment, index));
      } else {
        const editor = editors.find((e) => e.id === segment.id)!;
        this.container.appendChild(this.widget(editor));
      }
    });
  }

  update(editors: Descriptor[]): void {
    for (const editor of editors) {
      const canvas = this.canvases.get(editor.id);
      if (canvas) this.paint(canvas, editor);
    }
  }

  currentSegments(): string[] {
    return this.segments.filter((s) => s.kind === "text").map((s, i) => {
      const area = this.container.querySelector<HTMLTextAreaElement>(
        `textarea[data-segment="${(s as { start: number }).start}"]`);
      return area ? area.value : (s as { text: string }).text;
    });
  }

  caretOffset(): number {
    return this.lastCaret;
  }

  private textArea(segment: Segment & { kind: "text" },
                   index: number): HTMLTextAreaElement {
    const area = document.createElement("textarea");
    area.value = segment.text;
    area.rows = Math.max(1, segment.text.split("\n").length);
    area.dataset.segment = String(segment.start);
    area.addEventListener("focus", () => {
      // plain text caret: widget focus is released, no message is sent
      this.focusedEditor = null;
    });
    area.addEventListener("keyup", () => {
      this.lastCaret = absoluteOffset(this.segments, index,
                                      area.selectionStart ?? 0);
    });
    area.addEventListener("click", () => {
      this.lastCaret = absoluteOffset(this.segments, index,
                                      area.selectionStart ?? 0);
    });
    return area;
  }

  private widget(editor: Descriptor): HTMLElement {
    const holder = document.createElement("div");
    holder.className = "widget" + (editor.fallback ? " fallback" : "");
    const canvas = document.createElement("canvas");
    canvas.tabIndex = 0;
    canvas.title = editor.definition;
    this.canvases.set(editor.id, canvas);
    this.paint(canvas, editor);
    canvas.addEventListener("mousedown", (ev) => {
      canvas.focus();
      this.focusedEditor = editor.id;
      const box = canvas.getBoundingClientRect();
      this.send(mouseEvent("mouse-down", editor.id,
                           ev.clientX - box.left, ev.clientY - box.top));
    });
    canvas.addEventListener("keydown", (ev) => {
      if (this.focusedEditor !== editor.id) return;
      const payload = keyboardEvent(editor.id, ev.key);
      if (payload) {
        ev.preventDefault();
        this.send(payload);
      }
    });
    holder.appendChild(canvas);
    return holder;
  }

  private paint(canvas: HTMLCanvasElement, editor: Descriptor): void {
    const size = displaySize(editor.display);
    canvas.width = size.w;
    canvas.height = size.h;
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    try {
      paintDisplayList(ctx, editor.display);
    } catch (e) {
      if (e instanceof MalformedCommand) {
        // error badge; the buffer stays intact
        ctx.fillStyle = "#fee";
        ctx.fillRect(0, 0, canvas.width, canvas.height);
        ctx.fillStyle = "#a00";
        ctx.fillText("render error", 4, 14);
        this.status.textContent = `display error in ${editor.id}: ${e.message}`;
        return;
      }
      throw e;
    }
  }

  private send(payload: object): void {
    this.client.request("event", payload).then((reply) => {
      this.update(reply.payload.editors);
      const diags = reply.payload.result?.diagnostics ?? [];
      this.status.textContent = diags.length ? diags.join(" | ") : "";
    }).catch((e) => {
      this.status.textContent = String(e);
    });
  }
}

async function boot(): Promise<void> {
  const status = $("status");
  const port = new URLSearchParams(location.search).get("port") ?? "7879";
  let client: ProtocolClient;
  try {
    const transport = await webSocketTransport(`ws://${location.hostname}:${port}`);
    client = new ProtocolClient(transport);
  } catch (e) {
    status.textContent = `cannot reach the kernel: ${e}. ` +
      "Start it with: isynth serve --root <project> --ws";
    return;
  }
  const view = new BufferView(client, $("buffer"), status);
  client.displayHandler = (editors) => view.update(editors);

  const openFile = async () => {
    const path = ($("path") as HTMLInputElement).value;
    try {
      const reply = await client.open(path);
      view.render(reply.payload.text, reply.payload.editors);
      status.textContent = (reply.payload.diagnostics ?? []).join(" | ");
      const list = await client.request("editor-list");
      const palette = $("palette") as HTMLSelectElement;
      palette.textContent = "";
      for (const d of list.payload.definitions) {
        const option = document.createElement("option");
        option.value = d.name;
        option.textContent = d.name;
        palette.appendChild(option);
      }
    } catch (e) {
      status.textContent = String(e);
    }
  };

  $("open").addEventListener("click", openFile);
  $("insert").addEventListener("click", async () => {
    const name = ($("palette") as HTMLSelectElement).value;
    if (!name) return;
    try {
      const reply = await client.request("insert-editor",
        { name, position: view.caretOffset() });
      view.render(reply.payload.text, reply.payload.editors);
    } catch (e) {
      status.textContent = String(e);
    }
  });
  $("save").addEventListener("click", async () => {
    try {
      const reply = await client.request("save",
        { segments: view.currentSegments() });
      view.render(reply.payload.text, reply.payload.editors);
      status.textContent = `saved ${reply.payload.bytes} bytes`;
    } catch (e) {
      status.textContent = String(e);
    }
  });
}

boot();
