// Protocol v1 client: newline-delimited JSON messages over any transport.
// At most one request is in flight per session; the rest queue.

export const PROTOCOL_VERSION = 1;

export type DrawCommand =
  | { op: "push"; dx: number; dy: number; w: number; h: number }
  | { op: "pop" }
  | { op: "text"; text: string; x: number; y: number }
  | { op: "rect"; x: number; y: number; w: number; h: number; style: string }
  | { op: "line"; x1: number; y1: number; x2: number; y2: number }
  | { op: "image"; name: string; x: number; y: number; w: number; h: number };

export interface Descriptor {
  id: string;
  span: [number, number];
  definition: string;
  fallback: boolean;
  display: DrawCommand[];
}

export interface DefinitionInfo {
  name: string;
  base: string | null;
  fields: { name: string }[];
}

export interface Message {
  v: number;
  op: string;
  seq?: number;
  session?: string;
  ok?: boolean;
  payload?: any;
  error?: { message: string };
}

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
}

export class ProtocolError extends Error {}

interface Pending {
  message: Message;
  resolve: (m: Message) => void;
  reject: (e: Error) => void;
}

export class ProtocolClient {
  private seq = 0;
  private inFlight: Pending | null = null;
  private queue: Pending[] = [];
  private session: string | null = null;
  displayHandler: (editors: Descriptor[]) => void = () => {};

  constructor(private transport: Transport) {
    transport.onLine((line) => this.receive(line));
  }

  sessionId(): string | null {
    return this.session;
  }

  request(op: string, payload?: any): Promise<Message> {
    this.seq += 1;
    const message: Message = { v: PROTOCOL_VERSION, op, seq: this.seq };
    if (this.session !== null) message.session = this.session;
    if (payload !== undefined) message.payload = payload;
    return new Promise<Message>((resolve, reject) => {
      this.queue.push({ message, resolve, reject });
      this.pump();
    });
  }

  open(path: string): Promise<Message> {
    this.session = null;
    return this.request("open", { path });
  }

  private pump(): void {
    if (this.inFlight !== null || this.queue.length === 0) return;
    this.inFlight = this.queue.shift()!;
    this.transport.send(JSON.stringify(this.inFlight.message));
  }

  private receive(line: string): void {
    if (!line.trim()) return;
    let message: Message;
    try {
      message = JSON.parse(line);
    } catch {
      return; // not ours; ignore noise on the wire
    }
    if (message.op === "display-update" && message.seq === undefined) {
      this.displayHandler(message.payload?.editors ?? []);
      return;
    }
    const pending = this.inFlight;
    if (pending === null || message.seq !== pending.message.seq) {
      return; // stale or mismatched response
    }
    this.inFlight = null;
    if (message.ok) {
      if (message.session) this.session = message.session;
      pending.resolve(message);
    } else {
      pending.reject(new ProtocolError(message.error?.message ?? "request failed"));
    }
    this.pump();
  }
}

export function webSocketTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const socket = new WebSocket(url);
    const handlers: ((line: string) => void)[] = [];
    socket.onopen = () =>
      resolve({
        send: (line) => socket.send(line),
        onLine: (h) => handlers.push(h),
      });
    socket.onerror = () => reject(new Error(`cannot connect to ${url}`));
    socket.onmessage = (ev) => {
      for (const h of handlers) h(String(ev.data));
    };
  });
}
