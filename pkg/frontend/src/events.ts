// Translate DOM-level input on a widget region into protocol event payloads.
// Mouse coordinates are region-relative; the server does the routing.

export interface EventPayload {
  kind: string;
  target: string;
  x?: number;
  y?: number;
  text?: string;
  key?: string;
}

export function mouseEvent(kind: "mouse-down" | "mouse-up" | "mouse-move",
                           editorId: string, regionX: number,
                           regionY: number): EventPayload {
  return { kind, target: editorId, x: regionX, y: regionY };
}

// Keyboard input while a widget region has focus. Printable characters
// become text-input; editing keys travel by name; everything else is not
// forwarded (returns null).
export function keyboardEvent(editorId: string, key: string):
    EventPayload | null {
  if (key.length === 1) {
    return { kind: "text-input", target: editorId, text: key };
  }
  if (key === "Backspace") {
    return { kind: "key", target: editorId, key: "backspace" };
  }
  if (key === "Enter") {
    return { kind: "key", target: editorId, key: "enter" };
  }
  return null;
}

export function insertEditorPayload(name: string, position: number) {
  return { name, position };
}
