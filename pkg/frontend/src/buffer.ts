// Buffer segmentation: module text interleaved with widget regions at the
// descriptor spans. Widget regions never overlap and stay inside the text.

import { Descriptor } from "./protocol.js";

export type Segment =
  | { kind: "text"; text: string; start: number; end: number }
  | { kind: "widget"; id: string; start: number; end: number };

export function segmentBuffer(text: string, editors: Descriptor[]): Segment[] {
  const sorted = [...editors].sort((a, b) => a.span[0] - b.span[0]);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const editor of sorted) {
    const [start, end] = editor.span;
    if (start < cursor || end > text.length || end < start) {
      throw new Error(`editor ${editor.id} span [${start}, ${end}] overlaps ` +
        `or escapes the buffer`);
    }
    segments.push({ kind: "text", text: text.slice(cursor, start),
                    start: cursor, end: start });
    segments.push({ kind: "widget", id: editor.id, start, end });
    cursor = end;
  }
  segments.push({ kind: "text", text: text.slice(cursor),
                  start: cursor, end: text.length });
  return segments;
}

export function textSegments(segments: Segment[]): string[] {
  return segments.filter((s) => s.kind === "text")
    .map((s) => (s as { text: string }).text);
}

// Caret position inside a text segment -> absolute buffer offset.
export function absoluteOffset(segments: Segment[], segmentIndex: number,
                               caret: number): number {
  const segment = segments[segmentIndex];
  if (!segment || segment.kind !== "text") {
    throw new Error(`segment ${segmentIndex} is not a text segment`);
  }
  return segment.start + Math.min(caret, segment.text.length);
}
