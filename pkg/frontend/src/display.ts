// Paint a server display list command-by-command. The painter draws against
// a structural subset of CanvasRenderingContext2D so tests can record calls.

import { DrawCommand } from "./protocol.js";

export interface PaintSurface {
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  beginPath(): void;
  rect(x: number, y: number, w: number, h: number): void;
  clip(): void;
  stroke(): void;
  fill(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  font: string;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
}

export class MalformedCommand extends Error {
  constructor(public index: number, message: string) {
    super(`command ${index}: ${message}`);
  }
}

const FONT = "12px monospace";

function finite(value: unknown): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new Error(`expected a finite number, got ${JSON.stringify(value)}`);
  }
  return value;
}

export function paintDisplayList(ctx: PaintSurface, commands: DrawCommand[]): void {
  let depth = 0;
  ctx.save();
  ctx.font = FONT;
  ctx.fillStyle = "#222";
  ctx.strokeStyle = "#555";
  try {
    commands.forEach((cmd, index) => {
      try {
        paintOne(ctx, cmd);
      } catch (e) {
        throw new MalformedCommand(index, (e as Error).message);
      }
      if (cmd.op === "push") depth += 1;
      if (cmd.op === "pop") {
        depth -= 1;
        if (depth < 0) throw new MalformedCommand(index, "unbalanced pop");
      }
    });
    if (depth !== 0) {
      throw new MalformedCommand(commands.length - 1, "unbalanced push");
    }
  } finally {
    for (; depth > 0; depth--) ctx.restore();
    ctx.restore();
  }
}

function paintOne(ctx: PaintSurface, cmd: DrawCommand): void {
  switch (cmd.op) {
    case "push": {
      ctx.save();
      ctx.translate(finite(cmd.dx), finite(cmd.dy));
      ctx.beginPath();
      ctx.rect(0, 0, finite(cmd.w), finite(cmd.h));
      ctx.clip();
      return;
    }
    case "pop":
      ctx.restore();
      return;
    case "text":
      if (typeof cmd.text !== "string") throw new Error("text must be a string");
      ctx.fillText(cmd.text, finite(cmd.x), finite(cmd.y));
      return;
    case "rect":
      if (cmd.style === "fill") {
        ctx.fillRect(finite(cmd.x), finite(cmd.y), finite(cmd.w), finite(cmd.h));
      } else {
        ctx.strokeRect(finite(cmd.x), finite(cmd.y), finite(cmd.w), finite(cmd.h));
      }
      return;
    case "line":
      ctx.beginPath();
      ctx.moveTo(finite(cmd.x1), finite(cmd.y1));
      ctx.lineTo(finite(cmd.x2), finite(cmd.y2));
      ctx.stroke();
      return;
    case "image":
      // no raster assets in the kernel; draw a placeholder frame
      ctx.strokeRect(finite(cmd.x), finite(cmd.y), finite(cmd.w), finite(cmd.h));
      return;
    default:
      throw new Error(`unknown op ${(cmd as { op?: string }).op}`);
  }
}

export function displaySize(commands: DrawCommand[]): { w: number; h: number } {
  const root = commands[0];
  if (root && root.op === "push") {
    return { w: Math.max(root.w, 24), h: Math.max(root.h, 16) };
  }
  return { w: 120, h: 24 };
}
