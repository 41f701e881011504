/**
 * Canvas rendering split in two: a pure display-list builder (unit-testable)
 * and a thin painter that executes the list on a 2d context.  Ghost objects
 * draw at 50% opacity; accepted or demonstrated objects draw solid.
 */

import type { EditorViewModel } from "./viewmodel.js";
import type { FrameJson, ObjectJson, SpriteJson } from "./protocol.js";

export const CELL = 48;
export const GHOST_ALPHA = 0.5;

export type DrawOp =
  | { kind: "clear"; width: number; height: number }
  | { kind: "gridline"; x1: number; y1: number; x2: number; y2: number }
  | { kind: "sprite"; object: ObjectJson; cells: { x: number; y: number }[]; color: string; alpha: number }
  | { kind: "label"; text: string; x: number; y: number; alpha: number };

const PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948"];

export function spriteColor(name: string): string {
  let hash = 0;
  for (const ch of name) hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  return PALETTE[hash % PALETTE.length];
}

function spriteCells(object: ObjectJson, sprites: Map<string, SpriteJson>, gridW: number, gridH: number) {
  // Grid y grows upward (a jump raises y); canvas rows grow downward.
  const sprite = sprites.get(object.sprite);
  const w = sprite?.width ?? 1;
  const h = sprite?.height ?? 1;
  const cells: { x: number; y: number }[] = [];
  for (let dx = 0; dx < w; dx++) {
    for (let dy = 0; dy < h; dy++) {
      const x = object.x + dx;
      const y = object.y + dy;
      if (x < gridW && y < gridH) cells.push({ x, y: gridH - 1 - y });
    }
  }
  return cells;
}

/** Canvas row for a grid y coordinate. */
export function screenRow(y: number, gridH: number): number {
  return gridH - 1 - y;
}

/**
 * Build the display list for the current view.  In play mode the pushed
 * snapshot replaces the edited frame; in the editor the visible frame draws
 * solid with the ghost prediction underneath at reduced opacity.
 */
export function buildScene(vm: EditorViewModel): DrawOp[] {
  const ops: DrawOp[] = [];
  const project = vm.project;
  if (!project) return ops;
  const gridW = project.gridWidth;
  const gridH = project.gridHeight;
  ops.push({ kind: "clear", width: gridW * CELL, height: gridH * CELL });
  for (let x = 0; x <= gridW; x++) {
    ops.push({ kind: "gridline", x1: x * CELL, y1: 0, x2: x * CELL, y2: gridH * CELL });
  }
  for (let y = 0; y <= gridH; y++) {
    ops.push({ kind: "gridline", x1: 0, y1: y * CELL, x2: gridW * CELL, y2: y * CELL });
  }
  const sprites = new Map(project.sprites.map((s) => [s.name, s]));

  const drawFrame = (frame: FrameJson, alpha: number) => {
    for (const object of frame.objects) {
      ops.push({
        kind: "sprite",
        object,
        cells: spriteCells(object, sprites, gridW, gridH),
        color: spriteColor(object.sprite),
        alpha,
      });
    }
  };

  if (vm.playState === "running") {
    if (vm.playFrame) drawFrame(vm.playFrame, 1.0);
    return ops;
  }
  if (vm.ghost) drawFrame(vm.ghost, GHOST_ALPHA);
  const frame = vm.currentFrame();
  if (frame) drawFrame(frame, 1.0);
  return ops;
}

interface Context2dLike {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  globalAlpha: number;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  font: string;
}

export function paint(ctx: Context2dLike, ops: DrawOp[]): void {
  for (const op of ops) {
    switch (op.kind) {
      case "clear":
        ctx.globalAlpha = 1.0;
        ctx.clearRect(0, 0, op.width, op.height);
        break;
      case "gridline":
        ctx.globalAlpha = 1.0;
        ctx.strokeStyle = "#d8d8d8";
        ctx.beginPath();
        ctx.moveTo(op.x1, op.y1);
        ctx.lineTo(op.x2, op.y2);
        ctx.stroke();
        break;
      case "sprite":
        ctx.globalAlpha = op.alpha;
        ctx.fillStyle = op.color;
        for (const cell of op.cells) {
          ctx.fillRect(cell.x * CELL + 1, cell.y * CELL + 1, CELL - 2, CELL - 2);
        }
        if (op.cells.length) {
          ctx.globalAlpha = op.alpha;
          ctx.fillStyle = "#ffffff";
          ctx.font = "12px sans-serif";
          ctx.fillText(op.object.sprite, op.cells[0].x * CELL + 4, op.cells[0].y * CELL + 16);
        }
        break;
      case "label":
        ctx.globalAlpha = op.alpha;
        ctx.fillStyle = "#333333";
        ctx.fillText(op.text, op.x, op.y);
        break;
    }
  }
  ctx.globalAlpha = 1.0;
}
