import { Frame, PEG_DISPLACED, PEG_KNOCKED_DOWN, ScenarioInfo, isFrame } from "./protocol.js";

// Default task-space extents in meters, mirrored from the simulator's
// workspace box. Scenario peg/ring positions come over the wire; only the
// drawing bounds are assumed.
export const BOARD_X = 0.1;
export const BOARD_Y = 0.1;
export const BOARD_Z = 0.05;

export const PEG_RADIUS_M = 0.004;
export const PEG_HEIGHT_M = 0.02;
export const RING_RADIUS_M = 0.008;

export const MARGIN_PX = 24;

// the subset of CanvasRenderingContext2D the renderer touches, so tests
// can hand in a recording fake
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface View {
  x0: number;
  y0: number;
  w: number;
  h: number;
}

export function topPx(v: View, x: number, y: number): [number, number] {
  return [v.x0 + (x / BOARD_X) * v.w, v.y0 + v.h - (y / BOARD_Y) * v.h];
}

export function sidePx(v: View, x: number, z: number): [number, number] {
  return [v.x0 + (x / BOARD_X) * v.w, v.y0 + v.h - (z / BOARD_Z) * v.h];
}

const COLORS = {
  board: "#1c1f26",
  grid: "#2a2e38",
  label: "#8a8f98",
  pegUpright: "#9aa0ac",
  pegDisplaced: "#e0a53c",
  pegDown: "#d4554a",
  rings: ["#4cc9b0", "#b58cf0", "#e0c050", "#60a0e0"],
  gripper: "#e8eaf0",
  held: "#f0d060",
};

/**
 * Two orthographic views of the delayed world: top-down (x right, y up)
 * and side (x right, z up), replacing the stereo endoscope of the
 * physical rig. Draws nothing it did not receive in a frame.
 */
export class BoardRenderer {
  errorCount = 0;
  readonly top: View;
  readonly side: View;
  private scenario: ScenarioInfo | null = null;

  constructor(
    private ctx: Draw2D,
    widthPx: number,
    heightPx: number,
  ) {
    const m = MARGIN_PX;
    const vw = (widthPx - 3 * m) / 2;
    const topH = Math.min(heightPx - 2 * m, vw * (BOARD_Y / BOARD_X));
    this.top = { x0: m, y0: m, w: vw, h: topH };
    this.side = { x0: 2 * m + vw, y0: m + topH - vw * (BOARD_Z / BOARD_X), w: vw, h: vw * (BOARD_Z / BOARD_X) };
  }

  setScenario(info: ScenarioInfo | null): void {
    this.scenario = info;
  }

  draw(frame: unknown, widthPx: number, heightPx: number): void {
    this.ctx.clearRect(0, 0, widthPx, heightPx);
    this.drawBoards();
    if (frame === null) return;
    if (!isFrame(frame)) {
      this.errorCount += 1;
      return;
    }
    this.drawPegs(frame);
    this.drawRings(frame);
    this.drawGripper(frame, "left");
    this.drawGripper(frame, "right");
  }

  private drawBoards(): void {
    const c = this.ctx;
    for (const [v, name] of [
      [this.top, "top"],
      [this.side, "side"],
    ] as [View, string][]) {
      c.fillStyle = COLORS.board;
      c.fillRect(v.x0, v.y0, v.w, v.h);
      c.strokeStyle = COLORS.grid;
      c.lineWidth = 1;
      c.strokeRect(v.x0, v.y0, v.w, v.h);
      c.fillStyle = COLORS.label;
      c.font = "12px sans-serif";
      c.fillText(name, v.x0 + 4, v.y0 + 14);
    }
  }

  private pxPerM(): number {
    return this.top.w / BOARD_X;
  }

  private drawPegs(frame: Frame): void {
    if (this.scenario === null) return;
    const c = this.ctx;
    const pegs = this.scenario.board.pegs;
    const rPx = PEG_RADIUS_M * this.pxPerM();
    pegs.forEach(([x, y], i) => {
      const condition = frame.pegs[i]?.condition ?? 0;
      const color =
        condition === PEG_KNOCKED_DOWN
          ? COLORS.pegDown
          : condition === PEG_DISPLACED
            ? COLORS.pegDisplaced
            : COLORS.pegUpright;
      c.fillStyle = color;
      const [tx, ty] = topPx(this.top, x, y);
      c.beginPath();
      c.arc(tx, ty, rPx, 0, Math.PI * 2);
      c.fill();
      const [sx, sy] = sidePx(this.side, x, 0);
      const hPx = PEG_HEIGHT_M * (this.side.h / BOARD_Z);
      if (condition === PEG_KNOCKED_DOWN) {
        // a toppled peg lies on the ground
        c.fillRect(sx - hPx / 2, sy - 2 * rPx, hPx, 2 * rPx);
      } else {
        c.fillRect(sx - rPx, sy - hPx, 2 * rPx, hPx);
      }
    });
    // destination markers so the operator knows where each ring goes
    this.scenario.board.rings.forEach((ring, i) => {
      const dest = pegs[ring.dest];
      if (dest === undefined) return;
      const [mx, my] = topPx(this.top, dest[0], dest[1]);
      c.strokeStyle = COLORS.rings[i % COLORS.rings.length];
      c.lineWidth = 1;
      c.beginPath();
      c.arc(mx, my, rPx + 5, 0, Math.PI * 2);
      c.stroke();
    });
  }

  private drawRings(frame: Frame): void {
    const c = this.ctx;
    frame.rings.forEach((ring, i) => {
      const [x, y, z] = ring.center;
      // stretch shows as a fatter, hotter outline; there is no direction
      // information in the snapshot
      const stretchPx = ring.stretch * this.pxPerM();
      const rPx = RING_RADIUS_M * this.pxPerM() + stretchPx;
      c.strokeStyle = ring.stretch > 0 ? COLORS.pegDown : COLORS.rings[i % COLORS.rings.length];
      c.lineWidth = ring.stretch > 0 ? 4 : 3;
      const [tx, ty] = topPx(this.top, x, y);
      c.beginPath();
      c.arc(tx, ty, rPx, 0, Math.PI * 2);
      c.stroke();
      const [sx, sy] = sidePx(this.side, x, z);
      c.beginPath();
      c.arc(sx, sy, Math.max(2, rPx / 3), 0, Math.PI * 2);
      c.stroke();
    });
  }

  private drawGripper(frame: Frame, arm: "left" | "right"): void {
    const c = this.ctx;
    const g = frame[arm];
    const [x, y, z] = g.position;
    const open = g.jaw === 0;
    const gap = open ? 5 : 1.5;
    c.strokeStyle = COLORS.gripper;
    c.lineWidth = 2;
    const [tx, ty] = topPx(this.top, x, y);
    c.beginPath();
    c.moveTo(tx - gap, ty - 7);
    c.lineTo(tx - gap, ty + 7);
    c.moveTo(tx + gap, ty - 7);
    c.lineTo(tx + gap, ty + 7);
    c.stroke();
    const [sx, sy] = sidePx(this.side, x, z);
    c.beginPath();
    c.moveTo(sx, sy - 6);
    c.lineTo(sx - 4, sy + 4);
    c.lineTo(sx + 4, sy + 4);
    c.lineTo(sx, sy - 6);
    c.stroke();
    if (g.held >= 0) {
      c.fillStyle = COLORS.held;
      c.beginPath();
      c.arc(tx, ty, 3, 0, Math.PI * 2);
      c.fill();
    }
    c.fillStyle = COLORS.label;
    c.font = "11px sans-serif";
    c.fillText(arm === "left" ? "L" : "R", tx + 8, ty - 8);
  }
}
