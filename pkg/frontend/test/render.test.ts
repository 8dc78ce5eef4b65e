import { describe, expect, it } from "vitest";

import { ScenarioInfo, Vec3 } from "../src/protocol.js";
import { BoardRenderer, PEG_RADIUS_M, RING_RADIUS_M, sidePx, topPx } from "../src/render.js";
import { DrawOp, FakeDraw2D, makeFrame } from "./fakes.js";

const W = 840;
const H = 432;

const SCENARIO: ScenarioInfo = {
  name: "c02",
  board: {
    pegs: [
      [0.03, 0.04, 0.01],
      [0.03, 0.06, 0.01],
      [0.07, 0.04, 0.01],
      [0.07, 0.06, 0.01],
    ] as Vec3[],
    rings: [
      { name: "front", start: 0, dest: 2 },
      { name: "back", start: 1, dest: 3 },
    ],
  },
  homes: { left: [0.02, 0.05, 0.025], right: [0.08, 0.05, 0.025] },
};

function renderer() {
  const ctx = new FakeDraw2D();
  const r = new BoardRenderer(ctx, W, H);
  r.setScenario(SCENARIO);
  return { ctx, r };
}

function arcAt(ops: DrawOp[], x: number, y: number, tol = 0.01): DrawOp[] {
  return ops.filter(
    (o) => o.op === "arc" && Math.abs((o.args[0] as number) - x) < tol && Math.abs((o.args[1] as number) - y) < tol,
  );
}

describe("view transforms", () => {
  const { r } = renderer();

  it("pins the top view corners", () => {
    expect(topPx(r.top, 0, 0)).toEqual([r.top.x0, r.top.y0 + r.top.h]);
    expect(topPx(r.top, 0.1, 0.1)).toEqual([r.top.x0 + r.top.w, r.top.y0]);
  });

  it("keeps the top view square so distances are honest", () => {
    expect(r.top.w).toBe(r.top.h);
  });

  it("pins the side view ground line", () => {
    const [, py] = sidePx(r.side, 0.05, 0);
    expect(py).toBe(r.side.y0 + r.side.h);
  });
});

describe("board drawing", () => {
  it("draws all four pegs at their mapped centers", () => {
    const { ctx, r } = renderer();
    r.draw(makeFrame(), W, H);
    const pxPerM = r.top.w / 0.1;
    for (const [x, y] of SCENARIO.board.pegs) {
      const [tx, ty] = topPx(r.top, x, y);
      const hits = arcAt(ctx.ops, tx, ty);
      expect(hits.length).toBeGreaterThan(0);
      expect(hits[0].args[2]).toBeCloseTo(PEG_RADIUS_M * pxPerM, 6);
    }
    expect(r.errorCount).toBe(0);
  });

  it("renders a knocked-down peg visibly unlike an upright one", () => {
    const { ctx, r } = renderer();
    r.draw(makeFrame(), W, H);
    const [tx, ty] = topPx(r.top, 0.03, 0.04);
    const upright = arcAt(ctx.ops, tx, ty)[0].fillStyle;

    const { ctx: ctx2, r: r2 } = renderer();
    const down = makeFrame({ pegs: [{ condition: 2 }, { condition: 0 }, { condition: 0 }, { condition: 0 }] });
    r2.draw(down, W, H);
    const downStyle = arcAt(ctx2.ops, tx, ty)[0].fillStyle;
    expect(downStyle).not.toBe(upright);
  });

  it("renders a displaced peg in a third style", () => {
    const { ctx, r } = renderer();
    r.draw(makeFrame({ pegs: [{ condition: 1 }, { condition: 0 }, { condition: 0 }, { condition: 0 }] }), W, H);
    const [tx, ty] = topPx(r.top, 0.03, 0.04);
    const displaced = arcAt(ctx.ops, tx, ty)[0].fillStyle;
    const [ux, uy] = topPx(r.top, 0.03, 0.06);
    const upright = arcAt(ctx.ops, ux, uy)[0].fillStyle;
    expect(displaced).not.toBe(upright);
  });

  it("grows and recolors a ring under stretch", () => {
    const { ctx, r } = renderer();
    r.draw(makeFrame(), W, H);
    const pxPerM = r.top.w / 0.1;
    const [tx, ty] = topPx(r.top, 0.03, 0.04);
    const calm = arcAt(ctx.ops, tx, ty).filter((o) => Math.abs((o.args[2] as number) - RING_RADIUS_M * pxPerM) < 0.01);
    expect(calm).toHaveLength(1);

    const { ctx: ctx2, r: r2 } = renderer();
    const stretched = makeFrame({
      rings: [
        { center: [0.03, 0.04, 0.002], threaded: 0, stretch: 0.005 },
        { center: [0.03, 0.06, 0.002], threaded: 1, stretch: 0 },
      ],
    });
    r2.draw(stretched, W, H);
    const hot = arcAt(ctx2.ops, tx, ty).filter((o) => (o.args[2] as number) > RING_RADIUS_M * pxPerM + 1);
    expect(hot.length).toBeGreaterThan(0);
    expect(hot[0].strokeStyle).not.toBe(calm[0].strokeStyle);
  });

  it("separates the jaw prongs when open and closes them when shut", () => {
    const { ctx, r } = renderer();
    r.draw(makeFrame(), W, H);
    const [tx] = topPx(r.top, 0.02, 0.05);
    const openProngs = ctx.named("moveTo").filter((o) => Math.abs((o.args[0] as number) - (tx - 5)) < 0.01);
    expect(openProngs.length).toBeGreaterThan(0);

    const { ctx: ctx2, r: r2 } = renderer();
    r2.draw(makeFrame({ left: { position: [0.02, 0.05, 0.025], jaw: 1, held: -1 } }), W, H);
    const closedProngs = ctx2.named("moveTo").filter((o) => Math.abs((o.args[0] as number) - (tx - 1.5)) < 0.01);
    expect(closedProngs.length).toBeGreaterThan(0);
  });

  it("marks a held ring on the gripper", () => {
    const { ctx, r } = renderer();
    r.draw(makeFrame({ left: { position: [0.04, 0.04, 0.02], jaw: 1, held: 0 } }), W, H);
    const [tx, ty] = topPx(r.top, 0.04, 0.04);
    const dot = arcAt(ctx.ops, tx, ty).filter((o) => o.args[2] === 3);
    expect(dot).toHaveLength(1);
  });
});

describe("defensive rendering", () => {
  it("skips a malformed frame and counts it", () => {
    const { ctx, r } = renderer();
    r.draw({ tick: 1, nonsense: true }, W, H);
    expect(r.errorCount).toBe(1);
    expect(ctx.named("arc")).toHaveLength(0); // board chrome only
  });

  it("draws the empty boards before any frame arrives", () => {
    const { ctx, r } = renderer();
    r.draw(null, W, H);
    expect(r.errorCount).toBe(0);
    expect(ctx.named("strokeRect").length).toBe(2); // two view outlines
    expect(ctx.named("arc")).toHaveLength(0);
  });

  it("keeps drawing rings and grippers when no scenario is known", () => {
    const ctx = new FakeDraw2D();
    const r = new BoardRenderer(ctx, W, H);
    r.draw(makeFrame(), W, H);
    expect(r.errorCount).toBe(0);
    expect(ctx.named("arc").length).toBeGreaterThan(0); // rings still visible
  });
});
