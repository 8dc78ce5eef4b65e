import { SocketLike } from "../src/client.js";
import { Envelope, Frame } from "../src/protocol.js";
import { Draw2D } from "../src/render.js";

export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev: any) => void) | null = null;
  onmessage: ((ev: any) => void) | null = null;
  onclose: ((ev: any) => void) | null = null;
  onerror: ((ev: any) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.({});
  }

  // test-side controls
  open(): void {
    this.onopen?.({});
  }

  push(msg: unknown): void {
    this.onmessage?.({ data: typeof msg === "string" ? msg : JSON.stringify(msg) });
  }

  sentEnvelopes(): Envelope[] {
    return this.sent.map((s) => JSON.parse(s));
  }

  lastSent(): Envelope {
    return JSON.parse(this.sent[this.sent.length - 1]);
  }
}

export function makeFrame(overrides: Partial<Frame> = {}): Frame {
  return {
    tick: 33,
    sim_time_s: 0.033,
    observed_tick: 0,
    left: { position: [0.02, 0.05, 0.025], jaw: 0, held: -1 },
    right: { position: [0.08, 0.05, 0.025], jaw: 0, held: -1 },
    rings: [
      { center: [0.03, 0.04, 0.002], threaded: 0, stretch: 0 },
      { center: [0.03, 0.06, 0.002], threaded: 1, stretch: 0 },
    ],
    pegs: [{ condition: 0 }, { condition: 0 }, { condition: 0 }, { condition: 0 }],
    hud: { elapsed_s: 0.033, weighted_error: 0, events: [] },
    complete: false,
    ...overrides,
  };
}

export interface DrawOp {
  op: string;
  args: unknown[];
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
}

export class FakeDraw2D implements Draw2D {
  ops: DrawOp[] = [];
  fillStyle: string = "";
  strokeStyle: string = "";
  lineWidth = 1;
  font = "";
  globalAlpha = 1;

  private record(op: string, args: unknown[]): void {
    this.ops.push({
      op,
      args,
      fillStyle: this.fillStyle,
      strokeStyle: this.strokeStyle,
      lineWidth: this.lineWidth,
    });
  }

  clearRect(...a: number[]): void {
    this.record("clearRect", a);
  }
  fillRect(...a: number[]): void {
    this.record("fillRect", a);
  }
  strokeRect(...a: number[]): void {
    this.record("strokeRect", a);
  }
  beginPath(): void {
    this.record("beginPath", []);
  }
  arc(...a: number[]): void {
    this.record("arc", a);
  }
  moveTo(...a: number[]): void {
    this.record("moveTo", a);
  }
  lineTo(...a: number[]): void {
    this.record("lineTo", a);
  }
  fill(): void {
    this.record("fill", []);
  }
  stroke(): void {
    this.record("stroke", []);
  }
  fillText(text: string, x: number, y: number): void {
    this.record("fillText", [text, x, y]);
  }

  named(op: string): DrawOp[] {
    return this.ops.filter((o) => o.op === op);
  }
}
