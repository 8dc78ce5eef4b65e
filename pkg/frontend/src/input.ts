import { JawState, MasterInput, Vec3, WireArm } from "./protocol.js";

// 1 px of pointer travel = 0.2 mm of master motion. Chosen so motion
// scaling is perceptible: a 500 px drag is 10 cm of master travel, which a
// 0.1 scale turns into 1 cm at the slave.
export const PX_TO_M = 0.0002;

// z moves in fixed steps on the keyboard (wheel uses the pixel mapping)
export const Z_KEY_STEP_M = 0.002;

export const SEND_HZ_MAX = 60;

export type Arm = "left" | "right";

interface ArmPose {
  position: [number, number, number];
  jaw: JawState;
}

/**
 * Pointer and keyboard state -> master_input messages.
 *
 * The pointer is a 2-DoF stand-in for a 7-DoF master arm: drag moves the
 * active arm in x-y (screen right = +x, screen up = +y), wheel and W/S
 * move z, Space toggles the jaw, X swaps the active arm. Orientation
 * stays at identity throughout.
 *
 * Poses accumulate locally whether or not the socket is up; flush() just
 * stops producing messages while disconnected, so motion made during an
 * outage is folded into the next pose sent rather than replayed.
 */
export class InputCapture {
  active: Arm = "left";
  private poses: Record<Arm, ArmPose>;
  private dirty = new Set<Arm>();
  private lastSentMs = -Infinity;
  private readonly minIntervalMs: number;

  constructor(homes: { left: Vec3; right: Vec3 }, sendHzMax: number = SEND_HZ_MAX) {
    this.poses = {
      left: { position: [...homes.left], jaw: 0 },
      right: { position: [...homes.right], jaw: 0 },
    };
    this.minIntervalMs = 1000 / sendHzMax;
  }

  pose(arm: Arm): WireArm {
    const p = this.poses[arm];
    return { position: [...p.position], jaw: p.jaw };
  }

  /** Pointer delta in px; screen y grows downward, task y upward. */
  pointerMove(dxPx: number, dyPx: number): void {
    const pos = this.poses[this.active].position;
    pos[0] += dxPx * PX_TO_M;
    pos[1] -= dyPx * PX_TO_M;
    this.dirty.add(this.active);
  }

  /** Wheel delta in px; scrolling up raises the tool. */
  wheel(deltaYPx: number): void {
    this.poses[this.active].position[2] -= deltaYPx * PX_TO_M;
    this.dirty.add(this.active);
  }

  /** Returns true when the key did something (caller preventDefaults). */
  key(code: string): boolean {
    switch (code) {
      case "Space":
        this.toggleJaw();
        return true;
      case "KeyX":
      case "Tab":
        this.switchArm();
        return true;
      case "KeyW":
        this.nudgeZ(+Z_KEY_STEP_M);
        return true;
      case "KeyS":
        this.nudgeZ(-Z_KEY_STEP_M);
        return true;
      default:
        return false;
    }
  }

  toggleJaw(): void {
    const p = this.poses[this.active];
    p.jaw = p.jaw === 0 ? 1 : 0;
    this.dirty.add(this.active);
  }

  switchArm(): void {
    this.active = this.active === "left" ? "right" : "left";
  }

  nudgeZ(dz: number): void {
    this.poses[this.active].position[2] += dz;
    this.dirty.add(this.active);
  }

  /**
   * The pending message, rate limited; null when there is nothing new or
   * the last send was under 1/60 s ago. Dirt survives a throttled flush.
   */
  flush(nowMs: number): MasterInput | null {
    if (this.dirty.size === 0) return null;
    if (nowMs - this.lastSentMs < this.minIntervalMs) return null;
    const msg: MasterInput = {};
    if (this.dirty.has("left")) msg.left = this.pose("left");
    if (this.dirty.has("right")) msg.right = this.pose("right");
    this.dirty.clear();
    this.lastSentMs = nowMs;
    return msg;
  }
}
