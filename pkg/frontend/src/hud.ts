import { EventView, Frame, TrialDone, toastText } from "./protocol.js";

export const TOAST_MS = 4000;

export interface Toast {
  text: string;
  untilMs: number;
}

/**
 * Scorekeeping shown next to the board: elapsed time, running weighted
 * error, event toasts, end-of-trial summary. All numbers come from the
 * server (the HUD block in each frame and the event messages); the
 * console never tallies its own score.
 */
export class Hud {
  elapsedS = 0;
  weightedError = 0;
  complete = false;
  summary = "";
  private toasts: Toast[] = [];

  applyFrame(frame: Frame): void {
    this.elapsedS = frame.hud.elapsed_s;
    this.weightedError = frame.hud.weighted_error;
    this.complete = frame.complete;
  }

  addEvent(ev: EventView, nowMs: number): void {
    this.toasts.push({ text: toastText(ev), untilMs: nowMs + TOAST_MS });
  }

  finish(rec: TrialDone): void {
    this.weightedError = rec.weighted_error;
    const how = rec.timed_out ? "timed out at" : "done in";
    this.summary = `${how} ${rec.completion_time_s.toFixed(1)} s, weighted error ${rec.weighted_error}`;
  }

  /** Reset clears the clock, the score and anything still toasting. */
  reset(): void {
    this.elapsedS = 0;
    this.weightedError = 0;
    this.complete = false;
    this.summary = "";
    this.toasts = [];
  }

  liveToasts(nowMs: number): string[] {
    this.toasts = this.toasts.filter((t) => t.untilMs > nowMs);
    return this.toasts.map((t) => t.text);
  }

  statusLine(): string {
    const t = this.elapsedS.toFixed(1);
    return `${t} s | weighted error ${this.weightedError}`;
  }
}
