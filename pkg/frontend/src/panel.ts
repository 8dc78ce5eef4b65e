import { ConfigureRequest } from "./protocol.js";

export interface PanelSender {
  configure(req: ConfigureRequest): boolean;
  start(): boolean;
  reset(): boolean;
}

/**
 * Scenario selector state: preset condition, delay choice (0, 750 ms or
 * custom), the start/reset buttons. Start always re-sends configure first
 * so the chosen condition wins over whatever the server had; a running
 * trial rejects that server-side and the error lands in `notice`.
 */
export class ScenarioPanel {
  presets: string[] = [];
  selected = "";
  delayChoice: "0" | "750" | "custom" = "750";
  customDelayMs = 250;
  notice = "";

  constructor(private sender: PanelSender) {}

  setPresets(names: string[], current: string): void {
    this.presets = [...names];
    this.selected = names.includes(current) ? current : (names[0] ?? "");
  }

  choose(name: string): void {
    this.selected = name;
  }

  effectiveDelayMs(): number {
    if (this.delayChoice === "custom") return this.customDelayMs;
    return Number(this.delayChoice);
  }

  requestStart(): void {
    this.notice = "";
    const req: ConfigureRequest = { delay_ms: this.effectiveDelayMs() };
    if (this.selected !== "") req.scenario = this.selected;
    if (!this.sender.configure(req) || !this.sender.start()) {
      this.notice = "not connected";
    }
  }

  requestReset(): void {
    this.notice = "";
    if (!this.sender.reset()) this.notice = "not connected";
  }

  showError(message: string): void {
    this.notice = message;
  }
}
