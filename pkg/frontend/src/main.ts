// Browser wiring. Everything with behavior worth testing lives in the
// other modules; this file only connects them to the DOM.

import { ConsoleClient } from "./client.js";
import { Hud } from "./hud.js";
import { InputCapture } from "./input.js";
import { ScenarioPanel } from "./panel.js";
import { BoardRenderer } from "./render.js";

function $<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing #${id}`);
  return el as T;
}

const urlInput = $<HTMLInputElement>("url");
const connectBtn = $<HTMLButtonElement>("connect");
const connState = $<HTMLSpanElement>("conn-state");
const presetSelect = $<HTMLSelectElement>("preset");
const delaySelect = $<HTMLSelectElement>("delay");
const customDelay = $<HTMLInputElement>("custom-delay");
const startBtn = $<HTMLButtonElement>("start");
const resetBtn = $<HTMLButtonElement>("reset");
const notice = $<HTMLSpanElement>("notice");
const banner = $<HTMLDivElement>("banner");
const canvas = $<HTMLCanvasElement>("board");
const clockEl = $<HTMLSpanElement>("clock");
const summaryEl = $<HTMLSpanElement>("summary");
const toastsEl = $<HTMLDivElement>("toasts");

const ctx = canvas.getContext("2d");
if (ctx === null) throw new Error("no 2d context");
const renderer = new BoardRenderer(ctx, canvas.width, canvas.height);
const hud = new Hud();
let capture: InputCapture | null = null;
let everConnected = false;

const client = new ConsoleClient((url) => new WebSocket(url), {
  onHello(ack) {
    everConnected = true;
    panel.setPresets(ack.presets, ack.scenario);
    presetSelect.innerHTML = "";
    for (const name of panel.presets) {
      const opt = document.createElement("option");
      opt.value = opt.textContent = name;
      opt.selected = name === panel.selected;
      presetSelect.appendChild(opt);
    }
  },
  onStart(ack) {
    const homes = ack.scenario.homes;
    capture = new InputCapture({ left: homes.left, right: homes.right });
    renderer.setScenario(ack.scenario);
    hud.reset();
    summaryEl.textContent = "";
  },
  onEvent(ev) {
    hud.addEvent(ev, performance.now());
  },
  onTrialDone(rec) {
    hud.finish(rec);
    summaryEl.textContent = hud.summary;
  },
  onServerError(message) {
    panel.showError(message);
  },
  onState(state) {
    connState.textContent = state;
  },
});

const panel = new ScenarioPanel(client);

connectBtn.addEventListener("click", () => {
  client.connect(urlInput.value).catch((err) => panel.showError(String(err)));
});
presetSelect.addEventListener("change", () => panel.choose(presetSelect.value));
delaySelect.addEventListener("change", () => {
  panel.delayChoice = delaySelect.value as "0" | "750" | "custom";
  customDelay.hidden = panel.delayChoice !== "custom";
});
customDelay.addEventListener("change", () => {
  panel.customDelayMs = Number(customDelay.value);
});
startBtn.addEventListener("click", () => panel.requestStart());
resetBtn.addEventListener("click", () => {
  panel.requestReset();
  hud.reset();
  summaryEl.textContent = "";
});

// -- input capture --

let dragging = false;
canvas.addEventListener("pointerdown", (e) => {
  canvas.setPointerCapture(e.pointerId);
  dragging = true;
});
canvas.addEventListener("pointerup", (e) => {
  canvas.releasePointerCapture(e.pointerId);
  dragging = false;
});
canvas.addEventListener("pointermove", (e) => {
  if (dragging) capture?.pointerMove(e.movementX, e.movementY);
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  capture?.wheel(e.deltaY);
});
window.addEventListener("keydown", (e) => {
  if (e.target instanceof HTMLInputElement || e.target instanceof HTMLSelectElement) return;
  if (capture?.key(e.code)) e.preventDefault();
});

setInterval(() => {
  if (capture === null) return;
  const msg = capture.flush(performance.now());
  if (msg !== null) client.sendMasterInput(msg);
}, 16);

// -- render loop --

function paint(): void {
  renderer.draw(client.lastFrame, canvas.width, canvas.height);
  clockEl.textContent = hud.statusLine();
  notice.textContent = panel.notice;
  toastsEl.innerHTML = "";
  for (const text of hud.liveToasts(performance.now())) {
    const div = document.createElement("div");
    div.className = "toast";
    div.textContent = text;
    toastsEl.appendChild(div);
  }
  if (everConnected && client.state !== "open") {
    banner.hidden = false;
    banner.textContent = "disconnected: input is dropped until the connection returns";
  } else if (client.isStale()) {
    banner.hidden = false;
    banner.textContent = "connection stalled: showing the last received frame";
  } else {
    banner.hidden = true;
  }
  requestAnimationFrame(paint);
}
requestAnimationFrame(paint);
