import {
  ConfigureAck,
  ConfigureRequest,
  Envelope,
  EventView,
  Frame,
  HelloAck,
  MasterInput,
  PROTOCOL,
  ResetAck,
  StartAck,
  TrialDone,
  isFrame,
  parseEnvelope,
} from "./protocol.js";

// Shape shared by the browser WebSocket and the ws package, so tests and
// the loopback harness can inject their own transport. The handler slots
// take `any` because the two libraries disagree on event types.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnState = "idle" | "connecting" | "open" | "closed";

export interface ClientHandlers {
  onHello?(ack: HelloAck): void;
  onConfigure?(ack: ConfigureAck): void;
  onStart?(ack: StartAck): void;
  onFrame?(frame: Frame): void;
  onEvent?(ev: EventView): void;
  onTrialDone?(rec: TrialDone): void;
  onReset?(ack: ResetAck): void;
  onServerError?(message: string): void;
  onState?(state: ConnState): void;
  /** Local violations: bad JSON, seq regression, malformed frame. */
  onProtocolError?(detail: string): void;
}

const STALE_AFTER_MS = 500;

/**
 * Client half of the "telescale/1" session protocol.
 *
 * Outbound seq is stamped at send time so it is strictly increasing no
 * matter who asks for a message; inbound messages with a stale seq are
 * dropped rather than delivered out of order. Frames are validated before
 * they reach a handler: whatever renders downstream only ever sees
 * well-formed, server-provided state.
 */
export class ConsoleClient {
  state: ConnState = "idle";
  lastFrame: Frame | null = null;
  lastFrameWall = 0;
  running = false;
  frameErrors = 0;

  private sock: SocketLike | null = null;
  private outSeq = -1;
  private inSeq = -1;
  private helloResolve: ((ack: HelloAck) => void) | null = null;
  private helloReject: ((err: Error) => void) | null = null;

  constructor(
    private factory: SocketFactory,
    private handlers: ClientHandlers = {},
    private now: () => number = () => Date.now(),
  ) {}

  connect(url: string): Promise<HelloAck> {
    if (this.sock !== null) throw new Error("already connected");
    this.setState("connecting");
    const sock = this.factory(url);
    this.sock = sock;
    sock.onopen = () => {
      this.setState("open");
      this.send("hello", { protocol: PROTOCOL });
    };
    sock.onmessage = (ev) => {
      const raw = typeof ev.data === "string" ? ev.data : String(ev.data);
      this.receive(raw);
    };
    sock.onclose = () => {
      this.setState("closed");
      this.running = false;
      this.sock = null;
      this.rejectHello("connection closed");
    };
    sock.onerror = () => {
      this.rejectHello("connection failed");
    };
    return new Promise((resolve, reject) => {
      this.helloResolve = resolve;
      this.helloReject = reject;
    });
  }

  close(): void {
    this.sock?.close();
  }

  /** True while a trial should be streaming frames but none are arriving. */
  isStale(maxGapMs: number = STALE_AFTER_MS): boolean {
    if (!this.running || this.state !== "open" || this.lastFrame === null) return false;
    return this.now() - this.lastFrameWall > maxGapMs;
  }

  // -- requests --

  configure(req: ConfigureRequest): boolean {
    return this.send("configure", req);
  }

  start(): boolean {
    return this.send("start", {});
  }

  reset(): boolean {
    return this.send("reset", {});
  }

  sendMasterInput(input: MasterInput): boolean {
    if (input.client_ms === undefined) input = { ...input, client_ms: this.now() };
    return this.send("master_input", input);
  }

  private send(type: string, payload: unknown): boolean {
    if (this.sock === null || this.state !== "open") return false; // dropped, caller shows the banner
    this.outSeq += 1;
    this.sock.send(JSON.stringify({ type, seq: this.outSeq, payload }));
    return true;
  }

  // -- inbound --

  private receive(raw: string): void {
    const env = parseEnvelope(raw);
    if (env === null) {
      this.handlers.onProtocolError?.(`unparseable message: ${raw.slice(0, 80)}`);
      return;
    }
    if (env.seq <= this.inSeq) {
      this.handlers.onProtocolError?.(`seq went backwards: ${env.seq} after ${this.inSeq}`);
      return;
    }
    this.inSeq = env.seq;
    this.dispatch(env);
  }

  private dispatch(env: Envelope): void {
    const p = env.payload as never;
    switch (env.type) {
      case "hello": {
        const ack = p as HelloAck;
        this.helloResolve?.(ack);
        this.helloResolve = this.helloReject = null;
        this.handlers.onHello?.(ack);
        break;
      }
      case "configure":
        this.handlers.onConfigure?.(p as ConfigureAck);
        break;
      case "start":
        this.running = true;
        this.handlers.onStart?.(p as StartAck);
        break;
      case "frame": {
        if (!isFrame(env.payload)) {
          this.frameErrors += 1;
          this.handlers.onProtocolError?.("malformed frame skipped");
          break;
        }
        this.lastFrame = env.payload;
        this.lastFrameWall = this.now();
        this.handlers.onFrame?.(env.payload);
        break;
      }
      case "event":
        this.handlers.onEvent?.(p as EventView);
        break;
      case "trial_done":
        this.running = false;
        this.handlers.onTrialDone?.(p as TrialDone);
        break;
      case "reset":
        // running=true means the server already relaunched the trial and a
        // fresh start ack is on its way
        this.running = (p as ResetAck).running;
        this.handlers.onReset?.(p as ResetAck);
        break;
      case "error":
        this.handlers.onServerError?.((p as { message?: string }).message ?? "unknown error");
        break;
      default:
        this.handlers.onProtocolError?.(`unknown message type ${env.type}`);
    }
  }

  private setState(state: ConnState): void {
    this.state = state;
    this.handlers.onState?.(state);
  }

  private rejectHello(why: string): void {
    if (this.helloReject !== null) {
      this.helloReject(new Error(why));
      this.helloResolve = this.helloReject = null;
    }
  }
}
