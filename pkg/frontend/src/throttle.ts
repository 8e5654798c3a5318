// Client-side rate limiter for the edit stream. Sends at most one message
// per interval per lane; newer pushes within the window replace the pending
// one (only the latest vertex position matters), and a trailing timer
// delivers it, so the final state of a gesture always reaches the server.

type Sender = (msg: unknown) => void;

export const DEFAULT_INTERVAL_MS = Math.ceil(1000 / 30);

export class MessageThrottle {
  private readonly send: Sender;
  private readonly intervalMs: number;
  private lastSent = -Infinity;
  private pending = new Map<string, unknown>();
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(send: Sender, intervalMs = DEFAULT_INTERVAL_MS) {
    this.send = send;
    this.intervalMs = intervalMs;
  }

  push(msg: unknown, lane = 'default'): void {
    const now = Date.now();
    if (this.pending.size === 0 && now - this.lastSent >= this.intervalMs) {
      this.lastSent = now;
      this.send(msg);
      return;
    }
    this.pending.set(lane, msg);
    if (this.timer === null) {
      const wait = Math.max(0, this.lastSent + this.intervalMs - now);
      this.timer = setTimeout(() => this.drain(), wait);
    }
  }

  /** Drop anything queued, e.g. when the connection goes away. */
  clear(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending.clear();
  }

  private drain(): void {
    this.timer = null;
    if (this.pending.size === 0) return;
    this.lastSent = Date.now();
    const batch = [...this.pending.values()];
    this.pending.clear();
    for (const msg of batch) this.send(msg);
  }
}
