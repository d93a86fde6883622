// Grid polling. Each fetch carries a sequence number; the consumer uses
// it for last-write-wins so a slow response from an earlier tick cannot
// overwrite a newer grid.

export interface PollerOptions {
  intervalMs?: number;
}

export const DEFAULT_POLL_INTERVAL_MS = 30_000;

export class Poller {
  intervalMs: number;
  private seq = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private readonly tick: (seq: number) => void,
              options: PollerOptions = {}) {
    this.intervalMs = options.intervalMs ?? DEFAULT_POLL_INTERVAL_MS;
  }

  nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  // fire once now, then on every interval
  start(): void {
    if (this.timer) return;
    this.fire();
    this.timer = setInterval(() => this.fire(), this.intervalMs);
  }

  fire(): void {
    this.tick(this.nextSeq());
  }

  stop(): void {
    if (this.timer) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }
}
