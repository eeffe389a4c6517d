/** Fixed-interval poller. The gateway pushes nothing in v1; views refresh
 * by polling (2 s default) and stop cleanly when the view unmounts. */

export type PollTick = () => Promise<void>;

export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private readonly tick: PollTick,
    private readonly intervalMs: number = 2000,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    void this.safeTick();
    this.timer = setInterval(() => void this.safeTick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }

  /** Overlapping ticks are skipped rather than queued. */
  private async safeTick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      await this.tick();
    } catch {
      // Tick errors surface through view state, never break the loop.
    } finally {
      this.inFlight = false;
    }
  }
}
