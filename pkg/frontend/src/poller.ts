/** Feed polling: drives the live leaderboard and the activity ticker.
 *
 * The poller asks the feed endpoint for entries past its cursor at the
 * server-configured interval. A leaderboard_changed entry triggers a
 * leaderboard refetch, so a judgment lands on screen within one poll
 * interval. Network failures flip a stale flag (rendered as a banner)
 * without losing the cursor.
 */

import type { FeedEntry, FeedResponse } from "./types.js";

export interface PollerCallbacks {
  onEntries(entries: FeedEntry[]): void;
  onLeaderboardChange(): void;
  onStale(stale: boolean, lastCursor: number): void;
}

export type Scheduler = (callback: () => void, ms: number) => unknown;

export class FeedPoller {
  private cursor = 0;
  private stale = false;
  private stopped = false;

  constructor(
    private readonly fetchFeed: (cursor: number) => Promise<FeedResponse>,
    private readonly callbacks: PollerCallbacks,
    private readonly schedule: Scheduler = (cb, ms) => setTimeout(cb, ms),
    private readonly defaultIntervalSeconds = 5,
  ) {}

  get lastCursor(): number {
    return this.cursor;
  }

  get isStale(): boolean {
    return this.stale;
  }

  stop(): void {
    this.stopped = true;
  }

  /** One poll step; returns the interval (seconds) until the next one. */
  async tick(): Promise<number> {
    try {
      const response = await this.fetchFeed(this.cursor);
      if (this.stale) {
        this.stale = false;
        this.callbacks.onStale(false, this.cursor);
      }
      if (response.entries.length > 0) {
        this.cursor = response.entries[response.entries.length - 1]!.cursor;
        this.callbacks.onEntries(response.entries);
        if (response.entries.some((e) => e.kind === "leaderboard_changed")) {
          this.callbacks.onLeaderboardChange();
        }
      }
      return response.poll_seconds;
    } catch {
      if (!this.stale) {
        this.stale = true;
        this.callbacks.onStale(true, this.cursor);
      }
      return this.defaultIntervalSeconds;
    }
  }

  /** Run forever (until stop) on the configured cadence. */
  start(): void {
    const loop = async () => {
      if (this.stopped) return;
      const seconds = await this.tick();
      if (this.stopped) return;
      this.schedule(loop, seconds * 1000);
    };
    void loop();
  }
}
