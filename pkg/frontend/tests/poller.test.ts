import { describe, expect, it } from "vitest";

import { FeedPoller, type PollerCallbacks } from "../src/poller.js";
import type { FeedEntry, FeedResponse } from "../src/types.js";

function entry(cursor: number, kind = "flag_submitted"): FeedEntry {
  return { cursor, event_id: "ev1", kind, subject_ids: {}, at: cursor };
}

interface Recorder {
  callbacks: PollerCallbacks;
  entries: FeedEntry[];
  leaderboardChanges: number;
  staleFlips: boolean[];
}

function recorder(): Recorder {
  const rec: Recorder = {
    entries: [],
    leaderboardChanges: 0,
    staleFlips: [],
    callbacks: {
      onEntries: (es) => rec.entries.push(...es),
      onLeaderboardChange: () => {
        rec.leaderboardChanges += 1;
      },
      onStale: (stale) => rec.staleFlips.push(stale),
    },
  };
  return rec;
}

describe("FeedPoller.tick", () => {
  it("advances the cursor past the newest entry and delivers entries", async () => {
    const rec = recorder();
    const served: number[] = [];
    const poller = new FeedPoller(
      async (cursor): Promise<FeedResponse> => {
        served.push(cursor);
        if (cursor === 0) return { entries: [entry(1), entry(2)], poll_seconds: 5 };
        if (cursor === 2) return { entries: [entry(3)], poll_seconds: 7 };
        return { entries: [], poll_seconds: 5 };
      },
      rec.callbacks,
    );
    expect(await poller.tick()).toBe(5);
    expect(await poller.tick()).toBe(7);
    expect(await poller.tick()).toBe(5);
    expect(served).toEqual([0, 2, 3]);
    expect(poller.lastCursor).toBe(3);
    expect(rec.entries.map((e) => e.cursor)).toEqual([1, 2, 3]);
    expect(rec.leaderboardChanges).toBe(0);
    expect(rec.staleFlips).toEqual([]);
  });

  it("fires onLeaderboardChange when a leaderboard_changed entry arrives", async () => {
    const rec = recorder();
    const poller = new FeedPoller(
      async () => ({
        entries: [entry(1), entry(2, "leaderboard_changed")],
        poll_seconds: 5,
      }),
      rec.callbacks,
    );
    await poller.tick();
    expect(rec.leaderboardChanges).toBe(1);
  });

  it("flips stale on failure, keeps the cursor, and recovers on success", async () => {
    const rec = recorder();
    let failing = false;
    const poller = new FeedPoller(
      async (cursor): Promise<FeedResponse> => {
        if (failing) throw new Error("network down");
        return cursor === 0
          ? { entries: [entry(4)], poll_seconds: 5 }
          : { entries: [], poll_seconds: 5 };
      },
      rec.callbacks,
      undefined,
      9,
    );
    await poller.tick();
    expect(poller.isStale).toBe(false);

    failing = true;
    expect(await poller.tick()).toBe(9);
    expect(await poller.tick()).toBe(9);
    expect(poller.isStale).toBe(true);
    expect(poller.lastCursor).toBe(4);
    expect(rec.staleFlips).toEqual([true]);

    failing = false;
    await poller.tick();
    expect(poller.isStale).toBe(false);
    expect(rec.staleFlips).toEqual([true, false]);
  });
});

describe("FeedPoller.start", () => {
  it("loops on the server-provided cadence until stopped", async () => {
    const rec = recorder();
    const delays: number[] = [];
    const queued: (() => void)[] = [];
    let polls = 0;
    const poller = new FeedPoller(
      async (): Promise<FeedResponse> => {
        polls += 1;
        return { entries: [entry(polls)], poll_seconds: polls };
      },
      rec.callbacks,
      (cb, ms) => {
        delays.push(ms);
        queued.push(cb);
      },
    );
    poller.start();
    await Promise.resolve();
    await Promise.resolve();
    expect(polls).toBe(1);
    expect(delays).toEqual([1000]);

    queued.shift()!();
    await Promise.resolve();
    await Promise.resolve();
    expect(polls).toBe(2);
    expect(delays).toEqual([1000, 2000]);

    poller.stop();
    queued.shift()!();
    await Promise.resolve();
    await Promise.resolve();
    expect(polls).toBe(2);
  });
});
