import { describe, expect, it } from "vitest";

import {
  approveBlockedReason,
  approveEnabled,
  clampAward,
  dropItem,
  nextItem,
  rejectEnabled,
} from "../src/judge.js";
import type { FlagKind, JudgeQueueItem } from "../src/types.js";

function item(flagId: string, kind: FlagKind, gate?: JudgeQueueItem["gate"]): JudgeQueueItem {
  const base: JudgeQueueItem = {
    flag_id: flagId,
    kind,
    evidence: { id: "ev1", name: "clip", thread_id: "th1", owner_team_id: "tm1" },
    self_assessment: { selections: {}, claimed_points: 20 },
    submitted_at: 100,
  };
  if (gate) base.gate = gate;
  return base;
}

describe("approveEnabled", () => {
  it("non-reporting kinds are always approvable", () => {
    expect(approveEnabled(item("fl1", "discovery"))).toBe(true);
    expect(approveEnabled(item("fl2", "verification"))).toBe(true);
  });

  it("reporting follows the gate", () => {
    expect(approveEnabled(item("fl3", "reporting", { satisfied: true, missing: [] }))).toBe(true);
    expect(
      approveEnabled(item("fl4", "reporting", { satisfied: false, missing: ["verification"] })),
    ).toBe(false);
    expect(approveEnabled(item("fl5", "reporting"))).toBe(false);
  });

  it("reject stays available even when approve is blocked", () => {
    const blocked = item("fl6", "reporting", { satisfied: false, missing: ["archival"] });
    expect(rejectEnabled(blocked)).toBe(true);
  });
});

describe("approveBlockedReason", () => {
  it("names the missing prerequisites", () => {
    const blocked = item("fl7", "reporting", {
      satisfied: false,
      missing: ["archival", "verification"],
    });
    expect(approveBlockedReason(blocked)).toBe(
      "approve blocked: needs approved archival, verification",
    );
  });

  it("is null when approve is enabled", () => {
    expect(approveBlockedReason(item("fl8", "discovery"))).toBeNull();
  });
});

describe("clampAward", () => {
  it("bounds the slider into [0, max] and rounds to whole points", () => {
    expect(clampAward(-10, 700)).toBe(0);
    expect(clampAward(9000, 700)).toBe(700);
    expect(clampAward(599.6, 700)).toBe(600);
    expect(clampAward(Number.NaN, 700)).toBe(0);
  });
});

describe("dropItem / nextItem", () => {
  const queue = [item("fl1", "discovery"), item("fl2", "archival"), item("fl3", "verification")];

  it("dropItem removes exactly the judged flag", () => {
    expect(dropItem(queue, "fl2").map((i) => i.flag_id)).toEqual(["fl1", "fl3"]);
    expect(dropItem(queue, "nope")).toHaveLength(3);
  });

  it("nextItem walks the queue in server order and wraps", () => {
    expect(nextItem(queue, null)?.flag_id).toBe("fl1");
    expect(nextItem(queue, "fl1")?.flag_id).toBe("fl2");
    expect(nextItem(queue, "fl3")?.flag_id).toBe("fl1");
    expect(nextItem([], null)).toBeNull();
  });

  it("after a conflict, the dropped item's successor comes up next", () => {
    const remaining = dropItem(queue, "fl2");
    expect(nextItem(remaining, "fl1")?.flag_id).toBe("fl3");
  });
});
