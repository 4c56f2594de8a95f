/** Judge queue presentation rules.
 *
 * The server is the enforcement point (own-team items are never served,
 * gate-unmet approvals are rejected); these helpers only decide what the
 * detail pane enables so a judge cannot click into a guaranteed error.
 */

import type { JudgeQueueItem } from "./types.js";

/** Approve is disabled for reporting flags while the gate is unmet. */
export function approveEnabled(item: JudgeQueueItem): boolean {
  if (item.kind !== "reporting") return true;
  return item.gate !== undefined && item.gate.satisfied;
}

/** Reject is always available. */
export function rejectEnabled(_item: JudgeQueueItem): boolean {
  return true;
}

/** Human-readable reason shown next to a disabled approve control. */
export function approveBlockedReason(item: JudgeQueueItem): string | null {
  if (approveEnabled(item)) return null;
  const missing = item.gate?.missing ?? [];
  return `approve blocked: needs approved ${missing.join(", ")}`;
}

/** Clamp a slider value into the awardable range [0, max]. */
export function clampAward(value: number, max: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(Math.max(Math.round(value), 0), max);
}

/** After a conflict (judged elsewhere), the item drops and focus moves on. */
export function dropItem(queue: JudgeQueueItem[], flagId: string): JudgeQueueItem[] {
  return queue.filter((item) => item.flag_id !== flagId);
}

/** Queue arrives oldest-first from the server; keep that order stable. */
export function nextItem(
  queue: JudgeQueueItem[],
  afterFlagId: string | null,
): JudgeQueueItem | null {
  if (queue.length === 0) return null;
  if (afterFlagId === null) return queue[0] ?? null;
  const index = queue.findIndex((item) => item.flag_id === afterFlagId);
  return queue[index + 1] ?? queue[0] ?? null;
}
