/** Self-assessment arithmetic for the flag submission form.
 *
 * The claimed total shown while filling the form is recomputed locally
 * for responsiveness, but the server's recomputation is authoritative;
 * a mismatch between the two is surfaced as a warning (see
 * claimedMismatch).
 */

import type { FlagKind, KindRubricDoc, RubricResponse } from "./types.js";

/** Local claimed total: base points plus the chosen level of each criterion. */
export function claimedTotal(
  kindRubric: KindRubricDoc,
  selections: Record<string, string>,
): number {
  let total = kindRubric.base_points;
  for (const criterion of kindRubric.criteria) {
    const levelId = selections[criterion.id];
    const level = criterion.levels.find((l) => l.id === levelId);
    if (level) total += level.points;
  }
  return total;
}

/** A submission is only sendable when every criterion has a selection. */
export function selectionsComplete(
  kindRubric: KindRubricDoc,
  selections: Record<string, string>,
): boolean {
  return kindRubric.criteria.every((criterion) =>
    criterion.levels.some((l) => l.id === selections[criterion.id]),
  );
}

export function maxPoints(rubric: RubricResponse, kind: FlagKind): number {
  return rubric.max_points[kind];
}

/** Top level of every criterion: claiming it all must equal the maximum. */
export function maxSelections(kindRubric: KindRubricDoc): Record<string, string> {
  const selections: Record<string, string> = {};
  for (const criterion of kindRubric.criteria) {
    const top = criterion.levels[criterion.levels.length - 1];
    if (top) selections[criterion.id] = top.id;
  }
  return selections;
}

/** True when the server recomputed a different claimed total than the
 * form displayed; the caller renders a visible warning. */
export function claimedMismatch(local: number, serverClaimed: number): boolean {
  return local !== serverClaimed;
}

/** Kind-specific required fields, mirrored from the server's validation
 * so the submit button can be disabled before a doomed round-trip. */
export function bodyComplete(kind: FlagKind, body: Record<string, unknown>): boolean {
  const text = (v: unknown): boolean => typeof v === "string" && v.trim().length > 0;
  const url = (v: unknown): boolean =>
    typeof v === "string" && /^https?:\/\/[^\s/]+/.test(v);
  switch (kind) {
    case "discovery":
      return (
        ["video", "image", "text", "account", "other"].includes(String(body.subtype)) &&
        text(body.method_description)
      );
    case "archival":
      return url(body.archive_url);
    case "verification":
      return (
        text(body.claim) &&
        ["supports", "refutes", "inconclusive"].includes(String(body.verdict))
      );
    case "reporting":
      return text(body.report_text) || url(body.report_url);
  }
}
