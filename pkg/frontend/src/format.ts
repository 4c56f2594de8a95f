/** Small presentation helpers shared by the views. */

import type { EvidenceCard, FlagKind, FlagStatus } from "./types.js";

export const FLAG_KINDS: FlagKind[] = ["discovery", "archival", "verification", "reporting"];

export function statusBadge(status: FlagStatus): string {
  return { pending: "⏳ pending", approved: "✔ approved", rejected: "✘ rejected" }[status];
}

export function kindLabel(kind: FlagKind): string {
  return kind.charAt(0).toUpperCase() + kind.slice(1);
}

/** One line per kind, e.g. "discovery 1/1 · archival 0/1". */
export function completionLine(card: EvidenceCard): string {
  return FLAG_KINDS.map((kind) => {
    const counts = card.completion.counts[kind];
    const total = counts.pending + counts.approved + counts.rejected;
    return `${kind} ${counts.approved}/${total}`;
  }).join(" · ");
}

export function points(n: number): string {
  return `${n} pt${n === 1 ? "" : "s"}`;
}

export function teamName(teams: Map<string, string>, teamId: string): string {
  return teams.get(teamId) ?? teamId;
}
