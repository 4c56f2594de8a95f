/** Documents as the HTTP API serves them. The UI never derives
 * authoritative state from these; every mutation round-trips. */

export type Role = "expert" | "judge" | "participant" | "tool";
export type EventState = "draft" | "open" | "closed" | "finalized";
export type FlagKind = "discovery" | "archival" | "verification" | "reporting";
export type FlagStatus = "pending" | "approved" | "rejected";

export interface LoginResponse {
  token: string;
  user_id: string;
  roles: Role[];
  display_name: string;
}

export interface EventDoc {
  id: string;
  title: string;
  state: EventState;
  rubric_id: string;
  collab_policy_id: string;
}

export interface ThreadDoc {
  id: string;
  event_id: string;
  title: string;
  description: string;
}

export interface TeamDoc {
  id: string;
  event_id: string;
  name: string;
  member_ids: string[];
  leader_id: string;
}

export interface RubricLevel {
  id: string;
  label: string;
  points: number;
}

export interface RubricCriterion {
  id: string;
  label: string;
  levels: RubricLevel[];
}

export interface KindRubricDoc {
  base_points: number;
  criteria: RubricCriterion[];
}

export interface RubricResponse {
  rubric: Record<FlagKind, KindRubricDoc>;
  max_points: Record<FlagKind, number>;
  collab_policy: { mode: string; amount: number; fraction: string; enabled: boolean };
}

export interface CompletionCounts {
  pending: number;
  approved: number;
  rejected: number;
}

export interface EvidenceCard {
  id: string;
  thread_id: string;
  event_id: string;
  name: string;
  source_url: string;
  owner_team_id: string;
  creator_id: string;
  completion: {
    evidence_id: string;
    counts: Record<FlagKind, CompletionCounts>;
    complete: boolean;
  };
}

export interface FlagCard {
  id: string;
  evidence_id: string;
  kind: FlagKind;
  author_id: string;
  author_team_id: string;
  status: FlagStatus;
  body: Record<string, unknown>;
  self_assessment: { selections: Record<string, string>; claimed_points: number };
  submitted_at: number;
  thread_id: string;
  evidence_name: string;
  source_url: string;
}

export interface GateStatus {
  satisfied: boolean;
  missing: FlagKind[];
}

export interface JudgeQueueItem {
  flag_id: string;
  kind: FlagKind;
  evidence: { id: string; name: string; thread_id: string; owner_team_id: string };
  self_assessment: { selections: Record<string, string>; claimed_points: number };
  submitted_at: number;
  gate?: GateStatus;
}

export interface LeaderboardRow {
  team_id: string;
  team_name: string;
  rank: number;
  total_points: number;
  by_source: Record<string, number>;
  by_kind: Record<string, number>;
}

export interface FeedEntry {
  cursor: number;
  event_id: string;
  kind: string;
  subject_ids: Record<string, string>;
  at: number;
}

export interface FeedResponse {
  entries: FeedEntry[];
  poll_seconds: number;
}

export interface TaskDoc {
  id: string;
  event_id: string;
  creator_id: string;
  creator_user_id: string;
  title: string;
  instructions: string;
  reward_points: number;
  max_accepted: number;
  status: "open" | "exhausted" | "withdrawn";
  accepted_count: number;
}

export interface ToolDoc {
  id: string;
  name: string;
  owner_user_id: string;
  revoked: boolean;
}

export interface BirdsEye {
  event_id: string;
  state: EventState;
  threads: Record<string, { title: string; evidence: number; flags: number; pending_flags: number }>;
  open_tasks: string[];
  pending_flags: string[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
