/** DOM rendering. Views are plain functions from server documents to
 * elements; they hold no authoritative state and re-render from fresh
 * API responses after every mutation. */

import { ApiClient, ApiError, type FlagFilters } from "./api.js";
import { FLAG_KINDS, completionLine, kindLabel, points, statusBadge, teamName } from "./format.js";
import { approveBlockedReason, approveEnabled, clampAward } from "./judge.js";
import { bodyComplete, claimedTotal, selectionsComplete } from "./rubric.js";
import type {
  EvidenceCard,
  FlagCard,
  FlagKind,
  JudgeQueueItem,
  LeaderboardRow,
  RubricResponse,
  TeamDoc,
  ThreadDoc,
} from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export function errorBanner(err: unknown): HTMLElement {
  if (err instanceof ApiError) {
    const extra =
      err.body.code === "DUPLICATE_EVIDENCE"
        ? ` (existing piece: ${String(err.body.details["existing_evidence_id"] ?? "?")})`
        : "";
    return el("div", { class: "banner error", role: "alert" }, [
      `${err.body.code}: ${err.body.message}${extra}`,
    ]);
  }
  return el("div", { class: "banner error", role: "alert" }, [String(err)]);
}

export function emptyState(message: string): HTMLElement {
  return el("p", { class: "empty-state" }, [message]);
}

// ---------------------------------------------------------------------
// filter pane

export interface FilterOptions {
  threads: ThreadDoc[];
  teams: TeamDoc[];
  withStatus?: boolean;
  withKind?: boolean;
}

export function filterPane(
  options: FilterOptions,
  current: FlagFilters,
  onChange: (filters: FlagFilters) => void,
): HTMLElement {
  const pane = el("div", { class: "filter-pane" });
  const select = (
    name: keyof FlagFilters,
    label: string,
    choices: { value: string; label: string }[],
  ) => {
    const box = el("select", { "data-filter": name });
    box.append(el("option", { value: "" }, [`all ${label}`]));
    for (const choice of choices) {
      const opt = el("option", { value: choice.value }, [choice.label]);
      if (current[name] === choice.value) opt.selected = true;
      box.append(opt);
    }
    box.addEventListener("change", () => {
      onChange({ ...current, [name]: box.value || undefined });
    });
    pane.append(el("label", {}, [label + " ", box]));
  };
  select("thread_id", "threads", options.threads.map((t) => ({ value: t.id, label: t.title })));
  select("team_id", "teams", options.teams.map((t) => ({ value: t.id, label: t.name })));
  if (options.withStatus) {
    select("status", "statuses",
      ["pending", "approved", "rejected"].map((s) => ({ value: s, label: s })));
  }
  if (options.withKind) {
    select("kind", "kinds", FLAG_KINDS.map((k) => ({ value: k, label: k })));
  }
  return pane;
}

// ---------------------------------------------------------------------
// cards

export function evidenceCardView(
  card: EvidenceCard,
  threads: Map<string, string>,
  teams: Map<string, string>,
): HTMLElement {
  return el("article", { class: "card evidence-card", "data-id": card.id }, [
    el("header", {}, [
      el("strong", {}, [card.name]),
      el("span", { class: "muted" }, [` — ${threads.get(card.thread_id) ?? card.thread_id}`]),
    ]),
    el("p", {}, [
      el("a", { href: card.source_url, rel: "noreferrer noopener", target: "_blank" },
        [card.source_url]),
    ]),
    el("p", { class: "muted" }, [`owned by ${teamName(teams, card.owner_team_id)}`]),
    el("p", { class: "completion" }, [
      completionLine(card),
      card.completion.complete ? " — complete" : "",
    ]),
  ]);
}

export function flagCardView(
  card: FlagCard,
  threads: Map<string, string>,
  teams: Map<string, string>,
): HTMLElement {
  return el("article", { class: `card flag-card status-${card.status}`, "data-id": card.id }, [
    el("header", {}, [
      el("strong", {}, [`${kindLabel(card.kind)} on ${card.evidence_name}`]),
      el("span", { class: "badge" }, [statusBadge(card.status)]),
    ]),
    el("p", { class: "muted" }, [
      `${threads.get(card.thread_id) ?? card.thread_id} · by ${teamName(teams, card.author_team_id)}`,
      ` · claimed ${points(card.self_assessment.claimed_points)}`,
    ]),
    el("p", {}, [
      el("a", { href: card.source_url, rel: "noreferrer noopener", target: "_blank" },
        [card.source_url]),
    ]),
  ]);
}

// ---------------------------------------------------------------------
// flag submission form

export interface SubmitHandlers {
  submitEvidence(payload: {
    thread_id: string;
    name: string;
    source_url: string;
    discovery_body: Record<string, unknown>;
    self_assessment: Record<string, string>;
  }): Promise<void>;
  submitFlag(
    evidenceId: string,
    kind: FlagKind,
    body: Record<string, unknown>,
    selections: Record<string, string>,
  ): Promise<void>;
}

export function flagForm(
  kind: FlagKind,
  rubric: RubricResponse,
  threads: ThreadDoc[],
  evidence: EvidenceCard[],
  handlers: SubmitHandlers,
): HTMLElement {
  const form = el("form", { class: `flag-form kind-${kind}` });
  const body: Record<string, unknown> = {};
  const selections: Record<string, string> = {};
  const kindRubric = rubric.rubric[kind];
  const max = rubric.max_points[kind];

  const field = (label: string, input: HTMLElement) =>
    form.append(el("label", {}, [label + " ", input]));

  const textInput = (key: string, label: string) => {
    const input = el("input", { type: "text", name: key });
    input.addEventListener("input", () => {
      body[key] = input.value;
      refresh();
    });
    field(label, input);
  };

  let threadSelect: HTMLSelectElement | null = null;
  let evidenceSelect: HTMLSelectElement | null = null;
  if (kind === "discovery") {
    threadSelect = el("select", { name: "thread_id" });
    for (const t of threads) threadSelect.append(el("option", { value: t.id }, [t.title]));
    field("thread", threadSelect);
    textInput("name", "evidence name");
    textInput("source_url", "source URL");
    const subtype = el("select", { name: "subtype" });
    for (const s of ["video", "image", "text", "account", "other"]) {
      subtype.append(el("option", { value: s }, [s]));
    }
    body["subtype"] = "video";
    subtype.addEventListener("change", () => {
      body["subtype"] = subtype.value;
      refresh();
    });
    field("subtype", subtype);
    textInput("method_description", "how it was found");
  } else {
    evidenceSelect = el("select", { name: "evidence_id" });
    for (const piece of evidence) {
      evidenceSelect.append(el("option", { value: piece.id }, [piece.name]));
    }
    field("evidence piece", evidenceSelect);
    if (kind === "archival") textInput("archive_url", "archive URL");
    if (kind === "verification") {
      textInput("claim", "claim under test");
      const verdict = el("select", { name: "verdict" });
      for (const v of ["supports", "refutes", "inconclusive"]) {
        verdict.append(el("option", { value: v }, [v]));
      }
      body["verdict"] = "supports";
      verdict.addEventListener("change", () => {
        body["verdict"] = verdict.value;
        refresh();
      });
      field("verdict", verdict);
    }
    if (kind === "reporting") {
      textInput("report_text", "report description");
      textInput("report_url", "report URL (optional)");
    }
  }

  // rubric self-assessment with per-level points and the running total
  for (const criterion of kindRubric.criteria) {
    const box = el("select", { name: `criterion-${criterion.id}` });
    box.append(el("option", { value: "" }, ["choose a level"]));
    for (const level of criterion.levels) {
      box.append(el("option", { value: level.id }, [`${level.label} (+${level.points})`]));
    }
    box.addEventListener("change", () => {
      if (box.value) selections[criterion.id] = box.value;
      else delete selections[criterion.id];
      refresh();
    });
    field(criterion.label, box);
  }

  const totalLine = el("p", { class: "claimed-total" });
  const submit = el("button", { type: "submit" }, ["submit flag"]);
  const errorSlot = el("div", { class: "error-slot" });
  form.append(totalLine, submit, errorSlot);

  function refresh(): void {
    const claimed = claimedTotal(kindRubric, selections);
    totalLine.textContent = `claimed ${claimed} of ${max} max`;
    const structural =
      kind === "discovery"
        ? bodyComplete(kind, body) &&
          typeof body["name"] === "string" && (body["name"] as string).trim() !== "" &&
          typeof body["source_url"] === "string" && (body["source_url"] as string).trim() !== ""
        : bodyComplete(kind, body);
    submit.disabled = !(structural && selectionsComplete(kindRubric, selections));
  }
  refresh();

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    errorSlot.replaceChildren();
    const done = (async () => {
      if (kind === "discovery") {
        await handlers.submitEvidence({
          thread_id: threadSelect!.value,
          name: String(body["name"] ?? ""),
          source_url: String(body["source_url"] ?? ""),
          discovery_body: {
            subtype: body["subtype"],
            method_description: body["method_description"],
          },
          self_assessment: { ...selections },
        });
      } else {
        await handlers.submitFlag(evidenceSelect!.value, kind, { ...body }, { ...selections });
      }
    })();
    done.catch((err) => errorSlot.append(errorBanner(err)));
  });
  return form;
}

// ---------------------------------------------------------------------
// judge queue

export function judgeQueueView(
  queue: JudgeQueueItem[],
  maxPointsByKind: Record<FlagKind, number>,
  onDecide: (item: JudgeQueueItem, decision: "approve" | "reject",
             awarded: number, comment: string) => Promise<void>,
): HTMLElement {
  const root = el("section", { class: "judge-queue" });
  if (queue.length === 0) {
    root.append(emptyState("nothing waiting for judgment"));
    return root;
  }
  for (const item of queue) {
    const max = maxPointsByKind[item.kind];
    const slider = el("input", {
      type: "range", min: "0", max: String(max),
      value: String(Math.min(item.self_assessment.claimed_points, max)),
    });
    const awardLabel = el("span", { class: "award" }, [slider.value]);
    slider.addEventListener("input", () => {
      awardLabel.textContent = String(clampAward(Number(slider.value), max));
    });
    const comment = el("input", { type: "text", placeholder: "comment" });
    const approve = el("button", { class: "approve" }, ["approve"]);
    const reject = el("button", { class: "reject" }, ["reject"]);
    approve.disabled = !approveEnabled(item);
    const blocked = approveBlockedReason(item);
    const errorSlot = el("div", { class: "error-slot" });
    const decide = (decision: "approve" | "reject") => {
      onDecide(item, decision, clampAward(Number(slider.value), max), comment.value)
        .catch((err) => errorSlot.append(errorBanner(err)));
    };
    approve.addEventListener("click", () => decide("approve"));
    reject.addEventListener("click", () => decide("reject"));
    root.append(
      el("article", { class: "card queue-item", "data-id": item.flag_id }, [
        el("header", {}, [
          el("strong", {}, [`${kindLabel(item.kind)} on ${item.evidence.name}`]),
        ]),
        el("p", { class: "muted" }, [
          `claimed ${points(item.self_assessment.claimed_points)} of ${max} max`,
        ]),
        ...(blocked ? [el("p", { class: "gate-note" }, [blocked])] : []),
        el("div", { class: "controls" }, [slider, awardLabel, comment, approve, reject]),
        errorSlot,
      ]),
    );
  }
  return root;
}

// ---------------------------------------------------------------------
// leaderboard

export function leaderboardView(rows: LeaderboardRow[], stale: boolean): HTMLElement {
  const table = el("table", { class: "leaderboard" });
  table.append(
    el("tr", {}, ["rank", "team", "points"].map((h) => el("th", {}, [h]))),
  );
  for (const row of rows) {
    table.append(
      el("tr", { "data-team": row.team_id }, [
        el("td", {}, [String(row.rank)]),
        el("td", {}, [row.team_name]),
        el("td", { class: "total" }, [String(row.total_points)]),
      ]),
    );
  }
  const root = el("section", { class: "leaderboard-view" });
  if (stale) {
    root.append(el("div", { class: "banner stale" }, ["connection lost, showing stale data"]));
  }
  root.append(table);
  return root;
}
