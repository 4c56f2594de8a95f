/** Application shell: login, the two navigation bars, page routing, and
 * the feed poller that keeps the leaderboard live. */

import { ApiClient, type FlagFilters } from "./api.js";
import { FeedPoller } from "./poller.js";
import type { EventDoc, FeedEntry, FlagKind, RubricResponse, TeamDoc, ThreadDoc } from "./types.js";
import {
  el,
  emptyState,
  errorBanner,
  evidenceCardView,
  filterPane,
  flagCardView,
  flagForm,
  judgeQueueView,
  leaderboardView,
} from "./views.js";

type Page = "threads" | "evidence" | "flags" | "submit" | "judge" | "tasks"
  | "leaderboard" | "team" | "tools" | "birds-eye";

interface Context {
  event: EventDoc;
  threads: ThreadDoc[];
  teams: TeamDoc[];
  rubric: RubricResponse;
  roles: string[];
}

const api = new ApiClient("");
const app = document.getElementById("app") ?? document.body;

let context: Context | null = null;
let page: Page = "evidence";
let filters: FlagFilters = {};
let submitKind: FlagKind = "discovery";
let poller: FeedPoller | null = null;
let stale = false;
let ticker: FeedEntry[] = [];

function threadMap(): Map<string, string> {
  return new Map((context?.threads ?? []).map((t) => [t.id, t.title]));
}

function teamMap(): Map<string, string> {
  return new Map((context?.teams ?? []).map((t) => [t.id, t.name]));
}

async function render(): Promise<void> {
  if (!context) {
    renderLogin();
    return;
  }
  const main = el("main", {});
  try {
    switch (page) {
      case "threads": {
        const list = el("ul", { class: "threads" });
        for (const t of context.threads) {
          list.append(el("li", {}, [el("strong", {}, [t.title]), ` — ${t.description}`]));
        }
        main.append(list);
        break;
      }
      case "evidence": {
        const cards = await api.evidence(context.event.id, filters);
        main.append(paneFor({ withStatus: false, withKind: false }));
        if (cards.length === 0) main.append(emptyState("no evidence yet, go find some"));
        for (const card of cards) {
          main.append(evidenceCardView(card, threadMap(), teamMap()));
        }
        break;
      }
      case "flags": {
        const cards = await api.flags(context.event.id, filters);
        main.append(paneFor({ withStatus: true, withKind: true }));
        if (cards.length === 0) main.append(emptyState("no flags match these filters"));
        for (const card of cards) {
          main.append(flagCardView(card, threadMap(), teamMap()));
        }
        break;
      }
      case "submit": {
        const tabs = el("nav", { class: "kind-tabs" });
        for (const kind of ["discovery", "archival", "verification", "reporting"] as FlagKind[]) {
          const tab = el("button", { class: kind === submitKind ? "active" : "" }, [kind]);
          tab.addEventListener("click", () => {
            submitKind = kind;
            void render();
          });
          tabs.append(tab);
        }
        const evidence = await api.evidence(context.event.id);
        main.append(
          tabs,
          flagForm(submitKind, context.rubric, context.threads, evidence, {
            submitEvidence: async (payload) => {
              await api.submitEvidence(context!.event.id, payload);
              page = "evidence";
              await render();
            },
            submitFlag: async (evidenceId, kind, body, selections) => {
              await api.submitFlag(evidenceId, { kind, body, self_assessment: selections });
              page = "flags";
              await render();
            },
          }),
        );
        break;
      }
      case "judge": {
        const queue = await api.judgeQueue(context.event.id, filters);
        main.append(paneFor({ withStatus: false, withKind: true }));
        main.append(
          judgeQueueView(queue, context.rubric.max_points, async (item, decision, awarded, comment) => {
            await api.judge(item.flag_id, decision, awarded, comment);
            await render(); // the queue re-fetches; judged items drop out
          }),
        );
        break;
      }
      case "tasks": {
        const tasks = await api.tasks(context.event.id);
        if (tasks.length === 0) main.append(emptyState("no open tasks"));
        for (const task of tasks) {
          main.append(
            el("article", { class: "card task-card" }, [
              el("strong", {}, [task.title]),
              el("p", {}, [task.instructions]),
              el("p", { class: "muted" }, [
                `${task.reward_points} pts · ${task.accepted_count}/${task.max_accepted} accepted · ${task.status}`,
              ]),
            ]),
          );
        }
        break;
      }
      case "leaderboard": {
        const rows = await api.leaderboard(context.event.id);
        main.append(leaderboardView(rows, stale));
        const list = el("ul", { class: "ticker" });
        for (const entry of ticker.slice(-12).reverse()) {
          list.append(el("li", {}, [`#${entry.cursor} ${entry.kind}`]));
        }
        main.append(el("aside", { class: "activity" }, [el("h3", {}, ["activity"]), list]));
        break;
      }
      case "team": {
        for (const team of context.teams) {
          main.append(
            el("article", { class: "card team-card" }, [
              el("strong", {}, [team.name]),
              el("p", { class: "muted" }, [`${team.member_ids.length} members`]),
            ]),
          );
        }
        break;
      }
      case "tools": {
        const tools = await api.tools();
        if (tools.length === 0) main.append(emptyState("no tools registered"));
        for (const tool of tools) {
          main.append(
            el("article", { class: "card tool-card" }, [
              el("strong", {}, [tool.name]),
              el("span", { class: "muted" }, [tool.revoked ? " (revoked)" : " (active)"]),
            ]),
          );
        }
        break;
      }
      case "birds-eye": {
        const view = await api.birdsEye(context.event.id);
        const table = el("table", { class: "birds-eye" });
        table.append(el("tr", {}, ["thread", "evidence", "flags", "pending"]
          .map((h) => el("th", {}, [h]))));
        for (const [, info] of Object.entries(view.threads)) {
          table.append(el("tr", {}, [
            el("td", {}, [info.title]),
            el("td", {}, [String(info.evidence)]),
            el("td", {}, [String(info.flags)]),
            el("td", {}, [String(info.pending_flags)]),
          ]));
        }
        main.append(table,
          el("p", { class: "muted" }, [`${view.pending_flags.length} flags waiting overall`]));
        break;
      }
    }
  } catch (err) {
    main.append(errorBanner(err));
  }
  app.replaceChildren(header(), main);
}

function paneFor(extra: { withStatus: boolean; withKind: boolean }): HTMLElement {
  return filterPane(
    { threads: context!.threads, teams: context!.teams, ...extra },
    filters,
    (next) => {
      filters = next;
      void render();
    },
  );
}

function header(): HTMLElement {
  const top = el("nav", { class: "menu-top" }, [
    el("strong", {}, [context!.event.title]),
    el("span", { class: "muted" }, [` (${context!.event.state})`]),
  ]);
  const pages: [Page, string, boolean][] = [
    ["threads", "threads", true],
    ["evidence", "evidence", true],
    ["flags", "flags", true],
    ["submit", "add evidence / flag", context!.roles.includes("participant")],
    ["judge", "judge queue", context!.roles.includes("judge")],
    ["tasks", "tasks", true],
    ["leaderboard", "leaderboard", true],
    ["team", "teams", true],
    ["tools", "tools", true],
    ["birds-eye", "birds-eye", context!.roles.includes("expert")],
  ];
  const bottom = el("nav", { class: "menu-bottom" });
  for (const [target, label, visible] of pages) {
    if (!visible) continue;
    const button = el("button", { class: page === target ? "active" : "" }, [label]);
    button.addEventListener("click", () => {
      page = target;
      filters = {};
      void render();
    });
    bottom.append(button);
  }
  return el("header", {}, [top, bottom]);
}

function renderLogin(): void {
  const user = el("input", { type: "text", placeholder: "username", autocomplete: "username" });
  const pass = el("input", {
    type: "password", placeholder: "password", autocomplete: "current-password",
  });
  const errorSlot = el("div", { class: "error-slot" });
  const form = el("form", { class: "login" }, [
    el("h1", {}, ["crowdctf"]),
    user, pass,
    el("button", { type: "submit" }, ["log in"]),
    errorSlot,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    errorSlot.replaceChildren();
    void (async () => {
      try {
        const session = await api.login(user.value, pass.value);
        const events = await api.events();
        const current = events.find((e) => e.state === "open") ?? events[0];
        if (!current) {
          errorSlot.append(errorBanner(new Error("no events on this server")));
          return;
        }
        context = {
          event: current,
          threads: await api.threads(current.id),
          teams: await api.teams(current.id),
          rubric: await api.rubric(current.id),
          roles: session.roles,
        };
        startPolling(current.id);
        await render();
      } catch (err) {
        errorSlot.append(errorBanner(err));
      }
    })();
  });
  app.replaceChildren(form);
}

function startPolling(eventId: string): void {
  poller?.stop();
  poller = new FeedPoller((cursor) => api.feed(eventId, cursor), {
    onEntries(entries) {
      ticker = [...ticker, ...entries].slice(-100);
    },
    onLeaderboardChange() {
      if (page === "leaderboard") void render();
    },
    onStale(isStale) {
      stale = isStale;
      if (page === "leaderboard") void render();
    },
  });
  poller.start();
}

void render();
