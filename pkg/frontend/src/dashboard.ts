/**
 * Session dashboard: status badges, reviews-needed first, polled listing.
 */
import type { ServiceClient } from "./api.js";
import type { SessionSummary } from "./types.js";

export const DASHBOARD_POLL_MS = 2000;

/** Sessions awaiting review come first; ties keep creation order. */
export function sortSessions(sessions: SessionSummary[]): SessionSummary[] {
  const rank = (s: SessionSummary) => (s.status === "awaiting_user" ? 0 : 1);
  return [...sessions].sort((a, b) => rank(a) - rank(b) || a.created.localeCompare(b.created));
}

export function statusBadge(status: string): string {
  const labels: Record<string, string> = {
    awaiting_user: "needs review",
    finished: "finished",
    failed: "failed",
    in_progress: "in progress",
  };
  return labels[status] ?? status;
}

export class Dashboard {
  constructor(
    private client: ServiceClient,
    private root: HTMLElement,
    private onOpen: (id: string) => void,
  ) {}

  async refresh(): Promise<void> {
    let sessions: SessionSummary[];
    try {
      sessions = (await this.client.listSessions()).sessions;
    } catch {
      this.setBanner("service unreachable, retrying");
      return;
    }
    this.setBanner(null);
    this.render(sortSessions(sessions));
  }

  private setBanner(message: string | null): void {
    let banner = this.root.querySelector<HTMLElement>(".banner");
    if (!banner) {
      banner = document.createElement("div");
      banner.className = "banner";
      this.root.prepend(banner);
    }
    banner.textContent = message ?? "";
    banner.style.display = message ? "block" : "none";
  }

  private render(sessions: SessionSummary[]): void {
    let list = this.root.querySelector<HTMLElement>(".session-list");
    if (!list) {
      list = document.createElement("div");
      list.className = "session-list";
      this.root.append(list);
    }
    list.textContent = "";
    if (sessions.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "No sessions yet.";
      list.append(empty);
      return;
    }
    for (const session of sessions) {
      const row = document.createElement("div");
      row.className = `session-row status-${session.status}`;
      row.dataset.id = session.id;

      const badge = document.createElement("span");
      badge.className = "badge";
      badge.textContent = statusBadge(session.status);

      const text = document.createElement("span");
      text.className = "query";
      text.textContent = session.query;

      row.append(badge, text);
      row.addEventListener("click", () => this.onOpen(session.id));
      list.append(row);
    }
  }
}
