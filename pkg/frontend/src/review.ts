/**
 * Layer review panel: the human checkpoint. Shows the pending layer's
 * narrative and claim verdicts, collapses prior accepted layers, and posts
 * approve / reject / annotate decisions. State is always the latest fetched
 * snapshot; nothing is mutated locally ahead of a 2xx + refetch.
 */
import { ApiError, ServiceClient } from "./api.js";
import type { FeedbackAction, SessionView } from "./types.js";

export const REVIEW_POLL_MS = 1000;

export function submitEnabled(action: FeedbackAction, note: string, inFlight: boolean): boolean {
  if (inFlight) return false;
  if (action === "reject") return note.trim().length > 0;
  return true;
}

export class ReviewPanel {
  view: SessionView | null = null;
  action: FeedbackAction = "approve";
  note = "";
  constraint = "";
  inFlight = false;
  notice: string | null = null;

  constructor(
    private client: ServiceClient,
    private sessionId: string,
    private root: HTMLElement,
  ) {}

  async refresh(): Promise<void> {
    this.view = await this.client.getSession(this.sessionId);
    this.render();
  }

  async submit(): Promise<void> {
    if (!this.view?.pending_layer || !submitEnabled(this.action, this.note, this.inFlight)) {
      return;
    }
    this.inFlight = true;
    this.render();
    try {
      await this.client.postFeedback(this.sessionId, {
        layer_index: this.view.pending_layer.layer_index,
        action: this.action,
        note: this.action === "reject" ? this.note : null,
        added_constraint: this.action === "annotate" ? this.constraint : null,
      });
      this.notice = null;
      this.note = "";
      this.constraint = "";
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.notice = "This layer moved on while you were reviewing; showing the current state.";
      } else {
        this.notice = error instanceof Error ? error.message : String(error);
      }
    } finally {
      this.inFlight = false;
      await this.refresh(); // read-your-writes: controls re-enable after refetch
    }
  }

  render(): void {
    const view = this.view;
    this.root.textContent = "";
    if (!view) return;

    if (this.notice) {
      const banner = document.createElement("div");
      banner.className = "notice";
      banner.textContent = this.notice;
      this.root.append(banner);
    }

    const heading = document.createElement("h2");
    heading.textContent = view.query?.text ?? view.id;
    this.root.append(heading);

    this.renderPriorLayers(view);

    if (view.final) {
      const done = document.createElement("div");
      done.className = "final-answer";
      done.textContent = view.final.text;
      this.root.append(done);
      return;
    }
    if (view.failed) {
      const failed = document.createElement("div");
      failed.className = "failed";
      failed.textContent = "Session failed (refinement budget exhausted).";
      this.root.append(failed);
      return;
    }
    if (!view.pending_layer) {
      const waiting = document.createElement("p");
      waiting.textContent = "No layer awaiting review.";
      this.root.append(waiting);
      return;
    }
    this.renderPendingLayer(view);
  }

  private renderPriorLayers(view: SessionView): void {
    const accepted = view.layer_states
      .map((state, index) => ({ state, index }))
      .filter((entry) => entry.state === "Accepted");
    if (accepted.length === 0) return;
    const details = document.createElement("details");
    details.className = "prior-layers";
    const summary = document.createElement("summary");
    summary.textContent = `${accepted.length} accepted layer(s)`;
    details.append(summary);
    for (const { index } of accepted) {
      const item = document.createElement("p");
      const objective = view.plan?.sub_problems[index]?.objective ?? `layer ${index}`;
      item.textContent = `${index}: ${objective}`;
      details.append(item);
    }
    this.root.append(details);
  }

  private renderPendingLayer(view: SessionView): void {
    const pending = view.pending_layer!;
    const panel = document.createElement("div");
    panel.className = "pending-layer";

    const title = document.createElement("h3");
    title.textContent = `Layer ${pending.layer_index}: ${pending.objective ?? ""}`;
    const attempt = document.createElement("span");
    attempt.className = "attempt";
    attempt.textContent =
      pending.attempt > 1 ? ` (attempt ${pending.attempt}, refined)` : " (attempt 1)";
    title.append(attempt);
    panel.append(title);

    const narrative = document.createElement("pre");
    narrative.className = "narrative";
    narrative.textContent = pending.narrative ?? "";
    panel.append(narrative);

    const claims = document.createElement("ul");
    claims.className = "claims";
    for (const claim of pending.claims) {
      const item = document.createElement("li");
      item.className = `claim status-${(claim.status ?? "none").toLowerCase()}`;
      const status = document.createElement("span");
      status.className = "claim-status";
      status.textContent = claim.status ?? "Unchecked";
      const statement = document.createElement("span");
      statement.className = "claim-statement";
      statement.textContent = claim.statement;
      const evidence = document.createElement("span");
      evidence.className = "claim-evidence";
      evidence.textContent = claim.evidence ?? "";
      item.append(status, statement, evidence);
      claims.append(item);
    }
    panel.append(claims);
    panel.append(this.renderControls());
    this.root.append(panel);
  }

  private renderControls(): HTMLElement {
    const controls = document.createElement("div");
    controls.className = "controls";

    const select = document.createElement("select");
    select.className = "action";
    for (const action of ["approve", "reject", "annotate"] as FeedbackAction[]) {
      const option = document.createElement("option");
      option.value = action;
      option.textContent = action;
      option.selected = action === this.action;
      select.append(option);
    }
    select.addEventListener("change", () => {
      this.action = select.value as FeedbackAction;
      this.render();
    });
    controls.append(select);

    if (this.action === "reject") {
      const note = document.createElement("input");
      note.className = "note";
      note.placeholder = "why this layer is wrong (required)";
      note.value = this.note;
      note.addEventListener("input", () => {
        this.note = note.value;
        const button = controls.querySelector<HTMLButtonElement>(".submit");
        if (button) button.disabled = !submitEnabled(this.action, this.note, this.inFlight);
      });
      controls.append(note);
    }
    if (this.action === "annotate") {
      const constraint = document.createElement("input");
      constraint.className = "constraint";
      constraint.placeholder = "constraint to add";
      constraint.value = this.constraint;
      constraint.addEventListener("input", () => {
        this.constraint = constraint.value;
      });
      controls.append(constraint);
    }

    const submit = document.createElement("button");
    submit.className = "submit";
    submit.textContent = "submit";
    submit.disabled = !submitEnabled(this.action, this.note, this.inFlight);
    submit.addEventListener("click", () => void this.submit());
    controls.append(submit);
    return controls;
  }
}
