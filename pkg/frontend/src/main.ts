/**
 * Entry point: hash routing between the dashboard, a session's review panel,
 * and the sweep explorer. Polling follows the service's poll-only contract.
 */
import { ServiceClient } from "./api.js";
import { Dashboard, DASHBOARD_POLL_MS } from "./dashboard.js";
import { ReviewPanel, REVIEW_POLL_MS } from "./review.js";
import { DEFAULT_FORM, SimExplorer, type SimFormValues } from "./simulator.js";

const client = new ServiceClient("");
let timer: ReturnType<typeof setInterval> | null = null;

function mount(): HTMLElement {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  root.textContent = "";
  if (timer) {
    clearInterval(timer);
    timer = null;
  }
  return root;
}

function showDashboard(): void {
  const root = mount();
  const heading = document.createElement("h1");
  heading.textContent = "Review queue";
  root.append(heading);

  const form = document.createElement("div");
  form.className = "new-session";
  const query = document.createElement("input");
  query.placeholder = "question for a new session";
  const scenario = document.createElement("input");
  scenario.placeholder = "scenario (optional)";
  const mode = document.createElement("select");
  for (const value of ["interactive", "hybrid", "automatic"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    mode.append(option);
  }
  const start = document.createElement("button");
  start.textContent = "start";
  start.addEventListener("click", async () => {
    const body: Record<string, unknown> = { config: { verification_mode: mode.value } };
    if (query.value.trim()) body.query = query.value;
    if (scenario.value.trim()) body.scenario = scenario.value;
    const created = await client.createSession(body as never);
    location.hash = `#/session/${created.id}`;
  });
  form.append(query, scenario, mode, start);
  root.append(form);

  const listRoot = document.createElement("div");
  root.append(listRoot);
  const dashboard = new Dashboard(client, listRoot, (id) => {
    location.hash = `#/session/${id}`;
  });
  void dashboard.refresh();
  timer = setInterval(() => void dashboard.refresh(), DASHBOARD_POLL_MS);
}

function showReview(sessionId: string): void {
  const root = mount();
  const back = document.createElement("a");
  back.href = "#/";
  back.textContent = "back to queue";
  root.append(back);

  const panelRoot = document.createElement("div");
  root.append(panelRoot);
  const panel = new ReviewPanel(client, sessionId, panelRoot);
  void panel.refresh();
  timer = setInterval(() => {
    if (!panel.inFlight) void panel.refresh();
  }, REVIEW_POLL_MS);
}

function showSimulator(): void {
  const root = mount();
  const heading = document.createElement("h1");
  heading.textContent = "Error-propagation explorer";
  root.append(heading);

  const form = document.createElement("div");
  form.className = "sim-form";
  const fields: [keyof SimFormValues, string][] = [
    ["num_tasks", "tasks"],
    ["num_layers", "layers"],
    ["error_prob", "error prob"],
    ["detection_prob", "detection prob"],
    ["max_refinements", "refinements"],
    ["seed", "seed"],
    ["sweepParam", "sweep"],
    ["sweepValues", "values"],
  ];
  const inputs = new Map<string, HTMLInputElement>();
  for (const [name, label] of fields) {
    const wrap = document.createElement("label");
    wrap.textContent = label + " ";
    const input = document.createElement("input");
    input.name = name;
    input.value = String(DEFAULT_FORM[name]);
    wrap.append(input);
    form.append(wrap);
    inputs.set(name, input);
  }
  const runButton = document.createElement("button");
  runButton.textContent = "run sweep";
  form.append(runButton);
  root.append(form);

  const explorerRoot = document.createElement("div");
  root.append(explorerRoot);
  const explorer = new SimExplorer(client, explorerRoot);

  runButton.addEventListener("click", () => {
    const read = (name: string) => inputs.get(name)!.value;
    void explorer.run({
      num_tasks: Number(read("num_tasks")),
      num_layers: Number(read("num_layers")),
      error_prob: Number(read("error_prob")),
      detection_prob: Number(read("detection_prob")),
      max_refinements: Number(read("max_refinements")),
      seed: Number(read("seed")),
      sweepParam: read("sweepParam"),
      sweepValues: read("sweepValues"),
    });
  });
}

export function route(): void {
  const hash = location.hash || "#/";
  const sessionMatch = /^#\/session\/(.+)$/.exec(hash);
  if (sessionMatch) {
    showReview(sessionMatch[1]);
  } else if (hash === "#/sim") {
    showSimulator();
  } else {
    showDashboard();
  }
}

export function boot(): void {
  window.addEventListener("hashchange", route);
  route();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
