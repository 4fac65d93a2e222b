import { ApiClient } from "./api";
import { renderDashboard } from "./dashboard";
import { bindShortcuts } from "./keyboard";
import { renderTrajectory } from "./plots";
import type { NextQuery, SessionHandle } from "./types";
import { LABEL_KEYS, LABEL_TEXT } from "./types";
import { LabelWorkflow } from "./workflow";

/**
 * The annotation loop as a page: show the queried trajectory, take one
 * click (or key press), submit it, wait out the retrain, repeat until the
 * budget is spent. All state shown is re-read from the service.
 */
export class AnnotationApp {
  private workflow: LabelWorkflow | null = null;
  private unbindKeys: (() => void) | null = null;
  private candidates: string[] = [];
  private disposed = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private pollMs = 300,
  ) {
    this.root.innerHTML = `
      <header>
        <h1>Trajectory annotation</h1>
        <form class="attach-form">
          <input class="session-id" placeholder="session id" aria-label="session id" />
          <button type="submit">Attach</button>
        </form>
      </header>
      <main>
        <section class="query-panel">
          <div class="query-meta"></div>
          <div class="plots"></div>
          <div class="label-buttons"></div>
        </section>
        <aside class="dashboard"></aside>
      </main>
      <footer class="notice"></footer>`;
    const form = this.root.querySelector<HTMLFormElement>(".attach-form")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = this.root.querySelector<HTMLInputElement>(".session-id")!;
      if (input.value.trim()) void this.attach(input.value.trim());
    });
  }

  private el<T extends HTMLElement>(selector: string): T {
    return this.root.querySelector<T>(selector)!;
  }

  async attach(sessionId: string): Promise<void> {
    this.workflow = new LabelWorkflow(this.api, sessionId);
    this.unbindKeys?.();
    this.unbindKeys = bindShortcuts(
      () => this.candidates,
      (label) => void this.submit(label),
    );
    await this.loadRound();
  }

  /** Refresh dashboard state and render the pending query, if any. */
  async loadRound(): Promise<void> {
    if (!this.workflow || this.disposed) return;
    // the previous query is consumed: never leave its plots or buttons
    // clickable while the fresh state is in flight
    this.clearQuery();
    const id = this.workflow.sessionId;
    const [handle, metrics, log] = await Promise.all([
      this.api.getSession(id),
      this.api.getMetrics(id),
      this.api.getLog(id),
    ]);
    renderDashboard(this.el(".dashboard"), { handle, metrics, log });

    if (handle.status === "Retraining") {
      this.setNotice("retraining…");
      window.setTimeout(() => void this.loadRound(), this.pollMs);
      return;
    }
    if (handle.status !== "AwaitingLabel") {
      this.setNotice(`session ${handle.status.toLowerCase()}`);
      return;
    }
    const query = await this.workflow.refresh();
    if (!query) {
      window.setTimeout(() => void this.loadRound(), this.pollMs);
      return;
    }
    this.setNotice("");
    this.renderQuery(query);
    this.renderButtons(query.candidate_labels, handle);
  }

  private clearQuery() {
    this.candidates = [];
    this.el(".query-meta").textContent = "";
    this.el(".plots").textContent = "";
    this.el(".label-buttons").textContent = "";
  }

  private renderQuery(query: NextQuery) {
    this.el(".query-meta").innerHTML =
      `<span>query <b>${query.step}</b></span>` +
      `<span>trajectory <b data-field="trajectory-id">${query.trajectory_id}</b></span>` +
      `<span>informativeness <b>${query.informativeness.toFixed(4)}</b></span>` +
      `<span>${query.frames.length} frames</span>`;
    renderTrajectory(this.el(".plots"), query.frames, query.channel_names);
  }

  private renderButtons(labels: string[], handle: SessionHandle) {
    this.candidates = labels;
    const container = this.el(".label-buttons");
    container.textContent = "";
    for (const label of labels) {
      const button = document.createElement("button");
      button.dataset.label = label;
      // discovery sessions exist to surface out-of-class data
      button.className = handle.mode === "discovery" && label === "unknown" ? "primary" : "";
      button.textContent = `${LABEL_TEXT[label] ?? label} [${LABEL_KEYS[label] ?? ""}]`;
      button.addEventListener("click", () => void this.submit(label));
      container.appendChild(button);
    }
  }

  async submit(label: string): Promise<void> {
    if (!this.workflow) return;
    const handle = await this.workflow.submit(label);
    if (handle === null) {
      // duplicate click or stale query; re-sync silently
      await this.loadRound();
      return;
    }
    await this.loadRound();
  }

  setNotice(text: string) {
    this.el(".notice").textContent = text;
  }

  dispose() {
    this.disposed = true;
    this.unbindKeys?.();
  }
}

export function mountApp(root: HTMLElement, api = new ApiClient()): AnnotationApp {
  return new AnnotationApp(root, api);
}

declare global {
  interface Window {
    __trajalApp?: AnnotationApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.__trajalApp = mountApp(document.getElementById("app")!);
}
