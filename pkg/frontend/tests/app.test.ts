import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { renderDashboard } from "../src/dashboard";
import { mountApp } from "../src/main";
import { MockService } from "./mock-service";

async function waitFor(predicate: () => boolean, timeoutMs = 5000): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) throw new Error("waitFor timed out");
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("annotation app", () => {
  it("renders the pending query with plots and label buttons", async () => {
    const service = new MockService({ budget: 2, queue: [11, 22] });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, new ApiClient("", service.fetchFn));
    await app.attach("mock");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length === 3);
    expect(root.querySelector("[data-field=trajectory-id]")?.textContent).toBe("11");
    expect(root.querySelectorAll(".plots svg[data-plot]").length).toBe(4);
    app.dispose();
  });

  it("a label click advances the dashboard step by one", async () => {
    const service = new MockService({ budget: 2, queue: [11, 22] });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, new ApiClient("", service.fetchFn));
    await app.attach("mock");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length > 0);
    root.querySelector<HTMLButtonElement>('button[data-label="cut_in"]')!.click();
    await waitFor(() => root.querySelector("[data-field=step]")?.textContent === "1");
    expect(service.acceptedSubmissions).toBe(1);
    app.dispose();
  });

  it("double-clicking a label button records a single submission", async () => {
    const service = new MockService({ budget: 2, queue: [11, 22], latencyMs: 15 });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, new ApiClient("", service.fetchFn));
    await app.attach("mock");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length > 0);
    const button = root.querySelector<HTMLButtonElement>('button[data-label="cut_in"]')!;
    button.click();
    button.click(); // double click lands while the first request is in flight
    await waitFor(() => root.querySelector("[data-field=step]")?.textContent === "1");
    expect(service.acceptedSubmissions).toBe(1);
    expect(service.step).toBe(1);
    app.dispose();
  });

  it("completed sessions disable labeling and keep the final curve", async () => {
    const service = new MockService({ budget: 1, queue: [11] });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, new ApiClient("", service.fetchFn));
    await app.attach("mock");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length > 0);
    root.querySelector<HTMLButtonElement>('button[data-label="left_drive_by"]')!.click();
    await waitFor(() => root.querySelector("[data-field=status]")?.textContent === "Complete");
    expect(root.querySelectorAll(".label-buttons button").length).toBe(0);
    expect(root.querySelectorAll(".metric-curve polyline").length).toBe(1);
    app.dispose();
  });

  it("keyboard shortcut labels the pending query", async () => {
    const service = new MockService({ budget: 2, queue: [11, 22] });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, new ApiClient("", service.fetchFn));
    await app.attach("mock");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length > 0);
    window.dispatchEvent(new KeyboardEvent("keydown", { key: "3", bubbles: true }));
    await waitFor(() => root.querySelector("[data-field=step]")?.textContent === "1");
    const log = service["requests"].filter((r) => r.startsWith("POST"));
    expect(log.length).toBe(1);
    app.dispose();
  });

  it("flags the unknown option as primary in discovery mode", async () => {
    const service = new MockService({ budget: 1, queue: [11], mode: "discovery" });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, new ApiClient("", service.fetchFn));
    await app.attach("mock");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length === 4);
    const unknown = root.querySelector<HTMLButtonElement>('button[data-label="unknown"]')!;
    expect(unknown.classList.contains("primary")).toBe(true);
    app.dispose();
  });
});

describe("dashboard", () => {
  it("is a pure function of service data", () => {
    const handle = {
      session_id: "s",
      status: "AwaitingLabel" as const,
      step: 3,
      budget: 10,
      budget_remaining: 7,
      mode: "classification" as const,
      strategy: "entropy",
      pending: null,
    };
    const metrics = { session_id: "s", mode: "classification", steps: [0, 1], values: [0.5, 0.7] };
    const log = {
      session_id: "s",
      records: [
        { step: 1, trajectory_id: 4, informativeness: 1.09, strategy: "entropy", label: "cut_in" },
      ],
    };
    const a = document.createElement("div");
    const b = document.createElement("div");
    renderDashboard(a, { handle, metrics, log });
    renderDashboard(b, { handle, metrics, log });
    expect(a.innerHTML).toBe(b.innerHTML);
    expect(a.querySelector("[data-field=budget-remaining]")?.textContent).toBe("7");
    expect(a.textContent).toContain("Cut in");
  });
});
