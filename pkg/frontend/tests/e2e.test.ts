// End-to-end: the real browser UI code drives the real Python service.
//
// Criterion 1: scripted UI-driven labeling with ground-truth answers
// reproduces the simulated-oracle query sequence of a seed-matched session
// (10-query session, exact sequence match).
// Criterion 2: an automated double-submit through the UI advances the
// session exactly one step.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { mountApp } from "../src/main";

const PYTHON = process.env.TRAJAL_PYTHON ?? "python3";
const PORT = 8970 + Math.floor(Math.random() * 20);
const BASE = `http://127.0.0.1:${PORT}`;

const realFetch: typeof fetch = globalThis.fetch.bind(globalThis);

let workdir: string;
let server: ChildProcess | null = null;
let truth: Record<number, string> = {};
let referenceSequence: Array<[number, number, string]> = [];
let referenceMetrics: number[] = [];

function runCli(args: string[]) {
  const env = {
    ...process.env,
    PYTHONPATH: path.resolve(process.cwd(), "../src"),
  };
  return execFileSync(PYTHON, ["-m", "trajal.cli", ...args], {
    cwd: workdir,
    env,
    encoding: "utf-8",
  });
}

async function waitFor(predicate: () => boolean, timeoutMs = 60_000): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) throw new Error("waitFor timed out");
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(path.join(tmpdir(), "trajal-ui-e2e-"));
  runCli(["generate", "--alpha", "20", "--counts", "6,40,20", "--seed", "3", "--out", "data"]);
  runCli([
    "embed",
    "--manifest", "data/manifest.json",
    "--method", "mtsne",
    "--out", "data/embedding.jsonl",
    "--iterations", "250",
    "--perplexity", "12",
    "--seed", "3",
  ]);
  // reference run: the same session against the simulated oracle
  runCli([
    "run-al",
    "--manifest", "data/manifest.json",
    "--embedding", "data/embedding.jsonl",
    "--strategy", "margin",
    "--budget", "10",
    "--seed", "1",
    "--journal", "reference.journal",
    "--metrics-out", "reference-metrics.txt",
  ]);

  truth = Object.fromEntries(
    readFileSync(path.join(workdir, "data/trajectories.jsonl"), "utf-8")
      .trim()
      .split("\n")
      .map((line) => {
        const record = JSON.parse(line);
        return [record.id, record.label];
      }),
  );
  const events = readFileSync(path.join(workdir, "reference.journal"), "utf-8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
  const labels = new Map(
    events
      .filter((e) => e.event === "label-received")
      .map((e) => [e.step, e.label] as [number, string]),
  );
  referenceSequence = events
    .filter((e) => e.event === "query-issued")
    .map((e) => [e.step, e.trajectory_id, labels.get(e.step) ?? ""]);
  referenceMetrics = readFileSync(path.join(workdir, "reference-metrics.txt"), "utf-8")
    .trim()
    .split("\n")
    .map((line) => Number(line.split(" ")[1]));

  server = spawn(
    PYTHON,
    [
      "-m", "trajal.cli", "serve",
      "--port", String(PORT),
      "--data-dir", "data",
      "--journal-dir", "journals",
    ],
    {
      cwd: workdir,
      env: { ...process.env, PYTHONPATH: path.resolve(process.cwd(), "../src") },
      stdio: ["ignore", "inherit", "inherit"],
    },
  );
  const started = Date.now();
  for (;;) {
    try {
      await realFetch(`${BASE}/docs`);
      break;
    } catch {
      if (Date.now() - started > 60_000) throw new Error("service did not start");
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
});

afterAll(() => {
  server?.kill("SIGKILL");
});

function uiClient(): ApiClient {
  return new ApiClient(BASE, (url, init) => realFetch(url, init));
}

describe("human-in-the-loop equivalence", () => {
  it("UI-driven ground-truth labeling reproduces the simulated-oracle sequence", async () => {
    const api = uiClient();
    await api.createSession({
      manifest: "manifest.json",
      embedding: "embedding.jsonl",
      session_id: "ui-e2e",
      config: { strategy: "margin", budget: 10, seed: 1 },
    });

    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, api);
    await app.attach("ui-e2e");

    for (let round = 0; round < 10; round++) {
      await waitFor(() => {
        const id = root.querySelector("[data-field=trajectory-id]")?.textContent;
        const buttons = root.querySelectorAll(".label-buttons button").length;
        return Boolean(id) && buttons > 0;
      });
      const trajectoryId = Number(root.querySelector("[data-field=trajectory-id]")!.textContent);
      const label = truth[trajectoryId];
      root.querySelector<HTMLButtonElement>(`button[data-label="${label}"]`)!.click();
      await waitFor(() => {
        const step = root.querySelector("[data-field=step]")?.textContent;
        return step === String(round + 1);
      });
    }
    await waitFor(
      () => root.querySelector("[data-field=status]")?.textContent === "Complete",
    );
    app.dispose();

    const log = await api.getLog("ui-e2e");
    const uiSequence = log.records.map((r) => [r.step, r.trajectory_id, r.label]);
    expect(uiSequence).toEqual(referenceSequence);

    const metrics = await api.getMetrics("ui-e2e");
    expect(metrics.values.length).toBe(referenceMetrics.length);
    metrics.values.forEach((value, k) => {
      expect(value).toBeCloseTo(referenceMetrics[k], 9);
    });
  });

  it("a double-submit through the UI advances the session exactly one step", async () => {
    const api = uiClient();
    await api.createSession({
      manifest: "manifest.json",
      embedding: "embedding.jsonl",
      session_id: "ui-double",
      config: { strategy: "entropy", budget: 3, seed: 2 },
    });

    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mountApp(root, api);
    await app.attach("ui-double");
    await waitFor(() => root.querySelectorAll(".label-buttons button").length > 0);

    const trajectoryId = Number(root.querySelector("[data-field=trajectory-id]")!.textContent);
    const button = root.querySelector<HTMLButtonElement>(
      `button[data-label="${truth[trajectoryId]}"]`,
    )!;
    button.click();
    button.click(); // second click races the in-flight submission
    await waitFor(() => root.querySelector("[data-field=step]")?.textContent === "1");
    // give any stray duplicate request time to land, then re-check the service
    await new Promise((resolve) => setTimeout(resolve, 500));
    const handle = await api.getSession("ui-double");
    expect(handle.step).toBe(1);
    const log = await api.getLog("ui-double");
    expect(log.records.filter((r) => r.label !== null).length).toBe(1);

    // a verbatim resubmission of the same (step, label) is acknowledged
    // without advancing the session a second time
    const repeat = await api.submitLabel("ui-double", trajectoryId, truth[trajectoryId], 1);
    expect(repeat.step).toBe(1);
    app.dispose();
  });
});
