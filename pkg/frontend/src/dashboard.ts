import { renderMetricCurve } from "./plots";
import type { Log, Metrics, SessionHandle } from "./types";
import { LABEL_TEXT } from "./types";

export interface DashboardData {
  handle: SessionHandle;
  metrics: Metrics;
  log: Log;
}

/**
 * Budget, step, metric curve and the query-log table. Everything shown is
 * derived from service responses; the client holds no truth of its own.
 */
export function renderDashboard(container: HTMLElement, data: DashboardData) {
  container.textContent = "";
  const { handle, metrics, log } = data;

  const status = document.createElement("div");
  status.className = "session-status";
  status.dataset.status = handle.status;
  status.innerHTML =
    `<span class="strategy">${handle.strategy}</span>` +
    `<span class="mode">${handle.mode}</span>` +
    `<span class="step">step <b data-field="step">${handle.step}</b> / ${handle.budget}</span>` +
    `<span class="budget">budget left <b data-field="budget-remaining">${handle.budget_remaining}</b></span>` +
    `<span class="state" data-field="status">${handle.status}</span>`;
  container.appendChild(status);

  const curve = document.createElement("div");
  curve.className = "metric-curve";
  const metricLabel = handle.mode === "discovery" ? "queried unknowns" : "test F1";
  renderMetricCurve(curve, metrics.steps, metrics.values, metricLabel);
  container.appendChild(curve);

  const table = document.createElement("table");
  table.className = "query-log";
  table.innerHTML =
    "<thead><tr><th>step</th><th>trajectory</th><th>informativeness</th><th>label</th></tr></thead>";
  const body = document.createElement("tbody");
  for (const record of [...log.records].reverse()) {
    const row = document.createElement("tr");
    row.innerHTML =
      `<td>${record.step}</td><td>#${record.trajectory_id}</td>` +
      `<td>${record.informativeness.toFixed(4)}</td>` +
      `<td>${record.label ? (LABEL_TEXT[record.label] ?? record.label) : "pending"}</td>`;
    body.appendChild(row);
  }
  table.appendChild(body);
  container.appendChild(table);
}
