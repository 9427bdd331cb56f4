/**
 * Browser shell: wires the flows, heatmaps and overlays to the DOM.
 *
 * All learning state lives on the server; this file only paints the
 * latest view model and forwards button presses. Point the console at
 * a service with `?api=http://host:port` (default local `mvgrasp serve`).
 */

import { ApiClient } from "./api.js";
import type { GraspResponse, ViewsResponse } from "./api.js";
import { TeachingConsole } from "./flows.js";
import { BACKGROUND, bestBadges, heatmapGrid, objectColorScale } from "./heatmap.js";
import { graspRectOverlay } from "./overlay.js";

const CELL = 5; // canvas pixels per depth-grid cell

const apiBase =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8234";
const api = new ApiClient(apiBase);
const consoleCtl = new TeachingConsole(api);

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

let selectedObject: string | null = null;
let lastViews: ViewsResponse | null = null;

function paintBanner(): void {
  const banner = el<HTMLDivElement>("banner");
  banner.hidden = consoleCtl.model.banner === null;
  banner.textContent = consoleCtl.model.banner ?? "";
}

function paintSession(): void {
  const model = consoleCtl.model;
  el<HTMLSpanElement>("session-id").textContent = consoleCtl.sessionId ?? "-";
  el<HTMLDivElement>("categories").innerHTML = model
    .categoryRows()
    .map((row) => `<span class="chip">${row.label} &times; ${row.count}</span>`)
    .join(" ");
  el<HTMLDivElement>("metrics").innerHTML = model
    .metricPanels()
    .map((panel) => {
      const value =
        panel.value === null ? "&ndash;" : Number(panel.value).toFixed(3);
      return `<div class="metric"><div class="metric-value">${value}</div><div class="metric-title">${panel.title}</div></div>`;
    })
    .join("");
  const ask = model.lastAsk;
  const bars = model
    .logScoreBars()
    .map(
      (bar) =>
        `<div class="bar-row"><span class="bar-label">${bar.label}</span>` +
        `<div class="bar" style="width:${(bar.share * 100).toFixed(1)}%"></div>` +
        `<span class="bar-score">${bar.logScore.toFixed(2)}</span></div>`,
    )
    .join("");
  const verdict = ask
    ? `<p>predicted <b>${ask.prediction.label}</b> for ${ask.prediction.instance_id}` +
      (ask.correct === null ? "" : ask.correct ? " &#10003;" : ` &#10007; (was ${ask.true_label})`) +
      "</p>"
    : "";
  el<HTMLDivElement>("prediction").innerHTML = verdict + bars;
  paintBanner();
}

function drawGrid(canvas: HTMLCanvasElement, colors: string[][]): void {
  const k = colors.length;
  canvas.width = k * CELL;
  canvas.height = k * CELL;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = BACKGROUND;
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  for (let v = 0; v < k; v++) {
    for (let u = 0; u < k; u++) {
      ctx.fillStyle = colors[v][u];
      ctx.fillRect(u * CELL, v * CELL, CELL, CELL);
    }
  }
}

function drawOverlay(canvas: HTMLCanvasElement, plan: GraspResponse): void {
  const overlay = graspRectOverlay(plan.best, plan.bins, plan.plane_side);
  const ctx = canvas.getContext("2d")!;
  ctx.strokeStyle = plan.collision_free ? "#7CFC00" : "#ff5050";
  ctx.lineWidth = 2;
  ctx.beginPath();
  overlay.corners.forEach(([x, y], i) => {
    const px = (x + 0.5) * CELL;
    const py = (y + 0.5) * CELL;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.closePath();
  ctx.stroke();
}

async function showViews(objectId: string): Promise<void> {
  selectedObject = objectId;
  el<HTMLSpanElement>("views-title").textContent = objectId;
  const payload = await api.getViews(objectId);
  lastViews = payload;
  const scale = objectColorScale(payload.views);
  const badges = bestBadges(payload.views, payload.best);
  const host = el<HTMLDivElement>("views");
  host.innerHTML = "";
  payload.views.forEach((view, i) => {
    const card = document.createElement("figure");
    card.className = "view-card";
    const canvas = document.createElement("canvas");
    canvas.dataset.viewIndex = String(view.index);
    drawGrid(canvas, heatmapGrid(view.grid, scale));
    const caption = document.createElement("figcaption");
    caption.textContent = `view ${view.index} — ${view.entropy_bits.toFixed(3)} bits`;
    if (badges[i]) caption.textContent += " ★ best";
    card.append(canvas, caption);
    host.append(card);
  });
}

async function planGrasp(): Promise<void> {
  if (!selectedObject || !lastViews) return;
  const plan = await api.planGrasp(selectedObject, { seed: 0, budget: 16, iters: 60 });
  const canvas = document.querySelector<HTMLCanvasElement>(
    `canvas[data-view-index="${plan.view_index}"]`,
  );
  if (canvas) drawOverlay(canvas, plan);
  el<HTMLSpanElement>(
    "grasp-note",
  ).textContent = `grasp on view ${plan.view_index}: quality ${plan.best.quality.toFixed(
    3,
  )}, width ${(plan.best.width_m * 1000).toFixed(1)} mm, ${
    plan.collision_free ? "collision-free" : "in collision"
  }`;
}

async function listObjects(): Promise<void> {
  const { objects } = await api.listObjects();
  const list = el<HTMLUListElement>("object-list");
  list.innerHTML = "";
  for (const obj of objects) {
    const item = document.createElement("li");
    const check = document.createElement("input");
    check.type = "checkbox";
    check.value = obj.id;
    check.className = "pick";
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = `${obj.id} (${obj.points} pts)`;
    link.addEventListener("click", (ev) => {
      ev.preventDefault();
      void showViews(obj.id);
    });
    item.append(check, " ", link);
    list.append(item);
  }
}

function pickedInstances(): string[] {
  return Array.from(document.querySelectorAll<HTMLInputElement>(".pick:checked")).map(
    (box) => box.value,
  );
}

async function boot(): Promise<void> {
  await consoleCtl.start();
  await listObjects();
  paintSession();
  consoleCtl.startMetricsPoll();
  setInterval(paintSession, 2000);

  el<HTMLFormElement>("teach-form").addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const label = el<HTMLInputElement>("teach-label").value.trim();
    const picked = pickedInstances();
    if (!label || picked.length === 0) return;
    await consoleCtl.teach(label, picked);
    paintSession();
  });

  el<HTMLButtonElement>("ask-btn").addEventListener("click", async () => {
    if (!selectedObject) return;
    await consoleCtl.ask(selectedObject);
    paintSession();
  });

  el<HTMLFormElement>("correct-form").addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const label = el<HTMLInputElement>("correct-label").value.trim();
    if (!label || !selectedObject) return;
    await consoleCtl.correct(label, selectedObject);
    paintSession();
  });

  el<HTMLButtonElement>("grasp-btn").addEventListener("click", () => void planGrasp());
}

boot().catch((err) => {
  const banner = el<HTMLDivElement>("banner");
  banner.hidden = false;
  banner.textContent = `cannot reach service at ${apiBase}: ${err}`;
});
