/** DOM wiring: canvas, brush interaction, panel, export buttons.
 *
 * Everything testable lives in the other modules; this file only connects
 * them to the document.
 */

import { MemomapApi, type Bounds, type MapPoint, type RegionStats } from "./api.js";
import { brushRegion, exportSelection, loadViewport } from "./controller.js";
import { buildPanelModel, renderPanelHtml } from "./panel.js";
import { renderBrush, renderError, renderMap, type Canvas2D } from "./render.js";
import { brushFromPixels, DEFAULT_AREA, makeScales, type Scales } from "./scales.js";
import {
  FULL_AXIS,
  initialState,
  resetZoom,
  setBrush,
  setColorMetric,
  setSelection,
  zoomToBrush,
  type ViewState,
} from "./state.js";

const params = new URLSearchParams(window.location.search);
const api = new MemomapApi(params.get("api") ?? "");

let state: ViewState = initialState();
let points: MapPoint[] = [];
let fullMapStats: RegionStats | null = null;

const canvas = document.getElementById("map") as HTMLCanvasElement;
canvas.width = DEFAULT_AREA.width;
canvas.height = DEFAULT_AREA.height;
const ctx = canvas.getContext("2d") as unknown as Canvas2D;
const panel = document.getElementById("panel") as HTMLElement;
const exportBox = document.getElementById("export") as HTMLElement;
const status = document.getElementById("status") as HTMLElement;

function scales(): Scales {
  return makeScales(state.axis, DEFAULT_AREA);
}

function redraw(): void {
  renderMap(ctx, points, state.axis, state.colorMetric, scales(), canvas.width, canvas.height);
  renderBrush(ctx, state.brush, scales());
}

async function refresh(): Promise<void> {
  const data = await loadViewport(api, state.axis, state.sampleSeed);
  if (data.error !== null) {
    points = [];
    renderError(ctx, data.error, canvas.width, canvas.height);
    status.textContent = data.error;
    return;
  }
  points = data.points;
  status.textContent = `${data.points.length} of ${data.totalInBounds} points in viewport`;
  redraw();
}

async function showBrushPanel(brush: Bounds): Promise<void> {
  try {
    if (fullMapStats === null) {
      fullMapStats = await api.regionStats(FULL_AXIS);
    }
    const report = await brushRegion(api, brush, state.sampleSeed);
    panel.innerHTML = renderPanelHtml(buildPanelModel(report.stats, fullMapStats, report.samples));
  } catch (err) {
    panel.innerHTML = `<p class="error">${String(err)}</p>`;
  }
}

let drag: { x0: number; y0: number } | null = null;
canvas.addEventListener("mousedown", (e) => {
  drag = { x0: e.offsetX, y0: e.offsetY };
});
canvas.addEventListener("mousemove", (e) => {
  if (!drag) return;
  const rect = brushFromPixels({ ...drag, x1: e.offsetX, y1: e.offsetY }, scales());
  state = setBrush(state, rect);
  redraw();
});
canvas.addEventListener("mouseup", (e) => {
  if (!drag) return;
  const rect = brushFromPixels({ ...drag, x1: e.offsetX, y1: e.offsetY }, scales());
  drag = null;
  state = setBrush(state, rect);
  redraw();
  if (state.brush) void showBrushPanel(state.brush);
});

for (const metric of ["cm", "tm", "gs"] as const) {
  document.getElementById(`color-${metric}`)?.addEventListener("click", () => {
    state = setColorMetric(state, metric);
    redraw(); // re-render from cached points; no refetch
  });
}

document.getElementById("zoom")?.addEventListener("click", () => {
  state = zoomToBrush(state);
  void refresh();
});
document.getElementById("reset")?.addEventListener("click", () => {
  state = resetZoom(state);
  void refresh();
});

document.getElementById("export-btn")?.addEventListener("click", () => {
  void (async () => {
    if (!state.brush) {
      exportBox.textContent = "Brush a region first.";
      return;
    }
    const budgetInput = document.getElementById("budget") as HTMLInputElement;
    const seedInput = document.getElementById("seed") as HTMLInputElement;
    const result = await exportSelection(
      api,
      state.brush,
      Number(budgetInput.value),
      Number(seedInput.value),
    );
    state = setSelection(state, result.manifestId);
    const blob = new Blob([result.idsText], { type: "text/plain" });
    const idsUrl = URL.createObjectURL(blob);
    exportBox.innerHTML =
      `<p>manifest <code>${result.manifestId}</code> · ${result.count} examples · ` +
      `${result.totalSourceTokens} tokens${result.metBudget ? "" : " · <strong>budget not met</strong>"}</p>` +
      `<a download="selection-${result.manifestId}.txt" href="${idsUrl}">download ids</a> · ` +
      `<a download="corpus-${result.manifestId}.tsv" href="${result.exportUrl}">download corpus subset</a>`;
  })();
});

void refresh();
