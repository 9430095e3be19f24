/** View state: axis bounds, color metric, brush, selection, detail.
 *
 * The brush always lies within the axis bounds, and the color metric is one
 * of cm/tm/gs; both are enforced here rather than trusted from callers.
 */

import type { Bounds, Metric } from "./api.js";

export interface ViewState {
  axis: Bounds; // current viewport; zooming re-queries the API
  colorMetric: Metric;
  brush: Bounds | null;
  selectionId: string | null;
  detailId: number | null;
  sampleSeed: number;
}

export const FULL_AXIS: Bounds = { minTm: 0, maxTm: 1, minGs: 0, maxGs: 1 };

const METRICS: readonly Metric[] = ["cm", "tm", "gs"];

export function initialState(): ViewState {
  return {
    axis: { ...FULL_AXIS },
    colorMetric: "cm",
    brush: null,
    selectionId: null,
    detailId: null,
    sampleSeed: 7,
  };
}

export function setColorMetric(state: ViewState, metric: string): ViewState {
  if (!METRICS.includes(metric as Metric)) {
    throw new Error(`unknown color metric: ${metric}`);
  }
  return { ...state, colorMetric: metric as Metric };
}

export function clampToAxis(axis: Bounds, rect: Bounds): Bounds {
  const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));
  return {
    minTm: clamp(Math.min(rect.minTm, rect.maxTm), axis.minTm, axis.maxTm),
    maxTm: clamp(Math.max(rect.minTm, rect.maxTm), axis.minTm, axis.maxTm),
    minGs: clamp(Math.min(rect.minGs, rect.maxGs), axis.minGs, axis.maxGs),
    maxGs: clamp(Math.max(rect.minGs, rect.maxGs), axis.minGs, axis.maxGs),
  };
}

export function setBrush(state: ViewState, rect: Bounds | null): ViewState {
  if (rect === null) {
    return { ...state, brush: null, selectionId: null };
  }
  return { ...state, brush: clampToAxis(state.axis, rect), selectionId: null };
}

/** Zoom into the brushed region; refinement happens by re-querying the API,
 * never by filtering already-fetched points. */
export function zoomToBrush(state: ViewState): ViewState {
  if (state.brush === null) return state;
  return { ...state, axis: state.brush, brush: null, selectionId: null };
}

export function resetZoom(state: ViewState): ViewState {
  return { ...state, axis: { ...FULL_AXIS }, brush: null, selectionId: null };
}

export function setSelection(state: ViewState, manifestId: string | null): ViewState {
  return { ...state, selectionId: manifestId };
}

export function setDetail(state: ViewState, exampleId: number | null): ViewState {
  return { ...state, detailId: exampleId };
}
