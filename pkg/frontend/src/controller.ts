/** Fetch orchestration: viewport loads, brush statistics, and exports.
 *
 * The UI performs no metric computation; everything shown is carried back
 * verbatim from API responses.
 */

import {
  ApiError,
  type Bounds,
  type ExampleDetail,
  type MapPoint,
  type MemomapApi,
  type RegionStats,
  type SelectionIds,
} from "./api.js";

export const VIEWPORT_SAMPLE = 50_000; // server-side down-sampling cap per viewport
export const BRUSH_SAMPLE_PAIRS = 20;

export interface ViewportData {
  points: MapPoint[];
  totalInBounds: number;
  error: string | null;
}

/** Load the points for the current viewport; on failure the caller gets an
 * empty point set plus the error (stale data must not survive). */
export async function loadViewport(
  api: MemomapApi,
  axis: Bounds,
  seed: number,
): Promise<ViewportData> {
  try {
    const response = await api.points(axis, VIEWPORT_SAMPLE, seed);
    return { points: response.points, totalInBounds: response.total_in_bounds, error: null };
  } catch (err) {
    const message = err instanceof ApiError ? err.message : String(err);
    return { points: [], totalInBounds: 0, error: message };
  }
}

export interface BrushReport {
  stats: RegionStats;
  samples: ExampleDetail[];
}

/** Region statistics plus up to 20 sampled pairs for the brushed rectangle.
 * The same seed always yields the same sample ids. */
export async function brushRegion(
  api: MemomapApi,
  brush: Bounds,
  seed: number,
): Promise<BrushReport> {
  const stats = await api.regionStats(brush);
  if (stats.count === 0) {
    return { stats, samples: [] };
  }
  const sampled = await api.points(brush, BRUSH_SAMPLE_PAIRS, seed);
  const samples = await Promise.all(sampled.points.map((p) => api.example(p.id)));
  return { stats, samples };
}

export interface ExportResult {
  manifestId: string;
  count: number;
  totalSourceTokens: number;
  metBudget: boolean;
  ids: number[];
  idsText: string;
  exportUrl: string;
}

/** POST the selection and collect everything needed for download links.
 * The manifest is reproducible server-side from (bounds, budget, seed). */
export async function exportSelection(
  api: MemomapApi,
  brush: Bounds,
  tokenBudget: number,
  seed: number,
): Promise<ExportResult> {
  const created = await api.createSelection(brush, tokenBudget, seed);
  const ids: SelectionIds = await api.selectionIds(created.manifest_id);
  return {
    manifestId: created.manifest_id,
    count: created.count,
    totalSourceTokens: created.total_source_tokens,
    metBudget: created.met_budget,
    ids: ids.example_ids,
    idsText: ids.example_ids.join("\n") + (ids.example_ids.length ? "\n" : ""),
    exportUrl: api.exportUrl(created.manifest_id),
  };
}
