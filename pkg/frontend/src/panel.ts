/** Stats panel model and HTML for a brushed region. */

import type { ExampleDetail, MapMeta, RegionStats } from "./api.js";

export interface FeatureDeviation {
  name: string;
  regionMean: number;
  mapMean: number;
}

export interface PanelModel {
  count: number;
  tmMean: number | null;
  gsMean: number | null;
  cmMean: number | null;
  topDeviations: FeatureDeviation[];
  samples: ExampleDetail[];
}

/** Rank features by how far the region mean sits from the map-wide mean,
 * in units of the map mean's magnitude. Both means come from the API. */
export function topFeatureDeviations(
  region: RegionStats,
  fullMap: RegionStats,
  limit = 5,
): FeatureDeviation[] {
  if (!region.feature_means || !fullMap.feature_means) return [];
  const rows: (FeatureDeviation & { score: number })[] = [];
  for (const [name, regionMean] of Object.entries(region.feature_means)) {
    const mapMean = fullMap.feature_means[name];
    if (regionMean === null || mapMean === null || mapMean === undefined) continue;
    const scale = Math.max(Math.abs(mapMean), 1e-9);
    rows.push({ name, regionMean, mapMean, score: Math.abs(regionMean - mapMean) / scale });
  }
  rows.sort((a, b) => b.score - a.score || a.name.localeCompare(b.name));
  return rows.slice(0, limit).map(({ name, regionMean, mapMean }) => ({
    name,
    regionMean,
    mapMean,
  }));
}

export function buildPanelModel(
  region: RegionStats,
  fullMap: RegionStats,
  samples: ExampleDetail[],
): PanelModel {
  return {
    count: region.count,
    tmMean: region.tm_mean,
    gsMean: region.gs_mean,
    cmMean: region.cm_mean,
    topDeviations: topFeatureDeviations(region, fullMap),
    samples: samples.slice(0, 20),
  };
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const fmt = (v: number | null) => (v === null ? "–" : v.toFixed(4));

export function renderPanelHtml(model: PanelModel): string {
  if (model.count === 0) {
    return `<p class="empty">0 examples in the brushed region.</p>`;
  }
  const deviations = model.topDeviations
    .map(
      (d) =>
        `<li><code>${escapeHtml(d.name)}</code>: ${d.regionMean.toFixed(3)} ` +
        `(map ${d.mapMean.toFixed(3)})</li>`,
    )
    .join("");
  const samples = model.samples
    .map((s) => {
      const text =
        s.source !== undefined
          ? `${escapeHtml(s.source)} → ${escapeHtml(s.target ?? "")}`
          : `example ${s.id}`;
      return `<li data-id="${s.id}"><span class="metrics">[tm ${fmt(s.tm)} gs ${fmt(
        s.gs,
      )} cm ${fmt(s.cm)}]</span> ${text}</li>`;
    })
    .join("");
  return [
    `<p><strong>${model.count}</strong> examples`,
    ` · tm ${fmt(model.tmMean)} · gs ${fmt(model.gsMean)} · cm ${fmt(model.cmMean)}</p>`,
    model.topDeviations.length
      ? `<h4>Feature deviations</h4><ul class="deviations">${deviations}</ul>`
      : "",
    model.samples.length ? `<h4>Sampled pairs</h4><ol class="samples">${samples}</ol>` : "",
  ].join("");
}
