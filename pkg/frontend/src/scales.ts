/** Linear data<->pixel mapping for the scatter plot. */

import type { Bounds } from "./api.js";

export interface PlotArea {
  width: number;
  height: number;
  marginLeft: number;
  marginRight: number;
  marginTop: number;
  marginBottom: number;
}

export const DEFAULT_AREA: PlotArea = {
  width: 640,
  height: 640,
  marginLeft: 48,
  marginRight: 12,
  marginTop: 12,
  marginBottom: 40,
};

export interface Scales {
  xToPixel(tm: number): number;
  yToPixel(gs: number): number;
  pixelToX(px: number): number;
  pixelToY(py: number): number;
  plotLeft: number;
  plotRight: number;
  plotTop: number;
  plotBottom: number;
}

export function makeScales(axis: Bounds, area: PlotArea): Scales {
  const plotLeft = area.marginLeft;
  const plotRight = area.width - area.marginRight;
  const plotTop = area.marginTop;
  const plotBottom = area.height - area.marginBottom;
  const xSpan = axis.maxTm - axis.minTm || 1;
  const ySpan = axis.maxGs - axis.minGs || 1;
  return {
    // gs grows upward: pixel y is inverted
    xToPixel: (tm) => plotLeft + ((tm - axis.minTm) / xSpan) * (plotRight - plotLeft),
    yToPixel: (gs) => plotBottom - ((gs - axis.minGs) / ySpan) * (plotBottom - plotTop),
    pixelToX: (px) => axis.minTm + ((px - plotLeft) / (plotRight - plotLeft)) * xSpan,
    pixelToY: (py) => axis.minGs + ((plotBottom - py) / (plotBottom - plotTop)) * ySpan,
    plotLeft,
    plotRight,
    plotTop,
    plotBottom,
  };
}

/** Turn a pixel drag into a data-space brush; sub-pixel drags are rejected. */
export function brushFromPixels(
  drag: { x0: number; y0: number; x1: number; y1: number },
  scales: Scales,
): Bounds | null {
  if (Math.abs(drag.x1 - drag.x0) < 1 || Math.abs(drag.y1 - drag.y0) < 1) {
    return null;
  }
  const tmA = scales.pixelToX(drag.x0);
  const tmB = scales.pixelToX(drag.x1);
  const gsA = scales.pixelToY(drag.y0);
  const gsB = scales.pixelToY(drag.y1);
  return {
    minTm: Math.min(tmA, tmB),
    maxTm: Math.max(tmA, tmB),
    minGs: Math.min(gsA, gsB),
    maxGs: Math.max(gsA, gsB),
  };
}
