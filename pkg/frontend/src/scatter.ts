/** Canvas point-cloud rendering.
 *
 * Points are drawn straight onto a 2D context (no per-point DOM nodes), so
 * plots stay responsive at tens of thousands of items. The context is
 * typed as the minimal used subset, which lets tests substitute a
 * recording fake.
 */

import { HIGHLIGHT_COLOR, clusterColor } from "./colors.js";
import type { Point } from "./types.js";
import { Viewport, boundsOf } from "./viewport.js";

export interface Canvas2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
}

export interface ScatterStyle {
  pointRadius: number;
  highlightRadius: number;
}

export const LARGE_STYLE: ScatterStyle = { pointRadius: 2.5, highlightRadius: 5 };
export const MINIATURE_STYLE: ScatterStyle = { pointRadius: 1, highlightRadius: 2.5 };

/** Draw one projection: base points colored by cluster label, then the
 * highlight set emphasized on top. Returns the number of emphasized points. */
export function drawScatter(
  ctx: Canvas2D,
  viewport: Viewport,
  coords: Point[],
  labels: number[],
  highlightIds: Set<string>,
  itemIds: string[],
  style: ScatterStyle,
): number {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  for (let i = 0; i < coords.length; i++) {
    const [sx, sy] = viewport.dataToScreen(coords[i]);
    ctx.fillStyle = clusterColor(labels[i] ?? -1);
    ctx.beginPath();
    ctx.arc(sx, sy, style.pointRadius, 0, 2 * Math.PI);
    ctx.fill();
  }
  let emphasized = 0;
  if (highlightIds.size > 0) {
    for (let i = 0; i < coords.length; i++) {
      if (!highlightIds.has(itemIds[i])) {
        continue;
      }
      const [sx, sy] = viewport.dataToScreen(coords[i]);
      ctx.fillStyle = HIGHLIGHT_COLOR;
      ctx.beginPath();
      ctx.arc(sx, sy, style.highlightRadius, 0, 2 * Math.PI);
      ctx.fill();
      emphasized++;
    }
  }
  return emphasized;
}

export function fitViewport(width: number, height: number, coords: Point[]): Viewport {
  return new Viewport(width, height).fit(boundsOf(coords));
}
