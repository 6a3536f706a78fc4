/** Pan/zoom transform between data space and canvas pixels.
 *
 * The y axis flips so larger data-y renders upwards. The transform is a
 * similarity (uniform scale + translation), so screen->data->screen round
 * trips stay well under half a pixel.
 */

import type { Point } from "./types.js";

export interface Bounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function boundsOf(points: Point[]): Bounds {
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const [x, y] of points) {
    if (x < xMin) xMin = x;
    if (x > xMax) xMax = x;
    if (y < yMin) yMin = y;
    if (y > yMax) yMax = y;
  }
  return { xMin, xMax, yMin, yMax };
}

export class Viewport {
  scale = 1;
  tx = 0;
  ty = 0;
  readonly width: number;
  readonly height: number;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  /** Fit the data bounds into the canvas with uniform scale and padding. */
  fit(bounds: Bounds, padding = 10): this {
    const spanX = Math.max(bounds.xMax - bounds.xMin, 1e-12);
    const spanY = Math.max(bounds.yMax - bounds.yMin, 1e-12);
    this.scale = Math.min(
      (this.width - 2 * padding) / spanX,
      (this.height - 2 * padding) / spanY,
    );
    const cx = (bounds.xMin + bounds.xMax) / 2;
    const cy = (bounds.yMin + bounds.yMax) / 2;
    this.tx = this.width / 2 - cx * this.scale;
    this.ty = this.height / 2 + cy * this.scale;
    return this;
  }

  dataToScreen([x, y]: Point): Point {
    return [x * this.scale + this.tx, -y * this.scale + this.ty];
  }

  screenToData([sx, sy]: Point): Point {
    return [(sx - this.tx) / this.scale, (this.ty - sy) / this.scale];
  }

  /** Zoom by a factor keeping the given screen point fixed. */
  zoomAt(screen: Point, factor: number): this {
    const anchor = this.screenToData(screen);
    this.scale *= factor;
    this.tx = screen[0] - anchor[0] * this.scale;
    this.ty = screen[1] + anchor[1] * this.scale;
    return this;
  }

  panBy(dxPixels: number, dyPixels: number): this {
    this.tx += dxPixels;
    this.ty += dyPixels;
    return this;
  }
}
