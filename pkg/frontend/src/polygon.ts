/** Polygon-hull gesture on the large plot.
 *
 * Vertices arrive in screen pixels; on finish they are inverse-transformed
 * through the viewport so the server receives data-space coordinates. A
 * gesture with fewer than three vertices cancels with a hint instead of
 * calling the API.
 */

import type { Point } from "./types.js";
import { Viewport } from "./viewport.js";

export type GestureResult =
  | { kind: "polygon"; dataPolygon: Point[] }
  | { kind: "cancelled"; hint: string };

export class PolygonTool {
  private vertices: Point[] = [];

  get vertexCount(): number {
    return this.vertices.length;
  }

  get screenVertices(): Point[] {
    return [...this.vertices];
  }

  addVertex(screenPoint: Point): void {
    this.vertices.push(screenPoint);
  }

  cancel(): GestureResult {
    this.vertices = [];
    return { kind: "cancelled", hint: "selection discarded" };
  }

  /** Close the gesture; < 3 vertices cancels with a hint. */
  finish(viewport: Viewport): GestureResult {
    const vertices = this.vertices;
    this.vertices = [];
    if (vertices.length < 3) {
      return { kind: "cancelled", hint: "draw at least 3 points to select" };
    }
    return {
      kind: "polygon",
      dataPolygon: vertices.map((v) => viewport.screenToData(v)),
    };
  }
}
