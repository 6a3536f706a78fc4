/** The miniature plot grid: one tile per model output, in rows of seven,
 * with the current session selection highlighted identically on every
 * tile. Clicking a tile promotes it to the large plot. */

import type { ApiClient } from "./api.js";
import type { OutputCell, OutputDetail } from "./types.js";

export interface GridShape {
  rows: number;
  cols: number;
}

export interface TilePosition {
  outputId: string;
  row: number;
  col: number;
}

export const GRID_COLUMNS = 7;

export function gridShape(count: number, columns = GRID_COLUMNS): GridShape {
  return { rows: Math.ceil(count / columns), cols: Math.min(count, columns) };
}

export function layoutTiles(outputs: OutputCell[], columns = GRID_COLUMNS): TilePosition[] {
  return outputs.map((cell, index) => ({
    outputId: cell.output_id,
    row: Math.floor(index / columns),
    col: index % columns,
  }));
}

export type TileState =
  | { status: "loading" }
  | { status: "loaded"; detail: OutputDetail }
  | { status: "error"; message: string };

/** Data side of the miniatures: fetch state per tile, retry on failure,
 * and the active-output switch. Rendering happens elsewhere. */
export class SmallMultiples {
  readonly tiles = new Map<string, TileState>();
  private activeOutputId: string | null = null;
  onActivate: (outputId: string) => void = () => undefined;

  constructor(
    private readonly api: ApiClient,
    private readonly outputs: OutputCell[],
  ) {
    for (const cell of outputs) {
      this.tiles.set(cell.output_id, { status: "loading" });
    }
  }

  get shape(): GridShape {
    return gridShape(this.outputs.length);
  }

  get positions(): TilePosition[] {
    return layoutTiles(this.outputs);
  }

  get active(): string | null {
    return this.activeOutputId;
  }

  async loadAll(): Promise<void> {
    await Promise.all(this.outputs.map((cell) => this.loadTile(cell.output_id)));
  }

  /** Fetch one tile's payload; failures leave a retryable placeholder. */
  async loadTile(outputId: string): Promise<TileState> {
    try {
      const detail = await this.api.getOutput(outputId);
      const state: TileState = { status: "loaded", detail };
      this.tiles.set(outputId, state);
      return state;
    } catch (err) {
      const state: TileState = {
        status: "error",
        message: err instanceof Error ? err.message : String(err),
      };
      this.tiles.set(outputId, state);
      return state;
    }
  }

  retry(outputId: string): Promise<TileState> {
    this.tiles.set(outputId, { status: "loading" });
    return this.loadTile(outputId);
  }

  activate(outputId: string): void {
    if (!this.tiles.has(outputId)) {
      throw new Error(`unknown output ${outputId}`);
    }
    this.activeOutputId = outputId;
    this.onActivate(outputId);
  }
}
