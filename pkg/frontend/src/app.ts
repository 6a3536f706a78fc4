/** Browser entry point: wires the projection grid, the large plot, the
 * polygon tool, the search slot, and the four session panels to the API.
 * Everything testable lives in the imported modules; this file only touches
 * the DOM. */

import { ApiClient } from "./api.js";
import { PolygonTool } from "./polygon.js";
import { SessionPanels } from "./panels.js";
import {
  Canvas2D,
  LARGE_STYLE,
  MINIATURE_STYLE,
  drawScatter,
  fitViewport,
} from "./scatter.js";
import { SmallMultiples } from "./smallMultiples.js";
import type { CorpusItem, OutputDetail, Point } from "./types.js";
import { Viewport } from "./viewport.js";

const MINIATURE_W = 120;
const MINIATURE_H = 120;
const LARGE_W = 760;
const LARGE_H = 560;
const DEFAULT_TILES = 14; // two rows of seven; the picker reveals the rest

interface AppState {
  corpusText: Map<string, string>;
  activeDetail: OutputDetail | null;
  viewport: Viewport | null;
}

export async function mountApp(root: HTMLElement, baseUrl = ""): Promise<void> {
  const api = new ApiClient(baseUrl);
  const corpus = await api.getCorpus();
  const outputs = await api.listOutputs();
  const session = await api.createSession(outputs[0].output_id);
  const panels = new SessionPanels(api, session.session_id);
  const multiples = new SmallMultiples(api, outputs.slice(0, DEFAULT_TILES));
  const polygonTool = new PolygonTool();
  const state: AppState = {
    corpusText: new Map(corpus.items.map((it) => [it.id, it.canonical_text])),
    activeDetail: null,
    viewport: null,
  };

  root.innerHTML = `
    <div class="miniatures"></div>
    <div class="main">
      <canvas class="large-plot" width="${LARGE_W}" height="${LARGE_H}"></canvas>
      <div class="side">
        <input class="search" placeholder="search descriptors" />
        <ul class="search-results"></ul>
        <div class="error-box"></div>
        <section class="panel members"><h3>Cluster members</h3><ul></ul></section>
        <section class="panel candidates"><h3>Possible candidates</h3><ul></ul></section>
        <section class="panel polygon"><h3>Possible candidates from draw selection</h3><ul></ul></section>
        <section class="panel ignored"><h3>Ignored candidates</h3><ul></ul></section>
        <div class="commit"><input class="label" placeholder="class label" /><button>commit class</button></div>
      </div>
    </div>`;

  const largeCanvas = root.querySelector<HTMLCanvasElement>(".large-plot")!;
  const miniaturesHost = root.querySelector<HTMLElement>(".miniatures")!;
  const errorBox = root.querySelector<HTMLElement>(".error-box")!;

  function highlight(): Set<string> {
    return new Set(panels.members);
  }

  function redrawLarge(): void {
    if (!state.activeDetail || !state.viewport) {
      return;
    }
    const ctx = largeCanvas.getContext("2d") as unknown as Canvas2D;
    drawScatter(
      ctx,
      state.viewport,
      state.activeDetail.coords,
      state.activeDetail.clusters.labels,
      highlight(),
      corpus.items.map((it) => it.id),
      LARGE_STYLE,
    );
  }

  function redrawMiniatures(): void {
    const ids = corpus.items.map((it) => it.id);
    for (const [outputId, tile] of multiples.tiles) {
      const canvas = miniaturesHost.querySelector<HTMLCanvasElement>(
        `canvas[data-output="${outputId}"]`,
      );
      if (!canvas) {
        continue;
      }
      if (tile.status === "loaded") {
        const viewport = fitViewport(MINIATURE_W, MINIATURE_H, tile.detail.coords);
        drawScatter(
          canvas.getContext("2d") as unknown as Canvas2D,
          viewport,
          tile.detail.coords,
          tile.detail.clusters.labels,
          highlight(),
          ids,
          MINIATURE_STYLE,
        );
      }
    }
  }

  function renderMiniatureTiles(): void {
    miniaturesHost.innerHTML = "";
    for (const pos of multiples.positions) {
      const tile = multiples.tiles.get(pos.outputId)!;
      const cellHost = document.createElement("div");
      cellHost.className = "tile";
      cellHost.style.gridRow = String(pos.row + 1);
      cellHost.style.gridColumn = String(pos.col + 1);
      if (tile.status === "error") {
        const retry = document.createElement("button");
        retry.textContent = "retry";
        retry.onclick = () => multiples.retry(pos.outputId).then(renderMiniatureTiles);
        cellHost.append("failed ", retry);
      } else {
        const canvas = document.createElement("canvas");
        canvas.width = MINIATURE_W;
        canvas.height = MINIATURE_H;
        canvas.dataset.output = pos.outputId;
        canvas.onclick = () => multiples.activate(pos.outputId);
        cellHost.append(canvas);
      }
      miniaturesHost.append(cellHost);
    }
    redrawMiniatures();
  }

  function renderList(selector: string, ids: string[], actions: Record<string, (id: string) => void>): void {
    const list = root.querySelector<HTMLElement>(`${selector} ul`)!;
    list.innerHTML = "";
    for (const id of ids) {
      const item = document.createElement("li");
      item.textContent = state.corpusText.get(id) ?? id;
      for (const [label, handler] of Object.entries(actions)) {
        const button = document.createElement("button");
        button.textContent = label;
        button.onclick = () => handler(id);
        item.append(button);
      }
      list.append(item);
    }
  }

  function renderPanels(): void {
    renderList(".members", panels.members, {
      reject: (id) => void panels.reject([id]).then(renderAll),
    });
    renderList(".candidates", panels.candidates, {
      accept: (id) => void panels.accept([id]).then(renderAll),
      reject: (id) => void panels.reject([id]).then(renderAll),
    });
    renderList(".polygon", panels.polygonCandidates, {
      accept: (id) => void panels.accept([id]).then(renderAll),
      reject: (id) => void panels.reject([id]).then(renderAll),
    });
    renderList(".ignored", panels.ignored, {
      unignore: (id) => void panels.unignore([id]).then(renderAll),
    });
    errorBox.textContent = panels.staleSession
      ? "session out of date - reload the page"
      : panels.lastError
        ? `${panels.lastError.code}: ${panels.lastError.message}`
        : "";
  }

  function renderAll(): void {
    renderPanels();
    redrawLarge();
    redrawMiniatures();
  }

  multiples.onActivate = (outputId) => {
    void (async () => {
      const tile = multiples.tiles.get(outputId);
      state.activeDetail =
        tile && tile.status === "loaded" ? tile.detail : await api.getOutput(outputId);
      state.viewport = fitViewport(LARGE_W, LARGE_H, state.activeDetail.coords);
      await panels.switchOutput(outputId);
      renderAll();
    })();
  };

  largeCanvas.addEventListener("click", (ev) => {
    polygonTool.addVertex([ev.offsetX, ev.offsetY]);
  });
  largeCanvas.addEventListener("dblclick", () => {
    if (!state.viewport || !state.activeDetail) {
      return;
    }
    const gesture = polygonTool.finish(state.viewport);
    if (gesture.kind === "cancelled") {
      errorBox.textContent = gesture.hint;
      return; // no API call for a cancelled gesture
    }
    void panels
      .polygonSelect(state.activeDetail.output_id, gesture.dataPolygon)
      .then(renderAll);
  });
  largeCanvas.addEventListener("wheel", (ev) => {
    if (!state.viewport) {
      return;
    }
    ev.preventDefault();
    state.viewport.zoomAt([ev.offsetX, ev.offsetY], ev.deltaY < 0 ? 1.2 : 1 / 1.2);
    redrawLarge();
  });

  const search = root.querySelector<HTMLInputElement>(".search")!;
  const results = root.querySelector<HTMLElement>(".search-results")!;
  search.addEventListener("input", () => {
    void api.searchItems(search.value, 0, 10).then((page) => {
      results.innerHTML = "";
      for (const item of page.items) {
        const row = document.createElement("li");
        row.textContent = item.canonical_text;
        const seedButton = document.createElement("button");
        seedButton.textContent = "seed";
        seedButton.onclick = () => void panels.seed(item.id).then(renderAll);
        row.append(seedButton);
        results.append(row);
      }
    });
  });

  const commitButton = root.querySelector<HTMLButtonElement>(".commit button")!;
  const labelInput = root.querySelector<HTMLInputElement>(".commit .label")!;
  commitButton.onclick = () => void panels.commit(labelInput.value).then(renderAll);

  await multiples.loadAll();
  renderMiniatureTiles();
  multiples.activate(outputs[0].output_id);
  await panels.refresh();
  renderPanels();
}

declare global {
  interface Window {
    taxolabMount?: typeof mountApp;
  }
}

if (typeof window !== "undefined") {
  window.taxolabMount = mountApp;
}

export type { CorpusItem, Point };
