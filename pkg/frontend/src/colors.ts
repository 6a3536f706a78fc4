/** Stable cluster colors: the same cluster id always maps to the same
 * color, on the large plot and on every miniature, across model switches. */

const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#e15759",
  "#76b7b2",
  "#59a14f",
  "#edc948",
  "#b07aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
  "#2f4b7c",
  "#a05195",
];

export const NOISE_COLOR = "#c8c8c8";
export const HIGHLIGHT_COLOR = "#d62728";

export function clusterColor(clusterId: number): string {
  if (clusterId < 0) {
    return NOISE_COLOR;
  }
  return PALETTE[clusterId % PALETTE.length];
}
