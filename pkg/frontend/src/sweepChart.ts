/** Divergence/uncertainty-vs-lambda chart as draw commands in chart space. */

import type { DrawCommand } from "./render.js";
import type { SweepResponse, Vec2 } from "./types.js";

export interface ChartLayout {
  width: number;
  height: number;
  margin: number;
}

function scaleSeries(xs: number[], ys: number[], layout: ChartLayout): Vec2[] {
  const { width, height, margin } = layout;
  const yMax = Math.max(...ys, 1e-9);
  const yMin = Math.min(...ys, 0);
  const span = yMax - yMin || 1;
  return xs.map((x, i) => [
    margin + x * (width - 2 * margin),
    height - margin - ((ys[i] - yMin) / span) * (height - 2 * margin),
  ]);
}

export function renderSweep(sweep: SweepResponse, layout: ChartLayout): DrawCommand[] {
  const cmds: DrawCommand[] = [];
  cmds.push({
    kind: "polyline",
    points: [
      [layout.margin, layout.height - layout.margin],
      [layout.width - layout.margin, layout.height - layout.margin],
    ],
    stroke: "#888",
    width: 1,
    alpha: 1,
  });
  cmds.push({
    kind: "polyline",
    points: scaleSeries(sweep.lambdas, sweep.divergence, layout),
    stroke: "#d44",
    width: 2,
    alpha: 1,
  });
  cmds.push({
    kind: "polyline",
    points: scaleSeries(sweep.lambdas, sweep.uncertainty, layout),
    stroke: "#46c",
    width: 2,
    alpha: 1,
  });
  cmds.push({ kind: "text", x: layout.margin, y: 12, text: "divergence (red), uncertainty (blue) vs lambda", fill: "#333" });
  return cmds;
}
