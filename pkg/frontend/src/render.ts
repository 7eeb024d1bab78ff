/** Pure scene/prediction rendering to draw commands.
 *
 * Keeping rendering as data (world-space commands) makes overlay equality
 * and geometry testable without a real canvas; the canvas layer just
 * executes commands.
 */

import { covarianceEllipse, ellipsePoints } from "./ellipse.js";
import { entropy } from "./simplex.js";
import type { AgentBlock, SceneRecord, Vec2 } from "./types.js";

export type DrawCommand =
  | { kind: "circle"; x: number; y: number; r: number; fill: string; alpha: number }
  | { kind: "polyline"; points: Vec2[]; stroke: string; width: number; alpha: number; closed?: boolean }
  | { kind: "text"; x: number; y: number; text: string; fill: string };

export const CLASS_COLORS = ["#3572e8", "#2fa84f", "#e87335", "#a53ce8", "#e8c533", "#35c5e8"];

export function classColor(index: number): string {
  return CLASS_COLORS[index % CLASS_COLORS.length];
}

export interface SceneRenderOptions {
  timestep: number;
  trailSteps: number;
  selectedAgent?: string | null;
}

/** Agents as dots with history trails; color = most-likely class, halo
 * radius/alpha = class-probability entropy at the timestep. */
export function renderScene(scene: SceneRecord, opts: SceneRenderOptions): DrawCommand[] {
  const cmds: DrawCommand[] = [];
  const maxEntropy = Math.log(scene.class_names.length);
  for (const agent of scene.agents) {
    const idx = agent.steps.findIndex((s) => s.t === opts.timestep);
    if (idx < 0) continue;
    const step = agent.steps[idx];
    const cls = argmax(step.probs);
    const color = classColor(cls);
    const trail: Vec2[] = [];
    for (let i = Math.max(0, idx - opts.trailSteps); i <= idx; i++) {
      trail.push([agent.steps[i].px, agent.steps[i].py]);
    }
    if (trail.length > 1) {
      cmds.push({ kind: "polyline", points: trail, stroke: color, width: 1, alpha: 0.6 });
    }
    const h = entropy(step.probs) / (maxEntropy || 1);
    if (h > 1e-3) {
      cmds.push({ kind: "circle", x: step.px, y: step.py, r: 0.6 + 1.2 * h, fill: color, alpha: 0.15 + 0.35 * h });
    }
    cmds.push({ kind: "circle", x: step.px, y: step.py, r: 0.45, fill: color, alpha: 1.0 });
    if (agent.agent_id === opts.selectedAgent) {
      cmds.push({ kind: "polyline", points: ring(step.px, step.py, 0.8), stroke: "#222", width: 1.5, alpha: 1, closed: true });
    }
    cmds.push({ kind: "text", x: step.px + 0.6, y: step.py + 0.6, text: agent.agent_id, fill: "#444" });
  }
  return cmds;
}

export interface OverlayRenderOptions {
  color: string;
  showMeans: boolean;
  sigma1: boolean;
  sigma2: boolean;
  modeWeightAlpha: boolean;
}

/** Predicted mixture for one agent: per-mode mean polylines and 1/2-sigma
 * covariance ellipses, opacity scaled by mode weight. */
export function renderPrediction(agent: AgentBlock, opts: OverlayRenderOptions): DrawCommand[] {
  const cmds: DrawCommand[] = [];
  const wMax = Math.max(...agent.mode_weights, 1e-12);
  agent.mode_weights.forEach((w, mode) => {
    const alpha = opts.modeWeightAlpha ? 0.15 + 0.85 * (w / wMax) : 1.0;
    if (w < 1e-4) return;
    const means = agent.means[mode];
    if (opts.showMeans) {
      cmds.push({ kind: "polyline", points: means, stroke: opts.color, width: 1.5, alpha });
    }
    const sigmas: number[] = [];
    if (opts.sigma1) sigmas.push(1);
    if (opts.sigma2) sigmas.push(2);
    for (const k of sigmas) {
      const last = means.length - 1;
      for (const step of [Math.floor(last / 2), last]) {
        const e = covarianceEllipse(means[step], agent.covariances[mode][step], k);
        cmds.push({
          kind: "polyline",
          points: ellipsePoints(e),
          stroke: opts.color,
          width: 0.8,
          alpha: alpha * (k === 1 ? 0.9 : 0.45),
          closed: true,
        });
      }
    }
  });
  return cmds;
}

export function argmax(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) if (values[i] > values[best]) best = i;
  return best;
}

function ring(cx: number, cy: number, r: number): Vec2[] {
  const pts: Vec2[] = [];
  for (let i = 0; i < 24; i++) {
    const t = (2 * Math.PI * i) / 24;
    pts.push([cx + r * Math.cos(t), cy + r * Math.sin(t)]);
  }
  return pts;
}
