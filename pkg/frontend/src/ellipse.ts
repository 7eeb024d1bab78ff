/** Covariance-ellipse geometry from 2x2 symmetric matrices. */

import type { Cov2, Vec2 } from "./types.js";

export interface EllipseParams {
  cx: number;
  cy: number;
  rx: number; // semi-axis along the major eigenvector, meters
  ry: number;
  angle: number; // radians, major-axis orientation
}

/**
 * k-sigma ellipse of a Gaussian with the given center and covariance.
 * Closed-form 2x2 eigendecomposition; degenerate matrices collapse to radii 0.
 */
export function covarianceEllipse(center: Vec2, cov: Cov2, k = 1): EllipseParams {
  const a = cov[0][0];
  const b = 0.5 * (cov[0][1] + cov[1][0]);
  const d = cov[1][1];
  const tr = a + d;
  const disc = Math.sqrt(Math.max(0, ((a - d) / 2) ** 2 + b * b));
  const l1 = tr / 2 + disc;
  const l2 = tr / 2 - disc;
  const angle = Math.abs(b) < 1e-15 && a >= d ? 0 : Math.atan2(l1 - a, b === 0 ? 1e-300 : b);
  return {
    cx: center[0],
    cy: center[1],
    rx: k * Math.sqrt(Math.max(0, l1)),
    ry: k * Math.sqrt(Math.max(0, l2)),
    angle,
  };
}

export function ellipseArea(e: EllipseParams): number {
  return Math.PI * e.rx * e.ry;
}

/** Polygon approximation used by the canvas layer. */
export function ellipsePoints(e: EllipseParams, segments = 36): Vec2[] {
  const pts: Vec2[] = [];
  for (let i = 0; i < segments; i++) {
    const t = (2 * Math.PI * i) / segments;
    const x = e.rx * Math.cos(t);
    const y = e.ry * Math.sin(t);
    pts.push([
      e.cx + x * Math.cos(e.angle) - y * Math.sin(e.angle),
      e.cy + x * Math.sin(e.angle) + y * Math.cos(e.angle),
    ]);
  }
  return pts;
}
