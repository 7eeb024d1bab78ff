/** Execute draw commands on a canvas 2D context.
 *
 * World coordinates are meters (y up); the camera maps them to pixels.
 */

import type { Camera } from "./state.js";
import type { DrawCommand } from "./render.js";

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  globalAlpha: number;
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
}

export function worldToScreen(camera: Camera, width: number, height: number, x: number, y: number): [number, number] {
  return [width / 2 + (x - camera.x) * camera.scale, height / 2 - (y - camera.y) * camera.scale];
}

export function execute(
  ctx: Ctx2D,
  commands: DrawCommand[],
  camera: Camera,
  width: number,
  height: number,
  worldSpace = true,
): void {
  const toScreen = (x: number, y: number): [number, number] =>
    worldSpace ? worldToScreen(camera, width, height, x, y) : [x, y];
  for (const cmd of commands) {
    ctx.globalAlpha = "alpha" in cmd ? cmd.alpha : 1;
    if (cmd.kind === "circle") {
      const [sx, sy] = toScreen(cmd.x, cmd.y);
      ctx.beginPath();
      ctx.arc(sx, sy, cmd.r * (worldSpace ? camera.scale : 1), 0, 2 * Math.PI);
      ctx.fillStyle = cmd.fill;
      ctx.fill();
    } else if (cmd.kind === "polyline") {
      if (cmd.points.length < 2) continue;
      ctx.beginPath();
      const [x0, y0] = toScreen(cmd.points[0][0], cmd.points[0][1]);
      ctx.moveTo(x0, y0);
      for (let i = 1; i < cmd.points.length; i++) {
        const [x, y] = toScreen(cmd.points[i][0], cmd.points[i][1]);
        ctx.lineTo(x, y);
      }
      if (cmd.closed) ctx.closePath();
      ctx.strokeStyle = cmd.stroke;
      ctx.lineWidth = cmd.width;
      ctx.stroke();
    } else {
      const [sx, sy] = toScreen(cmd.x, cmd.y);
      ctx.globalAlpha = 1;
      ctx.fillStyle = cmd.fill;
      ctx.font = "10px sans-serif";
      ctx.fillText(cmd.text, sx, sy);
    }
  }
  ctx.globalAlpha = 1;
}
