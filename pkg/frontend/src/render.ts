// Canvas painter: applies a display list onto a 2D context, scaling the
// virtual coordinate space to the canvas size.

import { SceneItem, Viewport } from "./scene.js";

export function paintScene(
  ctx: CanvasRenderingContext2D,
  items: SceneItem[],
  virtual: Viewport,
): void {
  const canvas = ctx.canvas;
  ctx.save();
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.scale(canvas.width / virtual.width, canvas.height / virtual.height);

  for (const item of items) {
    if (item.kind === "grid") {
      ctx.strokeStyle = "rgba(90,110,130,0.25)";
      ctx.lineWidth = 1;
      for (let x = 0; x <= virtual.width; x += item.spacing) {
        ctx.beginPath();
        ctx.moveTo(x, 0);
        ctx.lineTo(x, virtual.height);
        ctx.stroke();
      }
      for (let y = 0; y <= virtual.height; y += item.spacing) {
        ctx.beginPath();
        ctx.moveTo(0, y);
        ctx.lineTo(virtual.width, y);
        ctx.stroke();
      }
    } else if (item.kind === "box") {
      ctx.globalAlpha = item.opacity;
      ctx.strokeStyle = item.coasting ? "#f0c040" : "#40d0f0";
      ctx.lineWidth = 2;
      ctx.strokeRect(item.x, item.y, item.w, item.h);
      ctx.globalAlpha = 1.0;
    } else {
      ctx.globalAlpha = item.opacity;
      ctx.fillStyle = item.color;
      ctx.font = "14px sans-serif";
      ctx.textAlign = "center";
      ctx.textBaseline = "bottom";
      ctx.fillText(item.text, item.u, item.v);
      ctx.globalAlpha = 1.0;
    }
  }
  ctx.restore();
}
