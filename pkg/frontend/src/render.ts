// Draw-list renderer for the bird's-eye canvases.

import type { DrawOp } from "./scene.js";
import { screenFromWorld, type CanvasSize, type ViewState } from "./view.js";

const VEHICLE_LENGTH = 4.5;
const VEHICLE_WIDTH = 2.0;

export function drawScene(ctx: CanvasRenderingContext2D, ops: DrawOp[],
                          view: ViewState, canvas: CanvasSize): void {
  ctx.fillStyle = "#1b1d21";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  for (const op of ops) {
    switch (op.op) {
      case "line": {
        ctx.strokeStyle = op.color;
        ctx.lineWidth = Math.max(1, op.width * view.zoom);
        ctx.setLineDash(op.dash ? op.dash.map((d) => d * view.zoom) : []);
        ctx.beginPath();
        op.pts.forEach(([x, y], i) => {
          const [px, py] = screenFromWorld(view, canvas, x, y);
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      }
      case "disc": {
        const [px, py] = screenFromWorld(view, canvas, op.x, op.y);
        ctx.fillStyle = op.color;
        ctx.beginPath();
        ctx.arc(px, py, Math.max(1.5, op.r * view.zoom), 0, 2 * Math.PI);
        ctx.fill();
        break;
      }
      case "vehicle": {
        const [px, py] = screenFromWorld(view, canvas, op.x, op.y);
        ctx.save();
        ctx.translate(px, py);
        ctx.rotate(-op.heading);
        ctx.fillStyle = op.color;
        const l = VEHICLE_LENGTH * view.zoom;
        const w = VEHICLE_WIDTH * view.zoom;
        ctx.fillRect(-l / 2, -w / 2, l, w);
        ctx.fillStyle = "#ffffff";
        ctx.fillRect(l / 2 - 3, -w / 2, 3, w); // nose marker
        ctx.restore();
        break;
      }
      case "ring": {
        const [px, py] = screenFromWorld(view, canvas, op.x, op.y);
        ctx.strokeStyle = op.color;
        ctx.lineWidth = 1;
        ctx.setLineDash([6, 6]);
        ctx.beginPath();
        ctx.arc(px, py, op.r * view.zoom, 0, 2 * Math.PI);
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      }
      case "text": {
        ctx.fillStyle = op.color;
        ctx.font = "bold 22px sans-serif";
        ctx.textAlign = "center";
        ctx.fillText(op.text, canvas.width / 2, canvas.height / 2 - 60);
        break;
      }
    }
  }
}
