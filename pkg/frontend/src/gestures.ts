// Gesture-to-message mapping. Every accepted gesture emits exactly its
// mapped client message (a drawn stroke is one bracketed begin/samples/end
// burst). Path gestures apply only to the main panel; the secondary panel
// is strictly read-only and emits nothing but dwell events.

import type { ClientMessage, RequestWire, Snapshot } from "./protocol.js";

export type PanelName = "main" | "secondary" | "list" | "info";

export type UiEvent =
  | { kind: "pointer_move"; dxPx: number; dyPx: number }
  | { kind: "right_down"; x: number; y: number; shift: boolean; ctrl: boolean;
      panel: PanelName }
  | { kind: "right_move"; x: number; y: number }
  | { kind: "right_up"; x: number; y: number }
  | { kind: "left_drag"; dxPx: number; dyPx: number; panel: PanelName }
  | { kind: "card_drop"; requestId: number; target: "main" | "secondary" | "queue" }
  | { kind: "panel_enter"; area: string }
  | { kind: "panel_leave"; area: string }
  | { kind: "toggle"; mode: "vehicle" | "path_end" | "lock"; on: boolean };

const CLICK_PICK_RADIUS_M = 2.5;   // candidate / waypoint hit test
const STROKE_START_DIST_M = 1.5;   // drag farther than this begins a stroke
export const PX_PER_CM = 37.8;

function dist(ax: number, ay: number, bx: number, by: number): number {
  return Math.hypot(ax - bx, ay - by);
}

function pointToPolyline(x: number, y: number, line: number[][]): number {
  let best = Infinity;
  for (let i = 0; i + 1 < line.length; i++) {
    const [ax, ay] = line[i];
    const [bx, by] = line[i + 1];
    const vx = bx - ax;
    const vy = by - ay;
    const denom = vx * vx + vy * vy;
    const t = denom > 0 ? Math.max(0, Math.min(1, ((x - ax) * vx + (y - ay) * vy) / denom)) : 0;
    best = Math.min(best, dist(x, y, ax + t * vx, ay + t * vy));
  }
  return best;
}

function nearestIndex(x: number, y: number, lines: number[][][]): [number, number] {
  let best = Infinity;
  let idx = -1;
  lines.forEach((line, i) => {
    const d = pointToPolyline(x, y, line);
    if (d < best) {
      best = d;
      idx = i;
    }
  });
  return [idx, best];
}

export class GestureMapper {
  snapshot: Snapshot | null = null;
  pxPerCm = PX_PER_CM;
  private stroke: { samples: number } | null = null;
  private down: { x: number; y: number; shift: boolean; ctrl: boolean } | null = null;

  setSnapshot(snapshot: Snapshot): void {
    this.snapshot = snapshot;
  }

  private clock(): number {
    return this.snapshot ? this.snapshot.clock : 0;
  }

  private mainRequest(): RequestWire | null {
    if (!this.snapshot) return null;
    return this.snapshot.requests.find((r) => r.state === "main") ?? null;
  }

  handle(event: UiEvent): ClientMessage[] {
    const t = this.clock();
    switch (event.kind) {
      case "pointer_move":
        return [{ type: "pointer_moved", dx: event.dxPx, dy: event.dyPx,
                  px_per_cm: this.pxPerCm, t }];
      case "panel_enter":
        return [{ type: "aoi_change", area: event.area, enter: true, t }];
      case "panel_leave":
        return [{ type: "aoi_change", area: event.area, enter: false, t }];
      case "card_drop":
        return [{ type: "slot_assign", request_id: event.requestId,
                  slot: event.target, t }];
      case "toggle":
        return [{ type: "focus_toggle", mode: event.mode, on: event.on, t }];
      case "left_drag":
        if (event.panel !== "main") return [];
        return [{ type: "view_drag", dx: event.dxPx, dy: event.dyPx, t }];
      case "right_down":
        if (event.panel !== "main" || !this.mainRequest()) return [];
        this.down = { x: event.x, y: event.y, shift: event.shift, ctrl: event.ctrl };
        this.stroke = null;
        return [];
      case "right_move":
        return this.rightMove(event.x, event.y);
      case "right_up":
        return this.rightUp(event.x, event.y);
    }
  }

  private rightMove(x: number, y: number): ClientMessage[] {
    const main = this.mainRequest();
    if (!this.down || !main) return [];
    const t = this.clock();
    if (!this.stroke) {
      if (dist(x, y, this.down.x, this.down.y) < STROKE_START_DIST_M) return [];
      this.stroke = { samples: 2 };
      return [
        { type: "stroke_begin", request_id: main.id, snap: this.down.ctrl, t },
        { type: "stroke_sample", request_id: main.id, x: this.down.x,
          y: this.down.y, t: t + 0.01 },
        { type: "stroke_sample", request_id: main.id, x, y, t: t + 0.02 },
      ];
    }
    this.stroke.samples += 1;
    return [{ type: "stroke_sample", request_id: main.id, x, y,
              t: t + 0.01 * this.stroke.samples }];
  }

  private rightUp(x: number, y: number): ClientMessage[] {
    const main = this.mainRequest();
    const down = this.down;
    this.down = null;
    if (!down || !main) return [];
    const t = this.clock();
    if (this.stroke) {
      const n = this.stroke.samples;
      this.stroke = null;
      return [{ type: "stroke_end", request_id: main.id, t: t + 0.01 * (n + 1) }];
    }
    // plain click: delete a waypoint, pick a candidate, or place a waypoint
    if (down.shift) {
      const waypointIdx = this.nearestUncommittedWaypoint(main, x, y);
      if (waypointIdx >= 0) {
        return [{ type: "waypoint_edit", request_id: main.id, edit: "delete",
                  index: waypointIdx, t }];
      }
      if (main.candidates) {
        const [idx, d] = nearestIndex(x, y, main.candidates.reverse);
        if (idx >= 0 && d <= CLICK_PICK_RADIUS_M) {
          return [{ type: "candidate_select", request_id: main.id, index: idx,
                    reverse: true,
                    generation_tick: main.candidates.generation_tick, t }];
        }
      }
      return [];
    }
    if (main.candidates) {
      const [idx, d] = nearestIndex(x, y, main.candidates.forward);
      if (idx >= 0 && d <= CLICK_PICK_RADIUS_M) {
        return [{ type: "candidate_select", request_id: main.id, index: idx,
                  reverse: false,
                  generation_tick: main.candidates.generation_tick, t }];
      }
    }
    return [{ type: "waypoint_place", request_id: main.id, x, y,
              snap: down.ctrl, t }];
  }

  private nearestUncommittedWaypoint(main: RequestWire, x: number, y: number): number {
    let best = CLICK_PICK_RADIUS_M;
    let idx = -1;
    main.path.forEach((p, i) => {
      if (i <= main.committed_index) return;
      const d = dist(x, y, p[0], p[1]);
      if (d < best) {
        best = d;
        idx = i;
      }
    });
    return idx;
  }
}
