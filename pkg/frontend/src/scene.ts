// Snapshot + view state -> draw list. Pure: no simulation happens on the
// client, rendering is a function of the latest snapshot and local view.

import type { RequestWire, SceneWire, Snapshot } from "./protocol.js";

export type DrawOp =
  | { op: "line"; pts: number[][]; color: string; width: number; dash?: number[] }
  | { op: "disc"; x: number; y: number; r: number; color: string }
  | { op: "vehicle"; x: number; y: number; heading: number; color: string }
  | { op: "ring"; x: number; y: number; r: number; color: string }
  | { op: "text"; x: number; y: number; text: string; color: string };

export const COLORS = {
  laneEdge: "#5a5a5a",
  laneCenter: "#3c3c3c",
  cone: "#ff7a1a",
  ego: "#2f7bff",
  traffic: "#9aa0a6",
  committed: "#1d6b34",
  planned: "#4ad06e",
  forward: ["#ffb02e", "#35d0d0", "#d05fd0"],
  reverse: ["#8a6bff", "#ff5f7a", "#9bde3f"],
  viewRing: "#4a6a8a",
  announce: "#ffffff",
};

export function computeScene(scene: SceneWire | null, snapshot: Snapshot | null,
                             request: RequestWire | null, viewRangeM: number,
                             showReverse: boolean): DrawOp[] {
  const ops: DrawOp[] = [];
  if (scene) {
    const half = 1.75;
    const edges = [...scene.lane_centers_y.map((y) => y - half),
                   scene.lane_centers_y[scene.lane_centers_y.length - 1] + half];
    for (const y of edges) {
      ops.push({ op: "line", pts: [[scene.road_min, y], [scene.road_max, y]],
                 color: COLORS.laneEdge, width: 0.15 });
    }
    for (const y of scene.lane_centers_y) {
      ops.push({ op: "line", pts: [[scene.road_min, y], [scene.road_max, y]],
                 color: COLORS.laneCenter, width: 0.08, dash: [3, 6] });
    }
    for (const [x, y, r] of scene.obstacles) {
      ops.push({ op: "disc", x, y, r, color: COLORS.cone });
    }
  }
  if (request) {
    const ci = request.committed_index;
    if (request.path.length > 1) {
      ops.push({ op: "line", pts: request.path.slice(0, ci + 1),
                 color: COLORS.committed, width: 0.8 });
      ops.push({ op: "line", pts: request.path.slice(Math.max(0, ci)),
                 color: COLORS.planned, width: 0.5 });
      for (const p of request.path.slice(ci + 1)) {
        ops.push({ op: "disc", x: p[0], y: p[1], r: 0.6, color: COLORS.planned });
      }
    }
    if (request.candidates) {
      const pool = showReverse ? request.candidates.reverse : request.candidates.forward;
      const palette = showReverse ? COLORS.reverse : COLORS.forward;
      pool.forEach((line, i) => {
        ops.push({ op: "line", pts: line, color: palette[i % palette.length],
                   width: 0.4, dash: [2, 2] });
      });
    }
    for (const u of request.traffic ?? []) {
      ops.push({ op: "vehicle", x: u.x, y: u.y, heading: u.heading,
                 color: COLORS.traffic });
    }
    ops.push({ op: "vehicle", x: request.vehicle.x, y: request.vehicle.y,
               heading: request.vehicle.heading, color: COLORS.ego });
    ops.push({ op: "ring", x: request.vehicle.x, y: request.vehicle.y,
               r: viewRangeM, color: COLORS.viewRing });
  }
  if (snapshot) {
    for (const a of snapshot.announcements) {
      if (!request || a.request_id === request.id) {
        ops.push({ op: "text", x: 0, y: 0, text: a.text, color: COLORS.announce });
      }
    }
  }
  return ops;
}
