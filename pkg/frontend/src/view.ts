// Client-authoritative view state for the main bird's-eye panel: camera,
// zoom, and the three toggles. At most one focus toggle is effective at a
// time; the lock restricts manual dragging to the road axis.

import type { RequestWire, Snapshot } from "./protocol.js";

export interface ViewState {
  centerX: number;
  centerY: number;
  zoom: number; // pixels per meter
  vehicleFocus: boolean;
  pathEndFocus: boolean;
  lock: boolean;
}

export const MIN_ZOOM = 0.8;
export const MAX_ZOOM = 12.0;

export function initialView(): ViewState {
  return { centerX: 100, centerY: 0, zoom: 3.0,
           vehicleFocus: true, pathEndFocus: false, lock: false };
}

export function setToggle(view: ViewState, mode: "vehicle" | "path_end" | "lock",
                          on: boolean): void {
  if (mode === "lock") {
    view.lock = on;
    return;
  }
  if (mode === "vehicle") {
    view.vehicleFocus = on;
    if (on) view.pathEndFocus = false;
  } else {
    view.pathEndFocus = on;
    if (on) view.vehicleFocus = false;
  }
}

/** Manual drag in screen pixels; breaks path-end focus, honors the lock. */
export function applyDrag(view: ViewState, dxPx: number, dyPx: number): void {
  view.centerX -= dxPx / view.zoom;
  if (!view.lock) {
    view.centerY += dyPx / view.zoom;
  }
  view.pathEndFocus = false;
  view.vehicleFocus = false;
}

export function applyZoom(view: ViewState, factor: number): void {
  view.zoom = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, view.zoom * factor));
}

/** Re-center per the active focus toggle before rendering a snapshot. */
export function followSnapshot(view: ViewState, snapshot: Snapshot,
                               request: RequestWire | null): void {
  if (!request) return;
  if (view.vehicleFocus) {
    view.centerX = request.vehicle.x;
    view.centerY = request.vehicle.y;
  } else if (view.pathEndFocus && request.path.length > 0) {
    const end = request.path[request.path.length - 1];
    view.centerX = end[0];
    view.centerY = end[1];
  }
}

export interface CanvasSize { width: number; height: number }

export function worldFromScreen(view: ViewState, canvas: CanvasSize,
                                px: number, py: number): [number, number] {
  const x = view.centerX + (px - canvas.width / 2) / view.zoom;
  const y = view.centerY - (py - canvas.height / 2) / view.zoom;
  return [x, y];
}

export function screenFromWorld(view: ViewState, canvas: CanvasSize,
                                x: number, y: number): [number, number] {
  const px = canvas.width / 2 + (x - view.centerX) * view.zoom;
  const py = canvas.height / 2 - (y - view.centerY) * view.zoom;
  return [px, py];
}
