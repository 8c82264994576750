// Wire types for the line/WebSocket session protocol (version 1).
// One JSON object per frame; every client message carries a timestamp `t`
// taken from the latest snapshot clock.

export const PROTOCOL_VERSION = "1";

export type SlotName = "main" | "secondary" | "queue";
export type AoiArea = "request_panel" | "info_panel" | "main_panel" | "secondary_panel";
export type FocusMode = "vehicle" | "path_end" | "lock";

export interface VehicleWire {
  x: number;
  y: number;
  heading: number;
  speed: number;
  stopped_by_collision?: boolean;
}

export interface CandidatesWire {
  generation_tick: number;
  forward: number[][][];
  reverse: number[][][];
}

export interface RequestWire {
  id: number;
  state: string;
  linger_slot?: string | null;
  reason?: string;
  needs_action?: boolean;
  vehicle: VehicleWire;
  proximity?: { front: boolean; rear: boolean };
  progress_raw?: number;
  progress_max?: number;
  remaining_path_m?: number;
  path_end_progress_m?: number;
  path: number[][];
  committed_index: number;
  candidates: CandidatesWire | null;
  traffic?: VehicleWire[];
}

export interface Snapshot {
  type: "snapshot";
  tick: number;
  clock: number;
  requests: RequestWire[];
  announcements: { clock: number; request_id: number; text: string }[];
}

export interface SceneWire {
  side: string;
  works: { start_m: number; end_m: number; blocked_lanes: number[] };
  lane_centers_y: number[];
  road_min: number;
  road_max: number;
  obstacles: number[][];
}

export interface Hello {
  type: "hello";
  protocol_version: string;
  config: Record<string, unknown>;
  scenes?: SceneWire[];
}

export type ServerMessage =
  | Hello
  | Snapshot
  | { type: "resolved"; request_id: number; clock: number }
  | { type: "episode_end"; summary: Record<string, unknown> }
  | { type: "reject"; reason: string; request_id?: number | null }
  | { type: "error"; message: string };

export type ClientMessage = { type: string; [key: string]: unknown };

export function encodeMessage(message: ClientMessage): string {
  // stable key order keeps logs and diffs readable
  const sorted: Record<string, unknown> = {};
  for (const key of Object.keys(message).sort()) {
    sorted[key] = (message as Record<string, unknown>)[key];
  }
  return JSON.stringify(sorted);
}

export function decodeServerMessage(line: string): ServerMessage {
  const parsed = JSON.parse(line) as { type?: string };
  if (typeof parsed.type !== "string") {
    throw new Error("server message without a type tag");
  }
  return parsed as ServerMessage;
}
