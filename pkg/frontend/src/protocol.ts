// Wire types for the telemetry WebSocket protocol (schema version 1).
// Every message is one JSON object with a `type` field.

export interface HelloMessage {
  type: "hello";
  version: number;
  scenario: string;
  tick_dt: number;
  map: { width: number; height: number; resolution: number; origin: [number, number] };
}

export type GridRun = [start: number, length: number, state: number];

export interface GridMessage {
  keyframe: boolean;
  runs: GridRun[];
  checksum: number;
}

export interface HistogramMessage {
  densities: number[];
  theta_tar: number;
  theta_sel: number | null;
}

export interface ObstacleMessage {
  id: string;
  x: number;
  y: number;
  r: number;
}

export interface FrameMessage {
  type: "frame";
  tick: number;
  t: number;
  pose: [number, number, number];
  mode: string;
  command: [number, number];
  errors: [number, number, number];
  min_range: number | null;
  events: string[];
  goal: [number, number];
  plan_version: number;
  plan?: { xs: number[]; ys: number[] } | null;
  grid: GridMessage;
  histogram: HistogramMessage | null;
  ref: [number, number, number] | null;
  obstacles: ObstacleMessage[];
  paused: boolean;
  finished: boolean;
  metrics: { ticks: number; replans: number; mode: string };
}

export interface ErrorMessage {
  type: "error";
  seq: number | null;
  message: string;
}

export type ServerMessage = HelloMessage | FrameMessage | ErrorMessage;

export type CommandKind =
  | "ADD_OBSTACLE"
  | "MOVE_OBSTACLE"
  | "REMOVE_OBSTACLE"
  | "SET_GOAL"
  | "PAUSE"
  | "RESUME"
  | "RESET";

export interface CommandMessage {
  type: "command";
  kind: CommandKind;
  seq: number;
  id?: string;
  position?: [number, number];
  radius?: number;
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (type === "hello" || type === "frame" || type === "error") {
    return data as ServerMessage;
  }
  return null;
}
