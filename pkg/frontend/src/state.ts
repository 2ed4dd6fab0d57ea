// Single source of truth on the client: everything rendered comes from
// server frames; the UI never mutates simulation state locally.

import { GridStore } from "./gridstore.js";
import type { FrameMessage, HelloMessage } from "./protocol.js";

export type Tool = "obstacle" | "goal" | "inspect";

export interface ErrorSample {
  t: number;
  e1: number;
  e2: number;
  e3: number;
}

const ERROR_WINDOW = 600; // samples kept for the live error plot

export class ViewState {
  connection: "connecting" | "connected" | "closed" = "connecting";
  hello: HelloMessage | null = null;
  frame: FrameMessage | null = null;
  grid: GridStore | null = null;
  gridSynced = false;
  plan: { xs: number[]; ys: number[] } | null = null;
  trail: Array<[number, number]> = [];
  errors: ErrorSample[] = [];
  tool: Tool = "inspect";
  statusNote = "";

  onHello(msg: HelloMessage): void {
    this.hello = msg;
    this.grid = new GridStore(msg.map.width, msg.map.height);
    this.gridSynced = false;
    this.trail = [];
    this.errors = [];
    this.plan = null;
  }

  onFrame(msg: FrameMessage): boolean {
    if (!this.grid) return false;
    if (this.frame !== null && msg.tick < this.frame.tick) {
      // session reset on the server: start accumulating fresh
      this.trail = [];
      this.errors = [];
    }
    this.frame = msg;
    this.gridSynced = this.grid.apply(msg.grid);
    if (msg.plan !== undefined) {
      this.plan = msg.plan ?? null;
    }
    this.trail.push([msg.pose[0], msg.pose[1]]);
    this.errors.push({
      t: msg.t,
      e1: msg.errors[0],
      e2: msg.errors[1],
      e3: msg.errors[2],
    });
    if (this.errors.length > ERROR_WINDOW) {
      this.errors.splice(0, this.errors.length - ERROR_WINDOW);
    }
    return this.gridSynced;
  }

  worldBounds(): { x0: number; y0: number; x1: number; y1: number } | null {
    if (!this.hello) return null;
    const { width, height, resolution, origin } = this.hello.map;
    return {
      x0: origin[0],
      y0: origin[1],
      x1: origin[0] + width * resolution,
      y1: origin[1] + height * resolution,
    };
  }

  inBounds(wx: number, wy: number): boolean {
    const b = this.worldBounds();
    return !!b && wx >= b.x0 && wx < b.x1 && wy >= b.y0 && wy < b.y1;
  }
}
