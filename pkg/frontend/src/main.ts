// Operator console wiring: socket, view state, canvas, tools, toasts.

import { Camera } from "./camera.js";
import { TelemetryClient } from "./client.js";
import { renderErrorPlot, renderScene } from "./render.js";
import { ViewState, type Tool } from "./state.js";
import { throttle } from "./throttle.js";

const MOVE_THROTTLE_MS = 50; // <= 20 Hz even for 120 Hz pointer streams
const OBSTACLE_RADIUS = 0.2;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
}

function wsUrl(): string {
  const override = new URLSearchParams(window.location.search).get("server");
  if (override) return override;
  const proto = window.location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${window.location.host}/ws`;
}

function main(): void {
  const canvas = byId<HTMLCanvasElement>("scene");
  const errorCanvas = byId<HTMLCanvasElement>("errors");
  const statusEl = byId<HTMLSpanElement>("status");
  const modeEl = byId<HTMLSpanElement>("mode");
  const tickEl = byId<HTMLSpanElement>("tick");
  const toastEl = byId<HTMLDivElement>("toast");

  const view = new ViewState();
  const camera = new Camera(canvas.width, canvas.height);
  let fitted = false;
  let obstacleCount = 0;
  let dragging: string | null = null;
  let panning: { sx: number; sy: number } | null = null;

  const client = new TelemetryClient(wsUrl(), {
    onStatus: (status) => {
      view.connection = status;
      statusEl.textContent = status;
      statusEl.className = status;
    },
    onMessage: (msg) => {
      if (msg.type === "hello") {
        view.onHello(msg);
        fitted = false;
      } else if (msg.type === "frame") {
        const ok = view.onFrame(msg);
        if (!ok && view.grid) {
          toast("grid checksum mismatch; resyncing");
          client.close();
          window.setTimeout(() => window.location.reload(), 300);
        }
        if (!fitted && view.hello) {
          const m = view.hello.map;
          camera.fit(m.width * m.resolution, m.height * m.resolution,
                     m.origin[0], m.origin[1]);
          fitted = true;
        }
        modeEl.textContent = msg.mode;
        modeEl.className = `badge ${msg.mode.toLowerCase()}`;
        tickEl.textContent = `tick ${msg.tick} / t=${msg.t.toFixed(2)}s`;
      } else {
        toast(msg.message);
      }
    },
  });
  client.connect();

  function toast(message: string): void {
    toastEl.textContent = message;
    toastEl.classList.add("visible");
    window.setTimeout(() => toastEl.classList.remove("visible"), 2500);
  }

  // -- tools ---------------------------------------------------------------

  let tool: Tool = "inspect";
  const toolButtons: Record<Tool, HTMLButtonElement> = {
    obstacle: byId<HTMLButtonElement>("tool-obstacle"),
    goal: byId<HTMLButtonElement>("tool-goal"),
    inspect: byId<HTMLButtonElement>("tool-inspect"),
  };
  function selectTool(next: Tool): void {
    tool = next;
    view.tool = next;
    for (const [name, button] of Object.entries(toolButtons)) {
      button.classList.toggle("active", name === next);
    }
  }
  for (const name of Object.keys(toolButtons) as Tool[]) {
    toolButtons[name].addEventListener("click", () => selectTool(name));
  }
  selectTool("inspect");

  byId<HTMLButtonElement>("pause").addEventListener("click", () => {
    client.send(view.frame?.paused ? "RESUME" : "PAUSE");
  });
  byId<HTMLButtonElement>("reset").addEventListener("click", () => {
    client.send("RESET");
  });

  const throttledMove = throttle((id: string, wx: number, wy: number) => {
    client.send("MOVE_OBSTACLE", { id, position: [wx, wy] });
  }, MOVE_THROTTLE_MS);

  canvas.addEventListener("pointerdown", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const sx = ev.clientX - rect.left;
    const sy = ev.clientY - rect.top;
    const [wx, wy] = camera.toWorld(sx, sy);
    if (tool === "obstacle") {
      if (!view.inBounds(wx, wy)) {
        toast("outside the world");
        return;
      }
      obstacleCount += 1;
      const id = `op${obstacleCount}`;
      client.send("ADD_OBSTACLE", {
        id, position: [wx, wy], radius: OBSTACLE_RADIUS,
      });
      dragging = id;
      canvas.setPointerCapture(ev.pointerId);
    } else if (tool === "goal") {
      if (!view.inBounds(wx, wy)) {
        toast("outside the world");
        return;
      }
      client.send("SET_GOAL", { position: [wx, wy] });
    } else {
      panning = { sx, sy };
      canvas.setPointerCapture(ev.pointerId);
    }
  });

  canvas.addEventListener("pointermove", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const sx = ev.clientX - rect.left;
    const sy = ev.clientY - rect.top;
    if (dragging) {
      const [wx, wy] = camera.toWorld(sx, sy);
      if (view.inBounds(wx, wy)) throttledMove(dragging, wx, wy);
    } else if (panning) {
      camera.pan(sx - panning.sx, sy - panning.sy);
      panning = { sx, sy };
    }
  });

  const endDrag = () => {
    dragging = null;
    panning = null;
  };
  canvas.addEventListener("pointerup", endDrag);
  canvas.addEventListener("pointercancel", endDrag);

  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    camera.zoomAt(ev.clientX - rect.left, ev.clientY - rect.top,
                  ev.deltaY < 0 ? 1.15 : 1 / 1.15);
  }, { passive: false });

  // -- render loop -----------------------------------------------------------

  const ctx = canvas.getContext("2d")!;
  const errorCtx = errorCanvas.getContext("2d")!;
  function paint(): void {
    renderScene(ctx, view, camera);
    renderErrorPlot(errorCtx, view, errorCanvas.width, errorCanvas.height);
    requestAnimationFrame(paint);
  }
  requestAnimationFrame(paint);
}

main();
