// Console wiring: four panels (request list, main camera, info, input),
// drag-and-drop slotting, canvas gestures, and the socket client.
// Configuration via URL query: index.html?host=127.0.0.1&port=8700

import { GestureMapper, type UiEvent } from "./gestures.js";
import type { Hello, RequestWire, SceneWire, ServerMessage, Snapshot } from "./protocol.js";
import { connect, type Connection } from "./net.js";
import { computeScene } from "./scene.js";
import { drawScene } from "./render.js";
import { applyDrag, applyZoom, followSnapshot, initialView, setToggle,
         worldFromScreen } from "./view.js";

const params = new URLSearchParams(location.search);
const host = params.get("host") ?? "127.0.0.1";
const port = Number(params.get("port") ?? "8700");

const mainCanvas = document.getElementById("main-canvas") as HTMLCanvasElement;
const secondaryCanvas = document.getElementById("secondary-canvas") as HTMLCanvasElement;
const requestList = document.getElementById("request-list") as HTMLElement;
const reasonEl = document.getElementById("info-reason") as HTMLElement;
const speedEl = document.getElementById("info-speed") as HTMLElement;
const glyph = document.getElementById("proximity-glyph") as HTMLElement;
const banner = document.getElementById("banner") as HTMLElement;

const view = initialView();
const mapper = new GestureMapper();
let hello: Hello | null = null;
let snapshot: Snapshot | null = null;
let shiftHeld = false;
let connection: Connection | null = null;

function send(events: UiEvent[]): void {
  for (const event of events) {
    for (const message of mapper.handle(event)) {
      connection?.send(message);
    }
  }
}

function sceneFor(request: RequestWire | null): SceneWire | null {
  if (!hello?.scenes || !request) return null;
  return hello.scenes[request.id] ?? null;
}

function requestIn(state: string): RequestWire | null {
  if (!snapshot) return null;
  return snapshot.requests.find(
    (r) => r.state === state || r.linger_slot === state) ?? null;
}

function render(): void {
  if (!snapshot) return;
  const main = requestIn("main");
  followSnapshot(view, snapshot, main);
  const viewRange = Number(hello?.config["view_range_m"] ?? 200);
  const mainOps = computeScene(sceneFor(main), snapshot, main, viewRange, shiftHeld);
  drawScene(mainCanvas.getContext("2d")!, mainOps, view, mainCanvas);

  const secondary = requestIn("secondary");
  const secondaryView = { ...view, zoom: 1.6 };
  if (secondary) {
    secondaryView.centerX = secondary.vehicle.x;
    secondaryView.centerY = secondary.vehicle.y;
  }
  const secOps = computeScene(sceneFor(secondary), snapshot, secondary, viewRange, false);
  drawScene(secondaryCanvas.getContext("2d")!, secOps, secondaryView, secondaryCanvas);

  renderList();
  renderInfo(main);
}

function renderList(): void {
  requestList.textContent = "";
  if (!snapshot) return;
  for (const request of snapshot.requests) {
    if (request.state !== "queued") continue;
    const card = document.createElement("div");
    card.className = "card" + (request.needs_action ? " urgent" : "");
    card.draggable = true;
    card.textContent = `request ${request.id}: ${request.reason ?? ""}`;
    card.addEventListener("dragstart", (ev) => {
      ev.dataTransfer?.setData("text/plain", String(request.id));
    });
    requestList.appendChild(card);
  }
}

function renderInfo(main: RequestWire | null): void {
  if (!main) {
    reasonEl.textContent = "-";
    speedEl.textContent = "-";
    glyph.className = "glyph";
    return;
  }
  reasonEl.textContent = main.reason ?? "";
  speedEl.textContent = `${(main.vehicle.speed * 3.6).toFixed(0)} km/h`;
  glyph.className = "glyph"
    + (main.proximity?.front ? " front-hot" : "")
    + (main.proximity?.rear ? " rear-hot" : "");
}

function canvasWorld(ev: MouseEvent): [number, number] {
  const rect = mainCanvas.getBoundingClientRect();
  return worldFromScreen(view, mainCanvas,
                         ev.clientX - rect.left, ev.clientY - rect.top);
}

function wirePanels(): void {
  for (const [id, area] of [["request-panel", "request_panel"],
                            ["main-panel", "main_panel"],
                            ["secondary-panel", "secondary_panel"],
                            ["info-panel", "info_panel"]] as const) {
    const el = document.getElementById(id)!;
    el.addEventListener("mouseenter", () => send([{ kind: "panel_enter", area }]));
    el.addEventListener("mouseleave", () => send([{ kind: "panel_leave", area }]));
  }
  for (const [id, target] of [["main-panel", "main"],
                              ["secondary-panel", "secondary"],
                              ["request-panel", "queue"]] as const) {
    const el = document.getElementById(id)!;
    el.addEventListener("dragover", (ev) => ev.preventDefault());
    el.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const raw = ev.dataTransfer?.getData("text/plain");
      if (raw) send([{ kind: "card_drop", requestId: Number(raw), target }]);
    });
  }
}

function wireCanvas(): void {
  mainCanvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  let leftDown = false;
  let rightDown = false;
  mainCanvas.addEventListener("mousedown", (ev) => {
    if (ev.button === 2) {
      rightDown = true;
      const [x, y] = canvasWorld(ev);
      send([{ kind: "right_down", x, y, shift: ev.shiftKey, ctrl: ev.ctrlKey,
              panel: "main" }]);
    } else if (ev.button === 0) {
      leftDown = true;
    }
  });
  mainCanvas.addEventListener("mousemove", (ev) => {
    if (rightDown) {
      const [x, y] = canvasWorld(ev);
      send([{ kind: "right_move", x, y }]);
    } else if (leftDown) {
      applyDrag(view, ev.movementX, ev.movementY);
      send([{ kind: "left_drag", dxPx: ev.movementX, dyPx: ev.movementY,
              panel: "main" }]);
      render();
    } else {
      send([{ kind: "pointer_move", dxPx: ev.movementX, dyPx: ev.movementY }]);
    }
  });
  window.addEventListener("mouseup", (ev) => {
    if (ev.button === 2 && rightDown) {
      rightDown = false;
      const [x, y] = canvasWorld(ev);
      send([{ kind: "right_up", x, y }]);
    }
    if (ev.button === 0) leftDown = false;
  });
  mainCanvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    applyZoom(view, ev.deltaY < 0 ? 1.15 : 1 / 1.15);
    render();
  });
  secondaryCanvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Shift") { shiftHeld = true; render(); }
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.key === "Shift") { shiftHeld = false; render(); }
  });
}

function wireToggles(): void {
  for (const [id, mode] of [["btn-vehicle-focus", "vehicle"],
                            ["btn-path-end-focus", "path_end"],
                            ["btn-lock", "lock"]] as const) {
    const el = document.getElementById(id) as HTMLButtonElement;
    el.addEventListener("click", () => {
      const on = !el.classList.contains("active");
      setToggle(view, mode, on);
      for (const other of ["btn-vehicle-focus", "btn-path-end-focus"]) {
        if (mode !== "lock" && other !== id) {
          document.getElementById(other)!.classList.remove("active");
        }
      }
      el.classList.toggle("active", on);
      send([{ kind: "toggle", mode, on }]);
      render();
    });
  }
}

function onServerMessage(message: ServerMessage): void {
  switch (message.type) {
    case "hello":
      hello = message;
      break;
    case "snapshot":
      snapshot = message;
      mapper.setSnapshot(message);
      render();
      break;
    case "resolved":
      break; // the announcement arrives inside the next snapshots
    case "reject":
      banner.textContent = `input rejected: ${message.reason}`;
      banner.className = "banner show warn";
      setTimeout(() => { banner.className = "banner"; }, 1200);
      break;
    case "episode_end":
      banner.textContent = "episode over";
      banner.className = "banner show";
      break;
    case "error":
      console.warn("server error:", message.message);
      break;
  }
}

function start(): void {
  wirePanels();
  wireCanvas();
  wireToggles();
  connection = connect(host, port, onServerMessage, (up) => {
    banner.textContent = up ? "" : "connection lost - reconnect by reloading";
    banner.className = up ? "banner" : "banner show warn";
  });
}

start();
