// Page wiring: live participant mode (egocentric raycast view driven by
// the session server) and the replay viewer (plan + scrubber).

import { Connection } from "./net.js";
import { fixtureHash } from "./protocol.js";
import { InputTracker, SEND_HZ } from "./input.js";
import { ViewState } from "./view.js";
import { allFloors, floorForZ, FloorGeometry } from "./walls.js";
import { castColumns, columnHeightPx, projectLabels } from "./raycaster.js";
import {
  ReplayDocument,
  clampScrub,
  eventsAt,
  parseReplayDocument,
} from "./replay.js";
import { renderReplay, DrawSurface } from "./replayView.js";

const $ = (id: string) => document.getElementById(id)!;

function canvasSurface(ctx: CanvasRenderingContext2D): DrawSurface {
  return {
    width: ctx.canvas.width,
    height: ctx.canvas.height,
    line(x1, y1, x2, y2, color, w) {
      ctx.strokeStyle = color;
      ctx.lineWidth = w;
      ctx.beginPath();
      ctx.moveTo(x1, y1);
      ctx.lineTo(x2, y2);
      ctx.stroke();
    },
    dot(x, y, r, color) {
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(x, y, r, 0, Math.PI * 2);
      ctx.fill();
    },
    text(x, y, s, color) {
      ctx.fillStyle = color;
      ctx.font = "12px sans-serif";
      ctx.fillText(s, x, y);
    },
  };
}

// ------------------------------------------------------------------ live

let alarmAudio: { stop(): void } | null = null;

function startAlarmLoop(): { stop(): void } {
  const ac = new AudioContext();
  const gain = ac.createGain();
  gain.gain.value = 0.08;
  gain.connect(ac.destination);
  const osc = ac.createOscillator();
  osc.type = "square";
  osc.connect(gain);
  osc.start();
  // two-tone evacuation pattern
  const timer = setInterval(() => {
    osc.frequency.value = osc.frequency.value === 950 ? 650 : 950;
  }, 450);
  osc.frequency.value = 950;
  return {
    stop() {
      clearInterval(timer);
      osc.stop();
      void ac.close();
    },
  };
}

async function startLive(): Promise<void> {
  const server = ($("server") as HTMLInputElement).value;
  const pid = ($("participant") as HTMLInputElement).value || "anon";
  const eye = parseFloat(($("eye") as HTMLInputElement).value || "170");

  const fixtureText = await (await fetch("ceg_fixture.json")).text();
  const localHash = await fixtureHash(fixtureText);
  const building = JSON.parse(fixtureText);
  const floors = new Map<number, FloorGeometry>(
    allFloors(building).map((f) => [f.id, f]),
  );

  const canvas = $("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const view = new ViewState();
  const input = new InputTracker();
  let token: string | null = null;
  let minimap = false;

  const conn = new Connection(server);
  conn.onopen = () =>
    conn.send({ type: "hello", participant_id: pid, eye_height_cm: eye });
  conn.onclose = () => {
    if (view.status !== "ended" && view.status !== "error") {
      view.status = "error";
      view.errorText = "connection lost (press Connect to retry)";
    }
  };
  conn.onmessage = (msg) => {
    view.apply(msg, performance.now());
    if (msg.type === "spawn") {
      token = msg.token;
      input.yaw = msg.yaw;
      if (msg.fixture_hash !== localHash) {
        view.status = "error";
        view.errorText = "fixture hash mismatch: client building differs from server";
        conn.close();
      }
    }
    if (msg.type === "alarm" && !alarmAudio) {
      alarmAudio = startAlarmLoop();
    }
    if (msg.type === "end" && alarmAudio) {
      alarmAudio.stop();
      alarmAudio = null;
    }
    updateBanners(view);
  };

  // input plumbing
  canvas.onpointerdown = () => {
    canvas.requestPointerLock();
    input.pointerDown();
  };
  canvas.onpointerup = () => input.pointerUp();
  document.onkeydown = (e) => {
    input.keyDown(e.code);
    if (e.code === "KeyM") minimap = !minimap;
  };
  document.onkeyup = (e) => input.keyUp(e.code);
  document.onmousemove = (e) => {
    if (document.pointerLockElement === canvas) {
      input.mouseMove(e.movementX, e.movementY);
    }
  };

  let lastSend = 0;
  const sender = setInterval(() => {
    if (token === null || view.status !== "live") return;
    input.tick(1 / SEND_HZ);
    const f = input.frame();
    conn.send({
      type: "input",
      token,
      move_held: f.move_held,
      yaw_deg: f.yaw_deg,
      pitch_deg: f.pitch_deg,
      roll_deg: f.roll_deg,
    });
    lastSend = performance.now();
  }, 1000 / SEND_HZ);
  void lastSend;

  let lastFloor = -1;
  let fade = 0;

  function frame(): void {
    const pose = view.renderPose(performance.now());
    ctx.fillStyle = "#2b2b2b";
    ctx.fillRect(0, 0, canvas.width, canvas.height / 2);
    ctx.fillStyle = "#4a4438";
    ctx.fillRect(0, canvas.height / 2, canvas.width, canvas.height / 2);
    if (pose && view.status === "live") {
      const floorId = floorForZ(building, pose.z, eye);
      if (lastFloor !== -1 && floorId !== lastFloor) fade = 1; // stair transition
      lastFloor = floorId;
      const geom = floors.get(floorId)!;
      const w = canvas.width;
      const h = canvas.height;
      const columns = castColumns(geom.walls, pose.x, pose.y, input.yaw, w);
      const horizon = h / 2 + (input.pitch / 89) * (h / 2);
      for (let c = 0; c < w; c++) {
        const col = columns[c];
        const hh = columnHeightPx(col.dist, w, h);
        const shade = Math.floor(40 + 180 * col.shade);
        ctx.fillStyle = `rgb(${shade},${shade - 10},${shade - 24})`;
        ctx.fillRect(c, horizon - hh / 2, 1, hh);
      }
      for (const hit of projectLabels(geom.decals, columns, pose.x, pose.y, input.yaw, w)) {
        const size = Math.max(9, 26 - hit.dist / 80);
        ctx.font = `${size}px sans-serif`;
        ctx.fillStyle = hit.kind === "exit_sign" || hit.kind === "exit_door"
          ? "#7cf58a" : "#f0e8d8";
        ctx.fillText(hit.label, hit.column - 12, horizon - columnHeightPx(hit.dist, w, h) / 4);
      }
      if (minimap) drawMinimap(ctx, geom, pose.x, pose.y, input.yaw);
      if (fade > 0) {
        ctx.fillStyle = `rgba(0,0,0,${fade.toFixed(2)})`;
        ctx.fillRect(0, 0, w, h);
        fade = Math.max(0, fade - 0.04);
      }
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);

  window.addEventListener("beforeunload", () => {
    clearInterval(sender);
    conn.close();
  });
}

function drawMinimap(
  ctx: CanvasRenderingContext2D,
  geom: FloorGeometry,
  x: number,
  y: number,
  yawDeg: number,
): void {
  const scale = 0.02;
  ctx.save();
  ctx.translate(110, 110);
  ctx.fillStyle = "rgba(0,0,0,0.5)";
  ctx.fillRect(-105, -105, 210, 210);
  ctx.rotate(-Math.PI / 2 - (yawDeg * Math.PI) / 180);
  ctx.strokeStyle = "#9f9";
  ctx.lineWidth = 1;
  for (const s of geom.walls) {
    ctx.beginPath();
    ctx.moveTo((s.x1 - x) * scale, (s.y1 - y) * scale);
    ctx.lineTo((s.x2 - x) * scale, (s.y2 - y) * scale);
    ctx.stroke();
  }
  ctx.restore();
  ctx.fillStyle = "#fff";
  ctx.fillRect(108, 108, 4, 4);
}

function updateBanners(view: ViewState): void {
  const message = $("message");
  message.textContent = view.messageText ?? "";
  message.style.display = view.messageText ? "block" : "none";
  const alarm = $("alarm");
  alarm.textContent = view.alarmText ?? "";
  alarm.style.display = view.alarmText ? "block" : "none";
  const status = $("status");
  if (view.status === "error") status.textContent = view.errorText ?? "error";
  else if (view.status === "ended") status.textContent = view.endText ?? "ended";
  else status.textContent = view.status;
}

// ---------------------------------------------------------------- replay

function startReplay(doc: ReplayDocument): void {
  const canvas = $("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const scrub = $("scrub") as HTMLInputElement;
  const floorSel = $("floor") as HTMLSelectElement;
  floorSel.innerHTML = doc.floors
    .map((f) => `<option value="${f.id}">floor ${f.id}</option>`)
    .join("");
  const t0 = doc.trajectory[0].t_ms;
  const t1 = doc.trajectory[doc.trajectory.length - 1].t_ms;
  scrub.min = String(t0);
  scrub.max = String(t1);
  scrub.value = String(t1);
  $("replay-controls").style.display = "block";

  function draw(): void {
    ctx.fillStyle = "#101014";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const t = clampScrub(doc, parseFloat(scrub.value));
    const floor = parseInt(floorSel.value, 10);
    const stats = renderReplay(doc, canvasSurface(ctx), floor, t);
    const events = eventsAt(doc, t);
    $("status").textContent =
      `${doc.participant_id} @ ${(t / 1000).toFixed(1)}s | floor ${floor} | ` +
      `${stats.drawnVertices}/${stats.trajectoryVertices} pts` +
      (events.length ? ` | ${events.join(", ")}` : "");
  }
  scrub.oninput = draw;
  floorSel.onchange = draw;
  draw();
}

// --------------------------------------------------------------- startup

$("connect").onclick = () => void startLive();
($("replay-file") as HTMLInputElement).onchange = async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  try {
    startReplay(parseReplayDocument(JSON.parse(await file.text())));
  } catch (e) {
    $("status").textContent = `bad replay document: ${e}`;
  }
};
