// Client-side view state: the avatar pose is interpolated between server
// states and never extrapolated more than 200 ms past the last one. The
// client owns no physics; all texts come verbatim from server messages.

import { ServerMsg, StateMsg } from "./protocol.js";

export const MAX_EXTRAPOLATION_MS = 200;
export const INTERPOLATION_DELAY_MS = 100; // render one state interval behind

export interface Pose {
  x: number;
  y: number;
  z: number;
  yaw: number;
}

export type ConnectionStatus = "connecting" | "live" | "ended" | "error";

export class ViewState {
  status: ConnectionStatus = "connecting";
  messageText: string | null = null;
  alarmText: string | null = null; // persists once shown
  errorText: string | null = null;
  endText: string | null = null;
  assignment = 0;
  fixtureHash: string | null = null;
  localYaw = 0; // client-side look direction (sent to the server)
  localPitch = 0;

  private prev: { t: number; pose: Pose } | null = null;
  private last: { t: number; pose: Pose } | null = null;
  private lastArrivalMs = 0;

  apply(msg: ServerMsg, nowMs: number): void {
    switch (msg.type) {
      case "spawn":
        this.status = "live";
        this.fixtureHash = msg.fixture_hash;
        this.messageText = msg.assignment.message;
        this.assignment = msg.assignment.id;
        this.localYaw = msg.yaw;
        this.prev = this.last = {
          t: 0,
          pose: { x: msg.pos[0], y: msg.pos[1], z: msg.pos[2], yaw: msg.yaw },
        };
        this.lastArrivalMs = nowMs;
        break;
      case "state":
        this.applyState(msg, nowMs);
        break;
      case "message":
        this.messageText = msg.text;
        break;
      case "alarm":
        this.alarmText = msg.text; // never cleared
        break;
      case "error":
        this.status = "error";
        this.errorText = msg.text;
        break;
      case "end":
        this.status = "ended";
        this.endText = msg.exit_label
          ? `Exit ${msg.exit_label} reached`
          : (msg.reason ?? "session ended");
        break;
    }
  }

  private applyState(msg: StateMsg, nowMs: number): void {
    const pose: Pose = { x: msg.pos[0], y: msg.pos[1], z: msg.pos[2], yaw: msg.yaw };
    this.prev = this.last;
    this.last = { t: msg.t_ms, pose };
    this.lastArrivalMs = nowMs;
    this.assignment = msg.assignment;
  }

  // pose to draw at wall-clock nowMs; clamped so it never runs more than
  // MAX_EXTRAPOLATION_MS past the last received state
  renderPose(nowMs: number): Pose | null {
    if (!this.last) return null;
    if (!this.prev || this.prev.t === this.last.t) return this.last.pose;
    const sinceArrival = nowMs - this.lastArrivalMs;
    const clamped = Math.min(sinceArrival, MAX_EXTRAPOLATION_MS);
    // map wall time onto the server timeline, one interval behind
    const span = this.last.t - this.prev.t;
    const tt = this.last.t - INTERPOLATION_DELAY_MS + clamped;
    const f = Math.min(1, Math.max(0, (tt - this.prev.t) / span));
    const a = this.prev.pose;
    const b = this.last.pose;
    return {
      x: a.x + (b.x - a.x) * f,
      y: a.y + (b.y - a.y) * f,
      z: a.z + (b.z - a.z) * f,
      yaw: b.yaw,
    };
  }
}
