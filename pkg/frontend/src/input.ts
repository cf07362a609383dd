// Hold-to-move input: W / pointer-down drives move_held, mouse x/y (or
// arrow keys) steer yaw/pitch. Frames go out at <= 60 Hz; with no new
// events the previous frame is re-sent (sample-and-hold on both sides).

export const SEND_HZ = 60;
export const MOUSE_SENS_DEG_PER_PX = 0.2;
export const KEY_TURN_DEG_PER_S = 120;

export interface InputFrame {
  move_held: boolean;
  yaw_deg: number;
  pitch_deg: number;
  roll_deg: number;
}

export class InputTracker {
  yaw = 0;
  pitch = 0;
  private held = false;
  private leftKey = false;
  private rightKey = false;

  constructor(initialYaw = 0) {
    this.yaw = initialYaw;
  }

  keyDown(code: string): void {
    if (code === "KeyW" || code === "ArrowUp") this.held = true;
    if (code === "ArrowLeft") this.leftKey = true;
    if (code === "ArrowRight") this.rightKey = true;
  }

  keyUp(code: string): void {
    if (code === "KeyW" || code === "ArrowUp") this.held = false;
    if (code === "ArrowLeft") this.leftKey = false;
    if (code === "ArrowRight") this.rightKey = false;
  }

  pointerDown(): void {
    this.held = true;
  }

  pointerUp(): void {
    this.held = false;
  }

  mouseMove(dxPx: number, dyPx: number): void {
    this.yaw += dxPx * MOUSE_SENS_DEG_PER_PX;
    this.pitch -= dyPx * MOUSE_SENS_DEG_PER_PX;
    this.pitch = Math.max(-89, Math.min(89, this.pitch));
    while (this.yaw >= 180) this.yaw -= 360;
    while (this.yaw < -180) this.yaw += 360;
  }

  tick(dtS: number): void {
    if (this.leftKey) this.yaw -= KEY_TURN_DEG_PER_S * dtS;
    if (this.rightKey) this.yaw += KEY_TURN_DEG_PER_S * dtS;
  }

  frame(): InputFrame {
    return {
      move_held: this.held,
      yaw_deg: this.yaw,
      pitch_deg: this.pitch,
      roll_deg: 0,
    };
  }
}
