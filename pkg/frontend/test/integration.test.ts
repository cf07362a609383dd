// Live-server smoke test: spawns the python session server and walks the
// hello/spawn/input/state handshake over its TCP transport (same NDJSON
// protocol the WebSocket carries). Requires the wayfind package to be
// installed (pip install -e ..).

import { spawn, ChildProcess } from "node:child_process";
import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync } from "node:fs";
import { createConnection } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { canonicalJson, decodeServerMsg, ServerMsg } from "../src/protocol.js";

const FIXTURE_PATH = new URL("../../fixtures/ceg_fixture.json", import.meta.url);
const PORT = 18000 + Math.floor(Math.random() * 2000);

let server: ChildProcess | null = null;
let outDir = "";

beforeAll(async () => {
  outDir = mkdtempSync(join(tmpdir(), "wayfind-it-"));
  server = spawn(
    "python3",
    ["-m", "wayfind.cli", "serve", "--tcp", "--port", String(PORT),
     "--out", outDir, "--idle-timeout", "0"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await new Promise<void>((resolve, reject) => {
    const t = setTimeout(() => reject(new Error("server did not start")), 20000);
    server!.stdout!.on("data", (chunk: Buffer) => {
      if (chunk.toString().includes("serving")) {
        clearTimeout(t);
        resolve();
      }
    });
    server!.stderr!.on("data", (chunk: Buffer) => {
      process.stderr.write(chunk);
    });
    server!.on("exit", () => reject(new Error("server exited early")));
  });
}, 30000);

afterAll(() => {
  server?.kill();
});

function connectAndCollect(
  onConnect: (send: (obj: unknown) => void) => void,
  onMsg: (msg: ServerMsg, send: (obj: unknown) => void, close: () => void) => void,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const sock = createConnection({ host: "127.0.0.1", port: PORT });
    const timer = setTimeout(() => {
      sock.destroy();
      reject(new Error("integration timeout"));
    }, 20000);
    let buffer = "";
    const send = (obj: unknown) => sock.write(JSON.stringify(obj) + "\n");
    const close = () => {
      clearTimeout(timer);
      sock.end();
      resolve();
    };
    sock.on("connect", () => onConnect(send));
    sock.on("data", (chunk) => {
      buffer += chunk.toString();
      let idx;
      while ((idx = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 1);
        if (line.trim()) onMsg(decodeServerMsg(line), send, close);
      }
    });
    sock.on("error", (e) => {
      clearTimeout(timer);
      reject(e);
    });
  });
}

describe("live server handshake", () => {
  it("spawns at Room 4.02 with the fixture hash the client computes", async () => {
    const fixtureText = readFileSync(FIXTURE_PATH, "utf-8");
    const localHash = createHash("sha256")
      .update(canonicalJson(fixtureText), "utf-8")
      .digest("hex");

    let token = "";
    let states = 0;
    let sawSpawn = false;

    await connectAndCollect(
      (send) =>
        send({ type: "hello", participant_id: "ts_client", eye_height_cm: 170 }),
      (msg, send, close) => {
        if (msg.type === "spawn") {
          sawSpawn = true;
          token = msg.token;
          expect(msg.fixture_hash).toBe(localHash);
          expect(msg.pos[2]).toBeCloseTo(1200 + 170, 6);
          expect(msg.assignment.id).toBe(1);
          expect(msg.assignment.message.length).toBeGreaterThan(0);
          send({
            type: "input", token, move_held: true,
            yaw_deg: 0, pitch_deg: 0, roll_deg: 0,
          });
        } else if (msg.type === "state") {
          states += 1;
          expect(msg.t_ms % 100).toBe(0);
          if (states >= 10) close();
          else
            send({
              type: "input", token, move_held: true,
              yaw_deg: 0, pitch_deg: 0, roll_deg: 0,
            });
        }
      },
    );

    expect(sawSpawn).toBe(true);
    expect(states).toBeGreaterThanOrEqual(10);
  }, 30000);

  it("rejects a session that does not start with hello", async () => {
    let sawError = false;
    await connectAndCollect(
      (send) => send({ type: "input", move_held: true }),
      (msg, _send, close) => {
        if (msg.type === "error") {
          sawError = true;
          expect(msg.text).toMatch(/hello/);
          close();
        }
      },
    ).catch(() => {});
    expect(sawError).toBe(true);
  }, 30000);
});
