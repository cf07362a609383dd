// Wire protocol types and codecs. Messages are newline-delimited JSON;
// over a WebSocket each text frame carries exactly one message.

export interface HelloMsg {
  type: "hello";
  participant_id: string;
  eye_height_cm: number;
}

export interface InputMsg {
  type: "input";
  token: string;
  move_held: boolean;
  yaw_deg: number;
  pitch_deg: number;
  roll_deg: number;
}

export interface SpawnMsg {
  type: "spawn";
  token: string;
  pos: [number, number, number];
  yaw: number;
  fixture_hash: string;
  assignment: { id: number; message: string };
}

export interface StateMsg {
  type: "state";
  t_ms: number;
  pos: [number, number, number];
  yaw: number;
  assignment: number;
}

export interface TextMsg {
  type: "message" | "alarm" | "error";
  text: string;
}

export interface EndMsg {
  type: "end";
  exit_label?: string;
  reason?: string;
}

export type ServerMsg = SpawnMsg | StateMsg | TextMsg | EndMsg;
export type ClientMsg = HelloMsg | InputMsg;

export function encode(msg: ClientMsg): string {
  return JSON.stringify(msg);
}

function isNumTriple(v: unknown): v is [number, number, number] {
  return (
    Array.isArray(v) && v.length === 3 && v.every((x) => typeof x === "number")
  );
}

export function decodeServerMsg(raw: string): ServerMsg {
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new Error(`malformed JSON from server: ${raw.slice(0, 80)}`);
  }
  switch (obj.type) {
    case "spawn": {
      if (!isNumTriple(obj.pos) || typeof obj.fixture_hash !== "string") {
        throw new Error("bad spawn payload");
      }
      const a = obj.assignment as { id?: unknown; message?: unknown } | undefined;
      if (!a || typeof a.id !== "number" || typeof a.message !== "string") {
        throw new Error("spawn missing assignment");
      }
      return obj as unknown as SpawnMsg;
    }
    case "state":
      if (typeof obj.t_ms !== "number" || !isNumTriple(obj.pos)) {
        throw new Error("bad state payload");
      }
      return obj as unknown as StateMsg;
    case "message":
    case "alarm":
    case "error":
      if (typeof obj.text !== "string") throw new Error(`bad ${obj.type} payload`);
      return obj as unknown as TextMsg;
    case "end":
      return obj as unknown as EndMsg;
    default:
      throw new Error(`unknown server message type ${String(obj.type)}`);
  }
}

// Fixture hash: sha256 over the canonical document (sorted keys, no
// whitespace). Number tokens are re-emitted verbatim from the source text
// so the digest matches the server's, which serializes the same way the
// fixture file was written.
export function canonicalJson(text: string): string {
  let i = 0;

  function ws() {
    while (i < text.length && " \t\n\r".includes(text[i])) i++;
  }

  function value(): string {
    ws();
    const c = text[i];
    if (c === "{") return obj();
    if (c === "[") return arr();
    if (c === '"') return str();
    if (c === "t" || c === "f" || c === "n") return word();
    return num();
  }

  function obj(): string {
    i++; // {
    const entries: Array<[string, string]> = [];
    ws();
    if (text[i] === "}") {
      i++;
      return "{}";
    }
    for (;;) {
      ws();
      const key = str();
      ws();
      if (text[i] !== ":") throw new Error(`expected ':' at ${i}`);
      i++;
      entries.push([key, value()]);
      ws();
      if (text[i] === ",") {
        i++;
        continue;
      }
      if (text[i] === "}") {
        i++;
        break;
      }
      throw new Error(`expected ',' or '}' at ${i}`);
    }
    entries.sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0));
    return "{" + entries.map(([k, v]) => `${k}:${v}`).join(",") + "}";
  }

  function arr(): string {
    i++; // [
    const items: string[] = [];
    ws();
    if (text[i] === "]") {
      i++;
      return "[]";
    }
    for (;;) {
      items.push(value());
      ws();
      if (text[i] === ",") {
        i++;
        continue;
      }
      if (text[i] === "]") {
        i++;
        break;
      }
      throw new Error(`expected ',' or ']' at ${i}`);
    }
    return "[" + items.join(",") + "]";
  }

  function str(): string {
    const start = i;
    i++; // opening quote
    while (i < text.length) {
      if (text[i] === "\\") i += 2;
      else if (text[i] === '"') {
        i++;
        return text.slice(start, i);
      } else i++;
    }
    throw new Error("unterminated string");
  }

  function word(): string {
    for (const w of ["true", "false", "null"]) {
      if (text.startsWith(w, i)) {
        i += w.length;
        return w;
      }
    }
    throw new Error(`bad literal at ${i}`);
  }

  function num(): string {
    const start = i;
    while (i < text.length && "+-0123456789.eE".includes(text[i])) i++;
    if (i === start) throw new Error(`expected value at ${i}`);
    return text.slice(start, i);
  }

  const out = value();
  ws();
  if (i !== text.length) throw new Error(`trailing data at ${i}`);
  return out;
}

export async function fixtureHash(text: string): Promise<string> {
  const canonical = canonicalJson(text);
  const bytes = new TextEncoder().encode(canonical);
  const digest = await crypto.subtle.digest("SHA-256", bytes);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}
