import { describe, expect, it } from "vitest";

import { castColumns, columnHeightPx, projectLabels } from "../src/raycaster.js";
import { Segment, Decal } from "../src/walls.js";

const box: Segment[] = [
  { x1: -500, y1: -200, x2: 500, y2: -200 },
  { x1: 500, y1: -200, x2: 500, y2: 200 },
  { x1: 500, y1: 200, x2: -500, y2: 200 },
  { x1: -500, y1: 200, x2: -500, y2: -200 },
];

describe("column raycaster", () => {
  it("center column hits the facing wall at its true distance", () => {
    const columns = castColumns(box, 0, 0, 0, 101);
    expect(columns[50].dist).toBeCloseTo(500, 3);
  });

  it("fisheye correction keeps a flat wall flat", () => {
    // looking straight at the east wall: corrected distances are equal
    const columns = castColumns(box, 0, 0, 0, 101);
    const mid = columns[50].dist;
    expect(columns[30].dist).toBeCloseTo(mid, 0);
    expect(columns[70].dist).toBeCloseTo(mid, 0);
  });

  it("nearer walls produce taller columns", () => {
    const near = columnHeightPx(200, 960, 540);
    const far = columnHeightPx(2000, 960, 540);
    expect(near).toBeGreaterThan(far);
  });

  it("labels appear in range, in frustum, and not through walls", () => {
    const decals: Decal[] = [
      { x: 400, y: 0, label: "4.99", kind: "room_door" }, // ahead
      { x: -400, y: 0, label: "behind", kind: "room_door" }, // behind
      { x: 2000, y: 0, label: "beyond-wall", kind: "room_door" }, // occluded
    ];
    const columns = castColumns(box, 0, 0, 0, 200);
    const hits = projectLabels(decals, columns, 0, 0, 0, 200);
    const labels = hits.map((h) => h.label);
    expect(labels).toContain("4.99");
    expect(labels).not.toContain("behind");
    expect(labels).not.toContain("beyond-wall");
  });
});
