#!/usr/bin/env python3
"""Generate the ceg_fixture building document.

Deterministic reconstruction of the four-level faculty building used by
the experiment engine: two parallel main corridors per floor, eight cross
corridors (two wide), five staircase columns A-E with straight flights,
five exits on floor 1 directly under the staircases, and an extra hall
between the corridors on floor 2.

Writes identical copies to fixtures/ceg_fixture.json and
src/wayfind/fixtures/ceg_fixture.json.
"""

from __future__ import annotations

import json
from pathlib import Path

L = 15000.0  # building length along x
STORY = 400.0  # floor-to-floor height
CORRIDOR_HALF = 120.0  # main corridors are 240 cm wide
SOUTH_Y = 0.0  # south corridor centerline
NORTH_Y = 1000.0  # north corridor centerline
CROSS_NARROW = 150.0
CROSS_WIDE = 400.0

STAIR_X = {"A": 750.0, "B": 4125.0, "C": 7500.0, "D": 10875.0, "E": 14250.0}
WIDE_X = [4500.0, 10500.0]
CROSS_X = [750.0, 2400.0, 4125.0, 4500.0, 7500.0, 10500.0, 10875.0, 14250.0]

LANDING_W = 150.0  # along x
BAY_DEPTH = 280.0  # landing depth away from the corridor
STRIP_HALF_DEPTH = 130.0  # sloped run occupies the far half of the bay

# hall between the corridors on floor 2; wall bands above and below keep
# it a dead-end alcove reachable only through the cross corridor at 7500
HALL = (6075.0, 190.0, 7425.0, 810.0)  # x0, y0, x1, y1

DOOR_HALF = 45.0
SIGN_HALF = 25.0
ROOM_SIGN_OFFSET = 75.0

FLOOR_IDS = [1, 2, 3, 4]
ROOM_FLOORS = [2, 3, 4]


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def floor_z(fid: int) -> float:
    return (fid - 1) * STORY


def r2(v: float) -> float:
    return round(v, 2)


def rect_r(x0, y0, x1, y1):
    return [[r2(a), r2(b)] for a, b in rect(x0, y0, x1, y1)]


def south_bay(sx: float):
    """Plan rectangles of a stair bay south of the south corridor."""
    y_out = -CORRIDOR_HALF  # corridor edge
    y_far = y_out - BAY_DEPTH
    west = (sx - 450.0, y_far, sx - 300.0, y_out)
    east = (sx + 300.0, y_far, sx + 450.0, y_out)
    strip = (sx - 300.0, y_far, sx + 300.0, y_far + STRIP_HALF_DEPTH)
    return west, east, strip


def north_bay(sx: float):
    y_out = NORTH_Y + CORRIDOR_HALF
    y_far = y_out + BAY_DEPTH
    west = (sx - 450.0, y_out, sx - 300.0, y_far)
    east = (sx + 300.0, y_out, sx + 450.0, y_far)
    strip = (sx - 300.0, y_far - STRIP_HALF_DEPTH, sx + 300.0, y_far)
    return west, east, strip


# flights alternate corridor side so stacked bays never share a sloped run:
# 1-2 south, 2-3 north, 3-4 south; the west end is always the lower floor
FLIGHT_SIDE = {(1, 2): "south", (2, 3): "north", (3, 4): "south"}


def flight_geometry(sx: float, lower: int):
    side = FLIGHT_SIDE[(lower, lower + 1)]
    west, east, strip = south_bay(sx) if side == "south" else north_bay(sx)
    ycen = (strip[1] + strip[3]) / 2.0
    zl, zu = floor_z(lower), floor_z(lower + 1)
    # ramp endpoints sit on the strip/landing shared edges so path lengths
    # match what a walker actually traverses
    ramp = [
        [sx - 300.0, ycen, zl],
        [sx + 300.0, ycen, zu],
    ]
    return west, east, strip, ramp


def build():
    floors = {fid: {"id": fid, "z_cm": floor_z(fid), "walkable": [], "obstacles": [],
                    "rooms": [], "signs": []} for fid in FLOOR_IDS}

    # main corridors and cross corridors, identical on every floor
    for fid in FLOOR_IDS:
        w = floors[fid]["walkable"]
        w.append({"id": f"f{fid}-main-south", "kind": "main_corridor",
                  "points": rect_r(0, SOUTH_Y - CORRIDOR_HALF, L, SOUTH_Y + CORRIDOR_HALF)})
        w.append({"id": f"f{fid}-main-north", "kind": "main_corridor",
                  "points": rect_r(0, NORTH_Y - CORRIDOR_HALF, L, NORTH_Y + CORRIDOR_HALF)})
        for cx in CROSS_X:
            half = (CROSS_WIDE if cx in WIDE_X else CROSS_NARROW) / 2.0
            w.append({"id": f"f{fid}-cross-{int(cx)}", "kind": "cross_corridor",
                      "points": rect_r(cx - half, SOUTH_Y + CORRIDOR_HALF,
                                       cx + half, NORTH_Y - CORRIDOR_HALF)})

    # hall between the corridors, floor 2 only, with two concrete pillars
    floors[2]["walkable"].append({"id": "f2-hall", "kind": "hall",
                                  "points": rect_r(*HALL)})
    floors[2]["obstacles"].append({"id": "f2-hall-pillar-w", "kind": "pillar",
                                   "points": rect_r(6400, 450, 6480, 530)})
    floors[2]["obstacles"].append({"id": "f2-hall-pillar-e", "kind": "pillar",
                                   "points": rect_r(7000, 450, 7080, 530)})

    # staircases: one record per flight, landings become walkable polygons
    staircases = []
    for label, sx in STAIR_X.items():
        for lower in (1, 2, 3):
            west, east, strip, ramp = flight_geometry(sx, lower)
            upper = lower + 1
            floors[lower]["walkable"].append(
                {"id": f"f{lower}-stair{label}{lower}{upper}-w", "kind": "stair_landing",
                 "points": rect_r(*west)})
            floors[upper]["walkable"].append(
                {"id": f"f{upper}-stair{label}{lower}{upper}-e", "kind": "stair_landing",
                 "points": rect_r(*east)})
            staircases.append({
                "label": label,
                "lower_floor": lower,
                "upper_floor": upper,
                "footprints": {str(lower): rect_r(*west), str(upper): rect_r(*east)},
                "strip": rect_r(*strip),
                "ramp": [[r2(x), r2(y), r2(z)] for x, y, z in ramp],
            })

    # elevator shafts flank the stair bays (never walkable)
    for fid in FLOOR_IDS:
        for label, sx in STAIR_X.items():
            floors[fid]["obstacles"].append(
                {"id": f"f{fid}-elev-{label}", "kind": "elevator",
                 "points": rect_r(sx + 550, -400, sx + 750, -200)})

    # exits on floor 1, directly below the staircases
    exits = []
    for label, sx in STAIR_X.items():
        exits.append({"label": label, "floor": 1,
                      "position": [r2(sx), -CORRIDOR_HALF],
                      "is_main_entrance": label == "C"})

    # wall openings on the outer corridor boundaries, per floor and side
    def openings(fid: int, side: str) -> list[tuple[float, float]]:
        out = []
        for s in staircases:
            lo, up = s["lower_floor"], s["upper_floor"]
            bay_side = FLIGHT_SIDE[(lo, up)]
            if bay_side != side:
                continue
            if fid == lo:
                x0 = s["footprints"][str(lo)][0][0]
                out.append((x0, x0 + LANDING_W))
            elif fid == up:
                x0 = s["footprints"][str(up)][0][0]
                out.append((x0, x0 + LANDING_W))
        return out

    # signs: exit/evacuation signage near stair mouths (floors 2-4 on the
    # south wall, floor 1 above the exit doors), fire doors at the wide
    # intersections, a floor plan near the west end of each floor
    sign_x_by_wall: dict[tuple[int, str], list[float]] = {}

    def add_sign(fid, kind, x, y, z_off, facing, target=None, half_width=None):
        entry = {
            "kind": kind, "position": [r2(x), r2(y), r2(floor_z(fid) + z_off)],
            "facing": facing, "target": target}
        if half_width is not None:
            entry["half_width_cm"] = half_width
        floors[fid]["signs"].append(entry)
        wall = "south_outer" if y == -CORRIDOR_HALF else (
            "north_outer" if y == NORTH_Y + CORRIDOR_HALF else "inner")
        sign_x_by_wall.setdefault((fid, wall), []).append(x)

    for label, sx in STAIR_X.items():
        for fid in (2, 3, 4):
            mouths = openings(fid, "south")
            near = [m for m in mouths if abs((m[0] + m[1]) / 2 - sx) < 500]
            if not near:
                continue
            m0, m1 = near[0]
            if m0 > sx:  # east landing: signs west of the mouth
                add_sign(fid, "exit_sign", m0 - 60 - SIGN_HALF, -CORRIDOR_HALF, 180,
                         [0.0, 1.0, 0.0], target=label)
                add_sign(fid, "evacuation_sign", m1 + 60 + SIGN_HALF, -CORRIDOR_HALF, 180,
                         [0.0, 1.0, 0.0], target=label)
            else:  # west landing: signs east of the mouth
                add_sign(fid, "exit_sign", m1 + 60 + SIGN_HALF, -CORRIDOR_HALF, 180,
                         [0.0, 1.0, 0.0], target=label)
                add_sign(fid, "evacuation_sign", m0 - 60 - SIGN_HALF, -CORRIDOR_HALF, 180,
                         [0.0, 1.0, 0.0], target=label)
        add_sign(1, "exit_sign", sx, -CORRIDOR_HALF, 180, [0.0, 1.0, 0.0], target=label,
                 half_width=45.0)

    for fid in FLOOR_IDS:
        for wx in WIDE_X:
            half = CROSS_WIDE / 2.0
            add_sign(fid, "fire_door", wx - half - 40 - SIGN_HALF, SOUTH_Y + CORRIDOR_HALF,
                     170, [0.0, -1.0, 0.0])
            add_sign(fid, "fire_door", wx + half + 40 + SIGN_HALF, NORTH_Y - CORRIDOR_HALF,
                     170, [0.0, 1.0, 0.0])
        add_sign(fid, "floor_plan", 550, SOUTH_Y + CORRIDOR_HALF, 160, [0.0, -1.0, 0.0])

    # rooms f.NN on floors 2-4: door at x = NN/99 * L, even NN on the north
    # corridor, odd on the south; drop rooms whose door would land in a stair
    # mouth or collide with fixed signage
    for fid in ROOM_FLOORS:
        for nn in range(1, 100):
            x = nn / 99.0 * L
            even = nn % 2 == 0
            side = "north_outer" if even else "south_outer"
            y = NORTH_Y + CORRIDOR_HALF if even else -CORRIDOR_HALF
            blocked = False
            for m0, m1 in openings(fid, "north" if even else "south"):
                if x + DOOR_HALF + ROOM_SIGN_OFFSET + SIGN_HALF > m0 - 10 and x - DOOR_HALF < m1 + 10:
                    blocked = True
            for sx_sign in sign_x_by_wall.get((fid, side), []):
                # wall signage can be panel-sized (exit signs); keep margin
                if abs(x - sx_sign) < DOOR_HALF + 45 + 5:
                    blocked = True
                if abs(x + ROOM_SIGN_OFFSET - sx_sign) < SIGN_HALF + 45 + 5:
                    blocked = True
            if blocked:
                continue
            label = f"{fid}.{nn:02d}"
            floors[fid]["rooms"].append({
                "label": label, "door": [r2(x), y], "side": "even" if even else "uneven"})
            facing = [0.0, -1.0, 0.0] if even else [0.0, 1.0, 0.0]
            sign_x = x + ROOM_SIGN_OFFSET if x + ROOM_SIGN_OFFSET < L else x - ROOM_SIGN_OFFSET
            add_sign(fid, "room_number", sign_x, y, 160, facing, target=label)

    for must in ("4.02", "4.99", "2.01", "4.64"):
        fid = int(must.split(".")[0])
        labels = {r["label"] for r in floors[fid]["rooms"]}
        assert must in labels, f"protocol room {must} was filtered out"

    # zones: spawn at Room 4.02, triggers at the start of assignments 2-4,
    # the hall as the central-point zone
    door = {r["label"]: r["door"] for fid in ROOM_FLOORS for r in floors[fid]["rooms"]}
    zones = [
        {"id": "spawn", "floor": 4, "purpose": "spawn", "yaw_deg": 0.0,
         "polygon": rect_r(door["4.02"][0] - 150, NORTH_Y - CORRIDOR_HALF,
                           door["4.02"][0] + 150, NORTH_Y + CORRIDOR_HALF)},
        {"id": "trigger_a2", "floor": 4, "purpose": "trigger", "assignment": 2,
         "polygon": rect_r(L - 300, -CORRIDOR_HALF, L, CORRIDOR_HALF)},
        {"id": "trigger_a3", "floor": 2, "purpose": "trigger", "assignment": 3,
         "polygon": rect_r(0, -CORRIDOR_HALF, 400, CORRIDOR_HALF)},
        {"id": "trigger_a4", "floor": 4, "purpose": "trigger", "assignment": 4,
         "polygon": rect_r(door["4.64"][0] - 200, NORTH_Y - CORRIDOR_HALF,
                           door["4.64"][0] + 200, NORTH_Y + CORRIDOR_HALF)},
        {"id": "central_point", "floor": 2, "purpose": "central_point",
         "polygon": rect_r(*HALL)},
    ]

    return {
        "name": "ceg-faculty",
        "units": "cm",
        "floors": [floors[fid] for fid in FLOOR_IDS],
        "staircases": staircases,
        "exits": exits,
        "zones": zones,
    }


def main():
    doc = build()
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    root = Path(__file__).resolve().parent.parent
    for rel in ("fixtures/ceg_fixture.json", "src/wayfind/fixtures/ceg_fixture.json"):
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}")
    n_rooms = sum(len(f["rooms"]) for f in doc["floors"])
    print(f"floors={len(doc['floors'])} staircases={len(doc['staircases'])} "
          f"exits={len(doc['exits'])} rooms={n_rooms}")


if __name__ == "__main__":
    main()
