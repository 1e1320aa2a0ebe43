"""Road network model: lanes, spawn points, waypoints, and geometric queries.

Maps are human-editable YAML documents (JSON parses too) with top-level keys
``lanes``, ``spawn_points``, ``waypoints`` and ``omega``.  Spawn points and
waypoints may be omitted, in which case they are generated every 5 m along
each lane centerline.  Four built-in desk-scale maps are shipped: a straight
two-lane road, a four-way grid, a ring road and a rural single-lane road.

All coordinates are meters, headings are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Union

import numpy as np
import yaml

MARKINGS = ("solid", "dashed")
POINT_SPACING = 5.0         # auto-generated spawn/waypoint spacing along centerlines
ROUTE_RANGE = 200.0         # farthest destination searched along the initial heading
CONNECT_TOL = 0.5           # lane end-to-start gap tolerance for the lane graph
CONNECT_MAX_TURN = math.radians(60.0)
MIN_LANE_WIDTH = 2.0


class MapParseError(ValueError):
    """Document does not conform to the map schema."""


class MapValidationError(ValueError):
    """Document parsed but violates a network invariant."""


def wrap_angle(a):
    """Wrap angle(s) into (-pi, pi]; values already in range pass through exactly."""
    a = np.asarray(a, dtype=float)
    two_pi = 2.0 * math.pi
    out = a - two_pi * np.ceil((a - math.pi) / two_pi)
    return float(out) if out.ndim == 0 else out


@dataclass(eq=False)
class Lane:
    """Directed lane: a polyline centerline plus width and boundary markings."""

    centerline: np.ndarray          # (P, 2) float64
    width: float
    left_marking: str = "dashed"
    right_marking: str = "dashed"

    # derived geometry, filled in __post_init__
    seg_len: np.ndarray = field(default=None, repr=False)
    cum_len: np.ndarray = field(default=None, repr=False)
    tangents: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.centerline = np.asarray(self.centerline, dtype=float)
        d = np.diff(self.centerline, axis=0)
        self.seg_len = np.hypot(d[:, 0], d[:, 1])
        self.cum_len = np.concatenate(([0.0], np.cumsum(self.seg_len)))
        with np.errstate(invalid="ignore", divide="ignore"):
            self.tangents = d / self.seg_len[:, None]

    @property
    def length(self) -> float:
        return float(self.cum_len[-1])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length ``s`` (clamped to [0, length])."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum_len, s, side="right") - 1)
        i = min(i, len(self.seg_len) - 1)
        return self.centerline[i] + self.tangents[i] * (s - self.cum_len[i])

    def heading_at(self, s: float) -> float:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum_len, s, side="right") - 1)
        i = min(i, len(self.seg_len) - 1)
        t = self.tangents[i]
        return math.atan2(t[1], t[0])

    def project(self, point) -> tuple[float, float]:
        """Return (distance, arc length) of the closest centerline point."""
        d2, s = _project_to_polyline(np.asarray(point, float), self.centerline,
                                     self.seg_len, self.cum_len)
        return math.sqrt(d2), s

    def offset_polyline(self, side: str) -> np.ndarray:
        """Boundary polyline offset by width/2 to the 'left' or 'right'."""
        sign = 1.0 if side == "left" else -1.0
        normals = np.stack([-self.tangents[:, 1], self.tangents[:, 0]], axis=1)
        vnorm = np.empty_like(self.centerline)
        vnorm[0] = normals[0]
        vnorm[-1] = normals[-1]
        if len(normals) > 1:
            mid = normals[:-1] + normals[1:]
            n = np.hypot(mid[:, 0], mid[:, 1])
            n[n < 1e-12] = 1.0
            vnorm[1:-1] = mid / n[:, None]
        return self.centerline + sign * 0.5 * self.width * vnorm

    def __eq__(self, other):
        if not isinstance(other, Lane):
            return NotImplemented
        return (np.array_equal(self.centerline, other.centerline)
                and self.width == other.width
                and self.left_marking == other.left_marking
                and self.right_marking == other.right_marking)


@dataclass(frozen=True)
class Omega:
    """Box of admissible ego-relative states (|ds|<=d_s, |dd|<=d_d, |dpsi|<=psi_max)."""

    d_s: float
    d_d: float
    psi_max: float = math.pi

    def __post_init__(self):
        if not (self.d_s > 0 and self.d_d > 0):
            raise MapValidationError("omega: d_s and d_d must be positive")

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.d_s, self.d_d, self.psi_max])


@dataclass(eq=False)
class RoadNetwork:
    """Immutable road network; safe to share across concurrent readers."""

    lanes: list[Lane]
    spawn_points: np.ndarray        # (S, 2)
    spawn_headings: np.ndarray      # (S,)
    waypoints: np.ndarray           # (W, 2)
    omega: Omega

    bounds_min: np.ndarray = field(default=None, repr=False)
    bounds_max: np.ndarray = field(default=None, repr=False)
    successors: list[list[int]] = field(default=None, repr=False)
    _solid_segments: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        lo = np.full(2, np.inf)
        hi = np.full(2, -np.inf)
        for lane in self.lanes:
            lo = np.minimum(lo, self.centerline_min(lane) - lane.width / 2.0)
            hi = np.maximum(hi, self.centerline_max(lane) + lane.width / 2.0)
        self.bounds_min = lo
        self.bounds_max = hi
        self.successors = _build_lane_graph(self.lanes)

    @staticmethod
    def centerline_min(lane: Lane) -> np.ndarray:
        return lane.centerline.min(axis=0)

    @staticmethod
    def centerline_max(lane: Lane) -> np.ndarray:
        return lane.centerline.max(axis=0)

    @property
    def extent(self) -> np.ndarray:
        return self.bounds_max - self.bounds_min

    def contains(self, point, margin: float = 1e-9) -> bool:
        p = np.asarray(point, float)
        return bool(np.all(p >= self.bounds_min - margin)
                    and np.all(p <= self.bounds_max + margin))

    def nearest_lane(self, point, heading: float | None = None) -> int:
        """Index of the lane with the closest centerline.

        A heading breaks near-ties (within 0.5 m) in favor of the
        best-aligned lane direction, which distinguishes the two directed
        lanes of a road.
        """
        best = []
        for i, lane in enumerate(self.lanes):
            dist, s = lane.project(point)
            best.append((dist, i, s))
        best.sort(key=lambda t: (t[0], t[1]))
        if heading is None:
            return best[0][1]
        d0 = best[0][0]
        tied = [(i, s) for dist, i, s in best if dist <= d0 + 0.5]
        align = [(-math.cos(heading - self.lanes[i].heading_at(s)), i) for i, s in tied]
        align.sort()
        return align[0][1]

    def snap_to_lane(self, point) -> np.ndarray:
        """Closest point on any lane centerline."""
        best_d, best_p = np.inf, None
        p = np.asarray(point, float)
        for lane in self.lanes:
            dist, s = lane.project(p)
            if dist < best_d:
                best_d, best_p = dist, lane.point_at(s)
        return best_p

    def on_road(self, point) -> bool:
        p = np.asarray(point, float)
        return any(lane.project(p)[0] <= lane.width / 2.0 + 1e-9 for lane in self.lanes)

    def solid_segments(self) -> np.ndarray:
        """All solid boundary segments, shape (Q, 2, 2); cached."""
        if self._solid_segments is None:
            segs = []
            for lane in self.lanes:
                for side, marking in (("left", lane.left_marking),
                                      ("right", lane.right_marking)):
                    if marking != "solid":
                        continue
                    poly = lane.offset_polyline(side)
                    segs.append(np.stack([poly[:-1], poly[1:]], axis=1))
            self._solid_segments = (np.concatenate(segs, axis=0) if segs
                                    else np.empty((0, 2, 2)))
        return self._solid_segments

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return (self.lanes == other.lanes
                and np.array_equal(self.spawn_points, other.spawn_points)
                and np.array_equal(self.spawn_headings, other.spawn_headings)
                and np.array_equal(self.waypoints, other.waypoints)
                and self.omega == other.omega)


# ---------------------------------------------------------------------------
# geometry helpers

def _project_to_polyline(point, poly, seg_len, cum_len):
    """Squared distance and arc length of the nearest point on a polyline."""
    a = poly[:-1]
    d = poly[1:] - a
    denom = seg_len**2
    denom_safe = np.where(denom < 1e-18, 1.0, denom)
    t = np.clip(((point - a) * d).sum(axis=1) / denom_safe, 0.0, 1.0)
    proj = a + t[:, None] * d
    dist2 = ((point - proj) ** 2).sum(axis=1)
    i = int(np.argmin(dist2))
    return float(dist2[i]), float(cum_len[i] + t[i] * seg_len[i])


def lane_overlap(position, ego_lane: Lane) -> float:
    """Degree to which a point overlaps the ego lane, in [0, 1].

    1 on the centerline, 0 at a lateral offset of one lane width or more,
    and a linear ramp in between.
    """
    dist, _ = ego_lane.project(position)
    return float(np.clip(1.0 - dist / ego_lane.width, 0.0, 1.0))


def match_to_set(position, points, threshold: float):
    """Index of the nearest point if within ``threshold``, else None.

    Ties break toward the lowest index, matching an exhaustive scan.
    """
    pts = np.asarray(points, float)
    if pts.size == 0:
        return None
    d2 = ((pts - np.asarray(position, float)) ** 2).sum(axis=1)
    i = int(np.argmin(d2))
    if d2[i] <= threshold * threshold:
        return i
    return None


def match_many(positions, points, threshold: float) -> np.ndarray:
    """Vectorized ``match_to_set``: one index per row, -1 where unmatched."""
    pos = np.asarray(positions, float).reshape(-1, 2)
    pts = np.asarray(points, float)
    if pts.size == 0 or pos.size == 0:
        return np.full(len(pos), -1, dtype=int)
    out = np.empty(len(pos), dtype=int)
    # chunk to keep the (chunk, M) distance matrix small
    step = max(1, int(4_000_000 / max(len(pts), 1)))
    for k in range(0, len(pos), step):
        block = pos[k:k + step]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        idx = d2.argmin(axis=1)
        hit = d2[np.arange(len(block)), idx] <= threshold * threshold
        out[k:k + step] = np.where(hit, idx, -1)
    return out


# ---------------------------------------------------------------------------
# routing

def route_path(start, heading: float, network: RoadNetwork,
               max_arc: float = 1000.0) -> np.ndarray:
    """Centerline polyline followed from ``start`` along lane directions.

    The walk begins on the lane best aligned with ``heading`` and continues
    through lane successors (straightest first) until ``max_arc`` meters or
    a lane repeats.
    """
    idx = network.nearest_lane(start, heading)
    lane = network.lanes[idx]
    _, s0 = lane.project(start)
    pts = [lane.point_at(s0)]
    visited = set()
    arc = 0.0
    s = s0
    while arc < max_arc:
        tail = lane.centerline[lane.cum_len > s + 1e-9]
        for p in tail:
            step = np.hypot(*(p - pts[-1]))
            if step < 1e-12:
                continue
            pts.append(p)
            arc += step
            if arc >= max_arc:
                break
        if arc >= max_arc:
            break
        visited.add(idx)
        nxt = [j for j in network.successors[idx] if j not in visited]
        if not nxt:
            break
        end_h = lane.heading_at(lane.length)
        nxt.sort(key=lambda j: (abs(wrap_angle(network.lanes[j].heading_at(0.0) - end_h)), j))
        idx = nxt[0]
        lane = network.lanes[idx]
        s = 0.0
        gap = np.hypot(*(lane.centerline[0] - pts[-1]))
        if gap > 1e-9:
            pts.append(lane.centerline[0])
            arc += gap
    return np.asarray(pts)


def route_destination(start, heading: float, network: RoadNetwork,
                      max_range: float = ROUTE_RANGE) -> np.ndarray:
    """Waypoint reachable along the heading's lane direction with the greatest
    arc distance <= ``max_range``; the farthest reachable one if none is that
    close.  Raises if no waypoint is reachable at all ("isolated start")."""
    total = sum(l.length for l in network.lanes) + max_range
    path = route_path(start, heading, network, max_arc=total)
    if len(path) < 2:
        raise MapValidationError("isolated start: no route from start position")
    seg = np.diff(path, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    lateral_tol = 1.5
    best_in, arc_in = None, -1.0
    best_any, arc_any = None, -1.0
    for wp in network.waypoints:
        d2, s = _project_to_polyline(wp, path, seg_len, cum)
        if d2 > lateral_tol**2 or s <= 1e-9:
            continue
        if s <= max_range and s > arc_in:
            best_in, arc_in = wp, s
        if s > arc_any:
            best_any, arc_any = wp, s
    chosen = best_in if best_in is not None else best_any
    if chosen is None:
        raise MapValidationError("isolated start: no reachable waypoint")
    return np.asarray(chosen, float)


def _build_lane_graph(lanes: list[Lane]) -> list[list[int]]:
    succ: list[list[int]] = [[] for _ in lanes]
    for i, lane in enumerate(lanes):
        end = lane.centerline[-1]
        end_h = lane.heading_at(lane.length)
        for j, other in enumerate(lanes):
            if j == i and np.allclose(lane.centerline[0], end):
                continue  # closed loop onto itself handled by the walk cap
            gap = np.hypot(*(other.centerline[0] - end))
            if gap > CONNECT_TOL:
                continue
            turn = abs(wrap_angle(other.heading_at(0.0) - end_h))
            if turn <= CONNECT_MAX_TURN:
                succ[i].append(j)
    return succ


# ---------------------------------------------------------------------------
# parsing / serialization

MapSource = Union[str, Path, IO[str]]


def load_map(source: MapSource) -> RoadNetwork:
    """Parse and validate a map document.

    ``source`` may be a YAML/JSON string, a ``pathlib.Path``, or an open
    text stream.
    """
    if isinstance(source, Path):
        text = source.read_text()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise MapParseError(f"document: not valid YAML ({e})") from None
    if not isinstance(doc, dict):
        raise MapParseError("document: expected a mapping at top level")
    known = {"lanes", "spawn_points", "waypoints", "omega"}
    for key in doc:
        if key not in known:
            raise MapParseError(f"{key}: unknown top-level key")

    lanes = [_parse_lane(item, i) for i, item in enumerate(_require_list(doc, "lanes"))]
    if not lanes:
        raise MapParseError("lanes: must contain at least one lane")

    if "spawn_points" in doc and doc["spawn_points"] is not None:
        sp, sh = _parse_spawn_points(doc["spawn_points"])
    else:
        sp, sh = _generate_points(lanes, with_headings=True)

    if "waypoints" in doc and doc["waypoints"] is not None:
        wp = _parse_waypoints(doc["waypoints"])
    else:
        wp, _ = _generate_points(lanes, with_headings=False)

    if "omega" in doc and doc["omega"] is not None:
        om = _parse_omega(doc["omega"])
    else:
        lo = np.min([l.centerline.min(axis=0) - l.width / 2 for l in lanes], axis=0)
        hi = np.max([l.centerline.max(axis=0) + l.width / 2 for l in lanes], axis=0)
        om = Omega(d_s=float(hi[0] - lo[0]), d_d=float(hi[1] - lo[1]))

    net = RoadNetwork(lanes=lanes, spawn_points=sp, spawn_headings=sh,
                      waypoints=wp, omega=om)
    _validate(net)
    return net


def serialize_map(network: RoadNetwork) -> str:
    """Emit a map document that round-trips through ``load_map`` exactly."""
    doc = {
        "lanes": [
            {
                "centerline": [[float(x), float(y)] for x, y in lane.centerline],
                "width": float(lane.width),
                "left_marking": lane.left_marking,
                "right_marking": lane.right_marking,
            }
            for lane in network.lanes
        ],
        "spawn_points": [
            {"pos": [float(x), float(y)], "heading": float(h)}
            for (x, y), h in zip(network.spawn_points, network.spawn_headings)
        ],
        "waypoints": [[float(x), float(y)] for x, y in network.waypoints],
        "omega": {"d_s": float(network.omega.d_s), "d_d": float(network.omega.d_d)},
    }
    return yaml.safe_dump(doc, sort_keys=False)


def _require_list(doc: dict, key: str) -> list:
    if key not in doc:
        raise MapParseError(f"{key}: missing required key")
    v = doc[key]
    if not isinstance(v, list):
        raise MapParseError(f"{key}: expected a list")
    return v


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MapParseError(f"{where}: expected a number")
    if not math.isfinite(value):
        raise MapParseError(f"{where}: must be finite")
    return float(value)


def _xy(value, where: str) -> list[float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise MapParseError(f"{where}: expected [x, y]")
    return [_num(value[0], f"{where}[0]"), _num(value[1], f"{where}[1]")]


def _parse_lane(item, i: int) -> Lane:
    where = f"lanes[{i}]"
    if not isinstance(item, dict):
        raise MapParseError(f"{where}: expected a mapping")
    if "centerline" not in item:
        raise MapParseError(f"{where}.centerline: missing required key")
    raw = item["centerline"]
    if not isinstance(raw, list) or len(raw) < 2:
        raise MapParseError(f"{where}.centerline: expected >= 2 points")
    pts = np.array([_xy(p, f"{where}.centerline[{k}]") for k, p in enumerate(raw)])
    if "width" not in item:
        raise MapParseError(f"{where}.width: missing required key")
    width = _num(item["width"], f"{where}.width")
    lm = item.get("left_marking", "dashed")
    rm = item.get("right_marking", "dashed")
    for side, m in (("left_marking", lm), ("right_marking", rm)):
        if m not in MARKINGS:
            raise MapParseError(f"{where}.{side}: expected one of {MARKINGS}")
    if width < MIN_LANE_WIDTH:
        raise MapValidationError(f"{where}.width: must be >= {MIN_LANE_WIDTH} m, got {width}")
    seg = np.diff(pts, axis=0)
    if np.any(np.hypot(seg[:, 0], seg[:, 1]) < 1e-12):
        raise MapValidationError(f"{where}.centerline: contains a zero-length segment")
    return Lane(centerline=pts, width=width, left_marking=lm, right_marking=rm)


def _parse_spawn_points(raw) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(raw, list):
        raise MapParseError("spawn_points: expected a list")
    pos, head = [], []
    for i, item in enumerate(raw):
        where = f"spawn_points[{i}]"
        if not isinstance(item, dict) or "pos" not in item or "heading" not in item:
            raise MapParseError(f"{where}: expected {{pos: [x, y], heading: rad}}")
        pos.append(_xy(item["pos"], f"{where}.pos"))
        head.append(wrap_angle(_num(item["heading"], f"{where}.heading")))
    return np.array(pos, float).reshape(-1, 2), np.array(head, float)


def _parse_waypoints(raw) -> np.ndarray:
    if not isinstance(raw, list):
        raise MapParseError("waypoints: expected a list")
    return np.array([_xy(p, f"waypoints[{i}]") for i, p in enumerate(raw)],
                    float).reshape(-1, 2)


def _parse_omega(raw) -> Omega:
    if not isinstance(raw, dict):
        raise MapParseError("omega: expected {d_s, d_d}")
    for key in raw:
        if key not in ("d_s", "d_d"):
            raise MapParseError(f"omega.{key}: unknown key")
    if "d_s" not in raw or "d_d" not in raw:
        raise MapParseError("omega: requires both d_s and d_d")
    return Omega(d_s=_num(raw["d_s"], "omega.d_s"), d_d=_num(raw["d_d"], "omega.d_d"))


def _generate_points(lanes: list[Lane], with_headings: bool):
    pos, head = [], []
    for lane in lanes:
        s = 0.0
        while s <= lane.length + 1e-9:
            pos.append(lane.point_at(s))
            if with_headings:
                head.append(lane.heading_at(s))
            s += POINT_SPACING
    return (np.array(pos, float).reshape(-1, 2),
            np.array(head, float) if with_headings else None)


def _validate(net: RoadNetwork) -> None:
    for name, pts in (("spawn_points", net.spawn_points), ("waypoints", net.waypoints)):
        for i, p in enumerate(pts):
            if not net.contains(p, margin=1e-6):
                raise MapValidationError(
                    f"{name}[{i}]: point {p.tolist()} outside the map bounding rectangle")


# ---------------------------------------------------------------------------
# built-in maps

def _straight_doc() -> dict:
    # 300 m two-lane road, right-hand traffic; solid center and edge lines
    return {
        "lanes": [
            {"centerline": [[0.0, -1.75], [300.0, -1.75]], "width": 3.5,
             "left_marking": "solid", "right_marking": "solid"},
            {"centerline": [[300.0, 1.75], [0.0, 1.75]], "width": 3.5,
             "left_marking": "solid", "right_marking": "solid"},
        ],
        "omega": {"d_s": 300.0, "d_d": 10.5},
    }


def _grid4_doc() -> dict:
    # 200 x 200 m grid, roads at x,y in {50, 150}; two directed lanes per road.
    # Through segments get solid edge/center lines; the short connector pieces
    # inside each intersection box are dashed so crossing traffic is legal.
    half_road = 3.5          # two 3.5 m lanes -> road half-width
    off = 1.75
    cuts = [50.0, 150.0]
    lanes = []

    def add_run(fixed, axis, direction):
        # axis 0: horizontal road at y=fixed; axis 1: vertical road at x=fixed
        lo_all, hi_all = 0.0, 200.0
        edges = [lo_all] + [c - half_road for c in cuts] + [hi_all]
        boxes = [(c - half_road, c + half_road) for c in cuts]
        spans = []
        prev = lo_all
        for b0, b1 in boxes:
            spans.append((prev, b0, "through"))
            spans.append((b0, b1, "connector"))
            prev = b1
        spans.append((prev, hi_all, "through"))
        if direction < 0:
            spans = [(b, a, kind) for a, b, kind in reversed(spans)]
        else:
            spans = [(a, b, kind) for a, b, kind in spans]
        lateral = fixed + (-off if direction > 0 else off) * (1 if axis == 0 else -1)
        for a, b, kind in spans:
            if axis == 0:
                cl = [[a, lateral], [b, lateral]]
            else:
                cl = [[lateral, a], [lateral, b]]
            marking = "solid" if kind == "through" else "dashed"
            lanes.append({"centerline": cl, "width": 3.5,
                          "left_marking": marking, "right_marking": marking})

    for y in cuts:
        add_run(y, axis=0, direction=+1)
        add_run(y, axis=0, direction=-1)
    for x in cuts:
        add_run(x, axis=1, direction=+1)
        add_run(x, axis=1, direction=-1)
    return {"lanes": lanes, "omega": {"d_s": 200.0, "d_d": 200.0}}


def _ring_doc() -> dict:
    # Two concentric circular lanes (inner CCW, outer CW), four arcs each.
    lanes = []
    n_arc = 19
    for radius, ccw in ((58.25, True), (61.75, False)):
        for q in range(4):
            a0 = q * math.pi / 2.0
            a1 = (q + 1) * math.pi / 2.0
            ang = np.linspace(a0, a1, n_arc)
            if not ccw:
                ang = ang[::-1]
            pts = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
            lanes.append({
                "centerline": [[float(x), float(y)] for x, y in pts],
                "width": 3.5,
                # inner lane: solid toward the center; dashed between the lanes
                "left_marking": "dashed" if ccw else "solid",
                "right_marking": "solid" if ccw else "dashed",
            })
    return {"lanes": lanes, "omega": {"d_s": 127.0, "d_d": 127.0}}


def _rural_doc() -> dict:
    # Single-lane winding road: gentle sine along x, one-way, solid edges.
    xs = np.linspace(0.0, 400.0, 81)
    ys = 20.0 * np.sin(xs * (2.0 * math.pi / 400.0))
    cl = [[float(x), float(y)] for x, y in zip(xs, ys)]
    return {
        "lanes": [{"centerline": cl, "width": 4.0,
                   "left_marking": "solid", "right_marking": "solid"}],
        "omega": {"d_s": 400.0, "d_d": 48.0},
    }


_BUILTIN = {
    "straight": _straight_doc,
    "grid4": _grid4_doc,
    "ring": _ring_doc,
    "rural": _rural_doc,
}


def builtin_map_document(kind: str) -> str:
    """YAML document of one of the shipped maps."""
    if kind not in _BUILTIN:
        raise KeyError(f"unknown map kind {kind!r}; choose from {sorted(_BUILTIN)}")
    return yaml.safe_dump(_BUILTIN[kind](), sort_keys=False)


def builtin_map(kind: str) -> RoadNetwork:
    return load_map(builtin_map_document(kind))
