"""Desk-scale online tester: kinematics, controllers, recorder, violations.

Episodes execute a seed for a fixed horizon.  Vehicles and bicycles follow a
kinematic bicycle model (semi-implicit Euler: speed and heading update first,
then position, so one step has nonzero control gradients); pedestrians take
bounded planar displacements.  Dynamic objects are driven by an online
controller, either gradient ascent on the hazard surrogate or a uniform
random baseline.  The ego is a stand-in policy: pure-pursuit steering along
its route, proportional speed control, and full braking on anything inside a
forward cone.

Safety violations are detected post hoc from the recorded trace: collision
(ego footprint overlaps an object footprint), lane departure (ego footprint
crosses a solid marking), and motionless (ego stationary too long with the
route unfinished and a clear corridor ahead).  Object-object contact is not
resolved; only ego involvement counts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from hazardseed.hazard import EpisodeTrace, HazardModel, grad_x_batch
from hazardseed.map_model import Lane, Omega, RoadNetwork, route_path, wrap_angle
from hazardseed.scenario import (
    Chromosome,
    chromosome_from_record,
    chromosome_to_record,
)

FOOTPRINTS = {"vehicle": (4.5, 2.0), "bicycle": (1.8, 0.6), "pedestrian": (0.5, 0.5)}
WHEELBASES = {"vehicle": 2.7, "bicycle": 1.1}
SPEED_MAX = 30.0
COLLISION = "collision"
LANE_DEPARTURE = "lane_departure"
MOTIONLESS = "motionless"
DEST_REACHED_TOL = 3.0      # route counts as complete within this distance


@dataclass
class SimConfig:
    dt: float = 0.1
    horizon: int = 300
    throttle_limit: float = 3.0      # |accel| bound, m/s^2
    steer_limit: float = 0.5         # |steer angle| bound, rad
    ped_speed: float = 1.5           # pedestrian speed bound, m/s
    ego_target_speed: float = 10.0
    ego_lookahead: float = 8.0
    brake_range: float = 12.0        # forward cone range, m
    brake_half_angle: float = math.radians(20.0)
    ascent_iterations: int = 3       # gradient-controller ascent steps per frame
    ascent_step: float = 0.5
    motionless_threshold: float = 15.0
    motionless_speed: float = 0.1
    corridor_length: float = 10.0


@dataclass
class AgentState:
    position: np.ndarray
    heading: float
    speed: float
    kind: str = "vehicle"

    def __post_init__(self):
        self.position = np.asarray(self.position, float)

    @property
    def footprint(self) -> tuple[float, float]:
        return FOOTPRINTS[self.kind]

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * np.array([math.cos(self.heading), math.sin(self.heading)])


@dataclass(frozen=True)
class Control:
    """Per-step command: (accel m/s^2, steer rad) for vehicles and bicycles,
    (dx m, dy m) displacement for pedestrians."""

    lon: float
    lat: float


@dataclass(frozen=True)
class ViolationRecord:
    kind: str
    frame: int
    object_index: int | None = None


@dataclass
class EpisodeResult:
    trace: EpisodeTrace
    violations: list[ViolationRecord]
    seed: Chromosome
    wall_time: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return len(self.violations) > 0


# ---------------------------------------------------------------------------
# kinematics

def step_bicycle(state: AgentState, control: Control, dt: float,
                 wheelbase: float) -> AgentState:
    """Kinematic bicycle step (x' = v cos psi, psi' = v tan(steer)/L, v' = a).

    Speed and heading update before the position so the new position depends
    on the control; speed clamps to [0, 30] m/s, heading wraps.
    """
    v = float(np.clip(state.speed + control.lon * dt, 0.0, SPEED_MAX))
    heading = wrap_angle(state.heading + (v / wheelbase) * math.tan(control.lat) * dt)
    pos = state.position + v * dt * np.array([math.cos(heading), math.sin(heading)])
    return AgentState(position=pos, heading=heading, speed=v, kind=state.kind)


def bicycle_control_jacobian(state: AgentState, control: Control, dt: float,
                             wheelbase: float) -> np.ndarray:
    """d(next x, y, heading)/d(accel, steer) for one step, shape (3, 2).

    The speed-clamp subgradient is zero at and beyond the clamp.
    """
    v_free = state.speed + control.lon * dt
    v = float(np.clip(v_free, 0.0, SPEED_MAX))
    dv_da = dt if 0.0 < v_free < SPEED_MAX else 0.0
    tan_d = math.tan(control.lat)
    sec2 = 1.0 / math.cos(control.lat) ** 2
    heading = wrap_angle(state.heading + (v / wheelbase) * tan_d * dt)
    dpsi_da = (tan_d / wheelbase) * dt * dv_da
    dpsi_dd = (v / wheelbase) * sec2 * dt
    c, s = math.cos(heading), math.sin(heading)
    J = np.empty((3, 2))
    J[0, 0] = dt * (c * dv_da - v * s * dpsi_da)
    J[0, 1] = dt * (-v * s * dpsi_dd)
    J[1, 0] = dt * (s * dv_da + v * c * dpsi_da)
    J[1, 1] = dt * (v * c * dpsi_dd)
    J[2, 0] = dpsi_da
    J[2, 1] = dpsi_dd
    return J


def step_pedestrian(state: AgentState, control: Control, dt: float,
                    max_speed: float = 1.5) -> AgentState:
    """Planar displacement step; the norm clamps to max_speed * dt and the
    heading follows a nonzero displacement."""
    d = np.array([control.lon, control.lat], float)
    norm = float(np.hypot(*d))
    limit = max_speed * dt
    if norm > limit:
        d = d * (limit / norm)
        norm = limit
    heading = math.atan2(d[1], d[0]) if norm > 1e-12 else state.heading
    return AgentState(position=state.position + d, heading=heading,
                      speed=norm / dt, kind=state.kind)


# ---------------------------------------------------------------------------
# oriented rectangles

def rect_corners(pos, heading, dims) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = dims[0] / 2.0, dims[1] / 2.0
    local = np.array([[hl, hw], [hl, -hw], [-hl, -hw], [-hl, hw]])
    R = np.array([[c, -s], [s, c]])
    return np.asarray(pos, float) + local @ R.T


def _obb_overlap_many(pos_a, heading_a, dims_a, pos_b, heading_b, dims_b) -> np.ndarray:
    """Separating-axis test of one box A against boxes B, shape (M,) bool."""
    pos_b = np.atleast_2d(pos_b)
    heading_b = np.atleast_1d(heading_b)
    dims_b = np.atleast_2d(dims_b)
    return _obb_overlap_frames(
        np.asarray(pos_a, float)[None, :], np.atleast_1d(float(heading_a)),
        dims_a, pos_b[None, :, :], heading_b[None, :], dims_b)[0]


def _obb_overlap_frames(ego_pos, ego_heading, ego_dims, obj_pos, obj_heading,
                        obj_dims) -> np.ndarray:
    """SAT of one ego box against M boxes over T frames, shape (T, M) bool."""
    T, M = obj_pos.shape[:2]
    ca, sa = np.cos(ego_heading), np.sin(ego_heading)            # (T,)
    ax_a = np.stack([np.stack([ca, sa], -1), np.stack([-sa, ca], -1)], axis=1)  # (T,2,2)
    cb, sb = np.cos(obj_heading), np.sin(obj_heading)            # (T, M)
    ax_b = np.stack([np.stack([cb, sb], -1), np.stack([-sb, cb], -1)], axis=2)  # (T,M,2,2)
    half_a = np.asarray(ego_dims, float) / 2.0                   # (2,)
    half_b = np.asarray(obj_dims, float) / 2.0                   # (M, 2)
    delta = obj_pos - ego_pos[:, None, :]                        # (T, M, 2)

    axes = np.concatenate([np.broadcast_to(ax_a[:, None], (T, M, 2, 2)), ax_b],
                          axis=2)                                # (T, M, 4, 2)
    dist = np.abs(np.einsum("tmz,tmkz->tmk", delta, axes))       # (T, M, 4)
    r_a = (np.abs(np.einsum("tiz,tmkz->tmki", ax_a, axes)) * half_a).sum(-1)
    r_b = (np.abs(np.einsum("tmiz,tmkz->tmki", ax_b, axes))
           * half_b[None, :, None, :]).sum(-1)
    return (dist <= r_a + r_b - 1e-9).all(axis=2)


def _segments_hit_rect(segs: np.ndarray, pos, heading, dims) -> bool:
    """True when any segment (S, 2, 2) intersects the oriented rectangle."""
    if len(segs) == 0:
        return False
    c, s = math.cos(heading), math.sin(heading)
    R = np.array([[c, s], [-s, c]])
    a = (segs[:, 0, :] - pos) @ R.T
    b = (segs[:, 1, :] - pos) @ R.T
    hx, hy = dims[0] / 2.0, dims[1] / 2.0
    ok = ~((np.maximum(a[:, 0], b[:, 0]) < -hx) | (np.minimum(a[:, 0], b[:, 0]) > hx)
           | (np.maximum(a[:, 1], b[:, 1]) < -hy) | (np.minimum(a[:, 1], b[:, 1]) > hy))
    if not ok.any():
        return False
    d = b - a
    n = np.stack([-d[:, 1], d[:, 0]], axis=1)
    radius = hx * np.abs(n[:, 0]) + hy * np.abs(n[:, 1])
    offset = np.abs((n * a).sum(axis=1))
    return bool((ok & (offset <= radius + 1e-12)).any())


# ---------------------------------------------------------------------------
# controllers

def _rotation_to_ego(ego_heading: float) -> np.ndarray:
    c, s = math.cos(ego_heading), math.sin(ego_heading)
    return np.array([[c, s], [-s, c]])


def _clamp_controls(u: np.ndarray, kinds, config: SimConfig) -> np.ndarray:
    u = u.copy()
    ped = np.array([k == "pedestrian" for k in kinds])
    veh = ~ped
    u[veh, 0] = np.clip(u[veh, 0], -config.throttle_limit, config.throttle_limit)
    u[veh, 1] = np.clip(u[veh, 1], -config.steer_limit, config.steer_limit)
    limit = config.ped_speed * config.dt
    norms = np.hypot(u[ped, 0], u[ped, 1])
    scale = np.where(norms > limit, limit / np.maximum(norms, 1e-12), 1.0)
    u[ped] *= scale[:, None]
    return u


def _gradient_controls(pos, heading, speed, kinds, ego_pos, ego_heading,
                       model: HazardModel, config: SimConfig,
                       ego_lane: Lane, omega: Omega) -> np.ndarray:
    """Direction-normalized gradient ascent of the predicted hazard of each
    object's next state with respect to its control, clamped per kind."""
    M = len(kinds)
    u = np.zeros((M, 2))
    if M == 0:
        return u
    ped = np.array([k == "pedestrian" for k in kinds])
    veh = ~ped
    L = np.array([WHEELBASES.get(k, WHEELBASES["vehicle"]) for k in kinds])
    R = _rotation_to_ego(ego_heading)
    dt = config.dt
    for _ in range(config.ascent_iterations):
        # next pose under the candidate control
        v_free = speed + u[:, 0] * dt
        v_new = np.clip(v_free, 0.0, SPEED_MAX)
        psi_new = np.where(
            veh, wrap_angle(heading + (v_new / L) * np.tan(u[:, 1]) * dt), heading)
        step_vec = np.where(veh[:, None],
                            (v_new * dt)[:, None] * np.stack(
                                [np.cos(psi_new), np.sin(psi_new)], 1),
                            u)
        nxt = pos + step_vec

        rel = (nxt - ego_pos) @ R.T
        X = np.stack([rel[:, 0], rel[:, 1], wrap_angle(psi_new - ego_heading)], axis=1)
        g = grad_x_batch(model, X, ego_lane, omega)     # (M, 3) wrt (ds, dd, dpsi)

        du = np.zeros((M, 2))
        if veh.any():
            dv_da = np.where((v_free > 0.0) & (v_free < SPEED_MAX), dt, 0.0)
            tan_d = np.tan(u[:, 1])
            sec2 = 1.0 / np.cos(u[:, 1]) ** 2
            dpsi_da = (tan_d / L) * dt * dv_da
            dpsi_dd = (v_new / L) * sec2 * dt
            cp, sp = np.cos(psi_new), np.sin(psi_new)
            dpos_da = dt * np.stack([cp * dv_da - v_new * sp * dpsi_da,
                                     sp * dv_da + v_new * cp * dpsi_da], axis=1)
            dpos_dd = dt * np.stack([-v_new * sp * dpsi_dd, v_new * cp * dpsi_dd], axis=1)
            drel_da = dpos_da @ R.T
            drel_dd = dpos_dd @ R.T
            du_veh = np.stack(
                [g[:, 0] * drel_da[:, 0] + g[:, 1] * drel_da[:, 1] + g[:, 2] * dpsi_da,
                 g[:, 0] * drel_dd[:, 0] + g[:, 1] * drel_dd[:, 1] + g[:, 2] * dpsi_dd],
                axis=1)
            du[veh] = du_veh[veh]
        if ped.any():
            # position responds identity to (dx, dy); heading is derived, not controlled
            du_ped = g[:, :2] @ R
            du[ped] = du_ped[ped]

        norms = np.hypot(du[:, 0], du[:, 1])
        direction = np.where(norms[:, None] > 1e-12, du / np.maximum(norms, 1e-12)[:, None], 0.0)
        u = _clamp_controls(u + config.ascent_step * direction, kinds, config)
    return u


def gradient_controller(object_states: list[AgentState], ego_state: AgentState,
                        model: HazardModel, config: SimConfig,
                        ego_lane: Lane, omega: Omega) -> list[Control]:
    if not object_states:
        return []
    pos = np.stack([o.position for o in object_states])
    heading = np.array([o.heading for o in object_states])
    speed = np.array([o.speed for o in object_states])
    kinds = [o.kind for o in object_states]
    u = _gradient_controls(pos, heading, speed, kinds, ego_state.position,
                           ego_state.heading, model, config, ego_lane, omega)
    return [Control(float(a), float(b)) for a, b in u]


def _random_controls(kinds, rng: np.random.Generator, config: SimConfig) -> np.ndarray:
    M = len(kinds)
    raw = rng.uniform(-1.0, 1.0, size=(M, 2))
    u = np.empty((M, 2))
    ped = np.array([k == "pedestrian" for k in kinds], dtype=bool)
    u[:, 0] = raw[:, 0] * config.throttle_limit
    u[:, 1] = raw[:, 1] * config.steer_limit
    if ped.any():
        # component box chosen so the norm clamp never binds
        c = config.ped_speed * config.dt / math.sqrt(2.0)
        u[ped] = raw[ped] * c
    return u


def random_controller(object_states: list[AgentState], rng: np.random.Generator,
                      config: SimConfig | None = None) -> list[Control]:
    config = config or SimConfig()
    u = _random_controls([o.kind for o in object_states], rng, config)
    return [Control(float(a), float(b)) for a, b in u]


# ---------------------------------------------------------------------------
# stand-in ego policy

def _polyline_project(poly: np.ndarray, point) -> tuple[float, float]:
    seg = np.diff(poly, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    denom = np.where(seg_len < 1e-12, 1.0, seg_len**2)
    t = np.clip(((point - poly[:-1]) * seg).sum(axis=1) / denom, 0.0, 1.0)
    proj = poly[:-1] + t[:, None] * seg
    d2 = ((point - proj) ** 2).sum(axis=1)
    i = int(np.argmin(d2))
    return float(cum[i] + t[i] * seg_len[i]), float(cum[-1])


def _polyline_point_at(poly: np.ndarray, s: float) -> np.ndarray:
    seg = np.diff(poly, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    s = min(max(s, 0.0), float(cum[-1]))
    i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg_len) - 1)
    t = (s - cum[i]) / seg_len[i] if seg_len[i] > 1e-12 else 0.0
    return poly[i] + t * seg[i]


def ego_policy(ego_state: AgentState, route: np.ndarray,
               nearby_objects: list[AgentState], network: RoadNetwork,
               config: SimConfig | None = None) -> Control:
    """Pure-pursuit steering along the route with proportional speed control
    toward the target speed, a stopping ramp at the route end, and full
    braking when any object footprint enters the forward cone."""
    config = config or SimConfig()
    if nearby_objects:
        obj_pos = np.stack([o.position for o in nearby_objects])
        obj_heading = np.array([o.heading for o in nearby_objects])
        obj_dims = np.array([o.footprint for o in nearby_objects])
    else:
        obj_pos = np.empty((0, 2))
        obj_heading = np.empty(0)
        obj_dims = np.empty((0, 2))
    lon, lat = _ego_control_core(ego_state.position, ego_state.heading,
                                 ego_state.speed, route, obj_pos, obj_heading,
                                 obj_dims, config)
    return Control(lon, lat)


def _ego_control_core(ego_pos, ego_heading, ego_speed, route, obj_pos,
                      obj_heading, obj_dims, config: SimConfig) -> tuple[float, float]:
    s_here, total = _polyline_project(route, ego_pos)
    target = _polyline_point_at(route, s_here + config.ego_lookahead)
    to_target = target - ego_pos
    ld = float(np.hypot(*to_target))
    wheelbase = WHEELBASES["vehicle"]
    if ld > 1e-6:
        alpha = wrap_angle(math.atan2(to_target[1], to_target[0]) - ego_heading)
        steer = math.atan2(2.0 * wheelbase * math.sin(alpha), ld)
    else:
        steer = 0.0
    steer = float(np.clip(steer, -config.steer_limit, config.steer_limit))

    remaining = max(total - s_here, 0.0)
    v_allow = math.sqrt(2.0 * config.throttle_limit * max(remaining - 1.0, 0.0))
    v_target = min(config.ego_target_speed, v_allow)
    accel = float(np.clip(v_target - ego_speed,
                          -config.throttle_limit, config.throttle_limit))

    if len(obj_pos) and _in_cone(ego_pos, ego_heading, obj_pos, obj_heading,
                                 obj_dims, config):
        accel = -config.throttle_limit
    return accel, steer


def _corners_many(pos, heading, dims) -> np.ndarray:
    """Footprint corners of many agents, shape (M, 4, 2)."""
    c, s = np.cos(heading), np.sin(heading)
    hl, hw = dims[:, 0] / 2.0, dims[:, 1] / 2.0
    sx = np.array([1.0, 1.0, -1.0, -1.0])
    sy = np.array([1.0, -1.0, -1.0, 1.0])
    lx = hl[:, None] * sx[None, :]
    ly = hw[:, None] * sy[None, :]
    out = np.empty((len(pos), 4, 2))
    out[..., 0] = pos[:, None, 0] + c[:, None] * lx - s[:, None] * ly
    out[..., 1] = pos[:, None, 1] + s[:, None] * lx + c[:, None] * ly
    return out


def _in_cone(ego_pos, ego_heading, obj_pos, obj_heading, obj_dims,
             config: SimConfig) -> bool:
    corners = _corners_many(obj_pos, obj_heading, obj_dims)
    pts = np.concatenate([obj_pos[:, None, :], corners], axis=1).reshape(-1, 2)
    rel = pts - ego_pos
    dist = np.hypot(rel[:, 0], rel[:, 1])
    bearing = np.abs(wrap_angle(np.arctan2(rel[:, 1], rel[:, 0]) - ego_heading))
    return bool(((dist <= config.brake_range) & (bearing <= config.brake_half_angle)).any())


# ---------------------------------------------------------------------------
# violation detection

def detect_violations(trace: EpisodeTrace, network: RoadNetwork,
                      motionless_threshold: float = 15.0,
                      config: SimConfig | None = None) -> list[ViolationRecord]:
    """Pure function of the trace; the earliest frame is reported per kind."""
    config = config or SimConfig(motionless_threshold=motionless_threshold)
    out = []
    ego_dims = FOOTPRINTS["vehicle"]
    T, M = trace.frame_count, trace.object_count
    obj_dims = np.array([FOOTPRINTS[k] for k in trace.kinds]) if M else np.empty((0, 2))

    if M:
        hit = _obb_overlap_frames(trace.ego_pos, trace.ego_heading, ego_dims,
                                  trace.obj_pos, trace.obj_heading, obj_dims)
        frames_hit = hit.any(axis=1)
        if frames_hit.any():
            t = int(np.argmax(frames_hit))
            out.append(ViolationRecord(COLLISION, frame=t,
                                       object_index=int(np.argmax(hit[t]))))

    segs = network.solid_segments()
    if len(segs):
        mids = segs.mean(axis=1)
        seg_reach = np.hypot(*(segs[:, 0, :] - segs[:, 1, :]).T) / 2.0
        rect_reach = math.hypot(*ego_dims) / 2.0
        for t in range(T):
            near = np.hypot(*(mids - trace.ego_pos[t]).T) <= seg_reach + rect_reach + 0.5
            if near.any() and _segments_hit_rect(segs[near], trace.ego_pos[t],
                                                 float(trace.ego_heading[t]), ego_dims):
                out.append(ViolationRecord(LANE_DEPARTURE, frame=t))
                break

    frame = _motionless_frame(trace, config)
    if frame is not None:
        out.append(ViolationRecord(MOTIONLESS, frame=frame))
    return out


def _motionless_frame(trace: EpisodeTrace, config: SimConfig) -> int | None:
    T = trace.frame_count
    still = trace.ego_speed < config.motionless_speed
    if trace.destination is not None:
        dest = np.asarray(trace.destination)
        incomplete = np.hypot(*(trace.ego_pos - dest).T) > DEST_REACHED_TOL
    else:
        incomplete = np.ones(T, dtype=bool)
    clear = np.ones(T, dtype=bool)
    candidates = still & incomplete
    if trace.object_count and candidates.any():
        obj_dims = np.array([FOOTPRINTS[k] for k in trace.kinds])
        ego_len = FOOTPRINTS["vehicle"][0]
        corr_dims = (config.corridor_length, FOOTPRINTS["vehicle"][1])
        idx = np.flatnonzero(candidates)
        h = trace.ego_heading[idx]
        ahead = trace.ego_pos[idx] + (ego_len / 2.0 + config.corridor_length / 2.0) \
            * np.stack([np.cos(h), np.sin(h)], axis=1)
        blocked = _obb_overlap_frames(ahead, h, corr_dims, trace.obj_pos[idx],
                                      trace.obj_heading[idx], obj_dims)
        clear[idx] = ~blocked.any(axis=1)
    qualifies = still & incomplete & clear
    run_start = None
    for t in range(T):
        if not qualifies[t]:
            run_start = None
            continue
        if run_start is None:
            run_start = t
        if (t - run_start) * trace.dt > config.motionless_threshold:
            return t
    return None


# ---------------------------------------------------------------------------
# episode execution

def run_episode(seed: Chromosome, tester, network: RoadNetwork,
                model: HazardModel | None = None, horizon: int = 300,
                dt: float = 0.1, rng: np.random.Generator | None = None,
                config: SimConfig | None = None) -> EpisodeResult:
    """Simulate one episode of a seed under an online tester.

    ``tester`` is "gradient", "random", or a callable
    (object_states, ego_state, rng) -> list[Control].  The episode ends early
    on an ego collision; violations are re-derived from the trace afterward.
    """
    config = config or SimConfig()
    config = replace(config, dt=dt, horizon=horizon)
    rng = rng if rng is not None else np.random.default_rng(0)
    t0 = time.perf_counter()

    ego = AgentState(position=np.asarray(seed.ego_position, float),
                     heading=seed.ego_heading, speed=0.0, kind="vehicle")
    kinds = [o.kind for o in seed.dynamics_gene]
    M = len(kinds)
    pos = (np.stack([o.position for o in seed.dynamics_gene])
           if M else np.empty((0, 2)))
    heading = np.array([o.heading for o in seed.dynamics_gene])
    speed = np.zeros(M)
    obj_dims = np.array([FOOTPRINTS[k] for k in kinds]) if M else np.empty((0, 2))
    ped = np.array([k == "pedestrian" for k in kinds], dtype=bool)
    veh = ~ped
    L = np.array([WHEELBASES.get(k, WHEELBASES["vehicle"]) for k in kinds])

    route = _route_to_destination(seed, network)
    ego_lane = network.lanes[network.nearest_lane(seed.ego_position, seed.ego_heading)]
    omega = network.omega

    n_frames = horizon + 1
    rec = {
        "ego_pos": np.empty((n_frames, 2)), "ego_heading": np.empty(n_frames),
        "ego_vel": np.empty((n_frames, 2)), "ego_speed": np.empty(n_frames),
        "obj_pos": np.empty((n_frames, M, 2)), "obj_heading": np.empty((n_frames, M)),
        "obj_vel": np.empty((n_frames, M, 2)), "obj_speed": np.empty((n_frames, M)),
    }

    def snapshot(t, obj_vel):
        rec["ego_pos"][t] = ego.position
        rec["ego_heading"][t] = ego.heading
        rec["ego_vel"][t] = ego.velocity
        rec["ego_speed"][t] = ego.speed
        rec["obj_pos"][t] = pos
        rec["obj_heading"][t] = heading
        rec["obj_vel"][t] = obj_vel
        rec["obj_speed"][t] = speed

    def collided_now() -> bool:
        if not M:
            return False
        return bool(_obb_overlap_many(ego.position, ego.heading, FOOTPRINTS["vehicle"],
                                      pos, heading, obj_dims).any())

    snapshot(0, np.zeros((M, 2)))
    frames = 1
    if not collided_now():
        for t in range(1, n_frames):
            u = _tester_controls(tester, pos, heading, speed, kinds, ego, model,
                                 config, ego_lane, omega, rng)
            prev_pos = pos
            pos, heading, speed = _step_objects(pos, heading, speed, u, veh, ped,
                                                L, config)
            obj_vel = (pos - prev_pos) / config.dt if M else np.zeros((0, 2))
            lon, lat = _ego_control_core(ego.position, ego.heading, ego.speed,
                                         route, pos, heading, obj_dims, config)
            ego = step_bicycle(ego, Control(lon, lat), config.dt,
                               WHEELBASES["vehicle"])
            snapshot(t, obj_vel)
            frames = t + 1
            if collided_now():
                break

    trace = EpisodeTrace(
        dt=config.dt,
        ego_pos=rec["ego_pos"][:frames].copy(),
        ego_heading=rec["ego_heading"][:frames].copy(),
        ego_vel=rec["ego_vel"][:frames].copy(),
        ego_speed=rec["ego_speed"][:frames].copy(),
        obj_pos=rec["obj_pos"][:frames].copy(),
        obj_heading=rec["obj_heading"][:frames].copy(),
        obj_vel=rec["obj_vel"][:frames].copy(),
        obj_speed=rec["obj_speed"][:frames].copy(),
        kinds=tuple(kinds),
        destination=seed.destination,
    )
    violations = detect_violations(trace, network, config.motionless_threshold, config)
    return EpisodeResult(trace=trace, violations=violations, seed=seed,
                         wall_time=time.perf_counter() - t0)


def _tester_controls(tester, pos, heading, speed, kinds, ego, model, config,
                     ego_lane, omega, rng) -> np.ndarray:
    if len(kinds) == 0:
        return np.zeros((0, 2))
    if tester == "gradient":
        if model is None:
            raise ValueError("gradient tester requires a hazard model")
        return _gradient_controls(pos, heading, speed, kinds, ego.position,
                                  ego.heading, model, config, ego_lane, omega)
    if tester == "random":
        return _random_controls(kinds, rng, config)
    if callable(tester):
        states = [AgentState(position=pos[i], heading=float(heading[i]),
                             speed=float(speed[i]), kind=kinds[i])
                  for i in range(len(kinds))]
        controls = tester(states, ego, rng)
        return np.array([[c.lon, c.lat] for c in controls]).reshape(len(kinds), 2)
    raise ValueError(f"unknown tester {tester!r}")


def _step_objects(pos, heading, speed, u, veh, ped, L, config: SimConfig):
    dt = config.dt
    u = _clamp_controls(u, ["pedestrian" if p else "vehicle" for p in ped], config)
    new_pos = pos.copy()
    new_heading = heading.copy()
    new_speed = speed.copy()
    if veh.any():
        v = np.clip(speed[veh] + u[veh, 0] * dt, 0.0, SPEED_MAX)
        psi = wrap_angle(heading[veh] + (v / L[veh]) * np.tan(u[veh, 1]) * dt)
        new_pos[veh] = pos[veh] + (v * dt)[:, None] * np.stack([np.cos(psi), np.sin(psi)], 1)
        new_heading[veh] = psi
        new_speed[veh] = v
    if ped.any():
        d = u[ped]
        norm = np.hypot(d[:, 0], d[:, 1])
        new_pos[ped] = pos[ped] + d
        keep = norm <= 1e-12
        new_heading[ped] = np.where(keep, heading[ped], np.arctan2(d[:, 1], d[:, 0]))
        new_speed[ped] = norm / dt
    return new_pos, new_heading, new_speed


def _route_to_destination(seed: Chromosome, network: RoadNetwork) -> np.ndarray:
    path = route_path(seed.ego_position, seed.ego_heading, network,
                      max_arc=sum(l.length for l in network.lanes) + 200.0)
    s_dest, _ = _polyline_project(path, np.asarray(seed.destination))
    seg = np.diff(path, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    keep = path[cum < s_dest - 1e-9]
    end = _polyline_point_at(path, s_dest)
    route = np.vstack([keep, end]) if len(keep) else np.vstack([path[0], end])
    return route


# ---------------------------------------------------------------------------
# persistence

def episode_to_record(result: EpisodeResult) -> dict:
    """JSON-serializable record with stable field ordering; wall time is
    deliberately excluded so identical runs serialize identically."""
    t = result.trace
    return {
        "seed": chromosome_to_record(result.seed),
        "dt": t.dt,
        "kinds": list(t.kinds),
        "ego": {
            "pos": t.ego_pos.tolist(), "heading": t.ego_heading.tolist(),
            "vel": t.ego_vel.tolist(), "speed": t.ego_speed.tolist(),
        },
        "objects": {
            "pos": t.obj_pos.tolist(), "heading": t.obj_heading.tolist(),
            "vel": t.obj_vel.tolist(), "speed": t.obj_speed.tolist(),
        },
        "violations": [
            {"kind": v.kind, "frame": v.frame, "object": v.object_index}
            for v in result.violations
        ],
        "diagnostics": result.diagnostics,
    }


def episode_from_record(record: dict) -> EpisodeResult:
    seed = chromosome_from_record(record["seed"])
    M = len(record["kinds"])
    ego = record["ego"]
    obj = record["objects"]
    trace = EpisodeTrace(
        dt=record["dt"],
        ego_pos=np.asarray(ego["pos"], float).reshape(-1, 2),
        ego_heading=np.asarray(ego["heading"], float),
        ego_vel=np.asarray(ego["vel"], float).reshape(-1, 2),
        ego_speed=np.asarray(ego["speed"], float),
        obj_pos=np.asarray(obj["pos"], float).reshape(-1, M, 2),
        obj_heading=np.asarray(obj["heading"], float).reshape(-1, M),
        obj_vel=np.asarray(obj["vel"], float).reshape(-1, M, 2),
        obj_speed=np.asarray(obj["speed"], float).reshape(-1, M),
        kinds=tuple(record["kinds"]),
        destination=seed.destination,
    )
    violations = [ViolationRecord(kind=v["kind"], frame=v["frame"],
                                  object_index=v["object"])
                  for v in record["violations"]]
    return EpisodeResult(trace=trace, violations=violations, seed=seed,
                         wall_time=0.0, diagnostics=record.get("diagnostics", {}))


def episode_to_line(result: EpisodeResult) -> str:
    return json.dumps(episode_to_record(result), separators=(",", ":"))


def episode_from_line(line: str) -> EpisodeResult:
    return episode_from_record(json.loads(line))
