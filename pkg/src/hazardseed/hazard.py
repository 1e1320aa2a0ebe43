"""Hazard surrogate: ego-centric features, dense near-miss labels, online MLP.

The surrogate maps a 5-dim feature vector

    z = [ds / D_s, dd / D_d, cos(dpsi), sin(dpsi), lane overlap]

(first two clipped to [-1, 1]) to a hazard score in (0, 1).  It is a small
feed-forward network (5 -> 16 -> 16 -> 1, tanh hidden units, logistic
output) trained online with binary cross entropy against labels distilled
from episode traces: distance, heading-alignment and closing-speed cues
around the closest-approach frame, aggregated multiplicatively in log space.

Everything is plain numpy with hand-written backprop; gradients with respect
to both parameters and the ego-relative state (ds, dd, dpsi) are analytic.
"""

from __future__ import annotations

import math
import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from hazardseed.map_model import Lane, Omega, lane_overlap, wrap_angle
from hazardseed.scenario import Particle, _pose

LABEL_EPS = 1e-6           # cue clamp before the log-space aggregation
DEFAULT_WINDOW = 2         # half-width -> 5-frame window around closest approach
HIDDEN = 16
LAYER_SIZES = (5, HIDDEN, HIDDEN, 1)
DEFAULT_LR = 1e-3
DEFAULT_BATCH = 64
DEFAULT_STEPS_PER_EPISODE = 4
DEFAULT_BUFFER_CAPACITY = 10_000


# ---------------------------------------------------------------------------
# episode trace

@dataclass
class EpisodeTrace:
    """Columnar per-frame record of the ego and all dynamic objects."""

    dt: float
    ego_pos: np.ndarray       # (T, 2)
    ego_heading: np.ndarray   # (T,)
    ego_vel: np.ndarray       # (T, 2)
    ego_speed: np.ndarray     # (T,)
    obj_pos: np.ndarray       # (T, M, 2)
    obj_heading: np.ndarray   # (T, M)
    obj_vel: np.ndarray       # (T, M, 2)
    obj_speed: np.ndarray     # (T, M)
    kinds: tuple[str, ...]    # (M,)
    destination: tuple[float, float] | None = None

    def __post_init__(self):
        if len(self.ego_pos) < 1:
            raise ValueError("trace must contain at least one frame")

    @property
    def frame_count(self) -> int:
        return len(self.ego_pos)

    @property
    def object_count(self) -> int:
        return self.obj_pos.shape[1]


# ---------------------------------------------------------------------------
# features

def features(ego_pose, obj, ego_lane: Lane, omega: Omega) -> np.ndarray:
    """5-dim ego-centric feature vector for one object, components in [-1, 1]."""
    rel = _relative(ego_pose, obj)
    obj_pos, _ = _pose(obj)
    lam = lane_overlap(obj_pos, ego_lane)
    return _assemble(rel, lam, omega)


def particle_features(x, ego_lane: Lane, omega: Omega) -> np.ndarray:
    """Features of an ego-relative particle, with the ego taken to sit on the
    lane centerline: the overlap cue reduces to a linear ramp in |dd|."""
    x = x.as_array() if isinstance(x, Particle) else np.asarray(x, float)
    return particle_features_batch(x[None, :], ego_lane, omega)[0]


def particle_features_batch(X: np.ndarray, ego_lane: Lane, omega: Omega) -> np.ndarray:
    """Vectorized :func:`particle_features` over rows of X (N, 3) -> (N, 5)."""
    X = np.asarray(X, float)
    return np.stack([
        np.clip(X[:, 0] / omega.d_s, -1.0, 1.0),
        np.clip(X[:, 1] / omega.d_d, -1.0, 1.0),
        np.cos(X[:, 2]),
        np.sin(X[:, 2]),
        np.clip(1.0 - np.abs(X[:, 1]) / ego_lane.width, 0.0, 1.0),
    ], axis=1)


def _relative(ego_pose, obj) -> np.ndarray:
    ego_pos, ego_heading = _pose(ego_pose)
    obj_pos, obj_heading = _pose(obj)
    c, s = math.cos(ego_heading), math.sin(ego_heading)
    dx, dy = obj_pos - ego_pos
    return np.array([c * dx + s * dy, -s * dx + c * dy,
                     wrap_angle(obj_heading - ego_heading)])


def _assemble(rel, lam: float, omega: Omega) -> np.ndarray:
    return np.array([
        np.clip(rel[0] / omega.d_s, -1.0, 1.0),
        np.clip(rel[1] / omega.d_d, -1.0, 1.0),
        math.cos(rel[2]),
        math.sin(rel[2]),
        lam,
    ])


def closing_speed(ego_state, obj_state) -> float:
    """Rate at which the range shrinks along the line of sight (m/s).

    Each state is a (position, velocity) pair; coincident positions return 0
    since the bearing is undefined there.
    """
    ego_pos, ego_vel = (np.asarray(a, float) for a in ego_state)
    obj_pos, obj_vel = (np.asarray(a, float) for a in obj_state)
    r = obj_pos - ego_pos
    dist = math.hypot(*r)
    if dist < 1e-12:
        return 0.0
    return float(-(r / dist) @ (obj_vel - ego_vel))


# ---------------------------------------------------------------------------
# labels

def near_miss_label(trace: EpisodeTrace, obj_index: int,
                    window: int = DEFAULT_WINDOW, collided: bool = False) -> float:
    """Smooth near-miss score in [0, 1] for one object over the episode.

    Cues are evaluated on the frames around the closest approach: a distance
    cue exp(-mean distance), a per-frame heading cue (1 - cos dpsi)/2, and a
    closing-speed cue clipped by the fastest speed seen in the episode.  Each
    is treated as an independent no-risk factor and multiplied across the
    window in log space; a collision forces the label to 1.
    """
    if collided:
        return 1.0
    rel = trace.obj_pos[:, obj_index, :] - trace.ego_pos
    dist = np.hypot(rel[:, 0], rel[:, 1])
    t_star = int(np.argmin(dist))
    lo = max(0, t_star - window)
    hi = min(trace.frame_count - 1, t_star + window)
    idx = np.arange(lo, hi + 1)

    d_bar = float(dist[idx].mean())

    r = rel[idx]
    d = dist[idx]
    dv = trace.obj_vel[idx, obj_index, :] - trace.ego_vel[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        v_close = np.where(d < 1e-12, 0.0, -(r * dv).sum(axis=1) / np.where(d < 1e-12, 1.0, d))
    v_close_bar = float(v_close.mean())

    v_max = float(max(trace.ego_speed.max(), trace.obj_speed.max(initial=0.0)))

    s_dist = math.exp(-d_bar)
    dpsi = wrap_angle(trace.obj_heading[idx, obj_index] - trace.ego_heading[idx])
    s_head = (1.0 - np.cos(dpsi)) / 2.0
    s_close = 0.0 if v_max == 0.0 else float(np.clip(v_close_bar / v_max, 0.0, 1.0))

    clamp = lambda v: np.clip(v, LABEL_EPS, 1.0 - LABEL_EPS)
    log_sum = float(
        len(idx) * math.log(1.0 - clamp(s_dist))
        + np.log(1.0 - clamp(s_head)).sum()
        + len(idx) * math.log(1.0 - clamp(s_close))
    )
    return float(np.clip(1.0 - math.exp(log_sum), 0.0, 1.0))


def harvest(trace: EpisodeTrace, collisions, ego_lane: Lane, omega: Omega,
            window: int = DEFAULT_WINDOW) -> list[tuple[np.ndarray, float]]:
    """One (frame-0 feature vector, label) sample per dynamic object."""
    collided = set(int(i) for i in collisions)
    ego0 = (trace.ego_pos[0], float(trace.ego_heading[0]))
    samples = []
    for i in range(trace.object_count):
        obj0 = (trace.obj_pos[0, i], float(trace.obj_heading[0, i]))
        z = features(ego0, obj0, ego_lane, omega)
        y = near_miss_label(trace, i, window=window, collided=i in collided)
        samples.append((z, y))
    return samples


# ---------------------------------------------------------------------------
# replay buffer

class ReplayBuffer:
    """Bounded FIFO of (feature vector, label) samples."""

    def __init__(self, capacity: int = DEFAULT_BUFFER_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def add(self, z, y: float) -> None:
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"label {y} outside [0, 1]")
        self._items.append((np.asarray(z, float), float(y)))

    def extend(self, samples) -> None:
        for z, y in samples:
            self.add(z, y)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform batch without replacement (the whole buffer if smaller)."""
        n = len(self._items)
        if n == 0:
            raise ValueError("cannot sample from an empty buffer")
        take = min(batch_size, n)
        idx = rng.choice(n, size=take, replace=False)
        Z = np.stack([self._items[i][0] for i in idx])
        y = np.array([self._items[i][1] for i in idx])
        return Z, y


# ---------------------------------------------------------------------------
# hazard model

def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class HazardModel:
    """5 -> 16 -> 16 -> 1 tanh network with a logistic output and Adam state."""

    def __init__(self, rng: np.random.Generator | None = None):
        self.params = {}
        sizes = LAYER_SIZES
        for li in range(3):
            fan_in, fan_out = sizes[li], sizes[li + 1]
            if rng is None:
                W = np.zeros((fan_in, fan_out))
            else:
                W = rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_in, fan_out))
            self.params[f"W{li + 1}"] = W
            self.params[f"b{li + 1}"] = np.zeros(fan_out)
        self._adam_m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._adam_v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._adam_t = 0

    @classmethod
    def zeros(cls) -> "HazardModel":
        return cls(rng=None)

    # forward ---------------------------------------------------------------

    def _layers(self, Z: np.ndarray):
        H1 = np.tanh(Z @ self.params["W1"] + self.params["b1"])
        H2 = np.tanh(H1 @ self.params["W2"] + self.params["b2"])
        logit = (H2 @ self.params["W3"] + self.params["b3"]).ravel()
        return H1, H2, logit

    def forward(self, z):
        """Hazard score(s) in (0, 1); scalar for a single vector, array for a batch."""
        Z = np.atleast_2d(np.asarray(z, float))
        _, _, logit = self._layers(Z)
        h = _sigmoid(logit)
        return float(h[0]) if np.ndim(z) == 1 else h

    # training --------------------------------------------------------------

    def loss_and_grads(self, Z, y):
        """Mean BCE and parameter gradients for a batch."""
        Z = np.atleast_2d(np.asarray(Z, float))
        y = np.asarray(y, float).ravel()
        B = len(Z)
        H1, H2, logit = self._layers(Z)
        # numerically stable BCE on the logit
        loss = float(np.mean(np.maximum(logit, 0.0) - logit * y
                             + np.log1p(np.exp(-np.abs(logit)))))
        d_logit = (_sigmoid(logit) - y)[:, None] / B
        grads = {
            "W3": H2.T @ d_logit,
            "b3": d_logit.sum(axis=0),
        }
        dH2 = (d_logit @ self.params["W3"].T) * (1.0 - H2**2)
        grads["W2"] = H1.T @ dH2
        grads["b2"] = dH2.sum(axis=0)
        dH1 = (dH2 @ self.params["W2"].T) * (1.0 - H1**2)
        grads["W1"] = Z.T @ dH1
        grads["b1"] = dH1.sum(axis=0)
        return loss, grads

    def adam_step(self, grads, lr: float, beta1: float = 0.9,
                  beta2: float = 0.999, eps: float = 1e-8) -> None:
        self._adam_t += 1
        t = self._adam_t
        for k, g in grads.items():
            m = self._adam_m[k] = beta1 * self._adam_m[k] + (1 - beta1) * g
            v = self._adam_v[k] = beta2 * self._adam_v[k] + (1 - beta2) * g * g
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            self.params[k] = self.params[k] - lr * m_hat / (np.sqrt(v_hat) + eps)

    # input gradients -------------------------------------------------------

    def input_grad(self, Z) -> np.ndarray:
        """d(hazard)/d(z) per sample, shape (B, 5)."""
        Z = np.atleast_2d(np.asarray(Z, float))
        H1, H2, logit = self._layers(Z)
        h = _sigmoid(logit)
        d3 = (h * (1.0 - h))[:, None]                       # d h / d logit
        dH2 = (d3 @ self.params["W3"].T) * (1.0 - H2**2)
        dH1 = (dH2 @ self.params["W2"].T) * (1.0 - H1**2)
        return dH1 @ self.params["W1"].T

    # persistence -----------------------------------------------------------

    _MAGIC = b"HZCK"

    def save_bytes(self) -> bytes:
        keys = sorted(self.params)
        header = struct.pack("<4sI", self._MAGIC, len(keys))
        for k in keys:
            arr = self.params[k]
            header += struct.pack("<8sI", k.encode().ljust(8), arr.ndim)
            header += struct.pack(f"<{arr.ndim}I", *arr.shape)
        body = b"".join(np.ascontiguousarray(self.params[k], dtype="<f8").tobytes()
                        for k in keys)
        return header + body

    @classmethod
    def load_bytes(cls, blob: bytes) -> "HazardModel":
        magic, n = struct.unpack_from("<4sI", blob, 0)
        if magic != cls._MAGIC:
            raise ValueError("not a hazard model checkpoint")
        off = 8
        shapes = []
        for _ in range(n):
            name, ndim = struct.unpack_from("<8sI", blob, off)
            off += 12
            shape = struct.unpack_from(f"<{ndim}I", blob, off)
            off += 4 * ndim
            shapes.append((name.rstrip(b"\0 ").decode(), shape))
        model = cls.zeros()
        for name, shape in shapes:
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape)
            off += 8 * count
            if name not in model.params or model.params[name].shape != arr.shape:
                raise ValueError(f"checkpoint parameter {name} has unexpected shape {shape}")
            model.params[name] = arr.copy()
        return model

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.save_bytes())

    @classmethod
    def load(cls, path) -> "HazardModel":
        with open(path, "rb") as f:
            return cls.load_bytes(f.read())


def forward(model: HazardModel, z):
    return model.forward(z)


def train_step(model: HazardModel, batch, learning_rate: float = DEFAULT_LR):
    """One Adam step on the mean BCE of a (Z, y) batch.  Returns (model, loss)."""
    Z, y = batch
    if len(np.atleast_2d(Z)) == 0:
        raise ValueError("batch must be non-empty")
    loss, grads = model.loss_and_grads(Z, y)
    if not math.isfinite(loss):
        raise FloatingPointError(f"non-finite training loss {loss}")
    model.adam_step(grads, lr=learning_rate)
    return model, loss


def grad_x(model: HazardModel, x, ego_lane: Lane, omega: Omega) -> np.ndarray:
    """d(hazard)/d(ds, dd, dpsi) for one particle via the feature chain rule."""
    return grad_x_batch(model, np.atleast_2d(
        x.as_array() if isinstance(x, Particle) else np.asarray(x, float)),
        ego_lane, omega)[0]


def grad_x_batch(model: HazardModel, X: np.ndarray, ego_lane: Lane,
                 omega: Omega) -> np.ndarray:
    """Vectorized :func:`grad_x` over particles stacked in rows of X (N, 3)."""
    X = np.asarray(X, float)
    Z = particle_features_batch(X, ego_lane, omega)
    dz = model.input_grad(Z)                       # (N, 5)
    ds, dd, dpsi = X[:, 0], X[:, 1], X[:, 2]
    # clip subgradient: zero at and outside the clip boundary
    g_ds = dz[:, 0] * np.where(np.abs(ds) < omega.d_s, 1.0 / omega.d_s, 0.0)
    g_dd = dz[:, 1] * np.where(np.abs(dd) < omega.d_d, 1.0 / omega.d_d, 0.0)
    # lane-overlap ramp: zero at the kinks (dd = 0, |dd| = width)
    w = ego_lane.width
    inside = (np.abs(dd) > 0.0) & (np.abs(dd) < w)
    g_dd = g_dd + dz[:, 4] * np.where(inside, -np.sign(dd) / w, 0.0)
    g_dpsi = -dz[:, 2] * np.sin(dpsi) + dz[:, 3] * np.cos(dpsi)
    return np.stack([g_ds, g_dd, g_dpsi], axis=1)
