"""Scenario seeds: chromosome representation, vector encoding, ego-frame math.

A seed ("chromosome") is the ego route gene (start pose plus derived
destination) together with one (kind, position, heading) entry per dynamic
object.  Seeds encode to fixed-length vectors in [0, 1]^n for seed-pool
distances and diversity metrics, and each dynamic object maps to an
ego-relative particle (ds, dd, dpsi) for refinement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from hazardseed.map_model import RoadNetwork, route_destination, wrap_angle

KINDS = ("vehicle", "bicycle", "pedestrian")
KIND_FRACTION = {"vehicle": 0.0, "bicycle": 0.5, "pedestrian": 1.0}
DEFAULT_KIND_MIX = (0.6, 0.2, 0.2)
DEFAULT_OBJECT_COUNT = 20
VEHICLE_LENGTH = 4.5   # minimum clearance between a fresh object and the ego start


@dataclass(frozen=True)
class ObjectInit:
    """Initial state of one dynamic object."""

    kind: str
    position: tuple[float, float]
    heading: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown object kind {self.kind!r}")
        object.__setattr__(self, "position",
                           (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))


@dataclass(frozen=True)
class Chromosome:
    """One test seed: ego route gene + dynamics gene."""

    ego_position: tuple[float, float]
    ego_heading: float
    destination: tuple[float, float]
    dynamics_gene: tuple[ObjectInit, ...]

    def __post_init__(self):
        object.__setattr__(self, "ego_position",
                           (float(self.ego_position[0]), float(self.ego_position[1])))
        object.__setattr__(self, "ego_heading", wrap_angle(float(self.ego_heading)))
        object.__setattr__(self, "destination",
                           (float(self.destination[0]), float(self.destination[1])))
        object.__setattr__(self, "dynamics_gene", tuple(self.dynamics_gene))


@dataclass(frozen=True)
class Particle:
    """Mutable ego-relative state of one dynamic object, as refined by SVGD."""

    delta_s: float
    delta_d: float
    delta_psi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.delta_s, self.delta_d, self.delta_psi])

    @staticmethod
    def from_array(x) -> "Particle":
        return Particle(float(x[0]), float(x[1]), float(x[2]))


def _pose(obj) -> tuple[np.ndarray, float]:
    """Accept an ObjectInit-like object or a (position, heading) pair."""
    if hasattr(obj, "position"):
        return np.asarray(obj.position, float), float(obj.heading)
    pos, heading = obj
    return np.asarray(pos, float), float(heading)


def random_chromosome(network: RoadNetwork, object_count: int,
                      rng: np.random.Generator,
                      kind_mix: tuple[float, float, float] = DEFAULT_KIND_MIX) -> Chromosome:
    """Draw a random seed: ego on a uniform spawn point, objects on distinct
    spawn points at least a vehicle length away from the ego start."""
    n_spawn = len(network.spawn_points)
    if n_spawn == 0:
        raise ValueError("map too small: no spawn points")
    ego_idx = int(rng.integers(n_spawn))
    ego_pos = network.spawn_points[ego_idx]
    ego_heading = float(network.spawn_headings[ego_idx])
    dest = route_destination(ego_pos, ego_heading, network)

    gap = np.hypot(*(network.spawn_points - ego_pos).T)
    eligible = np.flatnonzero(gap >= VEHICLE_LENGTH)
    if object_count > len(eligible):
        raise ValueError(
            f"map too small: {object_count} objects requested, "
            f"{len(eligible)} usable spawn points")
    objects = []
    if object_count:
        chosen = rng.choice(eligible, size=object_count, replace=False)
        kinds = rng.choice(len(KINDS), size=object_count, p=kind_mix)
        for idx, k in zip(chosen, kinds):
            objects.append(ObjectInit(kind=KINDS[int(k)],
                                      position=tuple(network.spawn_points[int(idx)]),
                                      heading=float(network.spawn_headings[int(idx)])))
    return Chromosome(ego_position=tuple(ego_pos), ego_heading=ego_heading,
                      destination=tuple(dest), dynamics_gene=tuple(objects))


# ---------------------------------------------------------------------------
# normalized vector encoding

def _norm_scale(network: RoadNetwork) -> tuple[np.ndarray, np.ndarray]:
    lo = network.bounds_min
    extent = np.maximum(network.bounds_max - lo, 1e-12)
    return lo, extent


def encode(chromosome: Chromosome, network: RoadNetwork) -> np.ndarray:
    """Normalized gene vector in [0, 1]^(3 + 4 * object_count).

    Layout: ego (x, y, heading) then per object (x, y, heading, kind).
    Positions scale by the map bounding box, headings by 2*pi from (-pi, pi],
    kinds map to {0, 0.5, 1}.
    """
    lo, extent = _norm_scale(network)
    two_pi = 2.0 * math.pi
    out = np.empty(3 + 4 * len(chromosome.dynamics_gene))
    out[0:2] = (np.asarray(chromosome.ego_position) - lo) / extent
    out[2] = (chromosome.ego_heading + math.pi) / two_pi
    for i, obj in enumerate(chromosome.dynamics_gene):
        base = 3 + 4 * i
        out[base:base + 2] = (np.asarray(obj.position) - lo) / extent
        out[base + 2] = (obj.heading + math.pi) / two_pi
        out[base + 3] = KIND_FRACTION[obj.kind]
    return np.clip(out, 0.0, 1.0)


def decode(vector, network: RoadNetwork) -> Chromosome:
    """Inverse of :func:`encode`; the destination is re-derived from the map."""
    v = np.asarray(vector, float)
    if (len(v) - 3) % 4 != 0:
        raise ValueError(f"encoded vector length {len(v)} is not 3 + 4k")
    lo, extent = _norm_scale(network)
    two_pi = 2.0 * math.pi
    ego_pos = tuple(v[0:2] * extent + lo)
    ego_heading = wrap_angle(v[2] * two_pi - math.pi)
    objects = []
    for base in range(3, len(v), 4):
        pos = tuple(v[base:base + 2] * extent + lo)
        heading = wrap_angle(v[base + 2] * two_pi - math.pi)
        kind = KINDS[int(np.argmin([abs(v[base + 3] - KIND_FRACTION[k]) for k in KINDS]))]
        objects.append(ObjectInit(kind=kind, position=pos, heading=heading))
    dest = route_destination(ego_pos, ego_heading, network)
    return Chromosome(ego_position=ego_pos, ego_heading=ego_heading,
                      destination=tuple(dest), dynamics_gene=tuple(objects))


# ---------------------------------------------------------------------------
# ego-frame transforms

def relative_state(ego, obj) -> Particle:
    """Object pose in the ego body frame: ds along the heading, dd to the
    left, dpsi the wrapped heading difference."""
    ego_pos, ego_heading = _pose(ego)
    obj_pos, obj_heading = _pose(obj)
    c, s = math.cos(ego_heading), math.sin(ego_heading)
    dx, dy = obj_pos - ego_pos
    return Particle(delta_s=c * dx + s * dy,
                    delta_d=-s * dx + c * dy,
                    delta_psi=wrap_angle(obj_heading - ego_heading))


def particle_to_pose(ego, particle: Particle) -> tuple[np.ndarray, float]:
    """Absolute (position, heading) of a particle relative to the ego pose."""
    ego_pos, ego_heading = _pose(ego)
    c, s = math.cos(ego_heading), math.sin(ego_heading)
    ds, dd = particle.delta_s, particle.delta_d
    pos = ego_pos + np.array([c * ds - s * dd, s * ds + c * dd])
    return pos, wrap_angle(ego_heading + particle.delta_psi)


def apply_particles(chromosome: Chromosome,
                    assignments: list[tuple[int, Particle]],
                    network: RoadNetwork) -> Chromosome:
    """Rewrite assigned objects from refined particles.

    Positions that land off-road snap to the nearest lane centerline point;
    unassigned objects are untouched.
    """
    seen = set()
    objects = list(chromosome.dynamics_gene)
    ego = (chromosome.ego_position, chromosome.ego_heading)
    for idx, particle in assignments:
        if idx in seen or not 0 <= idx < len(objects):
            raise ValueError(f"bad particle assignment index {idx}")
        seen.add(idx)
        pos, heading = particle_to_pose(ego, particle)
        if not network.on_road(pos):
            pos = network.snap_to_lane(pos)
        objects[idx] = ObjectInit(kind=objects[idx].kind,
                                  position=tuple(pos), heading=heading)
    return Chromosome(ego_position=chromosome.ego_position,
                      ego_heading=chromosome.ego_heading,
                      destination=chromosome.destination,
                      dynamics_gene=tuple(objects))


# ---------------------------------------------------------------------------
# line-delimited persistence

def chromosome_to_record(chromosome: Chromosome) -> dict:
    return {
        "ego": {"pos": list(chromosome.ego_position),
                "heading": chromosome.ego_heading,
                "dest": list(chromosome.destination)},
        "objects": [{"kind": o.kind, "pos": list(o.position), "heading": o.heading}
                    for o in chromosome.dynamics_gene],
    }


def chromosome_from_record(record: dict) -> Chromosome:
    ego = record["ego"]
    return Chromosome(
        ego_position=tuple(ego["pos"]),
        ego_heading=ego["heading"],
        destination=tuple(ego["dest"]),
        dynamics_gene=tuple(ObjectInit(kind=o["kind"], position=tuple(o["pos"]),
                                       heading=o["heading"])
                            for o in record["objects"]),
    )


def chromosome_to_line(chromosome: Chromosome) -> str:
    return json.dumps(chromosome_to_record(chromosome), separators=(",", ":"))


def chromosome_from_line(line: str) -> Chromosome:
    return chromosome_from_record(json.loads(line))
