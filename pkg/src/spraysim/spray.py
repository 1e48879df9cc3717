"""Wheel spray: emission amounts, droplet cluster dynamics, annihilation.

Two mechanisms feed the plume. Tread pickup flings water held in the tire
grooves off the rear-top of the wheel; side wave pushes standing water
outward at the contact patch. Each emitted particle is a rigid cluster of
``cluster_size`` droplets treated as a single body. Clusters fly under
gravity, quadratic air drag against the wind, and a separately tracked,
exponentially decaying lateral velocity that models the vehicle wake. A
bi-stable wake sign skews the left/right mass flow while staying
symmetric in the long run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import SprayParams, TireSpec, WeatherConfig, RoadSurface
from .rng import substream
from .scene import Scene, VehicleState, water_film_depth

GRAVITY = 9.81

MECH_TREAD = 0
MECH_SIDE = 1
SIDE_LEFT = 0
SIDE_RIGHT = 1

ANNIHILATION_REASONS = ("collision", "range", "age")

# Tread-pickup release point on the tire circumference, measured from the
# top of the wheel toward the rear. Side-wave water leaves at the contact
# patch edge, just above the ground so it is not culled at birth.
_TREAD_RELEASE_ANGLE = math.radians(45.0)
_SIDE_SPAWN_HEIGHT = 0.02

_RNG_EMIT = 0x21
_RNG_WAKE = 0x22


@dataclass
class DropletCluster:
    """Scalar view of one cluster; storage lives in ClusterSet arrays."""

    position: np.ndarray
    velocity: np.ndarray
    lateral_velocity: np.ndarray
    age: float
    offsets: np.ndarray  # (cluster_size - 1, 3), frozen at emission
    source_vehicle: int
    source_side: int
    mechanism: int


class ClusterSet:
    """Struct-of-arrays container for the alive droplet clusters."""

    def __init__(self, params: SprayParams):
        self.params = params
        k = max(params.cluster_size - 1, 0)
        self.pos = np.empty((0, 3))
        self.vel = np.empty((0, 3))
        self.lat_vel = np.empty((0, 3))
        self.age = np.empty((0,))
        self.offsets = np.empty((0, k, 3), dtype=np.float32)
        self.source_vehicle = np.empty((0,), dtype=np.int32)
        self.source_side = np.empty((0,), dtype=np.int8)
        self.mechanism = np.empty((0,), dtype=np.int8)

    def __len__(self) -> int:
        return self.pos.shape[0]

    def __getitem__(self, i: int) -> DropletCluster:
        return DropletCluster(self.pos[i], self.vel[i], self.lat_vel[i],
                              float(self.age[i]), self.offsets[i],
                              int(self.source_vehicle[i]),
                              int(self.source_side[i]), int(self.mechanism[i]))

    def extend(self, other: "ClusterSet") -> None:
        if len(other) == 0:
            return
        self.pos = np.concatenate([self.pos, other.pos])
        self.vel = np.concatenate([self.vel, other.vel])
        self.lat_vel = np.concatenate([self.lat_vel, other.lat_vel])
        self.age = np.concatenate([self.age, other.age])
        self.offsets = np.concatenate([self.offsets, other.offsets])
        self.source_vehicle = np.concatenate([self.source_vehicle, other.source_vehicle])
        self.source_side = np.concatenate([self.source_side, other.source_side])
        self.mechanism = np.concatenate([self.mechanism, other.mechanism])

    def select(self, mask: np.ndarray) -> "ClusterSet":
        out = ClusterSet(self.params)
        out.pos = self.pos[mask]
        out.vel = self.vel[mask]
        out.lat_vel = self.lat_vel[mask]
        out.age = self.age[mask]
        out.offsets = self.offsets[mask]
        out.source_vehicle = self.source_vehicle[mask]
        out.source_side = self.source_side[mask]
        out.mechanism = self.mechanism[mask]
        return out

    def tobytes(self) -> bytes:
        """Canonical byte image, used by determinism checks."""
        return b"".join(a.tobytes() for a in
                        (self.pos, self.vel, self.lat_vel, self.age, self.offsets,
                         self.source_vehicle, self.source_side, self.mechanism))


@dataclass
class EmissionState:
    """Per-vehicle wake sign, water-volume weight, and emission carry-over."""

    weight: float = 1.0
    weight_countdown: float = 0.0
    wake_sign: int = 1
    flip_countdown: float = 0.0
    # carry[side][mechanism]: fractional cluster quota carried across frames
    carry: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.carry is None:
            self.carry = np.zeros((2, 2))

    def wake_multiplier(self, side: int, asymmetry: float) -> float:
        sign = self.wake_sign if side == SIDE_LEFT else -self.wake_sign
        return 1.0 + asymmetry * sign


def volume_rate_tread_pickup(tire: TireSpec, v: float) -> float:
    """Water volume rate flung from the grooves: K * b * v * h_groove."""
    if v < 0.0:
        raise ValueError("vehicle speed must be >= 0")
    return (tire.groove_width_fraction * tire.contact_width_m * v
            * tire.groove_depth_m)


def volume_rate_side_wave(tire: TireSpec, v: float, water_depth: float) -> float:
    """Water volume rate pushed out at the contact patch:
    0.5 * b * v * (WD - K*h_groove - (1-K)*h_film), clamped at zero."""
    if v < 0.0:
        raise ValueError("vehicle speed must be >= 0")
    if water_depth < 0.0:
        raise ValueError("water depth must be >= 0")
    k = tire.groove_width_fraction
    budget = (water_depth - k * tire.groove_depth_m
              - (1.0 - k) * tire.film_depth_m)
    return max(0.0, 0.5 * tire.contact_width_m * v * budget)


def wake_update(state: EmissionState, dt: float, rng: np.random.Generator,
                params: SprayParams) -> EmissionState:
    """Advance the bi-stable wake sign and the time-varying volume weight.

    The sign holds for exponentially distributed intervals; the weight is
    piecewise-constant uniform noise resampled on a fixed interval.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    remaining = dt
    while remaining >= state.flip_countdown:
        remaining -= state.flip_countdown
        state.wake_sign = -state.wake_sign
        state.flip_countdown = float(rng.exponential(params.wake_flip_mean_s))
    state.flip_countdown -= remaining

    remaining = dt
    while remaining >= state.weight_countdown:
        remaining -= state.weight_countdown
        state.weight = float(rng.uniform(*params.weight_range))
        state.weight_countdown = params.weight_interval_s
    state.weight_countdown -= remaining
    return state


def _direction_from_angles(n: np.ndarray, l: np.ndarray, yaw: float,
                           mirror: np.ndarray) -> np.ndarray:
    """Unit emission directions from the planar angle pair.

    ``n`` rotates the straight-back axis within the ground plane (positive
    toward the vehicle's left); ``l`` lifts the result above horizontal.
    ``mirror`` = -1 flips n across the centerline for right-side emission.
    """
    n = n * mirror
    hx = -np.cos(n)
    hy = -np.sin(n)
    cos_l = np.cos(l)
    dirs = np.stack([cos_l * hx, cos_l * hy, np.sin(l)], axis=1)
    c, s = math.cos(yaw), math.sin(yaw)
    rot = dirs.copy()
    rot[:, 0] = c * dirs[:, 0] - s * dirs[:, 1]
    rot[:, 1] = s * dirs[:, 0] + c * dirs[:, 1]
    return rot


def _cluster_offsets(count: int, params: SprayParams,
                     rng: np.random.Generator) -> np.ndarray:
    k = max(params.cluster_size - 1, 0)
    if count == 0 or k == 0:
        return np.zeros((count, k, 3), dtype=np.float32)
    normals = rng.standard_normal((count, k, 3))
    norms = np.linalg.norm(normals, axis=2, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = params.cluster_radius_m * rng.uniform(size=(count, k, 1)) ** (1.0 / 3.0)
    return (normals / norms * radii).astype(np.float32)


def emit(vehicle: VehicleState, weather: WeatherConfig, road: RoadSurface,
         params: SprayParams, state: EmissionState, dt: float,
         rng: np.random.Generator, water_depth: float | None = None) -> ClusterSet:
    """Emit new clusters from both rear wheels for one time increment.

    The per-mechanism count is floor(weight * wake * VR * emission_scale * dt
    / cluster_volume + carry); the fractional remainder carries over to the
    next call. Counts above the per-wheel cap are discarded, not carried.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if water_depth is None:
        water_depth = water_film_depth(road, weather.rain_rate_mm_per_h)

    out = ClusterSet(params)
    v = vehicle.speed
    if v <= 0.0:
        return out

    tire = vehicle.tire
    # Grooves can hold at most the standing water actually on the road.
    wet_tire = replace(tire, groove_depth_m=min(water_depth, tire.groove_depth_m))
    cluster_volume = params.droplet_volume_m3 * params.cluster_size
    rates = (volume_rate_tread_pickup(wet_tire, v),
             volume_rate_side_wave(tire, v, water_depth))

    yaw = vehicle.yaw
    lat_dir = np.array([-math.sin(yaw), math.cos(yaw), 0.0])
    wake_sign = state.wake_sign

    for side in (SIDE_LEFT, SIDE_RIGHT):
        mult = state.wake_multiplier(side, params.wake_asymmetry)
        wheel_x, wheel_y = vehicle.wheel_world_xy(side)
        outward = 1.0 if side == SIDE_LEFT else -1.0
        r = tire.radius_m
        c, s = math.cos(yaw), math.sin(yaw)

        for mech, rate in ((MECH_TREAD, rates[0]), (MECH_SIDE, rates[1])):
            quota = (state.weight * mult * rate * params.emission_scale * dt
                     / cluster_volume + state.carry[side, mech])
            count = int(math.floor(quota))
            state.carry[side, mech] = quota - count
            count = min(count, params.max_clusters_per_wheel_per_frame)
            if count == 0:
                continue

            if mech == MECH_TREAD:
                n = rng.uniform(*params.tread_angle_n_rad, size=count)
                l = rng.uniform(*params.tread_angle_l_rad, size=count)
                mirror = np.where(rng.uniform(size=count) < 0.5, 1.0, -1.0)
                spawn_local = (-r * math.sin(_TREAD_RELEASE_ANGLE),
                               0.0,
                               r * (1.0 + math.cos(_TREAD_RELEASE_ANGLE)))
            else:
                n = rng.uniform(*params.side_angle_n_rad, size=count)
                l = rng.uniform(*params.side_angle_l_rad, size=count)
                mirror = np.full(count, outward)
                spawn_local = (0.0, outward * tire.contact_width_m / 2,
                               _SIDE_SPAWN_HEIGHT)

            dirs = _direction_from_angles(n, l, yaw, mirror)
            batch = ClusterSet(params)
            px = wheel_x + c * spawn_local[0] - s * spawn_local[1]
            py = wheel_y + s * spawn_local[0] + c * spawn_local[1]
            batch.pos = np.tile(np.array([px, py, spawn_local[2]]), (count, 1))
            batch.vel = dirs * v
            batch.lat_vel = np.tile(lat_dir * (params.lateral_speed_init_mps
                                               * wake_sign), (count, 1))
            batch.age = np.zeros(count)
            batch.offsets = _cluster_offsets(count, params, rng)
            batch.source_vehicle = np.full(count, vehicle.vehicle_id, dtype=np.int32)
            batch.source_side = np.full(count, side, dtype=np.int8)
            batch.mechanism = np.full(count, mech, dtype=np.int8)
            out.extend(batch)
    return out


def drag_coefficient_per_m(params: SprayParams) -> float:
    """k in a_drag = k * |w - v| * (w - v): rho_air * Cd * A / (2 m)."""
    area = math.pi * (params.droplet_diameter_m / 2) ** 2
    mass = params.water_density_kgpm3 * params.droplet_volume_m3
    return params.air_density_kgpm3 * params.drag_cd * area / (2.0 * mass)


def integrate(clusters: ClusterSet, weather: WeatherConfig, dt_frame: float,
              params: SprayParams) -> ClusterSet:
    """Advance clusters by one frame in fixed substeps.

    Velocity uses an Euler update with drag frozen per substep; position
    uses the trapezoid of the velocity, which is exact for the ballistic
    part. The lateral wake velocity contributes to position and decays
    exponentially each substep.
    """
    if dt_frame <= 0.0:
        raise ValueError("dt_frame must be > 0")
    if len(clusters) == 0:
        clusters.age += dt_frame
        return clusters

    nsub = max(1, round(dt_frame / params.substep_dt_s))
    h = dt_frame / nsub
    k = drag_coefficient_per_m(params)
    g = np.array([0.0, 0.0, -GRAVITY])
    wind = np.asarray(weather.wind_velocity_mps, dtype=float)
    decay = math.exp(-h / params.lateral_decay_tau_s)

    pos, vel, lat = clusters.pos, clusters.vel, clusters.lat_vel
    for _ in range(nsub):
        rel = wind - vel
        accel = g + k * np.linalg.norm(rel, axis=1, keepdims=True) * rel
        pos += vel * h + 0.5 * accel * h * h + lat * h
        vel += accel * h
        lat *= decay
    clusters.age += dt_frame
    return clusters


def annihilate(clusters: ClusterSet, scene: Scene, lidar_origin: np.ndarray,
               params: SprayParams) -> tuple[ClusterSet, dict[str, int]]:
    """Remove clusters that hit something, fly out of range, or expire.

    A cluster dies when its center touches the ground plane or a vehicle
    box, when it is farther than max_range_m from the LiDAR, or when it is
    older than max_age_s. The emitting vehicle's own box is exempt: spray
    is born at the tires, inside that box, and escapes through the wheel
    well. Collision takes precedence in the per-reason counts, then range,
    then age.
    """
    n = len(clusters)
    if n == 0:
        return clusters, {r: 0 for r in ANNIHILATION_REASONS}

    pos = clusters.pos
    collision = pos[:, 2] <= 0.0
    for v in scene.vehicles:
        dx = pos[:, 0] - v.x
        dy = pos[:, 1] - v.y
        c, s = math.cos(v.yaw), math.sin(v.yaw)
        bx = c * dx + s * dy
        by = -s * dx + c * dy
        half_l, half_w, height = v.box_size[0] / 2, v.box_size[1] / 2, v.box_size[2]
        inside = ((np.abs(bx) <= half_l) & (np.abs(by) <= half_w)
                  & (pos[:, 2] <= height)
                  & (clusters.source_vehicle != v.vehicle_id))
        collision |= inside

    dist = np.linalg.norm(pos - np.asarray(lidar_origin), axis=1)
    out_of_range = dist > params.max_range_m
    expired = clusters.age > params.max_age_s

    removed_collision = collision
    removed_range = out_of_range & ~collision
    removed_age = expired & ~collision & ~out_of_range
    keep = ~(collision | out_of_range | expired)

    counts = {
        "collision": int(np.count_nonzero(removed_collision)),
        "range": int(np.count_nonzero(removed_range)),
        "age": int(np.count_nonzero(removed_age)),
    }
    return clusters.select(keep), counts


class SpraySim:
    """Cross-frame spray state for one scenario: per-vehicle emission states,
    RNG substreams, the alive cluster set, and conservation counters."""

    def __init__(self, scene: Scene):
        self.params = scene.config.spray
        self.clusters = ClusterSet(self.params)
        self.states: dict[int, EmissionState] = {}
        self.emit_rngs: dict[int, np.random.Generator] = {}
        self.wake_rngs: dict[int, np.random.Generator] = {}
        self.emitted_total = 0
        self.annihilated_total = {r: 0 for r in ANNIHILATION_REASONS}
        seed = scene.seed
        for v in scene.vehicles:
            self.states[v.vehicle_id] = EmissionState()
            self.emit_rngs[v.vehicle_id] = substream(seed, _RNG_EMIT, v.vehicle_id)
            self.wake_rngs[v.vehicle_id] = substream(seed, _RNG_WAKE, v.vehicle_id)

    def advance(self, scene: Scene, dt: float) -> dict[str, int]:
        """Run one frame of wake update, emission, flight, and annihilation."""
        emitted = 0
        for v in scene.vehicles:
            state = self.states[v.vehicle_id]
            wake_update(state, dt, self.wake_rngs[v.vehicle_id], self.params)
            fresh = emit(v, scene.weather, scene.road, self.params, state, dt,
                         self.emit_rngs[v.vehicle_id], water_depth=scene.water_depth)
            emitted += len(fresh)
            self.clusters.extend(fresh)
        integrate(self.clusters, scene.weather, dt, self.params)
        self.clusters, counts = annihilate(self.clusters, scene,
                                           scene.lidar_origin(), self.params)
        self.emitted_total += emitted
        for reason, c in counts.items():
            self.annihilated_total[reason] += c
        stats = {"emitted": emitted, "alive": len(self.clusters)}
        stats.update({f"annihilated_{r}": counts[r] for r in ANNIHILATION_REASONS})
        return stats
