"""Mechanical rotating LiDAR: beam pattern, ray casting, range rasters.

All rays of a revolution share one origin and timestamp (no intra-frame
motion blur). Solid targets are the ground plane and vehicle boxes; droplet
clusters intercept a beam probabilistically with p = kappa * cross-section
/ beam footprint. Randomness (interception, receiver drop-off) comes from
counter-based streams keyed by (frame, channel, azimuth, slot), so the
scalar cast() and the vectorized scan_frame() produce identical results
and rays may be evaluated in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import LidarModel
from .raster import RangeRaster
from .rng import (
    STREAM_DROPOFF,
    STREAM_INTERCEPT,
    STREAM_SPRAY_NOISE,
    CounterRng,
)
from .scene import CLASS_GROUND, CLASS_NONE, CLASS_SPRAY, CLASS_VEHICLE, Scene
from .spray import ClusterSet

RASTER_CHANNELS = ("depth", "albedo_r", "albedo_g", "albedo_b",
                   "semantic_id", "weather_id", "drop_mask", "rgb_valid")


class FrameStreams:
    """Counter-based RNG substreams bound to one (seed, frame_index)."""

    def __init__(self, seed: int, frame_index: int):
        self.frame_index = int(frame_index)
        self.intercept = CounterRng(seed, STREAM_INTERCEPT)
        self.dropoff = CounterRng(seed, STREAM_DROPOFF)
        self.spray_noise = CounterRng(seed, STREAM_SPRAY_NOISE)

    def intercept_u(self, channel, azimuth, slot):
        return self.intercept.uniform(self.frame_index, channel, azimuth, slot)

    def dropoff_u(self, channel, azimuth):
        return self.dropoff.uniform(self.frame_index, channel, azimuth)

    def spray_normal(self, channel, azimuth):
        return self.spray_noise.normal(self.frame_index, channel, azimuth)


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]
    channel: int
    azimuth_index: int


@dataclass
class Hit:
    range_m: float
    point: np.ndarray | None
    hit_class: int
    target_albedo: tuple[float, float, float]
    target_id: int
    dropped: bool
    channel: int
    azimuth_index: int


@dataclass
class LidarFrame:
    """One revolution: per-beam hit grid plus the extracted point list."""

    frame_index: int
    timestamp: float
    ego_pose: tuple[float, float, float, float]
    origin: np.ndarray
    model: LidarModel
    weather_class_id: int
    grid_range: np.ndarray      # (C, A) float64, +inf where no return
    grid_class: np.ndarray      # (C, A) uint8
    grid_target: np.ndarray     # (C, A) int32, -1 where not a vehicle
    grid_albedo: np.ndarray     # (C, A, 3) float32
    grid_dropped: np.ndarray    # (C, A) bool
    grid_intensity: np.ndarray  # (C, A) float64, -1 sentinel until assigned
    point_xyz: np.ndarray       # (N, 3) float64, non-dropped hits
    point_class: np.ndarray     # (N,) uint8
    point_channel: np.ndarray   # (N,) int32
    point_azimuth: np.ndarray   # (N,) int32
    point_range: np.ndarray     # (N,) float64

    @property
    def n_points(self) -> int:
        return self.point_xyz.shape[0]

    def point_intensities(self) -> np.ndarray:
        return self.grid_intensity[self.point_channel, self.point_azimuth]

    def intensities_assigned(self) -> bool:
        return bool(np.all(self.point_intensities() >= 0.0))

    @property
    def points(self) -> np.ndarray:
        """N x 4 (x, y, z, intensity) view of the non-dropped returns."""
        return np.column_stack([self.point_xyz, self.point_intensities()])

    def tobytes(self) -> bytes:
        """Canonical byte image for determinism checks."""
        parts = (self.grid_range, self.grid_class, self.grid_target,
                 self.grid_albedo, self.grid_dropped, self.grid_intensity,
                 self.point_xyz, self.point_class)
        return b"".join(a.tobytes() for a in parts)


def beam_pattern(model: LidarModel) -> tuple[np.ndarray, np.ndarray]:
    """Elevations (channels, ascending, radians) and azimuths ([0, 2pi))."""
    lo, hi = model.vfov_deg
    if model.channels == 1:
        elev = np.array([math.radians(lo)])
    else:
        elev = np.radians(np.linspace(lo, hi, model.channels))
    az = np.arange(model.azimuth_steps) * (2.0 * np.pi / model.azimuth_steps)
    return elev, az


@lru_cache(maxsize=4)
def _sensor_directions(model: LidarModel) -> np.ndarray:
    """(C, A, 3) unit direction grid in the sensor frame (x forward)."""
    elev, az = beam_pattern(model)
    cos_e = np.cos(elev)[:, None]
    dirs = np.empty((model.channels, model.azimuth_steps, 3))
    dirs[:, :, 0] = cos_e * np.cos(az)[None, :]
    dirs[:, :, 1] = cos_e * np.sin(az)[None, :]
    dirs[:, :, 2] = np.sin(elev)[:, None]
    return dirs


def _rotate_xy(vecs: np.ndarray, yaw: float) -> np.ndarray:
    if yaw == 0.0:
        return vecs
    c, s = math.cos(yaw), math.sin(yaw)
    out = vecs.copy()
    out[..., 0] = c * vecs[..., 0] - s * vecs[..., 1]
    out[..., 1] = s * vecs[..., 0] + c * vecs[..., 1]
    return out


def _box_intersect(origin: np.ndarray, dirs: np.ndarray, vehicle,
                   max_range: float) -> np.ndarray:
    """Slab test of rays against one vehicle box; +inf where missed.

    The box rests on the ground: local x in [-L/2, L/2], y in [-W/2, W/2],
    z in [0, H].
    """
    c, s = math.cos(vehicle.yaw), math.sin(vehicle.yaw)
    ox = origin[0] - vehicle.x
    oy = origin[1] - vehicle.y
    o_local = np.array([c * ox + s * oy, -s * ox + c * oy, origin[2]])
    d_local = np.empty_like(dirs)
    d_local[..., 0] = c * dirs[..., 0] + s * dirs[..., 1]
    d_local[..., 1] = -s * dirs[..., 0] + c * dirs[..., 1]
    d_local[..., 2] = dirs[..., 2]
    # Avoid 0/0 NaNs in the slab division; sign survives for the inf cases.
    d_safe = np.where(d_local == 0.0, 1e-300, d_local)

    half_l, half_w = vehicle.box_size[0] / 2, vehicle.box_size[1] / 2
    height = vehicle.box_size[2]
    lo = np.array([-half_l, -half_w, 0.0])
    hi = np.array([half_l, half_w, height])
    t1 = (lo - o_local) / d_safe
    t2 = (hi - o_local) / d_safe
    tmin = np.minimum(t1, t2).max(axis=-1)
    tmax = np.maximum(t1, t2).min(axis=-1)
    hit = (tmax >= tmin) & (tmin > 0.0) & (tmin <= max_range)
    return np.where(hit, tmin, np.inf)


def _intercept_probability(t: np.ndarray, model: LidarModel,
                           cluster_size: int, droplet_diameter: float) -> np.ndarray:
    """Chance a beam is returned by a cluster at range t: total droplet
    cross-section over the diverged beam footprint, scaled by kappa."""
    footprint_r = t * model.beam_divergence_rad / 2.0
    cross = cluster_size * (droplet_diameter / 2.0) ** 2
    with np.errstate(divide="ignore"):
        p = model.intercept_gain_kappa * cross / footprint_r**2
    return np.clip(p, 0.0, 1.0)


def _solid_ranges(scene: Scene, origin: np.ndarray, dirs_world: np.ndarray,
                  model: LidarModel):
    """Ground + vehicle box intersections for a direction grid."""
    shape = dirs_world.shape[:-1]
    dir_z = dirs_world[..., 2]
    with np.errstate(divide="ignore"):
        t_ground = np.where(dir_z < 0.0, -origin[2] / dir_z, np.inf)
    t_ground = np.where(t_ground <= model.max_range_m, t_ground, np.inf)

    grid_range = np.asarray(t_ground, dtype=float).copy()
    grid_class = np.where(np.isfinite(grid_range), CLASS_GROUND,
                          CLASS_NONE).astype(np.uint8)
    grid_target = np.full(shape, -1, dtype=np.int32)
    for v in scene.vehicles[1:]:  # the sensor never sees its own vehicle
        t = _box_intersect(origin, dirs_world, v, model.max_range_m)
        closer = t < grid_range
        grid_range[closer] = t[closer]
        grid_class[closer] = CLASS_VEHICLE
        grid_target[closer] = v.vehicle_id
    return grid_range, grid_class, grid_target


def cast(ray: Ray, scene: Scene, clusters: ClusterSet,
         streams: FrameStreams) -> Hit:
    """Cast a single ray; reference path for the vectorized scan.

    Candidates along the ray are the ground plane, vehicle boxes, and any
    droplet cluster whose center passes within (cluster radius + beam
    footprint) of the axis. Cluster candidates are transparent with
    probability 1 - p_int; the first non-transmitted candidate wins.
    """
    origin = np.asarray(ray.origin, dtype=float)
    direction = np.asarray(ray.direction, dtype=float)
    model = scene.config.lidar
    d_grid = direction[None, None, :]
    grid_range, grid_class, grid_target = _solid_ranges(scene, origin, d_grid, model)
    solid_t = float(grid_range[0, 0])
    solid_class = int(grid_class[0, 0])
    solid_target = int(grid_target[0, 0])

    best_t, best_class, best_target = solid_t, solid_class, solid_target
    if len(clusters) > 0:
        rel = clusters.pos - origin
        t = np.einsum("ij,ij->i", rel, np.broadcast_to(direction, rel.shape))
        r2 = np.einsum("ij,ij->i", rel, rel)
        perp2 = r2 - t * t
        r_acc = clusters.params.cluster_radius_m + t * model.beam_divergence_rad / 2.0
        accepted = ((t > 0.0) & (t <= model.max_range_m)
                    & (perp2 <= r_acc * r_acc) & (t < solid_t))
        idx = np.flatnonzero(accepted)
        if idx.size:
            order = np.argsort(t[idx], kind="stable")
            cand_t = t[idx][order]
            p = _intercept_probability(cand_t, model, clusters.params.cluster_size,
                                       clusters.params.droplet_diameter_m)
            for slot, (tc, pc) in enumerate(zip(cand_t, p)):
                u = float(streams.intercept_u(ray.channel, ray.azimuth_index, slot))
                if u < pc:
                    best_t, best_class, best_target = float(tc), CLASS_SPRAY, -1
                    break

    if not np.isfinite(best_t):
        return Hit(math.inf, None, CLASS_NONE, (0.0, 0.0, 0.0), -1, False,
                   ray.channel, ray.azimuth_index)
    albedo = _target_albedo(scene, best_class, best_target)
    point = origin + best_t * direction
    return Hit(best_t, point, best_class, albedo, best_target, False,
               ray.channel, ray.azimuth_index)


def _target_albedo(scene: Scene, hit_class: int, target_id: int
                   ) -> tuple[float, float, float]:
    if hit_class == CLASS_GROUND:
        return scene.road.albedo_rgb
    if hit_class == CLASS_VEHICLE:
        for v in scene.vehicles:
            if v.vehicle_id == target_id:
                return v.albedo_rgb
    return (0.0, 0.0, 0.0)


def apply_dropoff(hit: Hit, streams: FrameStreams, drop_probability: float) -> Hit:
    """Mark the hit dropped with the receiver drop probability.

    Dropped hits keep their grid cell (they feed the drop-off mask) but are
    excluded from the point list.
    """
    if hit.hit_class == CLASS_NONE:
        raise ValueError("apply_dropoff requires an actual return")
    u = float(streams.dropoff_u(hit.channel, hit.azimuth_index))
    hit.dropped = u < drop_probability
    return hit


def _spray_returns(clusters: ClusterSet, origin: np.ndarray, yaw: float,
                   model: LidarModel, elev: np.ndarray, grid_range: np.ndarray,
                   dirs_world: np.ndarray, streams: FrameStreams):
    """Resolve beam-cluster interceptions for the whole revolution.

    Clusters are binned to the beams whose axis can pass within the
    acceptance radius (a superset box in sensor-frame elevation/azimuth),
    then tested exactly with world-frame dot products. Per beam, candidates
    are walked in range order with one uniform draw per slot; the
    arithmetic matches cast() bit for bit.
    """
    C, A = model.channels, model.azimuth_steps
    rel_world = clusters.pos - origin
    rel = _rotate_xy(rel_world, -yaw)
    r2 = np.einsum("ij,ij->i", rel_world, rel_world)
    r = np.sqrt(r2)
    near = (r > 1e-9) & (r <= model.max_range_m + 1.0)
    idx0 = np.flatnonzero(near)
    if idx0.size == 0:
        return None
    rel_world = rel_world[idx0]
    rel = rel[idx0]
    r = r[idx0]
    r2 = r2[idx0]

    c_radius = clusters.params.cluster_radius_m
    e_cl = np.arcsin(np.clip(rel[:, 2] / r, -1.0, 1.0))
    a_cl = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2.0 * np.pi)
    sin_delta = np.minimum((c_radius + r * model.beam_divergence_rad / 2.0) / r, 1.0)
    delta = np.arcsin(sin_delta) + 1e-12

    e0 = elev[0]
    de = (elev[-1] - elev[0]) / (C - 1) if C > 1 else 1.0
    clo = np.ceil((e_cl - delta - e0) / de).astype(np.int64)
    chi = np.floor((e_cl + delta - e0) / de).astype(np.int64)
    clo = np.maximum(clo, 0)
    chi = np.minimum(chi, C - 1)

    da = 2.0 * np.pi / A
    cos_e = np.cos(e_cl)
    half = np.arcsin(np.minimum(sin_delta / np.maximum(cos_e, 1e-9), 1.0)) + 1e-12
    jlo = np.ceil((a_cl - half) / da).astype(np.int64)
    jhi = np.floor((a_cl + half) / da).astype(np.int64)

    nc = np.maximum(chi - clo + 1, 0)
    nj = np.minimum(np.maximum(jhi - jlo + 1, 0), A)
    counts = nc * nj
    total = int(counts.sum())
    if total == 0:
        return None

    pc = np.repeat(np.arange(idx0.size), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    ordinal = np.arange(total) - starts
    ch = clo[pc] + ordinal // nj[pc]
    jj = np.mod(jlo[pc] + ordinal % nj[pc], A)

    d = dirs_world[ch, jj]
    t = np.einsum("ij,ij->i", rel_world[pc], d)
    perp2 = r2[pc] - t * t
    r_acc = c_radius + t * model.beam_divergence_rad / 2.0
    beam = ch * A + jj
    accept = ((t > 0.0) & (t <= model.max_range_m) & (perp2 <= r_acc * r_acc)
              & (t < grid_range.ravel()[beam]))
    if not accept.any():
        return None
    ch, jj, t, beam = ch[accept], jj[accept], t[accept], beam[accept]

    order = np.lexsort((t, beam))
    ch, jj, t, beam = ch[order], jj[order], t[order], beam[order]
    start_flag = np.empty(beam.size, dtype=bool)
    start_flag[0] = True
    start_flag[1:] = beam[1:] != beam[:-1]
    pos = np.arange(beam.size)
    slot = pos - np.maximum.accumulate(np.where(start_flag, pos, 0))

    u = streams.intercept.uniform(streams.frame_index, ch, jj, slot)
    p = _intercept_probability(t, model, clusters.params.cluster_size,
                               clusters.params.droplet_diameter_m)
    win = np.flatnonzero(u < p)
    if win.size == 0:
        return None
    _, first = np.unique(beam[win], return_index=True)
    chosen = win[first]
    return ch[chosen], jj[chosen], t[chosen]


def scan_frame(scene: Scene, clusters: ClusterSet, model: LidarModel,
               streams: FrameStreams | None = None) -> LidarFrame:
    """Scan one revolution from the ego mount pose."""
    if streams is None:
        streams = FrameStreams(scene.seed, scene.frame_index)
    C, A = model.channels, model.azimuth_steps
    elev, _ = beam_pattern(model)
    dirs = _sensor_directions(model)
    ego = scene.ego
    origin = scene.lidar_origin()
    dirs_world = _rotate_xy(dirs, ego.yaw)

    grid_range, grid_class, grid_target = _solid_ranges(scene, origin,
                                                        dirs_world, model)

    if len(clusters) > 0:
        spray = _spray_returns(clusters, origin, ego.yaw, model, elev,
                               grid_range, dirs_world, streams)
        if spray is not None:
            s_ch, s_jj, s_t = spray
            grid_range[s_ch, s_jj] = s_t
            grid_class[s_ch, s_jj] = CLASS_SPRAY
            grid_target[s_ch, s_jj] = -1

    grid_albedo = np.zeros((C, A, 3), dtype=np.float32)
    grid_albedo[grid_class == CLASS_GROUND] = np.asarray(scene.road.albedo_rgb,
                                                         dtype=np.float32)
    for v in scene.vehicles[1:]:
        mask = grid_target == v.vehicle_id
        if mask.any():
            grid_albedo[mask] = np.asarray(v.albedo_rgb, dtype=np.float32)

    hit_mask = grid_class != CLASS_NONE
    u = streams.dropoff.uniform(streams.frame_index,
                                np.arange(C, dtype=np.int64)[:, None],
                                np.arange(A, dtype=np.int64)[None, :])
    grid_dropped = hit_mask & (u < model.drop_probability)

    pmask = hit_mask & ~grid_dropped
    p_ch, p_jj = np.nonzero(pmask)
    t = grid_range[p_ch, p_jj]
    point_xyz = origin[None, :] + t[:, None] * dirs_world[p_ch, p_jj]

    return LidarFrame(
        frame_index=scene.frame_index,
        timestamp=scene.time_s,
        ego_pose=ego.pose,
        origin=origin,
        model=model,
        weather_class_id=scene.weather.weather_class_id,
        grid_range=grid_range,
        grid_class=grid_class,
        grid_target=grid_target,
        grid_albedo=grid_albedo,
        grid_dropped=grid_dropped,
        grid_intensity=np.full((C, A), -1.0),
        point_xyz=point_xyz,
        point_class=grid_class[p_ch, p_jj],
        point_channel=p_ch.astype(np.int32),
        point_azimuth=p_jj.astype(np.int32),
        point_range=t,
    )


def project_range_raster(frame: LidarFrame, width: int, sector: str = "front",
                         include_intensity: bool = False) -> RangeRaster:
    """Project the hit grid into a multi-channel range image.

    The sector covers width azimuth columns centered on +x (front) or -x
    (rear) in the sensor frame; row 0 is the top beam. Column c maps to
    azimuth index (center + c - width // 2) mod A, so columns sweep from
    the right edge of the sector to its left edge in azimuth order.
    """
    model = frame.model
    A = model.azimuth_steps
    if not 1 <= width <= A:
        raise ValueError(f"width must be in [1, {A}], got {width}")
    if sector not in ("front", "rear"):
        raise ValueError("sector must be 'front' or 'rear'")
    center = 0 if sector == "front" else A // 2
    cols = np.mod(center + np.arange(width) - width // 2, A)

    def plane(grid: np.ndarray) -> np.ndarray:
        return grid[::-1, :][:, cols].astype(np.float32)

    hit = frame.grid_class != CLASS_NONE
    depth = plane(np.where(hit, frame.grid_range, 0.0))
    planes = [
        depth,
        plane(frame.grid_albedo[:, :, 0]),
        plane(frame.grid_albedo[:, :, 1]),
        plane(frame.grid_albedo[:, :, 2]),
        plane(frame.grid_class.astype(np.float64)),
        np.full_like(depth, float(frame.weather_class_id)),
        plane(frame.grid_dropped.astype(np.float64)),
        plane(hit.astype(np.float64)),
    ]
    names = list(RASTER_CHANNELS)
    if include_intensity:
        planes.append(plane(np.where(hit, frame.grid_intensity, 0.0)))
        names.append("intensity")
    data = np.stack(planes, axis=0)
    return RangeRaster.create(data, names, frame_index=frame.frame_index,
                              sector=sector)
