"""World model: flat road, resolved weather, kinematic highway traffic.

Traffic is a straight-corridor kinematic stand-in for a full driving
simulator: vehicles hold lane and speed, and anything that leaves the
corridor around the ego respawns behind it with freshly sampled speed and
lane. Vehicles are oriented boxes; there is no interaction between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import (
    ConfigError,
    ScenarioConfig,
    TireSpec,
    WeatherConfig,
    RoadSurface,
    default_attenuation_alpha,
    default_weather_class,
    derive_rear_wheel_offsets,
)
from .rng import substream

# Semantic class ids, shared by the whole pipeline and the on-disk formats.
CLASS_NONE = 0
CLASS_GROUND = 1
CLASS_VEHICLE = 2
CLASS_SPRAY = 3

CLASS_NAMES = {CLASS_NONE: "none", CLASS_GROUND: "ground",
               CLASS_VEHICLE: "vehicle", CLASS_SPRAY: "spray"}

_RNG_TRAFFIC = 0x11


@dataclass
class VehicleState:
    """One vehicle as an oriented box on the ground plane."""

    vehicle_id: int
    x: float
    y: float
    z: float
    yaw: float
    speed: float  # m/s
    box_size: tuple[float, float, float]  # length, width, height
    tire: TireSpec
    rear_wheel_offsets: tuple[tuple[float, float], tuple[float, float]]
    albedo_rgb: tuple[float, float, float]
    semantic_class: int = CLASS_VEHICLE

    @property
    def pose(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.z, self.yaw)

    def wheel_world_xy(self, side: int) -> tuple[float, float]:
        """World-frame xy of a rear wheel center; side 0 = left, 1 = right."""
        ox, oy = self.rear_wheel_offsets[side]
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return (self.x + c * ox - s * oy, self.y + s * ox + c * oy)


@dataclass
class Scene:
    """Mutable simulation state; step() advances it by one time increment."""

    config: ScenarioConfig
    weather: WeatherConfig
    road: RoadSurface
    vehicles: list[VehicleState]
    water_depth: float
    time_s: float = 0.0
    frame_index: int = 0
    _rng: np.random.Generator = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def ego(self) -> VehicleState:
        return self.vehicles[0]

    @property
    def seed(self) -> int:
        return self.config.rng_seed

    def lidar_origin(self) -> np.ndarray:
        ego = self.ego
        return np.array([ego.x, ego.y, ego.z + self.config.lidar.mount_height_m])

    def copy(self) -> "Scene":
        """Deep-enough copy for what-if stepping; RNG state is duplicated."""
        vehicles = [dataclasses_replace_vehicle(v) for v in self.vehicles]
        clone = Scene(self.config, self.weather, self.road, vehicles,
                      self.water_depth, self.time_s, self.frame_index)
        clone._rng = np.random.default_rng()
        clone._rng.bit_generator.state = self._rng.bit_generator.state
        return clone

    def state_dict(self) -> dict:
        """Serializable snapshot used by determinism checks."""
        return {
            "time_s": self.time_s,
            "frame_index": self.frame_index,
            "weather": {
                "rain_rate_mm_per_h": self.weather.rain_rate_mm_per_h,
                "weather_class": self.weather.weather_class,
                "attenuation_alpha_per_m": self.weather.attenuation_alpha_per_m,
            },
            "vehicles": [
                {"id": v.vehicle_id, "pose": list(v.pose), "speed": v.speed,
                 "box_size": list(v.box_size)}
                for v in self.vehicles
            ],
        }


def dataclasses_replace_vehicle(v: VehicleState) -> VehicleState:
    return VehicleState(v.vehicle_id, v.x, v.y, v.z, v.yaw, v.speed, v.box_size,
                        v.tire, v.rear_wheel_offsets, v.albedo_rgb, v.semantic_class)


def water_film_depth(road: RoadSurface, rain_rate: float) -> float:
    """Standing-water film thickness from the empirical fit
    6e-4 * T^0.09 * (L*I)^0.6 * S^-0.33; zero when it is not raining."""
    if road.slope <= 0.0:
        raise ValueError("road.slope must be > 0 (formula is singular at zero slope)")
    if road.drainage_length <= 0.0:
        raise ValueError("road.drainage_length must be > 0")
    if road.texture_depth < 0.0:
        raise ValueError("road.texture_depth must be >= 0")
    if rain_rate < 0.0:
        raise ValueError("rain rate must be >= 0")
    if rain_rate == 0.0:
        return 0.0
    return (6e-4 * road.texture_depth**0.09
            * (road.drainage_length * rain_rate)**0.6
            * road.slope**-0.33)


def resolve_weather(config: ScenarioConfig, rng: np.random.Generator) -> WeatherConfig:
    spec = config.weather
    rate = spec.rain_rate_mm_per_h
    if isinstance(rate, tuple):
        rate = float(rng.uniform(rate[0], rate[1]))
    alpha = spec.attenuation_alpha_per_m
    if alpha is None:
        alpha = default_attenuation_alpha(rate)
    wclass = spec.weather_class or default_weather_class(rate)
    return WeatherConfig(rate, wclass, spec.wind_velocity_mps, alpha)


def _spawn_vehicle(vid: int, ego: VehicleState, config: ScenarioConfig,
                   rng: np.random.Generator, rel_x: float | None = None) -> VehicleState:
    traffic = config.traffic
    if rel_x is None:
        rel_x = float(rng.uniform(*traffic.spawn_ahead_range_m))
    lane = float(traffic.lane_offsets_m[int(rng.integers(len(traffic.lane_offsets_m)))])
    speed = float(rng.uniform(*traffic.speed_mps_range))
    albedo = traffic.albedo_palette[int(rng.integers(len(traffic.albedo_palette)))]
    offsets = derive_rear_wheel_offsets(traffic.box_size_m, traffic.tire)
    return VehicleState(vid, ego.x + rel_x, lane, 0.0, 0.0, speed,
                        traffic.box_size_m, traffic.tire, offsets, albedo)


def build_scenario(config: ScenarioConfig) -> Scene:
    """Materialize frame-0 state: resolved weather, ego, sampled traffic."""
    if not isinstance(config, ScenarioConfig):
        raise ConfigError("", "expected a ScenarioConfig")
    rng = substream(config.rng_seed, _RNG_TRAFFIC)
    weather = resolve_weather(config, rng)
    water_depth = water_film_depth(config.road, weather.rain_rate_mm_per_h)

    ego_cfg = config.ego
    offsets = ego_cfg.rear_wheel_offsets_m
    if offsets is None:
        offsets = derive_rear_wheel_offsets(ego_cfg.box_size_m, ego_cfg.tire)
    ego = VehicleState(0, 0.0, ego_cfg.lane_offset_m, 0.0, 0.0, ego_cfg.speed_mps,
                       ego_cfg.box_size_m, ego_cfg.tire, offsets, ego_cfg.albedo_rgb)

    lo, hi = config.traffic.count_range
    count = int(rng.integers(lo, hi + 1))
    vehicles = [ego]
    for i in range(count):
        vehicles.append(_spawn_vehicle(i + 1, ego, config, rng))

    scene = Scene(config, weather, config.road, vehicles, water_depth)
    scene._rng = rng
    return scene


def step(scene: Scene, dt: float) -> Scene:
    """Advance all vehicles by straight-lane kinematics; recycle traffic that
    leaves the corridor around the ego."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    for v in scene.vehicles:
        v.x += v.speed * dt * math.cos(v.yaw)
        v.y += v.speed * dt * math.sin(v.yaw)
    ego = scene.ego
    traffic = scene.config.traffic
    for v in scene.vehicles[1:]:
        rel = v.x - ego.x
        if rel > traffic.corridor_ahead_m or rel < -traffic.corridor_behind_m:
            rng = scene._rng
            rel_x = float(rng.uniform(-traffic.corridor_behind_m + 1.0,
                                      -traffic.corridor_behind_m * 0.5))
            fresh = _spawn_vehicle(v.vehicle_id, ego, scene.config, rng, rel_x=rel_x)
            v.x, v.y, v.yaw = fresh.x, fresh.y, fresh.yaw
            v.speed, v.albedo_rgb = fresh.speed, fresh.albedo_rgb
    scene.time_s += dt
    return scene
