"""Scenario configuration: typed parameter objects and strict JSON loading.

A scenario is one JSON document. Every key has a default, unknown keys are
rejected, and validation errors name the offending field with a dotted path
(e.g. ``road.slope``). Speeds are accepted in km/h at the boundary and
stored in m/s internally; angles are accepted in degrees and stored in
radians.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

WEATHER_CLASSES = ("clear", "wet_ground", "light_rain", "heavy_rain")

KMH_TO_MPS = 1.0 / 3.6
DEG_TO_RAD = math.pi / 180.0


class ConfigError(ValueError):
    """A scenario document failed validation; ``field`` is the dotted path."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


def luminance(rgb) -> float:
    """Rec. 709 luma of an RGB triple in [0, 1]."""
    r, g, b = float(rgb[0]), float(rgb[1]), float(rgb[2])
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


def default_attenuation_alpha(rain_rate_mm_per_h: float) -> float:
    """One-way extinction coefficient (1/m) from rain rate; config-overridable."""
    if rain_rate_mm_per_h <= 0.0:
        return 0.0
    return 0.01 * (rain_rate_mm_per_h / 10.0) ** 0.6


def default_weather_class(rain_rate_mm_per_h: float) -> str:
    """Segment-level weather label from rain rate when not set explicitly."""
    if rain_rate_mm_per_h <= 0.0:
        return "clear"
    if rain_rate_mm_per_h <= 2.0:
        return "wet_ground"
    if rain_rate_mm_per_h <= 45.0:
        return "light_rain"
    return "heavy_rain"


# ---------------------------------------------------------------------------
# Parameter objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeatherSpec:
    """Declarative weather; rain rate may be a (lo, hi) interval sampled once
    per scenario at build time."""

    rain_rate_mm_per_h: float | tuple[float, float] = 45.0
    weather_class: str | None = None
    wind_velocity_mps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    attenuation_alpha_per_m: float | None = None


@dataclass(frozen=True)
class WeatherConfig:
    """Resolved weather state shared by every frame of a scenario."""

    rain_rate_mm_per_h: float
    weather_class: str
    wind_velocity_mps: tuple[float, float, float]
    attenuation_alpha_per_m: float

    @property
    def weather_class_id(self) -> int:
        return WEATHER_CLASSES.index(self.weather_class)


@dataclass(frozen=True)
class RoadSurface:
    """Flat z=0 road plane with the empirical water-film parameters."""

    texture_depth: float = 0.8
    drainage_length: float = 3.5
    slope: float = 0.02
    extent: tuple[float, float, float, float] = (-200.0, 400.0, -20.0, 20.0)
    albedo_rgb: tuple[float, float, float] = (0.25, 0.25, 0.26)


@dataclass(frozen=True)
class TireSpec:
    groove_width_fraction: float = 0.3
    contact_width_m: float = 0.25
    groove_depth_m: float = 0.0035
    film_depth_m: float = 0.001
    radius_m: float = 0.35


@dataclass(frozen=True)
class EgoConfig:
    speed_mps: float = 100.0 * KMH_TO_MPS
    lane_offset_m: float = 0.0
    box_size_m: tuple[float, float, float] = (4.7, 1.9, 1.6)
    albedo_rgb: tuple[float, float, float] = (0.9, 0.9, 0.9)
    tire: TireSpec = field(default_factory=TireSpec)
    rear_wheel_offsets_m: tuple[tuple[float, float], tuple[float, float]] | None = None


_DEFAULT_PALETTE = (
    (0.90, 0.90, 0.90),  # white
    (0.08, 0.08, 0.08),  # black
    (0.55, 0.57, 0.60),  # silver
    (0.45, 0.10, 0.10),  # dark red
    (0.10, 0.15, 0.40),  # blue
    (0.35, 0.35, 0.35),  # grey
)


@dataclass(frozen=True)
class TrafficConfig:
    count_range: tuple[int, int] = (1, 6)
    speed_mps_range: tuple[float, float] = (80.0 * KMH_TO_MPS, 100.0 * KMH_TO_MPS)
    lane_offsets_m: tuple[float, ...] = (-3.75, 0.0, 3.75)
    spawn_ahead_range_m: tuple[float, float] = (5.0, 60.0)
    corridor_ahead_m: float = 80.0
    corridor_behind_m: float = 40.0
    box_size_m: tuple[float, float, float] = (4.7, 1.9, 1.6)
    albedo_palette: tuple[tuple[float, float, float], ...] = _DEFAULT_PALETTE
    tire: TireSpec = field(default_factory=TireSpec)


@dataclass(frozen=True)
class SprayParams:
    """Droplet emission and flight parameters."""

    droplet_diameter_m: float = 1e-3
    cluster_size: int = 10
    cluster_radius_m: float = 5e-3
    weight_interval_s: float = 0.1
    weight_range: tuple[float, float] = (0.5, 1.5)
    # Emission direction sampling; n rotates away from straight-back (tread)
    # or away from straight-out (side), l is elevation above horizontal.
    tread_angle_n_rad: tuple[float, float] = (-30.0 * DEG_TO_RAD, 30.0 * DEG_TO_RAD)
    tread_angle_l_rad: tuple[float, float] = (10.0 * DEG_TO_RAD, 60.0 * DEG_TO_RAD)
    side_angle_n_rad: tuple[float, float] = (75.0 * DEG_TO_RAD, 105.0 * DEG_TO_RAD)
    side_angle_l_rad: tuple[float, float] = (0.0, 20.0 * DEG_TO_RAD)
    lateral_speed_init_mps: float = 1.0
    lateral_decay_tau_s: float = 0.5
    wake_asymmetry: float = 0.3
    wake_flip_mean_s: float = 1.0
    max_age_s: float = 1.5
    max_range_m: float = 75.0
    substep_dt_s: float = 0.01
    drag_cd: float = 0.47
    air_density_kgpm3: float = 1.225
    water_density_kgpm3: float = 1000.0
    emission_scale: float = 1e-4
    max_clusters_per_wheel_per_frame: int = 300

    @property
    def droplet_volume_m3(self) -> float:
        return math.pi / 6.0 * self.droplet_diameter_m**3


@dataclass(frozen=True)
class LidarModel:
    channels: int = 64
    points_per_second: float = 1.6e6
    rotation_hz: float = 10.0
    max_range_m: float = 75.0
    vfov_deg: tuple[float, float] = (-17.6, 2.4)
    mount_height_m: float = 2.0
    beam_divergence_rad: float = 2e-3
    drop_probability: float = 0.08
    intercept_gain_kappa: float = 1.0

    @property
    def azimuth_steps(self) -> int:
        return int(round(self.points_per_second / (self.rotation_hz * self.channels)))

    @property
    def rays_per_frame(self) -> int:
        return self.channels * self.azimuth_steps


@dataclass(frozen=True)
class EchoParams:
    transmit_power: float = 1.0
    receiver_diameter_m: float = 0.05
    system_efficiency: float = 0.9
    normalization_range_m: float = 5.0


@dataclass(frozen=True)
class SprayIntensityModel:
    mean: float = 0.0025
    sigma: float = 0.0004
    clamp: tuple[float, float] = (0.0, 1.0)


@dataclass(frozen=True)
class IntensityConfig:
    mode: str = "physical"  # "physical" | "from_predictor"
    predictor_dir: str | None = None
    echo: EchoParams = field(default_factory=EchoParams)
    ground_reflectance: float = 0.12
    vehicle_reflectance: float = 0.35
    spray_noise: SprayIntensityModel = field(default_factory=SprayIntensityModel)


@dataclass(frozen=True)
class ScenarioConfig:
    weather: WeatherSpec = field(default_factory=WeatherSpec)
    road: RoadSurface = field(default_factory=RoadSurface)
    ego: EgoConfig = field(default_factory=EgoConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    spray: SprayParams = field(default_factory=SprayParams)
    lidar: LidarModel = field(default_factory=LidarModel)
    intensity: IntensityConfig = field(default_factory=IntensityConfig)
    raster_width: int = 1250
    frame_rate_hz: float = 10.0
    duration_frames: int = 100
    rng_seed: int = 0


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def _check_keys(doc: dict, allowed: set[str], path: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown key")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _vec(value: Any, n: int, path: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigError(path, f"expected a list of {n} numbers")
    return tuple(_number(v, path) for v in value)


def _rgb(value: Any, path: str) -> tuple[float, float, float]:
    rgb = _vec(value, 3, path)
    for v in rgb:
        _require(0.0 <= v <= 1.0, path, "RGB components must be in [0, 1]")
    _require(luminance(rgb) > 0.0, path, "albedo luminance must be positive")
    return rgb  # type: ignore[return-value]


def _pair(value: Any, path: str, *, ordered: bool = True) -> tuple[float, float]:
    lo, hi = _vec(value, 2, path)
    if ordered:
        _require(lo <= hi, path, "interval must be [lo, hi] with lo <= hi")
    return lo, hi


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------


def _parse_weather(doc: dict, path: str) -> WeatherSpec:
    _check_keys(doc, {"rain_rate_mm_per_h", "weather_class", "wind_velocity_mps",
                      "attenuation_alpha_per_m"}, path)
    rate_raw = doc.get("rain_rate_mm_per_h", 45.0)
    rate: float | tuple[float, float]
    if isinstance(rate_raw, (list, tuple)):
        rate = _pair(rate_raw, _join(path, "rain_rate_mm_per_h"))
        _require(rate[0] >= 0.0, _join(path, "rain_rate_mm_per_h"), "must be >= 0")
    else:
        rate = _number(rate_raw, _join(path, "rain_rate_mm_per_h"))
        _require(rate >= 0.0, _join(path, "rain_rate_mm_per_h"), "must be >= 0")
    wclass = doc.get("weather_class")
    if wclass is not None:
        _require(wclass in WEATHER_CLASSES, _join(path, "weather_class"),
                 f"must be one of {WEATHER_CLASSES}")
    wind = _vec(doc.get("wind_velocity_mps", (0.0, 0.0, 0.0)), 3,
                _join(path, "wind_velocity_mps"))
    alpha = doc.get("attenuation_alpha_per_m")
    if alpha is not None:
        alpha = _number(alpha, _join(path, "attenuation_alpha_per_m"))
        _require(alpha >= 0.0, _join(path, "attenuation_alpha_per_m"), "must be >= 0")
    return WeatherSpec(rate, wclass, wind, alpha)  # type: ignore[arg-type]


def _parse_road(doc: dict, path: str) -> RoadSurface:
    _check_keys(doc, {"texture_depth", "drainage_length", "slope", "extent",
                      "albedo_rgb"}, path)
    d = RoadSurface()
    texture = _number(doc.get("texture_depth", d.texture_depth), _join(path, "texture_depth"))
    drainage = _number(doc.get("drainage_length", d.drainage_length), _join(path, "drainage_length"))
    slope = _number(doc.get("slope", d.slope), _join(path, "slope"))
    extent = _vec(doc.get("extent", d.extent), 4, _join(path, "extent"))
    albedo = _rgb(doc.get("albedo_rgb", d.albedo_rgb), _join(path, "albedo_rgb"))
    _require(texture >= 0.0, _join(path, "texture_depth"), "must be >= 0")
    _require(drainage > 0.0, _join(path, "drainage_length"), "must be > 0")
    _require(slope > 0.0, _join(path, "slope"),
             "must be > 0 (water-film formula is singular at zero slope)")
    _require(extent[0] < extent[1] and extent[2] < extent[3],
             _join(path, "extent"), "must be a non-degenerate [x0, x1, y0, y1]")
    return RoadSurface(texture, drainage, slope, extent, albedo)  # type: ignore[arg-type]


def _parse_tire(doc: dict, path: str) -> TireSpec:
    _check_keys(doc, {"groove_width_fraction", "contact_width_m", "groove_depth_m",
                      "film_depth_m", "radius_m"}, path)
    d = TireSpec()
    k = _number(doc.get("groove_width_fraction", d.groove_width_fraction),
                _join(path, "groove_width_fraction"))
    b = _number(doc.get("contact_width_m", d.contact_width_m), _join(path, "contact_width_m"))
    hg = _number(doc.get("groove_depth_m", d.groove_depth_m), _join(path, "groove_depth_m"))
    hf = _number(doc.get("film_depth_m", d.film_depth_m), _join(path, "film_depth_m"))
    r = _number(doc.get("radius_m", d.radius_m), _join(path, "radius_m"))
    _require(0.0 < k < 1.0, _join(path, "groove_width_fraction"), "must be in (0, 1)")
    _require(b > 0.0, _join(path, "contact_width_m"), "must be > 0")
    _require(hg > 0.0, _join(path, "groove_depth_m"), "must be > 0")
    _require(0.0 <= hf <= hg, _join(path, "film_depth_m"),
             "must be in [0, groove_depth_m]")
    _require(r > 0.0, _join(path, "radius_m"), "must be > 0")
    return TireSpec(k, b, hg, hf, r)


def _wheel_offsets(value: Any, box: tuple[float, float, float], path: str
                   ) -> tuple[tuple[float, float], tuple[float, float]]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(path, "expected two [x, y] body-frame offsets")
    left = _vec(value[0], 2, _join(path, "0"))
    right = _vec(value[1], 2, _join(path, "1"))
    for name, (x, y) in (("0", left), ("1", right)):
        _require(abs(x) <= box[0] / 2 and abs(y) <= box[1] / 2,
                 _join(path, name), "rear wheel must lie inside the box footprint")
    return (left, right)  # type: ignore[return-value]


def derive_rear_wheel_offsets(box: tuple[float, float, float], tire: TireSpec
                              ) -> tuple[tuple[float, float], tuple[float, float]]:
    """Rear axle placement when not configured: behind center, wheels at the
    body sides."""
    x = -0.32 * box[0]
    y = box[1] / 2 - tire.contact_width_m / 2
    return ((x, y), (x, -y))


def _parse_ego(doc: dict, path: str) -> EgoConfig:
    _check_keys(doc, {"speed_kmh", "lane_offset_m", "box_size_m", "albedo_rgb",
                      "tire", "rear_wheel_offsets_m"}, path)
    d = EgoConfig()
    speed_kmh = _number(doc.get("speed_kmh", d.speed_mps / KMH_TO_MPS), _join(path, "speed_kmh"))
    _require(speed_kmh >= 0.0, _join(path, "speed_kmh"), "must be >= 0")
    box = _vec(doc.get("box_size_m", d.box_size_m), 3, _join(path, "box_size_m"))
    _require(min(box) > 0.0, _join(path, "box_size_m"), "box dimensions must be > 0")
    albedo = _rgb(doc.get("albedo_rgb", d.albedo_rgb), _join(path, "albedo_rgb"))
    tire = _parse_tire(doc.get("tire", {}), _join(path, "tire"))
    lane = _number(doc.get("lane_offset_m", d.lane_offset_m), _join(path, "lane_offset_m"))
    offsets = doc.get("rear_wheel_offsets_m")
    if offsets is not None:
        offsets = _wheel_offsets(offsets, box, _join(path, "rear_wheel_offsets_m"))  # type: ignore[arg-type]
    return EgoConfig(speed_kmh * KMH_TO_MPS, lane, box, albedo, tire, offsets)  # type: ignore[arg-type]


def _parse_traffic(doc: dict, path: str) -> TrafficConfig:
    _check_keys(doc, {"count_range", "speed_kmh_range", "lane_offsets_m",
                      "spawn_ahead_range_m", "corridor_ahead_m", "corridor_behind_m",
                      "box_size_m", "albedo_palette", "tire"}, path)
    d = TrafficConfig()
    count_raw = doc.get("count_range", d.count_range)
    if not isinstance(count_raw, (list, tuple)) or len(count_raw) != 2:
        raise ConfigError(_join(path, "count_range"), "expected [min, max]")
    count = (_integer(count_raw[0], _join(path, "count_range")),
             _integer(count_raw[1], _join(path, "count_range")))
    _require(1 <= count[0] <= count[1], _join(path, "count_range"),
             "must satisfy 1 <= min <= max")
    speed_kmh = _pair(doc.get("speed_kmh_range",
                              (d.speed_mps_range[0] / KMH_TO_MPS,
                               d.speed_mps_range[1] / KMH_TO_MPS)),
                      _join(path, "speed_kmh_range"))
    _require(speed_kmh[0] >= 0.0, _join(path, "speed_kmh_range"), "must be >= 0")
    lanes_raw = doc.get("lane_offsets_m", d.lane_offsets_m)
    if not isinstance(lanes_raw, (list, tuple)) or len(lanes_raw) == 0:
        raise ConfigError(_join(path, "lane_offsets_m"), "expected a non-empty list")
    lanes = tuple(_number(v, _join(path, "lane_offsets_m")) for v in lanes_raw)
    spawn = _pair(doc.get("spawn_ahead_range_m", d.spawn_ahead_range_m),
                  _join(path, "spawn_ahead_range_m"))
    ahead = _number(doc.get("corridor_ahead_m", d.corridor_ahead_m),
                    _join(path, "corridor_ahead_m"))
    behind = _number(doc.get("corridor_behind_m", d.corridor_behind_m),
                     _join(path, "corridor_behind_m"))
    _require(ahead > 0.0 and behind > 0.0, _join(path, "corridor_ahead_m"),
             "corridor extents must be > 0")
    _require(spawn[1] <= ahead, _join(path, "spawn_ahead_range_m"),
             "spawn range must lie inside the forward corridor")
    box = _vec(doc.get("box_size_m", d.box_size_m), 3, _join(path, "box_size_m"))
    _require(min(box) > 0.0, _join(path, "box_size_m"), "box dimensions must be > 0")
    palette_raw = doc.get("albedo_palette", d.albedo_palette)
    if not isinstance(palette_raw, (list, tuple)) or len(palette_raw) == 0:
        raise ConfigError(_join(path, "albedo_palette"), "expected a non-empty list")
    palette = tuple(_rgb(v, _join(path, "albedo_palette")) for v in palette_raw)
    tire = _parse_tire(doc.get("tire", {}), _join(path, "tire"))
    return TrafficConfig(count, (speed_kmh[0] * KMH_TO_MPS, speed_kmh[1] * KMH_TO_MPS),
                         lanes, spawn, ahead, behind, box, palette, tire)  # type: ignore[arg-type]


def _angle_pair(doc: dict, key: str, default_rad: tuple[float, float], path: str
                ) -> tuple[float, float]:
    if key not in doc:
        return default_rad
    lo, hi = _pair(doc[key], _join(path, key))
    return (lo * DEG_TO_RAD, hi * DEG_TO_RAD)


def _parse_spray(doc: dict, path: str) -> SprayParams:
    allowed = {"droplet_diameter_m", "cluster_size", "cluster_radius_m",
               "weight_interval_s", "weight_range", "tread_angle_n_deg",
               "tread_angle_l_deg", "side_angle_n_deg", "side_angle_l_deg",
               "lateral_speed_init_mps", "lateral_decay_tau_s", "wake_asymmetry",
               "wake_flip_mean_s", "max_age_s", "max_range_m", "substep_dt_s",
               "drag_cd", "air_density_kgpm3", "water_density_kgpm3",
               "emission_scale", "max_clusters_per_wheel_per_frame"}
    _check_keys(doc, allowed, path)
    d = SprayParams()

    def num(key: str, default: float) -> float:
        return _number(doc.get(key, default), _join(path, key))

    diameter = num("droplet_diameter_m", d.droplet_diameter_m)
    _require(diameter > 0.0, _join(path, "droplet_diameter_m"), "must be > 0")
    cluster_size = _integer(doc.get("cluster_size", d.cluster_size), _join(path, "cluster_size"))
    _require(cluster_size >= 1, _join(path, "cluster_size"), "must be >= 1")
    cluster_radius = num("cluster_radius_m", d.cluster_radius_m)
    _require(cluster_radius >= 0.0, _join(path, "cluster_radius_m"), "must be >= 0")
    weight_interval = num("weight_interval_s", d.weight_interval_s)
    _require(weight_interval > 0.0, _join(path, "weight_interval_s"), "must be > 0")
    weight_range = _pair(doc.get("weight_range", d.weight_range), _join(path, "weight_range"))
    _require(weight_range[0] >= 0.0, _join(path, "weight_range"), "must be >= 0")
    lateral_speed = num("lateral_speed_init_mps", d.lateral_speed_init_mps)
    _require(lateral_speed >= 0.0, _join(path, "lateral_speed_init_mps"), "must be >= 0")
    tau = num("lateral_decay_tau_s", d.lateral_decay_tau_s)
    _require(tau > 0.0, _join(path, "lateral_decay_tau_s"), "must be > 0")
    asym = num("wake_asymmetry", d.wake_asymmetry)
    _require(0.0 <= asym < 1.0, _join(path, "wake_asymmetry"), "must be in [0, 1)")
    flip_mean = num("wake_flip_mean_s", d.wake_flip_mean_s)
    _require(flip_mean > 0.0, _join(path, "wake_flip_mean_s"), "must be > 0")
    max_age = num("max_age_s", d.max_age_s)
    _require(max_age > 0.0, _join(path, "max_age_s"), "must be > 0")
    max_range = num("max_range_m", d.max_range_m)
    _require(max_range > 0.0, _join(path, "max_range_m"), "must be > 0")
    substep = num("substep_dt_s", d.substep_dt_s)
    _require(substep > 0.0, _join(path, "substep_dt_s"), "must be > 0")
    cd = num("drag_cd", d.drag_cd)
    _require(cd >= 0.0, _join(path, "drag_cd"), "must be >= 0")
    rho_air = num("air_density_kgpm3", d.air_density_kgpm3)
    rho_water = num("water_density_kgpm3", d.water_density_kgpm3)
    _require(rho_air > 0.0, _join(path, "air_density_kgpm3"), "must be > 0")
    _require(rho_water > 0.0, _join(path, "water_density_kgpm3"), "must be > 0")
    scale = num("emission_scale", d.emission_scale)
    _require(scale > 0.0, _join(path, "emission_scale"), "must be > 0")
    cap = _integer(doc.get("max_clusters_per_wheel_per_frame",
                           d.max_clusters_per_wheel_per_frame),
                   _join(path, "max_clusters_per_wheel_per_frame"))
    _require(cap >= 1, _join(path, "max_clusters_per_wheel_per_frame"), "must be >= 1")

    return SprayParams(
        droplet_diameter_m=diameter,
        cluster_size=cluster_size,
        cluster_radius_m=cluster_radius,
        weight_interval_s=weight_interval,
        weight_range=weight_range,
        tread_angle_n_rad=_angle_pair(doc, "tread_angle_n_deg", d.tread_angle_n_rad, path),
        tread_angle_l_rad=_angle_pair(doc, "tread_angle_l_deg", d.tread_angle_l_rad, path),
        side_angle_n_rad=_angle_pair(doc, "side_angle_n_deg", d.side_angle_n_rad, path),
        side_angle_l_rad=_angle_pair(doc, "side_angle_l_deg", d.side_angle_l_rad, path),
        lateral_speed_init_mps=lateral_speed,
        lateral_decay_tau_s=tau,
        wake_asymmetry=asym,
        wake_flip_mean_s=flip_mean,
        max_age_s=max_age,
        max_range_m=max_range,
        substep_dt_s=substep,
        drag_cd=cd,
        air_density_kgpm3=rho_air,
        water_density_kgpm3=rho_water,
        emission_scale=scale,
        max_clusters_per_wheel_per_frame=cap,
    )


def _parse_lidar(doc: dict, path: str) -> LidarModel:
    _check_keys(doc, {"channels", "points_per_second", "rotation_hz", "max_range_m",
                      "vfov_deg", "mount_height_m", "beam_divergence_rad",
                      "drop_probability", "intercept_gain_kappa"}, path)
    d = LidarModel()
    channels = _integer(doc.get("channels", d.channels), _join(path, "channels"))
    _require(channels >= 1, _join(path, "channels"), "must be >= 1")
    pps = _number(doc.get("points_per_second", d.points_per_second),
                  _join(path, "points_per_second"))
    rot = _number(doc.get("rotation_hz", d.rotation_hz), _join(path, "rotation_hz"))
    _require(pps > 0.0 and rot > 0.0, _join(path, "points_per_second"), "must be > 0")
    max_range = _number(doc.get("max_range_m", d.max_range_m), _join(path, "max_range_m"))
    _require(max_range > 0.0, _join(path, "max_range_m"), "must be > 0")
    vfov = _pair(doc.get("vfov_deg", d.vfov_deg), _join(path, "vfov_deg"))
    _require(vfov[0] < vfov[1], _join(path, "vfov_deg"), "lower bound must be < upper")
    mount = _number(doc.get("mount_height_m", d.mount_height_m), _join(path, "mount_height_m"))
    _require(mount > 0.0, _join(path, "mount_height_m"), "must be > 0")
    div = _number(doc.get("beam_divergence_rad", d.beam_divergence_rad),
                  _join(path, "beam_divergence_rad"))
    _require(div > 0.0, _join(path, "beam_divergence_rad"), "must be > 0")
    drop = _number(doc.get("drop_probability", d.drop_probability),
                   _join(path, "drop_probability"))
    _require(0.0 <= drop < 1.0, _join(path, "drop_probability"), "must be in [0, 1)")
    kappa = _number(doc.get("intercept_gain_kappa", d.intercept_gain_kappa),
                    _join(path, "intercept_gain_kappa"))
    _require(kappa > 0.0, _join(path, "intercept_gain_kappa"), "must be > 0")
    model = LidarModel(channels, pps, rot, max_range, vfov, mount, div, drop, kappa)
    steps = pps / (rot * channels)
    _require(abs(steps - round(steps)) < 0.5 and round(steps) >= 1,
             _join(path, "points_per_second"),
             "points_per_second / (rotation_hz * channels) must round to >= 1")
    return model


def _parse_intensity(doc: dict, path: str) -> IntensityConfig:
    _check_keys(doc, {"mode", "predictor_dir", "echo", "reflectance", "spray_noise"}, path)
    d = IntensityConfig()
    mode = doc.get("mode", d.mode)
    _require(mode in ("physical", "from_predictor"), _join(path, "mode"),
             "must be 'physical' or 'from_predictor'")
    predictor_dir = doc.get("predictor_dir", d.predictor_dir)
    if mode == "from_predictor":
        _require(isinstance(predictor_dir, str) and predictor_dir != "",
                 _join(path, "predictor_dir"), "required in from_predictor mode")

    echo_doc = doc.get("echo", {})
    _check_keys(echo_doc, {"transmit_power", "receiver_diameter_m",
                           "system_efficiency", "normalization_range_m"},
                _join(path, "echo"))
    e = EchoParams()
    pt = _number(echo_doc.get("transmit_power", e.transmit_power),
                 _join(path, "echo.transmit_power"))
    drec = _number(echo_doc.get("receiver_diameter_m", e.receiver_diameter_m),
                   _join(path, "echo.receiver_diameter_m"))
    eta = _number(echo_doc.get("system_efficiency", e.system_efficiency),
                  _join(path, "echo.system_efficiency"))
    r0 = _number(echo_doc.get("normalization_range_m", e.normalization_range_m),
                 _join(path, "echo.normalization_range_m"))
    _require(pt > 0.0, _join(path, "echo.transmit_power"), "must be > 0")
    _require(drec > 0.0, _join(path, "echo.receiver_diameter_m"), "must be > 0")
    _require(0.0 < eta <= 1.0, _join(path, "echo.system_efficiency"), "must be in (0, 1]")
    _require(r0 > 0.0, _join(path, "echo.normalization_range_m"), "must be > 0")
    echo = EchoParams(pt, drec, eta, r0)

    refl_doc = doc.get("reflectance", {})
    _check_keys(refl_doc, {"ground", "vehicle"}, _join(path, "reflectance"))
    ground = _number(refl_doc.get("ground", d.ground_reflectance),
                     _join(path, "reflectance.ground"))
    vehicle = _number(refl_doc.get("vehicle", d.vehicle_reflectance),
                      _join(path, "reflectance.vehicle"))
    _require(0.0 < ground <= 1.0, _join(path, "reflectance.ground"), "must be in (0, 1]")
    _require(0.0 < vehicle <= 1.0, _join(path, "reflectance.vehicle"), "must be in (0, 1]")

    noise_doc = doc.get("spray_noise", {})
    _check_keys(noise_doc, {"mean", "sigma"}, _join(path, "spray_noise"))
    n = SprayIntensityModel()
    mean = _number(noise_doc.get("mean", n.mean), _join(path, "spray_noise.mean"))
    sigma = _number(noise_doc.get("sigma", n.sigma), _join(path, "spray_noise.sigma"))
    _require(mean > 0.0, _join(path, "spray_noise.mean"), "must be > 0")
    _require(sigma > 0.0, _join(path, "spray_noise.sigma"), "must be > 0")

    return IntensityConfig(mode, predictor_dir, echo, ground, vehicle,
                           SprayIntensityModel(mean, sigma))


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a parsed scenario document and build the typed config."""
    if not isinstance(doc, dict):
        raise ConfigError("", "scenario document must be a JSON object")
    _check_keys(doc, {"weather", "road", "ego", "traffic", "spray", "lidar",
                      "intensity", "raster_width", "frame_rate_hz",
                      "duration_frames", "rng_seed"}, "")
    d = ScenarioConfig()
    weather = _parse_weather(doc.get("weather", {}), "weather")
    road = _parse_road(doc.get("road", {}), "road")
    ego = _parse_ego(doc.get("ego", {}), "ego")
    traffic = _parse_traffic(doc.get("traffic", {}), "traffic")
    spray = _parse_spray(doc.get("spray", {}), "spray")
    lidar = _parse_lidar(doc.get("lidar", {}), "lidar")
    intensity = _parse_intensity(doc.get("intensity", {}), "intensity")
    frame_rate = _number(doc.get("frame_rate_hz", d.frame_rate_hz), "frame_rate_hz")
    _require(frame_rate > 0.0, "frame_rate_hz", "must be > 0")
    duration = _integer(doc.get("duration_frames", d.duration_frames), "duration_frames")
    _require(duration >= 1, "duration_frames", "must be >= 1")
    seed = _integer(doc.get("rng_seed", d.rng_seed), "rng_seed")
    width = _integer(doc.get("raster_width", d.raster_width), "raster_width")
    _require(1 <= width <= lidar.azimuth_steps, "raster_width",
             f"must be in [1, {lidar.azimuth_steps}]")
    _require(spray.substep_dt_s <= 1.0 / frame_rate + 1e-12, "spray.substep_dt_s",
             "must not exceed the frame interval")
    return ScenarioConfig(weather, road, ego, traffic, spray, lidar, intensity,
                          width, frame_rate, duration, seed)


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError("", f"invalid JSON: {err}") from err
    return scenario_from_dict(doc)


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides to a raw document (pre-validation).

    Values parse as JSON literals, falling back to plain strings.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like dotted.key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "override path crosses a non-object value")
        node[parts[-1]] = value
    return doc


def _listed(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_listed(v) for v in value]
    return value


def _tire_to_dict(tire: TireSpec) -> dict:
    return {
        "groove_width_fraction": tire.groove_width_fraction,
        "contact_width_m": tire.contact_width_m,
        "groove_depth_m": tire.groove_depth_m,
        "film_depth_m": tire.film_depth_m,
        "radius_m": tire.radius_m,
    }


def _deg_pair(pair: tuple[float, float]) -> list[float]:
    return [pair[0] / DEG_TO_RAD, pair[1] / DEG_TO_RAD]


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Schema-form snapshot of a scenario; feeding it back through
    scenario_from_dict reproduces the config (up to unit round-off)."""
    w, r, e, t, s, l, i = (config.weather, config.road, config.ego,
                           config.traffic, config.spray, config.lidar,
                           config.intensity)
    return {
        "weather": {
            "rain_rate_mm_per_h": _listed(w.rain_rate_mm_per_h),
            "weather_class": w.weather_class,
            "wind_velocity_mps": _listed(w.wind_velocity_mps),
            "attenuation_alpha_per_m": w.attenuation_alpha_per_m,
        },
        "road": {
            "texture_depth": r.texture_depth,
            "drainage_length": r.drainage_length,
            "slope": r.slope,
            "extent": _listed(r.extent),
            "albedo_rgb": _listed(r.albedo_rgb),
        },
        "ego": {
            "speed_kmh": e.speed_mps / KMH_TO_MPS,
            "lane_offset_m": e.lane_offset_m,
            "box_size_m": _listed(e.box_size_m),
            "albedo_rgb": _listed(e.albedo_rgb),
            "tire": _tire_to_dict(e.tire),
            "rear_wheel_offsets_m": _listed(e.rear_wheel_offsets_m),
        },
        "traffic": {
            "count_range": _listed(t.count_range),
            "speed_kmh_range": [t.speed_mps_range[0] / KMH_TO_MPS,
                                t.speed_mps_range[1] / KMH_TO_MPS],
            "lane_offsets_m": _listed(t.lane_offsets_m),
            "spawn_ahead_range_m": _listed(t.spawn_ahead_range_m),
            "corridor_ahead_m": t.corridor_ahead_m,
            "corridor_behind_m": t.corridor_behind_m,
            "box_size_m": _listed(t.box_size_m),
            "albedo_palette": _listed(t.albedo_palette),
            "tire": _tire_to_dict(t.tire),
        },
        "spray": {
            "droplet_diameter_m": s.droplet_diameter_m,
            "cluster_size": s.cluster_size,
            "cluster_radius_m": s.cluster_radius_m,
            "weight_interval_s": s.weight_interval_s,
            "weight_range": _listed(s.weight_range),
            "tread_angle_n_deg": _deg_pair(s.tread_angle_n_rad),
            "tread_angle_l_deg": _deg_pair(s.tread_angle_l_rad),
            "side_angle_n_deg": _deg_pair(s.side_angle_n_rad),
            "side_angle_l_deg": _deg_pair(s.side_angle_l_rad),
            "lateral_speed_init_mps": s.lateral_speed_init_mps,
            "lateral_decay_tau_s": s.lateral_decay_tau_s,
            "wake_asymmetry": s.wake_asymmetry,
            "wake_flip_mean_s": s.wake_flip_mean_s,
            "max_age_s": s.max_age_s,
            "max_range_m": s.max_range_m,
            "substep_dt_s": s.substep_dt_s,
            "drag_cd": s.drag_cd,
            "air_density_kgpm3": s.air_density_kgpm3,
            "water_density_kgpm3": s.water_density_kgpm3,
            "emission_scale": s.emission_scale,
            "max_clusters_per_wheel_per_frame": s.max_clusters_per_wheel_per_frame,
        },
        "lidar": {
            "channels": l.channels,
            "points_per_second": l.points_per_second,
            "rotation_hz": l.rotation_hz,
            "max_range_m": l.max_range_m,
            "vfov_deg": _listed(l.vfov_deg),
            "mount_height_m": l.mount_height_m,
            "beam_divergence_rad": l.beam_divergence_rad,
            "drop_probability": l.drop_probability,
            "intercept_gain_kappa": l.intercept_gain_kappa,
        },
        "intensity": {
            "mode": i.mode,
            "predictor_dir": i.predictor_dir,
            "echo": {
                "transmit_power": i.echo.transmit_power,
                "receiver_diameter_m": i.echo.receiver_diameter_m,
                "system_efficiency": i.echo.system_efficiency,
                "normalization_range_m": i.echo.normalization_range_m,
            },
            "reflectance": {"ground": i.ground_reflectance,
                            "vehicle": i.vehicle_reflectance},
            "spray_noise": {"mean": i.spray_noise.mean,
                            "sigma": i.spray_noise.sigma},
        },
        "raster_width": config.raster_width,
        "frame_rate_hz": config.frame_rate_hz,
        "duration_frames": config.duration_frames,
        "rng_seed": config.rng_seed,
    }
