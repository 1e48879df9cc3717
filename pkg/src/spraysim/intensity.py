"""Echo intensity: the fourth point feature.

Solid targets follow the physical echo equation P_r = P_t * Omega * rho *
eta_sys * eta_atm with Omega = pi * D_rec^2 / (4 R^2), normalized so a
perfect reflector at the calibration range in clear air scores 1.0. Spray
returns ignore the echo equation: nearly all energy transmits through the
droplets, and the weak echo is modeled as clamped Gaussian noise. A
predictor-generated intensity raster can replace the physical model for
solid hits; spray is always overridden by the noise model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EchoParams, IntensityConfig, SprayIntensityModel, WeatherConfig, luminance
from .lidar import FrameStreams, LidarFrame, Hit
from .raster import read_rr
from .scene import CLASS_GROUND, CLASS_NONE, CLASS_SPRAY, CLASS_VEHICLE, Scene


@dataclass(frozen=True)
class ReflectanceTable:
    """Base reflectance per semantic class, modulated by surface albedo."""

    ground: float = 0.12
    vehicle: float = 0.35

    def effective(self, hit_class: int, albedo_rgb) -> float:
        if hit_class == CLASS_GROUND:
            base = self.ground
        elif hit_class == CLASS_VEHICLE:
            base = self.vehicle
        else:
            raise ValueError(f"no reflectance for class {hit_class}")
        return base * luminance(albedo_rgb)


def solid_angle(receiver_diameter: float, r: float) -> float:
    """Scattering solid angle pi * D^2 / (4 R^2)."""
    if r <= 0.0:
        raise ValueError("range must be > 0")
    return math.pi * receiver_diameter**2 / (4.0 * r * r)


def atmospheric_eta(weather: WeatherConfig, r: float) -> float:
    """Two-way atmospheric attenuation exp(-2 * alpha * R)."""
    if r < 0.0:
        raise ValueError("range must be >= 0")
    return math.exp(-2.0 * weather.attenuation_alpha_per_m * r)


def physical_intensity(hit: Hit, echo: EchoParams, table: ReflectanceTable,
                       weather: WeatherConfig) -> float:
    """Normalized echo power of a solid return, clamped to [0, 1].

    The normalization anchor is a perfect reflector (rho = 1) at the
    calibration range in clear air; transmit power and system efficiency
    cancel out of the ratio.
    """
    if hit.hit_class not in (CLASS_GROUND, CLASS_VEHICLE):
        raise ValueError(f"physical model applies to solid returns, got class "
                         f"{hit.hit_class}")
    rho = table.effective(hit.hit_class, hit.target_albedo)
    return float(_normalized_intensity(np.array([hit.range_m]), np.array([rho]),
                                       weather.attenuation_alpha_per_m, echo)[0])


def _normalized_intensity(ranges: np.ndarray, rho_eff: np.ndarray, alpha: float,
                          echo: EchoParams) -> np.ndarray:
    r0 = echo.normalization_range_m
    raw = rho_eff * (r0 / ranges) ** 2 * np.exp(-2.0 * alpha * ranges)
    return np.clip(raw, 0.0, 1.0)


def spray_intensity(model: SprayIntensityModel, rng: np.random.Generator) -> float:
    """One spray return intensity: clamped N(mean, sigma^2)."""
    value = rng.normal(model.mean, model.sigma)
    return float(np.clip(value, model.clamp[0], model.clamp[1]))


def _spray_intensity_cells(model: SprayIntensityModel, streams: FrameStreams,
                           channels: np.ndarray, azimuths: np.ndarray) -> np.ndarray:
    z = streams.spray_normal(channels.astype(np.int64), azimuths.astype(np.int64))
    return np.clip(model.mean + model.sigma * z, model.clamp[0], model.clamp[1])


def _predictor_raster_path(predictor_dir: Path, frame_index: int, sector: str) -> Path:
    return predictor_dir / f"{frame_index:06d}.{sector}.int.rr"


def _load_predicted_grid(frame: LidarFrame, predictor_dir: str | Path) -> np.ndarray:
    """Assemble a (C, A) intensity grid from the front and rear sector rasters."""
    model = frame.model
    C, A = model.channels, model.azimuth_steps
    grid = np.full((C, A), np.nan)
    predictor_dir = Path(predictor_dir)
    for sector, center in (("front", 0), ("rear", A // 2)):
        path = _predictor_raster_path(predictor_dir, frame.frame_index, sector)
        if not path.exists():
            raise FileNotFoundError(f"predictor raster missing: {path}")
        raster = read_rr(path)
        h, w = raster.header["height"], raster.header["width"]
        if h != C or w != A // 2:
            raise ValueError(
                f"{path}: expected {C}x{A // 2} intensity raster, found {h}x{w}")
        plane = raster.channel("intensity")
        cols = np.mod(center + np.arange(w) - w // 2, A)
        grid[::-1, cols] = plane
    if np.isnan(grid).any():
        raise ValueError("front/rear sector rasters do not cover the revolution")
    return grid


def assign_intensities(frame: LidarFrame, intensity_config: IntensityConfig,
                       weather: WeatherConfig, scene: Scene | None = None,
                       streams: FrameStreams | None = None) -> LidarFrame:
    """Fill the frame's intensity plane in place (and return the frame).

    Physical mode evaluates the echo equation per solid cell; predictor
    mode reads the per-cell intensity raster instead. Spray cells always
    take the Gaussian noise model.
    """
    if streams is None:
        seed = scene.seed if scene is not None else 0
        streams = FrameStreams(seed, frame.frame_index)
    table = ReflectanceTable(intensity_config.ground_reflectance,
                             intensity_config.vehicle_reflectance)
    echo = intensity_config.echo
    cls = frame.grid_class
    solid = (cls == CLASS_GROUND) | (cls == CLASS_VEHICLE)

    if intensity_config.mode == "physical":
        ranges = frame.grid_range[solid]
        lum = (0.2126 * frame.grid_albedo[solid, 0]
               + 0.7152 * frame.grid_albedo[solid, 1]
               + 0.0722 * frame.grid_albedo[solid, 2]).astype(np.float64)
        base = np.where(cls[solid] == CLASS_GROUND, table.ground, table.vehicle)
        frame.grid_intensity[solid] = _normalized_intensity(
            ranges, base * lum, weather.attenuation_alpha_per_m, echo)
    elif intensity_config.mode == "from_predictor":
        if intensity_config.predictor_dir is None:
            raise ValueError("from_predictor mode requires predictor_dir")
        predicted = _load_predicted_grid(frame, intensity_config.predictor_dir)
        frame.grid_intensity[solid] = np.clip(predicted[solid], 0.0, 1.0)
    else:
        raise ValueError(f"unknown intensity mode {intensity_config.mode!r}")

    spray = cls == CLASS_SPRAY
    if spray.any():
        s_ch, s_jj = np.nonzero(spray)
        frame.grid_intensity[spray] = _spray_intensity_cells(
            intensity_config.spray_noise, streams, s_ch, s_jj)
    frame.grid_intensity[cls == CLASS_NONE] = 0.0
    return frame
