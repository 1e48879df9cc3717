"""Shared fixtures and synthetic-frame helpers."""

from __future__ import annotations

import numpy as np
import pytest

from spraysim.config import LidarModel, ScenarioConfig, scenario_from_dict
from spraysim.lidar import LidarFrame


def tiny_frame(model: LidarModel | None = None) -> LidarFrame:
    """Hand-built 2x3 frame with one ground and one vehicle return."""
    model = model or LidarModel(channels=2, points_per_second=60.0, rotation_hz=10.0)
    C, A = 2, 3
    grid_range = np.full((C, A), np.inf)
    grid_range[0, 0] = 5.0
    grid_range[1, 2] = 10.25
    grid_class = np.zeros((C, A), np.uint8)
    grid_class[0, 0] = 1
    grid_class[1, 2] = 2
    grid_target = np.full((C, A), -1, np.int32)
    grid_target[1, 2] = 3
    grid_albedo = np.zeros((C, A, 3), np.float32)
    grid_dropped = np.zeros((C, A), bool)
    grid_int = np.full((C, A), -1.0)
    grid_int[0, 0] = 0.5
    grid_int[1, 2] = 0.125
    pc, pj = np.nonzero(grid_class != 0)
    xyz = np.array([[1.0, 2.0, -0.5], [3.5, -1.25, 0.75]])
    return LidarFrame(0, 0.0, (0, 0, 0, 0), np.zeros(3), model, 2,
                      grid_range, grid_class, grid_target, grid_albedo,
                      grid_dropped, grid_int, xyz, grid_class[pc, pj],
                      pc.astype(np.int32), pj.astype(np.int32),
                      grid_range[pc, pj])


@pytest.fixture
def two_vehicle_config() -> ScenarioConfig:
    """Ego plus one leader 15 m ahead, both at 100 km/h, heavy rain."""
    return scenario_from_dict({
        "rng_seed": 7,
        "weather": {"rain_rate_mm_per_h": 60.0},
        "ego": {"speed_kmh": 100.0},
        "traffic": {"count_range": [1, 1], "speed_kmh_range": [100.0, 100.0],
                    "lane_offsets_m": [0.0], "spawn_ahead_range_m": [15.0, 15.0]},
        "lidar": {"intercept_gain_kappa": 5.0},
        "spray": {"emission_scale": 4e-4},
        "duration_frames": 5,
    })


@pytest.fixture
def small_config() -> ScenarioConfig:
    """Short scenario with narrow rasters for fast end-to-end tests."""
    return scenario_from_dict({
        "rng_seed": 42,
        "duration_frames": 4,
        "raster_width": 160,
    })
