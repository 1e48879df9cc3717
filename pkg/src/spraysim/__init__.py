"""spraysim: physics-based LiDAR point cloud simulator for rainy highways.

Generates labeled 4-feature (x, y, z, intensity) point cloud datasets of
highway scenes in rain, including the wheel-spray plumes behind vehicles,
a Waymo-like rotating beam model, and weather-aware echo intensities.
"""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    ConfigError,
    EchoParams,
    IntensityConfig,
    LidarModel,
    RoadSurface,
    ScenarioConfig,
    SprayIntensityModel,
    SprayParams,
    TireSpec,
    WeatherConfig,
    load_scenario,
    scenario_from_dict,
)
from .scene import Scene, VehicleState, build_scenario, step, water_film_depth  # noqa: F401
from .spray import (  # noqa: F401
    ClusterSet,
    DropletCluster,
    EmissionState,
    SpraySim,
    annihilate,
    emit,
    integrate,
    volume_rate_side_wave,
    volume_rate_tread_pickup,
    wake_update,
)
from .lidar import (  # noqa: F401
    FrameStreams,
    Hit,
    LidarFrame,
    Ray,
    apply_dropoff,
    beam_pattern,
    cast,
    project_range_raster,
    scan_frame,
)
from .intensity import (  # noqa: F401
    ReflectanceTable,
    assign_intensities,
    atmospheric_eta,
    physical_intensity,
    solid_angle,
    spray_intensity,
)
from .raster import RangeRaster, read_rr, write_rr  # noqa: F401
from .dataset import generate, stats, write_point_cloud, read_point_cloud  # noqa: F401
