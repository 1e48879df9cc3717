"""Scenario document validation and snapshot round trip."""

import math

import pytest

from spraysim.config import (
    ConfigError,
    apply_overrides,
    default_attenuation_alpha,
    default_weather_class,
    scenario_from_dict,
    scenario_to_dict,
)


class TestValidation:
    def test_empty_document_uses_defaults(self):
        cfg = scenario_from_dict({})
        assert cfg.lidar.channels == 64
        assert cfg.lidar.azimuth_steps == 2500
        assert cfg.spray.cluster_size == 10
        assert cfg.spray.max_age_s == 1.5
        assert cfg.spray.max_range_m == 75.0
        assert cfg.duration_frames == 100

    @pytest.mark.parametrize("doc,field", [
        ({"bogus": 1}, "bogus"),
        ({"weather": {"rain": 3}}, "weather.rain"),
        ({"spray": {"droplet_diameter": 1}}, "spray.droplet_diameter"),
        ({"lidar": {"chans": 64}}, "lidar.chans"),
        ({"intensity": {"echo": {"power": 1}}}, "intensity.echo.power"),
    ])
    def test_unknown_keys_rejected_with_path(self, doc, field):
        with pytest.raises(ConfigError) as err:
            scenario_from_dict(doc)
        assert err.value.field == field

    @pytest.mark.parametrize("doc,needle", [
        ({"road": {"slope": -0.1}}, "road.slope"),
        ({"ego": {"tire": {"groove_width_fraction": 1.0}}},
         "ego.tire.groove_width_fraction"),
        ({"ego": {"tire": {"film_depth_m": 0.01}}}, "ego.tire.film_depth_m"),
        ({"traffic": {"count_range": [0, 3]}}, "traffic.count_range"),
        ({"lidar": {"drop_probability": 1.0}}, "lidar.drop_probability"),
        ({"lidar": {"vfov_deg": [2.4, -17.6]}}, "lidar.vfov_deg"),
        ({"weather": {"weather_class": "sunny"}}, "weather.weather_class"),
        ({"duration_frames": 0}, "duration_frames"),
        ({"raster_width": 99999}, "raster_width"),
        ({"intensity": {"mode": "magic"}}, "intensity.mode"),
    ])
    def test_invariants_name_the_field(self, doc, needle):
        with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
            scenario_from_dict(doc)

    def test_angles_accepted_in_degrees(self):
        cfg = scenario_from_dict({"spray": {"tread_angle_l_deg": [5.0, 45.0]}})
        lo, hi = cfg.spray.tread_angle_l_rad
        assert lo == pytest.approx(math.radians(5.0))
        assert hi == pytest.approx(math.radians(45.0))

    def test_from_predictor_requires_directory(self):
        with pytest.raises(ConfigError, match="predictor_dir"):
            scenario_from_dict({"intensity": {"mode": "from_predictor"}})

    def test_substep_cannot_exceed_frame_interval(self):
        with pytest.raises(ConfigError, match="substep"):
            scenario_from_dict({"spray": {"substep_dt_s": 0.2},
                                "frame_rate_hz": 10.0})


class TestWeatherDefaults:
    def test_alpha_law(self):
        assert default_attenuation_alpha(0.0) == 0.0
        assert default_attenuation_alpha(10.0) == pytest.approx(0.01)
        assert default_attenuation_alpha(40.0) > default_attenuation_alpha(20.0)

    def test_class_thresholds(self):
        assert default_weather_class(0.0) == "clear"
        assert default_weather_class(1.0) == "wet_ground"
        assert default_weather_class(30.0) == "light_rain"
        assert default_weather_class(55.0) == "heavy_rain"


class TestOverrides:
    def test_dotted_path_json_value(self):
        doc = apply_overrides({}, ["weather.rain_rate_mm_per_h=55.5"])
        assert doc["weather"]["rain_rate_mm_per_h"] == 55.5

    def test_list_values_parse(self):
        doc = apply_overrides({}, ["traffic.count_range=[2, 2]"])
        assert doc["traffic"]["count_range"] == [2, 2]

    def test_string_fallback(self):
        doc = apply_overrides({}, ["intensity.mode=physical"])
        assert doc["intensity"]["mode"] == "physical"

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ["weather.rain_rate_mm_per_h"])


class TestSnapshotRoundTrip:
    def test_snapshot_reloads_to_same_config(self):
        original = scenario_from_dict({
            "weather": {"rain_rate_mm_per_h": [30.0, 60.0]},
            "ego": {"speed_kmh": 92.5},
            "spray": {"emission_scale": 3e-4},
            "rng_seed": 17,
        })
        snapshot = scenario_to_dict(original)
        reloaded = scenario_from_dict(snapshot)
        assert reloaded.rng_seed == original.rng_seed
        assert reloaded.ego.speed_mps == pytest.approx(original.ego.speed_mps)
        assert reloaded.weather == original.weather
        assert reloaded.lidar == original.lidar
        assert reloaded.spray.emission_scale == original.spray.emission_scale
        for a, b in zip(reloaded.spray.tread_angle_l_rad,
                        original.spray.tread_angle_l_rad):
            assert a == pytest.approx(b, rel=1e-12)
