"""Acceptance suite: one test per release criterion, Physical mode only.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one
``ACCEPTANCE <criterion>: PASS`` line per criterion. Tolerances are fixed
here, not configurable.
"""

import hashlib
import math
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sstats
from scipy.integrate import solve_ivp

from spraysim.config import (
    EchoParams,
    LidarModel,
    RoadSurface,
    SprayIntensityModel,
    SprayParams,
    TireSpec,
    WeatherConfig,
    scenario_from_dict,
)
from spraysim.dataset import generate, read_point_cloud, write_point_cloud, _dump_json
from spraysim.intensity import ReflectanceTable, physical_intensity, atmospheric_eta, solid_angle
from spraysim.lidar import FrameStreams, Hit, Ray, beam_pattern, cast, scan_frame, _sensor_directions
from spraysim.raster import RangeRaster, read_rr, write_rr
from spraysim.scene import CLASS_SPRAY, CLASS_VEHICLE, build_scenario, step, water_film_depth
from spraysim.spray import (
    ClusterSet,
    SpraySim,
    drag_coefficient_per_m,
    integrate,
    volume_rate_side_wave,
    volume_rate_tread_pickup,
)

from conftest import tiny_frame

GRAVITY = 9.81


def _pass(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS")


# ---------------------------------------------------------------------------
# Criterion 1: formula oracles, >= 5 tuples each, rel error <= 1e-9.
# Expected values frozen from an independent 25-digit evaluation.
# ---------------------------------------------------------------------------


class TestFormulaOracles:
    def test_volume_rate_tread_pickup(self):
        cases = [((0.3, 0.25, 0.0035), 25.0, 0.0065625),
                 ((0.5, 0.2, 0.004), 10.0, 0.004),
                 ((0.25, 0.3, 0.003), 27.78, 0.0062505),
                 ((0.4, 0.22, 0.005), 22.22, 0.0097768),
                 ((0.35, 0.28, 0.002), 30.0, 0.00588)]
        for (k, b, hg), v, expected in cases:
            tire = TireSpec(groove_width_fraction=k, contact_width_m=b,
                            groove_depth_m=hg, film_depth_m=0.0)
            assert volume_rate_tread_pickup(tire, v) == pytest.approx(
                expected, rel=1e-9)
        _pass("formula-oracle VR_TP (5 tuples)")

    def test_volume_rate_side_wave(self):
        cases = [((0.3, 0.25, 0.0035, 0.001), 25.0, 0.006, 0.01328125),
                 ((0.5, 0.2, 0.004, 0.002), 10.0, 0.01, 0.007),
                 ((0.25, 0.3, 0.003, 0.0005), 27.78, 0.0349, 0.140740425),
                 ((0.4, 0.22, 0.005, 0.001), 22.22, 0.02, 0.04252908),
                 ((0.35, 0.28, 0.002, 0.0), 30.0, 0.045, 0.18606)]
        for (k, b, hg, hf), v, wd, expected in cases:
            tire = TireSpec(groove_width_fraction=k, contact_width_m=b,
                            groove_depth_m=hg, film_depth_m=hf)
            assert volume_rate_side_wave(tire, v, wd) == pytest.approx(
                expected, rel=1e-9)
        _pass("formula-oracle VR_SD (5 tuples)")

    def test_water_film_depth(self):
        cases = [((0.8, 3.5, 30.0, 0.02), 0.03489820022873911),
                 ((0.8, 3.5, 60.0, 0.02), 0.05289578022809684),
                 ((1.0, 2.0, 45.0, 0.01), 0.04080343788747681),
                 ((0.5, 5.0, 10.0, 0.05), 0.01584092186931711),
                 ((1.2, 4.0, 55.0, 0.015), 0.06203275300659451)]
        for (t, l, i, s), expected in cases:
            road = RoadSurface(texture_depth=t, drainage_length=l, slope=s)
            assert water_film_depth(road, i) == pytest.approx(expected, rel=1e-9)
        assert water_film_depth(RoadSurface(), 0.0) == 0.0
        _pass("formula-oracle WD (5 tuples)")

    def test_solid_angle(self):
        cases = [((0.05, 10.0), 1.963495408493621e-05),
                 ((0.05, 75.0), 3.490658503988659e-07),
                 ((0.05, 5.0), 7.853981633974483e-05),
                 ((0.1, 20.0), 1.963495408493621e-05),
                 ((0.03, 50.0), 2.827433388230814e-07)]
        for args, expected in cases:
            assert solid_angle(*args) == pytest.approx(expected, rel=1e-9)
        _pass("formula-oracle Omega (5 tuples)")

    def test_atmospheric_eta(self):
        cases = [((0.0, 50.0), 1.0),
                 ((0.004, 50.0), 0.6703200460356393),
                 ((0.004, 5.0), 0.9607894391523232),
                 ((0.01, 75.0), 0.22313016014842982),
                 ((0.02, 10.0), 0.6703200460356393)]
        for (alpha, r), expected in cases:
            weather = WeatherConfig(30.0, "light_rain", (0, 0, 0), alpha)
            assert atmospheric_eta(weather, r) == pytest.approx(expected, rel=1e-9)
        _pass("formula-oracle eta_atm (5 tuples)")

    def test_physical_intensity(self):
        cases = [((1.0, 5.0, 0.0), 1.0),
                 ((1.0, 10.0, 0.0), 0.25),
                 ((1.0, 5.0, 0.004), 0.9607894391523232),
                 ((0.35, 20.0, 0.004), 0.018640645383635873),
                 ((0.12, 30.0, 0.01), 0.0018293721203134214)]
        for (rho, r, alpha), expected in cases:
            weather = WeatherConfig(30.0, "light_rain", (0, 0, 0), alpha)
            table = ReflectanceTable(ground=rho, vehicle=rho)
            hit = Hit(r, None, CLASS_VEHICLE, (1.0, 1.0, 1.0), 1, False, 0, 0)
            assert physical_intensity(hit, EchoParams(), table, weather) == \
                pytest.approx(expected, rel=1e-9)
        _pass("formula-oracle physical_intensity (5 tuples)")


# ---------------------------------------------------------------------------
# Criterion 2: ballistic oracle and integrator order.
# ---------------------------------------------------------------------------


def _single_cluster(params, pos, vel):
    cs = ClusterSet(params)
    cs.pos = np.array([pos], dtype=float)
    cs.vel = np.array([vel], dtype=float)
    cs.lat_vel = np.zeros((1, 3))
    cs.age = np.zeros(1)
    cs.offsets = np.zeros((1, params.cluster_size - 1, 3), np.float32)
    cs.source_vehicle = np.zeros(1, np.int32)
    cs.source_side = np.zeros(1, np.int8)
    cs.mechanism = np.zeros(1, np.int8)
    return cs


class TestBallisticOracle:
    CLEAR = WeatherConfig(0.0, "clear", (0.0, 0.0, 0.0), 0.0)

    def test_drag_free_closed_form(self):
        params = SprayParams(drag_cd=0.0, substep_dt_s=0.01)
        cs = _single_cluster(params, [0.0, 0.0, 0.0], [5.0, 0.0, 2.0])
        integrate(cs, self.CLEAR, 0.4, params)
        expected = np.array([5.0 * 0.4, 0.0, 2.0 * 0.4 - 0.5 * GRAVITY * 0.16])
        error = np.linalg.norm(cs.pos[0] - expected)
        assert error <= 1e-4
        _pass(f"ballistic closed form (error {error:.2e} m <= 1e-4)")

    def test_halving_substep_first_order_band(self):
        # The ballistic part is integrated exactly, so the order check runs
        # with drag on, against an independent reference integration.
        wind = np.array([1.0, -0.5, 0.0])
        weather = WeatherConfig(30.0, "light_rain", tuple(wind), 0.019)
        k = drag_coefficient_per_m(SprayParams())

        def rhs(_t, y):
            v = y[3:]
            rel = wind - v
            acc = np.array([0.0, 0.0, -GRAVITY]) + k * np.linalg.norm(rel) * rel
            return np.concatenate([v, acc])

        y0 = np.array([0.0, 0.0, 1.0, 5.0, 2.0, 3.0])
        ref = solve_ivp(rhs, (0.0, 0.4), y0, rtol=1e-12, atol=1e-14,
                        dense_output=True).sol(0.4)[:3]
        errors = []
        for substep in (0.01, 0.005):
            params = SprayParams(substep_dt_s=substep)
            cs = _single_cluster(params, y0[:3].copy(), y0[3:].copy())
            integrate(cs, weather, 0.4, params)
            errors.append(float(np.linalg.norm(cs.pos[0] - ref)))
        ratio = errors[0] / errors[1]
        assert 1.5 <= ratio <= 2.5
        _pass(f"integrator order (halving ratio {ratio:.3f} in [1.5, 2.5])")


# ---------------------------------------------------------------------------
# Criterion 3: annihilation suite over a 500-frame seeded run.
# ---------------------------------------------------------------------------


class TestAnnihilationSuite:
    def test_500_frame_run(self):
        cfg = scenario_from_dict({
            "rng_seed": 2024,
            "weather": {"rain_rate_mm_per_h": 45.0},
            "traffic": {"count_range": [2, 3]},
            "duration_frames": 5,
        })
        scene = build_scenario(cfg)
        sim = SpraySim(scene)
        params = cfg.spray
        for k in range(500):
            step(scene, 0.1)
            scene.frame_index = k
            sim.advance(scene, 0.1)
            cs = sim.clusters
            if len(cs):
                assert np.all(cs.age <= params.max_age_s)
                assert np.all(cs.pos[:, 2] > 0.0)
                dist = np.linalg.norm(cs.pos - scene.lidar_origin(), axis=1)
                assert np.all(dist <= params.max_range_m)
            assert sim.emitted_total == len(cs) + sum(sim.annihilated_total.values())
        assert sim.emitted_total > 100_000
        _pass(f"annihilation suite (500 frames, {sim.emitted_total} emitted, "
              f"conservation exact)")


# ---------------------------------------------------------------------------
# Criterion 4: beam geometry.
# ---------------------------------------------------------------------------


class TestBeamGeometry:
    def test_defaults(self):
        model = LidarModel()
        elev, az = beam_pattern(model)
        assert len(elev) * len(az) == 160_000
        degrees = np.degrees(elev)
        assert degrees.min() == pytest.approx(-17.6, abs=1e-12)
        assert degrees.max() == pytest.approx(2.4, abs=1e-12)

        cfg = scenario_from_dict({
            "weather": {"rain_rate_mm_per_h": 0.0},
            "traffic": {"count_range": [1, 1], "spawn_ahead_range_m": [70.0, 70.0]},
        })
        scene = build_scenario(cfg)
        scene.vehicles[1].x = 1e6
        dirs = _sensor_directions(model)
        ray = Ray(tuple(scene.lidar_origin()), tuple(dirs[0, 0]), 0, 0)
        hit = cast(ray, scene, ClusterSet(cfg.spray), FrameStreams(0, 0))
        oracle = 2.0 / math.sin(math.radians(17.6))
        assert abs(hit.range_m - oracle) <= 1e-6
        _pass(f"beam geometry (160000 rays, span [-17.6, 2.4] deg, "
              f"ground range {hit.range_m:.6f} m)")


# ---------------------------------------------------------------------------
# Criterion 5: spray intensity statistics.
# ---------------------------------------------------------------------------


class TestSprayIntensityStatistics:
    def test_sample_statistics_and_ks(self):
        model = SprayIntensityModel()
        streams = FrameStreams(31, 0)
        z = streams.spray_normal(np.arange(100_000, dtype=np.int64), 0)
        samples = np.clip(model.mean + model.sigma * z, 0.0, 1.0)
        mean = float(samples.mean())
        assert mean == pytest.approx(0.0025, abs=1e-5)
        within = np.count_nonzero((samples >= 0.0017) & (samples <= 0.0033))
        frac = within / samples.size
        assert frac >= 0.95
        ks = sstats.kstest(samples[:10_000], "norm", args=(0.0025, 0.0004))
        assert ks.pvalue > 0.01
        _pass(f"spray intensity stats (mean {mean:.6f}, {frac:.3f} within "
              f"2 sigma, KS p={ks.pvalue:.3f})")


# ---------------------------------------------------------------------------
# Criterion 6: occlusion property on the calibrated two-vehicle scenario.
# ---------------------------------------------------------------------------


def _occlusion_config(rain_rate: float):
    # intercept gain calibrated so the trailing sensor sees a few hundred
    # spray points per frame (within the intended 100..1000 band)
    return scenario_from_dict({
        "rng_seed": 7,
        "weather": {"rain_rate_mm_per_h": rain_rate},
        "ego": {"speed_kmh": 100.0},
        "traffic": {"count_range": [1, 1], "speed_kmh_range": [100.0, 100.0],
                    "lane_offsets_m": [0.0], "spawn_ahead_range_m": [15.0, 15.0]},
        "lidar": {"intercept_gain_kappa": 5.0},
        "spray": {"emission_scale": 4e-4},
        "duration_frames": 5,
    })


class TestOcclusionProperty:
    def _run(self, rain_rate):
        cfg = _occlusion_config(rain_rate)
        scene = build_scenario(cfg)
        sim = SpraySim(scene)
        leader_counts, spray_counts = [], []
        for k in range(30):
            step(scene, 0.1)
            scene.frame_index = k
            sim.advance(scene, 0.1)
            if k >= 15:
                frame = scan_frame(scene, sim.clusters, cfg.lidar)
                leader = int(np.count_nonzero(
                    (frame.grid_class == CLASS_VEHICLE)
                    & (frame.grid_target == 1) & ~frame.grid_dropped))
                leader_counts.append(leader)
                spray_counts.append(int(np.count_nonzero(
                    frame.point_class == CLASS_SPRAY)))
        return np.array(leader_counts), np.array(spray_counts)

    def test_spray_floor_and_leader_occlusion(self):
        wet_leader, wet_spray = self._run(60.0)
        dry_leader, dry_spray = self._run(0.0)
        assert np.all(dry_spray == 0)
        assert np.all(wet_spray >= 100)
        assert np.all(wet_leader <= dry_leader)
        assert wet_leader.sum() < dry_leader.sum()
        _pass(f"occlusion (spray/frame min {wet_spray.min()}, leader points "
              f"wet {wet_leader.sum()} < dry {dry_leader.sum()})")


# ---------------------------------------------------------------------------
# Criteria 7 and 8: determinism and performance of a 100-frame scenario.
# ---------------------------------------------------------------------------


def _production_config():
    return scenario_from_dict({
        "rng_seed": 2024,
        "weather": {"rain_rate_mm_per_h": [30.0, 60.0]},
        "traffic": {"count_range": [1, 6]},
        "duration_frames": 100,
    })


def _hash_tree(root: Path) -> dict:
    hashes = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            hashes[str(p.relative_to(root))] = hashlib.sha256(
                p.read_bytes()).hexdigest()
    return hashes


@pytest.fixture(scope="module")
def hundred_frame_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("accept100")
    cfg = _production_config()
    start = time.perf_counter()
    generate(cfg, base / "a")
    duration = time.perf_counter() - start
    hashes_a = _hash_tree(base / "a")
    shutil.rmtree(base / "a")
    generate(cfg, base / "b")
    hashes_b = _hash_tree(base / "b")
    shutil.rmtree(base / "b")
    return hashes_a, hashes_b, duration


class TestDeterminism:
    def test_byte_identical_trees(self, hundred_frame_runs):
        hashes_a, hashes_b, duration = hundred_frame_runs
        assert len(hashes_a) == 100 * 5 + 1  # bin, cls, labels, 2 rasters, manifest
        assert hashes_a == hashes_b
        assert duration < 120.0
        _pass(f"determinism (100 frames twice, {len(hashes_a)} files "
              f"byte-identical, {duration:.1f} s/run)")


class TestPerformance:
    def test_single_frame_under_one_second(self):
        # a busy wet highway: ego + 5 vehicles, clusters near the 20k budget
        cfg = scenario_from_dict({
            "rng_seed": 3,
            "weather": {"rain_rate_mm_per_h": 60.0},
            "traffic": {"count_range": [5, 5]},
            "spray": {"emission_scale": 1.8e-4,
                      "max_clusters_per_wheel_per_frame": 350},
            "duration_frames": 5,
        })
        scene = build_scenario(cfg)
        sim = SpraySim(scene)
        for k in range(25):
            step(scene, 0.1)
            scene.frame_index = k
            sim.advance(scene, 0.1)
        n_clusters = len(sim.clusters)
        assert n_clusters <= 20_000
        start = time.perf_counter()
        frame = scan_frame(scene, sim.clusters, cfg.lidar)
        elapsed = time.perf_counter() - start
        assert frame.model.rays_per_frame == 160_000
        assert elapsed < 1.0
        _pass(f"performance single frame (160k rays, {n_clusters} clusters, "
              f"{elapsed * 1000:.0f} ms < 1 s)")

    def test_hundred_frames_under_90s(self, hundred_frame_runs):
        _, _, duration = hundred_frame_runs
        assert duration < 90.0
        _pass(f"performance 100-frame scenario ({duration:.1f} s < 90 s)")


# ---------------------------------------------------------------------------
# Criterion 9: format golden files and lossless round trips.
# ---------------------------------------------------------------------------

RR_GOLDEN = (
    b'{\x00\x00\x00{"channels":["depth","drop_mask"],"dtype":"f32le",'
    b'"format_version":1,"frame_index":7,"height":2,"sector":"front","width":3}'
    b'\x00\x00\x00\x00\x00\x00\xc0?\x00\x00\x10@\x00\x00@@\x00\x00\x00\x00'
    b'\x00\x00\x96B\x00\x00\x80?\x00\x00\x00\x00\x00\x00\x80?\x00\x00\x00\x00'
    b'\x00\x00\x80?\x00\x00\x00\x00'
)
BIN_GOLDEN = (b"\x00\x00\x80?\x00\x00\x00@\x00\x00\x00\xbf\x00\x00\x00?"
              b"\x00\x00`@\x00\x00\xa0\xbf\x00\x00@?\x00\x00\x00>")
CLS_GOLDEN = b"\x01\x02"
LABELS_GOLDEN = (
    b'{"boxes":[{"center":[10.0,0.0,0.8],"id":1,"size":[4.7,1.9,1.6],'
    b'"speed":27.5,"yaw":0.0}],"ego_pose":[0.0,0.0,0.0,0.0],"frame_index":0,'
    b'"rain_rate_mm_per_h":55.5,"spray":{"alive":2,"annihilated_age":0,'
    b'"annihilated_collision":1,"annihilated_range":0,"emitted":3},'
    b'"timestamp":0.0,"weather_class":"heavy_rain"}\n')


class TestFormatGoldenFiles:
    def test_all_three_formats_pinned_and_round_trip(self, tmp_path):
        data = np.array([[[0.0, 1.5, 2.25], [3.0, 0.0, 75.0]],
                         [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]], dtype=np.float32)
        raster = RangeRaster.create(data, ["depth", "drop_mask"],
                                    frame_index=7, sector="front")
        write_rr(tmp_path / "g.rr", raster)
        assert (tmp_path / "g.rr").read_bytes() == RR_GOLDEN
        back = read_rr(tmp_path / "g.rr")
        assert np.array_equal(back.data, data)
        assert back.header == raster.header

        frame = tiny_frame()
        write_point_cloud(frame, tmp_path / "g.bin")
        assert (tmp_path / "g.bin").read_bytes() == BIN_GOLDEN
        assert (tmp_path / "g.cls").read_bytes() == CLS_GOLDEN
        points, classes = read_point_cloud(tmp_path / "g.bin")
        assert np.array_equal(points, frame.points.astype(np.float32))
        assert np.array_equal(classes, frame.point_class)

        labels = {"frame_index": 0, "timestamp": 0.0,
                  "ego_pose": [0.0, 0.0, 0.0, 0.0],
                  "boxes": [{"id": 1, "center": [10.0, 0.0, 0.8],
                             "size": [4.7, 1.9, 1.6], "yaw": 0.0,
                             "speed": 27.5}],
                  "weather_class": "heavy_rain", "rain_rate_mm_per_h": 55.5,
                  "spray": {"emitted": 3, "alive": 2, "annihilated_collision": 1,
                            "annihilated_range": 0, "annihilated_age": 0}}
        _dump_json(labels, tmp_path / "g.json")
        assert (tmp_path / "g.json").read_bytes() == LABELS_GOLDEN
        _pass("format golden files (rr, bin+cls, labels; round trips lossless)")
