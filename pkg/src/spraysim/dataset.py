"""Dataset assembly: point clouds, labels, rasters, manifest, generation loop.

Directory layout:

    out_dir/
      manifest.json
      frames/NNNNNN.bin    N x 4 float32 LE (x, y, z, intensity)
      frames/NNNNNN.cls    N uint8 semantic class ids
      labels/NNNNNN.json   ego pose, boxes, weather, spray statistics
      rasters/NNNNNN.front.rr / NNNNNN.rear.rr

Everything is deterministic from (config, seed): rerunning a scenario
produces a byte-identical tree.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, scenario_to_dict
from .intensity import assign_intensities
from .lidar import LidarFrame, project_range_raster, scan_frame
from .raster import write_rr
from .scene import CLASS_NAMES, Scene, build_scenario, step
from .spray import SpraySim

FORMAT_VERSION = 1


class SentinelIntensityError(ValueError):
    """Refusal to persist a frame whose intensities were never assigned."""


def write_point_cloud(frame: LidarFrame, path: str | Path) -> None:
    """Write the 4-feature cloud (.bin) and its class-id sidecar (.cls)."""
    if not frame.intensities_assigned():
        raise SentinelIntensityError(
            f"frame {frame.frame_index} has unassigned intensities")
    path = Path(path)
    points = frame.points.astype("<f4")
    path.write_bytes(points.tobytes())
    path.with_suffix(".cls").write_bytes(
        np.ascontiguousarray(frame.point_class, dtype=np.uint8).tobytes())


def read_point_cloud(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a (.bin, .cls) pair; returns (N x 4 float32, N uint8)."""
    path = Path(path)
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size % 4 != 0:
        raise ValueError(f"{path}: byte length is not a multiple of 16")
    points = raw.reshape(-1, 4)
    classes = np.frombuffer(path.with_suffix(".cls").read_bytes(), dtype=np.uint8)
    if classes.size != points.shape[0]:
        raise ValueError(f"{path}: class sidecar has {classes.size} entries "
                         f"for {points.shape[0]} points")
    return points, classes


def _dump_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n",
                    encoding="utf-8")


def frame_labels(scene: Scene, frame: LidarFrame, spray_stats: dict) -> dict:
    ego = scene.ego
    boxes = []
    for v in scene.vehicles[1:]:
        boxes.append({
            "id": v.vehicle_id,
            "center": [v.x, v.y, v.box_size[2] / 2],
            "size": list(v.box_size),
            "yaw": v.yaw,
            "speed": v.speed,
        })
    return {
        "frame_index": frame.frame_index,
        "timestamp": frame.timestamp,
        "ego_pose": list(ego.pose),
        "boxes": boxes,
        "weather_class": scene.weather.weather_class,
        "rain_rate_mm_per_h": scene.weather.rain_rate_mm_per_h,
        "spray": spray_stats,
    }


@dataclass
class DatasetManifest:
    path: Path
    doc: dict

    @property
    def frame_count(self) -> int:
        return self.doc["frame_count"]


def _frame_entry(index: int) -> dict:
    stem = f"{index:06d}"
    return {
        "index": index,
        "point_cloud": f"frames/{stem}.bin",
        "classes": f"frames/{stem}.cls",
        "labels": f"labels/{stem}.json",
        "rasters": {"front": f"rasters/{stem}.front.rr",
                    "rear": f"rasters/{stem}.rear.rr"},
    }


def generate(config: ScenarioConfig, out_dir: str | Path,
             progress: bool = False) -> DatasetManifest:
    """Run the full scenario and write every frame product plus the manifest."""
    out = Path(out_dir)
    for sub in ("frames", "labels", "rasters"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    scene = build_scenario(config)
    spray_sim = SpraySim(scene)
    dt = 1.0 / config.frame_rate_hz
    frames = []
    wall_start = time.perf_counter()
    try:
        for k in range(config.duration_frames):
            step(scene, dt)
            scene.frame_index = k
            scene.time_s = k / config.frame_rate_hz
            spray_stats = spray_sim.advance(scene, dt)
            frame = scan_frame(scene, spray_sim.clusters, config.lidar)
            assign_intensities(frame, config.intensity, scene.weather, scene=scene)

            entry = _frame_entry(k)
            write_point_cloud(frame, out / entry["point_cloud"])
            _dump_json(frame_labels(scene, frame, spray_stats),
                       out / entry["labels"])
            half = config.raster_width
            for sector in ("front", "rear"):
                raster = project_range_raster(frame, half, sector,
                                              include_intensity=True)
                write_rr(out / entry["rasters"][sector], raster)
            frames.append(entry)
            if progress and (k + 1) % 10 == 0:
                rate = (k + 1) / (time.perf_counter() - wall_start)
                print(f"  frame {k + 1}/{config.duration_frames} "
                      f"({rate:.1f} fps, {len(spray_sim.clusters)} clusters)",
                      file=sys.stderr)
    except OSError:
        doc = _manifest_doc(config, frames, partial=True)
        _dump_json(doc, out / "manifest.json")
        raise

    doc = _manifest_doc(config, frames, partial=False)
    _dump_json(doc, out / "manifest.json")
    return DatasetManifest(out / "manifest.json", doc)


def _manifest_doc(config: ScenarioConfig, frames: list, partial: bool) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "generator": f"spraysim {__version__}",
        "rng_seed": config.rng_seed,
        "frame_count": len(frames),
        "config": scenario_to_dict(config),
        "frames": frames,
    }
    if partial:
        doc["partial"] = True
    return doc


def load_manifest(dataset_dir: str | Path) -> DatasetManifest:
    path = Path(dataset_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest at {path}")
    return DatasetManifest(path, json.loads(path.read_text(encoding="utf-8")))


def stats(dataset_dir: str | Path) -> dict:
    """Summarize a generated dataset; corrupt files are reported, not fatal."""
    dataset_dir = Path(dataset_dir)
    manifest = load_manifest(dataset_dir)
    per_class_count = {name: 0 for name in CLASS_NAMES.values() if name != "none"}
    intensity_values: dict[str, list[np.ndarray]] = {k: [] for k in per_class_count}
    frames_per_weather: dict[str, int] = {}
    corrupt: list[str] = []
    total_points = 0

    for entry in manifest.doc["frames"]:
        try:
            points, classes = read_point_cloud(dataset_dir / entry["point_cloud"])
            labels = json.loads((dataset_dir / entry["labels"]).read_text())
        except (OSError, ValueError, json.JSONDecodeError) as err:
            corrupt.append(f"{entry['point_cloud']}: {err}")
            continue
        total_points += points.shape[0]
        for cid, name in CLASS_NAMES.items():
            if cid == 0:
                continue
            mask = classes == cid
            per_class_count[name] += int(mask.sum())
            if mask.any():
                intensity_values[name].append(points[mask, 3])
        wclass = labels["weather_class"]
        frames_per_weather[wclass] = frames_per_weather.get(wclass, 0) + 1

    histograms = {}
    for name, chunks in intensity_values.items():
        if not chunks:
            histograms[name] = None
            continue
        values = np.concatenate(chunks)
        counts, edges = np.histogram(values, bins=50)
        mode_bin = int(np.argmax(counts))
        histograms[name] = {
            "count": int(values.size),
            "mean": float(values.mean()),
            "bin_edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
            "mode_bin_center": float((edges[mode_bin] + edges[mode_bin + 1]) / 2),
        }

    spray_count = per_class_count.get("spray", 0)
    return {
        "frame_count": manifest.frame_count,
        "total_points": total_points,
        "per_class_points": per_class_count,
        "spray_fraction": spray_count / total_points if total_points else 0.0,
        "intensity": histograms,
        "frames_per_weather_class": frames_per_weather,
        "corrupt_files": corrupt,
    }
