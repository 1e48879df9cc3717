"""Static figure export: top-down scatter plots and raster channel previews."""

from __future__ import annotations

import json
from pathlib import Path

from .dataset import load_manifest, read_point_cloud
from .raster import read_rr
from .scene import CLASS_GROUND, CLASS_SPRAY, CLASS_VEHICLE

_CLASS_STYLE = {
    CLASS_GROUND: ("#9a9a9a", 0.4, "ground"),
    CLASS_VEHICLE: ("#d95f02", 2.0, "vehicle"),
    CLASS_SPRAY: ("#1f77b4", 2.0, "spray"),
}


def render_frame(dataset_dir: str | Path, frame_index: int, out_dir: str | Path,
                 rasters: bool = False) -> list[Path]:
    """Render one frame to PNG files; returns the written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle
    from matplotlib.transforms import Affine2D

    dataset_dir = Path(dataset_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(dataset_dir)
    try:
        entry = manifest.doc["frames"][frame_index]
    except IndexError:
        raise ValueError(f"frame {frame_index} not in dataset "
                         f"({manifest.frame_count} frames)") from None

    points, classes = read_point_cloud(dataset_dir / entry["point_cloud"])
    labels = json.loads((dataset_dir / entry["labels"]).read_text())
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(10, 7))
    ego_x, ego_y = labels["ego_pose"][0], labels["ego_pose"][1]
    for cid, (color, size, name) in _CLASS_STYLE.items():
        mask = classes == cid
        if mask.any():
            ax.scatter(points[mask, 0], points[mask, 1], s=size, c=color,
                       label=f"{name} ({mask.sum()})", linewidths=0)
    for box in labels["boxes"]:
        cx, cy = box["center"][0], box["center"][1]
        length, width = box["size"][0], box["size"][1]
        rect = Rectangle((cx - length / 2, cy - width / 2), length, width,
                         fill=False, edgecolor="black", linewidth=1.2)
        rect.set_transform(Affine2D().rotate_around(cx, cy, box["yaw"])
                           + ax.transData)
        ax.add_patch(rect)
    ax.plot(ego_x, ego_y, marker="^", color="black", markersize=9)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"frame {frame_index}  "
                 f"{labels['weather_class']}  "
                 f"{labels['rain_rate_mm_per_h']:.1f} mm/h")
    ax.legend(loc="upper right", markerscale=3)
    top_path = out_dir / f"{frame_index:06d}.topdown.png"
    fig.savefig(top_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(top_path)

    if rasters:
        for sector in ("front", "rear"):
            raster = read_rr(dataset_dir / entry["rasters"][sector])
            show = [n for n in ("depth", "intensity", "semantic_id", "drop_mask")
                    if n in raster.channel_names]
            fig, axes = plt.subplots(len(show), 1,
                                     figsize=(10, 1.6 * len(show)), squeeze=False)
            for ax_r, name in zip(axes[:, 0], show):
                img = raster.channel(name)
                ax_r.imshow(img, aspect="auto", interpolation="nearest")
                ax_r.set_ylabel(name, fontsize=7)
                ax_r.set_xticks([])
                ax_r.set_yticks([])
            fig.suptitle(f"frame {frame_index} {sector}")
            raster_path = out_dir / f"{frame_index:06d}.{sector}.rasters.png"
            fig.savefig(raster_path, dpi=120, bbox_inches="tight")
            plt.close(fig)
            written.append(raster_path)
    return written
