"""RangeRaster container: the exchange format between simulator and predictor.

One ``.rr`` file is a 4-byte little-endian header length, a UTF-8 JSON
header, and a planar row-major float32 little-endian payload of shape
(channels, height, width). The header names every channel in payload
order, so consumers address planes by name, never by position.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
DTYPE_NAME = "f32le"
_HEADER_LEN = struct.Struct("<I")


class RasterFormatError(ValueError):
    pass


@dataclass
class RangeRaster:
    header: dict
    data: np.ndarray  # (C, H, W) float32

    @classmethod
    def create(cls, data: np.ndarray, channel_names: list[str], *,
               frame_index: int, sector: str) -> "RangeRaster":
        data = np.ascontiguousarray(data, dtype=np.float32)
        if data.ndim != 3:
            raise RasterFormatError(f"expected (C, H, W) data, got {data.shape}")
        if data.shape[0] != len(channel_names):
            raise RasterFormatError(
                f"{len(channel_names)} channel names for {data.shape[0]} planes")
        header = {
            "format_version": FORMAT_VERSION,
            "height": int(data.shape[1]),
            "width": int(data.shape[2]),
            "channels": list(channel_names),
            "dtype": DTYPE_NAME,
            "frame_index": int(frame_index),
            "sector": sector,
        }
        return cls(header, data)

    @property
    def channel_names(self) -> list[str]:
        return self.header["channels"]

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.data[self.channel_names.index(name)]
        except ValueError:
            raise KeyError(f"raster has no channel {name!r}; "
                           f"available: {self.channel_names}") from None

    def validate(self) -> None:
        h = self.header
        for key in ("height", "width", "channels", "dtype", "frame_index", "sector"):
            if key not in h:
                raise RasterFormatError(f"header missing {key!r}")
        if h["dtype"] != DTYPE_NAME:
            raise RasterFormatError(f"unsupported dtype {h['dtype']!r}")
        expected = (len(h["channels"]), h["height"], h["width"])
        if tuple(self.data.shape) != expected:
            raise RasterFormatError(
                f"payload shape {self.data.shape} does not match header {expected}")


def write_rr(path: str | Path, raster: RangeRaster) -> None:
    raster.validate()
    header_bytes = json.dumps(raster.header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(raster.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER_LEN.pack(len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def read_rr(path: str | Path) -> RangeRaster:
    with open(path, "rb") as fh:
        raw_len = fh.read(4)
        if len(raw_len) != 4:
            raise RasterFormatError(f"{path}: truncated header length")
        (header_len,) = _HEADER_LEN.unpack(raw_len)
        header_bytes = fh.read(header_len)
        if len(header_bytes) != header_len:
            raise RasterFormatError(f"{path}: truncated header")
        try:
            header = json.loads(header_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise RasterFormatError(f"{path}: bad header JSON: {err}") from err
        payload = fh.read()

    shape = (len(header.get("channels", ())), header.get("height", 0),
             header.get("width", 0))
    expected_bytes = 4 * shape[0] * shape[1] * shape[2]
    if len(payload) != expected_bytes:
        raise RasterFormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected_bytes}")
    data = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    raster = RangeRaster(header, data)
    raster.validate()
    return raster
