"""RangeRaster container: round trips, validation, pinned byte layout."""

import numpy as np
import pytest

from spraysim.raster import RangeRaster, RasterFormatError, read_rr, write_rr

# Byte-pinned golden file: 2 channels of 2x3 float32, header first.
RR_GOLDEN = (
    b'{\x00\x00\x00{"channels":["depth","drop_mask"],"dtype":"f32le",'
    b'"format_version":1,"frame_index":7,"height":2,"sector":"front","width":3}'
    b'\x00\x00\x00\x00\x00\x00\xc0?\x00\x00\x10@\x00\x00@@\x00\x00\x00\x00'
    b'\x00\x00\x96B\x00\x00\x80?\x00\x00\x00\x00\x00\x00\x80?\x00\x00\x00\x00'
    b'\x00\x00\x80?\x00\x00\x00\x00'
)


def _golden_raster():
    data = np.array([[[0.0, 1.5, 2.25], [3.0, 0.0, 75.0]],
                     [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]], dtype=np.float32)
    return RangeRaster.create(data, ["depth", "drop_mask"], frame_index=7,
                              sector="front")


class TestFormat:
    def test_golden_bytes(self, tmp_path):
        path = tmp_path / "g.rr"
        write_rr(path, _golden_raster())
        assert path.read_bytes() == RR_GOLDEN

    def test_round_trip_bit_exact(self, tmp_path):
        raster = _golden_raster()
        path = tmp_path / "r.rr"
        write_rr(path, raster)
        back = read_rr(path)
        assert back.header == raster.header
        assert back.data.dtype == np.float32
        assert np.array_equal(back.data, raster.data)

    def test_payload_length_is_4chw(self, tmp_path):
        raster = _golden_raster()
        path = tmp_path / "r.rr"
        write_rr(path, raster)
        raw = path.read_bytes()
        header_len = int.from_bytes(raw[:4], "little")
        payload = raw[4 + header_len:]
        c, h, w = raster.data.shape
        assert len(payload) == 4 * c * h * w

    def test_random_payload_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        data = rng.standard_normal((4, 16, 9)).astype(np.float32)
        raster = RangeRaster.create(data, ["a", "b", "c", "d"],
                                    frame_index=0, sector="rear")
        path = tmp_path / "r.rr"
        write_rr(path, raster)
        assert np.array_equal(read_rr(path).data, data)


class TestValidation:
    def test_channel_name_count_must_match(self):
        with pytest.raises(RasterFormatError):
            RangeRaster.create(np.zeros((2, 2, 2), np.float32), ["only_one"],
                               frame_index=0, sector="front")

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "r.rr"
        write_rr(path, _golden_raster())
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(RasterFormatError, match="payload"):
            read_rr(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "r.rr"
        path.write_bytes(b"\x05\x00\x00\x00notjs")
        with pytest.raises(RasterFormatError):
            read_rr(path)

    def test_channel_lookup_by_name(self):
        raster = _golden_raster()
        assert np.array_equal(raster.channel("drop_mask"),
                              raster.data[1])
        with pytest.raises(KeyError, match="available"):
            raster.channel("missing")
