import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lidarclust.engine import cluster_frame
from lidarclust.formats import (FormatError, format_labels, format_report,
                                format_sensor_config, frame_from_bytes, frame_from_csv,
                                frame_to_bytes, frame_to_csv, parse_labels, parse_report,
                                parse_sensor_config, read_frame, write_frame)
from lidarclust.sensor import hdl64_like, uniform_sensor
from scenes_util import random_frame


def test_sensor_roundtrip():
    cfg = hdl64_like(ground_z=-1.5)
    assert parse_sensor_config(format_sensor_config(cfg)) == cfg


def test_sensor_comments_and_errors():
    text = format_sensor_config(uniform_sensor(2, 8, -0.1, 0.1)) + "# trailing comment\n"
    assert parse_sensor_config(text).laser_count == 2
    with pytest.raises(FormatError, match="unknown"):
        parse_sensor_config(text + "colour=red\n")
    with pytest.raises(FormatError, match="duplicate"):
        parse_sensor_config(text + "lasers=2\n")
    with pytest.raises(FormatError, match="missing"):
        parse_sensor_config("lasers=2\n")
    with pytest.raises(FormatError):
        parse_sensor_config(text.replace("lasers=2", "lasers=3"))
    with pytest.raises(FormatError, match="key=value"):
        parse_sensor_config("lasers 2\n")


def test_binary_frame_roundtrip():
    ranges = np.array([[0.0, 1.5], [2.25, 0.0], [3.0, 4.5]])
    data = frame_to_bytes(ranges)
    assert data[:4] == b"LSC1" and len(data) == 12 + 4 * 6
    assert np.array_equal(frame_from_bytes(data), ranges)
    with pytest.raises(FormatError):
        frame_from_bytes(data[:-1])
    with pytest.raises(FormatError):
        frame_from_bytes(b"XXXX" + data[4:])


@settings(max_examples=50)
@given(st.lists(st.lists(st.floats(0, 1e4, allow_nan=False), min_size=3, max_size=3),
                min_size=1, max_size=5))
def test_csv_frame_roundtrip_is_exact(rows):
    ranges = np.array(rows)
    assert np.array_equal(frame_from_csv(frame_to_csv(ranges)), ranges)


def test_csv_errors():
    with pytest.raises(FormatError):
        frame_from_csv("")
    with pytest.raises(FormatError):
        frame_from_csv("1,2\n3\n")
    with pytest.raises(FormatError):
        frame_from_csv("1,x\n")


def test_read_frame_detects_format(tmp_path):
    frame = random_frame(np.random.default_rng(0), 40, uniform_sensor(4, 20, -0.1, 0.1))
    write_frame(tmp_path / "a.lsc", frame)
    write_frame(tmp_path / "a.csv", frame)
    assert (tmp_path / "a.lsc").read_bytes()[:4] == b"LSC1"
    assert read_frame(tmp_path / "a.csv", frame.config) == frame
    back = read_frame(tmp_path / "a.lsc", frame.config)
    assert np.array_equal(back.ranges, frame.ranges.astype(np.float32))
    with pytest.raises(FormatError):
        read_frame(tmp_path / "a.csv", uniform_sensor(5, 20, -0.1, 0.1))


def test_labels_roundtrip():
    frame = random_frame(np.random.default_rng(3), 500)
    result = cluster_frame(frame, 0.4, 3)
    L = frame.config.laser_count
    text = format_labels(result, L)
    assert text.startswith("laser,step,label\n")
    assert text.count("\n") == 1 + frame.n_points
    back = parse_labels(text, L)
    assert [c.tolist() for c in back.clusters] == [c.tolist() for c in result.clusters]
    assert back.noise.tolist() == result.noise.tolist()


def test_label_errors():
    with pytest.raises(FormatError):
        parse_labels("l,s,label\n", 4)
    with pytest.raises(FormatError):
        parse_labels("laser,step,label\n0,0,1\n", 4)
    with pytest.raises(FormatError):
        parse_labels("laser,step,label\n0,0,-3\n", 4)


def test_report_line():
    line = format_report({"algo": "lisco", "epsilon": 0.4, "points": 12, "millis": 1.23456789})
    assert line == "algo=lisco epsilon=0.4 points=12 millis=1.23457"
    assert parse_report(line) == {"algo": "lisco", "epsilon": 0.4, "points": 12,
                                  "millis": 1.23457}
