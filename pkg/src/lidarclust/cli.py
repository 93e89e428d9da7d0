"""Command-line entry point.

Exit codes: 0 success, 1 unreadable input or refused run, 2 usage error,
3 partitions differ (``compare``).
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import bench
from .baseline import BruteForceRefused
from .formats import (FormatError, format_labels, format_report, read_frame,
                      read_sensor_config, write_frame, write_sensor_config)
from .result import first_difference
from .scene import generate, read_scene
from .sensor import RotationFrame, hdl64_like

EXIT_OK, EXIT_INPUT, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3
SENSOR_SUFFIX = ".sensor"


class InputError(Exception):
    pass


def _ground(value: str):
    if value.lower() == "none":
        return "none"
    return float(value)


def _epsilons(value: str):
    try:
        eps = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {value!r}") from None
    if not eps or any(e <= 0 for e in eps):
        raise argparse.ArgumentTypeError("epsilons must be positive")
    return eps


def _positive_float(value: str) -> float:
    v = float(value)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return v


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return v


def load_frame(path, sensor_path=None, ground_z=None) -> RotationFrame:
    """Read a frame and its sensor (``--sensor``, else ``<frame>.sensor``, else the default)."""
    path = Path(path)
    try:
        if sensor_path is None and path.with_name(path.name + SENSOR_SUFFIX).exists():
            sensor_path = path.with_name(path.name + SENSOR_SUFFIX)
        config = read_sensor_config(sensor_path) if sensor_path else hdl64_like()
        if ground_z == "none":
            config = config.with_ground(None)
        elif ground_z is not None:
            config = config.with_ground(ground_z)
        return read_frame(path, config)
    except (OSError, FormatError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def load_bench_input(path, sensor_path=None, ground_z=None) -> RotationFrame:
    """A frame file, or a scene file that is generated on the fly."""
    try:
        return load_frame(path, sensor_path, ground_z)
    except InputError as frame_exc:
        try:
            spec = read_scene(path)
        except (OSError, FormatError, ValueError):
            raise frame_exc from None
        frame = generate(spec)
        if ground_z == "none":
            frame = RotationFrame(frame.config.with_ground(None), frame.ranges)
        elif ground_z is not None:
            frame = RotationFrame(frame.config.with_ground(ground_z), frame.ranges)
        return frame


def cmd_gen(args) -> int:
    try:
        spec = read_scene(args.spec, args.seed)
    except (OSError, FormatError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    frame = generate(spec)
    out = Path(args.out)
    write_frame(out, frame)
    sensor_out = args.sensor_out or out.with_name(out.name + SENSOR_SUFFIX)
    write_sensor_config(sensor_out, spec.sensor)
    print(format_report({"lasers": frame.config.laser_count, "steps": frame.config.step_count,
                         "returns": frame.n_points}))
    return EXIT_OK


def _report(algo, args, result, secs):
    s = result.stats
    return {"algo": algo, "epsilon": args.epsilon, "min_pts": args.min_pts,
            "points": result.n_points, "clusters": result.n_clusters, "noise": result.n_noise,
            "millis": round(secs * 1e3, 3), "comparisons": s.get("comparisons", 0),
            "merges": s.get("merges", 0), "head_rewrites": s.get("head_rewrites", 0)}


def cmd_cluster(args) -> int:
    frame = load_frame(args.frame, args.sensor, args.ground_z)
    bench.warm_up()
    result, secs = bench.run(args.algo, frame, args.epsilon, args.min_pts)
    if args.out:
        Path(args.out).write_text(format_labels(result, frame.config.laser_count))
    print(format_report(_report(args.algo, args, result, secs)))
    print(f"{args.algo}: {result.n_points} points, {result.n_clusters} clusters, "
          f"{result.n_noise} noise in {secs * 1e3:.1f} ms", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    frame = load_frame(args.frame, args.sensor, args.ground_z)
    results = {algo: bench.run(algo, frame, args.epsilon, args.min_pts)[0]
               for algo in ("brute", "baseline", "lisco")}
    reference = results["brute"]
    for algo in ("baseline", "lisco"):
        diff = first_difference(reference, results[algo])
        if diff is not None:
            where, want, got = diff
            print(f"MISMATCH {algo} vs brute at cluster {where}: brute={_short(want)} "
                  f"{algo}={_short(got)}")
            return EXIT_MISMATCH
    print(f"MATCH clusters={reference.n_clusters} noise={reference.n_noise} "
          f"points={reference.n_points}")
    return EXIT_OK


def _short(ids, limit=12):
    if ids is None:
        return "none"
    ids = list(ids)
    text = ",".join(str(i) for i in ids[:limit])
    return f"[{text}{',...' if len(ids) > limit else ''}] ({len(ids)})"


def cmd_bench(args) -> int:
    frames = [load_bench_input(p, args.sensor, args.ground_z) for p in args.inputs]
    rows = bench.bench_rows(frames, args.epsilons, args.min_pts, args.repeats)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=bench.CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lidarclust",
        description="Streaming Euclidean clustering of rotating-LiDAR frames.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="ray-cast a scene file into a frame")
    p.add_argument("spec", help="scene file")
    p.add_argument("out", help="frame file (.lsc for binary, else CSV)")
    p.add_argument("--sensor-out", help="sensor config path (default: <out>.sensor)")
    p.add_argument("--seed", type=int, help="override the scene seed")
    p.set_defaults(func=cmd_gen)

    def common(p):
        p.add_argument("--epsilon", type=_positive_float, default=0.4,
                       help="neighbor distance in meters (default 0.4)")
        p.add_argument("--min-pts", type=_positive_int, default=10,
                       help="smallest cluster size (default 10)")
        p.add_argument("--ground-z", type=_ground,
                       help="drop readings below this height; 'none' disables the sensor's cut")
        p.add_argument("--sensor", help="sensor config (default: <frame>.sensor or HDL-64-like)")

    p = sub.add_parser("cluster", help="cluster one frame")
    p.add_argument("frame")
    p.add_argument("--algo", choices=bench.ALGORITHMS, default="lisco")
    p.add_argument("--out", help="label file to write")
    common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("compare", help="check all clusterers agree on a frame")
    p.add_argument("frame")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time lisco against the batch baseline")
    p.add_argument("inputs", nargs="+", help="frame or scene files")
    p.add_argument("--epsilons", type=_epsilons, default=[0.4], help="comma separated list")
    p.add_argument("--repeats", type=_positive_int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BruteForceRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
