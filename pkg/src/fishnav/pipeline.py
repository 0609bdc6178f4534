"""Per-frame orchestration and sequence runs with reports."""
from __future__ import annotations

import dataclasses
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .calibration import load_transform
from .cameras import OmniCameraModel, PinholeModel, depth_to_points, equidistant_omni_model, \
    load_intrinsics
from .doors import DoorDetection, DoorParams, detect_doors
from .errors import ConfigError, FishnavError, InvalidInputError, StageError
from .floor_detection import FloorModel, FloorParams, PointCloud, detect_floor, horizon_predicate
from .floor_expansion import ExpansionParams, FloorMask, grow_floor, HSHistogram, region_histograms, \
    reproject_floor_seed
from .geometry import RigidTransform
from .navigation import BAND_EDGES, FreeSpaceMap, SectorGrid, build_sector_grid, emit_commands, \
    format_commands, mark_frontier, remove_overhangs, reproject_free_space
from .superpixels import superpixel_segment

log = logging.getLogger(__name__)

STAGES = ("input", "floor_detection", "reprojection", "floor_expansion", "door_detection", "navigation")


@dataclass(frozen=True)
class NavigationParams:
    cell: float = 0.05
    max_range: float = 30.0
    clearance: float = 2.0
    overhang_radius: float = 0.1
    min_height: float = 0.03
    band_edges: tuple = BAND_EDGES
    frontier: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    output_dir: str = "out"
    workers: int = 1
    fisheye_intrinsics: str | None = None  # None: take the model from the scene or the default
    depth_intrinsics: str | None = None
    extrinsic: str | None = None
    floor: FloorParams = FloorParams()
    expansion: ExpansionParams = ExpansionParams()
    doors: DoorParams = DoorParams()
    navigation: NavigationParams = NavigationParams()
    overlays: bool = True

    def __post_init__(self):
        validate_config(self)

    def stream_seed(self, name: str) -> int:
        """Independent seed for the named random stream (``ransac``, ``superpixels``)."""
        ss = np.random.SeedSequence([self.seed, zlib.crc32(name.encode())])
        return int(ss.generate_state(1, dtype=np.uint32)[0])

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["navigation"]["band_edges"] = [None if np.isinf(e) else e for e in self.navigation.band_edges]
        return d

    @classmethod
    def from_dict(cls, data: dict, base_dir=None, **overrides) -> "PipelineConfig":
        data = dict(data)
        data.update({k: v for k, v in overrides.items() if v is not None})
        sections = {"floor": FloorParams, "expansion": ExpansionParams, "doors": DoorParams,
                    "navigation": NavigationParams}
        top = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - top
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kw = {}
        for key, value in data.items():
            if key in sections:
                if not isinstance(value, dict):
                    raise ConfigError(f"section '{key}' must be an object")
                names = {f.name for f in dataclasses.fields(sections[key])}
                bad = set(value) - names
                if bad:
                    raise ConfigError(f"unknown key(s) in section '{key}': {', '.join(sorted(bad))}")
                conv = {}
                for k, v in value.items():
                    if isinstance(v, list):
                        v = tuple(np.inf if x is None else x for x in v)
                    conv[k] = v
                try:
                    kw[key] = sections[key](**conv)
                except TypeError as e:
                    raise ConfigError(f"section '{key}': {e}") from None
            elif key in ("fisheye_intrinsics", "depth_intrinsics", "extrinsic") and value is not None:
                p = Path(value)
                if base_dir is not None and not p.is_absolute():
                    p = Path(base_dir) / p
                kw[key] = str(p)
            else:
                kw[key] = value
        return cls(**kw)

    @classmethod
    def load(cls, path, **overrides) -> "PipelineConfig":
        try:
            data = io.read_json(path)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except ValueError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data, Path(path).parent, **overrides)


def _check(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _is_num(x):
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def validate_config(c: PipelineConfig):
    """Raise ConfigError naming the first offending field."""
    _check(isinstance(c.seed, (int, np.integer)) and not isinstance(c.seed, bool)
           and 0 <= c.seed < 2 ** 64, f"seed must be an integer in [0, 2^64), got {c.seed!r}")
    _check(isinstance(c.workers, int) and c.workers >= 1, f"workers must be >= 1, got {c.workers!r}")
    for key in ("fisheye_intrinsics", "depth_intrinsics", "extrinsic"):
        p = getattr(c, key)
        _check(p is None or Path(p).is_file(), f"{key}: file not found: {p}")
    f = c.floor
    _check(_is_num(f.voxel) and 0 < f.voxel <= 0.5, f"floor.voxel must be in (0, 0.5] m, got {f.voxel!r}")
    _check(_is_num(f.dist_thresh) and 0 < f.dist_thresh <= 0.2,
           f"floor.dist_thresh must be in (0, 0.2] m, got {f.dist_thresh!r}")
    _check(isinstance(f.iterations, int) and 1 <= f.iterations <= 100000,
           f"floor.iterations must be an integer in [1, 100000], got {f.iterations!r}")
    _check(f.height_range is None or (len(f.height_range) == 2 and 0 <= f.height_range[0] < f.height_range[1]),
           f"floor.height_range must be [lo, hi] with 0 <= lo < hi, got {f.height_range!r}")
    e = c.expansion
    _check(isinstance(e.target_regions, int) and 10 <= e.target_regions <= 100000,
           f"expansion.target_regions must be in [10, 100000], got {e.target_regions!r}")
    _check(_is_num(e.compactness) and e.compactness > 0, "expansion.compactness must be > 0")
    _check(isinstance(e.slic_iterations, int) and e.slic_iterations >= 1, "expansion.slic_iterations must be >= 1")
    for k in ("h_bins", "s_bins"):
        v = getattr(e, k)
        _check(isinstance(v, int) and 1 <= v <= 256, f"expansion.{k} must be in [1, 256], got {v!r}")
    _check(_is_num(e.sim_thresh) and 0 <= e.sim_thresh <= 1,
           f"expansion.sim_thresh must be in [0, 1], got {e.sim_thresh!r}")
    _check(isinstance(e.min_hits, int) and e.min_hits >= 1, "expansion.min_hits must be >= 1")
    for k in ("min_floor_fraction", "min_coverage"):
        v = getattr(e, k)
        _check(_is_num(v) and 0 <= v <= 1, f"expansion.{k} must be in [0, 1], got {v!r}")
    d = c.doors
    _check(len(d.width_range) == 2 and 0 < d.width_range[0] < d.width_range[1],
           f"doors.width_range must be [lo, hi] with 0 < lo < hi, got {d.width_range!r}")
    _check(_is_num(d.door_height) and d.door_height > 0, "doors.door_height must be > 0")
    _check(_is_num(d.cr_tol) and 0 < d.cr_tol < 1, f"doors.cr_tol must be in (0, 1), got {d.cr_tol!r}")
    _check(_is_num(d.max_floor_gap) and d.max_floor_gap >= 0, "doors.max_floor_gap must be >= 0")
    _check(len(d.aspect_range) == 2 and 0 < d.aspect_range[0] < d.aspect_range[1],
           f"doors.aspect_range must be [lo, hi] with 0 < lo < hi, got {d.aspect_range!r}")
    _check(_is_num(d.sim_thresh) and 0 <= d.sim_thresh <= 1, "doors.sim_thresh must be in [0, 1]")
    n = c.navigation
    _check(_is_num(n.cell) and 0 < n.cell <= 1, f"navigation.cell must be in (0, 1] m, got {n.cell!r}")
    _check(_is_num(n.max_range) and n.max_range > 0, "navigation.max_range must be > 0")
    _check(_is_num(n.clearance) and n.clearance > n.min_height, "navigation.clearance must exceed min_height")
    edges = np.asarray(n.band_edges, dtype=float)
    _check(edges.ndim == 1 and len(edges) >= 1 and np.all(np.diff(edges) > 0) and edges[0] > 0,
           f"navigation.band_edges must be positive and strictly increasing, got {list(n.band_edges)}")


# ---------------------------------------------------------------- inputs

@dataclass
class Rig:
    fisheye: OmniCameraModel
    depth: PinholeModel
    extrinsic: RigidTransform  # depth -> fisheye


def resolve_rig(config: PipelineConfig, scene=None) -> Rig:
    """Camera models and extrinsic: config files first, then the scene, then defaults."""
    from .synthetic.scene import default_depth, default_extrinsic

    fish = load_intrinsics(config.fisheye_intrinsics) if config.fisheye_intrinsics else None
    depth = load_intrinsics(config.depth_intrinsics) if config.depth_intrinsics else None
    T = load_transform(config.extrinsic) if config.extrinsic else None
    if scene is not None:
        fish = fish or scene.rig.fisheye
        depth = depth or scene.rig.depth
        T = T or scene.rig.extrinsic
    if fish is not None and not isinstance(fish, OmniCameraModel):
        raise ConfigError("fisheye_intrinsics does not describe an omnidirectional model")
    if depth is not None and not isinstance(depth, PinholeModel):
        raise ConfigError("depth_intrinsics does not describe a pinhole model")
    return Rig(fish or equidistant_omni_model(), depth or default_depth(), T or default_extrinsic())


@dataclass
class FrameInput:
    frame_id: str
    depth: np.ndarray  # metres
    fisheye: np.ndarray  # RGB uint8
    scene: object = None  # SceneSpec when ground truth is available
    truth: object = None  # RenderedFrame


@dataclass
class FrameResult:
    frame_id: str
    floor: FloorModel
    plane_f: object
    floor_mask: FloorMask
    doors: DoorDetection
    free_space: FreeSpaceMap
    grid: SectorGrid
    commands: list
    timings: dict = field(default_factory=dict)  # ms per stage and "total"
    metrics: dict = field(default_factory=dict)

    def to_dict(self):
        """Everything except timings, rounded so the JSON is stable and readable."""
        return _rounded({
            "frame_id": self.frame_id,
            "floor": {
                "plane_depth": self.floor.plane.coefficients().tolist(),
                "plane_fisheye": self.plane_f.coefficients().tolist(),
                "camera_height": self.plane_f.offset,
                "depth_inliers": int(self.floor.inlier_mask.sum()),
                "mask_pixels": int(self.floor_mask.mask.sum()),
                "seed_regions": len(self.floor_mask.seed_regions),
                "regions": len(self.floor_mask.regions),
            },
            "doors": {
                "lines": len(self.doors.lines),
                "hypotheses": [h.to_dict() for h in self.doors.hypotheses],
                "verified": len(self.doors.verified),
            },
            "navigation": {
                "free_area": self.free_space.area(),
                "grid": self.grid.to_dict(),
                "commands": [c.text for c in self.commands],
            },
            "metrics": {k: v for k, v in self.metrics.items() if k != "door_seconds"},
        })


def _rounded(x, nd=6):
    if isinstance(x, float):
        return None if not np.isfinite(x) else round(x, nd)
    if isinstance(x, (np.floating,)):
        return _rounded(float(x), nd)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _rounded(v, nd) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_rounded(v, nd) for v in x]
    return x


class _Timer:
    def __init__(self, timings, stage):
        self.timings, self.stage = timings, stage

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.stage] = 1000.0 * (time.perf_counter() - self.t0)
        if exc is not None and not isinstance(exc, (StageError, ConfigError)):
            raise StageError(self.stage, exc) from exc
        return False


def run_frame(config: PipelineConfig, frame: FrameInput, rig: Rig | None = None) -> FrameResult:
    """Floor detection, reprojection, floor expansion, door detection and
    navigation on one frame. Failures are raised as StageError."""
    t_start = time.perf_counter()
    timings = {}
    with _Timer(timings, "input"):
        rig = rig or resolve_rig(config, frame.scene)
        depth = np.asarray(frame.depth, dtype=float)
        image = np.asarray(frame.fisheye)
        if depth.shape != (rig.depth.height, rig.depth.width):
            raise ConfigError(f"depth input is {depth.shape[1]}x{depth.shape[0]}, "
                              f"depth camera is {rig.depth.width}x{rig.depth.height}")
        if image.shape[:2] != (rig.fisheye.height, rig.fisheye.width) or image.ndim != 3:
            raise ConfigError(f"fisheye input is {image.shape[1]}x{image.shape[0]}, "
                              f"fisheye camera is {rig.fisheye.width}x{rig.fisheye.height}")

    with _Timer(timings, "floor_detection"):
        pts, pix = depth_to_points(rig.depth, depth)
        cloud = PointCloud(pts, pixel_index=pix)
        floor = detect_floor(cloud, config.floor, seed=config.stream_seed("ransac"))

    with _Timer(timings, "reprojection"):
        T = rig.extrinsic
        plane_f = floor.plane.transformed(T)
        horizon = horizon_predicate(plane_f)
        floor_pts = cloud.points[floor.inlier_mask]

    ep = config.expansion
    with _Timer(timings, "floor_expansion"):
        spx = superpixel_segment(image, ep.target_regions, config.stream_seed("superpixels"),
                                 ep.compactness, ep.slic_iterations)
        bins = (ep.h_bins, ep.s_bins)
        hists = region_histograms(image, spx, bins)
        seeds = reproject_floor_seed(floor_pts, T, rig.fisheye, spx, ep.min_hits, cloud.points,
                                     ep.min_floor_fraction, ep.min_coverage)
        refs = [HSHistogram(hists[s].reshape(bins[0] + 1, bins[1])) for s in seeds]
        mask = grow_floor(spx, seeds, refs, horizon, rig.fisheye, ep.sim_thresh, region_hists=hists)

    with _Timer(timings, "door_detection"):
        doors = detect_doors(image, spx, hists, mask, plane_f, rig.fisheye, config.doors)

    npar = config.navigation
    with _Timer(timings, "navigation"):
        fs = reproject_free_space(mask, rig.fisheye, plane_f, cell=npar.cell, max_range=npar.max_range)
        if npar.frontier:
            fs = mark_frontier(fs, npar.max_range)
        fs = remove_overhangs(fs, T.apply(cloud.points), plane_f, npar.clearance, npar.overhang_radius,
                              npar.min_height)
        grid = build_sector_grid(fs, npar.band_edges)
        commands = emit_commands(grid)

    timings["total"] = 1000.0 * (time.perf_counter() - t_start)
    result = FrameResult(frame.frame_id, floor, plane_f, mask, doors, fs, grid, commands, timings)
    if frame.truth is not None:
        t_eval = time.perf_counter()
        result.metrics = evaluate_frame(result, frame.truth, cloud, rig)
        # scoring against ground truth is not part of the frame's processing time
        timings["evaluation"] = 1000.0 * (time.perf_counter() - t_eval)
    return result


def evaluate_frame(result: FrameResult, truth, cloud: PointCloud, rig: Rig) -> dict:
    from .synthetic.metrics import evaluate_doors_by_kind, evaluate_floor

    depth_mask = np.zeros(rig.depth.height * rig.depth.width, dtype=bool)
    depth_mask[cloud.pixel_index[result.floor.inlier_mask]] = True
    fm = evaluate_floor(result.floor_mask, truth, depth_mask=depth_mask.reshape(rig.depth.height, -1))
    out = {"floor": fm.to_dict()}
    if truth.gt_door_regions.max() > 0:
        by_kind = evaluate_doors_by_kind(result.doors, truth)
        out["doors"] = {k: m.to_dict() for k, m in by_kind.items()}
        out["door_seconds"] = {k: m.timings["seconds"] for k, m in by_kind.items()}
    return out


# ---------------------------------------------------------------- sequences

def load_manifest(path):
    """``{"frames": [...]}`` or a bare list; each entry has an ``id`` and either
    a ``scene`` JSON (rendered on the fly) or ``depth`` + ``fisheye`` PNGs
    (optionally with a ``scene`` for ground truth). Paths are relative to
    the manifest."""
    try:
        data = io.read_json(path)
    except FileNotFoundError:
        raise InvalidInputError(f"manifest not found: {path}") from None
    entries = data.get("frames", []) if isinstance(data, dict) else data
    if not isinstance(entries, list) or not entries:
        raise InvalidInputError(f"manifest {path} lists no frames")
    base = Path(path).parent
    out = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict):
            raise InvalidInputError(f"manifest entry {i} is not an object")
        e = dict(e)
        for k in ("scene", "depth", "fisheye"):
            if k in e and not Path(e[k]).is_absolute():
                e[k] = str(base / e[k])
        e.setdefault("id", Path(e.get("scene") or e.get("fisheye") or f"frame_{i}").stem)
        out.append(e)
    ids = [e["id"] for e in out]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("manifest frame ids are not unique")
    return out


def load_frame(entry) -> FrameInput:
    from .synthetic.render import render_scene
    from .synthetic.scene import load_scene

    scene = load_scene(entry["scene"]) if entry.get("scene") else None
    truth = render_scene(scene) if scene is not None else None
    if "depth" in entry or "fisheye" in entry:
        depth = io.read_depth_png(entry["depth"])
        rgb = io.read_rgb_png(entry["fisheye"])
    elif truth is not None:
        depth, rgb = truth.depth, truth.fisheye
    else:
        raise InvalidInputError(f"frame {entry['id']}: needs 'scene' or 'depth' and 'fisheye'")
    return FrameInput(str(entry["id"]), depth, rgb, scene, truth)


def _process(config: PipelineConfig, entry, out_dir):
    """Run one manifest entry; returns (frame_id, record, timings, error)."""
    fid = str(entry["id"])
    try:
        try:
            frame = load_frame(entry)
        except Exception as e:
            raise StageError("input", e) from e
        res = run_frame(config, frame)
        if res.metrics and frame.scene is not None:
            res.metrics["group"] = frame.scene.group
        if out_dir is not None:
            save_frame_outputs(res, frame, Path(out_dir) / "frames" / fid, config.overlays)
        tm = {"stages_ms": res.timings}
        if "door_seconds" in res.metrics:
            tm["door_seconds"] = res.metrics["door_seconds"]
        return fid, res.to_dict(), tm, None
    except StageError as e:
        log.warning("frame %s failed: %s", fid, e)
        return fid, None, {}, {"stage": e.stage, "error": f"{type(e.cause).__name__}: {e.cause}"}
    except ConfigError as e:
        log.warning("frame %s rejected: %s", fid, e)
        return fid, None, {}, {"stage": "input", "error": f"ConfigError: {e}"}


def save_frame_outputs(res: FrameResult, frame: FrameInput, d: Path, overlays=True):
    from .report import door_overlay, floor_overlay, grid_image

    d.mkdir(parents=True, exist_ok=True)
    io.write_mask_png(d / "floor_mask.png", res.floor_mask.mask)
    io.write_gray_png(d / "floor_provenance.png", res.floor_mask.provenance_image())
    if overlays:
        io.write_rgb_png(d / "floor_overlay.png", floor_overlay(frame.fisheye, res.floor_mask))
        io.write_rgb_png(d / "door_overlay.png", door_overlay(frame.fisheye, res.doors))
        io.write_rgb_png(d / "sector_grid.png", grid_image(res.free_space, res.grid))


@dataclass
class SequenceReport:
    frames: list  # records in frame-id order
    failures: list
    aggregate: dict
    timings: dict
    tables: dict

    @property
    def status(self) -> int:
        """0 all frames succeeded, 1 some failed."""
        return 1 if self.failures else 0

    def to_dict(self):
        return {"frames": self.frames, "failures": self.failures, "aggregate": self.aggregate}


def aggregate(records):
    """Mean P/R/AR over labelled frames; per-kind Hd/Dd Σ over frames with doors."""
    from .report import sigma

    floor = [r["metrics"]["floor"] for r in records if r.get("metrics", {}).get("floor")]
    out = {"frames": len(records)}
    if floor:
        out["floor"] = {k: float(np.mean([f[k] for f in floor])) for k in ("precision", "recall", "ar")}
        out["floor"]["labelled_frames"] = len(floor)
    doors = [r["metrics"]["doors"] for r in records if r.get("metrics", {}).get("doors")]
    if doors:
        out["doors"] = {}
        for kind in ("two_line", "one_line", "all"):
            out["doors"][kind] = {
                "hd": sigma(d[kind]["hd"] for d in doors),
                "dd": sigma(d[kind]["dd"] for d in doors),
                "n_doors": int(sum(d[kind]["n_doors"] for d in doors)),
                "covered": int(sum(d[kind]["covered"] for d in doors)),
                "detected": int(sum(d[kind]["detected"] for d in doors)),
                "false_positives": int(sum(d[kind]["false_positives"] for d in doors)),
            }
    return _rounded(out)


def build_tables(records, timings):
    from .report import format_door_table, format_floor_table

    tables = {}
    floor = [(r["frame_id"], r["metrics"].get("group", "frames"), r["metrics"]["floor"])
             for r in records if r.get("metrics", {}).get("floor")]
    if floor:
        tables["floor"] = format_floor_table(floor)
    doors = []
    for r in records:
        m = r.get("metrics", {}).get("doors")
        if m:
            secs = timings.get(r["frame_id"], {}).get("door_seconds", {})
            doors.append((r["frame_id"], {k: {"hd": m[k]["hd"], "dd": m[k]["dd"], "seconds": secs.get(k)}
                                          for k in ("two_line", "one_line")}))
    if doors:
        tables["doors"] = format_door_table(doors)
    return tables


def run_sequence(config: PipelineConfig, manifest, out_dir=None) -> SequenceReport:
    """Process every manifest entry, continuing past failed frames.

    ``manifest`` is a path or a list of entries. Raises FishnavError when
    every frame fails. With ``out_dir`` the report, tables, per-frame masks
    and overlays are written there; timings go to a separate file so the
    report itself is reproducible byte for byte.
    """
    entries = load_manifest(manifest) if isinstance(manifest, (str, Path)) else list(manifest)
    if not entries:
        raise InvalidInputError("manifest lists no frames")
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    if config.workers > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            results = list(ex.map(_process, [config] * len(entries), entries, [out_dir] * len(entries)))
    else:
        results = [_process(config, e, out_dir) for e in entries]
    results.sort(key=lambda r: r[0])

    records, failures, timings = [], [], {}
    for fid, rec, tm, err in results:
        if err is not None:
            failures.append({"frame_id": fid, **err})
            continue
        timings[fid] = tm
        records.append(rec)
    if not records:
        raise FishnavError(f"all {len(entries)} frames failed; first: {failures[0]}")
    agg = aggregate(records)
    tables = build_tables(records, timings)
    report = SequenceReport(records, failures, agg, _rounded(timings, 3), tables)
    if out_dir is not None:
        write_sequence_outputs(report, Path(out_dir))
    return report


def write_sequence_outputs(report: SequenceReport, out: Path):
    io.write_json(out / "report.json", report.to_dict())
    io.write_json(out / "timings.json", report.timings)
    lines = [format_commands(r["frame_id"], r["navigation"]["commands"]) for r in report.frames]
    (out / "commands.txt").write_text("\n".join(lines) + "\n")
    for name, text in report.tables.items():
        (out / f"{name}_table.txt").write_text(text)


